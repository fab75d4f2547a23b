mod common;

use common::{random_system, M};
use lvpatch_core::characteristic::delta_matrix;
use lvpatch_core::classifier::check_invariants;
use lvpatch_core::{classify, dominant_real_char_root, spectral_bound, CharRoot, DelayKernel};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cooperative_matrix(n: usize) -> impl Strategy<Value = M> {
    (prop::collection::vec(-3.0..3.0f64, n), prop::collection::vec(0.0..2.0f64, n * n))
        .prop_map(move |(diag, off)| M::from_fn(n, |i, j| if i == j { diag[i] } else { off[i * n + j] }))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn majorant_is_cooperative_and_idempotent(seed in any::<u64>(), n in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = random_system(&mut rng, n, -1.0, 1.0);
        let maj = sys.cooperative_majorant();
        prop_assert!(maj.is_cooperative());
        prop_assert_eq!(maj.cooperative_majorant(), maj.clone());
        let (dm, dmaj) = (sys.derived_matrices(), maj.derived_matrices());
        prop_assert_eq!(&dm.m0, &dmaj.m0);
        prop_assert_eq!(&dm.n0, &dmaj.n0);
        prop_assert_eq!(&dmaj.nhat, &dm.n0);
        if sys.is_cooperative() {
            prop_assert_eq!(maj, sys);
        }
    }

    #[test]
    fn spectral_bound_brackets_and_monotone(m in (2usize..6).prop_flat_map(cooperative_matrix), bump in 0.0..1.0f64, k in 0usize..36) {
        let n = m.dim();
        let s = spectral_bound(&m).unwrap();
        let diag = m.diagonal();
        let max_diag = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let max_row = m.rows().iter().map(|r| r.iter().sum::<f64>()).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(s >= max_diag - 1e-9 && s <= max_row + 1e-9, "{} not in [{}, {}]", s, max_diag, max_row);
        let mut bigger = m.clone();
        let (i, j) = ((k / n) % n, k % n);
        bigger[(i, j)] += bump;
        prop_assert!(spectral_bound(&bigger).unwrap() >= s - 1e-9);
    }

    #[test]
    fn char_root_lies_below_s0(seed in any::<u64>(), n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = random_system(&mut rng, n, -1.0, 1.0);
        match dominant_real_char_root(&sys) {
            CharRoot::Unstable { lambda_star, s0, .. } => {
                prop_assert!(lambda_star > 0.0 && lambda_star <= s0 + 1e-9);
                prop_assert!(delta_matrix(&sys, lambda_star).spectral_bound_of_delta.abs() < 1e-8);
            }
            CharRoot::Stable { s0 } => prop_assert!(s0 < -1e-8),
            CharRoot::Boundary { s0 } => prop_assert!(s0.abs() <= 1e-8),
        }
    }

    #[test]
    fn classification_is_self_consistent(seed in any::<u64>(), n in 1usize..4, competitive in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sys = if competitive { random_system(&mut rng, n, -0.3, 1.0) } else { random_system(&mut rng, n, -0.6, 0.0) };
        let report = classify(&sys);
        prop_assert!(report.invariant_violations.is_empty(), "{:?}", report.invariant_violations);
        prop_assert!(check_invariants(&sys, &report).is_empty());
        prop_assert_eq!(report.fingerprint, sys.fingerprint());
        prop_assert_eq!(report.verdicts.len(), 19);
    }

    #[test]
    fn kernel_mass_is_one(rate in 0.1..5.0f64, shape in 1u32..6, width in 0.1..4.0f64, t in 0.0..10.0f64) {
        for k in [DelayKernel::exponential(rate), DelayKernel::erlang(shape, rate), DelayKernel::uniform(width)] {
            prop_assert!((k.cdf(t) + k.tail(t) - 1.0).abs() < 1e-12);
            prop_assert!(k.mass_between(0.0, t) >= -1e-15);
            prop_assert!(k.density(t) >= 0.0);
        }
    }
}

#[test]
fn fingerprint_tracks_coefficients() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sys = random_system(&mut rng, 3, -1.0, 1.0);
    assert_eq!(sys.fingerprint(), sys.clone().fingerprint());
    let mut beta = sys.beta().to_vec();
    beta[0] += 1e-9;
    assert_ne!(sys.fingerprint(), sys.with_beta(beta).unwrap().fingerprint());
}
