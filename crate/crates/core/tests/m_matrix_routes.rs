//! The three nonsingular M-matrix tests agree on random Z-matrices away from
//! the undecidable band, and all report `Undecided` inside it.

use lvpatch_core::{decide_nonsingular_m, spectral_bound, Decision, MTest, SquareMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type M = SquareMatrix<f64>;

/// Arbitrary diagonal, nonpositive off-diagonal entries (about 30% zero).
fn random_z(rng: &mut impl Rng, n: usize) -> M {
    M::from_fn(n, |i, j| {
        if i == j {
            rng.gen_range(-2.0..2.0)
        } else if rng.gen_bool(0.3) {
            0.0
        } else {
            -rng.gen_range(0.0..2.0)
        }
    })
}

fn routes(a: &M) -> [Decision; 3] {
    [MTest::Minors, MTest::Cone, MTest::Spectral].map(|t| decide_nonsingular_m(a, t))
}

#[test]
fn routes_agree_outside_band() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (mut yes, mut no) = (0, 0);
    for case in 0..1000 {
        let n = 2 + case % 5;
        let a = random_z(&mut rng, n);
        let s = spectral_bound(&a.neg()).unwrap();
        // place s(-A) uniformly in [-1, 1], away from the band
        let mut target: f64 = rng.gen_range(-1.0..1.0);
        if target.abs() < 1e-6 {
            target = 1e-6_f64.copysign(target);
        }
        let a = a.shifted(s - target);
        let d = routes(&a);
        assert!(d.iter().all(|&x| x == d[0]), "case {case}: {d:?} for s(-A) = {target}\n{:?}", a.rows());
        assert_ne!(d[0], Decision::Undecided);
        let expect = if target < 0.0 { Decision::Yes } else { Decision::No };
        assert_eq!(d[0], expect, "case {case}");
        if d[0] == Decision::Yes {
            yes += 1;
            let inv = a.inverse().expect("nonsingular M-matrix is invertible");
            let scale = inv.max_abs();
            for row in inv.rows() {
                assert!(row.iter().all(|&v| v >= -1e-12 * scale), "case {case}: inverse {:?}", inv.rows());
            }
        } else {
            no += 1;
        }
    }
    assert!(yes > 300 && no > 300, "{yes} yes, {no} no");
}

#[test]
fn band_cases_are_undecided_everywhere() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..500 {
        let n = 2 + case % 5;
        let a = random_z(&mut rng, n);
        let s = spectral_bound(&a.neg()).unwrap();
        let target = rng.gen_range(-5e-9..5e-9);
        let a = a.shifted(s - target);
        assert_eq!(routes(&a), [Decision::Undecided; 3], "case {case}: s(-A) = {target}");
    }
}

#[test]
fn non_z_matrices_are_rejected() {
    let a = M::from_f64_rows(&[&[2.0, 0.5], &[-1.0, 2.0]]);
    assert_eq!(routes(&a), [Decision::No; 3]);
}
