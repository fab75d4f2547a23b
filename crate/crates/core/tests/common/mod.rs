#![allow(dead_code)]

use lvpatch_core::model::{uniform_kernel_grid, CanonicalForm};
use lvpatch_core::{classify_z_matrix, DelayKernel, LVPatchSystem, SquareMatrix, ZMatrixClass};
use rand::Rng;

pub type M = SquareMatrix<f64>;

/// Random system with `n` patches. Interaction coefficients are drawn from
/// `[lo, hi]`, dispersal delays from `[0.5, 2]`, kernels are exponential.
pub fn random_system(rng: &mut impl Rng, n: usize, a_lo: f64, a_hi: f64) -> LVPatchSystem<f64> {
    let beta = (0..n).map(|_| rng.gen_range(-1.0..1.5)).collect();
    let mu = (0..n).map(|_| rng.gen_range(0.5..2.0)).collect();
    let a = M::from_fn(n, |_, _| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(a_lo..a_hi) });
    let d = M::from_fn(n, |i, j| if i == j || rng.gen_bool(0.25) { 0.0 } else { rng.gen_range(0.0..0.8) });
    let tau = M::from_fn(n, |i, j| if i == j { 0.0 } else { rng.gen_range(0.5..2.0) });
    let rate = rng.gen_range(0.5..3.0);
    LVPatchSystem::new(CanonicalForm { beta, mu, a, d, tau, kernels: uniform_kernel_grid(n, DelayKernel::exponential(rate)) }).unwrap()
}

/// Like [`random_system`], redrawn until `N0` is a nonsingular M-matrix so
/// every solution stays bounded.
pub fn random_bounded_system(rng: &mut impl Rng, n: usize, a_lo: f64, a_hi: f64) -> LVPatchSystem<f64> {
    loop {
        let sys = random_system(rng, n, a_lo, a_hi);
        if classify_z_matrix(&sys.derived_matrices().n0) == ZMatrixClass::NonsingularM {
            return sys;
        }
    }
}
