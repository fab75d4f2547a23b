//! Characteristic matrix of the linearization at the trivial equilibrium
//! and its dominant real root.

use serde::Serialize;

use crate::matrix::SquareMatrix;
use crate::matrix_analysis::spectral_bound;
use crate::model::LVPatchSystem;
use crate::scalar::{BandSign, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CharMatrixEval<S> {
    pub lambda: S,
    pub delta: SquareMatrix<S>,
    pub spectral_bound_of_delta: S,
}

/// Outcome of the dominant real root search.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum CharRoot<S> {
    /// `s(M(0)) > gate`: the root `lambda_star > 0` with `s(Delta(lambda_star)) = 0`.
    Unstable { lambda_star: S, s_at_root: S, s0: S },
    /// `s(M(0)) < -gate`: no nonnegative real root.
    Stable { s0: S },
    /// `|s(M(0))| <= gate`.
    Boundary { s0: S },
}

impl<S: Scalar> CharRoot<S> {
    pub fn lambda_star(&self) -> Option<S> {
        match *self {
            CharRoot::Unstable { lambda_star, .. } => Some(lambda_star),
            _ => None,
        }
    }

    pub fn s0(&self) -> S {
        match *self {
            CharRoot::Unstable { s0, .. } | CharRoot::Stable { s0 } | CharRoot::Boundary { s0 } => s0,
        }
    }
}

/// `M(lambda)`: diagonal `beta_i`, off-diagonal `d_ij exp(-lambda tau_ij)`.
fn m_of_lambda<S: Scalar>(sys: &LVPatchSystem<S>, lambda: S) -> SquareMatrix<S> {
    SquareMatrix::from_fn(sys.n(), |i, j| {
        if i == j {
            sys.beta()[i]
        } else {
            let dij = sys.d()[(i, j)];
            if dij == S::zero() {
                S::zero()
            } else {
                dij * (-lambda * sys.tau()[(i, j)]).exp()
            }
        }
    })
}

/// `Delta(lambda) = M(lambda) - lambda I`
pub fn delta_matrix<S: Scalar>(sys: &LVPatchSystem<S>, lambda: S) -> CharMatrixEval<S> {
    let delta = m_of_lambda(sys, lambda).shifted(-lambda);
    let spectral_bound_of_delta = spectral_bound(&delta).expect("Delta(lambda) is cooperative");
    CharMatrixEval { lambda, delta, spectral_bound_of_delta }
}

/// Locates `lambda_star > 0` with `s(Delta(lambda_star)) = 0` when the
/// community matrix has positive spectral bound.
///
/// `lambda -> s(Delta(lambda))` is strictly decreasing (the `-lambda I` term
/// alone has slope -1 and the off-diagonal entries are nonincreasing), so
/// `lambda > lambda_star` exactly when `-Delta(lambda)` is a nonsingular
/// M-matrix. The bisection runs on that test directly.
pub fn dominant_real_char_root<S: Scalar>(sys: &LVPatchSystem<S>) -> CharRoot<S> {
    let tol = S::tolerances();
    let m0 = m_of_lambda(sys, S::zero());
    let s0 = spectral_bound(&m0).expect("community matrix is cooperative");
    match BandSign::of(s0, tol.gate) {
        BandSign::Negative => return CharRoot::Stable { s0 },
        BandSign::Boundary => return CharRoot::Boundary { s0 },
        BandSign::Positive => {}
    }
    let past_root = |lambda: S| m_of_lambda(sys, lambda).shifted(-lambda).neg().leading_minors_positive();
    let mut lo = S::zero();
    let mut hi = s0.max(S::one());
    while !past_root(hi) {
        lo = hi;
        hi *= S::lit(2.0);
    }
    for _ in 0..400 {
        let mid = lo + (hi - lo) / S::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if past_root(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let lambda_star = lo + (hi - lo) / S::lit(2.0);
    let s_at_root = delta_matrix(sys, lambda_star).spectral_bound_of_delta;
    CharRoot::Unstable { lambda_star, s_at_root, s0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{uniform_kernel_grid, CanonicalForm, DelayKernel};

    type M = SquareMatrix<f64>;

    fn two_patch(beta: [f64; 2], d: f64, tau: f64) -> LVPatchSystem<f64> {
        LVPatchSystem::new(CanonicalForm {
            beta: beta.to_vec(),
            mu: vec![1.0, 1.0],
            a: M::zeros(2),
            d: M::from_f64_rows(&[&[0.0, d], &[d, 0.0]]),
            tau: M::from_f64_rows(&[&[0.0, tau], &[tau, 0.0]]),
            kernels: uniform_kernel_grid(2, DelayKernel::exponential(1.0)),
        })
        .unwrap()
    }

    #[test]
    fn delta_at_zero_is_community_matrix() {
        let sys = two_patch([-2.0, -2.0], 1.0, 0.7);
        assert_eq!(delta_matrix(&sys, 0.0).delta, sys.derived_matrices().m0);
        let sys0 = two_patch([0.3, -1.0], 1.0, 0.0);
        assert_eq!(delta_matrix(&sys0, 0.8).delta, sys0.derived_matrices().m0.shifted(-0.8));
    }

    #[test]
    fn delta_entries_with_unit_delays() {
        let mut f = two_patch([-2.0, -2.0], 1.0, 1.0).to_canonical();
        f.d[(1, 0)] = 3.5;
        let sys = LVPatchSystem::new(f).unwrap();
        let e = delta_matrix(&sys, 1.0);
        let em1 = (-1.0f64).exp();
        assert!((e.delta[(0, 1)] - em1).abs() < 1e-16);
        assert!((e.delta[(1, 0)] - 3.5 * em1).abs() < 1e-15);
        assert_eq!(e.delta.diagonal(), vec![-3.0, -3.0]);
    }

    #[test]
    fn decoupled_root() {
        let r = dominant_real_char_root(&two_patch([1.0, 1.0], 0.0, 3.0));
        assert!((r.lambda_star().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn undelayed_root() {
        let r = dominant_real_char_root(&two_patch([0.0, 0.0], 1.0, 0.0));
        assert!((r.lambda_star().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn omega_constant_root() {
        // lambda = exp(-lambda); reference from an independent scalar bisection
        let r = dominant_real_char_root(&two_patch([0.0, 0.0], 1.0, 1.0));
        let l = r.lambda_star().unwrap();
        assert!((l - 0.567143290409784).abs() < 1e-12, "{l}");
        if let CharRoot::Unstable { s_at_root, .. } = r {
            assert!(s_at_root.abs() <= 1e-10);
        }
    }

    #[test]
    fn stable_and_boundary() {
        assert!(matches!(dominant_real_char_root(&two_patch([-2.0, -2.0], 1.0, 1.0)), CharRoot::Stable { .. }));
        assert!(matches!(dominant_real_char_root(&two_patch([-1.0, -1.0], 1.0, 1.0)), CharRoot::Boundary { .. }));
    }
}
