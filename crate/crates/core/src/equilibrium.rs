//! Equilibria of the associated ODE, which the delay system shares because
//! every kernel has unit mass.

use serde::Serialize;
use thiserror::Error;

use crate::matrix::SquareMatrix;
use crate::model::{neg_part, LVPatchSystem};
use crate::scalar::{max_abs, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquilibriumError {
    #[error("system is not cooperative")]
    NotCooperative,
    #[error("vector has length {found}, expected {expected}")]
    Dimension { expected: usize, found: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Positivity {
    Zero,
    Boundary,
    Interior,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquilibriumPoint<S> {
    pub x: Vec<S>,
    pub residual_norm: S,
    pub positivity: Positivity,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquilibriumSet<S> {
    /// Sorted lexicographically; always contains the origin.
    pub points: Vec<EquilibriumPoint<S>>,
    /// Starts whose Newton iteration hit a singular Jacobian or did not
    /// converge.
    pub failed_starts: usize,
}

impl<S: Scalar> EquilibriumSet<S> {
    pub fn interior(&self) -> impl Iterator<Item = &EquilibriumPoint<S>> {
        self.points.iter().filter(|p| p.positivity == Positivity::Interior)
    }

    pub fn boundary(&self) -> impl Iterator<Item = &EquilibriumPoint<S>> {
        self.points.iter().filter(|p| p.positivity == Positivity::Boundary)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumOptions<S> {
    /// Extra quasi-random starts in the search box.
    pub starts: usize,
    /// Upper corner of the search box; derived from the coefficients when
    /// absent.
    pub box_hi: Option<Vec<S>>,
}

impl<S> Default for EquilibriumOptions<S> {
    fn default() -> Self {
        Self { starts: 64, box_hi: None }
    }
}

/// `G(x)`, the vector field of the associated ODE.
pub fn equilibrium_residual<S: Scalar>(sys: &LVPatchSystem<S>, x: &[S]) -> Vec<S> {
    sys.ode_rhs(x)
}

/// Jacobian of [`equilibrium_residual`].
pub fn residual_jacobian<S: Scalar>(sys: &LVPatchSystem<S>, x: &[S]) -> SquareMatrix<S> {
    let n = sys.n();
    let (beta, mu, a, d) = (sys.beta(), sys.mu(), sys.a(), sys.d());
    SquareMatrix::from_fn(n, |i, k| {
        if i == k {
            let ax: S = (0..n).map(|j| a[(i, j)] * x[j]).sum();
            beta[i] - S::lit(2.0) * mu[i] * x[i] - ax - x[i] * a[(i, i)]
        } else {
            -x[i] * a[(i, k)] + d[(i, k)]
        }
    })
}

/// `max_i (beta_i + sum_{j!=i} d_ij) / (mu_i - sum_j a_ij^-)` when every
/// denominator is positive.
pub fn coefficient_bound<S: Scalar>(sys: &LVPatchSystem<S>) -> Option<S> {
    let n = sys.n();
    let mut m = S::neg_infinity();
    for i in 0..n {
        let den = sys.mu()[i] - (0..n).map(|j| neg_part(sys.a()[(i, j)])).sum::<S>();
        if !(den > S::zero()) {
            return None;
        }
        let num = sys.beta()[i] + (0..n).filter(|&j| j != i).map(|j| sys.d()[(i, j)]).sum::<S>();
        m = m.max(num / den);
    }
    Some(m)
}

/// Default search box: `2 max(1, M)` per component with `M` the coefficient
/// bound, or 10 when the bound is undefined.
pub fn default_box<S: Scalar>(sys: &LVPatchSystem<S>) -> Vec<S> {
    let side = match coefficient_bound(sys) {
        Some(m) => S::lit(2.0) * m.max(S::one()),
        None => S::lit(10.0),
    };
    vec![side; sys.n()]
}

/// `|| M0 x - x * (N0 x) ||_inf`, which vanishes exactly at equilibria of a
/// cooperative system.
pub fn cooperative_identity_residual<S: Scalar>(sys: &LVPatchSystem<S>, x: &[S]) -> Result<S, EquilibriumError> {
    if !sys.is_cooperative() {
        return Err(EquilibriumError::NotCooperative);
    }
    if x.len() != sys.n() {
        return Err(EquilibriumError::Dimension { expected: sys.n(), found: x.len() });
    }
    let dm = sys.derived_matrices();
    let mx = dm.m0.mul_vec(x);
    let nx = dm.n0.mul_vec(x);
    Ok((0..x.len()).map(|i| (mx[i] - x[i] * nx[i]).abs()).fold(S::zero(), S::max))
}

fn norm<S: Scalar>(v: &[S]) -> S {
    max_abs(v)
}

/// Damped Newton from `x0`. Returns the limit if the residual target is met.
pub fn newton<S: Scalar>(sys: &LVPatchSystem<S>, x0: &[S]) -> Option<Vec<S>> {
    let tol = S::tolerances();
    let mut x = x0.to_vec();
    let mut f = sys.ode_rhs(&x);
    let mut fnorm = norm(&f);
    for _ in 0..200 {
        let j = residual_jacobian(sys, &x);
        let step = j.solve(&f)?;
        if step.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let snorm = norm(&step);
        let mut alpha = S::one();
        let mut accepted = None;
        for _ in 0..=40 {
            let trial: Vec<S> = x.iter().zip(&step).map(|(&xi, &si)| xi - alpha * si).collect();
            let ft = sys.ode_rhs(&trial);
            let ftn = norm(&ft);
            if ftn.is_finite() && (ftn < fnorm || fnorm <= tol.newton_residual) {
                accepted = Some((trial, ft, ftn));
                break;
            }
            alpha /= S::lit(2.0);
        }
        let (nx, nf, nfn) = accepted?;
        x = nx;
        f = nf;
        fnorm = nfn;
        let scale = S::one().max(norm(&x));
        if snorm * alpha <= tol.newton_step * scale && fnorm <= tol.newton_residual * scale {
            break;
        }
        if fnorm == S::zero() {
            break;
        }
    }
    if fnorm <= tol.equilibrium {
        Some(x)
    } else {
        None
    }
}

/// Radical-inverse (Halton) point `k` in the box.
fn halton<S: Scalar>(k: usize, hi: &[S]) -> Vec<S> {
    const PRIMES: [usize; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    hi.iter()
        .enumerate()
        .map(|(dim, &h)| {
            let base = PRIMES[dim % PRIMES.len()];
            let (mut f, mut r, mut i) = (1.0f64, 0.0f64, k + 1);
            while i > 0 {
                f /= base as f64;
                r += f * (i % base) as f64;
                i /= base;
            }
            h * S::lit(r)
        })
        .collect()
}

fn start_lattice<S: Scalar>(hi: &[S], extra: usize) -> Vec<Vec<S>> {
    let n = hi.len();
    let half: Vec<S> = hi.iter().map(|&h| h / S::lit(2.0)).collect();
    let mut starts = vec![vec![S::zero(); n], half.clone()];
    if n <= 10 {
        for mask in 1usize..(1 << n) {
            starts.push((0..n).map(|i| if mask >> i & 1 == 1 { hi[i] } else { S::zero() }).collect());
        }
    }
    for i in 0..n {
        let mut axis = vec![S::zero(); n];
        axis[i] = half[i];
        starts.push(axis);
        let mut face = half.clone();
        face[i] = S::zero();
        starts.push(face);
    }
    starts.extend((0..extra).map(|k| halton(k, hi)));
    starts
}

fn classify_point<S: Scalar>(x: &[S]) -> Positivity {
    if x.iter().all(|&v| v == S::zero()) {
        Positivity::Zero
    } else if x.iter().all(|&v| v > S::zero()) {
        Positivity::Interior
    } else {
        Positivity::Boundary
    }
}

/// Multistart Newton search for nonnegative equilibria.
pub fn find_equilibria<S: Scalar>(sys: &LVPatchSystem<S>, opts: &EquilibriumOptions<S>) -> EquilibriumSet<S> {
    let tol = S::tolerances();
    let n = sys.n();
    let hi = opts.box_hi.clone().unwrap_or_else(|| default_box(sys));
    let mut starts = start_lattice(&hi, opts.starts);
    if !sys.is_cooperative() {
        let maj = sys.cooperative_majorant();
        let sub = find_equilibria(&maj, &EquilibriumOptions { starts: opts.starts / 2, box_hi: Some(hi.clone()) });
        starts.extend(sub.points.into_iter().filter(|p| p.positivity != Positivity::Zero).map(|p| p.x));
    }

    let mut failed = 0usize;
    let mut found: Vec<Vec<S>> = vec![vec![S::zero(); n]];
    for s in &starts {
        let Some(mut x) = newton(sys, s) else {
            failed += 1;
            continue;
        };
        if x.iter().any(|&v| v < -tol.snap) {
            continue;
        }
        let snapped: Vec<S> = x.iter().map(|&v| if v.abs() <= tol.snap { S::zero() } else { v }).collect();
        if snapped != x {
            if norm(&sys.ode_rhs(&snapped)) <= tol.equilibrium {
                x = snapped;
            } else {
                continue;
            }
        }
        let dup = found.iter().any(|y| y.iter().zip(&x).all(|(&a, &b)| (a - b).abs() <= tol.dedup));
        if !dup {
            found.push(x);
        }
    }
    let mut points: Vec<EquilibriumPoint<S>> = found
        .into_iter()
        .filter_map(|x| {
            let residual_norm = norm(&equilibrium_residual(sys, &x));
            (residual_norm <= tol.equilibrium).then(|| EquilibriumPoint { positivity: classify_point(&x), residual_norm, x })
        })
        .collect();
    points.sort_by(|p, q| {
        p.x.iter()
            .zip(&q.x)
            .map(|(a, b)| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    EquilibriumSet { points, failed_starts: failed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{uniform_kernel_grid, CanonicalForm, DelayKernel};

    type M = SquareMatrix<f64>;

    fn counterexample() -> LVPatchSystem<f64> {
        LVPatchSystem::new(CanonicalForm {
            beta: vec![-2.0, -2.0],
            mu: vec![1.0, 13.0 / 45.0],
            a: M::from_f64_rows(&[&[0.0, -1.0], &[-0.1, 0.0]]),
            d: M::from_f64_rows(&[&[0.0, 1.0], &[3.5, 0.0]]),
            tau: M::from_f64_rows(&[&[0.0, 1.0], &[1.0, 0.0]]),
            kernels: uniform_kernel_grid(2, DelayKernel::exponential(1.0)),
        })
        .unwrap()
    }

    fn cooperative2() -> LVPatchSystem<f64> {
        LVPatchSystem::new(CanonicalForm {
            beta: vec![1.0, 1.0],
            mu: vec![2.0, 2.0],
            a: M::from_f64_rows(&[&[-0.5, -0.2], &[-0.2, -0.5]]),
            d: M::from_f64_rows(&[&[0.0, 0.3], &[0.3, 0.0]]),
            tau: M::from_f64_rows(&[&[0.0, 1.0], &[1.0, 0.0]]),
            kernels: uniform_kernel_grid(2, DelayKernel::exponential(1.0)),
        })
        .unwrap()
    }

    fn scalar(beta: f64, mu: f64, a: f64) -> LVPatchSystem<f64> {
        LVPatchSystem::new(CanonicalForm {
            beta: vec![beta],
            mu: vec![mu],
            a: M::from_f64_rows(&[&[a]]),
            d: M::zeros(1),
            tau: M::zeros(1),
            kernels: uniform_kernel_grid(1, DelayKernel::exponential(1.0)),
        })
        .unwrap()
    }

    #[test]
    fn residual_examples() {
        let sys = counterexample();
        assert_eq!(equilibrium_residual(&sys, &[0.0, 0.0]), vec![0.0, 0.0]);
        let r = equilibrium_residual(&sys, &[1.0, 1.5]);
        assert!(max_abs(&r) <= 1e-12, "{r:?}");
        assert_eq!(equilibrium_residual(&scalar(1.0, 1.0, 0.0), &[1.0]), vec![0.0]);
    }

    #[test]
    fn jacobian_matches_differences() {
        let mut f = counterexample().to_canonical();
        f.a = M::from_f64_rows(&[&[0.3, -1.0], &[0.7, -0.2]]);
        let sys = LVPatchSystem::new(f).unwrap();
        let x = [0.7, 1.3];
        let j = residual_jacobian(&sys, &x);
        let h = 1e-6;
        for k in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let (fp, fm) = (sys.ode_rhs(&xp), sys.ode_rhs(&xm));
            for i in 0..2 {
                assert!(((fp[i] - fm[i]) / (2.0 * h) - j[(i, k)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn counterexample_equilibria() {
        let set = find_equilibria(&counterexample(), &EquilibriumOptions::default());
        assert_eq!(set.points[0].positivity, Positivity::Zero);
        let interior: Vec<_> = set.interior().collect();
        assert!(interior.iter().any(|p| (p.x[0] - 1.0).abs() < 1e-9 && (p.x[1] - 1.5).abs() < 1e-9), "{set:?}");
    }

    #[test]
    fn cooperative_example_has_unique_interior_point() {
        let sys = cooperative2();
        let set = find_equilibria(&sys, &EquilibriumOptions::default());
        let interior: Vec<_> = set.interior().collect();
        assert_eq!(interior.len(), 1, "{set:?}");
        // by symmetry x* = (c, c) with c (2 - 0.7) = 1.3
        assert!((interior[0].x[0] - 1.0).abs() < 1e-12 && (interior[0].x[1] - 1.0).abs() < 1e-12);
        assert!(interior[0].residual_norm <= 1e-10);
        assert!(cooperative_identity_residual(&sys, &interior[0].x).unwrap() <= 1e-10);
        assert!(cooperative_identity_residual(&sys, &[2.0, 2.0]).unwrap() > 0.1);
    }

    #[test]
    fn no_positive_point_without_growth() {
        let set = find_equilibria(&scalar(-1.0, 1.0, 0.0), &EquilibriumOptions::default());
        assert_eq!(set.points.len(), 1);
        assert_eq!(set.points[0].x, vec![0.0]);
    }

    #[test]
    fn scalar_identity() {
        // beta x = x (mu - c) x with beta = 1, mu = 2, c = 1
        let sys = scalar(1.0, 2.0, -1.0);
        assert_eq!(cooperative_identity_residual(&sys, &[1.0]).unwrap(), 0.0);
        assert_eq!(cooperative_identity_residual(&scalar(1.0, 2.0, 1.0), &[1.0]), Err(EquilibriumError::NotCooperative));
    }

    #[test]
    fn boundary_equilibria_are_found() {
        // decoupled patches: (0,0), (1,0), (0,1), (1,1)
        let sys = LVPatchSystem::new(CanonicalForm {
            beta: vec![1.0, 1.0],
            mu: vec![1.0, 1.0],
            a: M::zeros(2),
            d: M::zeros(2),
            tau: M::zeros(2),
            kernels: uniform_kernel_grid(2, DelayKernel::exponential(1.0)),
        })
        .unwrap();
        let set = find_equilibria(&sys, &EquilibriumOptions::default());
        let xs: Vec<Vec<f64>> = set.points.iter().map(|p| p.x.clone()).collect();
        assert_eq!(xs, vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]);
        assert_eq!(set.boundary().count(), 2);
    }
}
