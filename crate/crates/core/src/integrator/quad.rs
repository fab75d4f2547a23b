//! Kernel quadrature: truncation horizons, Hermite product-integration
//! weights and the per-kernel stencils used by the stepper.

use crate::model::DelayKernel;
use crate::scalar::Scalar;

const GL_X: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_W: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Cubic Hermite basis `(h00, h10, h01, h11)` on `[0, 1]`.
#[inline]
pub fn hermite_basis<S: Scalar>(s: S) -> (S, S, S, S) {
    let two = S::lit(2.0);
    let three = S::lit(3.0);
    let s2 = s * s;
    let s3 = s2 * s;
    (two * s3 - three * s2 + S::one(), s3 - two * s2 + s, three * s2 - two * s3, s3 - s2)
}

#[inline]
pub fn hermite_basis_derivative<S: Scalar>(s: S) -> (S, S, S, S) {
    let six = S::lit(6.0);
    let s2 = s * s;
    (six * s2 - six * s, S::lit(3.0) * s2 - S::lit(4.0) * s + S::one(), six * s - six * s2, S::lit(3.0) * s2 - S::lit(2.0) * s)
}

/// 8-point Gauss-Legendre on `[a, b]` for a vector-valued integrand.
pub(crate) fn gauss<S: Scalar, const N: usize>(a: S, b: S, f: impl Fn(S) -> [S; N]) -> [S; N] {
    let mut acc = [S::zero(); N];
    if !(b > a) {
        return acc;
    }
    let half = (b - a) / S::lit(2.0);
    let mid = a + half;
    for (&x, &w) in GL_X.iter().zip(&GL_W) {
        let v = f(mid + half * S::lit(x));
        let w = S::lit(w) * half;
        for k in 0..N {
            acc[k] += w * v[k];
        }
    }
    acc
}

/// `int_{s0}^{s1} K(s) g(s) ds`, with panels split at the kernel's kink.
pub(crate) fn kernel_moments<S: Scalar, const N: usize>(k: &DelayKernel<S>, s0: S, s1: S, g: impl Fn(S) -> [S; N]) -> [S; N] {
    let f = |s: S| {
        let d = k.density(s);
        let mut v = g(s);
        for x in v.iter_mut() {
            *x *= d;
        }
        v
    };
    match k.breakpoint() {
        Some(b) if b > s0 && b < s1 => {
            let mut l = gauss(s0, b, f);
            let r = gauss(b, s1, f);
            for i in 0..N {
                l[i] += r[i];
            }
            l
        }
        Some(b) if b <= s0 => [S::zero(); N],
        _ => gauss(s0, s1, f),
    }
}

/// Smallest `T` with `int_T^inf K <= eps`.
pub fn truncation_horizon<S: Scalar>(k: &DelayKernel<S>, eps: S) -> S {
    match *k {
        DelayKernel::Exponential { rate } => (S::one() / eps).ln() / rate,
        DelayKernel::Uniform { width } => width * (S::one() - eps),
        DelayKernel::Erlang { .. } => {
            let mut lo = S::zero();
            let mut hi = S::one();
            while k.tail(hi) > eps {
                lo = hi;
                hi *= S::lit(2.0);
            }
            for _ in 0..200 {
                let mid = lo + (hi - lo) / S::lit(2.0);
                if mid <= lo || mid >= hi {
                    break;
                }
                if k.tail(mid) > eps {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            hi
        }
    }
}

/// Rescales weights so that the entries flagged as value weights sum to
/// `mass` exactly.
fn rescale<S: Scalar, const N: usize>(mut w: [S; N], values: &[usize], mass: S) -> [S; N] {
    let total: S = values.iter().map(|&i| w[i]).sum();
    if total > S::zero() {
        let r = mass / total;
        for x in w.iter_mut() {
            *x *= r;
        }
    }
    w
}

/// Weights of `int_{s0}^{s0+h} K(s) x(t - s) ds` for the Hermite piece whose
/// left knot is at `t - s0 - h`: coefficients of `(x_left, f_left, x_right,
/// f_right)`.
pub(crate) fn piece_weights<S: Scalar>(k: &DelayKernel<S>, s0: S, h: S) -> [S; 4] {
    let s1 = s0 + h;
    let w = kernel_moments(k, s0, s1, |s| {
        let sigma = (s1 - s) / h;
        let (a, b, c, d) = hermite_basis(sigma);
        [a, b * h, c, d * h]
    });
    rescale(w, &[0, 2], k.mass_between(s0, s1))
}

/// How the not-yet-committed head of the window `[t_k, t_k + delta]` is
/// approximated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Head {
    /// Cubic extension of the piece `[t_{k-1}, t_k]`: weights on
    /// `(x_{k-1}, f_{k-1}, x_k, f_k)`.
    Extrapolate,
    /// Committed piece `[t_k, t_{k+1}]`: weights on `(x_k, f_k, x_{k+1}, f_{k+1})`.
    Interpolate,
    /// `x_k + f_k (t - t_k)`: weights on `(x_k, f_k, -, -)`.
    Taylor,
    /// Quadratic through `x_k`, `f_k` and a provisional `x_{k+1}`: weights on
    /// `(x_k, f_k, x_{k+1}, -)`.
    Quadratic,
}

/// Weights of `int_0^delta K(s) x(t_k + delta - s) ds` under a head model.
pub(crate) fn head_weights<S: Scalar>(k: &DelayKernel<S>, delta: S, h: S, head: Head) -> [S; 4] {
    if !(delta > S::zero()) {
        return [S::zero(); 4];
    }
    let mass = k.cdf(delta);
    match head {
        Head::Extrapolate => {
            let w = kernel_moments(k, S::zero(), delta, |s| {
                let sigma = S::one() + (delta - s) / h;
                let (a, b, c, d) = hermite_basis(sigma);
                [a, b * h, c, d * h]
            });
            rescale(w, &[0, 2], mass)
        }
        Head::Interpolate => {
            let w = kernel_moments(k, S::zero(), delta, |s| {
                let sigma = (delta - s) / h;
                let (a, b, c, d) = hermite_basis(sigma);
                [a, b * h, c, d * h]
            });
            rescale(w, &[0, 2], mass)
        }
        Head::Taylor => {
            let w = kernel_moments(k, S::zero(), delta, |s| [S::one(), delta - s, S::zero(), S::zero()]);
            rescale(w, &[0], mass)
        }
        Head::Quadratic => {
            let w = kernel_moments(k, S::zero(), delta, |s| {
                let sigma = (delta - s) / h;
                [S::one() - sigma * sigma, h * (sigma - sigma * sigma), sigma * sigma, S::zero()]
            });
            rescale(w, &[0, 2], mass)
        }
    }
}

/// Number of full pieces behind a head of length `delta`, so that the
/// window `[0, delta + pieces h]` reaches the truncation horizon.
pub(crate) fn piece_count<S: Scalar>(horizon: S, delta: S, h: S) -> usize {
    let p = ((horizon - delta) / h).ceil();
    if p >= S::one() {
        p.to_usize().expect("piece count fits in usize")
    } else {
        1
    }
}

/// Weights of the committed part of a convolution, by knot lag relative to
/// a reference knot `k`: the window behind a head of length `c h` covers
/// pieces `first..pieces` and the tail mass lands on the oldest knot.
///
/// Derivative weights are split by which end of its piece a knot sits on,
/// because at `t = 0` the left and right derivatives differ.
#[derive(Clone, Debug)]
pub(crate) struct Stencil<S> {
    pub wx: Vec<S>,
    /// Total derivative weight.
    pub wf: Vec<S>,
    /// Derivative weight from pieces in which the knot is the right end.
    pub wfr: Vec<S>,
}

impl<S: Scalar> Stencil<S> {
    pub fn build(k: &DelayKernel<S>, delta: S, h: S, horizon: S, first: usize) -> Self {
        let pieces = piece_count(horizon, delta, h);
        let mut wx = vec![S::zero(); pieces + 1];
        let mut wf = vec![S::zero(); pieces + 1];
        let mut wfr = vec![S::zero(); pieces + 1];
        for m in first..pieces {
            let s0 = delta + S::from_usize_lossy(m) * h;
            let [xl, fl, xr, fr] = piece_weights(k, s0, h);
            wx[m + 1] += xl;
            wf[m + 1] += fl;
            wx[m] += xr;
            wf[m] += fr;
            wfr[m] += fr;
        }
        wx[pieces] += k.tail(delta + S::from_usize_lossy(pieces) * h);
        Self { wx, wf, wfr }
    }

    pub fn max_lag(&self) -> usize {
        self.wx.len() - 1
    }
}
