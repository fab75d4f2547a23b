//! Fixed-step integration of the delay system.
//!
//! Classical RK4 on a uniform grid with cubic Hermite dense output. Discrete
//! delays read the dense output (or the history). Each distributed delay is
//! a product-integration sum over the committed Hermite pieces, truncated at
//! the kernel's `tail_eps` horizon with the remaining mass put on the oldest
//! point; the weights for the three RK stage offsets are precomputed once.
//! The short stretch of a window that lies inside the current step is
//! filled by extending the previous Hermite piece.

pub mod chain;
pub mod history;
pub mod quad;
pub mod trajectory;

use serde::Serialize;
use thiserror::Error;

use crate::model::{DelayKernel, LVPatchSystem};
use crate::scalar::Scalar;
use crate::SquareMatrix;
use history::HistoryFunction;
use quad::{Head, Stencil};
use trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("{field}: {reason}")]
    InvalidOptions { field: String, reason: String },
    #[error("history.{field}: {reason}")]
    InvalidHistory { field: String, reason: String },
    #[error("history has {found} components, system has {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("numerical failure at t = {t}: x{component} = {value} after all step halvings")]
    NumericalFailure { t: f64, component: usize, value: f64 },
}

impl SimError {
    pub fn field(&self) -> Option<&str> {
        match self {
            SimError::InvalidOptions { field, .. } | SimError::InvalidHistory { field, .. } => Some(field),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SimOptions<S> {
    pub h: S,
    pub t_end: S,
    /// Kernel mass allowed beyond the truncation horizon.
    pub tail_eps: S,
    /// A step whose result dips below this is retried with substeps.
    pub positivity_floor: S,
    pub max_halvings: u32,
}

impl<S: Scalar> SimOptions<S> {
    pub fn new(h: S, t_end: S) -> Self {
        Self { h, t_end, tail_eps: S::lit(1e-8), positivity_floor: S::lit(-1e-10), max_halvings: 6 }
    }

    pub fn validate(&self, sys: &LVPatchSystem<S>) -> Result<(), SimError> {
        let bad = |field: &str, reason: String| Err(SimError::InvalidOptions { field: field.into(), reason });
        if !(self.h.is_finite() && self.h > S::zero()) {
            return bad("h", format!("must be positive, got {}", self.h));
        }
        if !(self.t_end.is_finite() && self.t_end > S::zero()) {
            return bad("t_end", format!("must be positive, got {}", self.t_end));
        }
        if !(self.tail_eps > S::zero() && self.tail_eps <= S::lit(1e-3)) {
            return bad("tail_eps", format!("must lie in (0, 1e-3], got {}", self.tail_eps));
        }
        if !(self.positivity_floor.is_finite() && self.positivity_floor <= S::zero()) {
            return bad("positivity_floor", "must be finite and nonpositive".into());
        }
        if let Some(tmin) = sys.min_positive_delay() {
            let cap = tmin / S::lit(4.0);
            if self.h > cap * (S::one() + S::lit(1e-12)) {
                return bad("h", format!("step {} exceeds a quarter of the smallest dispersal delay ({cap})", self.h));
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        let s = (self.t_end / self.h - S::lit(1e-9)).ceil();
        s.to_usize().unwrap_or(1).max(1)
    }
}

/// Per `(kernel, source component)` convolution data.
struct Slot<S> {
    kernel: DelayKernel<S>,
    j: usize,
    horizon: S,
    /// Offset 0, pieces behind the newest one.
    rest: Stencil<S>,
    /// Offset 0, newest piece.
    newest: [S; 4],
    half: Stencil<S>,
    head_half: [[S; 4]; 3],
    head_one: [[S; 4]; 3],
}

const HEADS: [Head; 3] = [Head::Extrapolate, Head::Taylor, Head::Quadratic];

fn head_index(h: Head) -> usize {
    HEADS.iter().position(|&x| x == h).expect("stepper head")
}

struct Stepper<'a, S> {
    sys: &'a LVPatchSystem<S>,
    opts: SimOptions<S>,
    slots: Vec<Slot<S>>,
    /// `(i, j, slot)` for every `a_ij != 0`.
    conv_pairs: Vec<(usize, usize, usize)>,
    /// `(i, j, tau_ij)` for every dispersing pair.
    delay_pairs: Vec<(usize, usize, S)>,
}

impl<'a, S: Scalar> Stepper<'a, S> {
    fn new(sys: &'a LVPatchSystem<S>, opts: SimOptions<S>) -> Self {
        let n = sys.n();
        let h = opts.h;
        let half = h / S::lit(2.0);
        let mut slots: Vec<Slot<S>> = Vec::new();
        let mut conv_pairs = Vec::new();
        let mut delay_pairs = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && sys.d()[(i, j)] > S::zero() {
                    delay_pairs.push((i, j, sys.tau()[(i, j)]));
                }
                if sys.a()[(i, j)] == S::zero() {
                    continue;
                }
                let k = *sys.kernel(i, j);
                let idx = match slots.iter().position(|s| s.kernel == k && s.j == j) {
                    Some(p) => p,
                    None => {
                        let horizon = quad::truncation_horizon(&k, opts.tail_eps);
                        slots.push(Slot {
                            kernel: k,
                            j,
                            horizon,
                            rest: Stencil::build(&k, S::zero(), h, horizon, 1),
                            newest: quad::piece_weights(&k, S::zero(), h),
                            half: Stencil::build(&k, half, h, horizon, 0),
                            head_half: HEADS.map(|hd| quad::head_weights(&k, half, h, hd)),
                            head_one: HEADS.map(|hd| quad::head_weights(&k, h, h, hd)),
                        });
                        slots.len() - 1
                    }
                };
                conv_pairs.push((i, j, idx));
            }
        }
        Self { sys, opts, slots, conv_pairs, delay_pairs }
    }

    fn hist_knots(&self) -> usize {
        self.slots.iter().map(|s| s.rest.max_lag().max(s.half.max_lag())).max().unwrap_or(0) + 2
    }

    fn field(&self, traj: &Trajectory<S>, t: S, y: &[S], conv: &[S]) -> Vec<S> {
        let n = self.sys.n();
        let mut cm = SquareMatrix::zeros(n);
        for &(i, j, s) in &self.conv_pairs {
            cm[(i, j)] = conv[s];
        }
        let mut dm = SquareMatrix::zeros(n);
        for &(i, j, tau) in &self.delay_pairs {
            dm[(i, j)] = if tau == S::zero() { y[j] } else { traj.eval_component(j, t - tau) };
        }
        self.sys.rhs(y, &dm, &cm)
    }

    /// Right derivative at knot `k`, which enters its own convolution only
    /// through the newest piece; solved by fixed-point iteration.
    fn knot_derivative(&self, traj: &Trajectory<S>, k: usize, rest: &[S], guess: Option<Vec<S>>) -> Vec<S> {
        let ki = k as isize;
        let x = traj.state(k);
        let t = traj.time(k);
        let conv_with = |f: Option<&[S]>| -> Vec<S> {
            self.slots
                .iter()
                .zip(rest)
                .map(|(s, &r)| {
                    let w = s.newest;
                    let fr = match f {
                        None => traj.phi_d0[s.j],
                        Some(f) => f[s.j],
                    };
                    r + w[0] * traj.x_at(s.j, ki - 1) + w[1] * traj.f_at(s.j, ki - 1) + w[2] * x[s.j] + w[3] * fr
                })
                .collect()
        };
        if k == 0 {
            return self.field(traj, t, &x, &conv_with(None));
        }
        let mut f = guess.unwrap_or_else(|| self.field(traj, t, &x, &conv_with(Some(&vec![S::zero(); x.len()]))));
        for _ in 0..3 {
            f = self.field(traj, t, &x, &conv_with(Some(&f)));
        }
        f
    }

    fn head_data(traj: &Trajectory<S>, j: usize, k: isize, head: Head, prov: Option<&[S]>) -> [S; 4] {
        match head {
            Head::Extrapolate => traj.piece(j, k - 1),
            Head::Taylor => [traj.x_at(j, k), traj.f_at(j, k), S::zero(), S::zero()],
            Head::Quadratic => [traj.x_at(j, k), traj.f_at(j, k), prov.expect("provisional")[j], S::zero()],
            Head::Interpolate => traj.piece(j, k),
        }
    }

    /// One RK4 step from knot `k` with precomputed committed sums.
    #[allow(clippy::too_many_arguments)]
    fn rk4(
        &self,
        traj: &Trajectory<S>,
        k: usize,
        f_k: &[S],
        half_bulk: &[S],
        one_bulk: &[S],
        head: Head,
        prov: Option<&[S]>,
    ) -> (Vec<S>, Vec<S>) {
        let h = self.opts.h;
        let two = S::lit(2.0);
        let hi = head_index(head);
        let ki = k as isize;
        let dot = |w: &[S; 4], d: [S; 4]| w[0] * d[0] + w[1] * d[1] + w[2] * d[2] + w[3] * d[3];
        let conv_half: Vec<S> =
            self.slots.iter().zip(half_bulk).map(|(s, &b)| b + dot(&s.head_half[hi], Self::head_data(traj, s.j, ki, head, prov))).collect();
        let conv_one: Vec<S> =
            self.slots.iter().zip(one_bulk).map(|(s, &b)| b + dot(&s.head_one[hi], Self::head_data(traj, s.j, ki, head, prov))).collect();
        let x = traj.state(k);
        let t = traj.time(k);
        let axpy = |a: S, v: &[S]| -> Vec<S> { x.iter().zip(v).map(|(&xi, &vi)| xi + a * vi).collect() };
        let k1 = f_k;
        let y2 = axpy(h / two, k1);
        let k2 = self.field(traj, t + h / two, &y2, &conv_half);
        let y3 = axpy(h / two, &k2);
        let k3 = self.field(traj, t + h / two, &y3, &conv_half);
        let y4 = axpy(h, &k3);
        let k4 = self.field(traj, t + h, &y4, &conv_one);
        let six = S::lit(6.0);
        let next = (0..x.len()).map(|i| x[i] + h / six * (k1[i] + two * k2[i] + two * k3[i] + k4[i])).collect();
        (next, k4)
    }

    /// Fallback for a step that left the positive cone: `2^r` substeps with
    /// convolutions evaluated directly at the stage times.
    fn substeps(&self, traj: &Trajectory<S>, k: usize, r: u32) -> Vec<S> {
        let m = 1usize << r;
        let hs = self.opts.h / S::from_usize_lossy(m);
        let two = S::lit(2.0);
        let head = if k == 0 { Head::Taylor } else { Head::Extrapolate };
        let conv_at =
            |t: S| -> Vec<S> { self.slots.iter().map(|s| traj.conv_generic(&s.kernel, s.j, t, s.horizon, k, head, None)).collect() };
        let mut y = traj.state(k);
        for q in 0..m {
            let t = traj.time(k) + S::from_usize_lossy(q) * hs;
            let axpy = |a: S, v: &[S]| -> Vec<S> { y.iter().zip(v).map(|(&yi, &vi)| yi + a * vi).collect() };
            let c0 = conv_at(t);
            let ch = conv_at(t + hs / two);
            let c1 = conv_at(t + hs);
            let k1 = self.field(traj, t, &y, &c0);
            let k2 = self.field(traj, t + hs / two, &axpy(hs / two, &k1), &ch);
            let k3 = self.field(traj, t + hs / two, &axpy(hs / two, &k2), &ch);
            let k4 = self.field(traj, t + hs, &axpy(hs, &k3), &c1);
            let six = S::lit(6.0);
            y = (0..y.len()).map(|i| y[i] + hs / six * (k1[i] + two * k2[i] + two * k3[i] + k4[i])).collect();
            if first_violation(&y, self.opts.positivity_floor).is_some() {
                return y;
            }
        }
        y
    }
}

fn first_violation<S: Scalar>(x: &[S], floor: S) -> Option<usize> {
    x.iter().position(|&v| !(v.is_finite() && v >= floor))
}

/// Integrates the system from the given history up to `opts.t_end`
/// (rounded up to a whole number of steps).
pub fn simulate<S: Scalar>(sys: &LVPatchSystem<S>, history: &HistoryFunction<S>, opts: &SimOptions<S>) -> Result<Trajectory<S>, SimError> {
    opts.validate(sys)?;
    if history.dim() != sys.n() {
        return Err(SimError::Dimension { expected: sys.n(), found: history.dim() });
    }
    let stepper = Stepper::new(sys, *opts);
    let steps = opts.steps();
    let n = sys.n();
    let mut traj = Trajectory::start(history.clone(), opts.h, stepper.hist_knots(), steps);
    let mut rest: Vec<S> = stepper.slots.iter().map(|s| traj.bulk(&s.rest, s.j, 0, 1)).collect();
    let mut guess: Option<Vec<S>> = None;
    for k in 0..steps {
        let f = stepper.knot_derivative(&traj, k, &rest, guess.take());
        for j in 0..n {
            traj.fd[j].push(f[j]);
        }
        let ki = k as isize;
        let half_bulk: Vec<S> = stepper.slots.iter().map(|s| traj.bulk(&s.half, s.j, ki, 0)).collect();
        let one_bulk: Vec<S> = stepper.slots.iter().map(|s| traj.bulk(&s.rest, s.j, ki + 1, 1)).collect();
        let (mut next, mut k4) = if k == 0 {
            let (prov, _) = stepper.rk4(&traj, 0, &f, &half_bulk, &one_bulk, Head::Taylor, None);
            stepper.rk4(&traj, 0, &f, &half_bulk, &one_bulk, Head::Quadratic, Some(&prov))
        } else {
            stepper.rk4(&traj, k, &f, &half_bulk, &one_bulk, Head::Extrapolate, None)
        };
        let mut r = 0;
        while let Some(c) = first_violation(&next, opts.positivity_floor) {
            if r == opts.max_halvings {
                return Err(SimError::NumericalFailure { t: traj.time(k + 1).as_f64(), component: c + 1, value: next[c].as_f64() });
            }
            r += 1;
            next = stepper.substeps(&traj, k, r);
            k4 = Vec::new();
        }
        if r > 0 {
            traj.retried_steps += 1;
        }
        for j in 0..n {
            traj.realized_min = traj.realized_min.min(next[j]);
            traj.xs[j].push(next[j]);
        }
        rest = one_bulk;
        if !k4.is_empty() {
            guess = Some(k4);
        }
    }
    let f = stepper.knot_derivative(&traj, steps, &rest, guess);
    for j in 0..n {
        traj.fd[j].push(f[j]);
    }
    Ok(traj)
}

#[cfg(test)]
mod tests;
