//! Computed trajectories with cubic Hermite dense output.

use serde::Serialize;

use super::history::HistoryFunction;
use super::quad::{self, hermite_basis, Head, Stencil};
use crate::model::DelayKernel;
use crate::scalar::Scalar;

/// Lower and upper envelope of a scalar quantity over a time window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Range<S> {
    pub inf: S,
    pub sup: S,
}

/// Solution on `[0, steps * h]` together with its history.
///
/// Knots run from `-hist_knots` to `steps`. Negative knots sample the
/// history on the same grid; convolutions treat the history through its
/// Hermite interpolant on that grid, while point evaluation at negative
/// times uses the history itself.
#[derive(Clone, Debug)]
pub struct Trajectory<S> {
    pub(crate) h: S,
    pub(crate) hist_knots: usize,
    /// `xs[j][i + hist_knots]` is `x_j(t_i)`.
    pub(crate) xs: Vec<Vec<S>>,
    /// Derivatives at knots; at knot 0 the right derivative.
    pub(crate) fd: Vec<Vec<S>>,
    /// Left derivative of the history at 0.
    pub(crate) phi_d0: Vec<S>,
    pub(crate) history: HistoryFunction<S>,
    pub(crate) realized_min: S,
    pub(crate) retried_steps: usize,
}

impl<S: Scalar> Trajectory<S> {
    pub(crate) fn start(history: HistoryFunction<S>, h: S, hist_knots: usize, capacity: usize) -> Self {
        let n = history.dim();
        let mut xs = Vec::with_capacity(n);
        let mut fd = Vec::with_capacity(n);
        for j in 0..n {
            let mut xj = Vec::with_capacity(hist_knots + capacity + 1);
            let mut fj = Vec::with_capacity(hist_knots + capacity + 1);
            for m in (1..=hist_knots).rev() {
                let t = -S::from_usize_lossy(m) * h;
                xj.push(history.eval(j, t));
                fj.push(history.derivative(j, t));
            }
            xj.push(history.eval(j, S::zero()));
            xs.push(xj);
            fd.push(fj);
        }
        let phi_d0 = (0..n).map(|j| history.derivative(j, S::zero())).collect();
        let realized_min = history.at_zero().into_iter().fold(S::infinity(), S::min);
        Self { h, hist_knots, xs, fd, phi_d0, history, realized_min, retried_steps: 0 }
    }

    pub fn dim(&self) -> usize {
        self.xs.len()
    }

    pub fn h(&self) -> S {
        self.h
    }

    /// Index of the last committed knot.
    pub fn steps(&self) -> usize {
        self.xs[0].len() - self.hist_knots - 1
    }

    pub fn t_end(&self) -> S {
        self.time(self.steps())
    }

    pub fn time(&self, k: usize) -> S {
        S::from_usize_lossy(k) * self.h
    }

    pub fn history(&self) -> &HistoryFunction<S> {
        &self.history
    }

    /// Smallest component value at any committed knot.
    pub fn realized_min(&self) -> S {
        self.realized_min
    }

    /// Number of steps that needed substep halving.
    pub fn retried_steps(&self) -> usize {
        self.retried_steps
    }

    /// `x(t_k)` for `k >= 0`.
    pub fn state(&self, k: usize) -> Vec<S> {
        self.xs.iter().map(|x| x[k + self.hist_knots]).collect()
    }

    /// Knot values of component `j` at `t_0..t_steps`.
    pub fn component(&self, j: usize) -> &[S] {
        &self.xs[j][self.hist_knots..]
    }

    pub fn final_state(&self) -> Vec<S> {
        self.state(self.steps())
    }

    /// Knots older than the stored ones are read from the history.
    #[inline]
    pub(crate) fn x_at(&self, j: usize, i: isize) -> S {
        let p = i + self.hist_knots as isize;
        if p < 0 {
            return self.history.eval(j, S::from_isize(i).expect("knot index") * self.h);
        }
        self.xs[j][p as usize]
    }

    #[inline]
    pub(crate) fn f_at(&self, j: usize, i: isize) -> S {
        let p = i + self.hist_knots as isize;
        if p < 0 {
            return self.history.derivative(j, S::from_isize(i).expect("knot index") * self.h);
        }
        self.fd[j][p as usize]
    }

    /// Hermite data `(x_l, f_l, x_r, f_r)` of the piece `[t_i, t_{i+1}]`.
    #[inline]
    pub(crate) fn piece(&self, j: usize, i: isize) -> [S; 4] {
        let fr = if i + 1 == 0 { self.phi_d0[j] } else { self.f_at(j, i + 1) };
        [self.x_at(j, i), self.f_at(j, i), self.x_at(j, i + 1), fr]
    }

    /// Dense output of component `j`. Times past the end are clamped.
    pub fn eval_component(&self, j: usize, t: S) -> S {
        if t < S::zero() {
            return self.history.eval(j, t);
        }
        let last = self.steps();
        if last == 0 {
            return self.x_at(j, 0);
        }
        let pos = t / self.h;
        let i = pos.floor().to_usize().unwrap_or(usize::MAX).min(last - 1);
        let s = (pos - S::from_usize_lossy(i)).min(S::one());
        let [xl, fl, xr, fr] = self.piece(j, i as isize);
        let (a, b, c, d) = hermite_basis(s);
        a * xl + b * self.h * fl + c * xr + d * self.h * fr
    }

    pub fn eval(&self, t: S) -> Vec<S> {
        (0..self.dim()).map(|j| self.eval_component(j, t)).collect()
    }

    /// `int_0^inf K(s) x_j(t - s) ds` for `0 <= t <= t_end`, truncated at
    /// the horizon of `tail_eps` with the tail mass put on the oldest point.
    pub fn convolution_term(&self, k: &DelayKernel<S>, j: usize, t: S, tail_eps: S) -> S {
        let horizon = quad::truncation_horizon(k, tail_eps);
        self.conv_generic(k, j, t, horizon, self.steps(), Head::Interpolate, None)
    }

    /// Convolution at `t <= t_frontier + h` using knots up to `frontier`.
    /// The head of the window past the frontier follows `head`.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn conv_generic(
        &self,
        k: &DelayKernel<S>,
        j: usize,
        t: S,
        horizon: S,
        frontier: usize,
        head: Head,
        provisional: Option<&[S]>,
    ) -> S {
        let h = self.h;
        let mut kidx = (t / h).floor().to_usize().unwrap_or(0);
        let head = if kidx >= frontier {
            kidx = frontier;
            head
        } else {
            Head::Interpolate
        };
        let delta = (t - S::from_usize_lossy(kidx) * h).max(S::zero());
        let ki = kidx as isize;
        let mut acc = S::zero();
        if delta > S::zero() {
            let w = quad::head_weights(k, delta, h, head);
            let data = match head {
                Head::Extrapolate => self.piece(j, ki - 1),
                Head::Interpolate => self.piece(j, ki),
                Head::Taylor => [self.x_at(j, ki), self.f_at(j, ki), S::zero(), S::zero()],
                Head::Quadratic => [self.x_at(j, ki), self.f_at(j, ki), provisional.expect("provisional state")[j], S::zero()],
            };
            acc += w[0] * data[0] + w[1] * data[1] + w[2] * data[2] + w[3] * data[3];
        }
        let pieces = quad::piece_count(horizon, delta, h);
        for m in 0..pieces {
            let s0 = delta + S::from_usize_lossy(m) * h;
            let w = quad::piece_weights(k, s0, h);
            let data = self.piece(j, ki - m as isize - 1);
            acc += w[0] * data[0] + w[1] * data[1] + w[2] * data[2] + w[3] * data[3];
        }
        acc + k.tail(delta + S::from_usize_lossy(pieces) * h) * self.x_at(j, ki - pieces as isize)
    }

    /// Stencil sum over lags `lag_from..` relative to knot `reference`.
    pub(crate) fn bulk(&self, st: &Stencil<S>, j: usize, reference: isize, lag_from: usize) -> S {
        let top = (reference - lag_from as isize + self.hist_knots as isize) as usize;
        let count = st.wx.len() - lag_from;
        let xs = &self.xs[j][top + 1 - count..=top];
        let fd = &self.fd[j][top + 1 - count..=top];
        let mut acc = S::zero();
        for (m, (&x, &f)) in xs.iter().rev().zip(fd.iter().rev()).enumerate() {
            acc += st.wx[lag_from + m] * x + st.wf[lag_from + m] * f;
        }
        if reference >= lag_from as isize && reference <= st.max_lag() as isize {
            let m0 = reference as usize;
            acc += st.wfr[m0] * (self.phi_d0[j] - self.f_at(j, 0));
        }
        acc
    }

    /// Envelope of `w . x(t)` on `[t0, t_end]`, exact for the dense output.
    pub fn range_of(&self, w: &[S], t0: S) -> Range<S> {
        let last = self.steps();
        let value_at = |t: S| w.iter().enumerate().fold(S::zero(), |a, (j, &c)| a + c * self.eval_component(j, t));
        let mut inf = value_at(self.t_end());
        let mut sup = inf;
        let mut push = |v: S| {
            inf = inf.min(v);
            sup = sup.max(v);
        };
        push(value_at(t0.max(S::zero())));
        let first = (t0.max(S::zero()) / self.h).floor().to_usize().unwrap_or(0).min(last);
        for i in first..last {
            let mut p = [S::zero(); 4];
            for (j, &c) in w.iter().enumerate() {
                let d = self.piece(j, i as isize);
                for q in 0..4 {
                    p[q] += c * d[q];
                }
            }
            let (a, b, c, d) = (p[0], p[1] * self.h, p[2], p[3] * self.h);
            let ti = self.time(i);
            if ti >= t0 {
                push(a);
            }
            let qa = S::lit(6.0) * a + S::lit(3.0) * b - S::lit(6.0) * c + S::lit(3.0) * d;
            let qb = -S::lit(6.0) * a - S::lit(4.0) * b + S::lit(6.0) * c - S::lit(2.0) * d;
            let qc = b;
            for s in quadratic_roots(qa, qb, qc) {
                if s > S::zero() && s < S::one() && ti + s * self.h >= t0 {
                    let (h00, h10, h01, h11) = hermite_basis(s);
                    push(h00 * a + h10 * b + h01 * c + h11 * d);
                }
            }
        }
        Range { inf, sup }
    }

    /// Per-component envelopes over the last `fraction` of the run.
    pub fn asymptotic_estimate(&self, fraction: S) -> Vec<Range<S>> {
        let t0 = self.t_end() * (S::one() - fraction);
        (0..self.dim())
            .map(|j| {
                let mut w = vec![S::zero(); self.dim()];
                w[j] = S::one();
                self.range_of(&w, t0)
            })
            .collect()
    }

    /// Envelope of the total population over the last `fraction` of the run.
    pub fn total_range(&self, fraction: S) -> Range<S> {
        let t0 = self.t_end() * (S::one() - fraction);
        self.range_of(&vec![S::one(); self.dim()], t0)
    }

    /// Writes `t,x1,...,xn` rows at every `stride`-th knot.
    pub fn to_csv(&self, stride: usize) -> String {
        let stride = stride.max(1);
        let mut out = String::from("t");
        for j in 0..self.dim() {
            out.push_str(&format!(",x{}", j + 1));
        }
        out.push('\n');
        let last = self.steps();
        let mut k = 0;
        loop {
            out.push_str(&format!("{:.16e}", self.time(k).as_f64()));
            for j in 0..self.dim() {
                out.push_str(&format!(",{:.16e}", self.x_at(j, k as isize).as_f64()));
            }
            out.push('\n');
            if k == last {
                break;
            }
            k = (k + stride).min(last);
        }
        out
    }
}

fn quadratic_roots<S: Scalar>(a: S, b: S, c: S) -> Vec<S> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == S::zero() {
        return Vec::new();
    }
    if a.abs() <= S::epsilon() * scale {
        return if b != S::zero() { vec![-c / b] } else { Vec::new() };
    }
    let disc = b * b - S::lit(4.0) * a * c;
    if disc < S::zero() {
        return Vec::new();
    }
    let sq = disc.sqrt();
    let q = -(b + b.signum() * sq) / S::lit(2.0);
    let mut r = vec![q / a];
    if q != S::zero() {
        r.push(c / q);
    }
    r
}
