//! Linear chain trick: with Erlang (or exponential) kernels and no
//! dispersal delays the delay system is equivalent to a finite ODE.
//!
//! For each `a_ij != 0` with kernel Erlang(k, r), the stages
//! `y_m(t) = int Erlang(m, r)(s) x_j(t - s) ds`, `m = 1..k`, satisfy
//! `y_1' = r (x_j - y_1)` and `y_m' = r (y_{m-1} - y_m)`; the convolution is
//! `y_k`. This gives an independent reference for the integrator.

use thiserror::Error;

use super::history::HistoryFunction;
use super::quad::{kernel_moments, truncation_horizon};
use crate::model::{DelayKernel, LVPatchSystem};
use crate::scalar::Scalar;
use crate::SquareMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChainError {
    #[error("kernel ({i},{j}) is {family}; only exponential and Erlang kernels reduce to a chain")]
    UnsupportedKernel { i: usize, j: usize, family: &'static str },
    #[error("dispersal ({i},{j}) is delayed; chain reduction needs tau = 0")]
    DelayedDispersal { i: usize, j: usize },
}

#[derive(Clone, Debug)]
struct Chain<S> {
    i: usize,
    j: usize,
    rate: S,
    stages: usize,
    offset: usize,
}

/// Augmented ODE: the `n` patch densities followed by the chain stages.
#[derive(Clone, Debug)]
pub struct ChainOde<S> {
    sys: LVPatchSystem<S>,
    chains: Vec<Chain<S>>,
    dim: usize,
}

pub fn linear_chain_reduce<S: Scalar>(sys: &LVPatchSystem<S>) -> Result<ChainOde<S>, ChainError> {
    let n = sys.n();
    let mut chains = Vec::new();
    let mut offset = n;
    for i in 0..n {
        for j in 0..n {
            if i != j && sys.d()[(i, j)] > S::zero() && sys.tau()[(i, j)] != S::zero() {
                return Err(ChainError::DelayedDispersal { i: i + 1, j: j + 1 });
            }
            if sys.a()[(i, j)] == S::zero() {
                continue;
            }
            let (rate, stages) = match *sys.kernel(i, j) {
                DelayKernel::Exponential { rate } => (rate, 1),
                DelayKernel::Erlang { shape, rate } => (rate, shape as usize),
                ref k => return Err(ChainError::UnsupportedKernel { i: i + 1, j: j + 1, family: k.family_name() }),
            };
            chains.push(Chain { i, j, rate, stages, offset });
            offset += stages;
        }
    }
    Ok(ChainOde { sys: sys.clone(), chains, dim: offset })
}

impl<S: Scalar> ChainOde<S> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Stage values at `t = 0` from the history, by quadrature.
    pub fn initial_state(&self, history: &HistoryFunction<S>) -> Vec<S> {
        let mut y = history.at_zero();
        y.resize(self.dim, S::zero());
        for c in &self.chains {
            for m in 1..=c.stages {
                y[c.offset + m - 1] = stage_initial(history, c.j, m as u32, c.rate);
            }
        }
        y
    }

    pub fn rhs(&self, y: &[S]) -> Vec<S> {
        let n = self.sys.n();
        let mut conv = SquareMatrix::zeros(n);
        let mut out = vec![S::zero(); self.dim];
        for c in &self.chains {
            conv[(c.i, c.j)] = y[c.offset + c.stages - 1];
            for m in 0..c.stages {
                let prev = if m == 0 { y[c.j] } else { y[c.offset + m - 1] };
                out[c.offset + m] = c.rate * (prev - y[c.offset + m]);
            }
        }
        let x = &y[..n];
        let disp = SquareMatrix::from_fn(n, |_, j| x[j]);
        let fx = self.sys.rhs(x, &disp, &conv);
        out[..n].copy_from_slice(&fx);
        out
    }

    /// RK4 with step `h`; returns the patch densities at every step.
    pub fn integrate(&self, history: &HistoryFunction<S>, h: S, steps: usize) -> Vec<Vec<S>> {
        let n = self.sys.n();
        let mut y = self.initial_state(history);
        let mut out = Vec::with_capacity(steps + 1);
        out.push(y[..n].to_vec());
        let two = S::lit(2.0);
        let six = S::lit(6.0);
        for _ in 0..steps {
            let axpy = |y: &[S], a: S, v: &[S]| -> Vec<S> { y.iter().zip(v).map(|(&p, &q)| p + a * q).collect() };
            let k1 = self.rhs(&y);
            let k2 = self.rhs(&axpy(&y, h / two, &k1));
            let k3 = self.rhs(&axpy(&y, h / two, &k2));
            let k4 = self.rhs(&axpy(&y, h, &k3));
            for i in 0..self.dim {
                y[i] += h / six * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
            }
            out.push(y[..n].to_vec());
        }
        out
    }
}

/// `int Erlang(m, rate)(s) phi_j(-s) ds` on panels split at history kinks.
fn stage_initial<S: Scalar>(history: &HistoryFunction<S>, j: usize, m: u32, rate: S) -> S {
    if history.is_constant() {
        return history.eval(j, S::zero());
    }
    let k = DelayKernel::erlang(m, rate);
    let horizon = truncation_horizon(&k, S::lit(1e-15));
    let mut cuts: Vec<S> = history.breakpoints().into_iter().map(|b| -b).filter(|&b| b > S::zero() && b < horizon).collect();
    let panel = S::lit(0.05) / rate;
    let mut s = S::zero();
    while s < horizon {
        cuts.push(s);
        s += panel;
    }
    cuts.push(horizon);
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite cut"));
    let mut acc = S::zero();
    for w in cuts.windows(2) {
        acc += kernel_moments(&k, w[0], w[1], |s| [history.eval(j, -s)])[0];
    }
    acc + k.tail(horizon) * history.eval(j, -horizon)
}
