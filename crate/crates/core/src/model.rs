//! Model definition: kernels, the canonical patch system, the raw dispersal
//! form it is usually written in, and the matrices derived from it.

use serde::Serialize;
use thiserror::Error;

use crate::matrix::SquareMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },
    #[error("dimension mismatch in `{field}`: expected {expected}, found {found}")]
    Dimension { field: String, expected: usize, found: usize },
}

impl ModelError {
    pub fn field(&self) -> &str {
        match self {
            ModelError::InvalidParameter { field, .. } | ModelError::Dimension { field, .. } => field,
        }
    }

    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ModelError::InvalidParameter { field: field.into(), reason: reason.into() }
    }
}

/// Unit-mass delay kernel on `[0, inf)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum DelayKernel<S> {
    /// `rate * exp(-rate s)`
    Exponential { rate: S },
    /// Gamma density with integer shape.
    Erlang { shape: u32, rate: S },
    /// `1/width` on `[0, width]`.
    Uniform { width: S },
}

impl<S: Scalar> DelayKernel<S> {
    pub fn exponential(rate: S) -> Self {
        DelayKernel::Exponential { rate }
    }

    pub fn erlang(shape: u32, rate: S) -> Self {
        DelayKernel::Erlang { shape, rate }
    }

    pub fn uniform(width: S) -> Self {
        DelayKernel::Uniform { width }
    }

    pub fn validate(&self, field: &str) -> Result<(), ModelError> {
        let positive = |v: S, what: &str| {
            if v.is_finite() && v > S::zero() {
                Ok(())
            } else {
                Err(ModelError::invalid(format!("{field}.{what}"), format!("must be positive and finite, got {v}")))
            }
        };
        match *self {
            DelayKernel::Exponential { rate } => positive(rate, "rate"),
            DelayKernel::Erlang { shape, rate } => {
                if shape == 0 {
                    return Err(ModelError::invalid(format!("{field}.shape"), "must be a positive integer"));
                }
                positive(rate, "rate")
            }
            DelayKernel::Uniform { width } => positive(width, "width"),
        }
    }

    pub fn density(&self, s: S) -> S {
        if s < S::zero() {
            return S::zero();
        }
        match *self {
            DelayKernel::Exponential { rate } => rate * (-rate * s).exp(),
            DelayKernel::Erlang { shape, rate } => {
                let k = shape as i32;
                let x = rate * s;
                // rate * x^(k-1) e^{-x} / (k-1)!, assembled in log space
                let log_fact: S = (1..k).map(|m| S::from_usize_lossy(m as usize).ln()).sum();
                if k == 1 {
                    rate * (-x).exp()
                } else if x == S::zero() {
                    S::zero()
                } else {
                    rate * (S::from_usize_lossy((k - 1) as usize) * x.ln() - x - log_fact).exp()
                }
            }
            DelayKernel::Uniform { width } => {
                if s <= width {
                    S::one() / width
                } else {
                    S::zero()
                }
            }
        }
    }

    /// `int_T^inf K(s) ds` in closed form.
    pub fn tail(&self, t: S) -> S {
        if t <= S::zero() {
            return S::one();
        }
        match *self {
            DelayKernel::Exponential { rate } => (-rate * t).exp(),
            DelayKernel::Erlang { shape, rate } => {
                let x = rate * t;
                let mut term = S::one();
                let mut sum = S::one();
                for m in 1..shape {
                    term = term * x / S::from_usize_lossy(m as usize);
                    sum += term;
                }
                (sum * (-x).exp()).min(S::one())
            }
            DelayKernel::Uniform { width } => (S::one() - t / width).max(S::zero()),
        }
    }

    /// `int_0^T K(s) ds`
    pub fn cdf(&self, t: S) -> S {
        if t <= S::zero() {
            return S::zero();
        }
        match *self {
            // 1 - e^{-x} loses everything for small x; use exp_m1.
            DelayKernel::Exponential { rate } => -(-rate * t).exp_m1(),
            _ => S::one() - self.tail(t),
        }
    }

    /// Mass on `[s0, s1]`.
    pub fn mass_between(&self, s0: S, s1: S) -> S {
        match *self {
            DelayKernel::Exponential { rate } => {
                let s0 = s0.max(S::zero());
                let s1 = s1.max(s0);
                // e^{-r s0} (1 - e^{-r (s1-s0)})
                (-rate * s0).exp() * -(-rate * (s1 - s0)).exp_m1()
            }
            _ => (self.tail(s0) - self.tail(s1)).max(S::zero()),
        }
    }

    /// Points where the density is not smooth (besides 0).
    pub fn breakpoint(&self) -> Option<S> {
        match *self {
            DelayKernel::Uniform { width } => Some(width),
            _ => None,
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            DelayKernel::Exponential { .. } => "exponential",
            DelayKernel::Erlang { .. } => "erlang",
            DelayKernel::Uniform { .. } => "uniform",
        }
    }
}

/// Canonical form of the patch system, as plain data. Converted into a
/// validated [`LVPatchSystem`] with [`LVPatchSystem::new`].
#[derive(Clone, Debug)]
pub struct CanonicalForm<S> {
    pub beta: Vec<S>,
    pub mu: Vec<S>,
    pub a: SquareMatrix<S>,
    pub d: SquareMatrix<S>,
    pub tau: SquareMatrix<S>,
    /// Row-major `n x n` kernels; `kernels[i][j]` weights `x_j` in equation `i`.
    pub kernels: Vec<Vec<DelayKernel<S>>>,
}

/// Raw dispersal form: Malthusian rates `b_i`, migration rates `alpha_ij`
/// and survival fractions `eps_ij` (or loss rates `gamma_ij`).
#[derive(Clone, Debug)]
pub struct RawPatchForm<S> {
    pub b: Vec<S>,
    pub mu: Vec<S>,
    pub a: SquareMatrix<S>,
    pub alpha: SquareMatrix<S>,
    /// Survival fractions; all ones when omitted.
    pub eps: Option<SquareMatrix<S>>,
    /// Loss rates; when given, `eps_ij = exp(-gamma_ij tau_ij)`.
    pub gamma: Option<SquareMatrix<S>>,
    pub tau: SquareMatrix<S>,
    pub kernels: Vec<Vec<DelayKernel<S>>>,
}

/// Validated patch system
///
/// `x_i' = x_i (beta_i - mu_i x_i - sum_j a_ij int K_ij(s) x_j(t-s) ds) + sum_{j!=i} d_ij x_j(t - tau_ij)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LVPatchSystem<S> {
    beta: Vec<S>,
    mu: Vec<S>,
    a: SquareMatrix<S>,
    d: SquareMatrix<S>,
    tau: SquareMatrix<S>,
    kernels: Vec<DelayKernel<S>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivedMatrices<S> {
    /// Community matrix: `beta` on the diagonal, `d` off it.
    pub m0: SquareMatrix<S>,
    /// `diag(mu) - [a^-]`
    pub n0: SquareMatrix<S>,
    /// `diag(mu) - [|a|]`
    pub nhat: SquareMatrix<S>,
}

#[inline]
pub fn pos_part<S: Scalar>(v: S) -> S {
    v.max(S::zero())
}

#[inline]
pub fn neg_part<S: Scalar>(v: S) -> S {
    (-v).max(S::zero())
}

fn check_len<S>(field: &str, v: &[S], n: usize) -> Result<(), ModelError> {
    if v.len() != n {
        return Err(ModelError::Dimension { field: field.into(), expected: n, found: v.len() });
    }
    Ok(())
}

fn check_dim<S: Scalar>(field: &str, m: &SquareMatrix<S>, n: usize) -> Result<(), ModelError> {
    if m.dim() != n {
        return Err(ModelError::Dimension { field: field.into(), expected: n, found: m.dim() });
    }
    for i in 0..n {
        for j in 0..n {
            if !m[(i, j)].is_finite() {
                return Err(ModelError::invalid(format!("{field}[{},{}]", i + 1, j + 1), "must be finite"));
            }
        }
    }
    Ok(())
}

fn flatten_kernels<S: Scalar>(kernels: &[Vec<DelayKernel<S>>], n: usize) -> Result<Vec<DelayKernel<S>>, ModelError> {
    if kernels.len() != n {
        return Err(ModelError::Dimension { field: "kernels".into(), expected: n, found: kernels.len() });
    }
    let mut flat = Vec::with_capacity(n * n);
    for (i, row) in kernels.iter().enumerate() {
        if row.len() != n {
            return Err(ModelError::Dimension { field: format!("kernels[{}]", i + 1), expected: n, found: row.len() });
        }
        for (j, k) in row.iter().enumerate() {
            k.validate(&format!("kernels[{},{}]", i + 1, j + 1))?;
            flat.push(*k);
        }
    }
    Ok(flat)
}

impl<S: Scalar> LVPatchSystem<S> {
    pub fn new(form: CanonicalForm<S>) -> Result<Self, ModelError> {
        let n = form.mu.len();
        if n == 0 {
            return Err(ModelError::invalid("mu", "at least one patch is required"));
        }
        check_len("beta", &form.beta, n)?;
        for (i, &b) in form.beta.iter().enumerate() {
            if !b.is_finite() {
                return Err(ModelError::invalid(format!("beta[{}]", i + 1), "must be finite"));
            }
        }
        for (i, &m) in form.mu.iter().enumerate() {
            if !(m.is_finite() && m > S::zero()) {
                return Err(ModelError::invalid(format!("mu[{}]", i + 1), format!("must be positive, got {m}")));
            }
        }
        check_dim("a", &form.a, n)?;
        check_dim("d", &form.d, n)?;
        check_dim("tau", &form.tau, n)?;
        for i in 0..n {
            for j in 0..n {
                let dij = form.d[(i, j)];
                if i == j && dij != S::zero() {
                    return Err(ModelError::invalid(format!("d[{},{}]", i + 1, j + 1), "diagonal dispersal must be 0"));
                }
                if dij < S::zero() {
                    return Err(ModelError::invalid(format!("d[{},{}]", i + 1, j + 1), format!("must be nonnegative, got {dij}")));
                }
                let t = form.tau[(i, j)];
                if t < S::zero() {
                    return Err(ModelError::invalid(format!("tau[{},{}]", i + 1, j + 1), format!("must be nonnegative, got {t}")));
                }
            }
        }
        let kernels = flatten_kernels(&form.kernels, n)?;
        Ok(Self { beta: form.beta, mu: form.mu, a: form.a, d: form.d, tau: form.tau, kernels })
    }

    /// Converts the raw dispersal form: `d_ij = eps_ij alpha_ij` and
    /// `beta_i = b_i - sum_{j!=i} alpha_ji`.
    pub fn from_patch_form(raw: RawPatchForm<S>) -> Result<Self, ModelError> {
        let n = raw.mu.len();
        if n == 0 {
            return Err(ModelError::invalid("mu", "at least one patch is required"));
        }
        check_len("b", &raw.b, n)?;
        check_dim("alpha", &raw.alpha, n)?;
        check_dim("tau", &raw.tau, n)?;
        for i in 0..n {
            for j in 0..n {
                let v = raw.alpha[(i, j)];
                let field = format!("alpha[{},{}]", i + 1, j + 1);
                if i == j && v != S::zero() {
                    return Err(ModelError::invalid(field, "diagonal migration rate must be 0"));
                }
                if v < S::zero() {
                    return Err(ModelError::invalid(field, format!("must be nonnegative, got {v}")));
                }
            }
        }
        let eps = match (&raw.eps, &raw.gamma) {
            (Some(_), Some(_)) => return Err(ModelError::invalid("gamma", "give either eps or gamma, not both")),
            (Some(e), None) => {
                check_dim("eps", e, n)?;
                e.clone()
            }
            (None, Some(g)) => {
                check_dim("gamma", g, n)?;
                for i in 0..n {
                    for j in 0..n {
                        if g[(i, j)] < S::zero() {
                            return Err(ModelError::invalid(
                                format!("gamma[{},{}]", i + 1, j + 1),
                                format!("must be nonnegative, got {}", g[(i, j)]),
                            ));
                        }
                    }
                }
                SquareMatrix::from_fn(n, |i, j| (-g[(i, j)] * raw.tau[(i, j)]).exp())
            }
            (None, None) => SquareMatrix::from_fn(n, |_, _| S::one()),
        };
        for (i, j, e) in eps.off_diagonal() {
            if !(e > S::zero() && e <= S::one()) {
                return Err(ModelError::invalid(format!("eps[{},{}]", i + 1, j + 1), format!("must lie in (0, 1], got {e}")));
            }
        }
        let d = SquareMatrix::from_fn(n, |i, j| if i == j { S::zero() } else { eps[(i, j)] * raw.alpha[(i, j)] });
        let beta: Vec<S> = (0..n)
            .map(|i| {
                let out: S = (0..n).filter(|&j| j != i).map(|j| raw.alpha[(j, i)]).sum();
                raw.b[i] - out
            })
            .collect();
        Self::new(CanonicalForm { beta, mu: raw.mu, a: raw.a, d, tau: raw.tau, kernels: raw.kernels })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.mu.len()
    }
    pub fn beta(&self) -> &[S] {
        &self.beta
    }
    pub fn mu(&self) -> &[S] {
        &self.mu
    }
    pub fn a(&self) -> &SquareMatrix<S> {
        &self.a
    }
    pub fn d(&self) -> &SquareMatrix<S> {
        &self.d
    }
    pub fn tau(&self) -> &SquareMatrix<S> {
        &self.tau
    }
    pub fn kernel(&self, i: usize, j: usize) -> &DelayKernel<S> {
        &self.kernels[i * self.n() + j]
    }

    pub fn to_canonical(&self) -> CanonicalForm<S> {
        let n = self.n();
        CanonicalForm {
            beta: self.beta.clone(),
            mu: self.mu.clone(),
            a: self.a.clone(),
            d: self.d.clone(),
            tau: self.tau.clone(),
            kernels: (0..n).map(|i| self.kernels[i * n..(i + 1) * n].to_vec()).collect(),
        }
    }

    pub fn derived_matrices(&self) -> DerivedMatrices<S> {
        let n = self.n();
        let m0 = SquareMatrix::from_fn(n, |i, j| if i == j { self.beta[i] } else { self.d[(i, j)] });
        let diag = |i: usize, j: usize| if i == j { self.mu[i] } else { S::zero() };
        let n0 = SquareMatrix::from_fn(n, |i, j| diag(i, j) - neg_part(self.a[(i, j)]));
        let nhat = SquareMatrix::from_fn(n, |i, j| diag(i, j) - self.a[(i, j)].abs());
        DerivedMatrices { m0, n0, nhat }
    }

    /// All interactions are cooperative (`a_ij <= 0`).
    pub fn is_cooperative(&self) -> bool {
        (0..self.n()).all(|i| self.a.row(i).iter().all(|&v| v <= S::zero()))
    }

    /// The system with every `a_ij` replaced by `-a_ij^-`.
    pub fn cooperative_majorant(&self) -> Self {
        let mut m = self.clone();
        m.a = self.a.map(|v| v.min(S::zero()));
        m
    }

    /// Same system with a different growth vector. Used to build comparison
    /// systems.
    pub fn with_beta(&self, beta: Vec<S>) -> Result<Self, ModelError> {
        let mut form = self.to_canonical();
        form.beta = beta;
        Self::new(form)
    }

    /// Vector field of the delay system given the current state, the
    /// discretely delayed values `x_delayed[(i,j)] = x_j(t - tau_ij)` and the
    /// convolutions `conv[(i,j)] = int K_ij(s) x_j(t-s) ds`.
    pub fn rhs(&self, x_now: &[S], x_delayed: &SquareMatrix<S>, conv: &SquareMatrix<S>) -> Vec<S> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let mut inner = self.beta[i] - self.mu[i] * x_now[i];
                let mut disp = S::zero();
                for j in 0..n {
                    inner -= self.a[(i, j)] * conv[(i, j)];
                    if j != i {
                        disp += self.d[(i, j)] * x_delayed[(i, j)];
                    }
                }
                x_now[i] * inner + disp
            })
            .collect()
    }

    /// Right-hand side of the associated ODE, i.e. [`rhs`](Self::rhs) at a
    /// constant profile. Its zeros are the equilibria of the delay system.
    pub fn ode_rhs(&self, x: &[S]) -> Vec<S> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let mut inner = self.beta[i] - self.mu[i] * x[i];
                let mut disp = S::zero();
                for j in 0..n {
                    inner -= self.a[(i, j)] * x[j];
                    if j != i {
                        disp += self.d[(i, j)] * x[j];
                    }
                }
                x[i] * inner + disp
            })
            .collect()
    }

    /// Smallest positive off-diagonal dispersal delay among pairs that
    /// actually disperse.
    pub fn min_positive_delay(&self) -> Option<S> {
        self.d
            .off_diagonal()
            .filter(|&(_, _, dij)| dij > S::zero())
            .map(|(i, j, _)| self.tau[(i, j)])
            .filter(|&t| t > S::zero())
            .fold(None, |acc: Option<S>, t| Some(acc.map_or(t, |a| a.min(t))))
    }

    /// Bit-level fingerprint of the coefficients. Reports carry it so that a
    /// report cannot be checked against a different system.
    pub fn fingerprint(&self) -> u64 {
        use std::collections::hash_map::DefaultHasher;
        use std::hash::{Hash, Hasher};
        let mut h = DefaultHasher::new();
        let mut put = |v: S| v.as_f64().to_bits().hash(&mut h);
        self.beta.iter().for_each(|&v| put(v));
        self.mu.iter().for_each(|&v| put(v));
        for m in [&self.a, &self.d, &self.tau] {
            m.rows().into_iter().flatten().for_each(&mut put);
        }
        for k in &self.kernels {
            match *k {
                DelayKernel::Exponential { rate } => {
                    put(S::one());
                    put(rate)
                }
                DelayKernel::Erlang { shape, rate } => {
                    put(S::lit(2.0));
                    put(S::from_usize_lossy(shape as usize));
                    put(rate)
                }
                DelayKernel::Uniform { width } => {
                    put(S::lit(3.0));
                    put(width)
                }
            }
        }
        h.finish()
    }
}

/// `n x n` grid filled with one kernel.
pub fn uniform_kernel_grid<S: Scalar>(n: usize, k: DelayKernel<S>) -> Vec<Vec<DelayKernel<S>>> {
    vec![vec![k; n]; n]
}
