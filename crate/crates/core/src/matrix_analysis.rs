//! Cooperative and Z-matrix machinery: irreducibility, M-matrix tests,
//! spectral bounds, Perron vectors and positive cone vectors.

use serde::Serialize;
use thiserror::Error;

use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::matrix::SquareMatrix;
use crate::scalar::{BandSign, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("matrix is not cooperative: entry ({row},{col}) = {value} is negative")]
    NotCooperative { row: usize, col: usize, value: f64 },
    #[error("matrix is reducible")]
    Reducible,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ZMatrixClass {
    NotZMatrix,
    NonsingularM,
    SingularM,
    NotM,
}

/// Three-way answer of a decision procedure with an undecidable band.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Decision {
    Yes,
    No,
    Undecided,
}

/// Independent routes to "is this Z-matrix a nonsingular M-matrix".
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MTest {
    /// Leading principal minors.
    Minors,
    /// Existence of `q > 0` with `Aq > 0`.
    Cone,
    /// Sign of the spectral bound of `-A`.
    Spectral,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConeSense {
    /// `Mq > 0`
    StrictlyPositiveImage,
    /// `Mq < 0`
    StrictlyNegativeImage,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum JointMode {
    /// `M0 q <= 0`, `N0 q > 0`
    Extinction,
    /// `M0 q < 0`, `N0 q >= 0`
    Gas,
}

/// One block of inequalities `sign * (A q) > 0` or `>= 0`, with the
/// evaluated left-hand side.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockResidual<S> {
    pub label: String,
    pub strict: bool,
    /// `sign * A q`, which must be positive (strict) or nonnegative.
    pub values: Vec<S>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConeCertificate<S> {
    pub q: Vec<S>,
    pub blocks: Vec<BlockResidual<S>>,
}

impl<S: Scalar> ConeCertificate<S> {
    /// Smallest value over the strict blocks (infinity when there are none).
    pub fn strict_margin(&self) -> S {
        self.blocks.iter().filter(|b| b.strict).flat_map(|b| b.values.iter().copied()).fold(S::infinity(), S::min)
    }
}

/// Rounding allowance for a non-strict constraint `a . q >= 0` evaluated in
/// floating point.
fn hard_slack<S: Scalar>(row: &[S], q: &[S]) -> S {
    let mag = row.iter().zip(q).fold(S::zero(), |acc, (&a, &b)| acc + (a * b).abs());
    S::epsilon() * S::lit(64.0) * S::from_usize_lossy(row.len()) * mag.max(S::min_positive_value())
}

/// True iff the graph with an edge `i -> j` for every nonzero off-diagonal
/// entry is strongly connected.
pub fn is_irreducible<S: Scalar>(m: &SquareMatrix<S>) -> bool {
    let n = m.dim();
    if n <= 1 {
        return true;
    }
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                let e = if forward { m[(u, v)] } else { m[(v, u)] };
                if v != u && e != S::zero() && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

fn probe<S: Scalar>(m: &SquareMatrix<S>) -> S {
    S::tolerances().gate * m.norm_inf().max(S::one())
}

pub fn classify_z_matrix<S: Scalar>(m: &SquareMatrix<S>) -> ZMatrixClass {
    if !m.is_z_matrix() {
        return ZMatrixClass::NotZMatrix;
    }
    if m.leading_minors_positive() {
        ZMatrixClass::NonsingularM
    } else if m.shifted(probe(m)).leading_minors_positive() {
        ZMatrixClass::SingularM
    } else {
        ZMatrixClass::NotM
    }
}

fn require_cooperative<S: Scalar>(m: &SquareMatrix<S>) -> Result<(), AnalysisError> {
    match m.off_diagonal().find(|&(_, _, v)| v < S::zero()) {
        Some((row, col, v)) => Err(AnalysisError::NotCooperative { row, col, value: v.as_f64() }),
        None => Ok(()),
    }
}

/// Spectral bound of a cooperative matrix to absolute accuracy `tol`.
pub fn spectral_bound_tol<S: Scalar>(m: &SquareMatrix<S>, tol: S) -> Result<S, AnalysisError> {
    require_cooperative(m)?;
    let n = m.dim();
    // s(M) lies between the largest diagonal entry and the largest row sum.
    let mut lo = (0..n).map(|i| m[(i, i)]).fold(S::neg_infinity(), S::max) - S::one();
    let mut hi = (0..n).map(|i| m.row(i).iter().copied().sum::<S>()).fold(S::neg_infinity(), S::max) + S::one();
    let above = |t: S| m.neg().shifted(t).leading_minors_positive();
    for _ in 0..400 {
        if hi - lo <= tol {
            break;
        }
        let mid = lo + (hi - lo) / S::lit(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if above(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(lo + (hi - lo) / S::lit(2.0))
}

/// Spectral bound `s(M) = max Re(sigma(M))` of a cooperative matrix.
pub fn spectral_bound<S: Scalar>(m: &SquareMatrix<S>) -> Result<S, AnalysisError> {
    spectral_bound_tol(m, S::tolerances().bisection)
}

/// Collatz-Wielandt bracket for `s(M)` from power iteration on
/// `M + cI`, `c = 1 + max |M_ii|`. Valid for any cooperative matrix; tight
/// for irreducible ones.
pub fn power_iteration_bracket<S: Scalar>(m: &SquareMatrix<S>, iters: usize) -> Result<(S, S), AnalysisError> {
    require_cooperative(m)?;
    let n = m.dim();
    let c = S::one() + (0..n).map(|i| m[(i, i)].abs()).fold(S::zero(), S::max);
    let b = m.shifted(c);
    let mut x = vec![S::one(); n];
    let mut bracket = (S::neg_infinity(), S::infinity());
    for _ in 0..iters.max(1) {
        let y = b.mul_vec(&x);
        let (mut lo, mut hi) = (S::infinity(), S::neg_infinity());
        for i in 0..n {
            let r = y[i] / x[i];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        bracket = (bracket.0.max(lo - c), bracket.1.min(hi - c));
        let norm = y.iter().copied().fold(S::zero(), S::max);
        // keep every component strictly positive so the ratios stay defined
        let floor = norm * S::epsilon();
        x = y.iter().map(|&v| (v / norm).max(floor / norm)).collect();
    }
    Ok(bracket)
}

/// Perron root and eigenvector (max entry 1) of a cooperative irreducible
/// matrix.
pub fn perron_vector<S: Scalar>(m: &SquareMatrix<S>) -> Result<(S, Vec<S>), AnalysisError> {
    require_cooperative(m)?;
    if !is_irreducible(m) {
        return Err(AnalysisError::Reducible);
    }
    let n = m.dim();
    let s = spectral_bound_tol(m, S::tolerances().bisection * S::lit(1e-2))?;
    if n == 1 {
        return Ok((s, vec![S::one()]));
    }
    // The leading (n-1) block of sI - M is a nonsingular M-matrix, so fixing
    // the last component leaves a well-posed linear system.
    let b = m.neg().shifted(s);
    let keep: Vec<usize> = (0..n - 1).collect();
    let b11 = b.principal_submatrix(&keep);
    let rhs: Vec<S> = (0..n - 1).map(|i| -b[(i, n - 1)]).collect();
    let mut v = match b11.solve(&rhs) {
        Some(mut v1) => {
            v1.push(S::one());
            v1
        }
        None => vec![S::one(); n],
    };
    // Two steps of shifted inverse iteration clean up the residual.
    let shift = S::lit(1e-7) * m.norm_inf().max(S::one());
    let c = m.neg().shifted(s + shift);
    if let Some(lu) = c.lu() {
        for _ in 0..2 {
            let w = lu.solve(&v);
            let top = w.iter().map(|x| x.abs()).fold(S::zero(), S::max);
            if top > S::zero() && w.iter().all(|x| x.is_finite()) {
                v = w.iter().map(|&x| x / top).collect();
            }
        }
    }
    let top = v.iter().map(|x| x.abs()).fold(S::zero(), S::max);
    let v: Vec<S> = v.iter().map(|&x| (x / top).abs()).collect();
    Ok((s, v))
}

/// Cone feasibility problem in `q > 0`:
///
/// * strict rows `r . q > 0`, realized as a maximized common margin,
/// * hard rows `h . q >= 0`,
/// * scale fixed by `sum q = n` or by pinned components,
/// * `q_i >= cone_floor`.
#[derive(Clone, Debug)]
pub struct ConeProblem<S> {
    n: usize,
    strict: Vec<(String, SquareMatrix<S>)>,
    hard: Vec<(String, SquareMatrix<S>)>,
    pins: Vec<(usize, S)>,
}

impl<S: Scalar> ConeProblem<S> {
    pub fn new(n: usize) -> Self {
        Self { n, strict: Vec::new(), hard: Vec::new(), pins: Vec::new() }
    }

    /// Requires `A q > 0`.
    pub fn strict(mut self, label: impl Into<String>, a: SquareMatrix<S>) -> Self {
        assert_eq!(a.dim(), self.n);
        self.strict.push((label.into(), a));
        self
    }

    /// Requires `A q >= 0`.
    pub fn hard(mut self, label: impl Into<String>, a: SquareMatrix<S>) -> Self {
        assert_eq!(a.dim(), self.n);
        self.hard.push((label.into(), a));
        self
    }

    /// Fixes `q_i = value`; replaces the `sum q = n` normalization.
    pub fn pin(mut self, i: usize, value: S) -> Self {
        self.pins.push((i, value));
        self
    }

    /// Best achievable strict margin (normalized) together with the
    /// maximizing vector, or `None` when even the hard block is infeasible.
    pub fn optimize(&self) -> Option<(S, Vec<S>)> {
        let n = self.n;
        let tol = S::tolerances();
        let eta = tol.cone_floor;
        let strict_rows: Vec<Vec<S>> = self.strict.iter().flat_map(|(_, a)| a.rows()).collect();
        let hard_rows: Vec<Vec<S>> = self.hard.iter().flat_map(|(_, a)| a.rows()).collect();
        let has_t = !strict_rows.is_empty();
        let nv = n + usize::from(has_t);
        let big = S::one()
            + strict_rows.iter().map(|r| r.iter().fold(S::zero(), |a, v| a + v.abs())).fold(S::zero(), S::max) * S::from_usize_lossy(n);

        let mut lp = LinearProgram::new(nv);
        if has_t {
            let mut obj = vec![S::zero(); nv];
            obj[n] = S::one();
            lp = lp.maximize(obj);
        }
        // q = eta + p, t = t' - big
        for r in &strict_rows {
            let mut c = r.clone();
            c.push(-S::one());
            let rsum: S = r.iter().copied().sum();
            lp.constrain(c, Relation::Ge, -big - eta * rsum);
        }
        for r in &hard_rows {
            let mut c = r.clone();
            if has_t {
                c.push(S::zero());
            }
            let rsum: S = r.iter().copied().sum();
            lp.constrain(c, Relation::Ge, -eta * rsum);
        }
        if self.pins.is_empty() {
            let mut c = vec![S::one(); n];
            if has_t {
                c.push(S::zero());
            }
            lp.constrain(c, Relation::Eq, S::from_usize_lossy(n) * (S::one() - eta));
        } else {
            for &(i, v) in &self.pins {
                let mut c = vec![S::zero(); nv];
                c[i] = S::one();
                lp.constrain(c, Relation::Eq, v - eta);
            }
            if has_t {
                // free components may otherwise let the margin grow without bound
                let mut c = vec![S::zero(); nv];
                c[n] = S::one();
                lp.constrain(c, Relation::Le, big + S::one());
            }
        }
        match lp.solve() {
            LpOutcome::Optimal { x, .. } => {
                let q: Vec<S> = x[..n].iter().map(|&p| p + eta).collect();
                let t = if has_t {
                    strict_rows.iter().map(|r| r.iter().zip(&q).fold(S::zero(), |a, (&c, &v)| a + c * v)).fold(S::infinity(), S::min)
                } else {
                    S::infinity()
                };
                Some((t, q))
            }
            LpOutcome::Infeasible | LpOutcome::Unbounded => None,
        }
    }

    /// Solves and re-verifies. Strict blocks must clear the feasibility
    /// tolerance; hard blocks must hold up to rounding.
    pub fn solve(&self) -> Option<ConeCertificate<S>> {
        let (t, q) = self.optimize()?;
        if !self.strict.is_empty() && !(t > S::tolerances().feasibility) {
            return None;
        }
        self.certify(&q)
    }

    /// Evaluates all blocks at `q` and returns a certificate if every
    /// inequality holds.
    pub fn certify(&self, q: &[S]) -> Option<ConeCertificate<S>> {
        if q.len() != self.n || q.iter().any(|&v| !(v > S::zero())) {
            return None;
        }
        let mut blocks = Vec::new();
        for (label, a) in &self.strict {
            let values = a.mul_vec(q);
            if values.iter().any(|&v| !(v > S::zero())) {
                return None;
            }
            blocks.push(BlockResidual { label: label.clone(), strict: true, values });
        }
        for (label, a) in &self.hard {
            let values = a.mul_vec(q);
            for (i, &v) in values.iter().enumerate() {
                if v < -hard_slack(a.row(i), q) {
                    return None;
                }
            }
            blocks.push(BlockResidual { label: label.clone(), strict: false, values });
        }
        Some(ConeCertificate { q: q.to_vec(), blocks })
    }
}

/// Looks for `q > 0` with `Mq > 0` (or `Mq < 0`).
pub fn positive_improving_vector<S: Scalar>(m: &SquareMatrix<S>, sense: ConeSense) -> Option<ConeCertificate<S>> {
    let n = m.dim();
    match sense {
        ConeSense::StrictlyPositiveImage => ConeProblem::new(n).strict("M q > 0", m.clone()).solve(),
        ConeSense::StrictlyNegativeImage => ConeProblem::new(n).strict("-M q > 0", m.neg()).solve(),
    }
}

/// Joint cone conditions on the community matrix and `N0`.
pub fn joint_cone_problem<S: Scalar>(m0: &SquareMatrix<S>, n0: &SquareMatrix<S>, mode: JointMode) -> ConeProblem<S> {
    let n = m0.dim();
    match mode {
        JointMode::Extinction => ConeProblem::new(n).strict("N0 q > 0", n0.clone()).hard("-M0 q >= 0", m0.neg()),
        JointMode::Gas => ConeProblem::new(n).strict("-M0 q > 0", m0.neg()).hard("N0 q >= 0", n0.clone()),
    }
}

pub fn joint_cone_feasibility<S: Scalar>(m0: &SquareMatrix<S>, n0: &SquareMatrix<S>, mode: JointMode) -> Option<ConeCertificate<S>> {
    joint_cone_problem(m0, n0, mode).solve()
}

/// `q > 0` with `Aq > 0` exists. Unlike [`positive_improving_vector`] the
/// optimal margin only has to clear rounding, so shifts of size `gate` are
/// resolved.
fn cone_margin_positive<S: Scalar>(a: &SquareMatrix<S>) -> bool {
    let n = a.dim();
    let p = ConeProblem::new(n).strict("A q > 0", a.clone());
    let floor = S::epsilon() * S::lit(64.0) * S::from_usize_lossy(n) * a.norm_inf().max(S::one());
    match p.optimize() {
        Some((t, q)) => t > floor && p.certify(&q).is_some(),
        None => false,
    }
}

/// Decides whether the Z-matrix `a` is a nonsingular M-matrix by one of
/// three independent routes. Cases whose spectral bound of `-a` lies within
/// the gate band of 0 come back `Undecided` from every route.
pub fn decide_nonsingular_m<S: Scalar>(a: &SquareMatrix<S>, test: MTest) -> Decision {
    if !a.is_z_matrix() {
        return Decision::No;
    }
    let delta = S::tolerances().gate;
    let banded = |holds: &dyn Fn(&SquareMatrix<S>) -> bool| {
        if holds(&a.shifted(-delta)) {
            Decision::Yes
        } else if holds(&a.shifted(delta)) {
            Decision::Undecided
        } else {
            Decision::No
        }
    };
    match test {
        MTest::Minors => banded(&|m| m.leading_minors_positive()),
        MTest::Cone => banded(&cone_margin_positive),
        MTest::Spectral => match spectral_bound(&a.neg()) {
            Ok(s) => match BandSign::of(s, delta) {
                BandSign::Negative => Decision::Yes,
                BandSign::Positive => Decision::No,
                BandSign::Boundary => Decision::Undecided,
            },
            Err(_) => Decision::No,
        },
    }
}
