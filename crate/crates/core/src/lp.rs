//! Dense two-phase simplex for the small feasibility problems that show up
//! when searching for positive cone vectors.
//!
//! Problems are stated as "maximize `c·x` subject to rows `r·x (<=|>=|=) b`,
//! `x >= 0`". Pivoting follows Bland's rule (lowest eligible index enters and
//! leaves), which never cycles and makes the returned vertex reproducible.

use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct Constraint<S> {
    pub coeffs: Vec<S>,
    pub relation: Relation,
    pub rhs: S,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome<S> {
    Optimal { x: Vec<S>, value: S },
    Infeasible,
    Unbounded,
}

impl<S: Scalar> LpOutcome<S> {
    pub fn optimal(self) -> Option<(Vec<S>, S)> {
        match self {
            LpOutcome::Optimal { x, value } => Some((x, value)),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LinearProgram<S> {
    nvars: usize,
    objective: Vec<S>,
    constraints: Vec<Constraint<S>>,
}

impl<S: Scalar> LinearProgram<S> {
    /// A problem in `nvars` nonnegative variables with a zero objective.
    pub fn new(nvars: usize) -> Self {
        Self { nvars, objective: vec![S::zero(); nvars], constraints: Vec::new() }
    }

    pub fn maximize(mut self, objective: Vec<S>) -> Self {
        assert_eq!(objective.len(), self.nvars);
        self.objective = objective;
        self
    }

    pub fn minimize(self, objective: Vec<S>) -> Self {
        let neg = objective.into_iter().map(|c| -c).collect();
        self.maximize(neg)
    }

    pub fn constrain(&mut self, coeffs: Vec<S>, relation: Relation, rhs: S) -> &mut Self {
        assert_eq!(coeffs.len(), self.nvars);
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Solves the problem. The reported objective value is for the
    /// maximization form (a `minimize` call reports `-min`).
    pub fn solve(&self) -> LpOutcome<S> {
        Tableau::build(self).run()
    }
}

/// Phase bookkeeping for the dense tableau. Column layout: structural
/// variables, then one slack/surplus per inequality row, then one artificial
/// per row that needs one, then the right-hand side.
struct Tableau<S> {
    rows: usize,
    cols: usize,
    nstruct: usize,
    first_artificial: usize,
    t: Vec<S>,
    basis: Vec<usize>,
    objective: Vec<S>,
    pivot_eps: S,
}

impl<S: Scalar> Tableau<S> {
    fn build(lp: &LinearProgram<S>) -> Self {
        let m = lp.constraints.len();
        let nstruct = lp.nvars;
        let nslack = lp.constraints.iter().filter(|c| c.relation != Relation::Eq).count();

        // Normalize each row to a nonnegative right-hand side.
        let rows: Vec<(Vec<S>, Relation, S)> = lp
            .constraints
            .iter()
            .map(|c| {
                if c.rhs < S::zero() {
                    let rel = match c.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (c.coeffs.iter().map(|&v| -v).collect(), rel, -c.rhs)
                } else {
                    (c.coeffs.clone(), c.relation, c.rhs)
                }
            })
            .collect();
        let nart = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let first_artificial = nstruct + nslack;
        let cols = first_artificial + nart + 1;

        let scale = rows.iter().flat_map(|r| r.0.iter().copied().chain(std::iter::once(r.2))).fold(S::one(), |acc, v| acc.max(v.abs()));
        let pivot_eps = S::epsilon() * S::lit(1e4) * scale;

        let mut t = vec![S::zero(); (m + 1) * cols];
        let mut basis = Vec::with_capacity(m);
        let mut slack = nstruct;
        let mut art = first_artificial;
        for (i, (coeffs, rel, rhs)) in rows.iter().enumerate() {
            let row = &mut t[i * cols..(i + 1) * cols];
            row[..nstruct].copy_from_slice(coeffs);
            row[cols - 1] = *rhs;
            match rel {
                Relation::Le => {
                    row[slack] = S::one();
                    basis.push(slack);
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = -S::one();
                    slack += 1;
                    row[art] = S::one();
                    basis.push(art);
                    art += 1;
                }
                Relation::Eq => {
                    row[art] = S::one();
                    basis.push(art);
                    art += 1;
                }
            }
        }
        Tableau { rows: m, cols, nstruct, first_artificial, t, basis, objective: lp.objective.clone(), pivot_eps }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> S {
        self.t[i * self.cols + j]
    }

    /// Writes reduced costs for maximizing `cost` (indexed by column) into
    /// the last tableau row, stored as `-(c_j - z_j)`.
    fn load_objective(&mut self, cost: &[S]) {
        let (m, cols) = (self.rows, self.cols);
        for j in 0..cols {
            let mut z = S::zero();
            for i in 0..m {
                z += cost[self.basis[i]] * self.at(i, j);
            }
            let cj = if j < cols - 1 { cost[j] } else { S::zero() };
            self.t[m * cols + j] = z - cj;
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let cols = self.cols;
        let p = self.at(r, c);
        for j in 0..cols {
            self.t[r * cols + j] /= p;
        }
        for i in 0..=self.rows {
            if i == r {
                continue;
            }
            let f = self.at(i, c);
            if f == S::zero() {
                continue;
            }
            for j in 0..cols {
                let v = self.t[r * cols + j];
                self.t[i * cols + j] -= f * v;
            }
        }
        self.basis[r] = c;
    }

    /// Runs Bland-rule iterations over the allowed columns. Returns false if
    /// the objective is unbounded.
    fn iterate(&mut self, allowed: usize) -> bool {
        let m = self.rows;
        let cols = self.cols;
        let rhs = cols - 1;
        // Bland's rule terminates; the cap only guards against float trouble.
        let cap = 50 * (m + cols) + 1000;
        for _ in 0..cap {
            let entering = (0..allowed).find(|&j| self.at(m, j) < -self.pivot_eps);
            let Some(c) = entering else { return true };
            let mut leave: Option<(usize, S)> = None;
            for i in 0..m {
                let a = self.at(i, c);
                if a > self.pivot_eps {
                    let ratio = self.at(i, rhs) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br || (ratio == br && self.basis[i] < self.basis[bi]) {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return false,
                Some((r, _)) => self.pivot(r, c),
            }
        }
        true
    }

    fn run(mut self) -> LpOutcome<S> {
        let m = self.rows;
        let cols = self.cols;
        let rhs = cols - 1;

        if self.first_artificial < rhs {
            let mut cost = vec![S::zero(); rhs];
            for c in cost.iter_mut().skip(self.first_artificial) {
                *c = -S::one();
            }
            self.load_objective(&cost);
            self.iterate(rhs);
            let infeas: S =
                (0..m).filter(|&i| self.basis[i] >= self.first_artificial).map(|i| self.at(i, rhs)).fold(S::zero(), |a, v| a + v);
            let feas_eps = S::epsilon().sqrt() * S::lit(10.0) * self.pivot_eps.max(S::one());
            if infeas > feas_eps {
                return LpOutcome::Infeasible;
            }
            // Drive remaining zero-level artificials out of the basis.
            for i in 0..m {
                if self.basis[i] >= self.first_artificial {
                    if let Some(c) = (0..self.first_artificial).find(|&j| self.at(i, j).abs() > self.pivot_eps) {
                        self.pivot(i, c);
                    }
                }
            }
        }

        let mut cost = vec![S::zero(); rhs];
        cost[..self.nstruct].copy_from_slice(&self.objective);
        self.load_objective(&cost);
        if !self.iterate(self.first_artificial) {
            return LpOutcome::Unbounded;
        }
        let mut x = vec![S::zero(); self.nstruct];
        for i in 0..m {
            if self.basis[i] < self.nstruct {
                x[self.basis[i]] = self.at(i, rhs).max(S::zero());
            }
        }
        let value = x.iter().zip(&self.objective).fold(S::zero(), |a, (&xi, &ci)| a + xi * ci);
        LpOutcome::Optimal { x, value }
    }
}
