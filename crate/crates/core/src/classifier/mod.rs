//! Theorem-by-theorem classification of a patch system.
//!
//! Every criterion is evaluated independently and reports `Proven` with the
//! vectors and constants that witness its hypotheses, `HypothesisFailed`
//! naming the first hypothesis that does not hold, or `Inconclusive` when a
//! strict condition falls inside the numerical gate band. A summary is then
//! read off the verdicts by fixed precedence.

mod verify;

#[cfg(test)]
mod tests;

use std::fmt;

use serde::Serialize;

use crate::characteristic::dominant_real_char_root;
use crate::equilibrium::{coefficient_bound, equilibrium_residual, find_equilibria, EquilibriumOptions, EquilibriumSet};
use crate::matrix::SquareMatrix;
use crate::matrix_analysis::{
    classify_z_matrix, is_irreducible, joint_cone_feasibility, perron_vector, positive_improving_vector, spectral_bound, BlockResidual,
    ConeCertificate, ConeProblem, ConeSense, JointMode, ZMatrixClass,
};
use crate::model::{neg_part, pos_part, DerivedMatrices, LVPatchSystem};
use crate::scalar::{max_abs, BandSign, Scalar};

pub use verify::{
    default_histories, expectations_for, verify_expectations, verify_prediction, CheckOutcome, Expectation, Thresholds, TrialOutcome,
    VerificationReport, VerifyError, VerifyOptions,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum TheoremId {
    ZeroLocalStability,
    ZeroInstability,
    BoundednessViaN0,
    ExtinctionAttractive,
    ZeroGAS,
    NoPatchExtinction,
    CompetitiveExtinction,
    CoopPersistence,
    CoopGlobalAttractivity,
    CoopPositiveBeta,
    CoopThresholdIrreducible,
    PositiveEqExists,
    Dissipativity,
    TotalPersistenceWeak,
    TotalPersistenceUniform,
    PatchPersistence,
    PositiveEqAttractive,
    PositiveDispersalAttractive,
    CoefficientCriterion,
}

impl TheoremId {
    pub const ALL: [TheoremId; 19] = [
        TheoremId::ZeroLocalStability,
        TheoremId::ZeroInstability,
        TheoremId::BoundednessViaN0,
        TheoremId::ExtinctionAttractive,
        TheoremId::ZeroGAS,
        TheoremId::NoPatchExtinction,
        TheoremId::CompetitiveExtinction,
        TheoremId::CoopPersistence,
        TheoremId::CoopGlobalAttractivity,
        TheoremId::CoopPositiveBeta,
        TheoremId::CoopThresholdIrreducible,
        TheoremId::PositiveEqExists,
        TheoremId::Dissipativity,
        TheoremId::TotalPersistenceWeak,
        TheoremId::TotalPersistenceUniform,
        TheoremId::PatchPersistence,
        TheoremId::PositiveEqAttractive,
        TheoremId::PositiveDispersalAttractive,
        TheoremId::CoefficientCriterion,
    ];

    /// What the criterion concludes when its hypotheses hold.
    pub fn conclusion(self) -> &'static str {
        use TheoremId::*;
        match self {
            ZeroLocalStability => "0 is hyperbolic and locally asymptotically stable",
            ZeroInstability => "0 is unstable",
            BoundednessViaN0 => "all positive solutions are bounded",
            ExtinctionAttractive => "all populations go extinct",
            ZeroGAS => "0 is globally asymptotically stable",
            NoPatchExtinction => "0 is globally attractive (no dispersal)",
            CompetitiveExtinction => "0 is globally attractive (competitive interactions)",
            CoopPersistence => "persistence, with a positive equilibrium",
            CoopGlobalAttractivity => "the positive equilibrium is a global attractor",
            CoopPositiveBeta => "the positive equilibrium is a global attractor (positive growth rates)",
            CoopThresholdIrreducible => "threshold dichotomy on the sign of s(M0)",
            PositiveEqExists => "a positive equilibrium exists",
            Dissipativity => "limsup x_i <= X*_i for every positive solution",
            TotalPersistenceWeak => "the total population is weakly persistent",
            TotalPersistenceUniform => "the total population is uniformly persistent",
            PatchPersistence => "every patch persists and a positive equilibrium exists",
            PositiveEqAttractive => "the positive equilibrium is globally attractive",
            PositiveDispersalAttractive => "the positive equilibrium is globally attractive (positive dispersal)",
            CoefficientCriterion => "persistence, or global attractivity, from coefficient inequalities",
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "detail")]
pub enum Status {
    Proven,
    /// Names the hypothesis that does not hold.
    HypothesisFailed(String),
    /// A strict condition is within the gate band of equality.
    Inconclusive(String),
}

impl Status {
    fn failed(what: impl Into<String>) -> Self {
        Status::HypothesisFailed(what.into())
    }

    fn boundary(what: impl Into<String>) -> Self {
        Status::Inconclusive(what.into())
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Proven => write!(f, "Proven"),
            Status::HypothesisFailed(h) => write!(f, "HypothesisFailed({h})"),
            Status::Inconclusive(r) => write!(f, "Inconclusive({r})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CoefficientTier {
    Persistence,
    Attractivity,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ThresholdBranch {
    /// `s(M0) < 0`: 0 attracts every positive solution.
    Extinction,
    /// `s(M0) > 0`: the positive equilibrium attracts every positive solution.
    PositiveAttractor,
}

/// A named scalar that must be positive for the verdict to hold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Margin<S> {
    pub label: String,
    pub value: S,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Certificates<S> {
    /// Cone vector for the trivial-equilibrium criteria.
    pub q: Option<ConeCertificate<S>>,
    /// `v > 0` with `M0 v > 0`.
    pub v: Option<ConeCertificate<S>>,
    /// Positive equilibrium `X*` of the cooperative majorant.
    pub majorant_equilibrium: Option<Vec<S>>,
    /// Positive equilibrium `x*` of the system itself.
    pub equilibrium: Option<Vec<S>>,
    pub spectral_bound: Option<S>,
    pub lambda_star: Option<S>,
    pub coefficient_bound: Option<S>,
    /// Lower bound `theta_1` on the liminf of the total population.
    pub persistence_floor: Option<S>,
    pub tier: Option<CoefficientTier>,
    pub branch: Option<ThresholdBranch>,
    pub margins: Vec<Margin<S>>,
}

impl<S: Scalar> Certificates<S> {
    fn margin(mut self, label: &str, value: S) -> Self {
        self.margins.push(Margin { label: label.into(), value });
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoremVerdict<S> {
    pub id: TheoremId,
    pub status: Status,
    pub certificates: Certificates<S>,
    pub note: Option<String>,
}

impl<S> TheoremVerdict<S> {
    pub fn is_proven(&self) -> bool {
        self.status == Status::Proven
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Summary {
    ExtinctionGuaranteed,
    PositiveEquilibriumGloballyAttractive,
    PersistentNoAttractivityProof,
    ZeroUnstableNoFurtherProof,
    FullyInconclusive,
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationReport<S> {
    /// Fingerprint of the classified system; verification refuses any other.
    pub fingerprint: u64,
    pub dim: usize,
    pub cooperative: bool,
    pub matrices: DerivedMatrices<S>,
    pub spectral_bound: S,
    pub verdicts: Vec<TheoremVerdict<S>>,
    pub summary: Summary,
    /// Proven verdicts the summary rests on.
    pub provenance: Vec<TheoremId>,
    /// The globally attractive equilibrium, when the summary says there is one.
    pub attractor: Option<Vec<S>>,
    pub equilibria: EquilibriumSet<S>,
    /// Broken implications, exclusions or certificates. Always empty unless
    /// something is wrong with the numerics.
    pub invariant_violations: Vec<String>,
}

impl<S: Scalar> ClassificationReport<S> {
    pub fn verdict(&self, id: TheoremId) -> &TheoremVerdict<S> {
        self.verdicts.iter().find(|v| v.id == id).expect("every theorem is evaluated")
    }

    pub fn is_proven(&self, id: TheoremId) -> bool {
        self.verdict(id).is_proven()
    }
}

type Check<S> = Result<Certificates<S>, Status>;

/// Quantities shared by all criteria, computed once.
struct Analysis<'a, S: Scalar> {
    sys: &'a LVPatchSystem<S>,
    n: usize,
    dm: DerivedMatrices<S>,
    gate: S,
    s0: S,
    band: BandSign,
    irreducible: bool,
    n0_class: ZMatrixClass,
    v: Option<ConeCertificate<S>>,
    equilibria: EquilibriumSet<S>,
    majorant: LVPatchSystem<S>,
    majorant_equilibria: EquilibriumSet<S>,
}

fn min_of<S: Scalar>(v: &[S]) -> S {
    v.iter().copied().fold(S::infinity(), S::min)
}

/// Rounding allowance for a non-strict comparison at magnitude `scale`.
fn slack<S: Scalar>(scale: S) -> S {
    S::epsilon() * S::lit(64.0) * scale.abs().max(S::one())
}

impl<'a, S: Scalar> Analysis<'a, S> {
    fn new(sys: &'a LVPatchSystem<S>) -> Self {
        let dm = sys.derived_matrices();
        let gate = S::tolerances().gate;
        let s0 = spectral_bound(&dm.m0).expect("M0 is cooperative");
        let opts = EquilibriumOptions::default();
        let equilibria = find_equilibria(sys, &opts);
        let majorant = sys.cooperative_majorant();
        let majorant_equilibria = if sys.is_cooperative() { equilibria.clone() } else { find_equilibria(&majorant, &opts) };
        Self {
            sys,
            n: sys.n(),
            gate,
            s0,
            band: BandSign::of(s0, gate),
            irreducible: is_irreducible(&dm.m0),
            n0_class: classify_z_matrix(&dm.n0),
            v: positive_improving_vector(&dm.m0, ConeSense::StrictlyPositiveImage),
            dm,
            equilibria,
            majorant,
            majorant_equilibria,
        }
    }

    fn positive(&self, label: &str, values: &[S]) -> Result<S, Status> {
        let m = min_of(values);
        match BandSign::of(m, self.gate) {
            BandSign::Positive => Ok(m),
            BandSign::Boundary => Err(Status::boundary(format!("{label}: smallest entry {m} is within the gate"))),
            BandSign::Negative => Err(Status::failed(label)),
        }
    }

    fn n0_nonsingular(&self) -> Result<(), Status> {
        match self.n0_class {
            ZMatrixClass::NonsingularM => Ok(()),
            ZMatrixClass::SingularM => Err(Status::boundary("N0 is an M-matrix within the gate of singular")),
            _ => Err(Status::failed("N0 is a nonsingular M-matrix")),
        }
    }

    fn v_vector(&self) -> Result<ConeCertificate<S>, Status> {
        match (&self.v, self.band) {
            (Some(v), _) => Ok(v.clone()),
            (None, BandSign::Boundary) => Err(Status::boundary("no v > 0 with M0 v > 0 and s(M0) is within the gate")),
            (None, _) => Err(Status::failed("exists v > 0 with M0 v > 0")),
        }
    }

    fn beta_positive(&self) -> Result<S, Status> {
        self.positive("beta > 0", self.sys.beta())
    }

    fn interior(&self) -> Vec<Vec<S>> {
        self.equilibria.interior().map(|p| p.x.clone()).collect()
    }

    /// The unique located positive equilibrium with `m x > 0`.
    fn attractor_candidate(&self, m: &SquareMatrix<S>, label: &str) -> Result<Vec<S>, Status> {
        let interior = self.interior();
        if interior.is_empty() {
            return Err(Status::boundary("no positive equilibrium located"));
        }
        let mut last_err = None;
        let mut hits = Vec::new();
        for x in interior {
            match self.positive(label, &m.mul_vec(&x)) {
                Ok(_) => hits.push(x),
                Err(e) => last_err = Some(e),
            }
        }
        match hits.len() {
            1 => Ok(hits.pop().unwrap()),
            0 => Err(last_err.expect("at least one candidate was rejected")),
            k => Err(Status::boundary(format!("{k} positive equilibria satisfy {label}"))),
        }
    }

    /// Unique located positive equilibrium, for attaching to verdicts whose
    /// hypotheses already imply one.
    fn unique_interior(&self) -> Option<Vec<S>> {
        let mut it = self.interior();
        (it.len() == 1).then(|| it.pop().unwrap())
    }

    /// `X*`: positive equilibrium of the cooperative majorant.
    fn majorant_equilibrium(&self) -> Result<Vec<S>, Status> {
        let pts: Vec<Vec<S>> = self.majorant_equilibria.interior().map(|p| p.x.clone()).collect();
        match pts.len() {
            0 => Err(Status::boundary("no positive equilibrium of the majorant located")),
            1 => Ok(pts.into_iter().next().unwrap()),
            k => Err(Status::boundary(format!("majorant has {k} positive equilibria"))),
        }
    }

    fn spectral_failure(&self, wanted: BandSign, hypothesis: &str) -> Result<(), Status> {
        match self.band {
            b if b == wanted => Ok(()),
            BandSign::Boundary => Err(Status::boundary(format!("|s(M0)| = {} is within the gate", self.s0.abs()))),
            _ => Err(Status::failed(hypothesis)),
        }
    }

    // ---- trivial equilibrium ----

    fn zero_local_stability(&self) -> Check<S> {
        self.spectral_failure(BandSign::Negative, "s(M0) < 0")?;
        Ok(Certificates { spectral_bound: Some(self.s0), ..Default::default() })
    }

    fn zero_instability(&self) -> Check<S> {
        self.spectral_failure(BandSign::Positive, "s(M0) > 0")?;
        let root = dominant_real_char_root(self.sys);
        Ok(Certificates { spectral_bound: Some(self.s0), lambda_star: root.lambda_star(), ..Default::default() })
    }

    fn boundedness(&self) -> Check<S> {
        self.n0_nonsingular()?;
        let pivot = min_of(&self.dm.n0.leading_pivots());
        Ok(Certificates::default().margin("smallest leading pivot of N0", pivot))
    }

    fn extinction_attractive(&self) -> Check<S> {
        let q = joint_cone_feasibility(&self.dm.m0, &self.dm.n0, JointMode::Extinction)
            .ok_or_else(|| Status::failed("exists q > 0 with M0 q <= 0 and N0 q > 0"))?;
        Ok(Certificates { q: Some(q), ..Default::default() })
    }

    fn zero_gas(&self) -> Check<S> {
        let q = joint_cone_feasibility(&self.dm.m0, &self.dm.n0, JointMode::Gas)
            .ok_or_else(|| Status::failed("exists q > 0 with M0 q < 0 and N0 q >= 0"))?;
        Ok(Certificates { q: Some(q), ..Default::default() })
    }

    fn no_patch_extinction(&self) -> Check<S> {
        if self.sys.d().off_diagonal().any(|(_, _, v)| v != S::zero()) {
            return Err(Status::failed("no dispersal (d = 0)"));
        }
        let beta = self.sys.beta();
        let top = beta.iter().copied().fold(S::neg_infinity(), S::max);
        if self.n0_class == ZMatrixClass::NonsingularM && top <= S::zero() {
            return Ok(Certificates::default().margin("-max beta", -top));
        }
        if top < -self.gate {
            if let Some(q) = ConeProblem::new(self.n).hard("N0 q >= 0", self.dm.n0.clone()).solve() {
                return Ok(Certificates { q: Some(q), ..Default::default() }.margin("-max beta", -top));
            }
        }
        Err(Status::failed("N0 nonsingular M-matrix with beta <= 0, or N0 q >= 0 for some q > 0 with beta < 0"))
    }

    fn competitive_extinction(&self) -> Check<S> {
        let (sys, n) = (self.sys, self.n);
        for i in 0..n {
            if !(sys.mu()[i] - neg_part(sys.a()[(i, i)]) > self.gate) {
                return Err(Status::failed(format!("mu_{} > a_{}{}^-", i + 1, i + 1, i + 1)));
            }
        }
        if let Some((i, j, _)) = sys.a().off_diagonal().find(|&(_, _, v)| v < S::zero()) {
            return Err(Status::failed(format!("competitive interactions (a_{}{} >= 0)", i + 1, j + 1)));
        }
        let m0 = &self.dm.m0;
        let cert = |q: ConeCertificate<S>, label: &str, value: S| {
            Certificates { q: Some(q), spectral_bound: Some(self.s0), ..Default::default() }.margin(label, value)
        };
        if self.band == BandSign::Negative {
            if let Some(q) = positive_improving_vector(m0, ConeSense::StrictlyNegativeImage) {
                return Ok(cert(q, "-s(M0)", -self.s0));
            }
        }
        if self.band == BandSign::Boundary && self.irreducible {
            let (_, q) = perron_vector(m0).expect("M0 is cooperative and irreducible");
            let values = m0.neg().mul_vec(&q);
            let block = BlockResidual { label: "-M0 q >= 0".into(), strict: false, values };
            return Ok(cert(ConeCertificate { q, blocks: vec![block] }, "gate - |s(M0)| (irreducible)", self.gate - self.s0.abs()));
        }
        let q = ConeProblem::new(n).hard("-M0 q >= 0", m0.neg()).solve().ok_or_else(|| Status::failed("exists q > 0 with M0 q <= 0"))?;
        Ok(Certificates { q: Some(q), spectral_bound: Some(self.s0), ..Default::default() })
    }

    // ---- cooperative systems ----

    fn require_cooperative(&self) -> Result<(), Status> {
        if self.sys.is_cooperative() {
            Ok(())
        } else {
            Err(Status::failed("cooperative system (a <= 0)"))
        }
    }

    fn coop_persistence(&self) -> Check<S> {
        self.require_cooperative()?;
        let v = self.v_vector()?;
        Ok(Certificates { v: Some(v), equilibrium: self.unique_interior(), ..Default::default() })
    }

    fn coop_global_attractivity(&self) -> Check<S> {
        self.require_cooperative()?;
        let v = self.v_vector()?;
        self.n0_nonsingular()?;
        let x = self.attractor_candidate(&self.dm.m0, "M0 x* > 0")?;
        let m = min_of(&self.dm.m0.mul_vec(&x));
        Ok(Certificates { v: Some(v), equilibrium: Some(x), ..Default::default() }.margin("min M0 x*", m))
    }

    fn coop_positive_beta(&self) -> Check<S> {
        self.require_cooperative()?;
        self.n0_nonsingular()?;
        let b = self.beta_positive()?;
        Ok(Certificates { equilibrium: self.unique_interior(), ..Default::default() }.margin("min beta", b))
    }

    fn coop_threshold(&self) -> Check<S> {
        self.require_cooperative()?;
        let sys = self.sys;
        if let Some((i, j, _)) = sys.a().off_diagonal().find(|&(_, _, v)| v != S::zero()) {
            return Err(Status::failed(format!("self-interaction only (a_{}{} = 0)", i + 1, j + 1)));
        }
        for i in 0..self.n {
            if !(sys.mu()[i] - neg_part(sys.a()[(i, i)]) > self.gate) {
                return Err(Status::failed(format!("mu_{} > c_{}", i + 1, i + 1)));
            }
        }
        if !self.irreducible {
            return Err(Status::failed("M0 irreducible"));
        }
        let base = Certificates { spectral_bound: Some(self.s0), ..Default::default() };
        match self.band {
            BandSign::Negative => Ok(Certificates { branch: Some(ThresholdBranch::Extinction), ..base }.margin("-s(M0)", -self.s0)),
            BandSign::Positive => {
                let x = self.unique_interior().ok_or_else(|| Status::boundary("no unique positive equilibrium located"))?;
                Ok(Certificates { branch: Some(ThresholdBranch::PositiveAttractor), equilibrium: Some(x), ..base }.margin("s(M0)", self.s0))
            }
            BandSign::Boundary => Err(Status::boundary(format!("|s(M0)| = {} is within the gate", self.s0.abs()))),
        }
    }

    // ---- general systems ----

    fn dissipativity(&self) -> Check<S> {
        let v = self.v_vector()?;
        self.n0_nonsingular()?;
        let xm = self.majorant_equilibrium()?;
        let m = self.positive("M0 X* > 0", &self.dm.m0.mul_vec(&xm))?;
        Ok(Certificates { v: Some(v), majorant_equilibrium: Some(xm), ..Default::default() }.margin("min M0 X*", m))
    }

    fn total_persistence_weak(&self) -> Check<S> {
        self.dissipativity()
    }

    fn total_persistence_uniform(&self) -> Check<S> {
        let c = self.dissipativity()?;
        let b = self.beta_positive()?;
        let (sys, n) = (self.sys, self.n);
        let theta = (0..n)
            .map(|i| sys.beta()[i] / (sys.mu()[i] + (0..n).map(|j| pos_part(sys.a()[(i, j)])).sum::<S>()))
            .fold(S::infinity(), S::min);
        Ok(Certificates { persistence_floor: Some(theta), ..c }.margin("min beta", b))
    }

    fn patch_persistence(&self) -> Check<S> {
        let c = self.dissipativity()?;
        let xm = c.majorant_equilibrium.clone().expect("dissipativity attaches X*");
        let m = self.positive("Nhat X* > 0", &self.dm.nhat.mul_vec(&xm))?;
        Ok(c.margin("min Nhat X*", m))
    }

    fn positive_eq_exists(&self) -> Check<S> {
        let base = match self.patch_persistence() {
            Ok(c) => c,
            Err(patch) => {
                if self.band != BandSign::Positive {
                    return Err(match self.spectral_failure(BandSign::Positive, "s(M0) > 0") {
                        Err(e) => e,
                        Ok(()) => patch,
                    });
                }
                let c = self.dissipativity()?;
                if !self.irreducible {
                    return Err(Status::failed("M0 irreducible (or patch persistence)"));
                }
                Certificates { spectral_bound: Some(self.s0), ..c }
            }
        };
        let x = self.interior().into_iter().next().ok_or_else(|| Status::boundary("no positive equilibrium located"))?;
        Ok(Certificates { equilibrium: Some(x), ..base })
    }

    fn positive_eq_attractive(&self) -> Check<S> {
        let c = self.patch_persistence()?;
        let x = self.attractor_candidate(&self.dm.nhat, "Nhat x* > 0")?;
        let m = min_of(&self.dm.nhat.mul_vec(&x));
        Ok(Certificates { equilibrium: Some(x), ..c }.margin("min Nhat x*", m))
    }

    fn positive_dispersal_attractive(&self) -> Check<S> {
        self.n0_nonsingular()?;
        let b = self.beta_positive()?;
        let d: Vec<S> = self.sys.d().off_diagonal().map(|(_, _, v)| v).collect();
        if !d.is_empty() {
            self.positive("d_ij > 0 for all i != j", &d)?;
        }
        let x = self.attractor_candidate(&self.dm.nhat, "Nhat x* > 0")?;
        let m = min_of(&self.dm.nhat.mul_vec(&x));
        Ok(Certificates { equilibrium: Some(x), ..Default::default() }.margin("min beta", b).margin("min Nhat x*", m))
    }

    fn coefficient_criterion(&self) -> Check<S> {
        let m = coefficient_bound(self.sys).ok_or_else(|| Status::failed("mu_i > sum_j a_ij^-"))?;
        if !(m > S::zero()) {
            return Err(Status::failed("M > 0"));
        }
        coefficient_tier_holds(self.sys, m, S::one(), self.gate).map_err(Status::failed)?;
        let tier = match coefficient_tier_holds(self.sys, m, S::lit(2.0), self.gate) {
            Ok(()) => CoefficientTier::Attractivity,
            Err(_) => CoefficientTier::Persistence,
        };
        let equilibrium = if tier == CoefficientTier::Attractivity { self.unique_interior() } else { None };
        Ok(Certificates { coefficient_bound: Some(m), tier: Some(tier), equilibrium, ..Default::default() })
    }

    fn evaluate(&self, id: TheoremId) -> TheoremVerdict<S> {
        use TheoremId::*;
        let result = match id {
            ZeroLocalStability => self.zero_local_stability(),
            ZeroInstability => self.zero_instability(),
            BoundednessViaN0 => self.boundedness(),
            ExtinctionAttractive => self.extinction_attractive(),
            ZeroGAS => self.zero_gas(),
            NoPatchExtinction => self.no_patch_extinction(),
            CompetitiveExtinction => self.competitive_extinction(),
            CoopPersistence => self.coop_persistence(),
            CoopGlobalAttractivity => self.coop_global_attractivity(),
            CoopPositiveBeta => self.coop_positive_beta(),
            CoopThresholdIrreducible => self.coop_threshold(),
            PositiveEqExists => self.positive_eq_exists(),
            Dissipativity => self.dissipativity(),
            TotalPersistenceWeak => self.total_persistence_weak(),
            TotalPersistenceUniform => self.total_persistence_uniform(),
            PatchPersistence => self.patch_persistence(),
            PositiveEqAttractive => self.positive_eq_attractive(),
            PositiveDispersalAttractive => self.positive_dispersal_attractive(),
            CoefficientCriterion => self.coefficient_criterion(),
        };
        let note = match id {
            TotalPersistenceWeak => Some("checked numerically via the trailing-window sup of the total (operational stand-in)".into()),
            PositiveEqAttractive | PositiveDispersalAttractive => {
                Some("globally attractive equilibrium found; uniqueness is not claimed".into())
            }
            _ => None,
        };
        match result {
            Ok(certificates) => TheoremVerdict { id, status: Status::Proven, certificates, note },
            Err(status) => TheoremVerdict { id, status, certificates: Certificates::default(), note },
        }
    }
}

/// Checks the coefficient inequalities with multiplier `k M`:
/// `beta_i >= kM a_ii^+`, `d_ij >= kM a_ij^+` and
/// `beta_i + sum_{j != i} d_ij > kM sum_j a_ij^+`.
fn coefficient_tier_holds<S: Scalar>(sys: &LVPatchSystem<S>, m: S, k: S, gate: S) -> Result<(), String> {
    let n = sys.n();
    let km = k * m;
    for i in 0..n {
        let bi = sys.beta()[i];
        let aii = pos_part(sys.a()[(i, i)]);
        if bi < km * aii - slack(bi) {
            return Err(format!("beta_{} >= {k}M a_{}{}^+", i + 1, i + 1, i + 1));
        }
        let mut lhs = bi;
        let mut rhs = S::zero();
        for j in 0..n {
            let apos = pos_part(sys.a()[(i, j)]);
            rhs += km * apos;
            if j != i {
                let dij = sys.d()[(i, j)];
                if dij < km * apos - slack(dij) {
                    return Err(format!("d_{}{} >= {k}M a_{}{}^+", i + 1, j + 1, i + 1, j + 1));
                }
                lhs += dij;
            }
        }
        if !(lhs - rhs > gate) {
            return Err(format!("beta_{} + sum_j d_{}j > {k}M sum_j a_{}j^+", i + 1, i + 1, i + 1));
        }
    }
    Ok(())
}

pub fn classify_trivial_equilibrium<S: Scalar>(sys: &LVPatchSystem<S>) -> Vec<TheoremVerdict<S>> {
    evaluate_all(&Analysis::new(sys), &TheoremId::ALL[..7])
}

pub fn classify_cooperative<S: Scalar>(sys: &LVPatchSystem<S>) -> Vec<TheoremVerdict<S>> {
    evaluate_all(&Analysis::new(sys), &TheoremId::ALL[7..11])
}

pub fn classify_general<S: Scalar>(sys: &LVPatchSystem<S>) -> Vec<TheoremVerdict<S>> {
    evaluate_all(&Analysis::new(sys), &TheoremId::ALL[11..])
}

fn evaluate_all<S: Scalar>(an: &Analysis<'_, S>, ids: &[TheoremId]) -> Vec<TheoremVerdict<S>> {
    ids.iter().map(|&id| an.evaluate(id)).collect()
}

/// Runs every criterion and assembles the report.
pub fn classify<S: Scalar>(sys: &LVPatchSystem<S>) -> ClassificationReport<S> {
    let an = Analysis::new(sys);
    let verdicts = evaluate_all(&an, &TheoremId::ALL);
    let (summary, provenance, attractor) = summarize(&verdicts);
    let mut report = ClassificationReport {
        fingerprint: sys.fingerprint(),
        dim: an.n,
        cooperative: sys.is_cooperative(),
        matrices: an.dm.clone(),
        spectral_bound: an.s0,
        verdicts,
        summary,
        provenance,
        attractor,
        equilibria: an.equilibria.clone(),
        invariant_violations: Vec::new(),
    };
    report.invariant_violations = check_report(sys, &an.majorant, &report);
    report
}

fn extinction_family<S>(v: &TheoremVerdict<S>) -> bool {
    use TheoremId::*;
    v.is_proven()
        && match v.id {
            ExtinctionAttractive | ZeroGAS | NoPatchExtinction | CompetitiveExtinction => true,
            CoopThresholdIrreducible => v.certificates.branch == Some(ThresholdBranch::Extinction),
            _ => false,
        }
}

fn attractivity_family<S>(v: &TheoremVerdict<S>) -> bool {
    use TheoremId::*;
    v.is_proven()
        && v.certificates.equilibrium.is_some()
        && match v.id {
            CoopGlobalAttractivity | CoopPositiveBeta | PositiveEqAttractive | PositiveDispersalAttractive => true,
            CoopThresholdIrreducible => v.certificates.branch == Some(ThresholdBranch::PositiveAttractor),
            CoefficientCriterion => v.certificates.tier == Some(CoefficientTier::Attractivity),
            _ => false,
        }
}

fn persistence_family<S>(v: &TheoremVerdict<S>) -> bool {
    use TheoremId::*;
    v.is_proven()
        && matches!(v.id, CoopPersistence | PatchPersistence | TotalPersistenceUniform | TotalPersistenceWeak | CoefficientCriterion)
}

fn summarize<S: Scalar>(verdicts: &[TheoremVerdict<S>]) -> (Summary, Vec<TheoremId>, Option<Vec<S>>) {
    let ids = |f: fn(&TheoremVerdict<S>) -> bool| verdicts.iter().filter(|v| f(v)).map(|v| v.id).collect::<Vec<_>>();
    let ext = ids(extinction_family);
    if !ext.is_empty() {
        return (Summary::ExtinctionGuaranteed, ext, None);
    }
    let att = ids(attractivity_family);
    if let Some(first) = att.first() {
        let x = verdicts.iter().find(|v| v.id == *first).and_then(|v| v.certificates.equilibrium.clone());
        return (Summary::PositiveEquilibriumGloballyAttractive, att, x);
    }
    let per = ids(persistence_family);
    if !per.is_empty() {
        return (Summary::PersistentNoAttractivityProof, per, None);
    }
    if verdicts.iter().any(|v| v.id == TheoremId::ZeroInstability && v.is_proven()) {
        return (Summary::ZeroUnstableNoFurtherProof, vec![TheoremId::ZeroInstability], None);
    }
    (Summary::FullyInconclusive, Vec::new(), None)
}

/// Implication lattice, mutual exclusions and certificate re-verification.
pub fn check_invariants<S: Scalar>(sys: &LVPatchSystem<S>, report: &ClassificationReport<S>) -> Vec<String> {
    check_report(sys, &sys.cooperative_majorant(), report)
}

fn check_report<S: Scalar>(sys: &LVPatchSystem<S>, majorant: &LVPatchSystem<S>, report: &ClassificationReport<S>) -> Vec<String> {
    use TheoremId::*;
    let mut out = Vec::new();
    let p = |id| report.is_proven(id);
    for (a, b) in [
        (CoopGlobalAttractivity, CoopPersistence),
        (PositiveEqAttractive, PatchPersistence),
        (PatchPersistence, Dissipativity),
        (TotalPersistenceUniform, TotalPersistenceWeak),
    ] {
        if p(a) && !p(b) {
            out.push(format!("{a} is proven but {b} is not"));
        }
    }
    for b in [CoopPersistence, PatchPersistence] {
        if p(ExtinctionAttractive) && p(b) {
            out.push(format!("ExtinctionAttractive and {b} are both proven"));
        }
    }
    let ext = report.verdicts.iter().filter(|v| extinction_family(v)).count();
    let att = report.verdicts.iter().filter(|v| attractivity_family(v)).count();
    if ext > 0 && att > 0 {
        out.push("extinction and an attractive positive equilibrium are both proven".into());
    }
    if report.cooperative {
        let xm = &report.verdict(Dissipativity).certificates.majorant_equilibrium;
        let x = &report.verdict(CoopGlobalAttractivity).certificates.equilibrium;
        if let (Some(xm), Some(x)) = (xm, x) {
            let gap = xm.iter().zip(x).map(|(a, b)| (*a - *b).abs()).fold(S::zero(), S::max);
            if gap > S::lit(1e-10) {
                out.push(format!("majorant equilibrium differs from the cooperative equilibrium by {gap}"));
            }
        }
    }
    let dm = &report.matrices;
    for v in report.verdicts.iter().filter(|v| v.is_proven()) {
        if let Err(e) = verify_certificates(sys, majorant, dm, v) {
            out.push(format!("{}: {e}", v.id));
        }
    }
    out
}

fn all_positive<S: Scalar>(label: &str, v: &[S]) -> Result<(), String> {
    match v.iter().position(|&x| !(x > S::zero())) {
        Some(i) => Err(format!("{label} fails at component {}: {}", i + 1, v[i])),
        None => Ok(()),
    }
}

fn all_nonnegative<S: Scalar>(label: &str, v: &[S], allowance: S) -> Result<(), String> {
    match v.iter().position(|&x| x < -allowance) {
        Some(i) => Err(format!("{label} fails at component {}: {}", i + 1, v[i])),
        None => Ok(()),
    }
}

/// Recomputes every attached certificate by direct arithmetic.
fn verify_certificates<S: Scalar>(
    sys: &LVPatchSystem<S>,
    majorant: &LVPatchSystem<S>,
    dm: &DerivedMatrices<S>,
    v: &TheoremVerdict<S>,
) -> Result<(), String> {
    use TheoremId::*;
    let c = &v.certificates;
    let tol = S::tolerances();
    if let Some(q) = &c.q {
        all_positive("q > 0", &q.q)?;
        let m0q = dm.m0.mul_vec(&q.q);
        let n0q = dm.n0.mul_vec(&q.q);
        let scale = max_abs(&q.q) * dm.m0.norm_inf().max(dm.n0.norm_inf()).max(S::one());
        let round = slack(scale) * S::from_usize_lossy(sys.n());
        let neg = |w: &[S]| w.iter().map(|&x| -x).collect::<Vec<S>>();
        match v.id {
            ExtinctionAttractive => {
                all_positive("N0 q > 0", &n0q)?;
                all_nonnegative("-M0 q >= 0", &neg(&m0q), round)?;
            }
            ZeroGAS => {
                all_positive("-M0 q > 0", &neg(&m0q))?;
                all_nonnegative("N0 q >= 0", &n0q, round)?;
            }
            NoPatchExtinction => all_nonnegative("N0 q >= 0", &n0q, round)?,
            CompetitiveExtinction => all_nonnegative("-M0 q >= 0", &neg(&m0q), round + tol.gate * scale)?,
            _ => {}
        }
    }
    if let Some(w) = &c.v {
        all_positive("v > 0", &w.q)?;
        all_positive("M0 v > 0", &dm.m0.mul_vec(&w.q))?;
    }
    let residual_ok = |s: &LVPatchSystem<S>, x: &[S]| max_abs(&equilibrium_residual(s, x)) <= tol.equilibrium;
    if let Some(x) = &c.equilibrium {
        all_positive("x* > 0", x)?;
        if !residual_ok(sys, x) {
            return Err("x* residual exceeds the equilibrium tolerance".into());
        }
        match v.id {
            CoopGlobalAttractivity => all_positive("M0 x* > 0", &dm.m0.mul_vec(x))?,
            PositiveEqAttractive | PositiveDispersalAttractive => all_positive("Nhat x* > 0", &dm.nhat.mul_vec(x))?,
            _ => {}
        }
    }
    if let Some(x) = &c.majorant_equilibrium {
        all_positive("X* > 0", x)?;
        if !residual_ok(majorant, x) {
            return Err("X* residual exceeds the equilibrium tolerance".into());
        }
        all_positive("M0 X* > 0", &dm.m0.mul_vec(x))?;
        if matches!(v.id, PatchPersistence | PositiveEqAttractive) {
            all_positive("Nhat X* > 0", &dm.nhat.mul_vec(x))?;
        }
    }
    match v.id {
        ZeroLocalStability if !c.spectral_bound.is_some_and(|s| s < -tol.gate) => return Err("s(M0) < 0 not certified".into()),
        ZeroInstability => {
            if !c.spectral_bound.is_some_and(|s| s > tol.gate) {
                return Err("s(M0) > 0 not certified".into());
            }
            if c.lambda_star.is_some_and(|l| !(l > S::zero())) {
                return Err("lambda* is not positive".into());
            }
        }
        TotalPersistenceUniform if !c.persistence_floor.is_some_and(|t| t > S::zero()) => {
            return Err("persistence floor is not positive".into())
        }
        CoefficientCriterion => {
            let m = c.coefficient_bound.ok_or("missing M")?;
            coefficient_tier_holds(sys, m, S::one(), tol.gate)?;
            if c.tier == Some(CoefficientTier::Attractivity) {
                coefficient_tier_holds(sys, m, S::lit(2.0), tol.gate)?;
            }
        }
        _ => {}
    }
    for m in &c.margins {
        if !(m.value >= S::zero()) {
            return Err(format!("margin {} = {} is negative", m.label, m.value));
        }
    }
    Ok(())
}
