//! Numerical verification of a classification by simulation.

use serde::Serialize;
use thiserror::Error;

use super::{ClassificationReport, Summary, TheoremId};
use crate::integrator::history::HistoryFunction;
use crate::integrator::trajectory::Trajectory;
use crate::integrator::{simulate, SimError, SimOptions};
use crate::model::LVPatchSystem;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("report was produced for system {report:016x}, not {system:016x}")]
    ForeignReport { report: u64, system: u64 },
    #[error("invalid verification option `{field}`: {reason}")]
    InvalidOptions { field: &'static str, reason: String },
    #[error("trial `{trial}`: {source}")]
    Simulation {
        trial: String,
        #[source]
        source: SimError,
    },
}

/// Pass thresholds on the trailing window of each trial.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Thresholds<S> {
    /// Extinction: window sup of every component below this.
    pub extinction: S,
    /// Attraction: window distance to the target below this.
    pub attraction: S,
    /// Dissipativity: window sup at most `X* + dissipativity`.
    pub dissipativity: S,
    /// Patch persistence: window inf of every component above this.
    pub persistence: S,
    /// Uniform total persistence: window inf of the total above this
    /// fraction of the certified floor.
    pub floor_fraction: S,
    /// Weak total persistence: window sup of the total above this.
    pub weak: S,
}

impl<S: Scalar> Default for Thresholds<S> {
    fn default() -> Self {
        Self {
            extinction: S::lit(1e-5),
            attraction: S::lit(1e-4),
            dissipativity: S::lit(1e-4),
            persistence: S::lit(1e-6),
            floor_fraction: S::lit(0.9),
            weak: S::lit(1e-6),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions<S> {
    pub sim: SimOptions<S>,
    pub trials: usize,
    /// Trailing fraction of `[0, t_end]` over which limits are read.
    pub window: S,
    pub thresholds: Thresholds<S>,
}

impl<S: Scalar> VerifyOptions<S> {
    pub fn new(sim: SimOptions<S>, trials: usize) -> Self {
        Self { sim, trials, window: S::lit(0.1), thresholds: Thresholds::default() }
    }
}

/// A long-term property checked on every trial.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Expectation<S> {
    Extinction,
    /// Convergence to `target`, or to some positive state when it is absent.
    Attraction {
        target: Option<Vec<S>>,
    },
    Bounded {
        bound: Vec<S>,
    },
    PatchPersistence,
    TotalPersistence {
        floor: S,
    },
    WeakTotalPersistence,
}

impl<S> Expectation<S> {
    pub fn name(&self) -> &'static str {
        match self {
            Expectation::Extinction => "extinction",
            Expectation::Attraction { .. } => "attraction",
            Expectation::Bounded { .. } => "dissipativity",
            Expectation::PatchPersistence => "patch persistence",
            Expectation::TotalPersistence { .. } => "uniform total persistence",
            Expectation::WeakTotalPersistence => "weak total persistence",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome<S> {
    pub expectation: &'static str,
    pub passed: bool,
    pub observed: S,
    pub threshold: S,
    /// True when the check is a numerical proxy for a property that no
    /// finite run can establish.
    pub operational: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrialOutcome<S: Scalar> {
    pub label: String,
    pub history: HistoryFunction<S>,
    pub checks: Vec<CheckOutcome<S>>,
    pub realized_min: S,
    pub retried_steps: usize,
    #[serde(skip)]
    pub trajectory: Trajectory<S>,
}

impl<S: Scalar> TrialOutcome<S> {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport<S: Scalar> {
    pub summary: Option<Summary>,
    pub expectations: Vec<Expectation<S>>,
    pub trials: Vec<TrialOutcome<S>>,
    pub note: Option<String>,
}

impl<S: Scalar> VerificationReport<S> {
    pub fn passed(&self) -> bool {
        self.trials.iter().all(TrialOutcome::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &TrialOutcome<S>> {
        self.trials.iter().filter(|t| !t.passed())
    }
}

/// What the report's proven verdicts predict about every positive solution.
pub fn expectations_for<S: Scalar>(report: &ClassificationReport<S>) -> Vec<Expectation<S>> {
    use TheoremId::*;
    let mut out = Vec::new();
    match report.summary {
        Summary::ExtinctionGuaranteed => out.push(Expectation::Extinction),
        Summary::PositiveEquilibriumGloballyAttractive => out.push(Expectation::Attraction { target: report.attractor.clone() }),
        Summary::PersistentNoAttractivityProof => {
            if [CoopPersistence, PatchPersistence, CoefficientCriterion].iter().any(|&id| report.is_proven(id)) {
                out.push(Expectation::PatchPersistence);
            }
            if let Some(floor) = report.verdict(TotalPersistenceUniform).certificates.persistence_floor {
                out.push(Expectation::TotalPersistence { floor });
            } else if report.is_proven(TotalPersistenceWeak) {
                out.push(Expectation::WeakTotalPersistence);
            }
        }
        Summary::ZeroUnstableNoFurtherProof | Summary::FullyInconclusive => {}
    }
    if let Some(bound) = &report.verdict(Dissipativity).certificates.majorant_equilibrium {
        if report.summary != Summary::ExtinctionGuaranteed {
            out.push(Expectation::Bounded { bound: bound.clone() });
        }
    }
    out
}

/// Deterministic admissible histories: constant levels spanning `[0.1, 5]`
/// and, when `trials >= 2`, one oscillatory history last.
pub fn default_histories<S: Scalar>(n: usize, trials: usize) -> Vec<(String, HistoryFunction<S>)> {
    let constants = trials.saturating_sub(usize::from(trials >= 2));
    let levels: Vec<f64> = if constants <= 5 {
        [0.1, 0.5, 1.0, 3.0, 5.0][..constants].to_vec()
    } else {
        let (lo, hi) = (0.1f64.ln(), 5.0f64.ln());
        (0..constants).map(|k| (lo + (hi - lo) * k as f64 / (constants - 1) as f64).exp()).collect()
    };
    let mut out: Vec<(String, HistoryFunction<S>)> = levels
        .into_iter()
        .map(|c| (format!("constant-{c}"), HistoryFunction::constant(vec![S::lit(c); n]).expect("positive level")))
        .collect();
    if trials >= 2 {
        let h = HistoryFunction::oscillatory(vec![S::one(); n], vec![S::lit(0.5); n], S::lit(2.0), S::lit(10.0)).expect("c >= |eps|");
        out.push(("oscillatory".into(), h));
    }
    out
}

/// Simulates `opts.trials` default histories and checks the report's
/// predictions on each.
pub fn verify_prediction<S: Scalar>(
    sys: &LVPatchSystem<S>,
    report: &ClassificationReport<S>,
    opts: &VerifyOptions<S>,
) -> Result<VerificationReport<S>, VerifyError> {
    let system = sys.fingerprint();
    if report.fingerprint != system {
        return Err(VerifyError::ForeignReport { report: report.fingerprint, system });
    }
    let expectations = expectations_for(report);
    if expectations.is_empty() {
        return Ok(VerificationReport {
            summary: Some(report.summary),
            expectations,
            trials: Vec::new(),
            note: Some(format!("nothing to verify: summary is {}", report.summary)),
        });
    }
    let histories = default_histories(sys.n(), opts.trials);
    let mut out = verify_expectations(sys, &expectations, &histories, opts)?;
    out.summary = Some(report.summary);
    Ok(out)
}

/// Runs one simulation per history, concurrently, and checks every
/// expectation on each. Results come back in history order.
pub fn verify_expectations<S: Scalar>(
    sys: &LVPatchSystem<S>,
    expectations: &[Expectation<S>],
    histories: &[(String, HistoryFunction<S>)],
    opts: &VerifyOptions<S>,
) -> Result<VerificationReport<S>, VerifyError> {
    if histories.is_empty() {
        return Err(VerifyError::InvalidOptions { field: "trials", reason: "need at least one trial".into() });
    }
    if !(opts.window > S::zero() && opts.window <= S::one()) {
        return Err(VerifyError::InvalidOptions { field: "window", reason: "must lie in (0, 1]".into() });
    }
    let workers = std::thread::available_parallelism().map_or(1, |p| p.get()).min(histories.len());
    let mut slots: Vec<Option<Result<TrialOutcome<S>, VerifyError>>> = (0..histories.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    (w..histories.len())
                        .step_by(workers)
                        .map(|i| (i, run_trial(sys, &histories[i], expectations, opts)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("trial thread panicked") {
                slots[i] = Some(r);
            }
        }
    });
    let trials = slots.into_iter().map(|r| r.expect("every trial ran")).collect::<Result<Vec<_>, _>>()?;
    Ok(VerificationReport { summary: None, expectations: expectations.to_vec(), trials, note: None })
}

fn run_trial<S: Scalar>(
    sys: &LVPatchSystem<S>,
    (label, history): &(String, HistoryFunction<S>),
    expectations: &[Expectation<S>],
    opts: &VerifyOptions<S>,
) -> Result<TrialOutcome<S>, VerifyError> {
    let traj = simulate(sys, history, &opts.sim).map_err(|source| VerifyError::Simulation { trial: label.clone(), source })?;
    let checks = expectations.iter().map(|e| check(&traj, e, opts)).collect();
    Ok(TrialOutcome {
        label: label.clone(),
        history: history.clone(),
        checks,
        realized_min: traj.realized_min(),
        retried_steps: traj.retried_steps(),
        trajectory: traj,
    })
}

fn check<S: Scalar>(traj: &Trajectory<S>, e: &Expectation<S>, opts: &VerifyOptions<S>) -> CheckOutcome<S> {
    let th = &opts.thresholds;
    let ranges = traj.asymptotic_estimate(opts.window);
    let fold_max = |f: &dyn Fn(usize) -> S| (0..ranges.len()).map(f).fold(S::neg_infinity(), S::max);
    let min_inf = ranges.iter().map(|r| r.inf).fold(S::infinity(), S::min);
    let outcome = |passed: bool, observed: S, threshold: S| CheckOutcome {
        expectation: e.name(),
        passed,
        observed,
        threshold,
        operational: matches!(e, Expectation::WeakTotalPersistence),
    };
    match e {
        Expectation::Extinction => {
            let sup = fold_max(&|j| ranges[j].sup);
            outcome(sup < th.extinction, sup, th.extinction)
        }
        Expectation::Attraction { target: Some(x) } => {
            let dist = fold_max(&|j| (ranges[j].sup - x[j]).abs().max((ranges[j].inf - x[j]).abs()));
            outcome(dist < th.attraction, dist, th.attraction)
        }
        Expectation::Attraction { target: None } => {
            let spread = fold_max(&|j| ranges[j].sup - ranges[j].inf);
            outcome(spread < th.attraction && min_inf > th.persistence, spread, th.attraction)
        }
        Expectation::Bounded { bound } => {
            let excess = fold_max(&|j| ranges[j].sup - bound[j]);
            outcome(excess <= th.dissipativity, excess, th.dissipativity)
        }
        Expectation::PatchPersistence => outcome(min_inf > th.persistence, min_inf, th.persistence),
        Expectation::TotalPersistence { floor } => {
            let inf = traj.total_range(opts.window).inf;
            let need = th.floor_fraction * *floor;
            outcome(inf > need, inf, need)
        }
        Expectation::WeakTotalPersistence => {
            let sup = traj.total_range(opts.window).sup;
            outcome(sup > th.weak, sup, th.weak)
        }
    }
}
