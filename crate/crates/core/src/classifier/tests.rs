use super::*;
use crate::integrator::SimOptions;
use crate::model::{uniform_kernel_grid, CanonicalForm, DelayKernel};

type M = SquareMatrix<f64>;

fn system(beta: [f64; 2], mu: [f64; 2], a: [[f64; 2]; 2], d: [f64; 2]) -> LVPatchSystem<f64> {
    LVPatchSystem::new(CanonicalForm {
        beta: beta.to_vec(),
        mu: mu.to_vec(),
        a: M::from_f64_rows(&[&a[0], &a[1]]),
        d: M::from_f64_rows(&[&[0.0, d[0]], &[d[1], 0.0]]),
        tau: M::from_f64_rows(&[&[0.0, 1.0], &[1.0, 0.0]]),
        kernels: uniform_kernel_grid(2, DelayKernel::exponential(1.0)),
    })
    .unwrap()
}

fn counterexample() -> LVPatchSystem<f64> {
    system([-2.0, -2.0], [1.0, 13.0 / 45.0], [[0.0, -1.0], [-0.1, 0.0]], [1.0, 3.5])
}

fn cooperative() -> LVPatchSystem<f64> {
    system([1.0, 1.0], [2.0, 2.0], [[-0.5, -0.2], [-0.2, -0.5]], [0.3, 0.3])
}

fn extinction() -> LVPatchSystem<f64> {
    system([-3.0, -3.0], [1.0, 1.0], [[0.0; 2]; 2], [0.1, 0.1])
}

fn status(r: &ClassificationReport<f64>, id: TheoremId) -> &Status {
    &r.verdict(id).status
}

#[test]
fn counterexample_is_fully_inconclusive() {
    let r = classify(&counterexample());
    assert!(r.invariant_violations.is_empty(), "{:?}", r.invariant_violations);
    assert_eq!(r.summary, Summary::FullyInconclusive);
    assert!(r.provenance.is_empty());
    let s = r.verdict(TheoremId::ZeroLocalStability).certificates.spectral_bound.unwrap();
    assert!((-0.12918..=-0.12916).contains(&s), "{s}");
    assert!(r.is_proven(TheoremId::BoundednessViaN0));
    assert!(matches!(status(&r, TheoremId::ExtinctionAttractive), Status::HypothesisFailed(_)));
    match status(&r, TheoremId::PositiveEqExists) {
        Status::HypothesisFailed(h) => assert!(h.contains("s(M0) > 0"), "{h}"),
        other => panic!("{other}"),
    }
    // the positive equilibrium (1, 1.5) is there all the same
    assert!(r.equilibria.interior().any(|p| (p.x[0] - 1.0).abs() < 1e-9 && (p.x[1] - 1.5).abs() < 1e-9));
}

#[test]
fn cooperative_example_has_global_attractor() {
    let r = classify(&cooperative());
    assert!(r.invariant_violations.is_empty(), "{:?}", r.invariant_violations);
    assert_eq!(r.summary, Summary::PositiveEquilibriumGloballyAttractive);
    for id in [TheoremId::CoopPersistence, TheoremId::CoopGlobalAttractivity, TheoremId::CoopPositiveBeta, TheoremId::Dissipativity] {
        assert!(r.is_proven(id), "{id}: {}", status(&r, id));
    }
    let x = r.attractor.clone().unwrap();
    assert!(max_abs(&equilibrium_residual(&cooperative(), &x)) < 1e-12);
    let xm = r.verdict(TheoremId::Dissipativity).certificates.majorant_equilibrium.clone().unwrap();
    assert!(xm.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-10));
}

#[test]
fn extinction_example() {
    let r = classify(&extinction());
    assert!(r.invariant_violations.is_empty(), "{:?}", r.invariant_violations);
    assert_eq!(r.summary, Summary::ExtinctionGuaranteed);
    let q = r.verdict(TheoremId::ZeroGAS).certificates.q.clone().unwrap();
    assert!(q.q.iter().all(|&v| (v - 1.0).abs() < 1e-12), "{:?}", q.q);
    assert!(r.provenance.contains(&TheoremId::ZeroGAS));
    assert!(r.attractor.is_none());
}

#[test]
fn competitive_extinction() {
    let sys = system([-1.0, -1.0], [1.0, 1.0], [[0.0, 0.5], [0.5, 0.0]], [0.5, 0.5]);
    let r = classify(&sys);
    assert!(r.is_proven(TheoremId::CompetitiveExtinction), "{}", status(&r, TheoremId::CompetitiveExtinction));
    assert!((r.spectral_bound + 0.5).abs() < 1e-9);
    assert!(matches!(status(&r, TheoremId::CoopPersistence), Status::HypothesisFailed(h) if h.contains("cooperative")));
    assert!(r.invariant_violations.is_empty());
}

#[test]
fn negative_growth_has_no_persistence_vector() {
    let sys = system([-2.0, -2.0], [1.0, 1.0], [[0.0; 2]; 2], [1.0, 1.0]);
    let r = classify(&sys);
    assert!((r.spectral_bound + 1.0).abs() < 1e-9);
    assert!(matches!(status(&r, TheoremId::CoopPersistence), Status::HypothesisFailed(_)));
}

#[test]
fn instability_attaches_characteristic_root() {
    let sys = system([1.0, 1.0], [1.0, 1.0], [[-0.1, 0.0], [0.0, -0.1]], [1.0, 1.0]);
    let r = classify(&sys);
    assert!((r.spectral_bound - 2.0).abs() < 1e-9);
    let l = r.verdict(TheoremId::ZeroInstability).certificates.lambda_star.unwrap();
    // symmetric case: lambda = 1 + exp(-lambda)
    assert!((l - 1.0 - (-l).exp()).abs() < 1e-8, "{l}");
}

#[test]
fn self_interaction_only_gives_threshold_branches() {
    let up = system([0.5, -0.2], [1.0, 1.0], [[0.0; 2]; 2], [0.4, 0.4]);
    let r = classify(&up);
    let c = &r.verdict(TheoremId::CoopThresholdIrreducible).certificates;
    assert_eq!(c.branch, Some(ThresholdBranch::PositiveAttractor));
    assert_eq!(r.summary, Summary::PositiveEquilibriumGloballyAttractive);
    let down = system([-0.5, -0.6], [1.0, 1.0], [[0.0; 2]; 2], [0.1, 0.1]);
    let r = classify(&down);
    assert_eq!(r.verdict(TheoremId::CoopThresholdIrreducible).certificates.branch, Some(ThresholdBranch::Extinction));
    assert_eq!(r.summary, Summary::ExtinctionGuaranteed);
}

#[test]
fn coefficient_criterion_attractivity_tier() {
    let sys = system([1.0, 1.0], [4.0, 4.0], [[0.25, 0.25], [0.25, 0.25]], [0.5, 0.5]);
    let r = classify(&sys);
    let c = &r.verdict(TheoremId::CoefficientCriterion).certificates;
    assert_eq!(c.tier, Some(CoefficientTier::Attractivity));
    assert!((c.coefficient_bound.unwrap() - 0.375).abs() < 1e-15);
    assert_eq!(r.summary, Summary::PositiveEquilibriumGloballyAttractive);
    assert!(r.invariant_violations.is_empty(), "{:?}", r.invariant_violations);
}

#[test]
fn boundary_spectral_bound_is_inconclusive() {
    let sys = system([-1.0, -1.0], [1.0, 1.0], [[0.0; 2]; 2], [1.0, 1.0]);
    let r = classify(&sys);
    assert!(matches!(status(&r, TheoremId::ZeroLocalStability), Status::Inconclusive(_)));
    assert!(matches!(status(&r, TheoremId::ZeroInstability), Status::Inconclusive(_)));
    assert!(matches!(status(&r, TheoremId::CoopThresholdIrreducible), Status::Inconclusive(_)));
}

#[test]
fn verification_refuses_foreign_reports() {
    let r = classify(&counterexample());
    let opts = VerifyOptions::new(SimOptions::new(0.05, 1.0), 2);
    assert!(matches!(verify_prediction(&extinction(), &r, &opts), Err(VerifyError::ForeignReport { .. })));
}

#[test]
fn inconclusive_reports_have_nothing_to_verify() {
    let sys = counterexample();
    let r = classify(&sys);
    let v = verify_prediction(&sys, &r, &VerifyOptions::new(SimOptions::new(0.05, 1.0), 3)).unwrap();
    assert!(v.trials.is_empty() && v.passed());
    assert!(v.note.unwrap().contains("nothing to verify"));
}

#[test]
fn extinction_verifies() {
    let sys = extinction();
    let r = classify(&sys);
    let v = verify_prediction(&sys, &r, &VerifyOptions::new(SimOptions::new(0.05, 60.0), 3)).unwrap();
    assert_eq!(v.trials.len(), 3);
    assert_eq!(v.trials[2].label, "oscillatory");
    assert!(v.passed(), "{:?}", v.trials.iter().map(|t| &t.checks).collect::<Vec<_>>());
}

#[test]
fn wrong_expectation_is_caught() {
    let sys = extinction();
    let opts = VerifyOptions::new(SimOptions::new(0.05, 30.0), 2);
    let v = verify_expectations(&sys, &[Expectation::Attraction { target: None }], &default_histories(2, 2), &opts).unwrap();
    assert!(!v.passed());
    assert_eq!(v.failures().count(), 2);
}

#[test]
fn default_histories_span_the_levels() {
    let h = default_histories::<f64>(2, 5);
    let labels: Vec<&str> = h.iter().map(|(l, _)| l.as_str()).collect();
    assert_eq!(labels, ["constant-0.1", "constant-0.5", "constant-1", "constant-3", "oscillatory"]);
    let h = default_histories::<f64>(3, 9);
    assert_eq!(h.len(), 9);
    assert!((h[0].1.eval(0, 0.0) - 0.1).abs() < 1e-15 && (h[7].1.eval(2, 0.0) - 5.0).abs() < 1e-12);
}
