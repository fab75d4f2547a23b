//! Comparison properties of simulated trajectories: the cooperative majorant
//! dominates the original system, and cooperative systems preserve the
//! ordering of histories.

mod common;

use common::random_bounded_system;
use lvpatch_core::{simulate, HistoryFunction, SimOptions, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SLACK: f64 = 1e-8;

fn below(lo: &Trajectory<f64>, hi: &Trajectory<f64>) -> Result<(), String> {
    for k in 0..=lo.steps() {
        let (x, y) = (lo.state(k), hi.state(k));
        if let Some(j) = (0..x.len()).find(|&j| x[j] > y[j] + SLACK) {
            return Err(format!("t = {}: x{} = {} > {}", lo.time(k), j + 1, x[j], y[j]));
        }
    }
    Ok(())
}

fn random_history(rng: &mut impl Rng, n: usize) -> HistoryFunction<f64> {
    let c: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
    let eps: Vec<f64> = c.iter().map(|&ci| rng.gen_range(-0.5..0.5) * ci).collect();
    HistoryFunction::oscillatory(c, eps, rng.gen_range(0.5..3.0), 5.0).unwrap()
}

#[test]
fn majorant_dominates() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let opts = SimOptions::new(0.05, 50.0);
    for case in 0..50 {
        let n = 2 + case % 2;
        let sys = random_bounded_system(&mut rng, n, -0.5, 1.0);
        let phi = random_history(&mut rng, n);
        let x = simulate(&sys, &phi, &opts).unwrap();
        let big = simulate(&sys.cooperative_majorant(), &phi, &opts).unwrap();
        below(&x, &big).unwrap_or_else(|e| panic!("case {case}: {e}"));
    }
}

#[test]
fn cooperative_flow_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let opts = SimOptions::new(0.05, 50.0);
    for case in 0..50 {
        let n = 2 + case % 2;
        let sys = random_bounded_system(&mut rng, n, -0.5, 0.0);
        let lo: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
        let hi: Vec<f64> = lo.iter().map(|&v| v + rng.gen_range(0.0..1.5)).collect();
        let a = simulate(&sys, &HistoryFunction::constant(lo).unwrap(), &opts).unwrap();
        let b = simulate(&sys, &HistoryFunction::constant(hi).unwrap(), &opts).unwrap();
        below(&a, &b).unwrap_or_else(|e| panic!("case {case}: {e}"));
    }
}
