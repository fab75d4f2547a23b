use super::chain::linear_chain_reduce;
use super::history::HistoryFunction;
use super::*;
use crate::model::{uniform_kernel_grid, CanonicalForm};

type M = SquareMatrix<f64>;

fn coop2(tau: f64, kernel: DelayKernel<f64>) -> LVPatchSystem<f64> {
    LVPatchSystem::new(CanonicalForm {
        beta: vec![1.0, 1.0],
        mu: vec![2.0, 2.0],
        a: M::from_f64_rows(&[&[-0.5, -0.2], &[-0.2, -0.5]]),
        d: M::from_f64_rows(&[&[0.0, 0.3], &[0.3, 0.0]]),
        tau: M::from_f64_rows(&[&[0.0, tau], &[tau, 0.0]]),
        kernels: uniform_kernel_grid(2, kernel),
    })
    .unwrap()
}

fn max_err(a: &[Vec<f64>], traj: &Trajectory<f64>, stride: usize) -> f64 {
    let mut e: f64 = 0.0;
    for k in 0..=traj.steps() {
        let x = traj.state(k);
        for j in 0..x.len() {
            e = e.max((x[j] - a[k * stride][j]).abs());
        }
    }
    e
}

#[test]
fn equilibrium_history_is_preserved() {
    for k in [DelayKernel::exponential(1.0), DelayKernel::erlang(3, 2.0), DelayKernel::uniform(1.5)] {
        let sys = coop2(1.0, k);
        let phi = HistoryFunction::constant(vec![1.0, 1.0]).unwrap();
        let tr = simulate(&sys, &phi, &SimOptions::new(0.05, 20.0)).unwrap();
        for j in 0..2 {
            assert!(tr.component(j).iter().all(|&v| (v - 1.0).abs() < 1e-12), "{:?}", k);
        }
    }
}

#[test]
fn stencil_sums_match_direct_quadrature() {
    let sys = coop2(0.5, DelayKernel::erlang(2, 1.3));
    let phi = HistoryFunction::oscillatory(vec![1.0, 0.6], vec![0.5, -0.3], 2.0, 4.0).unwrap();
    let opts = SimOptions::new(0.02, 3.0);
    let tr = simulate(&sys, &phi, &opts).unwrap();
    let stepper = Stepper::new(&sys, opts);
    let s = &stepper.slots[0];
    for k in [0usize, 1, 7, 100, 149] {
        let ki = k as isize;
        let fast = tr.bulk(&s.rest, s.j, ki, 1)
            + s.newest[0] * tr.x_at(s.j, ki - 1)
            + s.newest[1] * tr.f_at(s.j, ki - 1)
            + s.newest[2] * tr.x_at(s.j, ki)
            + s.newest[3] * tr.piece(s.j, ki - 1)[3];
        let slow = tr.conv_generic(&s.kernel, s.j, tr.time(k), s.horizon, tr.steps(), Head::Interpolate, None);
        assert!((fast - slow).abs() < 1e-13, "k={k}: {fast} vs {slow}");
        if k >= 1 {
            let t = tr.time(k) + 0.01;
            let fast = tr.bulk(&s.half, s.j, ki, 0) + s.head_half[0].iter().zip(tr.piece(s.j, ki - 1)).map(|(w, d)| w * d).sum::<f64>();
            let slow = tr.conv_generic(&s.kernel, s.j, t, s.horizon, k, Head::Extrapolate, None);
            assert!((fast - slow).abs() < 1e-13, "k={k}: {fast} vs {slow}");
        }
    }
}

#[test]
fn convolution_of_constant_trajectory() {
    let sys = coop2(1.0, DelayKernel::exponential(1.0));
    let phi = HistoryFunction::constant(vec![1.0, 1.0]).unwrap();
    let tr = simulate(&sys, &phi, &SimOptions::new(0.05, 5.0)).unwrap();
    for k in [DelayKernel::exponential(0.7), DelayKernel::erlang(4, 3.0), DelayKernel::uniform(2.2)] {
        for t in [0.0, 0.013, 2.5, 5.0] {
            let c = tr.convolution_term(&k, 0, t, 1e-8);
            assert!((c - 1.0).abs() < 1e-12, "{c}");
        }
    }
}

#[test]
fn agrees_with_linear_chain_oracle() {
    let sys = coop2(0.0, DelayKernel::erlang(2, 1.0));
    let phi = HistoryFunction::oscillatory(vec![0.4, 1.6], vec![0.2, 0.5], 2.0, 10.0).unwrap();
    let tr = simulate(&sys, &phi, &SimOptions::new(0.01, 10.0)).unwrap();
    let ode = linear_chain_reduce(&sys).unwrap();
    let refsol = ode.integrate(&phi, 0.01 / 8.0, 8000);
    let e = max_err(&refsol, &tr, 8);
    assert!(e < 1e-6, "{e}");
}

#[test]
fn fourth_order_convergence() {
    // tail_eps is pushed far down so the truncation floor does not mask the
    // stepping error
    let sys = coop2(0.0, DelayKernel::exponential(1.0));
    let phi = HistoryFunction::oscillatory(vec![1.0, 1.0], vec![0.5, 0.5], 2.0, 20.0).unwrap();
    let ode = linear_chain_reduce(&sys).unwrap();
    let refsol = ode.integrate(&phi, 0.005, 800);
    let mut errs = Vec::new();
    for (h, stride) in [(0.08, 16), (0.04, 8), (0.02, 4)] {
        let mut o = SimOptions::new(h, 4.0);
        o.tail_eps = 1e-14;
        let tr = simulate(&sys, &phi, &o).unwrap();
        errs.push(max_err(&refsol, &tr, stride));
    }
    assert!(errs[0] / errs[1] >= 8.0, "{errs:?}");
    assert!(errs[1] / errs[2] >= 8.0, "{errs:?}");
}

#[test]
fn rejects_bad_options() {
    let sys = coop2(1.0, DelayKernel::exponential(1.0));
    let phi = HistoryFunction::constant(vec![1.0, 1.0]).unwrap();
    let err = simulate(&sys, &phi, &SimOptions::new(0.3, 1.0)).unwrap_err();
    assert_eq!(err.field(), Some("h"));
    let mut o = SimOptions::new(0.01, 1.0);
    o.tail_eps = 0.1;
    assert_eq!(simulate(&sys, &phi, &o).unwrap_err().field(), Some("tail_eps"));
    let phi3 = HistoryFunction::constant(vec![1.0; 3]).unwrap();
    assert!(matches!(simulate(&sys, &phi3, &SimOptions::new(0.01, 1.0)), Err(SimError::Dimension { .. })));
}

#[test]
fn chain_rejects_unsupported_systems() {
    assert!(matches!(linear_chain_reduce(&coop2(1.0, DelayKernel::exponential(1.0))), Err(chain::ChainError::DelayedDispersal { .. })));
    assert!(matches!(linear_chain_reduce(&coop2(0.0, DelayKernel::uniform(1.0))), Err(chain::ChainError::UnsupportedKernel { .. })));
}

#[test]
fn dense_output_is_continuous_and_interpolates() {
    let sys = coop2(1.0, DelayKernel::exponential(1.0));
    let phi = HistoryFunction::constant(vec![0.2, 3.0]).unwrap();
    let tr = simulate(&sys, &phi, &SimOptions::new(0.05, 2.0)).unwrap();
    for k in 0..tr.steps() {
        assert_eq!(tr.eval_component(1, tr.time(k)), tr.state(k)[1]);
    }
    assert_eq!(tr.eval_component(0, -0.5), 0.2);
    let r = tr.asymptotic_estimate(1.0);
    assert!(r[0].inf <= 0.2 + 1e-15 && r[1].sup >= 3.0 - 1e-15);
}
