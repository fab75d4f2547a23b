//! Human-readable reports and plot scripts.

use std::fmt::Write as _;
use std::path::Path;

use lvpatch_core::classifier::{Certificates, TrialOutcome, VerificationReport};
use lvpatch_core::{ClassificationReport, Matrix};

use crate::Scenario;

fn vec_str(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.12}")).collect();
    format!("[{}]", parts.join(", "))
}

fn matrix_block(out: &mut String, label: &str, m: &Matrix) {
    writeln!(out, "  {label}:").unwrap();
    for row in m.rows() {
        writeln!(out, "    {}", vec_str(&row)).unwrap();
    }
}

pub fn summary_line(report: &ClassificationReport<f64>) -> String {
    let mut s = format!("summary: {}", report.summary);
    if !report.provenance.is_empty() {
        let ids: Vec<String> = report.provenance.iter().map(|id| id.to_string()).collect();
        write!(s, " (via {})", ids.join(", ")).unwrap();
    }
    if let Some(x) = &report.attractor {
        write!(s, "; x* = {}", vec_str(x)).unwrap();
    }
    s
}

fn certificates(out: &mut String, c: &Certificates<f64>) {
    let line = |out: &mut String, k: &str, v: String| writeln!(out, "      {k} = {v}").unwrap();
    if let Some(q) = &c.q {
        line(out, "q", vec_str(&q.q));
        for b in &q.blocks {
            line(out, &format!("  {}", b.label), vec_str(&b.values));
        }
    }
    if let Some(v) = &c.v {
        line(out, "v", vec_str(&v.q));
        for b in &v.blocks {
            line(out, &format!("  {}", b.label), vec_str(&b.values));
        }
    }
    if let Some(x) = &c.majorant_equilibrium {
        line(out, "X*", vec_str(x));
    }
    if let Some(x) = &c.equilibrium {
        line(out, "x*", vec_str(x));
    }
    let scalars = [("s(M0)", c.spectral_bound), ("lambda*", c.lambda_star), ("M", c.coefficient_bound), ("theta_1", c.persistence_floor)];
    for (k, v) in scalars {
        if let Some(v) = v {
            line(out, k, format!("{v:.12e}"));
        }
    }
    if let Some(t) = c.tier {
        line(out, "tier", format!("{t:?}"));
    }
    if let Some(b) = c.branch {
        line(out, "branch", format!("{b:?}"));
    }
    for m in &c.margins {
        line(out, &m.label, format!("{:.6e}", m.value));
    }
}

pub fn classification(sc: &Scenario, report: &ClassificationReport<f64>) -> String {
    let mut out = String::new();
    writeln!(out, "scenario: {}", sc.name).unwrap();
    if let Some(d) = &sc.description {
        for l in d.lines() {
            writeln!(out, "  {l}").unwrap();
        }
    }
    writeln!(out, "patches: {}  cooperative: {}  fingerprint: {:016x}", report.dim, report.cooperative, report.fingerprint).unwrap();
    writeln!(out, "s(M0) = {:.12e}", report.spectral_bound).unwrap();
    matrix_block(&mut out, "M0", &report.matrices.m0);
    matrix_block(&mut out, "N0", &report.matrices.n0);
    matrix_block(&mut out, "Nhat", &report.matrices.nhat);
    writeln!(out, "{}", summary_line(report)).unwrap();
    writeln!(out, "verdicts:").unwrap();
    for v in &report.verdicts {
        writeln!(out, "  {:<28} {}", v.id.to_string(), v.status).unwrap();
        writeln!(out, "      conclusion: {}", v.id.conclusion()).unwrap();
        certificates(&mut out, &v.certificates);
        if let Some(n) = &v.note {
            writeln!(out, "      note: {n}").unwrap();
        }
    }
    writeln!(out, "equilibria (associated ODE):").unwrap();
    for p in &report.equilibria.points {
        writeln!(out, "  {:?} {}  residual {:.2e}", p.positivity, vec_str(&p.x), p.residual_norm).unwrap();
    }
    if !report.invariant_violations.is_empty() {
        writeln!(out, "INVARIANT VIOLATIONS:").unwrap();
        for v in &report.invariant_violations {
            writeln!(out, "  {v}").unwrap();
        }
    }
    out
}

pub fn trial_line(t: &TrialOutcome<f64>) -> String {
    let mut s = format!("{} {}", if t.passed() { "PASS" } else { "FAIL" }, t.label);
    for c in &t.checks {
        let flag = if c.operational { " (operational)" } else { "" };
        write!(s, "  [{}: observed {:.3e}, threshold {:.1e}{flag}]", c.expectation, c.observed, c.threshold).unwrap();
    }
    s
}

pub fn verification(
    sc: &Scenario,
    report: &ClassificationReport<f64>,
    vr: &VerificationReport<f64>,
    failed: &[std::path::PathBuf],
) -> String {
    let mut out = String::new();
    writeln!(out, "scenario: {}", sc.name).unwrap();
    writeln!(out, "{}", summary_line(report)).unwrap();
    writeln!(out, "simulation: h = {}, t_end = {}, window = last {}%", sc.sim.h, sc.sim.t_end, sc.verify.window * 100.0).unwrap();
    if let Some(n) = &vr.note {
        writeln!(out, "{n}").unwrap();
    }
    for e in &vr.expectations {
        writeln!(out, "expectation: {}", e.name()).unwrap();
    }
    for t in &vr.trials {
        writeln!(out, "{}", trial_line(t)).unwrap();
        writeln!(out, "    min component {:.3e}, retried steps {}", t.realized_min, t.retried_steps).unwrap();
    }
    for p in failed {
        writeln!(out, "failed trajectory: {}", p.display()).unwrap();
    }
    out
}

/// Gnuplot script plotting every component of the CSV against time.
pub fn plot_script(csv: &Path, n: usize, title: &str) -> String {
    let file = csv.file_name().map_or_else(|| csv.display().to_string(), |f| f.to_string_lossy().into_owned());
    format!(
        "# gnuplot script; run from the directory containing {file}\n\
         set datafile separator ','\n\
         set key autotitle columnhead\n\
         set title '{title}'\n\
         set xlabel 't'\n\
         set ylabel 'x_i(t)'\n\
         plot for [i=2:{}] '{file}' using 1:i with lines\n\
         pause -1\n",
        n + 1
    )
}
