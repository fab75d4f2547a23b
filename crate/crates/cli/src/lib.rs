//! Scenario files, reports and commands.

pub mod render;
pub mod scenario;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use lvpatch_core::classifier::{default_histories, verify_expectations, Expectation, VerificationReport};
use lvpatch_core::{classify, simulate, verify_prediction, ClassificationReport, SimError, VerifyError, VerifyOptions};
use serde_json::json;
use thiserror::Error;

pub use scenario::{parse_scenario, Scenario};

/// Environment variable naming the directory for report files.
pub const REPORT_DIR_ENV: &str = "LVPATCH_REPORT_DIR";
const DEFAULT_REPORT_DIR: &str = "lvpatch-reports";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("verification contradiction: {0}")]
    Contradiction(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn input(field: impl AsRef<str>, reason: impl std::fmt::Display) -> Self {
        CliError::Input(format!("`{}`: {reason}", field.as_ref()))
    }

    /// 1 for bad input, 2 for a contradicted prediction, 3 for numerical
    /// failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Contradiction(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

fn sim_error(e: SimError) -> CliError {
    match e {
        SimError::NumericalFailure { .. } => CliError::Numerical(e.to_string()),
        SimError::InvalidOptions { ref field, .. } => CliError::input(format!("sim.{field}"), &e),
        _ => CliError::Input(e.to_string()),
    }
}

const BUILTINS: [(&str, &str); 9] = [
    ("paper-counterexample", include_str!("../scenarios/paper-counterexample.toml")),
    ("paper-4-14-positive-beta", include_str!("../scenarios/paper-4-14-positive-beta.toml")),
    ("paper-4-14-cooperative-majorant", include_str!("../scenarios/paper-4-14-cooperative-majorant.toml")),
    ("paper-5-10-coefficient", include_str!("../scenarios/paper-5-10-coefficient.toml")),
    ("takeuchi-form", include_str!("../scenarios/takeuchi-form.toml")),
    ("liu-form", include_str!("../scenarios/liu-form.toml")),
    ("logistic-1d", include_str!("../scenarios/logistic-1d.toml")),
    ("extinction-2d", include_str!("../scenarios/extinction-2d.toml")),
    ("cooperative-2d", include_str!("../scenarios/cooperative-2d.toml")),
];

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(n, _)| *n)
}

pub fn builtin_text(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn builtin(name: &str) -> Result<Scenario, CliError> {
    let text = builtin_text(name).ok_or_else(|| CliError::Input(format!("unknown builtin scenario `{name}`")))?;
    parse_scenario(text, name)
}

/// Reads a scenario file, falling back to a builtin of that name when no
/// such file exists.
pub fn load_scenario(source: &str) -> Result<Scenario, CliError> {
    let path = Path::new(source);
    if path.exists() {
        let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        return parse_scenario(&text, source);
    }
    match builtin_text(source) {
        Some(text) => parse_scenario(text, source),
        None => Err(CliError::Input(format!("{source}: no such file or builtin scenario"))),
    }
}

pub fn report_dir() -> Result<PathBuf, CliError> {
    let dir = std::env::var_os(REPORT_DIR_ENV).map_or_else(|| PathBuf::from(DEFAULT_REPORT_DIR), PathBuf::from);
    fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
    Ok(dir)
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| io_error(path, e))
}

fn file_stem(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn check_invariants(report: &ClassificationReport<f64>) -> Result<(), CliError> {
    if report.invariant_violations.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("report invariants violated: {}", report.invariant_violations.join("; "))))
    }
}

/// Result of a command: text for stdout and the files written.
#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: String,
    pub files: Vec<PathBuf>,
}

pub fn cmd_analyze(source: &str) -> Result<Outcome, CliError> {
    let sc = load_scenario(source)?;
    let report = classify(&sc.system);
    let dir = report_dir()?;
    let stem = file_stem(&sc.name);
    let txt = dir.join(format!("{stem}.analysis.txt"));
    let js = dir.join(format!("{stem}.analysis.json"));
    write(&txt, &render::classification(&sc, &report))?;
    let doc = json!({ "scenario": sc.name, "report": report });
    write(&js, &serde_json::to_string_pretty(&doc).expect("report serializes"))?;
    check_invariants(&report)?;
    let mut out = String::new();
    writeln!(out, "{}", render::summary_line(&report)).unwrap();
    writeln!(out, "reports: {} {}", txt.display(), js.display()).unwrap();
    Ok(Outcome { stdout: out, files: vec![txt, js] })
}

pub fn cmd_simulate(source: &str, history: &str, out: &Path, stride: usize) -> Result<Outcome, CliError> {
    let sc = load_scenario(source)?;
    let phi = sc.history(history).ok_or_else(|| {
        let names: Vec<&str> = sc.histories.iter().map(|(n, _)| n.as_str()).collect();
        CliError::Input(format!("history `{history}` not found (available: {})", names.join(", ")))
    })?;
    let traj = simulate(&sc.system, phi, &sc.sim).map_err(sim_error)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
    }
    write(out, &traj.to_csv(stride))?;
    let script = out.with_extension("gp");
    write(&script, &render::plot_script(out, sc.system.n(), &sc.name))?;
    let stdout = format!(
        "wrote {} ({} steps, min component {:.3e}, {} retried steps)\nplot script: {}\n",
        out.display(),
        traj.steps(),
        traj.realized_min(),
        traj.retried_steps(),
        script.display()
    );
    Ok(Outcome { stdout, files: vec![out.to_path_buf(), script] })
}

/// `--expect` override for `verify`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expect {
    Extinct,
    Attract,
    Persist,
}

impl std::str::FromStr for Expect {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "extinct" => Ok(Expect::Extinct),
            "attract" => Ok(Expect::Attract),
            "persist" => Ok(Expect::Persist),
            _ => Err(format!("expected one of extinct, attract, persist; got `{s}`")),
        }
    }
}

fn forced_expectation(report: &ClassificationReport<f64>, e: Expect) -> Expectation<f64> {
    match e {
        Expect::Extinct => Expectation::Extinction,
        Expect::Attract => {
            let target = report.attractor.clone().or_else(|| {
                let mut interior = report.equilibria.interior();
                match (interior.next(), interior.next()) {
                    (Some(p), None) => Some(p.x.clone()),
                    _ => None,
                }
            });
            Expectation::Attraction { target }
        }
        Expect::Persist => Expectation::PatchPersistence,
    }
}

fn verify_error(e: VerifyError) -> CliError {
    match e {
        VerifyError::Simulation { source: SimError::NumericalFailure { .. }, .. } => CliError::Numerical(e.to_string()),
        _ => CliError::Input(e.to_string()),
    }
}

pub fn cmd_verify(source: &str, trials: Option<usize>, expect: Option<Expect>) -> Result<Outcome, CliError> {
    let sc = load_scenario(source)?;
    let trials = trials.unwrap_or(sc.verify.trials);
    if trials == 0 {
        return Err(CliError::input("--trials", "must be at least 1"));
    }
    let report = classify(&sc.system);
    check_invariants(&report)?;
    let mut opts = VerifyOptions::new(sc.sim, trials);
    opts.window = sc.verify.window;
    opts.thresholds = sc.verify.thresholds;
    let vr: VerificationReport<f64> = match expect {
        None => verify_prediction(&sc.system, &report, &opts),
        Some(e) => {
            let ex = [forced_expectation(&report, e)];
            verify_expectations(&sc.system, &ex, &default_histories(sc.system.n(), trials), &opts)
        }
    }
    .map_err(verify_error)?;

    let dir = report_dir()?;
    let stem = file_stem(&sc.name);
    let mut files = Vec::new();
    let mut failed_paths = Vec::new();
    for t in vr.failures() {
        let p = dir.join(format!("{stem}.trial-{}.csv", file_stem(&t.label)));
        let stride = (t.trajectory.steps() / 5000).max(1);
        write(&p, &t.trajectory.to_csv(stride))?;
        failed_paths.push(p.clone());
        files.push(p);
    }
    let txt = dir.join(format!("{stem}.verify.txt"));
    let js = dir.join(format!("{stem}.verify.json"));
    write(&txt, &render::verification(&sc, &report, &vr, &failed_paths))?;
    let doc = json!({ "scenario": sc.name, "summary": report.summary, "verification": vr });
    write(&js, &serde_json::to_string_pretty(&doc).expect("report serializes"))?;
    files.extend([txt.clone(), js.clone()]);

    let mut out = String::new();
    writeln!(out, "{}", render::summary_line(&report)).unwrap();
    if let Some(note) = &vr.note {
        writeln!(out, "{note}").unwrap();
    }
    for t in &vr.trials {
        writeln!(out, "{}", render::trial_line(t)).unwrap();
    }
    writeln!(out, "reports: {} {}", txt.display(), js.display()).unwrap();
    if !vr.passed() {
        let paths: Vec<String> = failed_paths.iter().map(|p| p.display().to_string()).collect();
        return Err(CliError::Contradiction(format!(
            "{} of {} trials contradict the prediction; trajectories: {}\n{out}",
            failed_paths.len(),
            vr.trials.len(),
            paths.join(", ")
        )));
    }
    Ok(Outcome { stdout: out, files })
}

pub fn cmd_scenarios_list() -> Outcome {
    let mut stdout = String::new();
    for name in builtin_names() {
        writeln!(stdout, "{name}").unwrap();
    }
    Outcome { stdout, files: Vec::new() }
}

pub fn cmd_scenarios_export(name: &str, out: Option<&Path>) -> Result<Outcome, CliError> {
    let text = builtin_text(name).ok_or_else(|| CliError::Input(format!("unknown builtin scenario `{name}`")))?;
    match out {
        Some(p) => {
            write(p, text)?;
            Ok(Outcome { stdout: format!("wrote {}\n", p.display()), files: vec![p.to_path_buf()] })
        }
        None => Ok(Outcome { stdout: text.to_string(), files: Vec::new() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_parses() {
        for name in builtin_names() {
            let sc = builtin(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(sc.name, name);
            assert!(!sc.histories.is_empty(), "{name}");
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::input("model.mu", "missing").exit_code(), 1);
        assert_eq!(CliError::Contradiction(String::new()).exit_code(), 2);
        assert_eq!(CliError::Numerical(String::new()).exit_code(), 3);
        assert_eq!(sim_error(SimError::NumericalFailure { t: 1.0, component: 1, value: -1.0 }).exit_code(), 3);
    }
}
