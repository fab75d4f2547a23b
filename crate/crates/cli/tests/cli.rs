use std::path::Path;
use std::process::{Command, Output};

use lvpatch_cli::{builtin_text, parse_scenario};

fn lvpatch(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lvpatch"))
        .args(args)
        .env("LVPATCH_REPORT_DIR", dir.join("reports"))
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn last_row(csv: &str) -> Vec<f64> {
    csv.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect()
}

#[test]
fn analyze_builtins() {
    let dir = tempfile::tempdir().unwrap();
    let o = lvpatch(dir.path(), &["analyze", "paper-counterexample"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("summary: FullyInconclusive"));
    let txt = std::fs::read_to_string(dir.path().join("reports/paper-counterexample.analysis.txt")).unwrap();
    assert!(txt.contains("s(M0) = -1.2917"), "{txt}");
    assert!(txt.contains("ExtinctionAttractive         HypothesisFailed"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("reports/paper-counterexample.analysis.json")).unwrap()).unwrap();
    assert_eq!(json["report"]["summary"], "FullyInconclusive");

    let o = lvpatch(dir.path(), &["analyze", "paper-4-14-positive-beta"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("PositiveEquilibriumGloballyAttractive") && out.contains("0.666666666667, 0.666666666667"), "{out}");
}

#[test]
fn malformed_scenario_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let text = builtin_text("cooperative-2d").unwrap().replace("mu = [2, 2]\n", "");
    std::fs::write(dir.path().join("bad.toml"), text).unwrap();
    let o = lvpatch(dir.path(), &["analyze", "bad.toml"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("model.mu"), "{}", stderr(&o));

    let text = builtin_text("cooperative-2d").unwrap().replace("[sim]", "[sim]\nstep = 1");
    std::fs::write(dir.path().join("unknown.toml"), text).unwrap();
    let o = lvpatch(dir.path(), &["analyze", "unknown.toml"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("step"), "{}", stderr(&o));

    let o = lvpatch(dir.path(), &["analyze", "missing.toml"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn simulate_writes_csv_and_plot_script() {
    let dir = tempfile::tempdir().unwrap();
    let o = lvpatch(dir.path(), &["simulate", "logistic-1d", "--history", "low", "--out", "out/logistic.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("out/logistic.csv")).unwrap();
    assert!(csv.starts_with("t,x1\n"));
    let row = last_row(&csv);
    assert!((row[0] - 50.0).abs() < 1e-9 && (row[1] - 1.0).abs() < 1e-8, "{row:?}");
    let gp = std::fs::read_to_string(dir.path().join("out/logistic.gp")).unwrap();
    assert!(gp.contains("'logistic.csv'"));

    let o = lvpatch(dir.path(), &["simulate", "paper-counterexample", "--history", "equilibrium", "--out", "eq.csv"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("eq.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let r: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert!((r[1] - 1.0).abs() < 1e-7 && (r[2] - 1.5).abs() < 1e-7, "{line}");
    }

    let o = lvpatch(dir.path(), &["simulate", "logistic-1d", "--history", "nope", "--out", "x.csv"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn oversized_step_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = builtin_text("cooperative-2d").unwrap().replace("h = 0.01", "h = 0.5");
    std::fs::write(dir.path().join("big.toml"), text).unwrap();
    let o = lvpatch(dir.path(), &["simulate", "big.toml", "--history", "low", "--out", "x.csv"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("sim.h"), "{}", stderr(&o));
}

#[test]
fn numerical_failure_exits_3() {
    // explicit RK4 with h * |rate| = 10 is far outside its stability region
    let dir = tempfile::tempdir().unwrap();
    let text = "[model]\nbeta = [-100]\nmu = [1]\n[[histories]]\nname = \"one\"\nkind = \"constant\"\nc = [1]\n[sim]\nh = 0.1\nt_end = 5\nmax_halvings = 0\n";
    std::fs::write(dir.path().join("stiff.toml"), text).unwrap();
    let o = lvpatch(dir.path(), &["simulate", "stiff.toml", "--history", "one", "--out", "x.csv"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = lvpatch(dir.path(), &["verify", "extinction-2d"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o).matches("PASS").count(), 5);

    let o = lvpatch(dir.path(), &["verify", "paper-counterexample", "--trials", "2"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("nothing to verify"));

    // flipping the sign of d is rejected outright
    let base = builtin_text("cooperative-2d").unwrap();
    let flipped = base.replace("d = [[0, \"3/10\"], [\"3/10\", 0]]", "d = [[0, \"-3/10\"], [\"-3/10\", 0]]");
    assert_ne!(flipped, base);
    std::fs::write(dir.path().join("flipped.toml"), &flipped).unwrap();
    let o = lvpatch(dir.path(), &["verify", "flipped.toml", "--expect", "attract"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("model.d"), "{}", stderr(&o));

    // dispersal losses outweighing growth: the populations die out, so an
    // attraction claim is contradicted
    let corrupted = base.replace("beta = [1, 1]", "beta = [-1, -1]");
    std::fs::write(dir.path().join("corrupted.toml"), corrupted.replace("t_end = 500", "t_end = 100")).unwrap();
    let o = lvpatch(dir.path(), &["verify", "corrupted.toml", "--trials", "2", "--expect", "attract"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("trial-constant-0_1.csv"), "{}", stderr(&o));
    assert!(dir.path().join("reports/cooperative-2d.trial-oscillatory.csv").exists());

    let o = lvpatch(dir.path(), &["verify", "extinction-2d", "--expect", "sideways"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn scenarios_list_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let o = lvpatch(dir.path(), &["scenarios", "list"]);
    assert_eq!(code(&o), 0);
    let names: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(
        names,
        [
            "paper-counterexample",
            "paper-4-14-positive-beta",
            "paper-4-14-cooperative-majorant",
            "paper-5-10-coefficient",
            "takeuchi-form",
            "liu-form",
            "logistic-1d",
            "extinction-2d",
            "cooperative-2d"
        ]
    );

    for name in &names {
        let o = lvpatch(dir.path(), &["scenarios", "export", name, "--out", "exported.toml"]);
        assert_eq!(code(&o), 0);
        let exported = std::fs::read_to_string(dir.path().join("exported.toml")).unwrap();
        assert_eq!(exported, builtin_text(name).unwrap());
        let bundled = parse_scenario(builtin_text(name).unwrap(), name).unwrap().system.derived_matrices();
        let again = parse_scenario(&exported, name).unwrap().system.derived_matrices();
        assert_eq!(bundled, again);
    }
    let sc = parse_scenario(&std::fs::read_to_string(dir.path().join("exported.toml")).unwrap(), "x").unwrap();
    assert_eq!(sc.system.n(), 2);

    let o = lvpatch(dir.path(), &["scenarios", "export", "paper-counterexample"]);
    let sc = parse_scenario(&stdout(&o), "stdout").unwrap();
    assert_eq!(sc.system.derived_matrices().m0.rows(), vec![vec![-2.0, 1.0], vec![3.5, -2.0]]);

    let o = lvpatch(dir.path(), &["scenarios", "export", "nope"]);
    assert_eq!(code(&o), 1);
}
