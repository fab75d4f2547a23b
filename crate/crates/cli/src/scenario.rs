//! Scenario files (TOML): model, kernels, named histories, simulation and
//! verification settings.
//!
//! Numbers may be written as TOML integers or floats, or as strings holding
//! an exact fraction such as `"13/45"`, which parse to the nearest double.

use lvpatch_core::classifier::Thresholds;
use lvpatch_core::{CanonicalForm, DelayKernel, HistoryFunction, Matrix, PatchSystem, RawPatchForm, SimError, SimOptions};
use serde::Deserialize;

use crate::CliError;

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum Num {
    Int(i64),
    Float(f64),
    Text(String),
}

fn parse_number(text: &str) -> Option<f64> {
    let t = text.trim();
    match t.split_once('/') {
        Some((p, q)) => {
            let (p, q): (f64, f64) = (p.trim().parse().ok()?, q.trim().parse().ok()?);
            (q != 0.0).then(|| p / q)
        }
        None => t.parse().ok(),
    }
}

impl Num {
    fn value(&self, field: &str) -> Result<f64, CliError> {
        let v = match self {
            Num::Int(i) => *i as f64,
            Num::Float(f) => *f,
            Num::Text(s) => parse_number(s).ok_or_else(|| CliError::input(field, format!("`{s}` is not a number or fraction")))?,
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(CliError::input(field, "must be finite"))
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    description: Option<String>,
    model: Option<RawModel>,
    kernels: Option<RawKernels>,
    histories: Option<Vec<RawHistory>>,
    sim: Option<RawSim>,
    verify: Option<RawVerify>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    beta: Option<Vec<Num>>,
    b: Option<Vec<Num>>,
    mu: Option<Vec<Num>>,
    a: Option<Vec<Vec<Num>>>,
    d: Option<Vec<Vec<Num>>>,
    alpha: Option<Vec<Vec<Num>>>,
    eps: Option<Vec<Vec<Num>>>,
    gamma: Option<Vec<Vec<Num>>>,
    tau: Option<Vec<Vec<Num>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernel {
    family: String,
    rate: Option<Num>,
    shape: Option<u32>,
    width: Option<Num>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernelEntry {
    i: usize,
    j: usize,
    family: String,
    rate: Option<Num>,
    shape: Option<u32>,
    width: Option<Num>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernels {
    default: Option<RawKernel>,
    entries: Option<Vec<RawKernelEntry>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawHistory {
    name: String,
    kind: String,
    c: Option<Vec<Num>>,
    eps: Option<Vec<Num>>,
    omega: Option<Num>,
    horizon: Option<Num>,
    times: Option<Vec<Num>>,
    values: Option<Vec<Vec<Num>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSim {
    h: Option<Num>,
    t_end: Option<Num>,
    tail_eps: Option<Num>,
    positivity_floor: Option<Num>,
    max_halvings: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerify {
    trials: Option<usize>,
    window: Option<Num>,
    extinction: Option<Num>,
    attraction: Option<Num>,
    dissipativity: Option<Num>,
    persistence: Option<Num>,
    floor_fraction: Option<Num>,
    weak: Option<Num>,
}

#[derive(Clone, Debug)]
pub struct VerifySettings {
    pub trials: usize,
    pub window: f64,
    pub thresholds: Thresholds<f64>,
}

/// A validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub description: Option<String>,
    pub system: PatchSystem,
    pub histories: Vec<(String, HistoryFunction<f64>)>,
    pub sim: SimOptions<f64>,
    pub verify: VerifySettings,
}

impl Scenario {
    pub fn history(&self, name: &str) -> Option<&HistoryFunction<f64>> {
        self.histories.iter().find(|(n, _)| n == name).map(|(_, h)| h)
    }
}

fn required<T>(v: Option<T>, field: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::input(field, "missing"))
}

fn vector(v: &[Num], field: &str) -> Result<Vec<f64>, CliError> {
    v.iter().enumerate().map(|(i, x)| x.value(&format!("{field}[{}]", i + 1))).collect()
}

fn matrix(rows: &[Vec<Num>], n: usize, field: &str) -> Result<Matrix, CliError> {
    if rows.len() != n {
        return Err(CliError::input(field, format!("expected {n} rows, found {}", rows.len())));
    }
    let mut out = Vec::with_capacity(n);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(CliError::input(field, format!("row {} has {} entries, expected {n}", i + 1, row.len())));
        }
        out.push(row.iter().enumerate().map(|(j, x)| x.value(&format!("{field}[{},{}]", i + 1, j + 1))).collect::<Result<Vec<_>, _>>()?);
    }
    Ok(Matrix::from_rows(&out))
}

fn opt_matrix(rows: &Option<Vec<Vec<Num>>>, n: usize, field: &str) -> Result<Matrix, CliError> {
    rows.as_ref().map_or_else(|| Ok(Matrix::zeros(n)), |r| matrix(r, n, field))
}

fn kernel(family: &str, rate: &Option<Num>, shape: Option<u32>, width: &Option<Num>, field: &str) -> Result<DelayKernel<f64>, CliError> {
    let num = |v: &Option<Num>, name: &str| -> Result<f64, CliError> {
        let f = format!("{field}.{name}");
        v.as_ref().ok_or_else(|| CliError::input(&f, "missing"))?.value(&f)
    };
    let k = match family {
        "exponential" => DelayKernel::exponential(num(rate, "rate")?),
        "erlang" => DelayKernel::erlang(required(shape, &format!("{field}.shape"))?, num(rate, "rate")?),
        "uniform" => DelayKernel::uniform(num(width, "width")?),
        other => return Err(CliError::input(format!("{field}.family"), format!("unknown kernel family `{other}`"))),
    };
    k.validate(field).map_err(|e| CliError::input(e.field(), e.to_string()))?;
    Ok(k)
}

fn kernel_grid(raw: &Option<RawKernels>, n: usize) -> Result<Vec<Vec<DelayKernel<f64>>>, CliError> {
    let default = match raw.as_ref().and_then(|k| k.default.as_ref()) {
        Some(k) => kernel(&k.family, &k.rate, k.shape, &k.width, "kernels.default")?,
        None => DelayKernel::exponential(1.0),
    };
    let mut grid = vec![vec![default; n]; n];
    for (idx, e) in raw.iter().flat_map(|k| k.entries.iter().flatten()).enumerate() {
        let field = format!("kernels.entries[{}]", idx + 1);
        if !(1..=n).contains(&e.i) || !(1..=n).contains(&e.j) {
            return Err(CliError::input(&field, format!("patch index ({},{}) out of range 1..={n}", e.i, e.j)));
        }
        grid[e.i - 1][e.j - 1] = kernel(&e.family, &e.rate, e.shape, &e.width, &field)?;
    }
    Ok(grid)
}

fn model_error(e: lvpatch_core::ModelError) -> CliError {
    let f = e.field();
    let field = if f.starts_with("kernels") { f.to_string() } else { format!("model.{f}") };
    CliError::input(field, e.to_string())
}

fn build_system(m: &RawModel, kernels: &Option<RawKernels>) -> Result<PatchSystem, CliError> {
    let mu = vector(required(m.mu.as_ref(), "model.mu")?, "model.mu")?;
    let n = mu.len();
    if n == 0 {
        return Err(CliError::input("model.mu", "at least one patch is required"));
    }
    let kernels = kernel_grid(kernels, n)?;
    let a = opt_matrix(&m.a, n, "model.a")?;
    let tau = opt_matrix(&m.tau, n, "model.tau")?;
    let sys = match (&m.beta, &m.b) {
        (Some(_), Some(_)) => return Err(CliError::input("model.b", "give either beta (canonical form) or b (patch form)")),
        (None, None) => return Err(CliError::input("model.beta", "missing (or give b for the patch form)")),
        (Some(beta), None) => {
            for key in [("alpha", m.alpha.is_some()), ("eps", m.eps.is_some()), ("gamma", m.gamma.is_some())] {
                if key.1 {
                    return Err(CliError::input(format!("model.{}", key.0), "only valid in the patch form (with b)"));
                }
            }
            let beta = vector(beta, "model.beta")?;
            let d = opt_matrix(&m.d, n, "model.d")?;
            PatchSystem::new(CanonicalForm { beta, mu, a, d, tau, kernels })
        }
        (None, Some(b)) => {
            if m.d.is_some() {
                return Err(CliError::input("model.d", "the patch form derives d from alpha"));
            }
            let b = vector(b, "model.b")?;
            let alpha = opt_matrix(&m.alpha, n, "model.alpha")?;
            let eps = m.eps.as_ref().map(|e| matrix(e, n, "model.eps")).transpose()?;
            let gamma = m.gamma.as_ref().map(|g| matrix(g, n, "model.gamma")).transpose()?;
            PatchSystem::from_patch_form(RawPatchForm { b, mu, a, alpha, eps, gamma, tau, kernels })
        }
    };
    sys.map_err(model_error)
}

fn history_error(name: &str, e: SimError) -> CliError {
    match e.field() {
        Some(f) => CliError::input(format!("histories.{name}.{f}"), e.to_string()),
        None => CliError::input(format!("histories.{name}"), e.to_string()),
    }
}

fn build_history(h: &RawHistory, n: usize) -> Result<HistoryFunction<f64>, CliError> {
    let p = format!("histories.{}", h.name);
    let vec_of = |v: &Option<Vec<Num>>, key: &str| -> Result<Vec<f64>, CliError> {
        let f = format!("{p}.{key}");
        let v = vector(required(v.as_ref(), &f)?, &f)?;
        if v.len() != n {
            return Err(CliError::input(&f, format!("expected {n} entries, found {}", v.len())));
        }
        Ok(v)
    };
    let num = |v: &Option<Num>, key: &str| -> Result<f64, CliError> {
        let f = format!("{p}.{key}");
        required(v.as_ref(), &f)?.value(&f)
    };
    let made = match h.kind.as_str() {
        "constant" => HistoryFunction::constant(vec_of(&h.c, "c")?),
        "oscillatory" => {
            HistoryFunction::oscillatory(vec_of(&h.c, "c")?, vec_of(&h.eps, "eps")?, num(&h.omega, "omega")?, num(&h.horizon, "horizon")?)
        }
        "sampled" => {
            let times = vector(required(h.times.as_ref(), &format!("{p}.times"))?, &format!("{p}.times"))?;
            let rows = required(h.values.as_ref(), &format!("{p}.values"))?;
            let values = rows
                .iter()
                .enumerate()
                .map(|(k, r)| {
                    let f = format!("{p}.values[{}]", k + 1);
                    let v = vector(r, &f)?;
                    if v.len() != n {
                        return Err(CliError::input(&f, format!("expected {n} entries, found {}", v.len())));
                    }
                    Ok(v)
                })
                .collect::<Result<Vec<_>, _>>()?;
            HistoryFunction::sampled(times, values)
        }
        other => return Err(CliError::input(format!("{p}.kind"), format!("unknown history kind `{other}`"))),
    };
    made.map_err(|e| history_error(&h.name, e))
}

/// Parses and validates scenario text. `origin` names the source in
/// syntax errors.
pub fn parse_scenario(text: &str, origin: &str) -> Result<Scenario, CliError> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| CliError::Input(format!("{origin}: {}", e.to_string().trim_end())))?;
    let model = required(raw.model.as_ref(), "model")?;
    let system = build_system(model, &raw.kernels)?;
    let n = system.n();

    let mut histories = Vec::new();
    for h in raw.histories.iter().flatten() {
        if histories.iter().any(|(name, _)| name == &h.name) {
            return Err(CliError::input(format!("histories.{}", h.name), "duplicate history name"));
        }
        histories.push((h.name.clone(), build_history(h, n)?));
    }

    let rs = required(raw.sim.as_ref(), "sim")?;
    let num =
        |v: &Option<Num>, key: &str| -> Result<Option<f64>, CliError> { v.as_ref().map(|x| x.value(&format!("sim.{key}"))).transpose() };
    let mut sim = SimOptions::new(required(num(&rs.h, "h")?, "sim.h")?, required(num(&rs.t_end, "t_end")?, "sim.t_end")?);
    if let Some(v) = num(&rs.tail_eps, "tail_eps")? {
        sim.tail_eps = v;
    }
    if let Some(v) = num(&rs.positivity_floor, "positivity_floor")? {
        sim.positivity_floor = v;
    }
    if let Some(v) = rs.max_halvings {
        sim.max_halvings = v;
    }
    sim.validate(&system).map_err(|e| CliError::input(format!("sim.{}", e.field().unwrap_or("")), e.to_string()))?;

    let mut verify = VerifySettings { trials: 5, window: 0.1, thresholds: Thresholds::default() };
    if let Some(v) = &raw.verify {
        let num = |x: &Option<Num>, key: &str, slot: &mut f64| -> Result<(), CliError> {
            if let Some(x) = x {
                let f = format!("verify.{key}");
                let val = x.value(&f)?;
                if val.is_nan() || val <= 0.0 {
                    return Err(CliError::input(f, "must be positive"));
                }
                *slot = val;
            }
            Ok(())
        };
        if let Some(t) = v.trials {
            if t == 0 {
                return Err(CliError::input("verify.trials", "must be at least 1"));
            }
            verify.trials = t;
        }
        let th = &mut verify.thresholds;
        num(&v.window, "window", &mut verify.window)?;
        num(&v.extinction, "extinction", &mut th.extinction)?;
        num(&v.attraction, "attraction", &mut th.attraction)?;
        num(&v.dissipativity, "dissipativity", &mut th.dissipativity)?;
        num(&v.persistence, "persistence", &mut th.persistence)?;
        num(&v.floor_fraction, "floor_fraction", &mut th.floor_fraction)?;
        num(&v.weak, "weak", &mut th.weak)?;
        if verify.window > 1.0 {
            return Err(CliError::input("verify.window", "must not exceed 1"));
        }
    }

    Ok(Scenario { name: raw.name.unwrap_or_else(|| origin.to_string()), description: raw.description, system, histories, sim, verify })
}
