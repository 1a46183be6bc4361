//! Scenario files: JSON with dotted `--set` overrides, validated before any compute.

use std::path::Path;

use bathdyn::nonmarkov::TraceConvention;
use bathdyn::{Beta, ReservoirModel, TimeGrid, C64};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Kernels,
    Dissipation,
    Coefficients,
    Steady,
    SweepEta,
    SweepOmegac,
    BoundstateMap,
    Occupation,
    Nonmarkov,
    OracleCheck,
    CavityArray,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Kernels => "kernels",
            Self::Dissipation => "dissipation",
            Self::Coefficients => "coefficients",
            Self::Steady => "steady",
            Self::SweepEta => "sweep_eta",
            Self::SweepOmegac => "sweep_omegac",
            Self::BoundstateMap => "boundstate_map",
            Self::Occupation => "occupation",
            Self::Nonmarkov => "nonmarkov",
            Self::OracleCheck => "oracle_check",
            Self::CavityArray => "cavity_array",
        }
    }
}

/// A finite inverse temperature or the string "inf".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaSpec {
    Value(f64),
    Text(String),
}

impl BetaSpec {
    fn resolve(&self) -> CliResult<Beta> {
        match self {
            Self::Value(b) => Beta::new(*b).map_err(|e| CliError::schema(format!("model.beta: {e}"))),
            Self::Text(s) if s == "inf" || s == "infinity" => Ok(Beta::Infinite),
            Self::Text(s) => Err(CliError::schema(format!("model.beta: expected a number or \"inf\", found {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Ohmic { eta: f64, s: f64, omega_c: f64, beta: BetaSpec },
    /// With `relative_to_cavity`, xi and g are fractions of omega_cav and beta is in units of 1/omega_cav.
    Cavity {
        omega_cav: f64,
        xi: f64,
        g: f64,
        n_modes: usize,
        beta: BetaSpec,
        #[serde(default)]
        relative_to_cavity: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t_max: f64,
    pub dt: f64,
    #[serde(default)]
    pub allow_coarse: bool,
}

/// Either explicit `values` or an inclusive `start..=stop` range with `step`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

impl Axis {
    fn points(&self, name: &str) -> CliResult<Vec<f64>> {
        let range = (self.start, self.stop, self.step);
        match (self.values.is_empty(), range) {
            (false, (None, None, None)) => {
                if self.values.iter().any(|v| !v.is_finite()) {
                    return Err(CliError::schema(format!("sweep.{name}.values must be finite")));
                }
                Ok(self.values.clone())
            }
            (true, (Some(a), Some(b), Some(h))) => {
                if !(h > 0.0 && b >= a && a.is_finite() && b.is_finite()) {
                    return Err(CliError::schema(format!("sweep.{name}: need step > 0 and stop >= start")));
                }
                let n = ((b - a) / h + 1e-9).floor() as usize;
                if n > 100_000 {
                    return Err(CliError::schema(format!("sweep.{name}: more than 100000 points")));
                }
                Ok((0..=n).map(|i| a + i as f64 * h).collect())
            }
            _ => Err(CliError::schema(format!("sweep.{name}: give either values or start/stop/step"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_c: Option<Axis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_cav: Option<Axis>,
}

/// A real amplitude or a `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Amplitude {
    Real(f64),
    Complex([f64; 2]),
}

impl Amplitude {
    pub fn value(self) -> C64 {
        match self {
            Self::Real(x) => C64::new(x, 0.0),
            Self::Complex([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alpha0: Vec<Amplitude>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub populations: Option<Vec<f64>>,
}

fn default_stride() -> usize {
    1
}
fn default_oracle_modes() -> usize {
    4000
}
fn default_omega_max_over_cutoff() -> f64 {
    25.0
}
fn default_output_every() -> usize {
    100
}
fn default_leakage() -> f64 {
    1e-6
}
fn default_u_floor() -> f64 {
    bathdyn::dissipation::U_FLOOR
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConventionConfig {
    TrNorm,
    HalfTrNorm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    /// Time at which asymptotic coefficients are read (default t_max).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_eval: Option<f64>,
    /// Grid samples between CSV rows.
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convention: Option<ConventionConfig>,
    #[serde(default = "default_oracle_modes")]
    pub oracle_modes: usize,
    /// Upper frequency of the discretized continuum in units of ω_c.
    #[serde(default = "default_omega_max_over_cutoff")]
    pub oracle_omega_max: f64,
    /// Also propagate the Fock-space master equation.
    #[serde(default)]
    pub evolve: bool,
    #[serde(default = "default_output_every")]
    pub output_every: usize,
    #[serde(default = "default_leakage")]
    pub leakage_bound: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fock_dim: Option<usize>,
    #[serde(default = "default_u_floor")]
    pub u_floor: f64,
    #[serde(default)]
    pub allow_invalid: bool,
}

impl Default for Options {
    fn default() -> Self {
        serde_json::from_value(Value::Object(Default::default())).expect("defaults deserialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub task: Task,
    pub model: ModelConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub options: Options,
}

/// Reads a scenario file as raw JSON.
pub fn load(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::schema(format!("{}: {e}", path.display())))
}

/// Applies `key.sub=value`; the value is parsed as JSON and kept as a string otherwise.
pub fn apply_set(root: &mut Value, assignment: &str) -> CliResult<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::schema(format!("--set expects key=value, found {assignment:?}")))?;
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::schema(format!("--set: malformed key {key:?}")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    for part in &parts[..parts.len() - 1] {
        let obj = node.as_object_mut().ok_or_else(|| CliError::schema(format!("--set: {key:?} does not address an object")))?;
        node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    let obj = node.as_object_mut().ok_or_else(|| CliError::schema(format!("--set: {key:?} does not address an object")))?;
    obj.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

pub fn parse(value: Value) -> CliResult<ScenarioConfig> {
    serde_json::from_value(value).map_err(|e| CliError::schema(e.to_string()))
}

/// One parameter point of a scenario.
#[derive(Debug, Clone)]
pub struct Point {
    /// Swept parameter values, in axis order.
    pub params: Vec<f64>,
    pub model: ReservoirModel,
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub grid: TimeGrid,
    /// Names of the swept axes (empty for a single point).
    pub axes: Vec<&'static str>,
    pub points: Vec<Point>,
    pub t_eval: f64,
    pub convention: TraceConvention,
}

fn build_model(m: &ModelConfig, eta: Option<f64>, omega_c: Option<f64>, omega_cav: Option<f64>) -> CliResult<ReservoirModel> {
    let map = |e: bathdyn::Error| CliError::schema(format!("model: {e}"));
    match m {
        ModelConfig::Ohmic { eta: e0, s, omega_c: w0, beta } => {
            ReservoirModel::ohmic(eta.unwrap_or(*e0), *s, omega_c.unwrap_or(*w0), beta.resolve()?).map_err(map)
        }
        ModelConfig::Cavity { omega_cav: w0, xi, g, n_modes, beta, relative_to_cavity } => {
            let wc = omega_cav.unwrap_or(*w0);
            let (scale, beta) = match (relative_to_cavity, beta.resolve()?) {
                (true, Beta::Finite(b)) => (wc, Beta::new(b / wc).map_err(map)?),
                (true, b) => (wc, b),
                (false, b) => (1.0, b),
            };
            let model = ReservoirModel::cavity(wc, xi * scale, g * scale, *n_modes, beta).map_err(map)?;
            model.validate().map_err(map)?;
            Ok(model)
        }
    }
}

fn allowed_axes(task: Task) -> &'static [&'static str] {
    match task {
        Task::Kernels | Task::Steady | Task::OracleCheck => &[],
        Task::SweepEta => &["eta"],
        Task::SweepOmegac => &["omega_c"],
        Task::BoundstateMap => &["eta", "omega_c"],
        Task::CavityArray => &["omega_cav"],
        Task::Dissipation | Task::Coefficients | Task::Occupation | Task::Nonmarkov => &["eta", "omega_c"],
    }
}

pub fn validate(config: ScenarioConfig) -> CliResult<Scenario> {
    let task = config.task;
    let grid = TimeGrid::new(config.grid.t_max, config.grid.dt).map_err(|e| CliError::schema(format!("grid: {e}")))?;

    let mut axes: Vec<(&'static str, Vec<f64>)> = Vec::new();
    for (name, axis) in [("eta", &config.sweep.eta), ("omega_c", &config.sweep.omega_c), ("omega_cav", &config.sweep.omega_cav)] {
        if let Some(axis) = axis {
            if !allowed_axes(task).contains(&name) {
                return Err(CliError::schema(format!("task {} does not accept sweep.{name}", task.as_str())));
            }
            axes.push((name, axis.points(name)?));
        }
    }
    let ohmic = matches!(config.model, ModelConfig::Ohmic { .. });
    let needs = |name: &str| -> CliResult<()> {
        if axes.iter().any(|(n, _)| *n == name) {
            Ok(())
        } else {
            Err(CliError::schema(format!("task {} requires sweep.{name}", task.as_str())))
        }
    };
    match task {
        Task::SweepEta => needs("eta")?,
        Task::SweepOmegac => needs("omega_c")?,
        Task::BoundstateMap => {
            needs("eta")?;
            needs("omega_c")?;
        }
        Task::Dissipation | Task::Coefficients | Task::Occupation | Task::Nonmarkov if axes.len() > 1 => {
            return Err(CliError::schema(format!("task {} accepts at most one sweep axis", task.as_str())));
        }
        _ => {}
    }
    if axes.iter().any(|(n, _)| *n == "eta" || *n == "omega_c") && !ohmic {
        return Err(CliError::schema("sweep.eta and sweep.omega_c require an ohmic model"));
    }
    if task == Task::CavityArray && ohmic {
        return Err(CliError::schema("task cavity_array requires a cavity model"));
    }
    if matches!(task, Task::BoundstateMap | Task::SweepEta | Task::SweepOmegac) && !ohmic {
        return Err(CliError::schema(format!("task {} requires an ohmic model", task.as_str())));
    }

    let mut combos: Vec<Vec<f64>> = vec![Vec::new()];
    for (_, values) in &axes {
        combos = combos.iter().flat_map(|c| values.iter().map(move |&v| [c.as_slice(), &[v]].concat())).collect();
    }
    let mut points = Vec::with_capacity(combos.len());
    for params in combos {
        let get = |name: &str| axes.iter().position(|(n, _)| *n == name).map(|i| params[i]);
        let model = build_model(&config.model, get("eta"), get("omega_c"), get("omega_cav"))?;
        if !matches!(task, Task::BoundstateMap | Task::Kernels) {
            grid.check_resolution(&model, config.grid.allow_coarse).map_err(|e| {
                CliError::schema(format!("grid: {e} (set grid.allow_coarse to override) at parameters {params:?}"))
            })?;
        }
        points.push(Point { params, model });
    }

    let t_eval = config.options.t_eval.unwrap_or(grid.t_max);
    if !(t_eval > 0.0 && t_eval <= grid.t_max + 1e-12) {
        return Err(CliError::schema(format!("options.t_eval = {t_eval} must lie in (0, grid.t_max]")));
    }
    if config.options.stride == 0 || config.options.output_every == 0 {
        return Err(CliError::schema("options.stride and options.output_every must be positive"));
    }
    if !(config.options.leakage_bound > 0.0) || !(config.options.u_floor >= 0.0) {
        return Err(CliError::schema("options.leakage_bound must be positive and options.u_floor nonnegative"));
    }
    if task == Task::Nonmarkov && points.iter().any(|p| !p.model.beta.is_zero_temperature()) {
        return Err(CliError::schema("task nonmarkov requires model.beta = \"inf\""));
    }
    if task == Task::Occupation && config.initial.alpha0.is_empty() && config.initial.populations.is_none() {
        return Err(CliError::schema("task occupation requires initial.alpha0 or initial.populations"));
    }
    if let Some(p) = &config.initial.populations {
        if p.is_empty() || p.iter().any(|&x| !(x >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(CliError::schema("initial.populations must be nonnegative and sum to 1"));
        }
        if config.options.evolve && !config.initial.alpha0.is_empty() {
            return Err(CliError::schema("give either initial.alpha0 or initial.populations when options.evolve is set"));
        }
    }
    if task == Task::Occupation && config.initial.alpha0.is_empty() && !config.options.evolve {
        return Err(CliError::schema("initial.populations is only used with options.evolve"));
    }
    if task == Task::OracleCheck && ohmic && config.options.oracle_modes < 100 {
        return Err(CliError::schema("options.oracle_modes must be at least 100"));
    }
    let convention = match config.options.convention {
        None | Some(ConventionConfig::TrNorm) => TraceConvention::SupplementTrNorm,
        Some(ConventionConfig::HalfTrNorm) => TraceConvention::HalfTrNorm,
    };
    Ok(Scenario { axes: axes.iter().map(|(n, _)| *n).collect(), config, grid, points, t_eval, convention })
}
