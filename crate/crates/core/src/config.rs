//! Experiment configuration files.
//!
//! TOML with the sections `[scenario]`, `[filter]`, `[planner]`,
//! `[experiment]` and `[sweep]`. Angles are given in degrees under `*_deg`
//! keys and converted to radians only when a [`Scenario`] or filter
//! configuration is built.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{FilterParams, GridSpec, SimSettings, SweepParameter};
use crate::filters::FilterKind;
use crate::geometry::{Pose2, TargetPosition};
use crate::planners::{PlannerConfig, PlannerKind};
use crate::sim_env::{Rect, Scenario};

/// Scenario fields in config units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSection {
    pub name: String,
    pub truth: [f64; 2],
    pub start: [f64; 2],
    pub arena: f64,
    pub p_nlos: f64,
    pub mu_nlos: f64,
    pub sigma_b_theta_deg: f64,
    pub delta_r: f64,
    pub delta_theta_deg: f64,
    pub sigma_r: f64,
    pub sigma_theta_deg: f64,
    pub p_nlos_clear: f64,
    pub shared_nlos_flag: bool,
    pub obstacle: Option<Rect>,
}

/// Degrees with radian round-trip noise trimmed to 12 significant digits.
fn degrees(rad: f64) -> f64 {
    let d = rad.to_degrees();
    if d == 0.0 || !d.is_finite() {
        return d;
    }
    let scale = 10f64.powi(11 - d.abs().log10().floor() as i32);
    (d * scale).round() / scale
}

impl ScenarioSection {
    fn from_scenario(s: &Scenario) -> Self {
        Self {
            name: s.name.clone(),
            truth: [s.truth.x, s.truth.y],
            start: [s.start.x, s.start.y],
            arena: s.arena,
            p_nlos: s.p_nlos,
            mu_nlos: s.mu_nlos,
            sigma_b_theta_deg: degrees(s.sigma_b_theta),
            delta_r: s.delta_r,
            delta_theta_deg: degrees(s.delta_theta),
            sigma_r: s.sigma_r,
            sigma_theta_deg: degrees(s.sigma_theta),
            p_nlos_clear: s.p_nlos_clear,
            shared_nlos_flag: s.shared_nlos_flag,
            obstacle: s.obstacle,
        }
    }
}

/// Filter tuning in config units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSection {
    pub k_rtt: f64,
    pub k_aoa: f64,
    pub sigma_delta_r: f64,
    pub sigma_delta_theta_deg: f64,
    pub init_position_std: f64,
    pub irls_iterations: usize,
    pub process_noise: f64,
    pub em_enabled: bool,
    pub em_window: usize,
    pub nominal_sigma_r: Option<f64>,
    pub nominal_sigma_theta_deg: Option<f64>,
}

impl Default for FilterSection {
    fn default() -> Self {
        let p = FilterParams::default();
        Self {
            k_rtt: p.k_rtt,
            k_aoa: p.k_aoa,
            sigma_delta_r: p.sigma_delta_r,
            sigma_delta_theta_deg: 5.0,
            init_position_std: p.init_position_std,
            irls_iterations: p.irls_iterations,
            process_noise: p.process_noise,
            em_enabled: p.em_enabled,
            em_window: p.em_window,
            nominal_sigma_r: None,
            nominal_sigma_theta_deg: None,
        }
    }
}

impl FilterSection {
    pub fn params(&self) -> FilterParams {
        FilterParams {
            k_rtt: self.k_rtt,
            k_aoa: self.k_aoa,
            sigma_delta_r: self.sigma_delta_r,
            sigma_delta_theta: self.sigma_delta_theta_deg.to_radians(),
            init_position_std: self.init_position_std,
            irls_iterations: self.irls_iterations,
            process_noise: self.process_noise,
            em_enabled: self.em_enabled,
            em_window: self.em_window,
            nominal_sigma_r: self.nominal_sigma_r,
            nominal_sigma_theta: self.nominal_sigma_theta_deg.map(f64::to_radians),
        }
    }
}

/// Planner tuning; the arena side comes from the scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerSection {
    pub eta: f64,
    pub ell: f64,
    pub eps_stop: f64,
    pub candidate_count: usize,
    pub lawnmower_spacing: f64,
}

impl Default for PlannerSection {
    fn default() -> Self {
        let p = PlannerConfig::default();
        Self {
            eta: p.eta,
            ell: p.ell,
            eps_stop: p.eps_stop,
            candidate_count: p.candidate_count,
            lawnmower_spacing: p.lawnmower_spacing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSection {
    pub filters: Vec<String>,
    pub planners: Vec<String>,
    pub runs: usize,
    pub steps: usize,
    pub seed: u64,
    pub threshold: f64,
    pub out: PathBuf,
    pub ercm_window: usize,
    pub bilateral_mu_scale: f64,
    pub timing: bool,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        let s = SimSettings::default();
        Self {
            filters: FilterKind::ALL.iter().map(|k| k.name().to_string()).collect(),
            planners: PlannerKind::ALL.iter().map(|k| k.name().to_string()).collect(),
            runs: 50,
            steps: 300,
            seed: 42,
            threshold: 2.5,
            out: PathBuf::from("results"),
            ercm_window: s.ercm_window,
            bilateral_mu_scale: s.bilateral_mu_scale,
            timing: s.timing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

/// A fully resolved experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Preset the scenario was derived from, kept for provenance.
    pub preset: Option<String>,
    pub scenario: ScenarioSection,
    pub filter: FilterSection,
    pub planner: PlannerSection,
    pub experiment: ExperimentSection,
    pub sweep: Option<SweepSection>,
}

const SCENARIO_KEYS: [&str; 15] = [
    "preset",
    "name",
    "truth",
    "start",
    "arena",
    "p_nlos",
    "mu_nlos",
    "sigma_b_theta_deg",
    "delta_r",
    "delta_theta_deg",
    "sigma_r",
    "sigma_theta_deg",
    "p_nlos_clear",
    "shared_nlos_flag",
    "obstacle",
];
const FILTER_KEYS: [&str; 11] = [
    "k_rtt",
    "k_aoa",
    "sigma_delta_r",
    "sigma_delta_theta_deg",
    "init_position_std",
    "irls_iterations",
    "process_noise",
    "em_enabled",
    "em_window",
    "nominal_sigma_r",
    "nominal_sigma_theta_deg",
];
const PLANNER_KEYS: [&str; 5] = ["eta", "ell", "eps_stop", "candidate_count", "lawnmower_spacing"];
const EXPERIMENT_KEYS: [&str; 10] = [
    "filters",
    "planners",
    "runs",
    "steps",
    "seed",
    "threshold",
    "out",
    "ercm_window",
    "bilateral_mu_scale",
    "timing",
];
const SWEEP_KEYS: [&str; 2] = ["parameter", "values"];
const OBSTACLE_KEYS: [&str; 3] = ["center", "half_width", "half_height"];

/// Keys that must be present for a config to be complete.
pub const REQUIRED_KEYS: [&str; 3] = [
    "scenario.preset (or every inline scenario key)",
    "experiment.filters",
    "experiment.planners",
];

fn config_err(key: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidValue {
        key: key.into(),
        reason: reason.into(),
    }
}

fn check_keys(table: &toml::Table, section: &str, allowed: &[&str]) -> Result<()> {
    for key in table.keys() {
        if !allowed.contains(&key.as_str()) {
            let path = if section.is_empty() {
                key.clone()
            } else {
                format!("{section}.{key}")
            };
            return Err(config_err(
                path,
                format!("unknown key (expected one of {})", allowed.join(", ")),
            ));
        }
    }
    Ok(())
}

fn section<'a>(root: &'a toml::Table, name: &str) -> Result<Option<&'a toml::Table>> {
    match root.get(name) {
        None => Ok(None),
        Some(toml::Value::Table(t)) => Ok(Some(t)),
        Some(_) => Err(config_err(name, "must be a table")),
    }
}

fn field<T: serde::de::DeserializeOwned>(table: &toml::Table, section: &str, key: &str) -> Result<Option<T>> {
    table
        .get(key)
        .map(|v| {
            v.clone()
                .try_into()
                .map_err(|e: toml::de::Error| config_err(format!("{section}.{key}"), e.message().to_string()))
        })
        .transpose()
}

macro_rules! overlay {
    ($table:expr, $section:literal, $target:expr, [$($key:ident),* $(,)?]) => {
        $(
            if let Some(v) = field($table, $section, stringify!($key))? {
                $target.$key = v;
            }
        )*
    };
}

fn parse_scenario(table: Option<&toml::Table>) -> Result<(Option<String>, ScenarioSection)> {
    let empty = toml::Table::new();
    let t = table.unwrap_or(&empty);
    check_keys(t, "scenario", &SCENARIO_KEYS)?;
    if let Some(toml::Value::Table(obs)) = t.get("obstacle") {
        check_keys(obs, "scenario.obstacle", &OBSTACLE_KEYS)?;
    }
    let preset: Option<String> = field(t, "scenario", "preset")?;
    let mut s = match &preset {
        Some(name) => ScenarioSection::from_scenario(&Scenario::preset(name)?),
        None => {
            let missing: Vec<&str> = SCENARIO_KEYS[1..]
                .iter()
                .copied()
                .filter(|k| *k != "obstacle" && !t.contains_key(*k))
                .collect();
            if !missing.is_empty() {
                return Err(Error::Config(format!(
                    "missing required keys: {}; missing scenario keys without a preset: {}",
                    REQUIRED_KEYS.join(", "),
                    missing
                        .iter()
                        .map(|k| format!("scenario.{k}"))
                        .collect::<Vec<_>>()
                        .join(", ")
                )));
            }
            ScenarioSection::from_scenario(&Scenario::preset("canonical_medium")?)
        }
    };
    overlay!(
        t,
        "scenario",
        s,
        [
            name,
            truth,
            start,
            arena,
            p_nlos,
            mu_nlos,
            sigma_b_theta_deg,
            delta_r,
            delta_theta_deg,
            sigma_r,
            sigma_theta_deg,
            p_nlos_clear,
            shared_nlos_flag,
        ]
    );
    if preset.is_none() {
        s.obstacle = None;
    }
    if let Some(obs) = field::<Rect>(t, "scenario", "obstacle")? {
        s.obstacle = Some(obs);
    }
    Ok((preset, s))
}

/// Parse and validate a TOML experiment configuration.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let root: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    check_keys(&root, "", &["scenario", "filter", "planner", "experiment", "sweep"])?;

    let exp_table = section(&root, "experiment")?;
    let mut missing = Vec::new();
    if !section(&root, "scenario")?.is_some_and(|t| t.contains_key("preset") || t.len() > 1) {
        missing.push(REQUIRED_KEYS[0]);
    }
    for (i, key) in ["filters", "planners"].iter().enumerate() {
        if !exp_table.is_some_and(|t| t.contains_key(*key)) {
            missing.push(REQUIRED_KEYS[i + 1]);
        }
    }
    if !missing.is_empty() {
        return Err(Error::Config(format!("missing required keys: {}", missing.join(", "))));
    }

    let (preset, scenario) = parse_scenario(section(&root, "scenario")?)?;

    let mut filter = FilterSection::default();
    if let Some(t) = section(&root, "filter")? {
        check_keys(t, "filter", &FILTER_KEYS)?;
        overlay!(
            t,
            "filter",
            filter,
            [
                k_rtt,
                k_aoa,
                sigma_delta_r,
                sigma_delta_theta_deg,
                init_position_std,
                irls_iterations,
                process_noise,
                em_enabled,
                em_window,
            ]
        );
        filter.nominal_sigma_r = field(t, "filter", "nominal_sigma_r")?;
        filter.nominal_sigma_theta_deg = field(t, "filter", "nominal_sigma_theta_deg")?;
    }

    let mut planner = PlannerSection::default();
    if let Some(t) = section(&root, "planner")? {
        check_keys(t, "planner", &PLANNER_KEYS)?;
        overlay!(
            t,
            "planner",
            planner,
            [eta, ell, eps_stop, candidate_count, lawnmower_spacing]
        );
    }

    let mut experiment = ExperimentSection::default();
    if let Some(t) = exp_table {
        check_keys(t, "experiment", &EXPERIMENT_KEYS)?;
        overlay!(
            t,
            "experiment",
            experiment,
            [
                filters,
                planners,
                runs,
                steps,
                seed,
                threshold,
                out,
                ercm_window,
                bilateral_mu_scale,
                timing,
            ]
        );
    }

    let sweep = match section(&root, "sweep")? {
        None => None,
        Some(t) => {
            check_keys(t, "sweep", &SWEEP_KEYS)?;
            let name: String =
                field(t, "sweep", "parameter")?.ok_or_else(|| config_err("sweep.parameter", "required"))?;
            let parameter = SweepParameter::parse(&name).map_err(|_| {
                config_err(
                    "sweep.parameter",
                    format!("unknown parameter `{name}` (expected p_nlos, mu_nlos, eta, k_rtt or sigma_r)"),
                )
            })?;
            let values: Vec<f64> =
                field(t, "sweep", "values")?.ok_or_else(|| config_err("sweep.values", "required"))?;
            Some(SweepSection { parameter, values })
        }
    };

    let cfg = ExperimentConfig {
        preset,
        scenario,
        filter,
        planner,
        experiment,
        sweep,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Rename radian-valued keys reported by the library to their config spelling.
fn config_key(e: Error) -> Error {
    match e {
        Error::InvalidValue { key, reason } => {
            let key = match key.as_str() {
                "scenario.sigma_b_theta"
                | "scenario.delta_theta"
                | "scenario.sigma_theta"
                | "filter.sigma_delta_theta" => {
                    format!("{key}_deg")
                }
                _ => key,
            };
            Error::InvalidValue { key, reason }
        }
        other => other,
    }
}

impl ExperimentConfig {
    /// Defaults for a compiled-in preset: every filter and planner.
    pub fn from_preset(name: &str) -> Result<Self> {
        Ok(Self {
            preset: Some(name.to_string()),
            scenario: ScenarioSection::from_scenario(&Scenario::preset(name)?),
            filter: FilterSection::default(),
            planner: PlannerSection::default(),
            experiment: ExperimentSection::default(),
            sweep: None,
        })
    }

    pub fn filters(&self) -> Result<Vec<FilterKind>> {
        self.experiment.filters.iter().map(|s| FilterKind::parse(s)).collect()
    }

    pub fn planners(&self) -> Result<Vec<PlannerKind>> {
        self.experiment.planners.iter().map(|s| PlannerKind::parse(s)).collect()
    }

    /// Scenario in internal units (radians).
    pub fn scenario(&self) -> Scenario {
        let s = &self.scenario;
        Scenario {
            name: s.name.clone(),
            truth: TargetPosition::new(s.truth[0], s.truth[1]),
            start: Pose2::new(s.start[0], s.start[1]),
            arena: s.arena,
            p_nlos: s.p_nlos,
            mu_nlos: s.mu_nlos,
            sigma_b_theta: s.sigma_b_theta_deg.to_radians(),
            delta_r: s.delta_r,
            delta_theta: s.delta_theta_deg.to_radians(),
            sigma_r: s.sigma_r,
            sigma_theta: s.sigma_theta_deg.to_radians(),
            steps: self.experiment.steps,
            obstacle: s.obstacle,
            p_nlos_clear: s.p_nlos_clear,
            shared_nlos_flag: s.shared_nlos_flag,
            seed: self.experiment.seed,
        }
    }

    pub fn settings(&self) -> SimSettings {
        let p = &self.planner;
        SimSettings {
            filter: self.filter.params(),
            planner: PlannerConfig {
                eta: p.eta,
                ell: p.ell,
                eps_stop: p.eps_stop,
                candidate_count: p.candidate_count,
                lawnmower_spacing: p.lawnmower_spacing,
                arena: self.scenario.arena,
            },
            ercm_window: self.experiment.ercm_window,
            bilateral_mu_scale: self.experiment.bilateral_mu_scale,
            timing: self.experiment.timing,
        }
    }

    pub fn grid(&self) -> Result<GridSpec> {
        let mut spec = GridSpec::new(self.scenario(), self.filters()?, self.planners()?, self.experiment.runs);
        spec.threshold = self.experiment.threshold;
        spec.settings = self.settings();
        Ok(spec)
    }

    /// Check every section; errors carry the config key path.
    pub fn validate(&self) -> Result<()> {
        let spec = self.grid()?;
        spec.validate().map_err(config_key)?;
        spec.settings.planner.validate()?;
        if self.experiment.ercm_window == 0 {
            return Err(config_err("experiment.ercm_window", "must be >= 1"));
        }
        if !(self.experiment.bilateral_mu_scale > 0.0) {
            return Err(config_err("experiment.bilateral_mu_scale", "must be > 0"));
        }
        if self.experiment.steps == 0 {
            return Err(config_err("experiment.steps", "must be >= 1"));
        }
        for f in &spec.filters {
            let scenario = &spec.scenario;
            spec.settings.filter.config(*f, scenario).map_err(|e| match e {
                Error::NonPositive { name, value } => config_err(
                    format!("filter.{name}"),
                    format!("must be > 0, got {value} (set filter.nominal_sigma_* for noise-free scenarios)"),
                ),
                other => config_key(other),
            })?;
        }
        if let Some(sw) = &self.sweep {
            if sw.values.is_empty() {
                return Err(config_err("sweep.values", "must not be empty"));
            }
            for &v in &sw.values {
                sw.parameter.apply(&spec, v).validate().map_err(config_key)?;
            }
        }
        Ok(())
    }

    /// Resolved configuration as TOML; reparses to an equal config.
    pub fn dump(&self) -> String {
        let mut root = toml::Table::new();
        let mut scenario = toml::Table::try_from(&self.scenario).expect("scenario serializes");
        if let Some(p) = &self.preset {
            scenario.insert("preset".into(), toml::Value::String(p.clone()));
        }
        root.insert("scenario".into(), toml::Value::Table(scenario));
        let filter = toml::Table::try_from(&self.filter).expect("filter serializes");
        root.insert("filter".into(), toml::Value::Table(filter));
        root.insert(
            "planner".into(),
            toml::Value::Table(toml::Table::try_from(&self.planner).expect("planner serializes")),
        );
        root.insert(
            "experiment".into(),
            toml::Value::Table(toml::Table::try_from(&self.experiment).expect("experiment serializes")),
        );
        if let Some(sw) = &self.sweep {
            root.insert(
                "sweep".into(),
                toml::Value::Table(toml::Table::try_from(sw).expect("sweep serializes")),
            );
        }
        toml::to_string(&root).expect("config serializes")
    }

    /// One-line provenance string for CSV metadata.
    pub fn metadata(&self) -> String {
        format!(
            "seed={} preset={} scenario={} runs={} steps={}",
            self.experiment.seed,
            self.preset.as_deref().unwrap_or("inline"),
            self.scenario.name,
            self.experiment.runs,
            self.experiment.steps
        )
    }
}
