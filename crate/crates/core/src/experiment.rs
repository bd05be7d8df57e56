//! Monte Carlo orchestration and metrics.
//!
//! A grid cell is one filter paired with one planner on one scenario. Every
//! run in a cell uses the generator substream `seed + run_index`, so cells and
//! sweep rows are paired run-for-run. Runs execute on the rayon pool; results
//! are always reduced in run-index order.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ercm::SlidingErcm;
use crate::error::{Error, Result};
use crate::filters::{FilterConfig, FilterKind, RobustEkf};
use crate::geometry::{Modality, Pose2, TargetPosition};
use crate::planners::{FimNoise, Planner, PlannerConfig, PlannerKind};
use crate::sim_env::{observe, run_rng, sample_channel, Scenario};

/// Filter tuning shared by every filter kind; the kind picks the loss families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterParams {
    pub k_rtt: f64,
    pub k_aoa: f64,
    pub sigma_delta_r: f64,
    /// Radians.
    pub sigma_delta_theta: f64,
    pub init_position_std: f64,
    pub irls_iterations: usize,
    pub process_noise: f64,
    pub em_enabled: bool,
    pub em_window: usize,
    /// Noise scale the filter assumes; defaults to the scenario's.
    pub nominal_sigma_r: Option<f64>,
    /// Radians; defaults to the scenario's.
    pub nominal_sigma_theta: Option<f64>,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            k_rtt: 1.5,
            k_aoa: 1.345,
            sigma_delta_r: 5.0,
            sigma_delta_theta: 5f64.to_radians(),
            init_position_std: 40.0,
            irls_iterations: 1,
            process_noise: 1e-4,
            em_enabled: false,
            em_window: 50,
            nominal_sigma_r: None,
            nominal_sigma_theta: None,
        }
    }
}

impl FilterParams {
    /// Filter configuration for `kind`, using the scenario's nominal noise scales.
    pub fn config(&self, kind: FilterKind, scenario: &Scenario) -> Result<FilterConfig> {
        let sigma_r = self.nominal_sigma_r.unwrap_or(scenario.sigma_r);
        let sigma_theta = self.nominal_sigma_theta.unwrap_or(scenario.sigma_theta);
        let (rtt_loss, aoa_loss) = kind.losses(sigma_r, sigma_theta, self.k_rtt, self.k_aoa)?;
        let cfg = FilterConfig {
            rtt_loss,
            aoa_loss,
            sigma_delta_r: self.sigma_delta_r,
            sigma_delta_theta: self.sigma_delta_theta,
            init_position_std: self.init_position_std,
            irls_iterations: self.irls_iterations,
            process_noise: self.process_noise,
            em_enabled: self.em_enabled,
            em_window: self.em_window,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Everything besides the scenario that a run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSettings {
    pub filter: FilterParams,
    /// The arena side is taken from the scenario at run time.
    pub planner: PlannerConfig,
    pub ercm_window: usize,
    /// Bilateral floor is `bilateral_mu_scale / σ_r²`.
    pub bilateral_mu_scale: f64,
    /// Record wall-clock planner time. When off, cost columns are zero and
    /// output is byte-reproducible.
    pub timing: bool,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            filter: FilterParams::default(),
            planner: PlannerConfig::default(),
            ercm_window: 30,
            bilateral_mu_scale: 1e-3,
            timing: true,
        }
    }
}

/// Per-step record of one Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub run_index: u64,
    pub errors: Vec<f64>,
    pub bias_r: Vec<f64>,
    pub bias_theta: Vec<f64>,
    pub ercm_lambda_min: Vec<f64>,
    pub planner_cost_s: Vec<f64>,
    /// Agent pose at which each step's measurements were taken.
    pub poses: Vec<Pose2>,
    pub estimates: Vec<TargetPosition>,
    /// Trace of the position block of the covariance.
    pub position_variance: Vec<f64>,
    pub rtt_clamps: usize,
    pub skipped_updates: usize,
}

/// Simulate one run: predict, observe, update RTT then AoA, plan.
///
/// A step taken exactly on the target yields no measurements.
pub fn run_single(
    filter: FilterKind,
    planner: PlannerKind,
    scenario: &Scenario,
    settings: &SimSettings,
    run_index: u64,
) -> Result<RunTrace> {
    let cfg = settings.filter.config(filter, scenario)?;
    let planner_cfg = PlannerConfig {
        arena: scenario.arena,
        ..settings.planner
    };
    planner_cfg.validate()?;
    let center = TargetPosition::new(scenario.arena / 2.0, scenario.arena / 2.0);
    let noise = FimNoise {
        sigma_r: Some(cfg.rtt_loss.sigma()),
        sigma_theta: Some(cfg.aoa_loss.sigma()),
    };
    let mu = settings.bilateral_mu_scale / cfg.rtt_loss.sigma().powi(2);

    let mut ekf = RobustEkf::new(cfg, center)?;
    let mut plan = Planner::new(planner, noise);
    let mut ercm = SlidingErcm::new(settings.ercm_window, mu);
    let mut rng = run_rng(scenario.seed, run_index);
    let mut agent = scenario.start;

    let n = scenario.steps;
    let mut trace = RunTrace {
        run_index,
        errors: Vec::with_capacity(n),
        bias_r: Vec::with_capacity(n),
        bias_theta: Vec::with_capacity(n),
        ercm_lambda_min: Vec::with_capacity(n),
        planner_cost_s: Vec::with_capacity(n),
        poses: Vec::with_capacity(n),
        estimates: Vec::with_capacity(n),
        position_variance: Vec::with_capacity(n),
        rtt_clamps: 0,
        skipped_updates: 0,
    };
    let abort = |step, reason: String| Error::RunAborted {
        run: run_index,
        step,
        reason,
    };

    for step in 0..n {
        ekf.predict();
        let measurements = if agent.distance_to(scenario.truth.as_pose()) == 0.0 {
            // no bearing exists on top of the target; keep the stream aligned
            sample_channel(scenario, agent, &mut rng);
            trace.skipped_updates += 2;
            Vec::new()
        } else {
            let obs = observe(scenario, agent, step, &mut rng).map_err(|e| abort(step, e.to_string()))?;
            trace.rtt_clamps += usize::from(obs.rtt_clamped);
            vec![obs.rtt, obs.aoa]
        };
        for z in measurements {
            let diag = ekf.update(&z);
            if diag.skipped {
                trace.skipped_updates += 1;
            }
            if let Some(sample) = diag.curvature_sample(ekf.config().loss_for(z.modality)) {
                ercm.push(sample);
            }
        }
        if !ekf.state().is_finite() {
            return Err(abort(step, "filter state became non-finite".into()));
        }
        let estimate = ekf.position();
        let err = (estimate.to_vector() - scenario.truth.to_vector()).norm();

        let started = settings.timing.then(Instant::now);
        let next = plan.next(agent, estimate, &planner_cfg);
        let cost = started.map_or(0.0, |t| t.elapsed().as_secs_f64());

        trace.errors.push(err);
        trace.bias_r.push(ekf.learned_bias(Modality::Rtt));
        trace.bias_theta.push(ekf.learned_bias(Modality::Aoa));
        trace.ercm_lambda_min.push(ercm.report().lambda_min);
        trace.planner_cost_s.push(cost);
        trace.poses.push(agent);
        trace.estimates.push(estimate);
        let p = &ekf.state().covariance;
        trace.position_variance.push(p[(0, 0)] + p[(1, 1)]);
        agent = next;
    }
    Ok(trace)
}

/// Ensemble metrics of one grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub rmse_series: Vec<f64>,
    pub steps_to_threshold: Option<usize>,
    pub final_rmse: f64,
    pub mean_cost_per_step: f64,
    pub bias_r_series: Vec<f64>,
    pub bias_theta_series: Vec<f64>,
    pub ercm_lambda_min_series: Vec<f64>,
    /// Mean planner cost per step, for the per-cell CSV.
    pub cost_series: Vec<f64>,
    pub n_runs: usize,
}

/// First index after which the series stays at or below `threshold` for good.
pub fn steps_to_threshold(series: &[f64], threshold: f64) -> Option<usize> {
    let settled = series.iter().rev().take_while(|v| **v <= threshold).count();
    (settled > 0).then(|| series.len() - settled)
}

fn mean_series(runs: &[RunTrace], field: impl Fn(&RunTrace) -> &[f64]) -> Vec<f64> {
    let n = runs.iter().map(|r| field(r).len()).min().unwrap_or(0);
    (0..n)
        .map(|t| runs.iter().map(|r| field(r)[t]).sum::<f64>() / runs.len() as f64)
        .collect()
}

/// Reduce runs (in the given order) to ensemble metrics.
pub fn aggregate(runs: &[RunTrace], threshold: f64) -> RunMetrics {
    let n = runs.iter().map(|r| r.errors.len()).min().unwrap_or(0);
    let rmse_series: Vec<f64> = (0..n)
        .map(|t| (runs.iter().map(|r| r.errors[t].powi(2)).sum::<f64>() / runs.len() as f64).sqrt())
        .collect();
    let cost_series = mean_series(runs, |r| &r.planner_cost_s);
    let mean_cost_per_step = if cost_series.is_empty() {
        0.0
    } else {
        cost_series.iter().sum::<f64>() / cost_series.len() as f64
    };
    RunMetrics {
        steps_to_threshold: steps_to_threshold(&rmse_series, threshold),
        final_rmse: rmse_series.last().copied().unwrap_or(f64::NAN),
        rmse_series,
        mean_cost_per_step,
        bias_r_series: mean_series(runs, |r| &r.bias_r),
        bias_theta_series: mean_series(runs, |r| &r.bias_theta),
        ercm_lambda_min_series: mean_series(runs, |r| &r.ercm_lambda_min),
        cost_series,
        n_runs: runs.len(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub filters: Vec<FilterKind>,
    pub planners: Vec<PlannerKind>,
    pub scenario: Scenario,
    pub n_runs: usize,
    pub threshold: f64,
    pub settings: SimSettings,
}

impl GridSpec {
    pub fn new(scenario: Scenario, filters: Vec<FilterKind>, planners: Vec<PlannerKind>, n_runs: usize) -> Self {
        Self {
            filters,
            planners,
            scenario,
            n_runs,
            threshold: 2.5,
            settings: SimSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_runs == 0 {
            return Err(Error::InvalidValue {
                key: "experiment.runs".into(),
                reason: "must be >= 1".into(),
            });
        }
        if !(self.threshold > 0.0) {
            return Err(Error::InvalidValue {
                key: "experiment.threshold".into(),
                reason: format!("must be > 0, got {}", self.threshold),
            });
        }
        if self.filters.is_empty() || self.planners.is_empty() {
            return Err(Error::InvalidValue {
                key: "experiment.filters/planners".into(),
                reason: "at least one filter and one planner are required".into(),
            });
        }
        self.scenario.validate()
    }
}

/// Label in `Filter (Planner)` form.
pub fn combination_label(filter: FilterKind, planner: PlannerKind) -> String {
    format!("{} ({})", filter.label(), planner.label())
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub filter: FilterKind,
    pub planner: PlannerKind,
    pub metrics: RunMetrics,
    pub runs: Vec<RunTrace>,
    /// Diagnostics of aborted runs; these are left out of the metrics.
    pub failures: Vec<String>,
}

impl CellResult {
    pub fn label(&self) -> String {
        combination_label(self.filter, self.planner)
    }
}

/// Run every run of one cell.
pub fn run_cell(filter: FilterKind, planner: PlannerKind, spec: &GridSpec) -> Result<CellResult> {
    let outcomes: Vec<Result<RunTrace>> = (0..spec.n_runs as u64)
        .into_par_iter()
        .map(|i| run_single(filter, planner, &spec.scenario, &spec.settings, i))
        .collect();
    let mut runs = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(t) => runs.push(t),
            Err(e @ Error::RunAborted { .. }) => failures.push(e.to_string()),
            Err(e) => return Err(e),
        }
    }
    if runs.is_empty() {
        return Err(Error::RunAborted {
            run: 0,
            step: 0,
            reason: format!("every run of {} failed", combination_label(filter, planner)),
        });
    }
    Ok(CellResult {
        filter,
        planner,
        metrics: aggregate(&runs, spec.threshold),
        runs,
        failures,
    })
}

/// Run the full filter × planner grid, filters outermost.
pub fn run_grid(spec: &GridSpec) -> Result<Vec<CellResult>> {
    spec.validate()?;
    let mut cells = Vec::new();
    for &f in &spec.filters {
        for &p in &spec.planners {
            cells.push(run_cell(f, p, spec)?);
        }
    }
    Ok(cells)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    PNlos,
    MuNlos,
    Eta,
    KRtt,
    SigmaR,
}

impl SweepParameter {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "p_nlos" => SweepParameter::PNlos,
            "mu_nlos" => SweepParameter::MuNlos,
            "eta" => SweepParameter::Eta,
            "k_rtt" => SweepParameter::KRtt,
            "sigma_r" => SweepParameter::SigmaR,
            other => return Err(Error::UnknownParameter(other.to_string())),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::PNlos => "p_nlos",
            SweepParameter::MuNlos => "mu_nlos",
            SweepParameter::Eta => "eta",
            SweepParameter::KRtt => "k_rtt",
            SweepParameter::SigmaR => "sigma_r",
        }
    }

    /// Copy of `base` with this parameter set to `value`.
    pub fn apply(self, base: &GridSpec, value: f64) -> GridSpec {
        let mut spec = base.clone();
        match self {
            SweepParameter::PNlos => spec.scenario.p_nlos = value,
            SweepParameter::MuNlos => spec.scenario.mu_nlos = value,
            SweepParameter::Eta => spec.settings.planner.eta = value,
            SweepParameter::KRtt => spec.settings.filter.k_rtt = value,
            SweepParameter::SigmaR => spec.scenario.sigma_r = value,
        }
        spec
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub cells: Vec<CellResult>,
}

/// One aggregated grid per value; all rows share the base seed.
pub fn sweep(parameter: SweepParameter, values: &[f64], base: &GridSpec) -> Result<Vec<SweepRow>> {
    values
        .iter()
        .map(|&value| {
            let spec = parameter.apply(base, value);
            Ok(SweepRow {
                value,
                cells: run_grid(&spec)?,
            })
        })
        .collect()
}

/// Column name for the time-to-threshold metric, e.g. `steps_to_2p5m`.
pub fn threshold_column(threshold: f64) -> String {
    format!("steps_to_{}m", threshold.to_string().replace('.', "p"))
}

fn steps_field(s: Option<usize>) -> String {
    s.map_or_else(|| "none".to_string(), |v| v.to_string())
}

/// Per-cell CSV: a `#` metadata line, a header, one row per step.
pub fn write_cell_csv<W: Write>(mut out: W, meta: &str, metrics: &RunMetrics) -> Result<()> {
    writeln!(out, "# {meta}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "step",
        "rmse",
        "bias_r",
        "bias_theta",
        "ercm_lambda_min",
        "planner_cost_s",
    ])?;
    for t in 0..metrics.rmse_series.len() {
        w.write_record([
            t.to_string(),
            metrics.rmse_series[t].to_string(),
            metrics.bias_r_series[t].to_string(),
            metrics.bias_theta_series[t].to_string(),
            metrics.ercm_lambda_min_series[t].to_string(),
            metrics.cost_series[t].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

const SUMMARY_TAIL: [&str; 5] = [
    "avg_cost_ms",
    "final_bias_r_m",
    "final_bias_theta_deg",
    "n_runs",
    "n_failed",
];

fn summary_fields(cell: &CellResult) -> Vec<String> {
    let m = &cell.metrics;
    vec![
        cell.label(),
        cell.filter.name().to_string(),
        cell.planner.name().to_string(),
        m.final_rmse.to_string(),
        steps_field(m.steps_to_threshold),
        (m.mean_cost_per_step * 1e3).to_string(),
        m.bias_r_series.last().copied().unwrap_or(f64::NAN).to_string(),
        m.bias_theta_series
            .last()
            .copied()
            .unwrap_or(f64::NAN)
            .to_degrees()
            .to_string(),
        m.n_runs.to_string(),
        cell.failures.len().to_string(),
    ]
}

/// Summary CSV with one row per combination.
pub fn write_summary_csv<W: Write>(mut out: W, meta: &str, threshold: f64, cells: &[CellResult]) -> Result<()> {
    writeln!(out, "# {meta}")?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "combination".to_string(),
        "filter".into(),
        "planner".into(),
        "final_rmse_m".into(),
        threshold_column(threshold),
    ];
    header.extend(SUMMARY_TAIL.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for c in cells {
        w.write_record(summary_fields(c))?;
    }
    w.flush()?;
    Ok(())
}

/// Long-form sweep CSV: one row per value per combination.
pub fn write_sweep_csv<W: Write>(
    mut out: W,
    meta: &str,
    parameter: SweepParameter,
    threshold: f64,
    rows: &[SweepRow],
) -> Result<()> {
    writeln!(out, "# {meta}")?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "parameter".to_string(),
        "value".into(),
        "combination".into(),
        "filter".into(),
        "planner".into(),
        "final_rmse_m".into(),
        threshold_column(threshold),
    ];
    header.extend(SUMMARY_TAIL.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for row in rows {
        for c in &row.cells {
            let mut rec = vec![parameter.name().to_string(), row.value.to_string()];
            rec.extend(summary_fields(c));
            w.write_record(rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Plain-text summary table.
pub fn format_summary_table(cells: &[CellResult], threshold: f64) -> String {
    let mut s = format!(
        "{:<24} {:>14} {:>14} {:>16}\n",
        "Filter (Planner)",
        "Final RMSE [m]",
        format!("Steps to {threshold}m"),
        "Avg cost [ms]"
    );
    for c in cells {
        let m = &c.metrics;
        s.push_str(&format!(
            "{:<24} {:>14.3} {:>14} {:>16.4}\n",
            c.label(),
            m.final_rmse,
            steps_field(m.steps_to_threshold),
            m.mean_cost_per_step * 1e3
        ));
    }
    s
}

/// Wide sweep table: rows are values, columns are combinations (final RMSE).
pub fn format_sweep_table(parameter: SweepParameter, rows: &[SweepRow]) -> String {
    let Some(first) = rows.first() else {
        return String::new();
    };
    let mut s = format!("{:>10}", parameter.name());
    for c in &first.cells {
        s.push_str(&format!(" {:>22}", c.label()));
    }
    s.push('\n');
    for row in rows {
        s.push_str(&format!("{:>10}", row.value));
        for c in &row.cells {
            s.push_str(&format!(" {:>22.3}", c.metrics.final_rmse));
        }
        s.push('\n');
    }
    s
}
