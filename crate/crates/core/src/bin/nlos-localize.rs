//! Command-line front end: `run` executes a filter × planner grid, `sweep`
//! repeats it over a parameter list. Both write CSVs and print a table.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nlos_localize::config::{parse_config, ExperimentConfig, SweepSection};
use nlos_localize::experiment::{
    format_summary_table, format_sweep_table, run_grid, sweep, write_cell_csv, write_summary_csv, write_sweep_csv,
    SweepParameter,
};
use nlos_localize::Result;

#[derive(Parser)]
#[command(
    name = "nlos-localize",
    version,
    about = "Monte Carlo experiments for NLOS-robust localization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the filter × planner grid.
    Run(Common),
    /// Run the grid once per sweep value.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Parameter to sweep (p_nlos, mu_nlos, eta, k_rtt, sigma_r).
        #[arg(long)]
        parameter: Option<String>,
        /// Comma-separated sweep values.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
    },
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario preset, used when no config is given or to replace its scenario.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated filters (proposed, huber, ekf).
    #[arg(long, value_delimiter = ',')]
    filters: Option<Vec<String>>,
    /// Comma-separated planners (passive, reactive, fim).
    #[arg(long, value_delimiter = ',')]
    planners: Option<Vec<String>>,
    /// Write zero planner cost so output files are byte-reproducible.
    #[arg(long)]
    no_timing: bool,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), preset) => {
                let mut cfg = parse_config(&fs::read_to_string(path)?)?;
                if let Some(p) = preset {
                    let fresh = ExperimentConfig::from_preset(p)?;
                    cfg.preset = fresh.preset;
                    cfg.scenario = fresh.scenario;
                }
                cfg
            }
            (None, preset) => ExperimentConfig::from_preset(preset.as_deref().unwrap_or("canonical_medium"))?,
        };
        let e = &mut cfg.experiment;
        if let Some(v) = self.seed {
            e.seed = v;
        }
        if let Some(v) = self.runs {
            e.runs = v;
        }
        if let Some(v) = self.steps {
            e.steps = v;
        }
        if let Some(v) = &self.out {
            e.out = v.clone();
        }
        if let Some(v) = &self.filters {
            e.filters = v.clone();
        }
        if let Some(v) = &self.planners {
            e.planners = v.clone();
        }
        if self.no_timing {
            e.timing = false;
        }
        Ok(cfg)
    }
}

fn cmd_run(cfg: &ExperimentConfig) -> Result<()> {
    let spec = cfg.grid()?;
    let cells = run_grid(&spec)?;
    let out = &cfg.experiment.out;
    fs::create_dir_all(out)?;
    let meta = cfg.metadata();
    fs::write(out.join("config.toml"), cfg.dump())?;
    for c in &cells {
        let name = format!("cell_{}_{}.csv", c.filter.name(), c.planner.name());
        let file = fs::File::create(out.join(name))?;
        write_cell_csv(
            file,
            &format!("{meta} filter={} planner={}", c.filter.name(), c.planner.name()),
            &c.metrics,
        )?;
        for f in &c.failures {
            eprintln!("warning: {}: {f}", c.label());
        }
    }
    write_summary_csv(
        fs::File::create(out.join("summary.csv"))?,
        &meta,
        spec.threshold,
        &cells,
    )?;
    print!("{}", format_summary_table(&cells, spec.threshold));
    Ok(())
}

fn cmd_sweep(cfg: &ExperimentConfig) -> Result<()> {
    let Some(SweepSection { parameter, values }) = &cfg.sweep else {
        return Err(nlos_localize::Error::Config(
            "sweep needs a [sweep] block or --parameter and --values".into(),
        ));
    };
    let spec = cfg.grid()?;
    let rows = sweep(*parameter, values, &spec)?;
    let out = &cfg.experiment.out;
    fs::create_dir_all(out)?;
    fs::write(out.join("config.toml"), cfg.dump())?;
    let file = fs::File::create(out.join(format!("sweep_{}.csv", parameter.name())))?;
    write_sweep_csv(file, &cfg.metadata(), *parameter, spec.threshold, &rows)?;
    print!("{}", format_sweep_table(*parameter, &rows));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(common) => common.resolve().and_then(|cfg| {
            cfg.validate()?;
            cmd_run(&cfg)
        }),
        Command::Sweep {
            common,
            parameter,
            values,
        } => common.resolve().and_then(|mut cfg| {
            if let Some(name) = parameter {
                let values = values
                    .clone()
                    .or_else(|| cfg.sweep.as_ref().map(|s| s.values.clone()))
                    .unwrap_or_default();
                cfg.sweep = Some(SweepSection {
                    parameter: SweepParameter::parse(name)?,
                    values,
                });
            } else if let (Some(v), Some(sw)) = (values, cfg.sweep.as_mut()) {
                sw.values = v.clone();
            }
            cfg.validate()?;
            cmd_sweep(&cfg)
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
