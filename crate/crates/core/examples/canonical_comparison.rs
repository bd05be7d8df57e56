//! Every filter against every planner on a canonical preset.
//!
//! `cargo run --release --example canonical_comparison -- [preset] [runs]`

use nlos_localize::experiment::format_summary_table;
use nlos_localize::{run_grid, FilterKind, GridSpec, PlannerKind, Scenario};

fn main() -> nlos_localize::Result<()> {
    let mut args = std::env::args().skip(1);
    let preset = args.next().unwrap_or_else(|| "canonical_medium".into());
    let runs = args.next().and_then(|s| s.parse().ok()).unwrap_or(50);

    let spec = GridSpec::new(
        Scenario::preset(&preset)?,
        FilterKind::ALL.to_vec(),
        PlannerKind::ALL.to_vec(),
        runs,
    );
    let cells = run_grid(&spec)?;
    println!("{preset}, {runs} runs, {} steps\n", spec.scenario.steps);
    print!("{}", format_summary_table(&cells, spec.threshold));

    println!("\n{:<24} {:>12} {:>14}", "Filter (Planner)", "δ̂_r [m]", "δ̂_θ [deg]");
    for c in &cells {
        let m = &c.metrics;
        println!(
            "{:<24} {:>12.3} {:>14.3}",
            c.label(),
            m.bias_r_series.last().unwrap(),
            m.bias_theta_series.last().unwrap().to_degrees()
        );
    }
    Ok(())
}
