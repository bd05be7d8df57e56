//! The obstacle preset: a rectangular shadow forces NLOS behind it, where the
//! FIM planner's favourite viewpoints sit, while reactive crossing keeps moving.
//!
//! `cargo run --release --example obstacle_scenario -- [runs]`

use nlos_localize::experiment::format_summary_table;
use nlos_localize::{run_grid, FilterKind, GridSpec, PlannerKind, Scenario};

fn main() -> nlos_localize::Result<()> {
    let runs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50);
    let scenario = Scenario::preset("obstacle")?;
    if let Some(rect) = scenario.obstacle {
        println!(
            "shadow: center ({}, {}), {} × {} m, p_nlos outside {}",
            rect.center.x,
            rect.center.y,
            2.0 * rect.half_width,
            2.0 * rect.half_height,
            scenario.p_nlos_clear
        );
    }
    let spec = GridSpec::new(
        scenario,
        vec![FilterKind::Proposed, FilterKind::Huber],
        vec![PlannerKind::Reactive, PlannerKind::Fim],
        runs,
    );
    let cells = run_grid(&spec)?;
    print!("\n{}", format_summary_table(&cells, spec.threshold));

    println!("\nfraction of steps spent in the shadow");
    for c in &cells {
        let shadowed = c
            .runs
            .iter()
            .flat_map(|r| &r.poses)
            .filter(|p| spec.scenario.in_shadow(**p))
            .count();
        let total: usize = c.runs.iter().map(|r| r.poses.len()).sum();
        println!("  {:<22} {:.2}", c.label(), shadowed as f64 / total as f64);
    }
    Ok(())
}
