//! One Monte Carlo run assembled by hand from the channel model, the robust
//! filter and a planner, printing the estimate as it converges.
//!
//! `cargo run --example single_run -- [proposed|huber|ekf] [passive|reactive|fim]`

use nlos_localize::experiment::FilterParams;
use nlos_localize::filters::{learned_bias, Measurement};
use nlos_localize::planners::{FimNoise, Planner};
use nlos_localize::sim_env::{observe, run_rng};
use nlos_localize::{FilterKind, Modality, PlannerConfig, PlannerKind, RobustEkf, Scenario, TargetPosition};

fn main() -> nlos_localize::Result<()> {
    let mut args = std::env::args().skip(1);
    let filter = FilterKind::parse(&args.next().unwrap_or_else(|| "proposed".into()))?;
    let planner_kind = PlannerKind::parse(&args.next().unwrap_or_else(|| "reactive".into()))?;

    let scenario = Scenario::preset("canonical_medium")?;
    let config = FilterParams::default().config(filter, &scenario)?;
    let center = TargetPosition::new(scenario.arena / 2.0, scenario.arena / 2.0);
    let mut ekf = RobustEkf::new(config, center)?;
    let cfg = PlannerConfig {
        arena: scenario.arena,
        ..Default::default()
    };
    let mut planner = Planner::new(
        planner_kind,
        FimNoise {
            sigma_r: Some(scenario.sigma_r),
            sigma_theta: Some(scenario.sigma_theta),
        },
    );
    let mut rng = run_rng(scenario.seed, 0);
    let mut agent = scenario.start;

    println!(
        "{} with {} planner, truth ({}, {})",
        filter.label(),
        planner_kind.label(),
        scenario.truth.x,
        scenario.truth.y
    );
    println!(
        "{:>4} {:>16} {:>9} {:>8} {:>9} {:>5}",
        "step", "agent", "error", "δ̂_r", "δ̂_θ°", "nlos"
    );
    for step in 0..60 {
        ekf.predict();
        let obs = observe(&scenario, agent, step, &mut rng)?;
        for (modality, value) in [(Modality::Rtt, obs.rtt.value), (Modality::Aoa, obs.aoa.value)] {
            ekf.update(&Measurement {
                modality,
                value,
                agent_pose: agent,
                step,
            });
        }
        let est = ekf.position();
        if step % 4 == 0 {
            println!(
                "{step:>4} ({:6.1},{:6.1}) {:>9.3} {:>8.3} {:>9.3} {:>5}",
                agent.x,
                agent.y,
                est.as_pose().distance_to(scenario.truth.as_pose()),
                learned_bias(ekf.state(), Modality::Rtt),
                learned_bias(ekf.state(), Modality::Aoa).to_degrees(),
                obs.draw.is_nlos
            );
        }
        agent = planner.next(agent, est, &cfg);
    }
    Ok(())
}
