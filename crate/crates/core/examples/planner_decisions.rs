//! What each planner does from the same state: reactive crossing steps, the
//! FIM E-optimal scoring of candidates, and the lawnmower sweep.
//!
//! `cargo run --example planner_decisions`

use nlos_localize::planners::{fim, fim_candidates, fim_e_optimal, reactive_crossing, FimNoise, Lawnmower};
use nlos_localize::{PlannerConfig, Pose2, TargetPosition};

fn main() -> nlos_localize::Result<()> {
    let cfg = PlannerConfig::default();
    let estimate = TargetPosition::new(50.0, 50.0);
    let start = Pose2::new(10.0, 10.0);
    let noise = FimNoise {
        sigma_r: Some(1.5),
        sigma_theta: Some(2f64.to_radians()),
    };

    println!(
        "reactive crossing from ({}, {}), η = {} m, ℓ = {} m",
        start.x, start.y, cfg.eta, cfg.ell
    );
    let mut agent = start;
    for step in 1..=14 {
        agent = reactive_crossing(agent, estimate, &cfg);
        println!(
            "  {step:>2}: ({:6.2}, {:6.2})  range {:6.2}",
            agent.x,
            agent.y,
            agent.distance_to(estimate.as_pose())
        );
    }

    // far away, AoA information (∝ 1/d²) is the weak eigenvalue and closer
    // candidates win; nearer than about 43 m, the range term 1/σ_r² binds and
    // every candidate ties
    for at in [Pose2::new(5.0, 95.0), Pose2::new(30.0, 40.0)] {
        println!("\nFIM E-optimal candidates at ({}, {})", at.x, at.y);
        for c in fim_candidates(at, &cfg) {
            let score = fim(estimate, c, &noise).map(|f| f.lambda_min()).unwrap_or(f64::NAN);
            let note = if c.in_arena(cfg.arena) { "" } else { "  outside arena" };
            println!("  ({:6.2}, {:6.2})  λ_min {score:.5}{note}", c.x, c.y);
        }
        let choice = fim_e_optimal(at, estimate, &cfg, &noise);
        println!("  chosen: ({:.2}, {:.2})", choice.x, choice.y);
    }

    println!("\nlawnmower, {} m lanes", cfg.lawnmower_spacing);
    let mut sweep = Lawnmower::default();
    let mut agent = start;
    for step in 1..=30 {
        agent = sweep.next(agent, &cfg);
        if step % 5 == 0 {
            println!("  {step:>2}: ({:6.2}, {:6.2})", agent.x, agent.y);
        }
    }
    Ok(())
}
