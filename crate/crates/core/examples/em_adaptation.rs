//! EM adaptation of the NLOS rate: λ is re-estimated as the inverse mean of
//! windows of soft-thresholded range biases, so the saturation threshold
//! follows the actual NLOS excess.
//!
//! `cargo run --release --example em_adaptation -- [runs]`

use nlos_localize::experiment::{run_cell, FilterParams};
use nlos_localize::filters::Measurement;
use nlos_localize::sim_env::{observe, run_rng};
use nlos_localize::{FilterKind, GridSpec, Modality, PlannerKind, RobustEkf, Scenario, TargetPosition};

/// Start-to-end threshold `τ = λσ²` of one filter driven from a fixed spot.
fn adapted_tau(scenario: &Scenario) -> nlos_localize::Result<(f64, f64)> {
    let params = FilterParams {
        em_enabled: true,
        ..Default::default()
    };
    let mut ekf = RobustEkf::new(
        params.config(FilterKind::Proposed, scenario)?,
        TargetPosition::new(50.0, 50.0),
    )?;
    let start = ekf.config().rtt_loss.tau().unwrap();
    let mut rng = run_rng(scenario.seed, 0);
    let agents = [
        scenario.start,
        TargetPosition::new(90.0, 20.0).as_pose(),
        TargetPosition::new(20.0, 85.0).as_pose(),
    ];
    for step in 0..scenario.steps {
        let agent = agents[step % agents.len()];
        ekf.predict();
        let obs = observe(scenario, agent, step, &mut rng)?;
        ekf.update(&Measurement {
            modality: Modality::Rtt,
            value: obs.rtt.value,
            agent_pose: agent,
            step,
        });
        ekf.update(&Measurement {
            modality: Modality::Aoa,
            value: obs.aoa.value,
            agent_pose: agent,
            step,
        });
    }
    Ok((start, ekf.config().rtt_loss.tau().unwrap()))
}

fn main() -> nlos_localize::Result<()> {
    let runs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(30);
    let base = Scenario::preset("canonical_medium")?;
    for mu in [2.0, 8.0, 20.0] {
        let scenario = Scenario {
            mu_nlos: mu,
            ..base.clone()
        };
        let (tau0, tau) = adapted_tau(&scenario)?;
        println!("mean NLOS excess {mu} m: τ {tau0:.2} m → {tau:.2} m after EM");
        for em in [false, true] {
            let mut spec = GridSpec::new(scenario.clone(), vec![], vec![], runs);
            spec.settings.filter.em_enabled = em;
            let cell = run_cell(FilterKind::Proposed, PlannerKind::Reactive, &spec)?;
            let m = &cell.metrics;
            println!(
                "  EM {:<5} final RMSE {:>7.3} m  steps to 2.5 m {:>5}  δ̂_r {:>6.2} m",
                em,
                m.final_rmse,
                m.steps_to_threshold.map_or("none".into(), |s| s.to_string()),
                m.bias_r_series.last().unwrap()
            );
        }
    }
    Ok(())
}
