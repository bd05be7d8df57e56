use nlos_localize::experiment::{run_cell, sweep, GridSpec, SweepParameter};
use nlos_localize::filters::FilterKind;
use nlos_localize::geometry::Pose2;
use nlos_localize::planners::PlannerKind;
use nlos_localize::sim_env::{run_rng, sample_channel, Scenario};

#[test]
fn reactive_rmse_is_monotone_after_first_crossing() {
    let scenario = Scenario::preset("canonical_medium").unwrap();
    let mut spec = GridSpec::new(scenario, vec![FilterKind::Proposed], vec![PlannerKind::Reactive], 50);
    spec.settings.timing = false;
    let cell = run_cell(FilterKind::Proposed, PlannerKind::Reactive, &spec).unwrap();
    let rmse = &cell.metrics.rmse_series;
    let first = rmse.iter().position(|&e| e < 5.0).expect("never below 5 m");
    let mut best = rmse[first];
    for (t, &e) in rmse.iter().enumerate().skip(first) {
        assert!(e <= 1.1 * best, "step {t}: {e} vs running min {best}");
        best = best.min(e);
    }
}

#[test]
fn thermal_noise_is_paired_across_bias_settings() {
    let base = Scenario::preset("canonical_medium").unwrap();
    let agent = Pose2::new(20.0, 70.0);
    for run in 0..5 {
        let draws: Vec<Vec<_>> = [0.1, 0.3, 0.5, 0.7, 0.9]
            .iter()
            .map(|&p| {
                let scenario = Scenario {
                    p_nlos: p,
                    mu_nlos: 2.0 + 10.0 * p,
                    ..base.clone()
                };
                let mut rng = run_rng(42, run);
                (0..200).map(|_| sample_channel(&scenario, agent, &mut rng)).collect()
            })
            .collect();
        for row in &draws[1..] {
            for (a, b) in row.iter().zip(&draws[0]) {
                assert_eq!((a.eps_r, a.eps_theta), (b.eps_r, b.eps_theta));
            }
        }
    }
}

#[test]
fn p_nlos_sweep_shares_los_runs() {
    let mut scenario = Scenario::preset("canonical_medium").unwrap();
    scenario.steps = 40;
    let mut spec = GridSpec::new(scenario, vec![FilterKind::Proposed], vec![PlannerKind::Reactive], 4);
    spec.settings.timing = false;
    let rows = sweep(SweepParameter::PNlos, &[0.0, 0.1, 0.3, 0.5, 0.7, 0.9], &spec).unwrap();
    assert_eq!(rows.len(), 6);
    assert!(rows
        .iter()
        .all(|r| r.cells.len() == 1 && r.cells[0].metrics.n_runs == 4));
    // with no NLOS at all, the result equals a plain run at p_nlos = 0
    let mut los = spec.clone();
    los.scenario.p_nlos = 0.0;
    let direct = run_cell(FilterKind::Proposed, PlannerKind::Reactive, &los).unwrap();
    assert_eq!(rows[0].cells[0].metrics.rmse_series, direct.metrics.rmse_series);
}
