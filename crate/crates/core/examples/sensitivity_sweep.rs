//! Paired parameter sweep: the same seeds at every value, so differences come
//! from the parameter rather than the noise.
//!
//! `cargo run --release --example sensitivity_sweep -- [p_nlos|mu_nlos|eta|k_rtt|sigma_r] [runs]`

use nlos_localize::experiment::{format_sweep_table, SweepParameter};
use nlos_localize::{sweep, FilterKind, GridSpec, PlannerKind, Scenario};

fn main() -> nlos_localize::Result<()> {
    let mut args = std::env::args().skip(1);
    let parameter = SweepParameter::parse(&args.next().unwrap_or_else(|| "p_nlos".into()))?;
    let runs = args.next().and_then(|s| s.parse().ok()).unwrap_or(20);
    let values: &[f64] = match parameter {
        SweepParameter::PNlos => &[0.1, 0.3, 0.5, 0.7, 0.9],
        SweepParameter::MuNlos => &[2.0, 4.0, 8.0, 12.0, 16.0],
        SweepParameter::Eta => &[3.0, 4.0, 5.0, 6.0, 7.0],
        SweepParameter::KRtt => &[0.5, 1.0, 1.5, 2.5, 4.0],
        SweepParameter::SigmaR => &[0.5, 1.0, 1.5, 2.0, 3.0],
    };
    let mut spec = GridSpec::new(
        Scenario::preset("canonical_medium")?,
        vec![FilterKind::Proposed, FilterKind::Huber],
        vec![PlannerKind::Reactive, PlannerKind::Fim],
        runs,
    );
    spec.scenario.steps = 200;
    let rows = sweep(parameter, values, &spec)?;
    print!("{}", format_sweep_table(parameter, &rows));
    Ok(())
}
