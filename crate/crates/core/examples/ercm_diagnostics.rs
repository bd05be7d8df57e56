//! Curvature diagnostics: a one-sided approach leaves the ERCM rank deficient,
//! a single crossing restores bilateral information.
//!
//! `cargo run --example ercm_diagnostics`

use nlos_localize::ercm::{accumulate, crossing_improves, default_mu_threshold, CurvatureSample};
use nlos_localize::geometry::jacobian;
use nlos_localize::{LossSpec, Modality, Pose2, TargetPosition};

fn main() -> nlos_localize::Result<()> {
    let target = TargetPosition::new(50.0, 50.0);
    let sigma_r = 1.5;
    let sigma_theta = 2f64.to_radians();
    let rtt = LossSpec::one_sided_from_k(sigma_r, 1.5)?;
    let mu = default_mu_threshold(sigma_r);

    // straight-line approach from the south-west with 8 m of NLOS excess per range
    let mut samples = Vec::new();
    for i in 0..20 {
        let agent = Pose2::new(10.0 + 1.5 * i as f64, 10.0 + 1.5 * i as f64);
        let residual = 8.0;
        samples.push(CurvatureSample::from_residual(
            jacobian(Modality::Rtt, target, agent)?,
            residual,
            &rtt,
            i,
        ));
        let aoa = jacobian(Modality::Aoa, target, agent)?;
        samples.push(CurvatureSample::new(aoa, 1.0 / (sigma_theta * sigma_theta), i));
    }
    let before = accumulate(&samples, mu);
    println!("one-sided approach, {} samples", samples.len());
    println!(
        "  saturated {} active {}  λ_min {:.3e}  λ_max {:.3e}  bilateral {}",
        before.n_saturated, before.n_active, before.lambda_min, before.lambda_max, before.bilateral
    );
    println!(
        "  weakest direction ({:.3}, {:.3}): the radial axis, which saturated ranges no longer inform",
        before.min_eigenvector.x, before.min_eigenvector.y
    );

    // one LOS range from the side, across the line of sight
    let side = Pose2::new(80.0, 30.0);
    let j = jacobian(Modality::Rtt, target, side)?;
    let sample = CurvatureSample::from_residual(j, 0.5, &rtt, 20);
    let (after, gain) = crossing_improves(&before, &sample);
    println!("\nafter one crossing measurement from ({}, {})", side.x, side.y);
    println!(
        "  λ_min {:.3e} (+{gain:.3e})  threshold μ {mu:.3e}  bilateral {}",
        after.lambda_min, after.bilateral
    );
    Ok(())
}
