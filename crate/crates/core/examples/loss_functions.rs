//! One-sided against symmetric Huber: loss, slope, IRLS weight and the
//! soft-thresholded NLOS bias across a range of residuals.
//!
//! `cargo run --example loss_functions`

use nlos_localize::robust_loss::{k_from_lambda, lambda_from_k, LossSpec};

fn main() -> nlos_localize::Result<()> {
    let sigma = 1.5;
    let k = 1.5;
    let one_sided = LossSpec::one_sided_from_k(sigma, k)?;
    let symmetric = LossSpec::symmetric(sigma, k)?;
    let quadratic = LossSpec::quadratic(sigma)?;

    let lambda = lambda_from_k(k, sigma)?;
    println!(
        "σ = {sigma} m, k = {k}: λ = {lambda:.4} 1/m, τ = λσ² = kσ = {:.3} m",
        one_sided.tau().unwrap()
    );
    println!("round trip k_from_lambda(λ) = {}\n", k_from_lambda(lambda, sigma)?);

    println!(
        "{:>7} | {:>9} {:>8} {:>6} {:>7} | {:>9} {:>8} {:>6} | {:>9}",
        "r [m]", "ρ₁(r)", "ρ₁'(r)", "w₁", "b*", "ρₛ(r)", "ρₛ'(r)", "wₛ", "r²/2σ²"
    );
    for i in -8..=12 {
        let r = i as f64;
        println!(
            "{r:>7.1} | {:>9.4} {:>8.4} {:>6.3} {:>7.3} | {:>9.4} {:>8.4} {:>6.3} | {:>9.4}",
            one_sided.loss(r),
            one_sided.grad(r),
            one_sided.weight(r),
            one_sided.soft_threshold_bias(r)?,
            symmetric.loss(r),
            symmetric.grad(r),
            symmetric.weight(r),
            quadratic.loss(r),
        );
    }
    println!("\nNegative residuals keep full weight under the one-sided loss; the symmetric loss");
    println!("down-weights both tails, so it rejects honest LOS scatter as readily as NLOS excess.");
    Ok(())
}
