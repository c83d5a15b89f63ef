//! Solves the renewal equation for non-exponential inter-arrival times and
//! compares the result with the elementary renewal limit `t / E[θ]`.

use ruin_asym::dist::ClaimDistribution;
use ruin_asym::renewal::{DelayedMeasure, RenewalSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let horizon = 20.0;
    for law in ["weibull(2, 1.5)", "pareto(1, 3)", "exp(0.2)"] {
        let theta: ClaimDistribution = law.parse()?;
        let spec = RenewalSpec::new(theta.clone(), horizon)?;
        let mean = theta.mean()?;
        println!("inter-arrival {law} (mean {mean:.4})");
        for t in [1.0, 2.0, 5.0, 10.0, 20.0] {
            println!(
                "  t = {t:>4}  λ(t) = {:>9.5}  density {:.5}  t/E[θ] = {:>8.4}",
                spec.renewal_function(t),
                spec.renewal_density(t),
                t / mean
            );
        }
        let delayed = DelayedMeasure::new(spec, "exp(0.2)".parse()?);
        println!("  (λ*H)(10) with exp(0.2) delays = {:.6}", delayed.value(10.0));
    }
    Ok(())
}
