//! Tails, local increments and inverse-transform draws for the shipped laws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ruin_asym::dist::ClaimDistribution;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let laws: Vec<ClaimDistribution> = ["pareto(2, 2.3)", "weibull(1, 0.3)", "exp(0.5)", "point(3)"]
        .iter()
        .map(|s| s.parse())
        .collect::<Result<_, _>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for d in &laws {
        let draws: Vec<f64> = (0..100_000).map(|_| d.draw(&mut rng)).collect();
        let empirical = draws.iter().filter(|&&z| z > 10.0).count() as f64 / draws.len() as f64;
        println!(
            "{d:<18} mean {:>9.4}  tail(10) {:.5e}  empirical {:.5e}  F(10, 11] {:.5e}  median {:.4}",
            d.mean()?,
            d.tail(10.0),
            empirical,
            d.local_increment(10.0, 1.0),
            d.quantile(0.5),
        );
    }
    Ok(())
}
