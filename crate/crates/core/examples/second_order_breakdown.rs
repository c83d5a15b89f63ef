//! First-order term, the four weighted corrections and the remainder scale
//! for both built-in scenarios.

use ruin_asym::asym::{second_order, CORR_F, CORR_F_TILDE, CORR_G, CORR_G_TILDE};
use ruin_asym::config::preset;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for name in ["pareto-s4", "weibull-s4"] {
        let s = preset(name)?.scenario;
        println!("{name}");
        println!(
            "{:>8} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12} {:>6}",
            "x", "first", "corr_F", "corr_G~", "corr_G", "corr_F~", "second", "regime"
        );
        for x in [20.0, 100.0, 1e3, 1e4] {
            let b = second_order(&s, x)?;
            println!(
                "{x:>8} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>6}",
                b.first_order,
                b.contribution(CORR_F),
                b.contribution(CORR_G_TILDE),
                b.contribution(CORR_G),
                b.contribution(CORR_F_TILDE),
                b.total_second_order,
                b.regime_flag
            );
        }
    }
    Ok(())
}
