//! Pareto coefficients of the second-order terms: the printed formulas
//! against quadrature of their defining integrals.

use ruin_asym::asym::{closed_form, coefficient_report, second_order};
use ruin_asym::config::preset;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = preset("pareto-s4")?.scenario;
    println!("{:>6} {:>14} {:>14} {:>10}", "coef", "formula", "quadrature", "rel gap");
    for c in coefficient_report(&s)? {
        println!("{:>6} {:>14.9} {:>14.9} {:>10.2e}", c.name, c.printed, c.quadrature, c.rel_gap);
    }
    for x in [1e2, 1e3, 1e4] {
        let closed = closed_form(&s, x)?;
        let quad = second_order(&s, x)?;
        println!(
            "x = {x:>7}: closed form {:.6e}, quadrature {:.6e}",
            closed.total_second_order, quad.total_second_order
        );
    }
    let weibull = preset("weibull-s4")?.scenario;
    if let Err(e) = closed_form(&weibull, 100.0) {
        println!("weibull-s4: {e}");
    }
    Ok(())
}
