//! Numerical checks behind the expansions: second-order subexponentiality,
//! Kesten-type growth, the weighted-sum expansion and the by-claim identities.

use ruin_asym::config::preset;
use ruin_asym::report::{run_check, Check};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = preset("pareto-s4")?.scenario;
    for check in Check::ALL {
        let rows = run_check(check, &s, &check.default_grid(), 200_000, 1, 8)?;
        for r in rows {
            println!(
                "{:<14} x = {:<8} statistic {:>12.5e}  reference {:>12.5e}  {:<12} {}",
                r.check, r.x, r.statistic, r.reference, r.outcome, r.detail
            );
        }
    }
    Ok(())
}
