//! Parallel Monte-Carlo tail estimates with Wilson intervals. Results depend
//! only on the seed and the number of workers.

use ruin_asym::config::{parse_x_grid, preset};
use ruin_asym::mc::estimate_tail;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let s = preset("pareto-s4")?.scenario;
    let grid = parse_x_grid("logspace:10:300:6")?;
    let rows = estimate_tail(&s, &grid, 200_000, 11, 8)?;
    for e in &rows {
        println!(
            "x = {:>8.3}  p = {:.4e}  95% CI [{:.4e}, {:.4e}]  hits {}",
            e.x, e.p_hat, e.ci_low, e.ci_high, e.hits
        );
    }
    let again = estimate_tail(&s, &grid, 200_000, 11, 8)?;
    println!("rerun identical: {}", again == rows);
    Ok(())
}
