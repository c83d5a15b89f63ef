//! Writes the Monte-Carlo versus asymptotics table for a custom scenario.

use ruin_asym::config::parse_str;
use ruin_asym::report::{run_compare, write_compare_csv};

const SCENARIO: &str = r#"
[model]
byclaims = true
r = 0.05
t = 5

[main_claim]
law = "pareto(1, 2.5)"

[by_claim]
law = "pareto(1, 3)"

[interarrival]
law = "exp(0.5)"

[delay]
law = "exp(1)"

[run]
samples = 200000
seed = 3
x_grid = "logspace:10:200:8"
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let c = parse_str(SCENARIO)?;
    let rows = run_compare(&c.scenario, &c.run)?;
    write_compare_csv(std::io::stdout().lock(), &rows)?;
    Ok(())
}
