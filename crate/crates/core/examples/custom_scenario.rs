//! A scenario written inline, then the full invariant table.

use nehari::scenario::ScenarioConfig;
use nehari::verify::verify_scenario;

const SCENARIO: &str = "
name = wide_trap
d = 1
n = 128
L = 8
s = 0.3
q = 1.3
p = 3.5
nonlinearity = power_sum:2.5,3.5
lambda_fraction = 0.4
V = harmonic:0.5,0.05
a = gaussian:0.2,1,3
b = constant:1
starts = 4
";

fn main() -> nehari::Result<()> {
    let cfg = ScenarioConfig::parse(SCENARIO)?;
    let report = verify_scenario(&cfg)?;
    print!("{}", report.table());
    println!("λ = {:.6}, λ_* ≈ {:.6}, λ* ≈ {:.6}, all pass: {}", report.lambda, report.lambda_substar, report.lambda_star, report.all_pass());
    Ok(())
}
