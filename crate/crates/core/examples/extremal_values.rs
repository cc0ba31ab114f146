//! Multistart estimates of λ* and λ_* followed by the random-probe audit.

use nehari::extremal::{certify_gap, estimate_extremals_with, ExtremalOptions};
use nehari::scenario::ScenarioConfig;

fn main() -> nehari::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "power".into());
    let spec = ScenarioConfig::bundled(&name)?.spec()?;
    let opts = ExtremalOptions { starts: 6, seed: 0, ..Default::default() };
    let mut est = estimate_extremals_with(&spec, &opts)?;

    for s in &est.per_start {
        println!(
            "start {} ({}): Λ_n {:?}, Λ_e {:?}, sweeps {}/{}",
            s.index, s.origin, s.lambda_n, s.lambda_e, s.sweeps_n, s.sweeps_e
        );
    }
    println!("λ_* ≈ {:.9}  <  λ* ≈ {:.9}", est.lambda_substar, est.lambda_star);

    let cert = certify_gap(&spec, &mut est, 200, 0)?;
    for pass in &cert.passes {
        println!(
            "probes {}: min Λ_n {:.6}, min Λ_e {:.6}, violations {}/{}",
            pass.probes, pass.min_lambda_n, pass.min_lambda_e, pass.violations_n, pass.violations_e
        );
    }
    println!("certified: {}", cert.passed);
    Ok(())
}
