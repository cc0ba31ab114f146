//! Sign of the N⁻ energy as λ crosses λ_*: positive, zero, negative.

use nehari::extremal::estimate_extremals;
use nehari::scenario::ScenarioConfig;
use nehari::solver::{classify_trichotomy, solve_bound, SolveOptions};

fn main() -> nehari::Result<()> {
    let cfg = ScenarioConfig::bundled("power")?;
    let base = cfg.spec()?;
    let est = estimate_extremals(&base, cfg.starts, cfg.seed, cfg.budget)?;
    let opts = SolveOptions::new(est.lambda_star);
    let (lo, hi) = (est.lambda_substar, est.lambda_star);

    for lambda in [0.5 * lo, 0.9 * lo, lo, 0.5 * (lo + hi), 0.95 * hi] {
        let spec = base.with_lambda(lambda)?;
        let bound = solve_bound(&spec, cfg.solve_starts, cfg.seed, &opts)?;
        let check = classify_trichotomy(&spec, &bound, &est);
        println!(
            "λ = {lambda:.6}: J = {:+.4e} ({:?}, consistent {})",
            bound.j, check.label, check.consistent
        );
    }
    Ok(())
}
