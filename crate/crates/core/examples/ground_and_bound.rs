//! Ground state on N⁺ and bound state on N⁻ at λ = λ*/2.

use nehari::extremal::estimate_extremals;
use nehari::scenario::ScenarioConfig;
use nehari::solver::{solve_bound, solve_ground, SolveOptions};
use nehari::verify::v_distance;

fn main() -> nehari::Result<()> {
    let cfg = ScenarioConfig::bundled("power_sum")?;
    let base = cfg.spec()?;
    let est = estimate_extremals(&base, cfg.starts, cfg.seed, cfg.budget)?;
    let spec = base.with_lambda(0.5 * est.lambda_star)?;
    let opts = SolveOptions::new(est.lambda_star);

    let ground = solve_ground(&spec, 3, 0, &opts)?;
    let bound = solve_bound(&spec, 3, 0, &opts)?;
    for r in [&ground, &bound] {
        println!(
            "{:<8} J = {:+.6e}  J'' = {:+.3e}  residual {:.1e}  ‖u‖_V = {:.4}  {} iterations from {}",
            r.branch.name(),
            r.j,
            r.j2_diag,
            r.residual,
            r.norm_v,
            r.iterations,
            r.start
        );
    }
    println!("‖u - v‖_V = {:.4}", v_distance(&spec, &ground.u, &bound.u)?);

    let path = std::env::temp_dir().join("nehari_ground.csv");
    ground.u.write_csv(std::fs::File::create(&path)?)?;
    println!("ground state written to {}", path.display());
    Ok(())
}
