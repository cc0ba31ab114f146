//! Fiber maps along one ray: maximizers, extremal quotients, Nehari and
//! zero-energy projections, and a CSV of q_n, q_e and J along the ray.

use nehari::fiber::{fiber_report, sample_fiber, Ray};
use nehari::sampling::gaussian_bump;
use nehari::scenario::ScenarioConfig;

fn main() -> nehari::Result<()> {
    let cfg = ScenarioConfig::bundled("log_power")?;
    let spec = cfg.spec_at(0.3)?;
    let u = gaussian_bump(&spec.grid, [0.0, 0.0], 1.5);

    let ray = Ray::new(&spec, &u)?;
    let (t_n, lambda_n) = ray.lambda_n()?;
    let (t_e, lambda_e) = ray.lambda_e()?;
    println!("t_n = {t_n:.6}  Λ_n(u) = {lambda_n:.6}");
    println!("t_e = {t_e:.6}  Λ_e(u) = {lambda_e:.6}");

    for lambda in [0.5 * lambda_e, 0.5 * (lambda_e + lambda_n), 1.1 * lambda_n] {
        let r = fiber_report(&spec, &u, lambda)?;
        println!("λ = {lambda:.4}: Nehari {:?}, zero energy {:?}", r.roots_n, r.roots_e);
    }

    // J(tu) changes sign exactly where q_e(t) crosses λ
    let lambda = spec.lambda;
    for t in [0.1 * t_n, t_n, t_e, 3.0 * t_e] {
        println!("t = {t:.4}: q_e - λ = {:+.4e}, J(tu) = {:+.4e}", ray.q_e(t) - lambda, ray.energy(t, lambda));
    }

    let table = sample_fiber(&spec, &u, 1e-3, 1e2, 60)?;
    let path = std::env::temp_dir().join("nehari_fiber.csv");
    table.write_csv(std::fs::File::create(&path)?)?;
    println!("{} rows written to {}", table.rows.len(), path.display());
    Ok(())
}
