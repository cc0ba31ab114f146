use approx::assert_relative_eq;

use nehari::extremal::estimate_extremals;
use nehari::fiber::{find_t_n, rayleigh_n, Ray};
use nehari::grid::{Field, Grid};
use nehari::nonlinearity::adaptive_simpson;
use nehari::problem::ProblemSpec;
use nehari::sampling::gaussian_bump;
use nehari::scenario::ScenarioConfig;
use nehari::solver::{solve_bound, solve_ground, SolveOptions};
use nehari::verify::directional_stationarity;
use nehari::Nonlinearity;

/// Argmax of `f` over `count` log-spaced points in `[lo, hi]`.
fn scan(f: impl Fn(f64) -> f64, lo: f64, hi: f64, count: usize) -> (f64, f64) {
    let step = (hi / lo).ln() / (count - 1) as f64;
    (0..count)
        .map(|i| {
            let t = lo * (step * i as f64).exp();
            (t, f(t))
        })
        .fold((lo, f64::NEG_INFINITY), |best, p| if p.1 > best.1 { p } else { best })
}

#[test]
fn log_power_maximizer_matches_direct_scan() {
    let cfg = ScenarioConfig::bundled("log_power").unwrap();
    let spec = cfg.spec_at(0.3).unwrap();
    let u = cfg.fiber_field(&spec.grid).unwrap();
    let ray = Ray::new(&spec, &u).unwrap();
    let (coarse, _) = scan(|t| ray.q_n(t), 1e-4, 1e4, 10_001);
    let ratio = 1e8f64.powf(1.0 / 10_000.0);
    let (t_scan, q_scan) = scan(|t| ray.q_n(t), coarse / ratio.powi(2), coarse * ratio.powi(2), 1_000_000);
    let (t_n, lambda_n) = ray.lambda_n().unwrap();
    assert_relative_eq!(t_n, t_scan, max_relative = 1e-6);
    assert!(lambda_n >= q_scan - 1e-14 * q_scan.abs());
    assert_relative_eq!(find_t_n(&spec, &u).unwrap(), t_n, max_relative = 1e-15);
}

#[test]
fn log_primitive_matches_quadrature() {
    let nl = Nonlinearity::LogPower;
    for t in [1e-3, 0.5, 1.0, 3.0, 40.0, -0.7, -5.0] {
        let direct = adaptive_simpson(&|x| nl.f(x), 0.0, t, 1e-13, 40);
        assert_relative_eq!(nl.primitive(t), direct, max_relative = 1e-9);
    }
}

#[test]
fn surrogate_values_hold_in_two_dimensions() {
    let grid = Grid::new(2, 8, 0.5, 0.9).unwrap();
    let spec = ProblemSpec::flat(grid, 1.5, 4.0, 0.3, 1.0, Nonlinearity::power(4.0)).unwrap();
    let u = Field::constant(&spec.grid, 1.0);
    let ray = Ray::new(&spec, &u).unwrap();
    let (t_n, lambda_n) = ray.lambda_n().unwrap();
    let (t_e, lambda_e) = ray.lambda_e().unwrap();
    assert_relative_eq!(t_n, 0.2f64.sqrt(), max_relative = 1e-10);
    assert_relative_eq!(t_e, 0.4f64.sqrt(), max_relative = 1e-10);
    assert_relative_eq!(lambda_n, 0.534992244, max_relative = 1e-8);
    assert_relative_eq!(lambda_e, 0.477162437, max_relative = 1e-8);
    assert!(rayleigh_n(&spec, &u).unwrap().abs() < 1e-14);
}

#[test]
fn two_dimensional_ground_and_bound_states() {
    let grid = Grid::new(2, 16, 2.0, 0.5).unwrap();
    let potential = Field::from_fn(&grid, |x| 1.0 + 0.2 * (x[0] * x[0] + x[1] * x[1]));
    let a = Field::constant(&grid, 1.0);
    let b = Field::from_fn(&grid, |x| 1.0 + 0.5 * (-(x[0] * x[0] + x[1] * x[1])).exp());
    let base =
        ProblemSpec::new(grid, 1.5, 3.0, 1.0, potential, 0.0, a, b, Nonlinearity::power(3.0), Default::default()).unwrap();
    let est = estimate_extremals(&base, 4, 1, 200).unwrap();
    assert!(0.0 < est.lambda_substar && est.lambda_substar < est.lambda_star);

    let spec = base.with_lambda(0.5 * est.lambda_star).unwrap();
    let opts = SolveOptions::new(est.lambda_star);
    let ground = solve_ground(&spec, 2, 1, &opts).unwrap();
    let bound = solve_bound(&spec, 2, 1, &opts).unwrap();
    assert!(ground.converged && bound.converged, "{} / {}", ground.stop_reason, bound.stop_reason);
    assert!(ground.j < 0.0 && ground.j2_diag > 0.0);
    assert!(bound.j2_diag < 0.0 && ground.j < bound.j);
    for r in [&ground, &bound] {
        assert!(r.residual <= 1e-6 * (1.0 + r.norm_v));
        assert!(directional_stationarity(&spec, &r.u, 5, 3).unwrap() <= 1e-4 * (1.0 + r.norm_v));
    }
    // radial data: the ground state peaks near the origin
    let peak = ground.u.values().iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap().0;
    let [x, y] = spec.grid.point(peak);
    assert!(x * x + y * y <= 0.5, "peak at ({x}, {y})");
}

#[test]
fn bump_width_does_not_change_homogeneity() {
    let cfg = ScenarioConfig::bundled("power").unwrap();
    let spec = cfg.spec_at(0.3).unwrap();
    for width in [0.3, 1.0, 3.0] {
        let u = gaussian_bump(&spec.grid, [0.5, 0.0], width);
        let base = Ray::new(&spec, &u).unwrap().lambda_n().unwrap().1;
        let v = u.scaled(0.37);
        assert_relative_eq!(Ray::new(&spec, &v).unwrap().lambda_n().unwrap().1, base, max_relative = 1e-9);
    }
}
