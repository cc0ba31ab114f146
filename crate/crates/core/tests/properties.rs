use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nehari::fiber::{FiberRoots, Ray};
use nehari::grid::{Field, Grid};
use nehari::problem::ProblemSpec;
use nehari::sampling::random_field;
use nehari::scenario::ScenarioConfig;
use nehari::Nonlinearity;

fn spec(nl: u8, lambda: f64) -> ProblemSpec {
    let grid = Grid::new(1, 64, 4.0, 0.4).unwrap();
    let (nonlinearity, p) = match nl {
        0 => (Nonlinearity::power(4.0), 4.0),
        1 => (Nonlinearity::power_sum(vec![3.0, 4.0]).unwrap(), 4.0),
        _ => (Nonlinearity::LogPower, 3.0),
    };
    let potential = Field::from_fn(&grid, |x| 1.0 + 0.1 * x[0] * x[0]);
    let a = Field::from_fn(&grid, |x| 0.5 + (-x[0] * x[0] / 2.0).exp());
    let b = Field::from_fn(&grid, |x| 1.0 + 0.5 * (-x[0] * x[0]).exp());
    ProblemSpec::new(grid, 1.5, p, lambda, potential, 0.0, a, b, nonlinearity, Default::default()).unwrap()
}

fn field(spec: &ProblemSpec, seed: u64) -> Field {
    random_field(&spec.grid, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn extremal_quotients_are_scale_free(nl in 0u8..3, seed in any::<u64>(), log_alpha in -2.0f64..2.0) {
        let spec = spec(nl, 0.3);
        let u = field(&spec, seed);
        let v = u.scaled(10f64.powf(log_alpha));
        let (a, b) = (Ray::new(&spec, &u).unwrap(), Ray::new(&spec, &v).unwrap());
        prop_assert!(rel(a.lambda_n().unwrap().1, b.lambda_n().unwrap().1) <= 1e-9);
        prop_assert!(rel(a.lambda_e().unwrap().1, b.lambda_e().unwrap().1) <= 1e-9);
    }

    #[test]
    fn maximizers_and_values_are_ordered(nl in 0u8..3, seed in any::<u64>()) {
        let spec = spec(nl, 0.3);
        let u = field(&spec, seed);
        let ray = Ray::new(&spec, &u).unwrap();
        let (tn, ln) = ray.lambda_n().unwrap();
        let (te, le) = ray.lambda_e().unwrap();
        prop_assert!(tn < te, "t_n {} t_e {}", tn, te);
        prop_assert!(le < ln, "Λ_e {} Λ_n {}", le, ln);
    }

    #[test]
    fn quotient_signs_match_energy_signs(nl in 0u8..3, seed in any::<u64>(), log_t in -1.5f64..1.5, frac in 0.05f64..1.5) {
        let spec = spec(nl, 0.3);
        let u = field(&spec, seed);
        let ray = Ray::new(&spec, &u).unwrap();
        let (tn, ln) = ray.lambda_n().unwrap();
        let t = tn * 10f64.powf(log_t);
        let lambda = frac * ln;
        let (dn, de) = (ray.q_n(t) - lambda, ray.q_e(t) - lambda);
        prop_assume!(dn.abs() > 1e-9 * lambda && de.abs() > 1e-9 * lambda);
        prop_assert_eq!(dn > 0.0, ray.pairing(t, lambda) > 0.0);
        prop_assert_eq!(de > 0.0, ray.energy(t, lambda) > 0.0);
    }

    #[test]
    fn nehari_roots_land_on_the_manifold(nl in 0u8..3, seed in any::<u64>(), frac in 0.05f64..0.99) {
        let spec = spec(nl, 0.3);
        let u = field(&spec, seed);
        let ray = Ray::new(&spec, &u).unwrap();
        let (tn, ln) = ray.lambda_n().unwrap();
        let lambda = frac * ln;
        match ray.nehari_roots(lambda).unwrap() {
            FiberRoots::TwoRoots { plus, minus } => {
                prop_assert!(plus < tn && tn < minus);
                prop_assert!(rel(ray.q_n(plus), lambda) <= 1e-8);
                prop_assert!(rel(ray.q_n(minus), lambda) <= 1e-8);
                prop_assert!(ray.second(plus, lambda) > 0.0);
                prop_assert!(ray.second(minus, lambda) < 0.0);
                prop_assert!(ray.energy(plus, lambda) < 0.0);
            }
            other => prop_assert!(false, "expected two roots below Λ_n, got {:?}", other),
        }
        prop_assert_eq!(ray.nehari_roots(1.01 * ln).unwrap(), FiberRoots::NoRoot);
    }

    #[test]
    fn fractional_laplacian_is_symmetric_and_nonnegative(seed in any::<u64>(), s in 0.05f64..0.49) {
        let grid = Grid::new(1, 64, 3.0, s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_field(&grid, &mut rng);
        let v = random_field(&grid, &mut rng);
        let (lu, lv) = (grid.fractional_laplacian(&u).unwrap(), grid.fractional_laplacian(&v).unwrap());
        let (uv, vu) = (grid.dot(&u, &lv), grid.dot(&lu, &v));
        prop_assert!((uv - vu).abs() <= 1e-10 * (uv.abs() + vu.abs()).max(1e-12));
        prop_assert!(grid.dot(&u, &lu) >= -1e-12);
    }

    #[test]
    fn scenario_text_round_trips(seed in any::<u64>(), starts in 1usize..20, lambda in 0.01f64..2.0) {
        let mut cfg = ScenarioConfig::bundled("power_sum").unwrap();
        cfg.seed = seed;
        cfg.starts = starts;
        let text = cfg.to_text().replace("lambda_fraction = 0.5", &format!("lambda = {lambda}"));
        let parsed = ScenarioConfig::parse(&text).unwrap();
        prop_assert_eq!(parsed.to_text(), text);
        prop_assert_eq!(parsed.spec().unwrap().lambda, lambda);
    }
}
