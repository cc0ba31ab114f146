//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints exactly one PASS/FAIL line, then exits non-zero if any failed.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nehari::extremal::{certify_gap, estimate_extremals_with, ExtremalEstimate, ExtremalOptions};
use nehari::fiber::{FiberRoots, Ray};
use nehari::grid::{Field, Grid};
use nehari::problem::{check_hypotheses, ProblemSpec};
use nehari::sampling::{lift_from_zero, random_field};
use nehari::scenario::{ScenarioConfig, BUNDLED};
use nehari::solver::{solve_bound, solve_ground, SolveOptions, SolveResult};
use nehari::verify::{directional_stationarity, fiber_identity, first_variation_check, second_variation_check, v_distance};
use nehari::Nonlinearity;

type Outcome = Result<String, String>;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}

fn fields(spec: &ProblemSpec, count: usize, seed: u64) -> Vec<Field> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_field(&spec.grid, &mut rng)).collect()
}

fn ensure(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

struct Case {
    name: &'static str,
    cfg: ScenarioConfig,
    base: ProblemSpec,
    est: ExtremalEstimate,
}

impl Case {
    fn load(name: &'static str) -> nehari::Result<Self> {
        let cfg = ScenarioConfig::bundled(name)?;
        let base = cfg.spec()?;
        let opts = ExtremalOptions { starts: cfg.starts, seed: cfg.seed, budget: cfg.budget, basis_size: cfg.basis };
        let est = estimate_extremals_with(&base, &opts)?;
        Ok(Self { name, cfg, base, est })
    }

    fn solve_opts(&self) -> SolveOptions {
        let mut opts = SolveOptions::new(self.est.lambda_star);
        opts.max_iter = self.cfg.max_iter;
        opts.tol = self.cfg.tol;
        opts
    }
}

/// Ground and bound state at one λ.
struct Pair {
    scenario: &'static str,
    lambda: f64,
    /// One of the `{0.25, 0.5, 0.75} λ*` ground-state points.
    ground_sweep: bool,
    spec: ProblemSpec,
    ground: SolveResult,
    bound: SolveResult,
}

fn solve_pairs(case: &Case) -> nehari::Result<Vec<Pair>> {
    let (ls, lu) = (case.est.lambda_substar, case.est.lambda_star);
    let lambdas = [0.25 * lu, 0.5 * lu, 0.75 * lu, 0.5 * ls, ls, 0.5 * (ls + lu)];
    let opts = case.solve_opts();
    let mut out = Vec::new();
    for (i, lambda) in lambdas.into_iter().enumerate() {
        let spec = case.base.with_lambda(lambda)?;
        let ground = solve_ground(&spec, case.cfg.solve_starts, case.cfg.seed, &opts)?;
        let bound = solve_bound(&spec, case.cfg.solve_starts, case.cfg.seed, &opts)?;
        out.push(Pair { scenario: case.name, lambda, ground_sweep: i < 3, spec, ground, bound });
    }
    Ok(out)
}

fn surrogate() -> (ProblemSpec, Field) {
    let grid = Grid::new(1, 8, 0.5, 0.4).unwrap();
    let spec = ProblemSpec::flat(grid, 1.5, 4.0, 0.3, 1.0, Nonlinearity::power(4.0)).unwrap();
    let u = Field::constant(&spec.grid, 1.0);
    (spec, u)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let rising = f(hi) > f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0) == rising {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn criterion_1() -> Outcome {
    let (spec, u) = surrogate();
    let ray = Ray::new(&spec, &u).map_err(|e| e.to_string())?;
    let (tn, ln) = ray.lambda_n().map_err(|e| e.to_string())?;
    let (te, le) = ray.lambda_e().map_err(|e| e.to_string())?;
    // with x = √t: q_n = x - x⁵, q_e = 1.5 (x/2 - x⁵/4)
    let x_peak = 0.2f64.powf(0.25);
    let x_plus = bisect(|x| x - x.powi(5) - 0.3, 0.0, x_peak);
    let x_minus = bisect(|x| x - x.powi(5) - 0.3, x_peak, 1.0);
    let (plus, minus) = match ray.nehari_roots(0.3).map_err(|e| e.to_string())? {
        FiberRoots::TwoRoots { plus, minus } => (plus, minus),
        other => return Err(format!("expected two roots at λ = 0.3, got {other:?}")),
    };
    let checks = [
        ("t_n", tn, 0.447214),
        ("t_n closed form", tn, 0.2f64.sqrt()),
        ("Λ_n", ln, 0.534992),
        ("t_e", te, 0.632456),
        ("t_e closed form", te, 0.4f64.sqrt()),
        ("Λ_e", le, 0.477162),
        ("t⁺ bisection", plus, x_plus * x_plus),
        ("t⁻ bisection", minus, x_minus * x_minus),
    ];
    let worst = checks.iter().map(|(_, a, b)| rel(*a, *b)).fold(0.0, f64::max);
    let stated = (plus - 0.0915).abs() < 5e-5 && (minus - 0.8174).abs() < 5e-5;
    let msg = format!("t_n={tn:.6} Λ_n={ln:.6} t_e={te:.6} Λ_e={le:.6} roots={{{plus:.4}, {minus:.4}}} max rel err {worst:.1e}");
    ensure(worst <= 1e-6 && stated, msg)
}

fn criterion_2(cases: &[Case]) -> Outcome {
    let (spec, u) = surrogate();
    let ray = Ray::new(&spec, &u).map_err(|e| e.to_string())?;
    let (lhs, rhs) = fiber_identity(&ray, spec.q, 1.0);
    let spot = rel(lhs, -0.375).max(rel(rhs, -0.375));
    let spec = cases[0].base.with_lambda(0.5 * cases[0].est.lambda_star).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for u in fields(&spec, 50, 20) {
        let ray = Ray::new(&spec, &u).map_err(|e| e.to_string())?;
        let tn = ray.t_n().map_err(|e| e.to_string())?;
        for _ in 0..10 {
            let t = tn * 10f64.powf(rng.random_range(-1.0..1.0));
            let (l, r) = fiber_identity(&ray, spec.q, t);
            worst = worst.max(rel(l, r));
        }
    }
    let msg = format!("surrogate {lhs:.9} vs {rhs:.9}; 500 samples max rel err {worst:.2e}");
    ensure(spot <= 1e-6 && worst <= 1e-6, msg)
}

fn criterion_3(cases: &[Case]) -> Outcome {
    let mut violations = 0;
    let mut two_roots = 0;
    let mut total = 0;
    for (k, case) in cases.iter().enumerate() {
        let spec = case.base.with_lambda(0.5 * case.est.lambda_star).map_err(|e| e.to_string())?;
        for u in fields(&spec, 100, 30 + k as u64) {
            let ray = Ray::new(&spec, &u).map_err(|e| e.to_string())?;
            let (tn, ln) = ray.lambda_n().map_err(|e| e.to_string())?;
            let (te, le) = ray.lambda_e().map_err(|e| e.to_string())?;
            total += 1;
            if !(tn < te && le < ln) {
                violations += 1;
            }
            if let Some((plus, minus)) = ray.nehari_roots(spec.lambda).map_err(|e| e.to_string())?.pair() {
                two_roots += 1;
                if !(plus < tn && tn < minus) {
                    violations += 1;
                }
            }
        }
    }
    ensure(violations == 0, format!("{total} fields ({two_roots} with two Nehari roots), {violations} violations"))
}

fn criterion_4(cases: &[Case]) -> Outcome {
    let mut worst: f64 = 0.0;
    for (k, case) in cases.iter().enumerate() {
        for u in fields(&case.base, 30, 40 + k as u64) {
            let ray = Ray::new(&case.base, &u).map_err(|e| e.to_string())?;
            let (ln, le) = (ray.lambda_n().map_err(|e| e.to_string())?.1, ray.lambda_e().map_err(|e| e.to_string())?.1);
            for alpha in [0.1, 3.0, 10.0] {
                let v = u.scaled(alpha);
                let ray = Ray::new(&case.base, &v).map_err(|e| e.to_string())?;
                worst = worst.max(rel(ray.lambda_n().map_err(|e| e.to_string())?.1, ln));
                worst = worst.max(rel(ray.lambda_e().map_err(|e| e.to_string())?.1, le));
            }
        }
    }
    ensure(worst <= 1e-9, format!("90 fields x 3 scalings, max rel change {worst:.2e}"))
}

fn criterion_5(cases: &mut [Case]) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for case in cases.iter_mut() {
        let gap = 0.0 < case.est.lambda_substar && case.est.lambda_substar < case.est.lambda_star;
        let cert = certify_gap(&case.base, &mut case.est, 200, case.cfg.seed).map_err(|e| e.to_string())?;
        let violations: usize = cert.passes.iter().map(|p| p.violations_n + p.violations_e).sum();
        ok &= gap && cert.passed && !cert.lowered && violations == 0;
        parts.push(format!(
            "{}: λ_*={:.6} < λ*={:.6}, {violations} violations",
            case.name, case.est.lambda_substar, case.est.lambda_star
        ));
    }
    ensure(ok, parts.join("; "))
}

fn criterion_6(pairs: &[Pair]) -> Outcome {
    let mut bad = Vec::new();
    let mut worst_res: f64 = 0.0;
    for p in pairs.iter().filter(|p| p.ground_sweep) {
        let g = &p.ground;
        let scale = 1.0 + g.norm_v;
        let stat = directional_stationarity(&p.spec, &g.u, 5, 6).map_err(|e| e.to_string())?;
        worst_res = worst_res.max(g.residual / scale);
        if !(g.converged && g.j < 0.0 && g.j2_diag > 0.0 && g.residual <= 1e-6 * scale && stat <= 1e-4 * scale) {
            bad.push(format!("{} λ={:.4}: J={:.3e} J''={:.3e} res={:.1e} stat={stat:.1e}", p.scenario, p.lambda, g.j, g.j2_diag, g.residual));
        }
    }
    ensure(bad.is_empty(), if bad.is_empty() { format!("max residual/(1+‖u‖_V) {worst_res:.1e}") } else { bad.join("; ") })
}

fn criterion_7(cases: &[Case], pairs: &[Pair]) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for case in cases {
        let (ls, lu) = (case.est.lambda_substar, case.est.lambda_star);
        let at = |lambda: f64| pairs.iter().find(|p| p.scenario == case.name && p.lambda == lambda).map(|p| &p.bound);
        let (below, at_substar, between) = match (at(0.5 * ls), at(ls), at(0.5 * (ls + lu))) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => return Err(format!("{}: missing bound solve", case.name)),
        };
        let scale = at_substar.norm_v * at_substar.norm_v;
        let signs = below.j > 0.0 && at_substar.j.abs() <= 1e-3 * scale && between.j < 0.0;
        let curvature = [below, at_substar, between].iter().all(|b| b.j2_diag < 0.0 && b.converged);
        ok &= signs && curvature;
        parts.push(format!("{}: J = {:+.2e}, {:+.2e}, {:+.2e}", case.name, below.j, at_substar.j, between.j));
    }
    ensure(ok, parts.join("; "))
}

fn criterion_8(pairs: &[Pair]) -> Outcome {
    let mut bad = Vec::new();
    let mut min_dist = f64::INFINITY;
    for p in pairs {
        let d = v_distance(&p.spec, &p.ground.u, &p.bound.u).map_err(|e| e.to_string())?;
        min_dist = min_dist.min(d);
        if !(d > 1e-3 && p.ground.j < p.bound.j) {
            bad.push(format!("{} λ={:.4}: dist={d:.2e} c+={:.3e} c-={:.3e}", p.scenario, p.lambda, p.ground.j, p.bound.j));
        }
    }
    let msg = if bad.is_empty() { format!("{} λ values, min ‖u-v‖_V {min_dist:.3e}", pairs.len()) } else { bad.join("; ") };
    ensure(bad.is_empty(), msg)
}

fn criterion_9() -> Outcome {
    let log = ScenarioConfig::bundled("log_power").and_then(|c| c.spec()).map_err(|e| e.to_string())?;
    let power = ScenarioConfig::bundled("power").and_then(|c| c.spec()).map_err(|e| e.to_string())?;
    let mut linear = power.clone();
    linear.nonlinearity = Nonlinearity::linear();
    let log_r = check_hypotheses(&log, 400, 1e3).map_err(|e| e.to_string())?;
    let pow_r = check_hypotheses(&power, 400, 1e3).map_err(|e| e.to_string())?;
    let lin_r = check_hypotheses(&linear, 400, 1e3).map_err(|e| e.to_string())?;
    let log_ok = log_r.f1_growth() && log_r.f2_limits() && log_r.f3_h_monotone() && log_r.f4_strict() && !log_r.ar_satisfied();
    let f2 = lin_r.get("f2_limits");
    let witness = f2.and_then(|c| c.witness_t);
    let lin_ok = f2.is_some_and(|c| !c.pass) && witness.is_some();
    let msg = format!(
        "log_power f1-f4 {} ar={}; power ar={}; linear f2 fails at t={witness:?}",
        log_ok,
        log_r.ar_satisfied(),
        pow_r.ar_satisfied()
    );
    ensure(log_ok && pow_r.ar_satisfied() && lin_ok, msg)
}

fn criterion_10(cases: &[Case]) -> Outcome {
    let (mut first, mut second): (f64, f64) = (0.0, 0.0);
    for (k, case) in cases.iter().enumerate() {
        let spec = case.base.with_lambda(0.5 * case.est.lambda_star).map_err(|e| e.to_string())?;
        let fs = fields(&spec, 21, 100 + k as u64);
        for pair in fs.windows(2) {
            let u = lift_from_zero(&pair[0], 0.05);
            let phi = pair[1].scaled(u.max_abs() / pair[1].max_abs());
            let (an, fd) = first_variation_check(&spec, &u, &phi, 1e-5).map_err(|e| e.to_string())?;
            first = first.max(rel(an, fd));
            let (an, fd) = second_variation_check(&spec, &u, 1e-4).map_err(|e| e.to_string())?;
            second = second.max(rel(an, fd));
        }
    }
    ensure(first <= 1e-5 && second <= 1e-4, format!("first variation {first:.2e}, second variation {second:.2e}"))
}

fn main() -> ExitCode {
    let clock = Instant::now();
    let mut failed = 0;
    let mut report = |n: usize, title: &str, outcome: Outcome| {
        let (tag, msg) = match outcome {
            Ok(m) => ("PASS", m),
            Err(m) => {
                failed += 1;
                ("FAIL", m)
            }
        };
        println!("criterion {n:>2} {tag} {title}: {msg}");
    };

    report(1, "scalar surrogate oracles", criterion_1());
    report(9, "hypothesis audit", criterion_9());

    let mut cases = Vec::new();
    for name in BUNDLED {
        match Case::load(name) {
            Ok(c) => cases.push(c),
            Err(e) => {
                println!("setup FAIL {name}: {e}");
                return ExitCode::FAILURE;
            }
        }
    }
    report(2, "fiber identity", criterion_2(&cases));
    report(3, "ordering invariants", criterion_3(&cases));
    report(4, "homogeneity", criterion_4(&cases));
    report(5, "extremal gap", criterion_5(&mut cases));
    report(10, "finite-difference variations", criterion_10(&cases));

    let mut pairs = Vec::new();
    for case in &cases {
        match solve_pairs(case) {
            Ok(p) => pairs.extend(p),
            Err(e) => {
                println!("setup FAIL solves on {}: {e}", case.name);
                return ExitCode::FAILURE;
            }
        }
    }
    report(6, "ground states", criterion_6(&pairs));
    report(7, "bound-state trichotomy", criterion_7(&cases, &pairs));
    report(8, "distinct solutions, c+ < c-", criterion_8(&pairs));

    println!("acceptance: {} failed, {:.1}s", failed, clock.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
