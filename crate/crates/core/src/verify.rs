//! Invariant suite: every checkable identity and ordering, run on one scenario.
//!
//! The building blocks (finite-difference checks, the fiber identity, the
//! stationarity probe) are public so tests and examples can use them directly.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::extremal::{certify_gap, estimate_extremals_with, extremal_value, ExtremalEstimate, ExtremalOptions, Target};
use crate::fiber::{fiber_report, FiberRoots, Ray};
use crate::functional::{evaluate, residual_field};
use crate::grid::Field;
use crate::problem::{check_hypotheses, ProblemSpec};
use crate::sampling::{lift_from_zero, random_field, random_smooth_noise};
use crate::scenario::ScenarioConfig;
use crate::solver::{check_validity, label_result, solve_bound, solve_ground, SolveOptions, SolveResult};

/// `(J'_λ(u) φ, central difference of J_λ along φ)`.
pub fn first_variation_check(spec: &ProblemSpec, u: &Field, phi: &Field, eps: f64) -> Result<(f64, f64)> {
    let r = residual_field(spec, u)?;
    let analytic = spec.grid.dot(&r, phi);
    let jp = evaluate(spec, &u.plus_scaled(eps, phi))?.j;
    let jm = evaluate(spec, &u.plus_scaled(-eps, phi))?.j;
    Ok((analytic, (jp - jm) / (2.0 * eps)))
}

/// `(J''_λ(u)(u,u), second central difference of t ↦ J_λ(t u) at t = 1)`.
pub fn second_variation_check(spec: &ProblemSpec, u: &Field, eps: f64) -> Result<(f64, f64)> {
    let v = evaluate(spec, u)?;
    let jp = evaluate(spec, &u.scaled(1.0 + eps))?.j;
    let jm = evaluate(spec, &u.scaled(1.0 - eps))?.j;
    Ok((v.second(spec.lambda, spec.q), (jp - 2.0 * v.j + jm) / (eps * eps)))
}

/// `(q_n(t) - q_e(t), (t/q) q_e'(t))` with `q_e'` by central difference of step `1e-6 t`.
pub fn fiber_identity(ray: &Ray, q: f64, t: f64) -> (f64, f64) {
    let h = 1e-6 * t;
    let dqe = (ray.q_e(t + h) - ray.q_e(t - h)) / (2.0 * h);
    (ray.q_n(t) - ray.q_e(t), t / q * dqe)
}

/// Largest `|dJ_λ(u)[φ]|` over `count` random directions with `‖φ‖_V = 1`,
/// each derivative taken by central differences.
pub fn directional_stationarity(spec: &ProblemSpec, u: &Field, count: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let phi = random_smooth_noise(&spec.grid, &mut rng, 16);
        let norm = spec.grid.inner_product_v(&spec.potential, &phi, &phi)?.sqrt();
        let phi = phi.scaled(1.0 / norm);
        let (_, fd) = first_variation_check(spec, u, &phi, 1e-4)?;
        worst = worst.max(fd.abs());
    }
    Ok(worst)
}

pub fn v_distance(spec: &ProblemSpec, u: &Field, v: &Field) -> Result<f64> {
    let d = u.plus_scaled(-1.0, v);
    Ok(spec.grid.inner_product_v(&spec.potential, &d, &d)?.max(0.0).sqrt())
}

/// One row of the verification table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub module: &'static str,
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub lambda: f64,
    pub lambda_star: f64,
    pub lambda_substar: f64,
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn table(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        let mut out = String::new();
        for c in &self.checks {
            let _ = writeln!(
                out,
                "{:<18} {:<width$}  {}  {}",
                c.module,
                c.name,
                if c.pass { "PASS" } else { "FAIL" },
                c.detail
            );
        }
        out
    }
}

struct Collector(Vec<CheckOutcome>);

impl Collector {
    fn add(&mut self, module: &'static str, name: &str, pass: bool, detail: String) {
        self.0.push(CheckOutcome { module, name: name.into(), pass, detail });
    }

    /// Records an error as a failed check instead of aborting the suite.
    fn try_add(&mut self, module: &'static str, name: &str, check: impl FnOnce() -> Result<(bool, String)>) {
        match check() {
            Ok((pass, detail)) => self.add(module, name, pass, detail),
            Err(e) => self.add(module, name, false, format!("error: {e}")),
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Number of random fields used by the per-field checks.
pub const RANDOM_FIELDS: usize = 30;

fn random_fields(spec: &ProblemSpec, count: usize, seed: u64) -> Vec<Field> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(7);
    (0..count).map(|_| random_field(&spec.grid, &mut rng)).collect()
}

fn grid_checks(c: &mut Collector, spec: &ProblemSpec, fields: &[Field]) {
    const M: &str = "spectral_grid";
    let grid = &spec.grid;
    c.try_add(M, "constants_annihilated", || {
        let out = grid.fractional_laplacian(&Field::constant(grid, 1.0))?;
        Ok((out.max_abs() <= 1e-12, format!("max |(-Δ)^s 1| = {:.2e}", out.max_abs())))
    });
    c.try_add(M, "fourier_eigenmode", || {
        let k = 3.0 * std::f64::consts::PI / grid.half_length();
        let u = Field::from_fn(grid, |x| (k * x[0]).cos());
        let expected = k.powf(2.0 * grid.order());
        let lu = grid.fractional_laplacian(&u)?;
        let err = lu.zip_map(&u, |a, b| a - expected * b).max_abs() / expected;
        Ok((err <= 1e-10, format!("relative error {err:.2e}")))
    });
    c.try_add(M, "self_adjoint", || {
        let mut worst: f64 = 0.0;
        for pair in fields.windows(2).take(10) {
            let a = grid.dot(&pair[0], &grid.fractional_laplacian(&pair[1])?);
            let b = grid.dot(&grid.fractional_laplacian(&pair[0])?, &pair[1]);
            worst = worst.max((a - b).abs() / (a.abs() + b.abs()).max(1e-300));
        }
        Ok((worst <= 1e-10, format!("max relative asymmetry {worst:.2e}")))
    });
    c.try_add(M, "v_form_positive", || {
        let mut min = f64::INFINITY;
        for u in fields {
            let ip = grid.inner_product_v(&spec.potential, u, u)?;
            min = min.min(ip / grid.dot(u, u));
        }
        Ok((min > 0.0, format!("min ‖u‖_V²/‖u‖₂² = {min:.4e}")))
    });
}

fn problem_checks(c: &mut Collector, spec: &ProblemSpec, cfg: &ScenarioConfig) {
    const M: &str = "problem_model";
    c.try_add(M, "hypotheses_required", || {
        let report = check_hypotheses(spec, cfg.samples.max(100), cfg.t_max)?;
        let failed: Vec<_> =
            report.checks.iter().filter(|h| !h.pass && h.name != crate::problem::AR_CHECK).map(|h| h.name.clone()).collect();
        let detail = if failed.is_empty() {
            format!("all pass; ar_satisfied = {}", report.ar_satisfied())
        } else {
            format!("failed: {}", failed.join(", "))
        };
        Ok((report.all_required_pass(), detail))
    });
}

fn functional_checks(c: &mut Collector, spec: &ProblemSpec, fields: &[Field]) {
    const M: &str = "energy_functional";
    c.try_add(M, "first_variation_fd", || {
        let mut worst: f64 = 0.0;
        for pair in fields.windows(2).take(20) {
            let u = lift_from_zero(&pair[0], 0.05);
            let phi = pair[1].scaled(u.max_abs() / pair[1].max_abs());
            let (an, fd) = first_variation_check(spec, &u, &phi, 1e-5)?;
            worst = worst.max(rel(an, fd));
        }
        Ok((worst <= 1e-5, format!("max relative error {worst:.2e}")))
    });
    c.try_add(M, "second_variation_fd", || {
        let mut worst: f64 = 0.0;
        for u in fields.iter().take(20) {
            let (an, fd) = second_variation_check(spec, u, 1e-4)?;
            worst = worst.max(rel(an, fd));
        }
        Ok((worst <= 1e-4, format!("max relative error {worst:.2e}")))
    });
    c.try_add(M, "residual_pairs_with_u", || {
        let mut worst: f64 = 0.0;
        for u in fields.iter().take(20) {
            let v = evaluate(spec, u)?;
            let r = residual_field(spec, u)?;
            let scale = v.norm_v_sq + spec.lambda * v.norm_qa_q + v.nl_pairing.abs();
            worst = worst.max((spec.grid.dot(&r, u) - v.pairing(spec.lambda)).abs() / scale);
        }
        Ok((worst <= 1e-10, format!("max defect {worst:.2e}")))
    });
}

fn fiber_checks(c: &mut Collector, spec: &ProblemSpec, fields: &[Field]) {
    const M: &str = "fiber_analysis";
    let lambda = spec.lambda;
    c.try_add(M, "identity_qn_minus_qe", || {
        let mut worst: f64 = 0.0;
        for u in fields {
            let ray = Ray::new(spec, u)?;
            let (tn, _) = ray.lambda_n()?;
            for k in [0.1, 0.5, 1.0, 2.0, 5.0] {
                let (lhs, rhs) = fiber_identity(&ray, spec.q, k * tn);
                worst = worst.max(rel(lhs, rhs));
            }
        }
        Ok((worst <= 1e-6, format!("max relative error {worst:.2e}")))
    });
    c.try_add(M, "ordering_chain", || {
        let mut bad = 0;
        let mut both = 0;
        for u in fields {
            let r = fiber_report(spec, u, lambda)?;
            if let (Some((np, nm)), Some((ep, em))) = (r.roots_n.pair(), r.roots_e.pair()) {
                both += 1;
                if !(r.t_e < nm && nm < em && ep < nm && np < ep) {
                    bad += 1;
                }
            }
        }
        Ok((bad == 0, format!("{} fields, {both} with both root pairs, {bad} violations", fields.len())))
    });
    c.try_add(M, "homogeneity", || {
        let mut worst: f64 = 0.0;
        for u in fields {
            let ray = Ray::new(spec, u)?;
            let (ln, le) = (ray.lambda_n()?.1, ray.lambda_e()?.1);
            for alpha in [0.1, 3.0, 10.0] {
                let v = u.scaled(alpha);
                let scaled = Ray::new(spec, &v)?;
                worst = worst.max(rel(scaled.lambda_n()?.1, ln)).max(rel(scaled.lambda_e()?.1, le));
            }
        }
        Ok((worst <= 1e-9, format!("max relative change {worst:.2e}")))
    });
    c.try_add(M, "sign_dictionary", || {
        let mut bad = 0;
        for u in fields.iter().take(10) {
            let ray = Ray::new(spec, u)?;
            let (tn, _) = ray.lambda_n()?;
            for k in [0.05, 0.3, 1.0, 3.0, 20.0] {
                let t = k * tn;
                let dn = ray.q_n(t) - lambda;
                let de = ray.q_e(t) - lambda;
                if dn.signum() != ray.pairing(t, lambda).signum() || de.signum() != ray.energy(t, lambda).signum() {
                    bad += 1;
                }
            }
        }
        Ok((bad == 0, format!("{bad} sign mismatches")))
    });
    c.try_add(M, "derivative_bridge", || {
        let mut bad = 0;
        let mut checked = 0;
        for u in fields {
            let ray = Ray::new(spec, u)?;
            if let FiberRoots::TwoRoots { plus, minus } = ray.nehari_roots(lambda)? {
                for t in [plus, minus] {
                    let h = 1e-6 * t;
                    let dq = (ray.q_n(t + h) - ray.q_n(t - h)) / (2.0 * h);
                    checked += 1;
                    if dq.signum() != ray.second(t, lambda).signum() {
                        bad += 1;
                    }
                }
            }
        }
        Ok((bad == 0, format!("{checked} roots, {bad} sign mismatches")))
    });
    c.try_add(M, "nehari_norm_floor", || {
        let mut min = f64::INFINITY;
        for u in fields {
            let ray = Ray::new(spec, u)?;
            min = min.min(ray.t_n()? * ray.norm_v_sq().sqrt());
        }
        Ok((min >= 1e-3, format!("min ‖t_n u‖_V = {min:.4e}")))
    });
}

fn extremal_checks(c: &mut Collector, spec: &ProblemSpec, est: &mut ExtremalEstimate, cfg: &ScenarioConfig, fields: &[Field]) {
    const M: &str = "extremal_search";
    c.add(
        M,
        "gap",
        0.0 < est.lambda_substar && est.lambda_substar < est.lambda_star,
        format!("λ_* ≈ {:.9} < λ* ≈ {:.9}", est.lambda_substar, est.lambda_star),
    );
    c.add(M, "starts_converged", est.converged, format!("{} starts, {} failed", est.starts, est.failed_starts));
    let best_is_min = est.per_start.iter().all(|s| {
        s.lambda_n.is_none_or(|v| v >= est.lambda_star) && s.lambda_e.is_none_or(|v| v >= est.lambda_substar)
    });
    c.add(M, "best_so_far", best_is_min, "estimate is the minimum over starts".into());
    c.try_add(M, "sphere_restriction", || {
        let mut worst: f64 = 0.0;
        for alpha in [0.1, 3.0, 10.0] {
            let v = extremal_value(spec, &est.argmin_n.scaled(alpha), Target::LambdaN)?;
            worst = worst.max(rel(v, est.lambda_star));
        }
        Ok((worst <= 1e-9, format!("max relative change {worst:.2e}")))
    });
    c.try_add(M, "certify_gap", || {
        let cert = certify_gap(spec, est, cfg.probes.max(2), cfg.seed)?;
        let v: usize = cert.passes.iter().map(|p| p.violations_n + p.violations_e).sum();
        Ok((cert.passed && !cert.lowered, format!("{} probes per pass, {v} violations", cfg.probes)))
    });
    c.try_add(M, "below_substar_two_roots", || {
        let spec = spec.with_lambda(0.5 * est.lambda_substar)?;
        let mut bad = 0;
        for u in fields {
            let r = fiber_report(&spec, u, spec.lambda)?;
            if r.roots_n.pair().is_none() || r.roots_e.pair().is_none() {
                bad += 1;
            }
        }
        Ok((bad == 0, format!("{bad} fields without both root pairs at λ = λ_*/2")))
    });
    c.try_add(M, "between_loses_zero_energy_roots", || {
        let lambda = 0.5 * (est.lambda_substar + est.lambda_star);
        let r = fiber_report(spec, &est.argmin_e, lambda)?;
        Ok((r.roots_e == FiberRoots::NoRoot, format!("argmin_e at λ = {lambda:.6}: {}", r.roots_e.status())))
    });
}

fn solver_checks(
    c: &mut Collector,
    spec: &ProblemSpec,
    est: &ExtremalEstimate,
    cfg: &ScenarioConfig,
) -> Option<(SolveResult, SolveResult)> {
    const M: &str = "nehari_solver";
    let mut opts = SolveOptions::new(est.lambda_star);
    opts.max_iter = cfg.max_iter;
    opts.tol = cfg.tol;
    c.add(
        M,
        "refuses_above_extremal",
        check_validity(1.01 * est.lambda_star, est.lambda_star).is_err(),
        "λ = 1.01 λ*_est".into(),
    );
    let ground = match solve_ground(spec, cfg.solve_starts, cfg.seed, &opts) {
        Ok(g) => g,
        Err(e) => {
            c.add(M, "ground_solve", false, format!("error: {e}"));
            return None;
        }
    };
    let mut bound = match solve_bound(spec, cfg.solve_starts, cfg.seed, &opts) {
        Ok(b) => b,
        Err(e) => {
            c.add(M, "bound_solve", false, format!("error: {e}"));
            return None;
        }
    };
    let scale = 1.0 + ground.norm_v;
    c.add(
        M,
        "ground_converged",
        ground.converged,
        format!("residual {:.2e} after {} iterations", ground.residual, ground.iterations),
    );
    c.add(
        M,
        "ground_signs",
        ground.j < 0.0 && ground.j2_diag > 0.0,
        format!("J = {:.6e}, J'' = {:.6e}", ground.j, ground.j2_diag),
    );
    c.try_add(M, "ground_stationary", || {
        let d = directional_stationarity(spec, &ground.u, 5, cfg.seed)?;
        Ok((d <= 1e-4 * scale, format!("max |dJ[φ]| = {d:.2e}")))
    });
    c.add(
        M,
        "bound_converged",
        bound.converged,
        format!("residual {:.2e} after {} iterations", bound.residual, bound.iterations),
    );
    c.add(M, "bound_curvature", bound.j2_diag < 0.0, format!("J'' = {:.6e}", bound.j2_diag));
    c.try_add(M, "bound_stationary", || {
        let d = directional_stationarity(spec, &bound.u, 5, cfg.seed + 1)?;
        Ok((d <= 1e-4 * (1.0 + bound.norm_v), format!("max |dJ[φ]| = {d:.2e}")))
    });
    let defect = ground.max_nehari_defect.max(bound.max_nehari_defect);
    c.add(M, "nehari_residence", defect <= 1e-8, format!("max |J'(u)u|/‖u‖_V² = {defect:.2e}"));
    let curvature = ground.min_curvature_ratio.min(bound.min_curvature_ratio);
    c.add(M, "n0_avoidance", curvature > 1e-10, format!("min |J''(u)(u,u)|/‖u‖_V² = {curvature:.2e}"));
    c.add(M, "energy_ordering", ground.j < bound.j, format!("c+ = {:.6e} < c- = {:.6e}", ground.j, bound.j));
    c.try_add(M, "distinct_solutions", || {
        let d = v_distance(spec, &ground.u, &bound.u)?;
        Ok((d > 1e-3, format!("‖u - v‖_V = {d:.4e}")))
    });
    let check = label_result(spec, &mut bound, est);
    c.add(
        M,
        "trichotomy_consistent",
        check.consistent,
        format!("{:?}, J = {:.6e}", check.label, bound.j),
    );
    Some((ground, bound))
}

/// Runs the whole suite on a scenario at its configured `λ`.
pub fn verify_scenario(cfg: &ScenarioConfig) -> Result<VerifyReport> {
    let base = cfg.spec()?;
    let mut est = estimate_extremals_with(
        &base,
        &ExtremalOptions { starts: cfg.starts, seed: cfg.seed, budget: cfg.budget, basis_size: cfg.basis },
    )?;
    let lambda = cfg.resolve_lambda(est.lambda_star);
    let spec = base.with_lambda(lambda)?;
    let fields = random_fields(&spec, RANDOM_FIELDS, cfg.seed);
    let mut c = Collector(Vec::new());
    grid_checks(&mut c, &spec, &fields);
    problem_checks(&mut c, &spec, cfg);
    functional_checks(&mut c, &spec, &fields);
    fiber_checks(&mut c, &spec, &fields);
    extremal_checks(&mut c, &spec, &mut est, cfg, &fields);
    if check_validity(lambda, est.lambda_star).is_ok() {
        solver_checks(&mut c, &spec, &est, cfg);
    } else {
        c.add("nehari_solver", "lambda_in_range", false, format!("λ = {lambda} is not below λ*_est = {}", est.lambda_star));
    }
    Ok(VerifyReport { lambda, lambda_star: est.lambda_star, lambda_substar: est.lambda_substar, checks: c.0 })
}
