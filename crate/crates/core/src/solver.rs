//! Minimization of `J_λ` over the two Nehari branches.
//!
//! The constraint is removed by the fiber projection: a direction `w` on the
//! unit sphere of `‖·‖_V` is mapped to `t^{n,+}(w) w ∈ N⁺` or
//! `t^{n,-}(w) w ∈ N⁻`, and the reduced energy `w ↦ J_λ(t(w) w)` is descended
//! along the tangential part of the Sobolev-preconditioned residual. Because
//! `J'_λ(u) u = 0` on the Nehari set, the derivative of the reduced energy in
//! a direction `φ` is `t J'_λ(t w) φ`, so the preconditioned residual is a
//! descent direction for it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extremal::ExtremalEstimate;
use crate::fiber::{FiberRoots, Ray};
use crate::functional::{evaluate, norm_v_sq_raw, precondition, residual_field};
use crate::grid::Field;
use crate::problem::ProblemSpec;
use crate::sampling::{gaussian_bump, random_bump};

/// Relative gap below the extremal estimate inside which solves are refused.
pub const TANGENCY_GUARD: f64 = 1e-6;
const MAX_STEP: f64 = 8.0;
const MIN_STEP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Branch {
    #[serde(rename = "N_plus")]
    NPlus,
    #[serde(rename = "N_minus")]
    NMinus,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::NPlus => "N_plus",
            Branch::NMinus => "N_minus",
        }
    }
}

/// Sign regime of the `N⁻` energy relative to `λ_*`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trichotomy {
    BelowSubstar,
    AtSubstar,
    Between,
    NotApplicable,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolveOptions {
    pub max_iter: usize,
    /// Stop when the tangential gradient is below `tol (1 + |J|)`.
    pub tol: f64,
    /// Upper estimate of `λ*`; solves at or above it are refused.
    pub lambda_star_est: f64,
}

impl SolveOptions {
    pub fn new(lambda_star_est: f64) -> Self {
        Self { max_iter: 4000, tol: 1e-10, lambda_star_est }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveResult {
    #[serde(skip)]
    pub u: Field,
    pub branch: Branch,
    pub lambda: f64,
    pub j: f64,
    pub j2_diag: f64,
    /// `J'_λ(u) u`
    pub pairing: f64,
    /// L² norm of the strong-form residual.
    pub residual: f64,
    pub norm_v: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trichotomy: Trichotomy,
    /// Set when the sign of `J` disagrees with the trichotomy label.
    pub trichotomy_mismatch: bool,
    /// Largest `|J'_λ(u) u| / ‖u‖_V²` over accepted iterates.
    pub max_nehari_defect: f64,
    /// Smallest `|J''_λ(u)(u,u)| / ‖u‖_V²` over accepted iterates.
    pub min_curvature_ratio: f64,
    pub stop_reason: String,
    pub start: String,
}

/// Refuses `λ` at or above the extremal estimate (minus the tangency guard).
pub fn check_validity(lambda: f64, lambda_star_est: f64) -> Result<()> {
    if !(lambda < lambda_star_est * (1.0 - TANGENCY_GUARD)) {
        return Err(Error::AboveExtremal { lambda, lambda_star: lambda_star_est });
    }
    Ok(())
}

fn v_normalize(spec: &ProblemSpec, w: &[f64]) -> Option<Vec<f64>> {
    let a = norm_v_sq_raw(spec, w);
    if !(a > 0.0 && a.is_finite()) {
        return None;
    }
    let s = 1.0 / a.sqrt();
    Some(w.iter().map(|x| x * s).collect())
}

/// Point of the ray through a unit direction on the requested branch.
#[derive(Clone, Copy, Debug)]
struct Projected {
    t: f64,
    j: f64,
    pairing: f64,
    second: f64,
}

enum Projection {
    On(Projected),
    Lost { max_value: f64 },
}

fn project(spec: &ProblemSpec, w: &[f64], branch: Branch) -> Result<Projection> {
    let ray = Ray::with_norm(spec, w, 1.0)?;
    let lambda = spec.lambda;
    match ray.nehari_roots(lambda)? {
        FiberRoots::TwoRoots { plus, minus } => {
            let t = if branch == Branch::NPlus { plus } else { minus };
            Ok(Projection::On(Projected {
                t,
                j: ray.energy(t, lambda),
                pairing: ray.pairing(t, lambda),
                second: ray.second(t, lambda),
            }))
        }
        _ => Ok(Projection::Lost { max_value: ray.lambda_n()?.1 }),
    }
}

/// Descends `J_λ` over one Nehari branch from `start`.
pub fn solve_branch(spec: &ProblemSpec, branch: Branch, start: &Field, opts: &SolveOptions) -> Result<SolveResult> {
    check_validity(spec.lambda, opts.lambda_star_est)?;
    spec.grid.check(start.len())?;
    let grid = &spec.grid;
    let cell = grid.cell_volume();
    let mut w = v_normalize(spec, start.values())
        .ok_or_else(|| Error::InvalidParameter("start field has zero V-norm".into()))?;
    let mut p = match project(spec, &w, branch)? {
        Projection::On(p) => p,
        Projection::Lost { max_value } => {
            return Err(Error::RootLoss { lambda: spec.lambda, max_value, iteration: 0, iterate: w });
        }
    };
    let mut max_defect = (p.pairing / (p.t * p.t)).abs();
    let mut min_curv = (p.second / (p.t * p.t)).abs();
    let mut step = 1.0;
    let mut iterations = 0;
    let mut stop_reason = "max_iter".to_string();

    while iterations < opts.max_iter {
        let u = Field::from_vec(w.iter().map(|x| p.t * x).collect());
        let r = residual_field(spec, &u)?;
        let d = precondition(spec, &r)?.direction;
        let lw = grid.fractional_laplacian_raw(&w);
        let mw: Vec<f64> = lw.iter().zip(&w).zip(spec.potential.values()).map(|((l, x), v)| l + v * x).collect();
        let dw: f64 = cell * d.values().iter().zip(&mw).map(|(a, b)| a * b).sum::<f64>();
        let tangent: Vec<f64> = d.values().iter().zip(&w).map(|(a, b)| a - dw * b).collect();
        let gnorm = norm_v_sq_raw(spec, &tangent).max(0.0).sqrt();
        if gnorm <= opts.tol * (1.0 + p.j.abs()) {
            stop_reason = "gradient".into();
            break;
        }
        iterations += 1;

        let mut accepted = None;
        let mut beta = step;
        while beta >= MIN_STEP {
            let scale = beta / p.t;
            let trial: Vec<f64> = w.iter().zip(&tangent).map(|(a, b)| a - scale * b).collect();
            if let Some(trial) = v_normalize(spec, &trial) {
                if let Ok(Projection::On(q)) = project(spec, &trial, branch) {
                    if q.j < p.j {
                        accepted = Some((trial, q));
                        break;
                    }
                }
            }
            beta *= 0.5;
        }
        match accepted {
            Some((trial, q)) => {
                w = trial;
                p = q;
                max_defect = max_defect.max((p.pairing / (p.t * p.t)).abs());
                min_curv = min_curv.min((p.second / (p.t * p.t)).abs());
                step = (2.0 * beta).min(MAX_STEP);
            }
            None => {
                stop_reason = "stagnation".into();
                break;
            }
        }
    }

    let u = Field::from_vec(w.iter().map(|x| p.t * x).collect());
    let value = evaluate(spec, &u)?;
    let residual = grid.norm_l2(&residual_field(spec, &u)?);
    let norm_v = value.norm_v_sq.sqrt();
    let j2 = value.second(spec.lambda, spec.q);
    match branch {
        Branch::NPlus if !(value.j < 0.0 && j2 > 0.0) => {
            return Err(Error::InvariantViolation(format!("N_plus solution has J = {}, J'' = {j2}", value.j)));
        }
        Branch::NMinus if !(j2 < 0.0) => {
            return Err(Error::InvariantViolation(format!("N_minus solution has J'' = {j2}")));
        }
        _ => {}
    }
    Ok(SolveResult {
        u,
        branch,
        lambda: spec.lambda,
        j: value.j,
        j2_diag: j2,
        pairing: value.pairing(spec.lambda),
        residual,
        norm_v,
        iterations,
        converged: residual <= 1e-6 * (1.0 + norm_v),
        trichotomy: Trichotomy::NotApplicable,
        trichotomy_mismatch: false,
        max_nehari_defect: max_defect,
        min_curvature_ratio: min_curv,
        stop_reason,
        start: String::new(),
    })
}

/// Conventional starts: positive bumps for `N⁺`; a sign-changing
/// two-lobe field followed by positive bumps for `N⁻`.
pub fn default_starts(spec: &ProblemSpec, branch: Branch, starts: usize, seed: u64) -> Vec<(String, Field)> {
    let grid = &spec.grid;
    let l = grid.half_length();
    let mut out = Vec::with_capacity(starts);
    let centered = gaussian_bump(grid, [0.0, 0.0], l / 4.0);
    if branch == Branch::NMinus {
        let lobe = l / 6.0;
        let left = gaussian_bump(grid, [-l / 4.0, 0.0], lobe);
        let right = gaussian_bump(grid, [l / 4.0, 0.0], lobe);
        out.push(("two_lobe".to_string(), left.plus_scaled(-1.0, &right)));
    }
    out.push(("centered_bump".to_string(), centered));
    let mut index = 0u64;
    while out.len() < starts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index + if branch == Branch::NPlus { 0 } else { 1 << 32 });
        out.push(("random_bump".to_string(), random_bump(grid, &mut rng)));
        index += 1;
    }
    out.truncate(starts.max(1));
    out
}

/// Runs `solve_branch` from each start and keeps the lowest-energy converged result.
pub fn solve_multistart(
    spec: &ProblemSpec,
    branch: Branch,
    starts: &[(String, Field)],
    opts: &SolveOptions,
) -> Result<SolveResult> {
    check_validity(spec.lambda, opts.lambda_star_est)?;
    let runs: Vec<Result<SolveResult>> = starts
        .par_iter()
        .map(|(name, u)| {
            solve_branch(spec, branch, u, opts).map(|mut r| {
                r.start = name.clone();
                r
            })
        })
        .collect();
    let mut best: Option<SolveResult> = None;
    let mut diagnostics = Vec::new();
    for (run, (name, _)) in runs.into_iter().zip(starts) {
        match run {
            Ok(r) => {
                let better = match &best {
                    None => true,
                    Some(b) => (r.converged && !b.converged) || (r.converged == b.converged && r.j < b.j),
                };
                if better {
                    best = Some(r);
                }
            }
            Err(e) => diagnostics.push(format!("{name}: {e}")),
        }
    }
    best.ok_or(Error::AllStartsFailed { starts: starts.len(), diagnostics })
}

/// Ground state: lowest-energy point of `N⁺` over the default starts.
pub fn solve_ground(spec: &ProblemSpec, starts: usize, seed: u64, opts: &SolveOptions) -> Result<SolveResult> {
    solve_multistart(spec, Branch::NPlus, &default_starts(spec, Branch::NPlus, starts, seed), opts)
}

/// Bound state: lowest-energy point of `N⁻` over the default starts.
pub fn solve_bound(spec: &ProblemSpec, starts: usize, seed: u64, opts: &SolveOptions) -> Result<SolveResult> {
    solve_multistart(spec, Branch::NMinus, &default_starts(spec, Branch::NMinus, starts, seed), opts)
}

/// Both solutions, with the ordering `c_{N⁺} < c_{N⁻}` asserted.
pub fn solve_both(spec: &ProblemSpec, starts: usize, seed: u64, opts: &SolveOptions) -> Result<(SolveResult, SolveResult)> {
    let ground = solve_ground(spec, starts, seed, opts)?;
    let bound = solve_bound(spec, starts, seed, opts)?;
    if !(ground.j < bound.j) {
        return Err(Error::InvariantViolation(format!(
            "ground energy {} is not below the N_minus energy {}",
            ground.j, bound.j
        )));
    }
    Ok((ground, bound))
}

/// Label and sign cross-check for an `N⁻` result.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrichotomyCheck {
    pub label: Trichotomy,
    /// `|J| / ‖u‖_V²`
    pub relative_energy: f64,
    pub consistent: bool,
}

/// Relative width of the band around `λ_*` labelled `at_substar`.
pub const SUBSTAR_BAND: f64 = 1e-3;

pub fn classify_trichotomy(spec: &ProblemSpec, result: &SolveResult, extremals: &ExtremalEstimate) -> TrichotomyCheck {
    let scale = result.norm_v * result.norm_v;
    let relative_energy = result.j.abs() / scale.max(f64::MIN_POSITIVE);
    if result.branch != Branch::NMinus {
        return TrichotomyCheck { label: Trichotomy::NotApplicable, relative_energy, consistent: true };
    }
    let band = SUBSTAR_BAND * extremals.lambda_substar;
    let lambda = spec.lambda;
    let label = if lambda < extremals.lambda_substar - band {
        Trichotomy::BelowSubstar
    } else if lambda <= extremals.lambda_substar + band {
        Trichotomy::AtSubstar
    } else {
        Trichotomy::Between
    };
    let consistent = match label {
        Trichotomy::BelowSubstar => result.j > 0.0,
        Trichotomy::AtSubstar => relative_energy <= SUBSTAR_BAND,
        Trichotomy::Between => result.j < 0.0,
        Trichotomy::NotApplicable => true,
    };
    TrichotomyCheck { label, relative_energy, consistent }
}

/// Stores the trichotomy label on the result.
pub fn label_result(spec: &ProblemSpec, result: &mut SolveResult, extremals: &ExtremalEstimate) -> TrichotomyCheck {
    let check = classify_trichotomy(spec, result, extremals);
    result.trichotomy = check.label;
    result.trichotomy_mismatch = !check.consistent;
    check
}
