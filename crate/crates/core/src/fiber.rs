//! Fiber maps of the nonlinear Rayleigh quotients.
//!
//! For a fixed direction `u` the two quotients
//!
//! ```text
//! R_n(u) = (‖u‖_V² - ∫ b f(u) u) / ‖u‖_{q,a}^q
//! R_e(u) = q (‖u‖_V²/2 - ∫ b F(u)) / ‖u‖_{q,a}^q
//! ```
//!
//! are restricted to the ray `t ↦ t u`, giving `q_n(t)` and `q_e(t)`. Each has
//! a unique maximizer (`t_n`, `t_e`), found by bisection on a monotone
//! first-order condition, and `q_n(t) = λ` (resp. `q_e(t) = λ`) has two roots
//! below the maximum value. These roots project `u` onto the Nehari set
//! (resp. the zero-energy set).

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functional::{norm_qa_q_raw, norm_v_sq_raw};
use crate::grid::Field;
use crate::problem::ProblemSpec;

/// Relative bracket width at which bisection stops.
pub const ROOT_RTOL: f64 = 1e-12;
/// Band around the fiber maximum treated as tangency.
pub const TANGENCY_RTOL: f64 = 1e-9;
const MAX_EXPANSIONS: usize = 60;
const MAX_CONTRACTIONS: usize = 200;

/// Root structure of `q(t) = λ` on `t > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FiberRoots {
    /// `0 < plus < t_max < minus`.
    TwoRoots { plus: f64, minus: f64 },
    /// `λ` equals the maximum up to the tangency band.
    Tangent { at: f64 },
    /// `λ` exceeds the maximum.
    NoRoot,
}

impl FiberRoots {
    pub fn status(&self) -> &'static str {
        match self {
            FiberRoots::TwoRoots { .. } => "two_roots",
            FiberRoots::Tangent { .. } => "tangent",
            FiberRoots::NoRoot => "no_root",
        }
    }

    pub fn pair(&self) -> Option<(f64, f64)> {
        match *self {
            FiberRoots::TwoRoots { plus, minus } => Some((plus, minus)),
            _ => None,
        }
    }
}

/// Bisection for an increasing `phi` with `phi(lo) < 0 <= phi(hi)`.
fn bisect_increasing(phi: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    while hi - lo > ROOT_RTOL * hi {
        let mid = if hi > 4.0 * lo { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Finds `[lo, hi]` with `phi(lo) < 0 <= phi(hi)` by doubling/halving from `start`.
fn bracket_increasing(phi: &impl Fn(f64) -> f64, start: f64, what: &'static str) -> Result<(f64, f64)> {
    if phi(start) < 0.0 {
        let (mut lo, mut hi) = (start, 2.0 * start);
        for _ in 0..MAX_EXPANSIONS {
            if phi(hi) >= 0.0 {
                return Ok((lo, hi));
            }
            lo = hi;
            hi *= 2.0;
        }
        Err(Error::BracketFailure { what, lo, hi })
    } else {
        let (mut lo, mut hi) = (0.5 * start, start);
        for _ in 0..MAX_EXPANSIONS {
            if phi(lo) < 0.0 {
                return Ok((lo, hi));
            }
            hi = lo;
            lo *= 0.5;
        }
        Err(Error::BracketFailure { what, lo, hi })
    }
}

/// The ray `t ↦ t u` with the `t`-independent norms cached.
#[derive(Clone, Debug)]
pub struct Ray<'a> {
    spec: &'a ProblemSpec,
    u: &'a [f64],
    norm_v_sq: f64,
    norm_qa_q: f64,
    sup: f64,
}

impl<'a> Ray<'a> {
    pub fn new(spec: &'a ProblemSpec, u: &'a Field) -> Result<Self> {
        spec.grid.check(u.len())?;
        let a = norm_v_sq_raw(spec, u.values());
        Self::with_norm(spec, u.values(), a)
    }

    /// Builds the ray with a precomputed `‖u‖_V²`.
    pub(crate) fn with_norm(spec: &'a ProblemSpec, u: &'a [f64], norm_v_sq: f64) -> Result<Self> {
        let norm_qa_q = norm_qa_q_raw(spec, u);
        if !(norm_qa_q > 0.0) {
            return Err(Error::ZeroWeightedNorm);
        }
        let sup = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(Self { spec, u, norm_v_sq, norm_qa_q, sup })
    }

    pub fn norm_v_sq(&self) -> f64 {
        self.norm_v_sq
    }

    pub fn norm_qa_q(&self) -> f64 {
        self.norm_qa_q
    }

    fn weighted_sum(&self, g: impl Fn(f64, f64) -> f64) -> f64 {
        let s: f64 = self.u.iter().zip(self.spec.weight_b.values()).map(|(&ui, &b)| b * g(ui, b)).sum();
        self.spec.grid.cell_volume() * s
    }

    /// `∫ b f(t u) u`
    pub fn nl_pairing(&self, t: f64) -> f64 {
        let nl = &self.spec.nonlinearity;
        self.weighted_sum(|ui, _| nl.f(t * ui) * ui)
    }

    /// `∫ b F(t u)`
    pub fn nl_energy(&self, t: f64) -> f64 {
        let nl = &self.spec.nonlinearity;
        self.weighted_sum(|ui, _| nl.primitive(t * ui))
    }

    /// `∫ b f'(t u) u²`
    pub fn nl_second(&self, t: f64) -> f64 {
        let nl = &self.spec.nonlinearity;
        self.weighted_sum(|ui, _| nl.fprime(t * ui) * ui * ui)
    }

    /// `∫ b H(t u) u²`
    fn h_integral(&self, t: f64) -> f64 {
        let (nl, q) = (&self.spec.nonlinearity, self.spec.q);
        self.weighted_sum(|ui, _| nl.h(q, t * ui) * ui * ui)
    }

    /// `∫ b G(t u) u²`
    fn g_integral(&self, t: f64) -> f64 {
        let (nl, q) = (&self.spec.nonlinearity, self.spec.q);
        self.weighted_sum(|ui, _| nl.g(q, t * ui) * ui * ui)
    }

    /// `q_n(t) = R_n(t u)`
    pub fn q_n(&self, t: f64) -> f64 {
        let q = self.spec.q;
        (t.powf(2.0 - q) * self.norm_v_sq - t.powf(1.0 - q) * self.nl_pairing(t)) / self.norm_qa_q
    }

    /// `q_e(t) = R_e(t u)`
    pub fn q_e(&self, t: f64) -> f64 {
        let q = self.spec.q;
        q / self.norm_qa_q * (0.5 * t.powf(2.0 - q) * self.norm_v_sq - t.powf(-q) * self.nl_energy(t))
    }

    /// `J_λ(t u)`
    pub fn energy(&self, t: f64, lambda: f64) -> f64 {
        let q = self.spec.q;
        0.5 * t * t * self.norm_v_sq - lambda / q * t.powf(q) * self.norm_qa_q - self.nl_energy(t)
    }

    /// `J'_λ(t u)(t u)`
    pub fn pairing(&self, t: f64, lambda: f64) -> f64 {
        t * t * self.norm_v_sq - lambda * t.powf(self.spec.q) * self.norm_qa_q - t * self.nl_pairing(t)
    }

    /// `J''_λ(t u)(t u, t u)`
    pub fn second(&self, t: f64, lambda: f64) -> f64 {
        let q = self.spec.q;
        t * t * self.norm_v_sq - lambda * (q - 1.0) * t.powf(q) * self.norm_qa_q - t * t * self.nl_second(t)
    }

    fn start(&self) -> f64 {
        1.0 / self.sup
    }

    /// Unique maximizer of `q_n`: `(2 - q) ‖u‖_V² = ∫ b H(t u) u²`.
    pub fn t_n(&self) -> Result<f64> {
        let target = (2.0 - self.spec.q) * self.norm_v_sq;
        let phi = |t: f64| self.h_integral(t) - target;
        let (lo, hi) = bracket_increasing(&phi, self.start(), "t_n")?;
        Ok(bisect_increasing(phi, lo, hi))
    }

    /// Unique maximizer of `q_e`: `(2 - q)/2 ‖u‖_V² = ∫ b G(t u) u²`.
    pub fn t_e(&self) -> Result<f64> {
        let target = 0.5 * (2.0 - self.spec.q) * self.norm_v_sq;
        let phi = |t: f64| self.g_integral(t) - target;
        let (lo, hi) = bracket_increasing(&phi, self.start(), "t_e")?;
        Ok(bisect_increasing(phi, lo, hi))
    }

    /// `Λ_n(u) = q_n(t_n)`
    pub fn lambda_n(&self) -> Result<(f64, f64)> {
        let t = self.t_n()?;
        Ok((t, self.q_n(t)))
    }

    /// `Λ_e(u) = q_e(t_e)`
    pub fn lambda_e(&self) -> Result<(f64, f64)> {
        let t = self.t_e()?;
        Ok((t, self.q_e(t)))
    }

    /// Roots of `q_n(t) = λ`: `t^{n,+}` lands on N⁺, `t^{n,-}` on N⁻.
    pub fn nehari_roots(&self, lambda: f64) -> Result<FiberRoots> {
        let (t_max, peak) = self.lambda_n()?;
        two_roots(|t| self.q_n(t), t_max, peak, lambda, "t^{n,-}")
    }

    /// Roots of `q_e(t) = λ`, the zero-energy projections.
    pub fn zero_energy_roots(&self, lambda: f64) -> Result<FiberRoots> {
        let (t_max, peak) = self.lambda_e()?;
        two_roots(|t| self.q_e(t), t_max, peak, lambda, "t^{e,-}")
    }
}

/// Two-root solve for a unimodal map with maximum `peak` at `t_max`.
fn two_roots(
    map: impl Fn(f64) -> f64,
    t_max: f64,
    peak: f64,
    lambda: f64,
    what: &'static str,
) -> Result<FiberRoots> {
    if (peak - lambda).abs() <= TANGENCY_RTOL * lambda.max(1.0) {
        return Ok(FiberRoots::Tangent { at: t_max });
    }
    if peak < lambda {
        return Ok(FiberRoots::NoRoot);
    }
    let mut lo = 0.5 * t_max;
    let mut found = false;
    for _ in 0..MAX_CONTRACTIONS {
        if map(lo) < lambda {
            found = true;
            break;
        }
        lo *= 0.5;
    }
    if !found {
        return Err(Error::BracketFailure { what: "t^{n,+}", lo, hi: t_max });
    }
    let plus = bisect_increasing(|t| map(t) - lambda, lo, t_max);

    let mut hi = 2.0 * t_max;
    let mut found = false;
    for _ in 0..MAX_EXPANSIONS {
        if map(hi) < lambda {
            found = true;
            break;
        }
        hi *= 2.0;
    }
    if !found {
        return Err(Error::BracketFailure { what, lo: t_max, hi });
    }
    // decreasing side: bisect the negated map so the condition is increasing
    let minus = {
        let (mut a, mut b) = (t_max, hi);
        while b - a > ROOT_RTOL * b {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if map(mid) >= lambda {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    };
    Ok(FiberRoots::TwoRoots { plus, minus })
}

pub fn rayleigh_n(spec: &ProblemSpec, u: &Field) -> Result<f64> {
    Ok(Ray::new(spec, u)?.q_n(1.0))
}

pub fn rayleigh_e(spec: &ProblemSpec, u: &Field) -> Result<f64> {
    Ok(Ray::new(spec, u)?.q_e(1.0))
}

pub fn find_t_n(spec: &ProblemSpec, u: &Field) -> Result<f64> {
    Ray::new(spec, u)?.t_n()
}

pub fn find_t_e(spec: &ProblemSpec, u: &Field) -> Result<f64> {
    Ray::new(spec, u)?.t_e()
}

/// `Λ_n(u)`; zero-homogeneous in `u`.
pub fn lambda_n(spec: &ProblemSpec, u: &Field) -> Result<f64> {
    Ok(Ray::new(spec, u)?.lambda_n()?.1)
}

/// `Λ_e(u)`; zero-homogeneous in `u`.
pub fn lambda_e(spec: &ProblemSpec, u: &Field) -> Result<f64> {
    Ok(Ray::new(spec, u)?.lambda_e()?.1)
}

pub fn nehari_roots(spec: &ProblemSpec, u: &Field, lambda: f64) -> Result<FiberRoots> {
    Ray::new(spec, u)?.nehari_roots(lambda)
}

pub fn zero_energy_roots(spec: &ProblemSpec, u: &Field, lambda: f64) -> Result<FiberRoots> {
    Ray::new(spec, u)?.zero_energy_roots(lambda)
}

/// All fiber quantities of `u` at the query parameter `lambda`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FiberReport {
    pub lambda: f64,
    pub t_n: f64,
    pub lambda_n: f64,
    pub t_e: f64,
    pub lambda_e: f64,
    pub roots_n: FiberRoots,
    pub roots_e: FiberRoots,
}

impl FiberReport {
    fn check(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvariantViolation(msg));
        if !(self.t_n < self.t_e) {
            return fail(format!("t_n = {} is not below t_e = {}", self.t_n, self.t_e));
        }
        if !(self.lambda_e < self.lambda_n) {
            return fail(format!("Λ_e = {} is not below Λ_n = {}", self.lambda_e, self.lambda_n));
        }
        if let Some((plus, minus)) = self.roots_n.pair() {
            if !(0.0 < plus && plus < self.t_n && self.t_n < minus) {
                return fail(format!("Nehari roots out of order: {plus} < {} < {minus}", self.t_n));
            }
        }
        if let Some((plus, minus)) = self.roots_e.pair() {
            if !(0.0 < plus && plus < self.t_e && self.t_e < minus) {
                return fail(format!("zero-energy roots out of order: {plus} < {} < {minus}", self.t_e));
            }
        }
        Ok(())
    }
}

pub fn fiber_report(spec: &ProblemSpec, u: &Field, lambda: f64) -> Result<FiberReport> {
    let ray = Ray::new(spec, u)?;
    let (t_n, lambda_n) = ray.lambda_n()?;
    let (t_e, lambda_e) = ray.lambda_e()?;
    let report = FiberReport {
        lambda,
        t_n,
        lambda_n,
        t_e,
        lambda_e,
        roots_n: two_roots(|t| ray.q_n(t), t_n, lambda_n, lambda, "t^{n,-}")?,
        roots_e: two_roots(|t| ray.q_e(t), t_e, lambda_e, lambda, "t^{e,-}")?,
    };
    report.check()?;
    Ok(report)
}

/// One row of a sampled fiber.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FiberSample {
    pub t: f64,
    pub q_n: f64,
    pub q_e: f64,
    #[serde(rename = "J")]
    pub j: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiberTable {
    pub rows: Vec<FiberSample>,
}

impl FiberTable {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,q_n,q_e,J")?;
        for r in &self.rows {
            writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", r.t, r.q_n, r.q_e, r.j)?;
        }
        Ok(())
    }
}

/// `(t, q_n, q_e, J_λ(t u))` on a log-spaced grid of `count` values of `t`.
pub fn sample_fiber(spec: &ProblemSpec, u: &Field, t_min: f64, t_max: f64, count: usize) -> Result<FiberTable> {
    if !(t_min > 0.0 && t_min < t_max && t_max.is_finite()) || count < 2 {
        return Err(Error::InvalidParameter(format!(
            "sample_fiber needs 0 < t_min < t_max and count >= 2, got ({t_min}, {t_max}, {count})"
        )));
    }
    let ray = Ray::new(spec, u)?;
    let (a, b) = (t_min.ln(), t_max.ln());
    let rows = (0..count)
        .map(|i| {
            let t = if i + 1 == count { t_max } else { (a + (b - a) * i as f64 / (count - 1) as f64).exp() };
            FiberSample { t, q_n: ray.q_n(t), q_e: ray.q_e(t), j: ray.energy(t, spec.lambda) }
        })
        .collect();
    Ok(FiberTable { rows })
}
