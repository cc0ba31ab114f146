//! The energy `J_λ`, its first and second variations along the ray, the
//! strong-form residual, and the Sobolev-preconditioned descent direction.

use serde::Serialize;

use crate::error::Result;
use crate::grid::Field;
use crate::problem::ProblemSpec;

/// `J_λ(u)` together with every norm and integral it is assembled from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FunctionalValue {
    pub j: f64,
    /// `‖u‖_V²`
    pub norm_v_sq: f64,
    /// `‖u‖_{q,a}^q = ∫ a |u|^q`
    pub norm_qa_q: f64,
    /// `∫ b F(u)`
    pub nl_energy: f64,
    /// `∫ b f(u) u`
    pub nl_pairing: f64,
    /// `∫ b f'(u) u²`
    pub nl_second: f64,
}

impl FunctionalValue {
    /// `J'_λ(u) u`
    pub fn pairing(&self, lambda: f64) -> f64 {
        self.norm_v_sq - lambda * self.norm_qa_q - self.nl_pairing
    }

    /// `J''_λ(u)(u, u)`
    pub fn second(&self, lambda: f64, q: f64) -> f64 {
        self.norm_v_sq - lambda * (q - 1.0) * self.norm_qa_q - self.nl_second
    }
}

/// `sign(u) |u|^{q-1}`, zero at the origin.
#[inline]
pub(crate) fn sublinear(u: f64, q: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        u.signum() * u.abs().powf(q - 1.0)
    }
}

/// `‖u‖_V²` from samples.
pub(crate) fn norm_v_sq_raw(spec: &ProblemSpec, u: &[f64]) -> f64 {
    let lu = spec.grid.fractional_laplacian_raw(u);
    let s: f64 = u
        .iter()
        .zip(&lu)
        .zip(spec.potential.values())
        .map(|((ui, li), v)| ui * (li + v * ui))
        .sum();
    spec.grid.cell_volume() * s
}

/// `∫ a |u|^q` from samples.
pub(crate) fn norm_qa_q_raw(spec: &ProblemSpec, u: &[f64]) -> f64 {
    let q = spec.q;
    let s: f64 = u
        .iter()
        .zip(spec.weight_a.values())
        .map(|(ui, a)| if *ui == 0.0 { 0.0 } else { a * ui.abs().powf(q) })
        .sum();
    spec.grid.cell_volume() * s
}

pub fn evaluate(spec: &ProblemSpec, u: &Field) -> Result<FunctionalValue> {
    spec.grid.check(u.len())?;
    let values = u.values();
    let norm_v_sq = norm_v_sq_raw(spec, values);
    let norm_qa_q = norm_qa_q_raw(spec, values);
    let nl = &spec.nonlinearity;
    let (mut e, mut pr, mut sec) = (0.0, 0.0, 0.0);
    for (&ui, &b) in values.iter().zip(spec.weight_b.values()) {
        e += b * nl.primitive(ui);
        pr += b * nl.f(ui) * ui;
        sec += b * nl.fprime(ui) * ui * ui;
    }
    let h = spec.grid.cell_volume();
    let (nl_energy, nl_pairing, nl_second) = (h * e, h * pr, h * sec);
    let j = 0.5 * norm_v_sq - spec.lambda / spec.q * norm_qa_q - nl_energy;
    Ok(FunctionalValue { j, norm_v_sq, norm_qa_q, nl_energy, nl_pairing, nl_second })
}

pub fn energy(spec: &ProblemSpec, u: &Field) -> Result<f64> {
    Ok(evaluate(spec, u)?.j)
}

/// `J'_λ(u) u = ‖u‖_V² - λ ‖u‖_{q,a}^q - ∫ b f(u) u`.
pub fn derivative_pairing(spec: &ProblemSpec, u: &Field) -> Result<f64> {
    Ok(evaluate(spec, u)?.pairing(spec.lambda))
}

/// `J''_λ(u)(u, u) = ‖u‖_V² - λ (q-1) ‖u‖_{q,a}^q - ∫ b f'(u) u²`.
pub fn second_derivative_diag(spec: &ProblemSpec, u: &Field) -> Result<f64> {
    Ok(evaluate(spec, u)?.second(spec.lambda, spec.q))
}

/// Strong-form defect `(-Δ)^s u + V u - λ a |u|^{q-2} u - b f(u)`.
///
/// Its quadrature pairing with `φ` is `J'_λ(u) φ`.
pub fn residual_field(spec: &ProblemSpec, u: &Field) -> Result<Field> {
    spec.grid.check(u.len())?;
    let lu = spec.grid.fractional_laplacian_raw(u.values());
    let (q, lambda) = (spec.q, spec.lambda);
    let nl = &spec.nonlinearity;
    let out = u
        .values()
        .iter()
        .zip(lu)
        .zip(spec.potential.values())
        .zip(spec.weight_a.values().iter().zip(spec.weight_b.values()))
        .map(|(((&ui, li), v), (a, b))| li + v * ui - lambda * a * sublinear(ui, q) - b * nl.f(ui))
        .collect();
    Ok(Field::from_vec(out))
}

/// Descent direction from the preconditioner, with a flag for the raw-residual fallback.
#[derive(Clone, Debug)]
pub struct SobolevGradient {
    pub direction: Field,
    pub fallback: bool,
}

const PRECONDITIONER_ITERS: usize = 50;

/// Applies `((-Δ)^s + V⁺ + B + 1)^{-1}` to `r`.
///
/// The fractional part is diagonal in Fourier space; the potential part is
/// handled by a fixed-point splitting around the midpoint of `V⁺ + B + 1`,
/// which contracts with ratio `(max - min) / (max + min) < 1`.
pub fn precondition(spec: &ProblemSpec, r: &Field) -> Result<SobolevGradient> {
    let grid = &spec.grid;
    grid.check(r.len())?;
    let shift = spec.potential_bound + 1.0;
    let w: Vec<f64> = spec.potential.values().iter().map(|v| v.max(0.0) + shift).collect();
    let (wmin, wmax) = w.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let c = 0.5 * (wmin + wmax);
    let symbol: Vec<f64> = grid.multipliers().iter().map(|m| 1.0 / (m + c)).collect();
    let rv = r.values();

    let mut g = grid.apply_symbol(rv, &symbol)?;
    if wmax > wmin {
        for _ in 0..PRECONDITIONER_ITERS {
            let rhs: Vec<f64> = rv.iter().zip(&w).zip(&g).map(|((ri, wi), gi)| ri - (wi - c) * gi).collect();
            let next = grid.apply_symbol(&rhs, &symbol)?;
            let change = next.iter().zip(&g).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            let scale = next.iter().fold(0.0f64, |m, a| m.max(a.abs()));
            g = next;
            if change <= 1e-14 * scale {
                break;
            }
        }
    }
    let pairing: f64 = g.iter().zip(rv).map(|(a, b)| a * b).sum();
    if pairing < 0.0 || g.iter().any(|v| !v.is_finite()) {
        return Ok(SobolevGradient { direction: r.clone(), fallback: true });
    }
    Ok(SobolevGradient { direction: Field::from_vec(g), fallback: false })
}

/// Preconditioned residual at `u`.
pub fn sobolev_gradient(spec: &ProblemSpec, u: &Field) -> Result<SobolevGradient> {
    precondition(spec, &residual_field(spec, u)?)
}
