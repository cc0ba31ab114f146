//! Random smooth fields used as optimizer starts, audit probes and test inputs.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::grid::{Field, Grid};

/// `exp(-|x - center|² / (2 width²))`
pub fn gaussian_bump(grid: &Grid, center: [f64; 2], width: f64) -> Field {
    let d = grid.dim();
    Field::from_fn(grid, |x| {
        let r2: f64 = (0..d).map(|j| (x[j] - center[j]).powi(2)).sum();
        (-0.5 * r2 / (width * width)).exp()
    })
}

/// A bump with center in the middle half of the box and width in `[L/8, L/2]`.
pub fn random_bump<R: Rng + ?Sized>(grid: &Grid, rng: &mut R) -> Field {
    let l = grid.half_length();
    let mut center = [0.0; 2];
    for c in center.iter_mut().take(grid.dim()) {
        *c = rng.random_range(-0.5 * l..0.5 * l);
    }
    let width = rng.random_range(l / 8.0..l / 2.0);
    gaussian_bump(grid, center, width)
}

/// Low-frequency trigonometric noise with Gaussian coefficients decaying like `1/(1+|k|²)`.
pub fn random_smooth_noise<R: Rng + ?Sized>(grid: &Grid, rng: &mut R, max_freq: usize) -> Field {
    let l = grid.half_length();
    let d = grid.dim();
    let kmax = max_freq.min(grid.points_per_axis() / 2 - 1) as i64;
    let mut terms = Vec::new();
    let ky_range = if d == 2 { -kmax..=kmax } else { 0..=0 };
    for kx in -kmax..=kmax {
        for ky in ky_range.clone() {
            let k2 = (kx * kx + ky * ky) as f64;
            let scale = 1.0 / (1.0 + k2);
            let a: f64 = StandardNormal.sample(rng);
            let b: f64 = StandardNormal.sample(rng);
            terms.push((kx as f64, ky as f64, a * scale, b * scale));
        }
    }
    let w = std::f64::consts::PI / l;
    Field::from_fn(grid, |x| {
        let y = if d == 2 { x[1] } else { 0.0 };
        terms
            .iter()
            .map(|&(kx, ky, a, b)| {
                let phase = w * (kx * x[0] + ky * y);
                a * phase.cos() + b * phase.sin()
            })
            .sum()
    })
}

/// A random field: one to three signed bumps, sometimes with added smooth noise.
pub fn random_field<R: Rng + ?Sized>(grid: &Grid, rng: &mut R) -> Field {
    let bumps = rng.random_range(1..=3);
    let mut u = Field::zeros(grid);
    for _ in 0..bumps {
        let amp = rng.random_range(0.2..2.0) * if rng.random_bool(0.3) { -1.0 } else { 1.0 };
        u = u.plus_scaled(amp, &random_bump(grid, rng));
    }
    if rng.random_bool(0.5) {
        let noise = random_smooth_noise(grid, rng, 6);
        let scale = 0.3 * u.max_abs() / noise.max_abs().max(f64::MIN_POSITIVE);
        u = u.plus_scaled(scale, &noise);
    }
    if u.max_abs() == 0.0 {
        return Field::constant(grid, 1.0);
    }
    u
}

/// Pushes every value at least `floor · max|u|` away from zero, keeping its sign.
///
/// `J_λ` is only C¹ at fields with vanishing entries since `q < 2`, so central
/// differences there converge like `ε^{q-1}`. Finite-difference checks use lifted fields.
pub fn lift_from_zero(u: &Field, floor: f64) -> Field {
    let m = floor * u.max_abs();
    u.map(|v| if v < 0.0 { v - m } else { v + m })
}
