//! Periodic box discretization of ℝ^d with the spectral fractional Laplacian.
//!
//! The whole space is replaced by the periodic box `[-L, L)^d` sampled on a
//! uniform lattice with `n` points per axis. The fractional Laplacian acts as
//! the Fourier multiplier `|ξ|^{2s}`, which is exact on every discrete mode,
//! and integrals use the rectangle rule (spectrally accurate for smooth
//! periodic integrands and exactly paired with the discrete Fourier form).

use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Write};
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform periodic lattice on `[-L, L)^d` with precomputed multipliers `|ξ_k|^{2s}`.
#[derive(Clone)]
pub struct Grid {
    dim: usize,
    n: usize,
    half_length: f64,
    spacing: f64,
    order: f64,
    multipliers: Vec<f64>,
    freq_sq: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .field("half_length", &self.half_length)
            .field("spacing", &self.spacing)
            .field("order", &self.order)
            .finish()
    }
}

/// Upper end of the admissible fractional order range, `min(1, d/2)`.
pub fn max_order(dim: usize) -> f64 {
    (dim as f64 / 2.0).min(1.0)
}

/// Builds a grid, enforcing `0 < s < min(1, d/2)` unless `allow_any_s` is set.
pub fn build_grid(dim: usize, n: usize, half_length: f64, s: f64, allow_any_s: bool) -> Result<Grid> {
    Grid::build(dim, n, half_length, s, allow_any_s)
}

impl Grid {
    pub fn new(dim: usize, n: usize, half_length: f64, s: f64) -> Result<Self> {
        Self::build(dim, n, half_length, s, false)
    }

    /// Same as [`Grid::new`] but accepts any `s > 0`.
    pub fn with_any_order(dim: usize, n: usize, half_length: f64, s: f64) -> Result<Self> {
        Self::build(dim, n, half_length, s, true)
    }

    fn build(dim: usize, n: usize, half_length: f64, s: f64, allow_any_s: bool) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {n}"
            )));
        }
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::InvalidGrid(format!("half-length must be positive, got {half_length}")));
        }
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::InvalidParameter(format!("fractional order must be positive, got {s}")));
        }
        let upper = max_order(dim);
        if !allow_any_s && s >= upper {
            return Err(Error::OrderOutOfRange { s, upper, dim });
        }

        let axis: Vec<f64> = (0..n).map(|k| wavenumber(k, n, half_length)).collect();
        let total = n.pow(dim as u32);
        let freq_sq: Vec<f64> = match dim {
            1 => axis.iter().map(|xi| xi * xi).collect(),
            _ => (0..total)
                .map(|idx| {
                    let (i, j) = (idx / n, idx % n);
                    axis[i] * axis[i] + axis[j] * axis[j]
                })
                .collect(),
        };
        let multipliers = freq_sq.iter().map(|&k2| if k2 == 0.0 { 0.0 } else { k2.powf(s) }).collect();

        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);

        Ok(Self {
            dim,
            n,
            half_length,
            spacing: 2.0 * half_length / n as f64,
            order: s,
            multipliers,
            freq_sq,
            fft,
            ifft,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    /// Total number of lattice points, `n^d`.
    pub fn len(&self) -> usize {
        self.multipliers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.multipliers.is_empty()
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    /// Quadrature weight `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Measure of the box, `(2L)^d`.
    pub fn measure(&self) -> f64 {
        (2.0 * self.half_length).powi(self.dim as i32)
    }

    /// Per-mode multipliers `|ξ_k|^{2s}` in FFT order.
    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }

    /// Per-mode `|ξ_k|^2` in FFT order.
    pub fn frequency_squared(&self) -> &[f64] {
        &self.freq_sq
    }

    /// Coordinates of lattice point `index` (row-major; unused axes are zero).
    pub fn point(&self, index: usize) -> [f64; 2] {
        let coord = |i: usize| -self.half_length + i as f64 * self.spacing;
        match self.dim {
            1 => [coord(index), 0.0],
            _ => [coord(index / self.n), coord(index % self.n)],
        }
    }

    /// Squared distance of lattice point `index` from the origin.
    pub fn radius_sq(&self, index: usize) -> f64 {
        let [x, y] = self.point(index);
        x * x + y * y
    }

    pub(crate) fn check(&self, len: usize) -> Result<()> {
        if len == self.len() {
            Ok(())
        } else {
            Err(Error::ShapeMismatch { expected: self.len(), found: len })
        }
    }

    /// Forward transform of real samples into a complex spectrum (unnormalized).
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.fft);
        buf
    }

    /// Inverse transform returning the real part (normalized by `n^d`).
    pub fn inverse_real(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut spectrum, &self.ifft);
        let scale = 1.0 / self.len() as f64;
        spectrum.iter().map(|c| c.re * scale).collect()
    }

    fn transform(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(buf, &mut scratch);
        if self.dim == 2 {
            // rows are done; now every column
            let mut column = vec![Complex64::new(0.0, 0.0); n];
            for j in 0..n {
                for i in 0..n {
                    column[i] = buf[i * n + j];
                }
                plan.process_with_scratch(&mut column, &mut scratch);
                for i in 0..n {
                    buf[i * n + j] = column[i];
                }
            }
        }
    }

    /// Applies an arbitrary real, `k ↦ -k` symmetric Fourier symbol to real samples.
    pub fn apply_symbol(&self, values: &[f64], symbol: &[f64]) -> Result<Vec<f64>> {
        self.check(values.len())?;
        self.check(symbol.len())?;
        let mut spec = self.forward(values);
        for (c, &m) in spec.iter_mut().zip(symbol) {
            *c *= m;
        }
        Ok(self.inverse_real(spec))
    }

    pub(crate) fn fractional_laplacian_raw(&self, values: &[f64]) -> Vec<f64> {
        let mut spec = self.forward(values);
        for (c, &m) in spec.iter_mut().zip(&self.multipliers) {
            *c *= m;
        }
        self.inverse_real(spec)
    }

    /// `(-Δ)^s u` via the multiplier `|ξ|^{2s}`.
    pub fn fractional_laplacian(&self, u: &Field) -> Result<Field> {
        self.check(u.len())?;
        Ok(Field(self.fractional_laplacian_raw(u.values())))
    }

    /// Rectangle-rule integral `h^d Σ g_i`.
    pub fn integrate(&self, g: &Field) -> Result<f64> {
        self.check(g.len())?;
        Ok(self.integrate_raw(g.values()))
    }

    pub(crate) fn integrate_raw(&self, g: &[f64]) -> f64 {
        self.cell_volume() * g.iter().sum::<f64>()
    }

    /// Quadrature `L²` inner product.
    pub fn dot(&self, u: &Field, v: &Field) -> f64 {
        self.cell_volume() * u.0.iter().zip(&v.0).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn norm_l2(&self, u: &Field) -> f64 {
        self.dot(u, u).sqrt()
    }

    /// `(u, v)_V = ∫ u (-Δ)^s v + ∫ V u v`.
    pub fn inner_product_v(&self, potential: &Field, u: &Field, v: &Field) -> Result<f64> {
        self.check(potential.len())?;
        self.check(u.len())?;
        self.check(v.len())?;
        let lv = self.fractional_laplacian_raw(v.values());
        let sum: f64 = u
            .0
            .iter()
            .zip(&lv)
            .zip(v.0.iter().zip(&potential.0))
            .map(|((ui, lvi), (vi, pi))| ui * (lvi + pi * vi))
            .sum();
        Ok(self.cell_volume() * sum)
    }
}

/// Signed discrete frequency `π k / L` for FFT index `k`.
fn wavenumber(k: usize, n: usize, half_length: f64) -> f64 {
    let signed = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
    PI * signed / half_length
}

pub fn apply_fractional_laplacian(grid: &Grid, u: &Field) -> Result<Field> {
    grid.fractional_laplacian(u)
}

pub fn integrate(grid: &Grid, g: &Field) -> Result<f64> {
    grid.integrate(g)
}

pub fn inner_product_v(grid: &Grid, potential: &Field, u: &Field, v: &Field) -> Result<f64> {
    grid.inner_product_v(potential, u, v)
}

/// Real samples on a grid, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Field(Vec<f64>);

impl Field {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        grid.check(values.len())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("field entry {i} is {}", values[i])));
        }
        Ok(Self(values))
    }

    /// Wraps values without validation; callers guarantee length and finiteness.
    pub(crate) fn from_vec(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self(vec![0.0; grid.len()])
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        Self(vec![c; grid.len()])
    }

    /// Samples `f(x)` at every lattice point; `x` has `grid.dim()` entries.
    pub fn from_fn(grid: &Grid, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let d = grid.dim();
        Self((0..grid.len()).map(|i| f(&grid.point(i)[..d])).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, alpha: f64) -> Field {
        Field(self.0.iter().map(|v| alpha * v).collect())
    }

    /// `self + alpha * other`.
    pub fn plus_scaled(&self, alpha: f64, other: &Field) -> Field {
        Field(self.0.iter().zip(&other.0).map(|(a, b)| a + alpha * b).collect())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        Field(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    /// One value per line, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for v in &self.0 {
            writeln!(out, "{v:.16e}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(grid: &Grid, input: R) -> Result<Field> {
        let mut values = Vec::with_capacity(grid.len());
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let v: f64 = trimmed.parse().map_err(|_| Error::Config {
                line: lineno + 1,
                message: format!("not a number: {trimmed:?}"),
            })?;
            values.push(v);
        }
        Field::new(grid, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn line(n: usize, s: f64) -> Grid {
        Grid::new(1, n, PI, s).unwrap()
    }

    #[test]
    fn spacing_and_zero_mode() {
        let g = line(8, 0.4);
        assert_relative_eq!(g.spacing(), PI / 4.0, epsilon = 1e-15);
        assert_eq!(g.multipliers()[0], 0.0);
        assert_relative_eq!(g.multipliers()[1], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(Grid::new(1, 12, PI, 0.4), Err(Error::InvalidGrid(_))));
        assert!(matches!(Grid::new(1, 4, PI, 0.4), Err(Error::InvalidGrid(_))));
        assert!(matches!(Grid::new(3, 8, PI, 0.4), Err(Error::InvalidGrid(_))));
        assert!(matches!(Grid::new(1, 8, PI, 0.6), Err(Error::OrderOutOfRange { .. })));
        assert!(Grid::with_any_order(1, 8, PI, 0.6).is_ok());
        assert!(Grid::new(2, 8, PI, 0.9).is_ok());
        assert!(matches!(Grid::new(2, 8, PI, 1.0), Err(Error::OrderOutOfRange { .. })));
    }

    #[test]
    fn multipliers_symmetric() {
        for g in [line(16, 0.3), Grid::new(2, 8, 2.0, 0.7).unwrap()] {
            let n = g.points_per_axis();
            let m = g.multipliers();
            let neg = |k: usize| (n - k) % n;
            for idx in 0..g.len() {
                let mirror = if g.dim() == 1 { neg(idx) } else { neg(idx / n) * n + neg(idx % n) };
                assert_eq!(m[idx], m[mirror]);
                assert!(m[idx] >= 0.0);
            }
        }
    }

    #[test]
    fn constants_are_annihilated() {
        let g = line(32, 0.4);
        let out = g.fractional_laplacian(&Field::constant(&g, 1.0)).unwrap();
        assert!(out.max_abs() < 1e-14);
    }

    #[test]
    fn cosine_eigenmodes() {
        let g = line(64, 0.4);
        let u = Field::from_fn(&g, |x| (2.0 * x[0]).cos());
        let out = g.fractional_laplacian(&u).unwrap();
        for (o, v) in out.values().iter().zip(u.values()) {
            assert_relative_eq!(*o, 1.741101126592248 * v, epsilon = 1e-12);
        }
        let g = Grid::with_any_order(1, 64, PI, 0.5).unwrap();
        let u = Field::from_fn(&g, |x| x[0].cos() + (3.0 * x[0]).cos());
        let out = g.fractional_laplacian(&u).unwrap();
        let expected = Field::from_fn(&g, |x| x[0].cos() + 3.0 * (3.0 * x[0]).cos());
        for (o, e) in out.values().iter().zip(expected.values()) {
            assert_relative_eq!(*o, *e, epsilon = 1e-12);
        }
    }

    #[test]
    fn unit_symbol_is_spectral_laplacian() {
        let g = line(64, 0.4);
        let u = Field::from_fn(&g, |x| (3.0 * x[0]).sin());
        let out = g.apply_symbol(u.values(), g.frequency_squared()).unwrap();
        for (o, v) in out.iter().zip(u.values()) {
            assert_relative_eq!(*o, 9.0 * v, epsilon = 1e-11);
        }
    }

    #[test]
    fn two_dimensional_eigenmode() {
        let g = Grid::new(2, 16, PI, 0.7).unwrap();
        let u = Field::from_fn(&g, |x| (x[0]).cos() * (2.0 * x[1]).sin());
        let out = g.fractional_laplacian(&u).unwrap();
        let m = 5f64.powf(0.7);
        for (o, v) in out.values().iter().zip(u.values()) {
            assert_relative_eq!(*o, m * v, epsilon = 1e-12);
        }
    }

    #[test]
    fn quadrature_examples() {
        let g = line(8, 0.4);
        assert_relative_eq!(g.integrate(&Field::constant(&g, 1.0)).unwrap(), 2.0 * PI, epsilon = 1e-14);
        let g = line(64, 0.4);
        assert!(g.integrate(&Field::from_fn(&g, |x| x[0].cos())).unwrap().abs() < 1e-12);
        // ∫_{-π}^{π} cos² = [x/2 + sin(2x)/4] = π
        let exact = (PI / 2.0 + (2.0 * PI).sin() / 4.0) - (-PI / 2.0 + (-2.0 * PI).sin() / 4.0);
        let got = g.integrate(&Field::from_fn(&g, |x| x[0].cos().powi(2))).unwrap();
        assert!((got - exact).abs() < 1e-12);
    }

    #[test]
    fn v_inner_product_examples() {
        let g = line(64, 0.4);
        let one = Field::constant(&g, 1.0);
        assert_relative_eq!(g.inner_product_v(&one, &one, &one).unwrap(), 2.0 * PI, epsilon = 1e-12);
        let c2 = Field::from_fn(&g, |x| (2.0 * x[0]).cos());
        let zero = Field::zeros(&g);
        assert_relative_eq!(
            g.inner_product_v(&zero, &c2, &c2).unwrap(),
            2f64.powf(0.8) * PI,
            epsilon = 1e-12
        );
        let c1 = Field::from_fn(&g, |x| x[0].cos());
        assert!(g.inner_product_v(&one, &c1, &c2).unwrap().abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch() {
        let g = line(8, 0.4);
        let h = line(16, 0.4);
        assert!(matches!(
            g.fractional_laplacian(&Field::zeros(&h)),
            Err(Error::ShapeMismatch { expected: 8, found: 16 })
        ));
        assert!(Field::new(&g, vec![f64::NAN; 8]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let g = line(16, 0.4);
        let u = Field::from_fn(&g, |x| x[0].sin() * 1e-3 + 0.1);
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let back = Field::read_csv(&g, buf.as_slice()).unwrap();
        assert_eq!(back, u);
    }
}
