//! Problem data and the sampling audit of the structural hypotheses.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::nonlinearity::Nonlinearity;

/// Constants of the weight bound `b(x) <= C0 (1 + V⁺(x)^{1/α})` for `|x| >= R0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeightBound {
    pub c0: f64,
    pub alpha: f64,
    pub r0: f64,
}

impl Default for WeightBound {
    fn default() -> Self {
        Self { c0: 2.0, alpha: 2.0, r0: 0.0 }
    }
}

/// Everything that defines the equation
/// `(-Δ)^s u + V u = λ a |u|^{q-2} u + b f(u)` on the grid.
#[derive(Clone, Debug)]
pub struct ProblemSpec {
    pub grid: Grid,
    pub q: f64,
    pub p: f64,
    pub lambda: f64,
    pub potential: Field,
    /// Declared lower bound `B >= 0` with `V >= -B`.
    pub potential_bound: f64,
    pub weight_a: Field,
    pub weight_b: Field,
    pub nonlinearity: Nonlinearity,
    pub weight_bound: WeightBound,
}

/// Upper end of the admissible growth exponent range, `2d/(d - 2s)` (infinite when `d <= 2s`).
pub fn critical_exponent(dim: usize, s: f64) -> f64 {
    let d = dim as f64;
    if d - 2.0 * s <= 0.0 {
        f64::INFINITY
    } else {
        2.0 * d / (d - 2.0 * s)
    }
}

impl ProblemSpec {
    /// Validates every structural invariant of the data.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        grid: Grid,
        q: f64,
        p: f64,
        lambda: f64,
        potential: Field,
        potential_bound: f64,
        weight_a: Field,
        weight_b: Field,
        nonlinearity: Nonlinearity,
        weight_bound: WeightBound,
    ) -> Result<Self> {
        if !(q > 1.0 && q < 2.0) {
            return Err(Error::InvalidParameter(format!("q must lie in (1, 2), got {q}")));
        }
        let crit = critical_exponent(grid.dim(), grid.order());
        // the relative margin keeps p = 2d/(d - 2s) out despite rounding in `crit`
        if !(p > 2.0 && p < crit * (1.0 - 1e-12)) {
            return Err(Error::InvalidParameter(format!("p must lie in (2, {crit}), got {p}")));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
        }
        if !(potential_bound.is_finite() && potential_bound >= 0.0) {
            return Err(Error::InvalidParameter(format!("potential bound B must be >= 0, got {potential_bound}")));
        }
        for (name, field) in [("V", &potential), ("a", &weight_a), ("b", &weight_b)] {
            grid.check(field.len())?;
            if field.values().iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("{name} has non-finite entries")));
            }
        }
        if let Some(i) = weight_a.values().iter().position(|&v| v < 0.0) {
            return Err(Error::InvalidParameter(format!("a is negative at {:?}", &grid.point(i)[..grid.dim()])));
        }
        if weight_a.is_zero() {
            return Err(Error::InvalidParameter("a vanishes identically".into()));
        }
        if let Some(i) = weight_b.values().iter().position(|&v| v < 1.0) {
            return Err(Error::InvalidParameter(format!("b < 1 at {:?}", &grid.point(i)[..grid.dim()])));
        }
        if let Some(i) = potential.values().iter().position(|&v| v < -potential_bound) {
            return Err(Error::InvalidParameter(format!(
                "V < -B at {:?} (V = {}, B = {potential_bound})",
                &grid.point(i)[..grid.dim()],
                potential.values()[i]
            )));
        }
        if !(weight_bound.alpha > 1.0 && weight_bound.c0 > 0.0 && weight_bound.r0 >= 0.0) {
            return Err(Error::InvalidParameter(format!("weight bound constants invalid: {weight_bound:?}")));
        }
        Ok(Self {
            grid,
            q,
            p,
            lambda,
            potential,
            potential_bound,
            weight_a,
            weight_b,
            nonlinearity,
            weight_bound,
        })
    }

    /// Flat-coefficient problem: `V ≡ v0`, `a ≡ b ≡ 1`.
    pub fn flat(grid: Grid, q: f64, p: f64, lambda: f64, v0: f64, nonlinearity: Nonlinearity) -> Result<Self> {
        let potential = Field::constant(&grid, v0);
        let ones = Field::constant(&grid, 1.0);
        Self::new(
            grid,
            q,
            p,
            lambda,
            potential,
            (-v0).max(0.0),
            ones.clone(),
            ones,
            nonlinearity,
            WeightBound::default(),
        )
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
        }
        let mut out = self.clone();
        out.lambda = lambda;
        Ok(out)
    }

    pub fn s(&self) -> f64 {
        self.grid.order()
    }

    /// `α0 = p / (p - q)`.
    pub fn alpha0(&self) -> f64 {
        self.p / (self.p - self.q)
    }
}

/// Outcome of one audited hypothesis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_x: Option<Vec<f64>>,
    pub detail: String,
}

impl HypothesisCheck {
    fn at_t(name: &str, pass: bool, t: Option<f64>, detail: String) -> Self {
        Self { name: name.into(), pass, witness_t: t, witness_x: None, detail }
    }

    fn at_x(name: &str, pass: bool, x: Option<Vec<f64>>, detail: String) -> Self {
        Self { name: name.into(), pass, witness_t: None, witness_x: x, detail }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct HypothesisReport {
    pub checks: Vec<HypothesisCheck>,
}

pub const AR_CHECK: &str = "ar_satisfied";

impl HypothesisReport {
    pub fn get(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn passed(&self, name: &str) -> bool {
        self.get(name).is_some_and(|c| c.pass)
    }

    pub fn f1_growth(&self) -> bool {
        self.passed("f1_growth")
    }
    pub fn f2_limits(&self) -> bool {
        self.passed("f2_limits")
    }
    pub fn f3_h_monotone(&self) -> bool {
        self.passed("f3_H_monotone")
    }
    pub fn f4_strict(&self) -> bool {
        self.passed("f4_strict")
    }
    pub fn b1_pointwise(&self) -> bool {
        self.passed("B1_pointwise")
    }
    pub fn a1_integrability(&self) -> bool {
        self.passed("A1_integrability")
    }
    pub fn v1_bound(&self) -> bool {
        self.passed("V1_bound")
    }
    pub fn v2_positive(&self) -> bool {
        self.passed("V2_positive")
    }
    /// Ambrosetti–Rabinowitz diagnostic; not a requirement of the method.
    pub fn ar_satisfied(&self) -> bool {
        self.passed(AR_CHECK)
    }

    /// Every required hypothesis passed (the AR diagnostic is excluded).
    pub fn all_required_pass(&self) -> bool {
        self.checks.iter().filter(|c| c.name != AR_CHECK).all(|c| c.pass)
    }
}

const SMALLEST_SAMPLE: f64 = 1e-6;
/// The AR scan must reach far: for `t ln(1+t)` and `θ` near 2 the violation appears only beyond ~1e9.
const AR_SCAN_MAX: f64 = 1e12;
const AR_THETAS: [f64; 3] = [2.1, 2.5, 3.0];

fn logspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| match i {
            0 => lo,
            _ if i + 1 == count => hi,
            _ => (a + (b - a) * i as f64 / (count - 1) as f64).exp(),
        })
        .collect()
}

/// Samples the structural hypotheses on `±[1e-6, t_max]` and on the grid.
///
/// Never fails on a violated hypothesis: the returned report carries the
/// witness at which each failure was observed.
pub fn check_hypotheses(spec: &ProblemSpec, sample_count: usize, t_max: f64) -> Result<HypothesisReport> {
    if sample_count < 100 {
        return Err(Error::InvalidParameter(format!("sample_count must be >= 100, got {sample_count}")));
    }
    if !(t_max.is_finite() && t_max > 10.0 * SMALLEST_SAMPLE) {
        return Err(Error::InvalidParameter(format!("t_max must exceed {}, got {t_max}", 10.0 * SMALLEST_SAMPLE)));
    }
    let ts = logspace(SMALLEST_SAMPLE, t_max, sample_count);
    let nl = &spec.nonlinearity;
    let q = spec.q;

    let checks = vec![
        check_growth(nl, spec.p, &ts),
        check_limits(nl, &ts),
        check_h_monotone(nl, q, &ts),
        check_f4(nl, &ts),
        check_weight_b(spec),
        check_weight_a(spec),
        check_v1(spec),
        check_v2(spec),
        check_ar(nl, sample_count, t_max),
    ];
    Ok(HypothesisReport { checks })
}

fn check_growth(nl: &Nonlinearity, p: f64, ts: &[f64]) -> HypothesisCheck {
    let mut c_fit = 0.0f64;
    let mut worst = ts[0];
    for &a in ts {
        for t in [a, -a] {
            let r = (nl.f(t).abs() / (1.0 + a.powf(p - 1.0))).max(nl.fprime(t).abs() / (1.0 + a.powf(p - 2.0)));
            if !r.is_finite() {
                return HypothesisCheck::at_t("f1_growth", false, Some(t), format!("non-finite envelope ratio {r}"));
            }
            if r > c_fit {
                c_fit = r;
                worst = t;
            }
        }
    }
    // the envelope must not be outgrown: log-log slope over the top decade
    let hi = *ts.last().unwrap();
    let lo = ts.iter().rev().find(|&&t| t <= hi / 10.0).copied().unwrap_or(ts[0]);
    let slope = |g: &dyn Fn(f64) -> f64| {
        let (gh, gl) = (g(hi).abs(), g(lo).abs());
        if gh == 0.0 || gl == 0.0 {
            0.0
        } else {
            (gh / gl).ln() / (hi / lo).ln()
        }
    };
    let slope_f = slope(&|t| nl.f(t));
    let slope_fp = slope(&|t| nl.fprime(t));
    let slack = 0.05;
    if slope_f > p - 1.0 + slack || slope_fp > p - 2.0 + slack {
        return HypothesisCheck::at_t(
            "f1_growth",
            false,
            Some(hi),
            format!("tail growth exponents {slope_f:.4} (f) / {slope_fp:.4} (f') exceed p-1 = {} / p-2 = {}", p - 1.0, p - 2.0),
        );
    }
    HypothesisCheck::at_t(
        "f1_growth",
        true,
        Some(worst),
        format!("fitted C = {c_fit:.6e}; tail exponents {slope_f:.4} (f) / {slope_fp:.4} (f')"),
    )
}

fn check_limits(nl: &Nonlinearity, ts: &[f64]) -> HypothesisCheck {
    for &a in ts {
        for t in [a, -a] {
            if nl.f(t) * t < 0.0 {
                return HypothesisCheck::at_t("f2_limits", false, Some(t), format!("f(t) t = {} < 0", nl.f(t) * t));
            }
        }
    }
    let ratio = |t: f64| nl.f(t) / t;
    let t0 = ts[0];
    let t1 = ts.iter().find(|&&t| t >= 1e3 * t0).copied().unwrap_or(ts[ts.len() / 2]);
    for t in [t0, -t0] {
        let r0 = ratio(t).abs();
        let r1 = ratio(t.signum() * t1).abs();
        if !(r0 <= 1e-3 || r0 < 0.9 * r1) {
            return HypothesisCheck::at_t(
                "f2_limits",
                false,
                Some(t),
                format!("f(t)/t = {r0:.6e} at the origin-limit test does not tend to 0"),
            );
        }
    }
    let hi = *ts.last().unwrap();
    let lo = ts.iter().rev().find(|&&t| t <= hi / 10.0).copied().unwrap_or(ts[0]);
    for sign in [1.0, -1.0] {
        if ratio(sign * hi) <= ratio(sign * lo) * (1.0 + 1e-9) {
            return HypothesisCheck::at_t(
                "f2_limits",
                false,
                Some(sign * hi),
                format!("f(t)/t = {:.6e} is not growing at infinity", ratio(sign * hi)),
            );
        }
    }
    HypothesisCheck::at_t(
        "f2_limits",
        true,
        Some(t0),
        format!("f(t)/t = {:.3e} near 0 and {:.3e} at t_max", ratio(t0), ratio(hi)),
    )
}

fn check_h_monotone(nl: &Nonlinearity, q: f64, ts: &[f64]) -> HypothesisCheck {
    for sign in [1.0, -1.0] {
        for w in ts.windows(2) {
            let (h0, h1) = (nl.h(q, sign * w[0]), nl.h(q, sign * w[1]));
            if h1 <= h0 {
                return HypothesisCheck::at_t(
                    "f3_H_monotone",
                    false,
                    Some(sign * w[1]),
                    format!("H not strictly monotone: H({}) = {h0:e}, H({}) = {h1:e}", sign * w[0], sign * w[1]),
                );
            }
        }
    }
    HypothesisCheck::at_t("f3_H_monotone", true, None, format!("strict on {} samples per sign", ts.len()))
}

fn check_f4(nl: &Nonlinearity, ts: &[f64]) -> HypothesisCheck {
    let mut min_ratio = f64::INFINITY;
    let mut at = ts[0];
    for &a in ts {
        for t in [a, -a] {
            let v = nl.fprime(t) * t * t - nl.f(t) * t;
            if v <= 0.0 {
                return HypothesisCheck::at_t("f4_strict", false, Some(t), format!("f'(t)t² - f(t)t = {v:e} <= 0"));
            }
            let r = v / (t * t * (1.0 + nl.fprime(t).abs()));
            if r < min_ratio {
                min_ratio = r;
                at = t;
            }
        }
    }
    HypothesisCheck::at_t("f4_strict", true, Some(at), format!("smallest normalized margin {min_ratio:.3e}"))
}

fn point_of(grid: &Grid, i: usize) -> Vec<f64> {
    grid.point(i)[..grid.dim()].to_vec()
}

fn check_weight_b(spec: &ProblemSpec) -> HypothesisCheck {
    let WeightBound { c0, alpha, r0 } = spec.weight_bound;
    let grid = &spec.grid;
    let mut worst = (0.0f64, 0usize);
    for (i, (&b, &v)) in spec.weight_b.values().iter().zip(spec.potential.values()).enumerate() {
        if b < 1.0 {
            return HypothesisCheck::at_x("B1_pointwise", false, Some(point_of(grid, i)), format!("b = {b} < 1"));
        }
        if grid.radius_sq(i).sqrt() < r0 {
            continue;
        }
        let bound = c0 * (1.0 + v.max(0.0).powf(1.0 / alpha));
        if b > bound {
            return HypothesisCheck::at_x(
                "B1_pointwise",
                false,
                Some(point_of(grid, i)),
                format!("b = {b} exceeds C0 (1 + (V⁺)^(1/α)) = {bound}"),
            );
        }
        if b / bound > worst.0 {
            worst = (b / bound, i);
        }
    }
    HypothesisCheck::at_x(
        "B1_pointwise",
        true,
        Some(point_of(grid, worst.1)),
        format!("max b / bound = {:.6} (C0 = {c0}, α = {alpha}, R0 = {r0})", worst.0),
    )
}

fn check_weight_a(spec: &ProblemSpec) -> HypothesisCheck {
    let grid = &spec.grid;
    if let Some(i) = spec.weight_a.values().iter().position(|&a| a < 0.0) {
        return HypothesisCheck::at_x("A1_integrability", false, Some(point_of(grid, i)), "a < 0".into());
    }
    if spec.weight_a.is_zero() {
        return HypothesisCheck::at_x("A1_integrability", false, None, "a vanishes identically".into());
    }
    let alpha0 = spec.alpha0();
    let integral = grid.integrate_raw(&spec.weight_a.values().iter().map(|a| a.powf(alpha0)).collect::<Vec<_>>());
    HypothesisCheck::at_x(
        "A1_integrability",
        integral.is_finite(),
        None,
        format!("∫ a^α0 = {integral:.6e} with α0 = {alpha0:.6}"),
    )
}

fn check_v1(spec: &ProblemSpec) -> HypothesisCheck {
    let (i, vmin) = spec
        .potential
        .values()
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let pass = vmin >= -spec.potential_bound;
    HypothesisCheck::at_x(
        "V1_bound",
        pass,
        Some(point_of(&spec.grid, i)),
        format!("min V = {vmin:.6e}, B = {}", spec.potential_bound),
    )
}

fn check_v2(spec: &ProblemSpec) -> HypothesisCheck {
    let (mu, mode) = smallest_form_eigenvalue(&spec.grid, &spec.potential, spec.potential_bound);
    let i = mode
        .values()
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc })
        .0;
    HypothesisCheck::at_x(
        "V2_positive",
        mu > 0.0,
        Some(point_of(&spec.grid, i)),
        format!("smallest eigenvalue of the discrete quadratic form on unit-L² fields = {mu:.10e}"),
    )
}

fn check_ar(nl: &Nonlinearity, sample_count: usize, t_max: f64) -> HypothesisCheck {
    let ts = logspace(SMALLEST_SAMPLE, t_max.max(AR_SCAN_MAX), sample_count.max(400));
    let mut infima = Vec::new();
    let mut satisfied = false;
    let mut witness = None;
    for (k, &theta) in AR_THETAS.iter().enumerate() {
        let mut inf = f64::INFINITY;
        let mut at = ts[0];
        let mut ok = true;
        for &a in &ts {
            for t in [a, -a] {
                let big_f = nl.primitive(t);
                let v = nl.f(t) * t - theta * big_f;
                if !(big_f > 0.0) || v < 0.0 {
                    ok = false;
                }
                if v < inf {
                    inf = v;
                    at = t;
                }
            }
        }
        if k == 0 {
            witness = Some(at);
        }
        satisfied |= ok;
        infima.push(format!("θ = {theta}: inf (f t - θ F) = {inf:.6e} at t = {at:.6e}"));
    }
    HypothesisCheck::at_t(AR_CHECK, satisfied, witness, infima.join("; "))
}

/// Smallest eigenvalue of the discrete form `u ↦ ∫ u (-Δ)^s u + ∫ V u²` over unit-`L²` fields.
///
/// Inverse iteration on the shifted operator `M + (B + 1)`, which is positive
/// definite whenever `V >= -B`; the inner solves use conjugate gradients.
pub fn smallest_form_eigenvalue(grid: &Grid, potential: &Field, bound: f64) -> (f64, Field) {
    let shift = bound + 1.0;
    let apply = |x: &[f64]| -> Vec<f64> {
        let lx = grid.fractional_laplacian_raw(x);
        lx.iter()
            .zip(x)
            .zip(potential.values())
            .map(|((l, xi), v)| l + (v + shift) * xi)
            .collect()
    };
    let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();

    let n = grid.len();
    let mut x: Vec<f64> = vec![1.0 / (n as f64).sqrt(); n];
    let mut rayleigh = dot(&x, &apply(&x));
    for _ in 0..500 {
        let mut y = conjugate_gradient(&apply, &x, 1e-13, 4 * n.max(200));
        let ny = norm(&y);
        y.iter_mut().for_each(|v| *v /= ny);
        let next = dot(&y, &apply(&y));
        x = y;
        let done = (next - rayleigh).abs() <= 1e-13 * next.abs().max(1.0);
        rayleigh = next;
        if done {
            break;
        }
    }
    (rayleigh - shift, Field::from_vec(x))
}

fn conjugate_gradient(apply: &dyn Fn(&[f64]) -> Vec<f64>, rhs: &[f64], rtol: f64, max_iter: usize) -> Vec<f64> {
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let mut x = vec![0.0; rhs.len()];
    let mut r = rhs.to_vec();
    let mut d = r.clone();
    let mut rr = dot(&r, &r);
    let target = rtol * rtol * rr;
    for _ in 0..max_iter {
        if rr <= target {
            break;
        }
        let ad = apply(&d);
        let alpha = rr / dot(&d, &ad);
        for i in 0..x.len() {
            x[i] += alpha * d[i];
            r[i] -= alpha * ad[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..d.len() {
            d[i] = r[i] + beta * d[i];
        }
    }
    x
}
