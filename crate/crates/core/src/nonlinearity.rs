//! Superlinear nonlinearities `f` with their derivative, primitive `F`,
//! and the two auxiliary functions that govern uniqueness of the fiber maxima:
//!
//! * `G(t) = f(t)/t - q F(t)/t²`
//! * `H(t) = f'(t) + (1 - q) f(t)/t`
//!
//! Both are extended by `0` at `t = 0`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied nonlinearity. When no primitive is given it is integrated numerically.
#[derive(Clone)]
pub struct CustomNonlinearity {
    name: String,
    f: ScalarFn,
    fprime: ScalarFn,
    primitive: Option<ScalarFn>,
}

impl fmt::Debug for CustomNonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomNonlinearity")
            .field("name", &self.name)
            .field("analytic_primitive", &self.primitive.is_some())
            .finish()
    }
}

#[derive(Clone, Debug)]
pub enum Nonlinearity {
    /// `f(t) = Σ |t|^{p_i - 2} t` with `2 < p_1 < ... < p_k`.
    PowerSum(Vec<f64>),
    /// `f(t) = t ln(1 + |t|)`.
    LogPower,
    Custom(CustomNonlinearity),
}

impl Nonlinearity {
    pub fn power(p: f64) -> Self {
        Nonlinearity::PowerSum(vec![p])
    }

    pub fn power_sum(exponents: Vec<f64>) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::InvalidParameter("power sum needs at least one exponent".into()));
        }
        if exponents.iter().any(|&p| !(p.is_finite() && p > 2.0)) {
            return Err(Error::InvalidParameter(format!("power sum exponents must exceed 2: {exponents:?}")));
        }
        Ok(Nonlinearity::PowerSum(exponents))
    }

    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        fprime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        primitive: Option<ScalarFn>,
    ) -> Self {
        Nonlinearity::Custom(CustomNonlinearity {
            name: name.into(),
            f: Arc::new(f),
            fprime: Arc::new(fprime),
            primitive,
        })
    }

    /// `f(t) = t`; violates the superlinearity at the origin. Used to exercise the audit.
    pub fn linear() -> Self {
        Self::custom("linear", |t| t, |_| 1.0, Some(Arc::new(|t: f64| 0.5 * t * t)))
    }

    pub fn name(&self) -> String {
        match self {
            Nonlinearity::PowerSum(ps) if ps.len() == 1 => format!("power:{}", ps[0]),
            Nonlinearity::PowerSum(ps) => {
                let list: Vec<String> = ps.iter().map(|p| p.to_string()).collect();
                format!("power_sum:{}", list.join(","))
            }
            Nonlinearity::LogPower => "log_power".into(),
            Nonlinearity::Custom(c) => format!("custom:{}", c.name),
        }
    }

    /// True when `f` is odd by construction.
    pub fn is_odd(&self) -> bool {
        !matches!(self, Nonlinearity::Custom(_))
    }

    pub fn f(&self, t: f64) -> f64 {
        match self {
            Nonlinearity::PowerSum(ps) => {
                let a = t.abs();
                ps.iter().map(|&p| pow_abs(a, p - 2.0)).sum::<f64>() * t
            }
            Nonlinearity::LogPower => t * t.abs().ln_1p(),
            Nonlinearity::Custom(c) => (c.f)(t),
        }
    }

    pub fn fprime(&self, t: f64) -> f64 {
        match self {
            Nonlinearity::PowerSum(ps) => {
                let a = t.abs();
                ps.iter().map(|&p| (p - 1.0) * pow_abs(a, p - 2.0)).sum()
            }
            Nonlinearity::LogPower => {
                let a = t.abs();
                a.ln_1p() + a / (1.0 + a)
            }
            Nonlinearity::Custom(c) => (c.fprime)(t),
        }
    }

    /// `F(t) = ∫_0^t f`.
    pub fn primitive(&self, t: f64) -> f64 {
        match self {
            Nonlinearity::PowerSum(ps) => {
                let a = t.abs();
                ps.iter().map(|&p| pow_abs(a, p) / p).sum()
            }
            Nonlinearity::LogPower => log_power_primitive(t.abs()),
            Nonlinearity::Custom(c) => match &c.primitive {
                Some(prim) => prim(t),
                None => numeric_primitive(&*c.f, t),
            },
        }
    }

    /// `G(t) = f(t)/t - q F(t)/t²`, zero at the origin.
    pub fn g(&self, q: f64, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        match self {
            Nonlinearity::PowerSum(ps) => {
                let a = t.abs();
                ps.iter().map(|&p| (1.0 - q / p) * pow_abs(a, p - 2.0)).sum()
            }
            Nonlinearity::LogPower => {
                let a = t.abs();
                a.ln_1p() - q * log_power_primitive(a) / (a * a)
            }
            Nonlinearity::Custom(_) => self.f(t) / t - q * self.primitive(t) / (t * t),
        }
    }

    /// `H(t) = f'(t) + (1 - q) f(t)/t`, zero at the origin.
    pub fn h(&self, q: f64, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        match self {
            Nonlinearity::PowerSum(ps) => {
                let a = t.abs();
                ps.iter().map(|&p| (p - q) * pow_abs(a, p - 2.0)).sum()
            }
            Nonlinearity::LogPower => {
                let a = t.abs();
                (2.0 - q) * a.ln_1p() + a / (1.0 + a)
            }
            Nonlinearity::Custom(_) => self.fprime(t) + (1.0 - q) * self.f(t) / t,
        }
    }
}

/// `a^e` for `a >= 0`, with the common integer exponents on the fast path.
#[inline]
fn pow_abs(a: f64, e: f64) -> f64 {
    if e == 1.0 {
        a
    } else if e == 2.0 {
        a * a
    } else if e == 3.0 {
        a * a * a
    } else if a == 0.0 {
        0.0
    } else {
        a.powf(e)
    }
}

/// `∫_0^t τ ln(1+τ) dτ` for `t >= 0`.
///
/// Closed form `(t² - 1)/2 · ln(1+t) - t²/4 + t/2`; the series
/// `Σ_{k≥1} (-1)^{k+1} t^{k+2} / (k(k+2))` is used near the origin where the
/// closed form cancels catastrophically.
fn log_power_primitive(t: f64) -> f64 {
    if t < 0.1 {
        let mut sum = 0.0;
        let mut power = t * t * t;
        for k in 1..=24 {
            let kf = k as f64;
            let term = power / (kf * (kf + 2.0));
            sum += if k % 2 == 1 { term } else { -term };
            power *= t;
        }
        sum
    } else {
        0.5 * (t * t - 1.0) * t.ln_1p() - 0.25 * t * t + 0.5 * t
    }
}

fn numeric_primitive(f: &(dyn Fn(f64) -> f64 + Send + Sync), t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    adaptive_simpson(f, 0.0, t, 1e-13 * (1.0 + t.abs()), 50)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, max_depth: u32) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

fn finite(t: f64) -> Result<f64> {
    if t.is_finite() {
        Ok(t)
    } else {
        Err(Error::NonFinite(format!("nonlinearity argument {t}")))
    }
}

pub fn eval_f(nl: &Nonlinearity, t: f64) -> Result<f64> {
    Ok(nl.f(finite(t)?))
}

pub fn eval_fprime(nl: &Nonlinearity, t: f64) -> Result<f64> {
    Ok(nl.fprime(finite(t)?))
}

pub fn eval_primitive(nl: &Nonlinearity, t: f64) -> Result<f64> {
    Ok(nl.primitive(finite(t)?))
}

pub fn eval_g(nl: &Nonlinearity, q: f64, t: f64) -> Result<f64> {
    Ok(nl.g(q, finite(t)?))
}

pub fn eval_h(nl: &Nonlinearity, q: f64, t: f64) -> Result<f64> {
    Ok(nl.h(q, finite(t)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn log_custom() -> Nonlinearity {
        Nonlinearity::custom(
            "log_numeric",
            |t: f64| t * t.abs().ln_1p(),
            |t: f64| t.abs().ln_1p() + t.abs() / (1.0 + t.abs()),
            None,
        )
    }

    #[test]
    fn pointwise_examples() {
        let log = Nonlinearity::LogPower;
        assert_relative_eq!(log.f(1.0), 2f64.ln(), epsilon = 1e-15);
        let pw = Nonlinearity::power(4.0);
        assert_eq!(pw.f(2.0), 8.0);
        assert_eq!(pw.fprime(2.0), 12.0);
        assert_eq!(pw.primitive(2.0), 4.0);
        for nl in [log, pw, Nonlinearity::power_sum(vec![3.0, 4.0]).unwrap()] {
            assert_eq!(nl.f(0.0), 0.0);
            assert_eq!(nl.primitive(0.0), 0.0);
        }
        assert!(eval_f(&Nonlinearity::LogPower, f64::INFINITY).is_err());
        assert!(eval_primitive(&Nonlinearity::LogPower, f64::NAN).is_err());
    }

    #[test]
    fn g_and_h_examples() {
        let pw = Nonlinearity::power(4.0);
        assert_relative_eq!(pw.g(1.5, 2.0), 2.5, epsilon = 1e-14);
        assert_relative_eq!(pw.g(1.5, -2.0), 2.5, epsilon = 1e-14);
        assert_eq!(pw.g(1.5, 0.0), 0.0);
        assert_relative_eq!(pw.h(1.5, 1.0), 2.5, epsilon = 1e-14);
        assert_eq!(pw.h(1.5, 0.0), 0.0);
        let log = Nonlinearity::LogPower;
        assert_relative_eq!(log.h(1.5, 1.0), 0.5 * 2f64.ln() + 0.5, epsilon = 1e-14);
        assert_eq!(log.g(1.5, 0.0), 0.0);
    }

    #[test]
    fn g_h_specializations_match_generic_formulas() {
        for nl in [Nonlinearity::LogPower, Nonlinearity::power_sum(vec![3.0, 4.5]).unwrap()] {
            for &t in &[-7.0, -0.3, 0.2, 1.0, 5.5] {
                let q = 1.3;
                let g = nl.f(t) / t - q * nl.primitive(t) / (t * t);
                let h = nl.fprime(t) + (1.0 - q) * nl.f(t) / t;
                assert_relative_eq!(nl.g(q, t), g, max_relative = 1e-12);
                assert_relative_eq!(nl.h(q, t), h, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn log_primitive_differentiates_back_to_f() {
        // central differences of F against f, across the series/closed-form switch
        let nl = Nonlinearity::LogPower;
        for &t in &[0.01, 0.0999, 0.1001, 0.5, 3.0, 40.0] {
            let eps = 1e-6 * t;
            let d = (nl.primitive(t + eps) - nl.primitive(t - eps)) / (2.0 * eps);
            assert_relative_eq!(d, nl.f(t), max_relative = 1e-7);
        }
        assert_relative_eq!(nl.primitive(1.0), 0.25, epsilon = 1e-15);
        // the series and the closed form agree at the switch point
        let t: f64 = 0.1;
        let closed = 0.5 * (t * t - 1.0) * t.ln_1p() - 0.25 * t * t + 0.5 * t;
        assert_relative_eq!(log_power_primitive(0.1 - 1e-15), closed, max_relative = 1e-12);
    }

    #[test]
    fn numeric_primitive_matches_analytic() {
        let custom = log_custom();
        let analytic = Nonlinearity::LogPower;
        let mut t = -10.0;
        while t <= 10.0 {
            assert!((custom.primitive(t) - analytic.primitive(t)).abs() <= 1e-9, "t = {t}");
            t += 0.37;
        }
        assert!((custom.primitive(10.0) - analytic.primitive(10.0)).abs() <= 1e-9);
    }

    #[test]
    fn simpson_polynomial() {
        let v = adaptive_simpson(&|x: f64| x.powi(5) - 2.0 * x, -1.0, 2.0, 1e-13, 40);
        assert_relative_eq!(v, 64.0 / 6.0 - 1.0 / 6.0 - 3.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn g_increasing_and_ft_dominates_qf(t1 in 1e-4f64..50.0, ratio in 1.001f64..10.0, q in 1.05f64..1.95) {
            let t2 = t1 * ratio;
            for nl in [Nonlinearity::LogPower, Nonlinearity::power(4.0), Nonlinearity::power_sum(vec![3.0, 4.0]).unwrap()] {
                prop_assert!(nl.g(q, t2) > nl.g(q, t1));
                prop_assert!(nl.g(q, -t2) > nl.g(q, -t1));
                prop_assert!(nl.h(q, t2) > nl.h(q, t1));
                prop_assert!(nl.f(t1) * t1 >= q * nl.primitive(t1));
                prop_assert!(nl.f(-t2) * -t2 >= q * nl.primitive(-t2));
            }
        }

        #[test]
        fn odd_f_even_primitive(t in -30.0f64..30.0) {
            for nl in [Nonlinearity::LogPower, Nonlinearity::power_sum(vec![2.5, 3.0]).unwrap()] {
                prop_assert_eq!(nl.f(-t), -nl.f(t));
                prop_assert_eq!(nl.primitive(-t), nl.primitive(t));
                prop_assert!(nl.f(t) * t >= 0.0);
            }
        }
    }
}
