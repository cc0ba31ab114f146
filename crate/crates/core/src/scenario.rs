//! Flat `key = value` scenario files.
//!
//! ```text
//! # harmonic trap, quartic nonlinearity
//! d = 1
//! n = 256
//! L = 6
//! nonlinearity = power:4
//! V = harmonic:1,0.15
//! ```
//!
//! Unknown keys, duplicates and malformed values are errors carrying the line
//! number. Coefficient fields are given as profiles:
//! `constant:c`, `harmonic:c0,c2` (`c0 + c2 |x|²`),
//! `gaussian:base,amp,width` (`base + amp exp(-|x|²/(2 width²))`) or
//! `csv:path` (one value per line, row-major).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{build_grid, Field, Grid};
use crate::nonlinearity::Nonlinearity;
use crate::problem::{ProblemSpec, WeightBound};

pub const POWER: &str = include_str!("../scenarios/power.conf");
pub const POWER_SUM: &str = include_str!("../scenarios/power_sum.conf");
pub const LOG_POWER: &str = include_str!("../scenarios/log_power.conf");

/// Names accepted by [`bundled`].
pub const BUNDLED: [&str; 3] = ["power", "power_sum", "log_power"];

/// Text of a bundled scenario.
pub fn bundled(name: &str) -> Result<&'static str> {
    match name {
        "power" => Ok(POWER),
        "power_sum" => Ok(POWER_SUM),
        "log_power" => Ok(LOG_POWER),
        other => Err(Error::InvalidParameter(format!(
            "unknown bundled scenario {other:?}; expected one of {BUNDLED:?}"
        ))),
    }
}

/// A coefficient field description.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant { value: f64 },
    Harmonic { c0: f64, c2: f64 },
    Gaussian { base: f64, amp: f64, width: f64 },
    Csv { path: PathBuf },
}

impl Profile {
    fn parse(text: &str) -> std::result::Result<Self, String> {
        let (kind, args) = text.split_once(':').ok_or_else(|| format!("profile {text:?} lacks a kind prefix"))?;
        let nums = || -> std::result::Result<Vec<f64>, String> {
            args.split(',').map(|a| parse_f64(a.trim())).collect()
        };
        let expect = |v: Vec<f64>, count: usize| {
            if v.len() == count {
                Ok(v)
            } else {
                Err(format!("profile {kind} takes {count} numbers, got {}", v.len()))
            }
        };
        match kind.trim() {
            "constant" => Ok(Profile::Constant { value: expect(nums()?, 1)?[0] }),
            "harmonic" => {
                let v = expect(nums()?, 2)?;
                Ok(Profile::Harmonic { c0: v[0], c2: v[1] })
            }
            "gaussian" => {
                let v = expect(nums()?, 3)?;
                if !(v[2] > 0.0) {
                    return Err(format!("gaussian width must be positive, got {}", v[2]));
                }
                Ok(Profile::Gaussian { base: v[0], amp: v[1], width: v[2] })
            }
            "csv" => Ok(Profile::Csv { path: PathBuf::from(args.trim()) }),
            other => Err(format!("unknown profile kind {other:?}")),
        }
    }

    pub fn render(&self) -> String {
        match self {
            Profile::Constant { value } => format!("constant:{value}"),
            Profile::Harmonic { c0, c2 } => format!("harmonic:{c0},{c2}"),
            Profile::Gaussian { base, amp, width } => format!("gaussian:{base},{amp},{width}"),
            Profile::Csv { path } => format!("csv:{}", path.display()),
        }
    }

    /// Samples the profile; relative CSV paths resolve against `base_dir`.
    pub fn sample(&self, grid: &Grid, base_dir: &Path) -> Result<Field> {
        let d = grid.dim();
        let r2 = |x: &[f64]| x.iter().take(d).map(|v| v * v).sum::<f64>();
        Ok(match self {
            Profile::Constant { value } => Field::constant(grid, *value),
            Profile::Harmonic { c0, c2 } => Field::from_fn(grid, |x| c0 + c2 * r2(x)),
            Profile::Gaussian { base, amp, width } => {
                Field::from_fn(grid, |x| base + amp * (-0.5 * r2(x) / (width * width)).exp())
            }
            Profile::Csv { path } => {
                let full = if path.is_absolute() { path.clone() } else { base_dir.join(path) };
                Field::read_csv(grid, BufReader::new(File::open(full)?))?
            }
        })
    }
}

fn parse_f64(text: &str) -> std::result::Result<f64, String> {
    let v: f64 = text.parse().map_err(|_| format!("expected a number, got {text:?}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a finite number, got {text:?}"))
    }
}

fn parse_nonlinearity(text: &str) -> std::result::Result<Nonlinearity, String> {
    let text = text.trim();
    match text.split_once(':') {
        None if text == "log_power" => Ok(Nonlinearity::LogPower),
        None if text == "linear" => Ok(Nonlinearity::linear()),
        Some(("power", e)) => Ok(Nonlinearity::power(parse_f64(e.trim())?)),
        Some(("power_sum", list)) => {
            let ps = list.split(',').map(|e| parse_f64(e.trim())).collect::<std::result::Result<Vec<_>, _>>()?;
            Nonlinearity::power_sum(ps).map_err(|e| e.to_string())
        }
        _ => Err(format!("unknown nonlinearity {text:?}; expected power:p, power_sum:p1,p2,.., log_power or linear")),
    }
}

/// How the working `λ` is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaChoice {
    Value(f64),
    /// Fraction of the estimated `λ*`.
    Fraction(f64),
}

/// Every knob of a run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub d: usize,
    pub n: usize,
    pub half_length: f64,
    pub s: f64,
    pub allow_any_s: bool,
    pub q: f64,
    pub p: f64,
    pub nonlinearity: String,
    pub lambda: LambdaChoice,
    pub potential: Profile,
    pub potential_bound: f64,
    pub weight_a: Profile,
    pub weight_b: Profile,
    pub b1_c0: f64,
    pub b1_alpha: f64,
    pub b1_r0: f64,
    pub fiber_field: Profile,
    pub fiber_t_min: f64,
    pub fiber_t_max: f64,
    pub fiber_count: usize,
    pub starts: usize,
    pub seed: u64,
    pub budget: usize,
    pub basis: usize,
    pub probes: usize,
    pub solve_starts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub samples: usize,
    pub t_max: f64,
    pub out: PathBuf,
    /// Directory against which relative CSV paths resolve.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "custom".into(),
            d: 1,
            n: 256,
            half_length: 6.0,
            s: 0.4,
            allow_any_s: false,
            q: 1.5,
            p: 4.0,
            nonlinearity: "power:4".into(),
            lambda: LambdaChoice::Fraction(0.5),
            potential: Profile::Constant { value: 1.0 },
            potential_bound: 0.0,
            weight_a: Profile::Constant { value: 1.0 },
            weight_b: Profile::Constant { value: 1.0 },
            b1_c0: 2.0,
            b1_alpha: 2.0,
            b1_r0: 0.0,
            fiber_field: Profile::Gaussian { base: 0.0, amp: 1.0, width: 1.5 },
            fiber_t_min: 1e-3,
            fiber_t_max: 1e2,
            fiber_count: 200,
            starts: 6,
            seed: 0,
            budget: 200,
            basis: 64,
            probes: 200,
            solve_starts: 3,
            max_iter: 4000,
            tol: 1e-10,
            samples: 400,
            t_max: 1e3,
            out: PathBuf::from("out"),
            base_dir: PathBuf::from("."),
        }
    }
}

const KEYS: [&str; 33] = [
    "name", "d", "n", "L", "s", "allow_any_s", "q", "p", "nonlinearity", "lambda", "lambda_fraction", "V", "B",
    "a", "b", "b1_c0", "b1_alpha", "b1_r0", "fiber_field", "fiber_t_min", "fiber_t_max", "fiber_count", "starts",
    "seed", "budget", "basis", "probes", "solve_starts", "max_iter", "tol", "samples", "t_max", "out",
];

impl ScenarioConfig {
    /// Parses a whole file; every line must be blank, a comment, or a known `key = value`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ScenarioConfig::default();
        let mut seen: BTreeMap<String, usize> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| Error::Config { line, message };
            let (key, value) = content.split_once('=').ok_or_else(|| err(format!("expected key = value, got {content:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(err(format!("unknown key {key:?}")));
            }
            if let Some(prev) = seen.insert(key.to_string(), line) {
                return Err(err(format!("duplicate key {key:?} (first set on line {prev})")));
            }
            cfg.set(key, value).map_err(err)?;
        }
        if seen.contains_key("lambda") && seen.contains_key("lambda_fraction") {
            let line = seen["lambda_fraction"].max(seen["lambda"]);
            return Err(Error::Config { line, message: "set either lambda or lambda_fraction, not both".into() });
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
        Ok(cfg)
    }

    pub fn bundled(name: &str) -> Result<Self> {
        Self::parse(bundled(name)?)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let int = |v: &str| v.parse::<usize>().map_err(|_| format!("expected a nonnegative integer, got {v:?}"));
        let flag = |v: &str| match v {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(format!("expected true or false, got {v:?}")),
        };
        match key {
            "name" => self.name = value.to_string(),
            "d" => self.d = int(value)?,
            "n" => self.n = int(value)?,
            "L" => self.half_length = parse_f64(value)?,
            "s" => self.s = parse_f64(value)?,
            "allow_any_s" => self.allow_any_s = flag(value)?,
            "q" => self.q = parse_f64(value)?,
            "p" => self.p = parse_f64(value)?,
            "nonlinearity" => {
                parse_nonlinearity(value)?;
                self.nonlinearity = value.to_string();
            }
            "lambda" => self.lambda = LambdaChoice::Value(parse_f64(value)?),
            "lambda_fraction" => self.lambda = LambdaChoice::Fraction(parse_f64(value)?),
            "V" => self.potential = Profile::parse(value)?,
            "B" => self.potential_bound = parse_f64(value)?,
            "a" => self.weight_a = Profile::parse(value)?,
            "b" => self.weight_b = Profile::parse(value)?,
            "b1_c0" => self.b1_c0 = parse_f64(value)?,
            "b1_alpha" => self.b1_alpha = parse_f64(value)?,
            "b1_r0" => self.b1_r0 = parse_f64(value)?,
            "fiber_field" => self.fiber_field = Profile::parse(value)?,
            "fiber_t_min" => self.fiber_t_min = parse_f64(value)?,
            "fiber_t_max" => self.fiber_t_max = parse_f64(value)?,
            "fiber_count" => self.fiber_count = int(value)?,
            "starts" => self.starts = int(value)?,
            "seed" => self.seed = value.parse().map_err(|_| format!("expected an unsigned integer, got {value:?}"))?,
            "budget" => self.budget = int(value)?,
            "basis" => self.basis = int(value)?,
            "probes" => self.probes = int(value)?,
            "solve_starts" => self.solve_starts = int(value)?,
            "max_iter" => self.max_iter = int(value)?,
            "tol" => self.tol = parse_f64(value)?,
            "samples" => self.samples = int(value)?,
            "t_max" => self.t_max = parse_f64(value)?,
            "out" => self.out = PathBuf::from(value),
            _ => unreachable!("key list and setter disagree on {key}"),
        }
        Ok(())
    }

    /// Canonical text listing every key; parsing it gives back an equal config.
    pub fn to_text(&self) -> String {
        let mut t = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(t, "{k} = {v}");
        };
        kv("name", self.name.clone());
        kv("d", self.d.to_string());
        kv("n", self.n.to_string());
        kv("L", self.half_length.to_string());
        kv("s", self.s.to_string());
        kv("allow_any_s", self.allow_any_s.to_string());
        kv("q", self.q.to_string());
        kv("p", self.p.to_string());
        kv("nonlinearity", self.nonlinearity.clone());
        match self.lambda {
            LambdaChoice::Value(v) => kv("lambda", v.to_string()),
            LambdaChoice::Fraction(f) => kv("lambda_fraction", f.to_string()),
        }
        kv("V", self.potential.render());
        kv("B", self.potential_bound.to_string());
        kv("a", self.weight_a.render());
        kv("b", self.weight_b.render());
        kv("b1_c0", self.b1_c0.to_string());
        kv("b1_alpha", self.b1_alpha.to_string());
        kv("b1_r0", self.b1_r0.to_string());
        kv("fiber_field", self.fiber_field.render());
        kv("fiber_t_min", self.fiber_t_min.to_string());
        kv("fiber_t_max", self.fiber_t_max.to_string());
        kv("fiber_count", self.fiber_count.to_string());
        kv("starts", self.starts.to_string());
        kv("seed", self.seed.to_string());
        kv("budget", self.budget.to_string());
        kv("basis", self.basis.to_string());
        kv("probes", self.probes.to_string());
        kv("solve_starts", self.solve_starts.to_string());
        kv("max_iter", self.max_iter.to_string());
        kv("tol", format!("{:e}", self.tol));
        kv("samples", self.samples.to_string());
        kv("t_max", self.t_max.to_string());
        kv("out", self.out.display().to_string());
        t
    }

    /// [`Self::to_text`] without the output directory, which does not affect results.
    pub fn run_text(&self) -> String {
        self.to_text().lines().filter(|l| !l.starts_with("out = ")).map(|l| format!("{l}\n")).collect()
    }

    pub fn grid(&self) -> Result<Grid> {
        build_grid(self.d, self.n, self.half_length, self.s, self.allow_any_s)
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity> {
        parse_nonlinearity(&self.nonlinearity).map_err(Error::InvalidParameter)
    }

    /// The problem at parameter `lambda`.
    pub fn spec_at(&self, lambda: f64) -> Result<ProblemSpec> {
        let grid = self.grid()?;
        let v = self.potential.sample(&grid, &self.base_dir)?;
        let a = self.weight_a.sample(&grid, &self.base_dir)?;
        let b = self.weight_b.sample(&grid, &self.base_dir)?;
        ProblemSpec::new(
            grid,
            self.q,
            self.p,
            lambda,
            v,
            self.potential_bound,
            a,
            b,
            self.nonlinearity()?,
            WeightBound { c0: self.b1_c0, alpha: self.b1_alpha, r0: self.b1_r0 },
        )
    }

    /// The problem at the configured `λ`, or at a placeholder when `λ` is a fraction of `λ*`.
    pub fn spec(&self) -> Result<ProblemSpec> {
        match self.lambda {
            LambdaChoice::Value(v) => self.spec_at(v),
            LambdaChoice::Fraction(_) => self.spec_at(1.0),
        }
    }

    /// Working `λ` given an estimate of `λ*`.
    pub fn resolve_lambda(&self, lambda_star_est: f64) -> f64 {
        match self.lambda {
            LambdaChoice::Value(v) => v,
            LambdaChoice::Fraction(f) => f * lambda_star_est,
        }
    }

    pub fn fiber_field(&self, grid: &Grid) -> Result<Field> {
        self.fiber_field.sample(grid, &self.base_dir)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_scenarios_parse_and_build() {
        for name in BUNDLED {
            let cfg = ScenarioConfig::bundled(name).unwrap();
            assert_eq!(cfg.name, name);
            let spec = cfg.spec().unwrap();
            assert_eq!(spec.grid.len(), 256);
            assert_eq!(ScenarioConfig::parse(&cfg.to_text()).unwrap(), cfg);
        }
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let bad = "d = 1\n\n# c\nfoo = 3\n";
        match ScenarioConfig::parse(bad) {
            Err(Error::Config { line, message }) => {
                assert_eq!(line, 4);
                assert!(message.contains("foo"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(ScenarioConfig::parse("n = x"), Err(Error::Config { line: 1, .. })));
        assert!(matches!(ScenarioConfig::parse("n = 8\nn = 16"), Err(Error::Config { line: 2, .. })));
        assert!(matches!(ScenarioConfig::parse("V = cubic:1"), Err(Error::Config { line: 1, .. })));
        assert!(matches!(ScenarioConfig::parse("just words"), Err(Error::Config { line: 1, .. })));
        assert!(matches!(ScenarioConfig::parse("lambda = 1\nlambda_fraction = 0.5"), Err(Error::Config { line: 2, .. })));
        assert!(matches!(ScenarioConfig::parse("nonlinearity = cubic"), Err(Error::Config { .. })));
    }

    #[test]
    fn profiles_sample() {
        let grid = Grid::new(1, 8, 2.0, 0.4).unwrap();
        let h = Profile::parse("harmonic:1,0.5").unwrap().sample(&grid, Path::new(".")).unwrap();
        assert_eq!(h.values()[0], 1.0 + 0.5 * 4.0);
        let g = Profile::parse("gaussian:1,2,1").unwrap().sample(&grid, Path::new(".")).unwrap();
        assert_eq!(g.values()[4], 3.0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.csv");
        h.write_csv(File::create(&path).unwrap()).unwrap();
        let text = "V = csv:v.csv\nn = 8\nL = 2\n";
        std::fs::write(dir.path().join("s.conf"), text).unwrap();
        let cfg = ScenarioConfig::from_file(&dir.path().join("s.conf")).unwrap();
        assert_eq!(cfg.spec_at(0.1).unwrap().potential, h);
    }
}
