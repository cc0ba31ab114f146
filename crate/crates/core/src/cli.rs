//! The `nehari` command line: `hypotheses`, `fiber`, `extremal`, `solve`, `verify`.
//!
//! Exit codes: 0 success, 1 hypothesis or validation failure, 2 solver
//! non-convergence. Errors are printed to stderr as one JSON object.

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extremal::{certify_gap, estimate_extremals_with, ExtremalEstimate, ExtremalOptions, GapCertificate};
use crate::fiber::{fiber_report, sample_fiber, FiberReport};
use crate::problem::{check_hypotheses, HypothesisReport, ProblemSpec};
use crate::report::{to_json, write_json, Report};
use crate::scenario::{LambdaChoice, ScenarioConfig};
use crate::solver::{check_validity, label_result, solve_bound, solve_ground, SolveOptions, SolveResult, TrichotomyCheck};
use crate::verify::{verify_scenario, VerifyReport};

#[derive(Parser, Debug)]
#[command(name = "nehari", version, about = "Nehari-manifold solver for the fractional Schrödinger equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file (`key = value` lines).
    #[arg(long, global = true, conflicts_with = "scenario")]
    config: Option<PathBuf>,
    /// Bundled scenario: power, power_sum or log_power (default power).
    #[arg(long, global = true)]
    scenario: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of starts for the extremal search and for each solve.
    #[arg(long, global = true)]
    starts: Option<usize>,
    /// Output directory for report.json and CSV files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Leave the timestamp out of reports so reruns are byte-identical.
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// Accept fractional orders outside (0, min(1, d/2)).
    #[arg(long, global = true)]
    allow_any_s: bool,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Sample the structural hypotheses on the nonlinearity and the coefficients.
    Hypotheses,
    /// Fiber maps, maximizers and projections of the scenario's probe field.
    Fiber,
    /// Estimate the extremal parameters and audit them with random probes.
    Extremal,
    /// Ground state on N⁺ and bound state on N⁻ at the scenario's λ.
    Solve,
    /// Run every invariant check and print a pass/fail table.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Hypotheses => "hypotheses",
            Command::Fiber => "fiber",
            Command::Extremal => "extremal",
            Command::Solve => "solve",
            Command::Verify => "verify",
        }
    }
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::RootLoss { .. } | Error::AllStartsFailed { .. } | Error::BracketFailure { .. } => 2,
        _ => 1,
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'static str,
    message: String,
    exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    line: Option<usize>,
    command: &'a str,
}

fn error_json(e: &Error, command: &str) -> String {
    let (lambda, lambda_star) = match e {
        Error::AboveExtremal { lambda, lambda_star } => (Some(*lambda), Some(*lambda_star)),
        _ => (None, None),
    };
    let line = match e {
        Error::Config { line, .. } => Some(*line),
        _ => None,
    };
    let report = ErrorReport { error: e.kind(), message: e.to_string(), exit_code: exit_code(e), lambda, lambda_star, line, command };
    serde_json::to_string(&report).unwrap_or_else(|_| format!("{{\"error\":\"{}\"}}", e.kind()))
}

struct Run {
    cfg: ScenarioConfig,
    out: PathBuf,
    stamp: bool,
}

impl Run {
    fn report<T: Serialize>(&self, command: Command, result: T) -> Result<String> {
        let report = Report::new(command.name(), &self.cfg.name, self.cfg.run_text(), self.stamp, result);
        std::fs::create_dir_all(&self.out)?;
        write_json(&self.out.join("report.json"), &report)?;
        Ok(to_json(&report))
    }

    fn path(&self, file: &str) -> PathBuf {
        self.out.join(file)
    }

    fn extremals(&self, spec: &ProblemSpec) -> Result<ExtremalEstimate> {
        let c = &self.cfg;
        estimate_extremals_with(spec, &ExtremalOptions { starts: c.starts, seed: c.seed, budget: c.budget, basis_size: c.basis })
    }
}

fn write_field(path: &Path, u: &crate::grid::Field) -> Result<()> {
    u.write_csv(BufWriter::new(File::create(path)?))?;
    Ok(())
}

#[derive(Serialize)]
struct FiberOutput {
    lambda: f64,
    field: String,
    report: FiberReport,
    csv: &'static str,
}

#[derive(Serialize)]
struct ExtremalOutput {
    estimate: ExtremalEstimate,
    certificate: GapCertificate,
    argmin_n_csv: &'static str,
    argmin_e_csv: &'static str,
}

#[derive(Serialize)]
struct SolveOutput {
    #[serde(flatten)]
    result: SolveResult,
    field_csv_path: &'static str,
}

#[derive(Serialize)]
struct SolvePair {
    lambda: f64,
    lambda_star_est: f64,
    lambda_substar_est: f64,
    ground: SolveOutput,
    bound: SolveOutput,
    trichotomy: TrichotomyCheck,
    energy_ordering: bool,
}

/// `(stdout text, exit code)` of one command.
fn execute(command: Command, run: &Run) -> Result<(String, i32)> {
    let cfg = &run.cfg;
    match command {
        Command::Hypotheses => {
            let spec = cfg.spec()?;
            let report: HypothesisReport = check_hypotheses(&spec, cfg.samples, cfg.t_max)?;
            let code = if report.all_required_pass() { 0 } else { 1 };
            Ok((run.report(command, &report)?, code))
        }
        Command::Fiber => {
            let base = cfg.spec()?;
            let lambda = match cfg.lambda {
                LambdaChoice::Value(v) => v,
                LambdaChoice::Fraction(_) => cfg.resolve_lambda(run.extremals(&base)?.lambda_star),
            };
            let spec = base.with_lambda(lambda)?;
            let u = cfg.fiber_field(&spec.grid)?;
            let report = fiber_report(&spec, &u, lambda)?;
            let table = sample_fiber(&spec, &u, cfg.fiber_t_min, cfg.fiber_t_max, cfg.fiber_count)?;
            std::fs::create_dir_all(&run.out)?;
            table.write_csv(BufWriter::new(File::create(run.path("fiber.csv"))?))?;
            write_field(&run.path("field_fiber.csv"), &u)?;
            let out = FiberOutput { lambda, field: cfg.fiber_field.render(), report, csv: "fiber.csv" };
            Ok((run.report(command, out)?, 0))
        }
        Command::Extremal => {
            let spec = cfg.spec()?;
            let mut estimate = run.extremals(&spec)?;
            let certificate = certify_gap(&spec, &mut estimate, cfg.probes, cfg.seed)?;
            std::fs::create_dir_all(&run.out)?;
            write_field(&run.path("field_argmin_n.csv"), &estimate.argmin_n)?;
            write_field(&run.path("field_argmin_e.csv"), &estimate.argmin_e)?;
            let code = if estimate.converged && certificate.passed { 0 } else { 2 };
            let out = ExtremalOutput {
                estimate,
                certificate,
                argmin_n_csv: "field_argmin_n.csv",
                argmin_e_csv: "field_argmin_e.csv",
            };
            Ok((run.report(command, out)?, code))
        }
        Command::Solve => {
            let base = cfg.spec()?;
            let est = run.extremals(&base)?;
            let lambda = cfg.resolve_lambda(est.lambda_star);
            check_validity(lambda, est.lambda_star)?;
            let spec = base.with_lambda(lambda)?;
            let mut opts = SolveOptions::new(est.lambda_star);
            opts.max_iter = cfg.max_iter;
            opts.tol = cfg.tol;
            let ground = solve_ground(&spec, cfg.solve_starts, cfg.seed, &opts)?;
            let mut bound = solve_bound(&spec, cfg.solve_starts, cfg.seed, &opts)?;
            let trichotomy = label_result(&spec, &mut bound, &est);
            std::fs::create_dir_all(&run.out)?;
            write_field(&run.path("field_ground.csv"), &ground.u)?;
            write_field(&run.path("field_bound.csv"), &bound.u)?;
            let converged = ground.converged && bound.converged;
            let energy_ordering = ground.j < bound.j;
            let out = SolvePair {
                lambda,
                lambda_star_est: est.lambda_star,
                lambda_substar_est: est.lambda_substar,
                ground: SolveOutput { result: ground, field_csv_path: "field_ground.csv" },
                bound: SolveOutput { result: bound, field_csv_path: "field_bound.csv" },
                trichotomy,
                energy_ordering,
            };
            let code = if !converged { 2 } else if !energy_ordering { 1 } else { 0 };
            Ok((run.report(command, out)?, code))
        }
        Command::Verify => {
            let report: VerifyReport = verify_scenario(cfg)?;
            let code = if report.all_pass() { 0 } else { 1 };
            let table = report.table();
            run.report(command, &report)?;
            Ok((table, code))
        }
    }
}

fn load(cli: &Cli) -> Result<Run> {
    let mut cfg = match (&cli.config, &cli.scenario) {
        (Some(path), _) => ScenarioConfig::from_file(path)?,
        (None, Some(name)) => ScenarioConfig::bundled(name)?,
        (None, None) => ScenarioConfig::bundled("power")?,
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(starts) = cli.starts {
        cfg.starts = starts;
        cfg.solve_starts = starts;
    }
    if cli.allow_any_s {
        cfg.allow_any_s = true;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    let out = cfg.out.clone();
    Ok(Run { cfg, out, stamp: !cli.no_timestamp })
}

/// Parses `argv`, runs the command, prints its output and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let command = cli.command;
    match load(&cli).and_then(|run| execute(command, &run)) {
        Ok((text, code)) => {
            print!("{text}");
            code
        }
        Err(e) => {
            eprintln!("{}", error_json(&e, command.name()));
            exit_code(&e)
        }
    }
}
