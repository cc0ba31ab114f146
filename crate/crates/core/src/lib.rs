//! Nehari-manifold and nonlinear Rayleigh quotient methods for
//!
//! ```text
//! (-Δ)^s u + V(x) u = λ a(x) |u|^{q-2} u + b(x) f(u),   1 < q < 2,
//! ```
//!
//! discretized pseudospectrally on a periodic box.
//!
//! The pieces, from the bottom up:
//!
//! - [`grid`]: the lattice, the fractional Laplacian as a Fourier multiplier, quadrature;
//! - [`nonlinearity`], [`problem`]: the data of the equation and an audit of its hypotheses;
//! - [`functional`]: the energy `J_λ`, its variations and the preconditioned residual;
//! - [`fiber`]: the fiber maps `q_n`, `q_e`, their maximizers and the Nehari projections;
//! - [`extremal`]: multistart estimates of `λ*` and `λ_*`;
//! - [`solver`]: ground and bound states on `N⁺` and `N⁻`;
//! - [`scenario`], [`report`], [`verify`], [`cli`]: configuration, output and the invariant suite.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod extremal;
pub mod fiber;
pub mod functional;
pub mod grid;
pub mod nonlinearity;
pub mod problem;
pub mod report;
pub mod sampling;
pub mod scenario;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use extremal::{certify_gap, estimate_extremals, estimate_extremals_with, ExtremalEstimate, ExtremalOptions};
pub use fiber::{fiber_report, find_t_e, find_t_n, nehari_roots, rayleigh_e, rayleigh_n, sample_fiber, zero_energy_roots, FiberReport, FiberRoots, Ray};
pub use functional::{derivative_pairing, energy, evaluate, residual_field, second_derivative_diag, sobolev_gradient};
pub use grid::{apply_fractional_laplacian, build_grid, inner_product_v, integrate, Field, Grid};
pub use nonlinearity::Nonlinearity;
pub use problem::{check_hypotheses, HypothesisReport, ProblemSpec, WeightBound};
pub use scenario::ScenarioConfig;
pub use solver::{classify_trichotomy, solve_both, solve_bound, solve_branch, solve_ground, Branch, SolveOptions, SolveResult, Trichotomy};
