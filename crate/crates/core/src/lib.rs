//! Numerical laboratory for positive solutions of the sublinear Choquard
//! equation `-Δu + u = I_α[u^p] u^q` in `ℝ^N \ {0}` with an isolated
//! singularity at the origin.
//!
//! The crate is organised bottom-up:
//!
//! * [`exponents`]: exponent bookkeeping: bootstrap sequence, region
//!   classification, predicted decay laws.
//! * [`grid`]: log-spaced radial grids, quadrature and power-law fits.
//! * [`green`]: the Yukawa fundamental solution and the Green operator of
//!   `-Δ + 1` on radial data.
//! * [`riesz`]: radial Riesz potentials through a precomputed angular kernel.
//! * [`solver`]: supersolutions, the monotone iteration, the `k*` bracket and
//!   the nonexistence probe.
//! * [`analysis`]: fits of computed profiles against the singular and decay
//!   laws.
//! * [`verify`]: seeded property suites used by the command-line front end.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod cache;
mod error;
pub mod exponents;
pub mod green;
pub mod grid;
pub mod io;
pub mod quadrature;
pub mod riesz;
pub mod solver;
pub mod special;
pub mod tridiag;
pub mod verify;

pub use error::{Error, Result};
pub use exponents::{
    classify, predicted_decay, tau0, tau_sequence, DecayPrediction, PrefactorRule, ProblemParams,
    RegionVerdict, TauSequence, Verdict,
};
pub use green::FundamentalSolution;
pub use grid::{make_grid, OriginModel, RadialFunction, RadialGrid, TailModel};
pub use riesz::AngularKernel;
pub use solver::{IterateOptions, SolveResult, SolveVerdict, Workspace};
