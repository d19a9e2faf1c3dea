//! Sparse-grid function approximation on `[0, 1]^d` and compilation of the
//! resulting interpolants into explicit deep ReLU networks.
//!
//! The library is organized around three layers:
//!
//! - **Grids.** [`basis1d`] provides dyadic grids and the piecewise-linear
//!   hierarchical hat basis in one dimension; [`sparse_grid`] tensorizes it,
//!   enumerates sparse (`|l|_1 <= n + d - 1`) and full (`|l|_inf <= n`) index
//!   sets, computes hierarchical-surplus coefficients, and measures sup-norm
//!   interpolation errors.
//! - **Networks.** [`relu_ir`] is a small feedforward-network representation
//!   (affine layers with per-unit relu-or-identity activation) with an exact
//!   evaluator, structural combinators, and JSON serialization.
//!   [`constructions`] builds the networks themselves: exact two-layer hat
//!   nets, sawtooth squaring nets, accuracy-budgeted multiplication nets with
//!   the zero-in-zero-out property, binary-tree product nets, and the full
//!   compiled network whose linear readout carries the grid coefficients.
//! - **Studies.** [`harness`] holds the registered test functions with their
//!   analytic smoothness data, grid-convergence and network-scaling studies,
//!   log-log slope fitting, and the self-test driver used by the CLI.
//!
//! Interpolants and networks are immutable once constructed and safe to
//! evaluate concurrently. All on-disk artifacts are deterministic: terms are
//! ordered by `(|l|_1, l, i)` and floating-point numbers are emitted with 17
//! significant digits so that round-trips are bit-exact.

pub mod basis1d;
pub mod constructions;
pub mod harness;
pub mod relu_ir;
pub mod sparse_grid;

mod error;
mod jsonfmt;

pub use error::{Error, Result};
