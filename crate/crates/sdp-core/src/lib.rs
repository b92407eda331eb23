//! A self-contained dense solver for small semidefinite programs in linear
//! matrix inequality form:
//!
//! ```text
//! minimize    cᵀy
//! subject to  F₀ᵏ + Σᵢ yᵢ Fᵢᵏ ⪰ 0   for each symmetric block k
//! ```
//!
//! The solver is a two-phase log-barrier method with damped Newton centering,
//! sized for problems with a handful of blocks of dimension ≲ 12 and a few
//! dozen scalar variables. It favors robustness and determinism over speed:
//! no sparsity, no warm starts, no randomized pivoting.
//!
//! The symmetric eigenvalue routine ([`sym_eig`], cyclic Jacobi) backs every
//! certificate check and is exposed for callers that want to re-verify
//! solutions independently of the solver's internal state.

mod eig;
mod error;
mod problem;
mod solver;

pub use eig::{min_eig, sym_eig};
pub use error::SdpError;
pub use problem::{SdpBlock, SdpProblem};
pub use solver::{solve, SdpSolution, SolveOptions, SolveStatus, StageStat};
