//! State and crossover-flux observation for disproportionation redox flow
//! batteries.
//!
//! The crate covers the full chain from plant model to running observer:
//!
//! - [`battery`]: isothermal lumped-parameter plant, Nernst output map and
//!   its inverse, fixed-step RK4 simulation.
//! - [`augment`]: integrator-chain crossover model, augmented state-space
//!   matrices, diagonal similarity transformation and the flow-rate polytope.
//! - [`synth`]: observer gain synthesis as a polytopic matrix-inequality
//!   program solved through the dense SDP solver in `sdp-core`, with
//!   certificate verification and residual-set diagnostics.
//! - [`observer`]: augmented observer execution against measurement streams
//!   and estimation-error metrics.
//! - [`batch`]: sequential/parallel mapping used by verification grids and
//!   sweep runs (rayon behind the `parallel` feature, on by default).

pub mod augment;
pub mod batch;
pub mod battery;
pub mod observer;
pub mod synth;

pub use sdp_core;
