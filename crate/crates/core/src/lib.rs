//! Numerical laboratory for finite-agent optimal control of interacting
//! particle systems and the behaviour of its minimizers as the number of
//! agents grows.
//!
//! The crate is organised bottom-up:
//!
//! - [`penalty`]: admissible (doubling) functions and moderated convex control
//!   penalties, with grid certification, Fenchel conjugates and
//!   inf-convolution approximations.
//! - [`transport`]: exact discrete optimal transport (assignment, general
//!   transportation, generalized ground costs) and moments.
//! - [`dynamics`]: kernel interaction models, the controlled agent system, RK4
//!   integration and a-priori moment monitors.
//! - [`cost`]: the finite cost functional, the grouped measure penalty and the
//!   Jensen gap between them.
//! - [`ocp`]: direct transcription with exact discrete adjoint gradients and a
//!   limited-memory quasi-Newton solver.
//! - [`meanfield`]: quantization of initial measures, sweeps over the number
//!   of agents, weak-form continuity residuals, control measures and trajectory
//!   bundles.

pub mod cost;
pub mod dynamics;
mod error;
pub mod meanfield;
pub mod ocp;
pub mod penalty;
pub mod subspace;
pub mod transport;

pub use error::{Error, Result};
pub use subspace::Subspace;
