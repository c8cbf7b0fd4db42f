//! Interaction models, the controlled agent system and its RK4 integration.
//!
//! States are stored flat: agent `i` of an `N × d` array occupies
//! `[i·d, (i+1)·d)`. Second-order models use `x = (q, p)` with positions
//! first.

mod integrate;
pub mod kernel;
mod model;
mod monitor;
mod signal;

pub use integrate::integrate;
pub(crate) use integrate::{rk4_step, Rk4Workspace};
pub use kernel::{AlignmentPotential, Kernel};
pub use model::{GrowthReport, InteractionModel, Structure};
pub use monitor::{
    check_moment_bound, check_theta_moment, MomentBoundReport, ThetaMomentInputs,
    ThetaMomentReport,
};
pub use signal::{ControlSignal, TimeGrid, Trajectory};
