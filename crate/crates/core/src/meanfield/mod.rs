//! Behaviour of finite-agent optima as the number of agents grows:
//! quantization of the initial measure, sweeps over `N`, weak-form residuals
//! of the continuity equation, control measures and trajectory bundles.

mod bundle;
mod quantize;
mod residual;
mod sweep;

pub use bundle::{
    superposition_check, weakstar_pairing, ControlAtom, ControlMeasure, SuperpositionFailure,
    SuperpositionReport, TrajectoryBundle,
};
pub use quantize::{grid_shape, hammersley_ranks, lattice_generator, quantize, Coupling, InitialMeasureSpec};
pub use residual::{continuity_residual, default_dictionary, ResidualReport, TestFunction};
pub use sweep::{
    gamma_sweep, lift_controls, sample_nodes, GammaSweepResult, SweepConfig, SweepRecord,
    SweepTemplate, WarmStart,
};
