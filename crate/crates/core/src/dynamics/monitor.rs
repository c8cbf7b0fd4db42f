//! A-priori moment bounds evaluated on discrete trajectories.

use serde::Serialize;

use super::signal::{ControlSignal, Trajectory};
use crate::penalty::AdmissibleFunction;

#[derive(Debug, Clone, Serialize)]
pub struct MomentBoundReport {
    /// `(|x⃗(0)|_N + AT + ∫|u⃗|_N) e^{2BT}`.
    pub bound: f64,
    /// `sup_k |x⃗(t_k)|_N`.
    pub sup_moment: f64,
    pub worst_step: usize,
    /// `bound − sup_moment`.
    pub slack: f64,
    pub passed: bool,
}

/// Checks `sup_k |x⃗(t_k)|_N ≤ (|x⃗(0)|_N + AT + ∫₀^T |u⃗|_N) e^{2BT}` with the
/// control integral taken exactly for piecewise constants.
pub fn check_moment_bound(traj: &Trajectory, u: &ControlSignal, a: f64, b: f64) -> MomentBoundReport {
    let grid = traj.grid();
    let t = grid.horizon();
    let bound = (traj.mean_norm(0) + a * t + u.l1_norm(grid)) * (2.0 * b * t).exp();
    let (worst_step, sup_moment) = (0..=grid.steps())
        .map(|k| (k, traj.mean_norm(k)))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    let slack = bound - sup_moment;
    MomentBoundReport {
        bound,
        sup_moment,
        worst_step,
        slack,
        passed: slack >= -1e-9,
    }
}

/// Data entering the constant of the `θ`-moment estimate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ThetaMomentInputs {
    pub growth_a: f64,
    pub growth_b: f64,
    /// Normalized cost `ℰ` of the controlled trajectory; bounds
    /// `(1/T)∫ (1/N)Σ ψ(u_i)`.
    pub energy: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThetaMomentReport {
    /// Linear-growth constant `M` with `|F + …| ≤ M(1 + |x|)` along the flow.
    pub field_constant: f64,
    /// Gronwall rate `2MK + K`.
    pub rate: f64,
    /// `C` in `sup_t ∫θ dμ_t ≤ C(1 + ∫θ dμ₀)`.
    pub constant: f64,
    pub initial_moment: f64,
    pub sup_moment: f64,
    /// `sup_moment / (1 + initial_moment)`, to be compared with `constant`.
    pub ratio: f64,
    pub passed: bool,
}

/// Checks `sup_k (1/N)Σ θ(|x_i(t_k)|) ≤ C (1 + (1/N)Σ θ(|x_i(0)|))`.
///
/// The constant follows the Gronwall argument for the `θ`-moment: with `M`
/// from the first-moment bound, `K` the doubling constant of `θ` and
/// `c₀ = 2MK(1 + θ(1)) + ℰ + 1 + K`, one gets
/// `C = e^{(2MK + K)T} (1 + c₀T)`. It presumes `θ(|u|) ≤ 1 + ψ(u)`.
pub fn check_theta_moment(
    traj: &Trajectory,
    u: &ControlSignal,
    theta: &AdmissibleFunction,
    inputs: ThetaMomentInputs,
) -> ThetaMomentReport {
    let grid = traj.grid();
    let t = grid.horizon();
    let (a, b) = (inputs.growth_a, inputs.growth_b);
    let first = (traj.mean_norm(0) + a * t + u.l1_norm(grid)) * (2.0 * b * t).exp();
    let field_constant = b.max(a + b * first);
    let k = theta.doubling_constant();
    let rate = 2.0 * field_constant * k + k;
    let c0 = 2.0 * field_constant * k * (1.0 + theta.eval(1.0)) + inputs.energy + 1.0 + k;
    let constant = (rate * t).exp() * (1.0 + c0 * t);
    let initial_moment = traj.mean_of(0, |r| theta.eval(r));
    let sup_moment = (0..=grid.steps())
        .map(|k| traj.mean_of(k, |r| theta.eval(r)))
        .fold(f64::NEG_INFINITY, f64::max);
    let ratio = sup_moment / (1.0 + initial_moment);
    ThetaMomentReport {
        field_constant,
        rate,
        constant,
        initial_moment,
        sup_moment,
        ratio,
        passed: ratio <= constant,
    }
}
