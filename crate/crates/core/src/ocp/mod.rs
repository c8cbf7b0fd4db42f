//! Direct transcription of the finite-agent control problem: piecewise
//! constant controls are the decision variables, the value is the discrete
//! cost of the RK4 rollout and its gradient comes from an exact reverse sweep.

mod adjoint;
mod lbfgs;

use std::fmt;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::{finite_cost, CostReport, Quadrature, RunningCost};
use crate::dynamics::{ControlSignal, InteractionModel, TimeGrid, Trajectory};
use crate::penalty::ModeratedPenalty;
use crate::{Error, Result};

pub use lbfgs::{solve, IterationRecord, Solution, SolverConfig, Status};

/// A finite-agent problem: model, initial cohort `x0` (`N × d`), grid,
/// running cost and control penalty.
#[derive(Clone)]
pub struct OcpSpec {
    pub model: InteractionModel,
    pub x0: Vec<f64>,
    pub grid: TimeGrid,
    pub running: Arc<dyn RunningCost>,
    pub penalty: ModeratedPenalty,
    pub quadrature: Quadrature,
}

impl fmt::Debug for OcpSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OcpSpec")
            .field("model", &self.model)
            .field("agents", &self.agents())
            .field("grid", &self.grid)
            .field("running", &self.running.name())
            .field("penalty", &self.penalty.name())
            .field("quadrature", &self.quadrature)
            .finish()
    }
}

fn same_basis(a: &crate::Subspace, b: &crate::Subspace) -> bool {
    a.ambient_dim() == b.ambient_dim()
        && a.dim() == b.dim()
        && a.basis()
            .iter()
            .zip(b.basis())
            .all(|(u, v)| u.iter().zip(v).all(|(x, y)| (x - y).abs() <= 1e-12))
}

impl OcpSpec {
    pub fn new(
        model: InteractionModel,
        x0: Vec<f64>,
        grid: TimeGrid,
        running: Arc<dyn RunningCost>,
        penalty: ModeratedPenalty,
    ) -> Result<Self> {
        let d = model.dim();
        if x0.is_empty() || x0.len() % d != 0 {
            return Err(Error::InvalidInput(format!(
                "initial state of length {} is not N × {d}",
                x0.len()
            )));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("initial state".into()));
        }
        if !same_basis(penalty.subspace(), model.subspace()) {
            return Err(Error::InvalidInput(
                "penalty subspace differs from the model's control subspace".into(),
            ));
        }
        Ok(Self {
            model,
            x0,
            grid,
            running,
            penalty,
            quadrature: Quadrature::default(),
        })
    }

    pub fn with_quadrature(mut self, quadrature: Quadrature) -> Self {
        self.quadrature = quadrature;
        self
    }

    pub fn with_grid(mut self, grid: TimeGrid) -> Self {
        self.grid = grid;
        self
    }

    pub fn agents(&self) -> usize {
        self.x0.len() / self.model.dim()
    }

    pub fn control_dim(&self) -> usize {
        self.model.subspace().dim()
    }

    pub fn zero_control(&self) -> ControlSignal {
        ControlSignal::zeros(self.grid.steps(), self.agents(), self.control_dim())
    }

    /// Factor turning a raw coordinate gradient into the sampled function-space
    /// gradient of the normalized cost: `M·N` (value carries `Δt/T · 1/N`).
    pub fn gradient_scale(&self) -> f64 {
        (self.grid.steps() * self.agents()) as f64
    }

    pub(crate) fn check_control(&self, u: &ControlSignal) -> Result<()> {
        if u.steps() != self.grid.steps() || u.agents() != self.agents() || u.dim() != self.control_dim() {
            return Err(Error::InvalidInput(format!(
                "control of shape {}×{}×{} for a problem of shape {}×{}×{}",
                u.steps(),
                u.agents(),
                u.dim(),
                self.grid.steps(),
                self.agents(),
                self.control_dim()
            )));
        }
        Ok(())
    }

    /// Agents reordered: agent `i` of the result is agent `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let d = self.model.dim();
        let x0 = perm.iter().flat_map(|&p| self.x0[p * d..(p + 1) * d].to_vec()).collect();
        Self { x0, ..self.clone() }
    }

    pub fn rollout(&self, u: &ControlSignal) -> Result<Trajectory> {
        Ok(adjoint::rollout(self, u)?.traj)
    }

    pub fn cost_report(&self, u: &ControlSignal) -> Result<CostReport> {
        let traj = self.rollout(u)?;
        finite_cost(&traj, u, self.running.as_ref(), &self.penalty, self.quadrature)
    }
}

/// Discrete value and its exact gradient with respect to every control
/// coordinate.
pub fn cost_and_gradient(spec: &OcpSpec, u: &ControlSignal) -> Result<(f64, ControlSignal)> {
    let ro = adjoint::rollout(spec, u)?;
    let g = adjoint::gradient(spec, u, &ro);
    Ok((ro.value(), ControlSignal::new(u.steps(), u.agents(), u.dim(), g)?))
}

pub fn cost(spec: &OcpSpec, u: &ControlSignal) -> Result<f64> {
    Ok(adjoint::rollout(spec, u)?.value())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FdProbe {
    pub index: usize,
    pub adjoint: f64,
    pub finite_difference: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FdCheckReport {
    pub step: f64,
    pub probes: Vec<FdProbe>,
    pub max_relative_error: f64,
}

/// Compares the adjoint gradient with central differences of step `step` on
/// `n_probes` distinct seeded coordinates. The relative error uses
/// `max(|adjoint|, |fd|, 1e-8)` as denominator.
pub fn fd_gradient_check(
    spec: &OcpSpec,
    u: &ControlSignal,
    step: f64,
    n_probes: usize,
    seed: u64,
) -> Result<FdCheckReport> {
    if !(step > 0.0) {
        return Err(Error::InvalidInput(format!("step must be > 0, got {step}")));
    }
    let (_, grad) = cost_and_gradient(spec, u)?;
    let len = u.values().len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = sample(&mut rng, len, n_probes.min(len)).into_vec();
    let mut probes = Vec::with_capacity(picks.len());
    let mut work = u.clone();
    for index in picks {
        let base = u.values()[index];
        work.values_mut()[index] = base + step;
        let plus = cost(spec, &work)?;
        work.values_mut()[index] = base - step;
        let minus = cost(spec, &work)?;
        work.values_mut()[index] = base;
        let fd = (plus - minus) / (2.0 * step);
        let adj = grad.values()[index];
        let relative_error = (adj - fd).abs() / adj.abs().max(fd.abs()).max(1e-8);
        probes.push(FdProbe {
            index,
            adjoint: adj,
            finite_difference: fd,
            relative_error,
        });
    }
    let max_relative_error = probes.iter().map(|p| p.relative_error).fold(0.0, f64::max);
    Ok(FdCheckReport {
        step,
        probes,
        max_relative_error,
    })
}
