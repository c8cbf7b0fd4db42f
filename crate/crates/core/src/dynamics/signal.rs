use serde::{Deserialize, Serialize};

use crate::transport::EmpiricalMeasure;
use crate::{Error, Result, Subspace};

/// Uniform grid `t_k = kT/M` on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidInput(format!("horizon must be > 0, got {horizon}")));
        }
        if steps == 0 {
            return Err(Error::InvalidInput("at least one time step is required".into()));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        self.horizon * k as f64 / self.steps as f64
    }

    pub fn refined(&self, factor: usize) -> Self {
        Self {
            horizon: self.horizon,
            steps: self.steps * factor,
        }
    }
}

/// Piecewise-constant controls, `M × N × m` coordinates in the basis of `U`;
/// `values[(k·N + i)·m + c]` holds coordinate `c` of agent `i` on
/// `[t_k, t_{k+1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSignal {
    steps: usize,
    agents: usize,
    dim: usize,
    values: Vec<f64>,
}

impl ControlSignal {
    pub fn new(steps: usize, agents: usize, dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != steps * agents * dim {
            return Err(Error::DimensionMismatch {
                expected: steps * agents * dim,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("control values".into()));
        }
        Ok(Self {
            steps,
            agents,
            dim,
            values,
        })
    }

    pub fn zeros(steps: usize, agents: usize, dim: usize) -> Self {
        Self {
            steps,
            agents,
            dim,
            values: vec![0.0; steps * agents * dim],
        }
    }

    pub fn constant(steps: usize, agents: usize, value: &[f64]) -> Self {
        let values = (0..steps * agents).flat_map(|_| value.iter().copied()).collect();
        Self {
            steps,
            agents,
            dim: value.len(),
            values,
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, k: usize, i: usize) -> &[f64] {
        let s = (k * self.agents + i) * self.dim;
        &self.values[s..s + self.dim]
    }

    /// All agents on interval `k`, `N × m`.
    pub fn step(&self, k: usize) -> &[f64] {
        let w = self.agents * self.dim;
        &self.values[k * w..(k + 1) * w]
    }

    /// Interval `k` embedded in `ℝ^d`, `N × d`.
    pub fn embedded_step(&self, k: usize, subspace: &Subspace) -> Vec<f64> {
        let d = subspace.ambient_dim();
        let mut out = vec![0.0; self.agents * d];
        for i in 0..self.agents {
            subspace.embed_into(self.get(k, i), &mut out[i * d..(i + 1) * d]);
        }
        out
    }

    /// `|u⃗(t)|_N = (1/N) Σ |u_i(t)|` on interval `k`.
    pub fn mean_norm(&self, k: usize) -> f64 {
        (0..self.agents)
            .map(|i| self.get(k, i).iter().map(|v| v * v).sum::<f64>().sqrt())
            .sum::<f64>()
            / self.agents as f64
    }

    /// `∫₀^T |u⃗(s)|_N ds`, exact for piecewise constants.
    pub fn l1_norm(&self, grid: &TimeGrid) -> f64 {
        grid.dt() * (0..self.steps).map(|k| self.mean_norm(k)).sum::<f64>()
    }

    /// Reorders agents: agent `i` of the result is agent `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut values = Vec::with_capacity(self.values.len());
        for k in 0..self.steps {
            for &p in perm {
                values.extend_from_slice(self.get(k, p));
            }
        }
        Self { values, ..*self }
    }
}

/// States at the grid nodes, `(M+1) × N × d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    grid: TimeGrid,
    agents: usize,
    dim: usize,
    states: Vec<f64>,
}

impl Trajectory {
    pub fn new(grid: TimeGrid, agents: usize, dim: usize, states: Vec<f64>) -> Result<Self> {
        let expected = (grid.steps() + 1) * agents * dim;
        if states.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: states.len(),
            });
        }
        Ok(Self {
            grid,
            agents,
            dim,
            states,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    /// All agents at node `k`, `N × d`.
    pub fn at(&self, k: usize) -> &[f64] {
        let w = self.agents * self.dim;
        &self.states[k * w..(k + 1) * w]
    }

    pub fn agent(&self, k: usize, i: usize) -> &[f64] {
        let s = (k * self.agents + i) * self.dim;
        &self.states[s..s + self.dim]
    }

    pub fn initial(&self) -> &[f64] {
        self.at(0)
    }

    pub fn terminal(&self) -> &[f64] {
        self.at(self.grid.steps())
    }

    pub fn empirical(&self, k: usize) -> EmpiricalMeasure {
        EmpiricalMeasure::new(self.dim, self.at(k).to_vec()).expect("trajectory states are finite")
    }

    /// `|x⃗(t_k)|_N = (1/N) Σ |x_i(t_k)|`.
    pub fn mean_norm(&self, k: usize) -> f64 {
        self.mean_of(k, |r| r)
    }

    /// `(1/N) Σ θ(|x_i(t_k)|)`.
    pub fn mean_of(&self, k: usize, theta: impl Fn(f64) -> f64) -> f64 {
        (0..self.agents)
            .map(|i| theta(self.agent(k, i).iter().map(|v| v * v).sum::<f64>().sqrt()))
            .sum::<f64>()
            / self.agents as f64
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut states = Vec::with_capacity(self.states.len());
        for k in 0..=self.grid.steps() {
            for &p in perm {
                states.extend_from_slice(self.agent(k, p));
            }
        }
        Self { states, ..*self }
    }
}
