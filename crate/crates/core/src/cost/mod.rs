//! The finite cost functional, the grouped measure penalty `Ψ(ν|μ)` and the
//! Jensen gap between the per-agent and grouped penalties.

mod running;

pub use running::{RunningCost, TrackingCost, VarianceCost, ZeroCost};

use serde::{Deserialize, Serialize};

use crate::dynamics::{ControlSignal, TimeGrid, Trajectory};
use crate::penalty::ModeratedPenalty;
use crate::{Error, Result};

/// Time quadrature for the running term. The penalty term is always exact
/// for piecewise-constant controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    /// `Δt/2` at both end nodes, `Δt` inside.
    #[default]
    Trapezoid,
    /// `Δt` on nodes `0..M`, the terminal node unweighted.
    LeftEndpoint,
}

impl Quadrature {
    /// Node weights of the normalized time average `(1/T)∫ … dt`, length
    /// `M + 1`.
    pub fn weights(self, grid: &TimeGrid) -> Vec<f64> {
        let m = grid.steps();
        let w = 1.0 / m as f64;
        let mut out = vec![w; m + 1];
        match self {
            Self::Trapezoid => {
                out[0] *= 0.5;
                out[m] *= 0.5;
            }
            Self::LeftEndpoint => out[m] = 0.0,
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostReport {
    /// `(1/T)∫ (1/N)Σ L(x_i, μ_t) dt`.
    pub running_term: f64,
    /// `(1/T)∫ (1/N)Σ ψ(u_i) dt`.
    pub penalty_term: f64,
    pub total: f64,
    /// Same as `penalty_term`; kept next to `measure_penalty` for comparison.
    pub per_agent_penalty_mean: f64,
    /// `(1/T)∫ Ψ(ν_t|μ_t) dt` with coincident agents grouped.
    pub measure_penalty: f64,
    pub jensen_gap: f64,
}

pub(crate) fn check_penalty_dim(u: &ControlSignal, psi: &ModeratedPenalty) -> Result<()> {
    if u.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: psi.dim(),
            found: u.dim(),
        });
    }
    Ok(())
}

/// Evaluates the finite cost of a controlled trajectory.
pub fn finite_cost(
    traj: &Trajectory,
    u: &ControlSignal,
    running: &dyn RunningCost,
    psi: &ModeratedPenalty,
    quadrature: Quadrature,
) -> Result<CostReport> {
    check_penalty_dim(u, psi)?;
    let grid = traj.grid();
    if u.steps() != grid.steps() || u.agents() != traj.agents() {
        return Err(Error::DimensionMismatch {
            expected: grid.steps() * traj.agents(),
            found: u.steps() * u.agents(),
        });
    }
    let (n, d, m) = (traj.agents(), traj.dim(), grid.steps());
    let weights = quadrature.weights(grid);
    let running_term: f64 = (0..=m)
        .filter(|&k| weights[k] != 0.0)
        .map(|k| weights[k] * running.population_mean(traj.at(k), d))
        .sum();
    let w = 1.0 / m as f64;
    let mut penalty_term = 0.0;
    let mut measure = 0.0;
    for k in 0..m {
        let per_agent: f64 = (0..n).map(|i| psi.eval(u.get(k, i))).sum::<f64>() / n as f64;
        penalty_term += w * per_agent;
        measure += w * measure_penalty(traj.at(k), d, u.step(k), psi, None);
    }
    Ok(CostReport {
        running_term,
        penalty_term,
        total: running_term + penalty_term,
        per_agent_penalty_mean: penalty_term,
        measure_penalty: measure,
        jensen_gap: penalty_term - measure,
    })
}

/// Default coincidence tolerance `1e-9·(1 + diameter)`.
pub fn default_coincidence_tol(positions: &[f64], d: usize) -> f64 {
    let n = positions.len() / d;
    let mut diam2 = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            diam2 = diam2.max(sq_dist(&positions[i * d..(i + 1) * d], &positions[j * d..(j + 1) * d]));
        }
    }
    1e-9 * (1.0 + diam2.sqrt())
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Partition of agents into groups of coincident positions (transitive
/// closure of `|x_i − x_j| ≤ tol`), each group listed in increasing index
/// order and groups ordered by their first member.
pub fn coincidence_groups(positions: &[f64], d: usize, tol: f64) -> Vec<Vec<usize>> {
    let n = positions.len() / d;
    let mut parent: Vec<usize> = (0..n).collect();
    let tol2 = tol * tol;
    for i in 0..n {
        for j in i + 1..n {
            if sq_dist(&positions[i * d..(i + 1) * d], &positions[j * d..(j + 1) * d]) <= tol2 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

/// `Ψ(ν_t|μ_t) = Σ_J (♯J/N) ψ(mean_{i∈J} u_i)` over coincidence groups `J`.
///
/// `positions` is `N × d`, `controls` is `N × m` in the coordinates of `U`.
/// `tol = None` uses [`default_coincidence_tol`].
pub fn measure_penalty(
    positions: &[f64],
    d: usize,
    controls: &[f64],
    psi: &ModeratedPenalty,
    tol: Option<f64>,
) -> f64 {
    let n = positions.len() / d;
    let m = psi.dim();
    let tol = tol.unwrap_or_else(|| default_coincidence_tol(positions, d));
    let mut mean = vec![0.0; m];
    coincidence_groups(positions, d, tol)
        .iter()
        .map(|group| {
            mean.fill(0.0);
            for &i in group {
                for (c, v) in mean.iter_mut().enumerate() {
                    *v += controls[i * m + c];
                }
            }
            let size = group.len() as f64;
            mean.iter_mut().for_each(|v| *v /= size);
            size / n as f64 * psi.eval(&mean)
        })
        .sum()
}

/// `(1/N)Σ ψ(u_i) − Ψ(ν_t|μ_t)`, nonnegative by convexity of `ψ`.
pub fn jensen_gap(
    positions: &[f64],
    d: usize,
    controls: &[f64],
    psi: &ModeratedPenalty,
    tol: Option<f64>,
) -> f64 {
    let n = positions.len() / d;
    let m = psi.dim();
    let per_agent: f64 = (0..n).map(|i| psi.eval(&controls[i * m..(i + 1) * m])).sum::<f64>() / n as f64;
    per_agent - measure_penalty(positions, d, controls, psi, tol)
}
