//! Rollout of the transcribed problem and its exact reverse sweep.

use crate::dynamics::{rk4_step, ControlSignal, Rk4Workspace, Trajectory};
use crate::{Error, Result};

use super::OcpSpec;

pub(crate) struct Rollout {
    pub traj: Trajectory,
    /// Stage inputs of every RK4 step, `M × 3 × (N·d)`.
    pub stages: Vec<f64>,
    pub running_term: f64,
    pub penalty_term: f64,
}

impl Rollout {
    pub fn value(&self) -> f64 {
        self.running_term + self.penalty_term
    }
}

pub(crate) fn rollout(spec: &OcpSpec, u: &ControlSignal) -> Result<Rollout> {
    spec.check_control(u)?;
    let (n, d, m) = (spec.agents(), spec.model.dim(), spec.grid.steps());
    let w = n * d;
    let h = spec.grid.dt();
    let mut states = vec![0.0; (m + 1) * w];
    states[..w].copy_from_slice(&spec.x0);
    let mut stages = vec![0.0; m * 3 * w];
    let mut ws = Rk4Workspace::new(w);
    for k in 0..m {
        let v = u.embedded_step(k, spec.model.subspace());
        let (done, rest) = states.split_at_mut((k + 1) * w);
        let next = &mut rest[..w];
        rk4_step(&spec.model, &done[k * w..], &v, h, &mut ws, next);
        if next.iter().any(|s| !s.is_finite()) {
            return Err(Error::BlowUp { step: k });
        }
        for s in 0..3 {
            stages[(k * 3 + s) * w..(k * 3 + s + 1) * w].copy_from_slice(&ws.stage[s]);
        }
    }
    let weights = spec.quadrature.weights(&spec.grid);
    let running_term: f64 = (0..=m)
        .filter(|&k| weights[k] != 0.0)
        .map(|k| weights[k] * spec.running.population_mean(&states[k * w..(k + 1) * w], d))
        .sum();
    let inv_m = 1.0 / m as f64;
    let mut penalty_term = 0.0;
    for k in 0..m {
        let per_agent: f64 = (0..n).map(|i| spec.penalty.eval(u.get(k, i))).sum::<f64>() / n as f64;
        penalty_term += inv_m * per_agent;
    }
    let traj = Trajectory::new(spec.grid, n, d, states)?;
    Ok(Rollout {
        traj,
        stages,
        running_term,
        penalty_term,
    })
}

/// Reverse sweep through the RK4 stages; returns `∂value/∂u` in the layout
/// of the control signal.
pub(crate) fn gradient(spec: &OcpSpec, u: &ControlSignal, ro: &Rollout) -> Vec<f64> {
    let (n, d, m) = (spec.agents(), spec.model.dim(), spec.grid.steps());
    let mu = u.dim();
    let w = n * d;
    let h = spec.grid.dt();
    let weights = spec.quadrature.weights(&spec.grid);
    let basis = spec.model.subspace().basis();
    let inv_mn = 1.0 / (m * n) as f64;

    let mut grad = vec![0.0; m * n * mu];
    let mut lambda = vec![0.0; w];
    let mut buf = vec![0.0; w];
    let add_running = |k: usize, lambda: &mut [f64], buf: &mut [f64]| {
        if weights[k] != 0.0 {
            spec.running.population_gradient(ro.traj.at(k), d, buf);
            lambda.iter_mut().zip(buf.iter()).for_each(|(l, b)| *l += weights[k] * b);
        }
    };
    add_running(m, &mut lambda, &mut buf);

    let mut g = [vec![0.0; w], vec![0.0; w], vec![0.0; w], vec![0.0; w]];
    let mut xbar = vec![0.0; w];
    let mut pg = vec![0.0; mu];
    for k in (0..m).rev() {
        let stage = |s: usize| &ro.stages[(k * 3 + s) * w..(k * 3 + s + 1) * w];
        for (s, c) in [1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0].iter().enumerate() {
            g[s].iter_mut().zip(&lambda).for_each(|(a, l)| *a = h * c * l);
        }
        xbar.copy_from_slice(&lambda);
        // Stage 4 input x + h·k3, stage 3 x + h/2·k2, stage 2 x + h/2·k1.
        for (s, feed) in [(3usize, h), (2, 0.5 * h), (1, 0.5 * h)] {
            spec.model.field_vjp(stage(s - 1), &g[s], &mut buf);
            xbar.iter_mut().zip(&buf).for_each(|(x, b)| *x += b);
            g[s - 1].iter_mut().zip(&buf).for_each(|(a, b)| *a += feed * b);
        }
        spec.model.field_vjp(ro.traj.at(k), &g[0], &mut buf);
        xbar.iter_mut().zip(&buf).for_each(|(x, b)| *x += b);

        for i in 0..n {
            let uk = u.get(k, i);
            spec.penalty.gradient(uk, &mut pg);
            for c in 0..mu {
                let mut vbar = 0.0;
                for a in 0..d {
                    let total = g[0][i * d + a] + g[1][i * d + a] + g[2][i * d + a] + g[3][i * d + a];
                    vbar += basis[c][a] * total;
                }
                grad[(k * n + i) * mu + c] = vbar + inv_mn * pg[c];
            }
        }
        std::mem::swap(&mut lambda, &mut xbar);
        add_running(k, &mut lambda, &mut buf);
    }
    grad
}
