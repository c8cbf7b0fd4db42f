use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::adjoint::{gradient, rollout, Rollout};
use super::OcpSpec;
use crate::cost::{finite_cost, CostReport};
use crate::dynamics::{check_moment_bound, ControlSignal, Trajectory};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Stop when the sup-norm of the function-space gradient is at most
    /// `grad_tol · (1 + |value|)`.
    pub grad_tol: f64,
    /// Number of stored quasi-Newton pairs.
    pub memory: usize,
    /// Sufficient-decrease constant of the backtracking line search.
    pub armijo: f64,
    pub contraction: f64,
    pub max_halvings: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            grad_tol: 1e-6,
            memory: 10,
            armijo: 1e-4,
            contraction: 0.5,
            max_halvings: 40,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.grad_tol > 0.0
            && self.memory > 0
            && self.armijo > 0.0
            && self.armijo < 1.0
            && self.contraction > 0.0
            && self.contraction < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid solver configuration {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIterations,
    /// No sufficient decrease after the allowed number of step contractions.
    Stalled,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub value: f64,
    pub grad_norm: f64,
    pub step: f64,
    /// Slack of the first-moment bound on this iterate's trajectory.
    pub moment_slack: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub u_opt: ControlSignal,
    pub traj: Trajectory,
    pub value: f64,
    pub report: CostReport,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub status: Status,
    pub history: Vec<IterationRecord>,
    /// Smallest first-moment slack over all accepted iterates.
    pub min_moment_slack: f64,
    pub evaluations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Point {
    u: ControlSignal,
    ro: Rollout,
    grad: Vec<f64>,
}

fn evaluate(spec: &OcpSpec, u: ControlSignal) -> Result<Point> {
    let ro = rollout(spec, &u)?;
    let grad = gradient(spec, &u, &ro);
    Ok(Point { u, ro, grad })
}

/// Limited-memory BFGS with Armijo backtracking from `init` (zero control
/// when `None`). Returns the last accepted iterate.
pub fn solve(spec: &OcpSpec, config: &SolverConfig, init: Option<&ControlSignal>) -> Result<Solution> {
    config.validate()?;
    let u0 = match init {
        Some(u) => {
            spec.check_control(u)?;
            u.clone()
        }
        None => spec.zero_control(),
    };
    let scale = spec.gradient_scale();
    let (a, b) = (spec.model.growth_a(), spec.model.growth_b());
    let slack_of = |p: &Point| check_moment_bound(&p.ro.traj, &p.u, a, b).slack;
    let sup = |g: &[f64]| scale * g.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let mut cur = evaluate(spec, u0)?;
    let mut evaluations = 1;
    let mut min_slack = slack_of(&cur);
    let mut history = vec![IterationRecord {
        iteration: 0,
        value: cur.ro.value(),
        grad_norm: sup(&cur.grad),
        step: 0.0,
        moment_slack: min_slack,
    }];
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut status = Status::MaxIterations;
    let mut iterations = 0;

    loop {
        let value = cur.ro.value();
        if sup(&cur.grad) <= config.grad_tol * (1.0 + value.abs()) {
            status = Status::Converged;
            break;
        }
        if iterations >= config.max_iters {
            break;
        }

        // Two-loop recursion; without pairs the metric is the function-space
        // one, where the penalty Hessian is of order one.
        let mut q = cur.grad.clone();
        let mut alphas = Vec::with_capacity(pairs.len());
        for (s, y, rho) in pairs.iter().rev() {
            let alpha = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qv, yv)| *qv -= alpha * yv);
            alphas.push(alpha);
        }
        let gamma = match pairs.back() {
            Some((s, y, _)) => dot(s, y) / dot(y, y),
            None => scale,
        };
        q.iter_mut().for_each(|v| *v *= gamma);
        for ((s, y, rho), alpha) in pairs.iter().zip(alphas.iter().rev()) {
            let beta = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qv, sv)| *qv += (alpha - beta) * sv);
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&cur.grad, &dir);
        if !(slope < 0.0) {
            pairs.clear();
            dir = cur.grad.iter().map(|v| -scale * v).collect();
            slope = dot(&cur.grad, &dir);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=config.max_halvings {
            let mut trial = cur.u.clone();
            trial
                .values_mut()
                .iter_mut()
                .zip(&dir)
                .for_each(|(v, d)| *v += step * d);
            evaluations += 1;
            match rollout(spec, &trial) {
                Ok(ro) if ro.value() <= value + config.armijo * step * slope => {
                    let grad = gradient(spec, &trial, &ro);
                    accepted = Some(Point { u: trial, ro, grad });
                    break;
                }
                Ok(_) | Err(Error::BlowUp { .. }) => step *= config.contraction,
                Err(e) => return Err(e),
            }
        }
        let Some(next) = accepted else {
            status = Status::Stalled;
            break;
        };
        iterations += 1;

        let s: Vec<f64> = next.u.values().iter().zip(cur.u.values()).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.grad.iter().zip(&cur.grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
            if pairs.len() == config.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }

        let slack = slack_of(&next);
        min_slack = min_slack.min(slack);
        history.push(IterationRecord {
            iteration: iterations,
            value: next.ro.value(),
            grad_norm: sup(&next.grad),
            step,
            moment_slack: slack,
        });
        cur = next;
    }

    let report = finite_cost(&cur.ro.traj, &cur.u, spec.running.as_ref(), &spec.penalty, spec.quadrature)?;
    Ok(Solution {
        grad_norm: sup(&cur.grad),
        value: cur.ro.value(),
        report,
        iterations,
        converged: status == Status::Converged,
        status,
        history,
        min_moment_slack: min_slack,
        evaluations,
        traj: cur.ro.traj,
        u_opt: cur.u,
    })
}
