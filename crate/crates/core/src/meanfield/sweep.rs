//! Sweeps over the number of agents.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::quantize::{quantize, InitialMeasureSpec};
use super::residual::{continuity_residual, default_dictionary};
use crate::cost::{Quadrature, RunningCost};
use crate::dynamics::{
    check_theta_moment, ControlSignal, InteractionModel, ThetaMomentInputs, TimeGrid, Trajectory,
};
use crate::ocp::{solve, OcpSpec, Solution, SolverConfig, Status};
use crate::penalty::{AdmissibleFunction, ModeratedPenalty};
use crate::transport::{solve_assignment, w1_general, DiscreteMeasure};
use crate::{Error, Result};

/// Everything but the initial cohort.
#[derive(Clone)]
pub struct SweepTemplate {
    pub model: InteractionModel,
    pub grid: TimeGrid,
    pub running: Arc<dyn RunningCost>,
    pub penalty: ModeratedPenalty,
    pub quadrature: Quadrature,
}

impl SweepTemplate {
    pub fn spec(&self, x0: Vec<f64>) -> Result<OcpSpec> {
        Ok(OcpSpec::new(
            self.model.clone(),
            x0,
            self.grid,
            self.running.clone(),
            self.penalty.clone(),
        )?
        .with_quadrature(self.quadrature))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarmStart {
    /// Solve in schedule order, lifting each optimum to the next `N`.
    #[default]
    Sequential,
    /// Independent zero-initialized solves, run in parallel.
    Cold,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub solver: SolverConfig,
    pub warm_start: WarmStart,
    /// Number of evenly spaced grid nodes (including both ends) at which
    /// consecutive optima are compared.
    pub sample_times: usize,
    /// Size of the reference quantization of `μ₀`; `None` picks 10⁴ in one
    /// dimension and 1024 otherwise.
    pub reference_points: Option<usize>,
    /// Cutoff radius of the default residual dictionary.
    pub dictionary_radius: f64,
    pub dictionary_seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            warm_start: WarmStart::Sequential,
            sample_times: 5,
            reference_points: None,
            dictionary_radius: 3.0,
            dictionary_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRecord {
    pub n: usize,
    pub value: f64,
    pub iterations: usize,
    pub status: Status,
    pub grad_norm: f64,
    /// `W1(μ₀^N, μ₀^ref)`.
    pub initial_w1: f64,
    /// `max` over sampled times of `W1(μ^N_t, μ^{N_prev}_t)`; `None` for the
    /// first entry.
    pub cross_w1: Option<f64>,
    pub cross_w1_per_time: Vec<f64>,
    /// `(1/N)Σ φ(|x₀_i|)` with `φ` the penalty's reference function.
    pub phi_moment: f64,
    pub max_residual: f64,
    pub min_moment_slack: f64,
    /// Ratio and constant of the `θ`-moment estimate with `θ(r) = r²/2`.
    pub theta_ratio: f64,
    pub theta_constant: f64,
    pub wallclock_s: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaSweepResult {
    pub schedule: Vec<usize>,
    pub sample_nodes: Vec<usize>,
    pub reference_points: usize,
    pub warm_start: WarmStart,
    pub records: Vec<SweepRecord>,
    #[serde(skip)]
    pub solutions: Vec<Option<Solution>>,
}

impl GammaSweepResult {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.error.is_some()).count()
    }
}

/// Evenly spaced nodes `round(j·M/(s−1))`, `j = 0..s`.
pub fn sample_nodes(steps: usize, samples: usize) -> Vec<usize> {
    if samples <= 1 {
        return vec![steps];
    }
    let mut out: Vec<usize> = (0..samples)
        .map(|j| ((j * steps) as f64 / (samples - 1) as f64).round() as usize)
        .collect();
    out.dedup();
    out
}

/// Lifts controls from `old_x0` to `new_x0`: every new agent inherits the
/// control of the old agent matched to it by an optimal assignment against
/// the old cohort replicated `N_new / N_old` times, or of its nearest old
/// agent when the sizes do not divide.
pub fn lift_controls(
    old_x0: &[f64],
    old_u: &ControlSignal,
    new_x0: &[f64],
    d: usize,
) -> ControlSignal {
    let (n_old, n_new, m, mu) = (old_x0.len() / d, new_x0.len() / d, old_u.steps(), old_u.dim());
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let owner: Vec<usize> = if n_new % n_old == 0 {
        let cost: Vec<f64> = (0..n_new * n_new)
            .map(|k| {
                let (i, j) = (k / n_new, k % n_new);
                dist(&new_x0[i * d..(i + 1) * d], &old_x0[(j % n_old) * d..(j % n_old + 1) * d])
            })
            .collect();
        solve_assignment(&cost, n_new).iter().map(|j| j % n_old).collect()
    } else {
        (0..n_new)
            .map(|i| {
                (0..n_old)
                    .min_by(|&a, &b| {
                        dist(&new_x0[i * d..(i + 1) * d], &old_x0[a * d..(a + 1) * d])
                            .total_cmp(&dist(&new_x0[i * d..(i + 1) * d], &old_x0[b * d..(b + 1) * d]))
                    })
                    .unwrap()
            })
            .collect()
    };
    let mut values = Vec::with_capacity(m * n_new * mu);
    for k in 0..m {
        for &o in &owner {
            values.extend_from_slice(old_u.get(k, o));
        }
    }
    ControlSignal::new(m, n_new, mu, values).expect("lifted controls are finite")
}

fn uniform(points: &[f64], d: usize) -> DiscreteMeasure {
    DiscreteMeasure::uniform(d, points.to_vec()).expect("finite cloud")
}

struct Solved {
    x0: Vec<f64>,
    solution: Result<Solution>,
    wallclock_s: f64,
}

fn solve_one(template: &SweepTemplate, x0: Vec<f64>, config: &SolverConfig, init: Option<&ControlSignal>) -> Solved {
    let start = Instant::now();
    let solution = template.spec(x0.clone()).and_then(|spec| solve(&spec, config, init));
    Solved {
        x0,
        solution,
        wallclock_s: start.elapsed().as_secs_f64(),
    }
}

/// Quantizes `μ₀` and solves the `N`-agent problem for every `N` in the
/// schedule, recording values, distances between consecutive optima and
/// diagnostics. Failed solves are kept as records with `error` set.
pub fn gamma_sweep(
    template: &SweepTemplate,
    mu0: &InitialMeasureSpec,
    schedule: &[usize],
    config: &SweepConfig,
) -> Result<GammaSweepResult> {
    if schedule.is_empty() {
        return Err(Error::InvalidInput("empty schedule".into()));
    }
    if schedule.windows(2).any(|w| w[0] >= w[1]) || schedule[0] == 0 {
        return Err(Error::InvalidInput("schedule must be positive and strictly increasing".into()));
    }
    let d = template.model.dim();
    if mu0.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: mu0.dim(),
        });
    }
    let cohorts: Vec<Vec<f64>> = schedule.iter().map(|&n| quantize(mu0, n)).collect::<Result<_>>()?;

    let solved: Vec<Solved> = match config.warm_start {
        WarmStart::Cold => cohorts
            .into_par_iter()
            .map(|x0| solve_one(template, x0, &config.solver, None))
            .collect(),
        WarmStart::Sequential => {
            let mut out: Vec<Solved> = Vec::with_capacity(schedule.len());
            for x0 in cohorts {
                let init = out.iter().rev().find_map(|s| match &s.solution {
                    Ok(sol) => Some(lift_controls(&s.x0, &sol.u_opt, &x0, d)),
                    Err(_) => None,
                });
                out.push(solve_one(template, x0, &config.solver, init.as_ref()));
            }
            out
        }
    };

    let reference_points = config
        .reference_points
        .unwrap_or(if d == 1 { 10_000 } else { 1024 });
    let reference = uniform(&quantize(mu0, reference_points)?, d);
    let nodes = sample_nodes(template.grid.steps(), config.sample_times);
    let dictionary = default_dictionary(d, config.dictionary_radius, config.dictionary_seed);
    let theta = AdmissibleFunction::power(2.0)?;
    let phi = template.penalty.reference();

    let mut records = Vec::with_capacity(schedule.len());
    let mut solutions = Vec::with_capacity(schedule.len());
    let mut prev_traj: Option<&Trajectory> = None;
    for (s, &n) in solved.iter().zip(schedule) {
        let initial_w1 = w1_general(&uniform(&s.x0, d), &reference)?.0;
        let phi_moment = s
            .x0
            .chunks(d)
            .map(|x| phi.eval(x.iter().map(|v| v * v).sum::<f64>().sqrt()))
            .sum::<f64>()
            / n as f64;
        let mut record = SweepRecord {
            n,
            value: f64::NAN,
            iterations: 0,
            status: Status::Stalled,
            grad_norm: f64::NAN,
            initial_w1,
            cross_w1: None,
            cross_w1_per_time: Vec::new(),
            phi_moment,
            max_residual: f64::NAN,
            min_moment_slack: f64::NAN,
            theta_ratio: f64::NAN,
            theta_constant: f64::NAN,
            wallclock_s: s.wallclock_s,
            error: None,
        };
        match &s.solution {
            Ok(sol) => {
                record.value = sol.value;
                record.iterations = sol.iterations;
                record.status = sol.status;
                record.grad_norm = sol.grad_norm;
                record.min_moment_slack = sol.min_moment_slack;
                record.max_residual =
                    continuity_residual(&sol.traj, &sol.u_opt, &template.model, &dictionary)?.max_residual;
                let theta_report = check_theta_moment(
                    &sol.traj,
                    &sol.u_opt,
                    &theta,
                    ThetaMomentInputs {
                        growth_a: template.model.growth_a(),
                        growth_b: template.model.growth_b(),
                        energy: sol.value,
                    },
                );
                record.theta_ratio = theta_report.ratio;
                record.theta_constant = theta_report.constant;
                if let Some(prev) = prev_traj {
                    let per_time: Vec<f64> = nodes
                        .iter()
                        .map(|&k| Ok(w1_general(&uniform(sol.traj.at(k), d), &uniform(prev.at(k), d))?.0))
                        .collect::<Result<_>>()?;
                    record.cross_w1 = Some(per_time.iter().copied().fold(0.0, f64::max));
                    record.cross_w1_per_time = per_time;
                }
                prev_traj = Some(&sol.traj);
            }
            Err(e) => record.error = Some(e.to_string()),
        }
        records.push(record);
    }
    for s in solved {
        solutions.push(s.solution.ok());
    }
    Ok(GammaSweepResult {
        schedule: schedule.to_vec(),
        sample_nodes: nodes,
        reference_points,
        warm_start: config.warm_start,
        records,
        solutions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::ZeroCost;
    use crate::Subspace;

    #[test]
    fn nodes_cover_the_horizon() {
        assert_eq!(sample_nodes(50, 5), vec![0, 13, 25, 38, 50]);
        assert_eq!(sample_nodes(2, 5), vec![0, 1, 2]);
    }

    #[test]
    fn lifting_duplicates_controls() {
        let old_x0 = [0.0, 1.0];
        let old_u = ControlSignal::new(1, 2, 1, vec![5.0, -5.0]).unwrap();
        let lifted = lift_controls(&old_x0, &old_u, &[-0.1, 0.1, 0.9, 1.1], 1);
        assert_eq!(lifted.values(), &[5.0, 5.0, -5.0, -5.0]);
        let lifted = lift_controls(&old_x0, &old_u, &[0.2, 0.4, 0.8], 1);
        assert_eq!(lifted.values(), &[5.0, 5.0, -5.0]);
    }

    #[test]
    fn zero_running_cost_sweep() {
        let template = SweepTemplate {
            model: InteractionModel::zero(1),
            grid: TimeGrid::new(1.0, 10).unwrap(),
            running: Arc::new(ZeroCost),
            penalty: ModeratedPenalty::power(2.0, Subspace::full(1)).unwrap(),
            quadrature: Quadrature::Trapezoid,
        };
        let mu0 = InitialMeasureSpec::ProductUniformBox {
            lower: vec![-1.0],
            upper: vec![1.0],
            coupling: Default::default(),
        };
        let result = gamma_sweep(&template, &mu0, &[2, 4, 8], &SweepConfig::default()).unwrap();
        assert!(result.records.iter().all(|r| r.value == 0.0 && r.error.is_none()));
        // W1 between midpoint quantizations of [−1, 1] is 1/(2N) against the
        // uniform measure, up to the reference resolution.
        for r in &result.records {
            assert!((r.initial_w1 - 0.5 / r.n as f64).abs() < 1e-3 / r.n as f64);
        }
        assert!(gamma_sweep(&template, &mu0, &[], &SweepConfig::default()).is_err());
        assert!(gamma_sweep(&template, &mu0, &[4, 4], &SweepConfig::default()).is_err());
    }
}
