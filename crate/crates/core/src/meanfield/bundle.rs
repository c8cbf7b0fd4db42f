//! Control measures and the discrete superposition representation.

use serde::Serialize;

use crate::dynamics::{rk4_step, ControlSignal, InteractionModel, Rk4Workspace, Trajectory};
use crate::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct ControlAtom {
    pub t: f64,
    pub x: Vec<f64>,
    /// Control embedded in `ℝ^d`.
    pub u: Vec<f64>,
    pub mass: f64,
}

/// `ν = (1/T)Σ_k Δt (1/N) Σ_i u_i(t_k) δ_{(t_k, x_i(t_k))}`: atoms at the
/// left node of every control interval with mass `Δt/(T·N)`.
#[derive(Debug, Clone, Serialize)]
pub struct ControlMeasure {
    pub steps: usize,
    pub agents: usize,
    pub atoms: Vec<ControlAtom>,
}

impl ControlMeasure {
    pub fn new(traj: &Trajectory, u: &ControlSignal, model: &InteractionModel) -> Result<Self> {
        let (n, m) = (traj.agents(), traj.grid().steps());
        if u.steps() != m || u.agents() != n || u.dim() != model.subspace().dim() {
            return Err(Error::InvalidInput("trajectory and controls do not match".into()));
        }
        let mass = 1.0 / (m * n) as f64;
        let mut atoms = Vec::with_capacity(m * n);
        for k in 0..m {
            for i in 0..n {
                atoms.push(ControlAtom {
                    t: traj.grid().node(k),
                    x: traj.agent(k, i).to_vec(),
                    u: model.subspace().embed(u.get(k, i)),
                    mass,
                });
            }
        }
        Ok(Self { steps: m, agents: n, atoms })
    }

    /// Total variation `|ν|`.
    pub fn total_variation(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.mass * a.u.iter().map(|v| v * v).sum::<f64>().sqrt())
            .sum()
    }

    /// Atoms of the time slice `ν_{t_k}`.
    pub fn slice(&self, k: usize) -> &[ControlAtom] {
        &self.atoms[k * self.agents..(k + 1) * self.agents]
    }
}

/// `∫ ξ · dν = (1/T)Σ_k Δt (1/N)Σ_i ξ(t_k, x_i(t_k)) · u_i(t_k)`.
pub fn weakstar_pairing(nu: &ControlMeasure, xi: impl Fn(f64, &[f64], &mut [f64])) -> f64 {
    let d = nu.atoms.first().map_or(0, |a| a.x.len());
    let mut buf = vec![0.0; d];
    nu.atoms
        .iter()
        .map(|a| {
            xi(a.t, &a.x, &mut buf);
            a.mass * buf.iter().zip(&a.u).map(|(p, q)| p * q).sum::<f64>()
        })
        .sum()
}

/// The particle curves of a trajectory, each with weight `1/N`.
#[derive(Debug, Clone)]
pub struct TrajectoryBundle {
    steps: usize,
    dim: usize,
    /// `curves[i]` is `(M+1) × d`.
    curves: Vec<Vec<f64>>,
}

impl TrajectoryBundle {
    pub fn from_trajectory(traj: &Trajectory) -> Self {
        let m = traj.grid().steps();
        let curves = (0..traj.agents())
            .map(|i| (0..=m).flat_map(|k| traj.agent(k, i).to_vec()).collect())
            .collect();
        Self {
            steps: m,
            dim: traj.dim(),
            curves,
        }
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.curves.len() as f64
    }

    pub fn curve(&self, i: usize) -> &[f64] {
        &self.curves[i]
    }

    pub fn curve_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.curves[i]
    }

    /// `e_{t_k}`: the curve values at node `k`, `N × d`.
    pub fn evaluate(&self, k: usize) -> Vec<f64> {
        let d = self.dim;
        self.curves
            .iter()
            .flat_map(|c| c[k * d..(k + 1) * d].to_vec())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SuperpositionFailure {
    /// The bundle's time-`t_k` marginal differs from the trajectory's
    /// empirical measure; `agent` is the first unmatched sorted atom.
    Marginal { step: usize, agent: usize },
    /// Curve `agent` leaves the one-step RK4 image of the bundle by more than
    /// the tolerance between `t_k` and `t_{k+1}`.
    OdeDefect { step: usize, agent: usize },
    Shape,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuperpositionReport {
    pub passed: bool,
    pub failure: Option<SuperpositionFailure>,
    pub max_defect: f64,
}

fn sorted_rows(points: &[f64], d: usize) -> Vec<&[f64]> {
    let mut rows: Vec<&[f64]> = points.chunks(d).collect();
    rows.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    rows
}

/// Checks `(e_{t_k})_# π = μ_{t_k}` exactly at every node, then that every
/// curve follows the discrete flow: one RK4 step from the bundle's own cohort
/// at `t_k` must land within `tol·(1 + |x|)` of its value at `t_{k+1}`.
pub fn superposition_check(
    bundle: &TrajectoryBundle,
    traj: &Trajectory,
    model: &InteractionModel,
    u: &ControlSignal,
    tol: f64,
) -> SuperpositionReport {
    let fail = |f| SuperpositionReport {
        passed: false,
        failure: Some(f),
        max_defect: f64::NAN,
    };
    let (n, d, m) = (traj.agents(), traj.dim(), traj.grid().steps());
    if bundle.len() != n || bundle.dim != d || bundle.steps != m || u.steps() != m || u.agents() != n {
        return fail(SuperpositionFailure::Shape);
    }
    for k in 0..=m {
        let values = bundle.evaluate(k);
        let (a, b) = (sorted_rows(&values, d), sorted_rows(traj.at(k), d));
        if let Some(agent) = a.iter().zip(&b).position(|(x, y)| x != y) {
            return fail(SuperpositionFailure::Marginal { step: k, agent });
        }
    }
    let mut ws = Rk4Workspace::new(n * d);
    let mut next = vec![0.0; n * d];
    let mut max_defect = 0.0f64;
    let h = traj.grid().dt();
    for k in 0..m {
        let v = u.embedded_step(k, model.subspace());
        rk4_step(model, &bundle.evaluate(k), &v, h, &mut ws, &mut next);
        let target = bundle.evaluate(k + 1);
        for i in 0..n {
            let (p, q) = (&next[i * d..(i + 1) * d], &target[i * d..(i + 1) * d]);
            let defect = p.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let scale = 1.0 + q.iter().map(|v| v * v).sum::<f64>().sqrt();
            max_defect = max_defect.max(defect);
            if !(defect <= tol * scale) {
                return SuperpositionReport {
                    passed: false,
                    failure: Some(SuperpositionFailure::OdeDefect { step: k, agent: i }),
                    max_defect,
                };
            }
        }
    }
    SuperpositionReport {
        passed: true,
        failure: None,
        max_defect,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, TimeGrid};

    fn setup() -> (InteractionModel, ControlSignal, Trajectory) {
        let model = InteractionModel::cucker_smale(0.5, 1).unwrap();
        let grid = TimeGrid::new(1.0, 20).unwrap();
        let mut u = ControlSignal::zeros(20, 3, 1);
        u.values_mut().iter_mut().enumerate().for_each(|(k, v)| *v = (0.3 * k as f64).cos());
        let traj = integrate(&model, &[0.0, 1.0, 1.0, -1.0, -0.5, 0.3], &u, &grid).unwrap();
        (model, u, traj)
    }

    #[test]
    fn control_measure_mass_and_pairings() {
        let (model, u, traj) = setup();
        let nu = ControlMeasure::new(&traj, &u, &model).unwrap();
        let l1 = u.l1_norm(traj.grid()) / traj.grid().horizon();
        assert!((nu.total_variation() - l1).abs() < 1e-12);
        assert_eq!(weakstar_pairing(&nu, |_, _, out| out.fill(0.0)), 0.0);

        let c = ControlSignal::constant(20, 3, &[0.7]);
        let nu = ControlMeasure::new(&traj, &c, &model).unwrap();
        let e = weakstar_pairing(&nu, |_, _, out| out.copy_from_slice(&[0.0, 2.0]));
        assert!((e - 1.4).abs() < 1e-14);
    }

    #[test]
    fn bundle_reproduces_its_trajectory() {
        let (model, u, traj) = setup();
        let bundle = TrajectoryBundle::from_trajectory(&traj);
        let report = superposition_check(&bundle, &traj, &model, &u, 1e-12);
        assert!(report.passed, "{report:?}");
        assert_eq!(report.max_defect, 0.0);
    }

    #[test]
    fn time_reversed_curve_fails_the_marginal_check() {
        let (model, u, traj) = setup();
        let mut bundle = TrajectoryBundle::from_trajectory(&traj);
        let m = traj.grid().steps();
        let reversed: Vec<f64> = (0..=m).rev().flat_map(|k| traj.agent(k, 1).to_vec()).collect();
        bundle.curve_mut(1).copy_from_slice(&reversed);
        let report = superposition_check(&bundle, &traj, &model, &u, 1e-12);
        assert!(matches!(report.failure, Some(SuperpositionFailure::Marginal { step: 0, .. })));
    }

    #[test]
    fn non_solution_fails_the_defect_check() {
        let (model, u, traj) = setup();
        let mut bundle = TrajectoryBundle::from_trajectory(&traj);
        // Compare against itself so the marginals agree.
        let c = bundle.curve_mut(2);
        for (k, v) in c.chunks_mut(2).enumerate().skip(5) {
            v[0] += 1e-3 * k as f64;
        }
        let mut states = Vec::new();
        for k in 0..=traj.grid().steps() {
            states.extend(bundle.evaluate(k));
        }
        let fake = Trajectory::new(*traj.grid(), 3, 2, states).unwrap();
        let report = superposition_check(&bundle, &fake, &model, &u, 1e-12);
        assert!(matches!(report.failure, Some(SuperpositionFailure::OdeDefect { step: 4, agent: 2 })));
    }
}
