use super::model::InteractionModel;
use super::signal::{ControlSignal, TimeGrid, Trajectory};
use crate::{Error, Result};

/// Scratch space for one RK4 step; the stage inputs `x + h/2·k1`,
/// `x + h/2·k2`, `x + h·k3` stay available after the step.
#[derive(Debug, Clone)]
pub(crate) struct Rk4Workspace {
    pub k: [Vec<f64>; 4],
    pub stage: [Vec<f64>; 3],
}

impl Rk4Workspace {
    pub fn new(len: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; len]),
            stage: std::array::from_fn(|_| vec![0.0; len]),
        }
    }
}

fn slope(model: &InteractionModel, x: &[f64], v: &[f64], out: &mut [f64]) {
    model.field(x, out);
    out.iter_mut().zip(v).for_each(|(o, c)| *o += c);
}

/// One classical RK4 step of `ẋ = F(x) + v` with `v` frozen.
pub(crate) fn rk4_step(
    model: &InteractionModel,
    x: &[f64],
    v: &[f64],
    h: f64,
    ws: &mut Rk4Workspace,
    out: &mut [f64],
) {
    let Rk4Workspace { k, stage } = ws;
    let [k1, k2, k3, k4] = k;
    let [s2, s3, s4] = stage;
    slope(model, x, v, k1);
    for ((s, a), b) in s2.iter_mut().zip(x).zip(k1.iter()) {
        *s = a + 0.5 * h * b;
    }
    slope(model, s2, v, k2);
    for ((s, a), b) in s3.iter_mut().zip(x).zip(k2.iter()) {
        *s = a + 0.5 * h * b;
    }
    slope(model, s3, v, k3);
    for ((s, a), b) in s4.iter_mut().zip(x).zip(k3.iter()) {
        *s = a + h * b;
    }
    slope(model, s4, v, k4);
    for (i, o) in out.iter_mut().enumerate() {
        *o = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

pub(crate) fn check_shapes(
    model: &InteractionModel,
    x0: &[f64],
    u: &ControlSignal,
    grid: &TimeGrid,
) -> Result<()> {
    let d = model.dim();
    if u.steps() != grid.steps() {
        return Err(Error::DimensionMismatch {
            expected: grid.steps(),
            found: u.steps(),
        });
    }
    if u.dim() != model.subspace().dim() {
        return Err(Error::DimensionMismatch {
            expected: model.subspace().dim(),
            found: u.dim(),
        });
    }
    if x0.len() != u.agents() * d {
        return Err(Error::DimensionMismatch {
            expected: u.agents() * d,
            found: x0.len(),
        });
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial state".into()));
    }
    Ok(())
}

/// Integrates the controlled agent system `ẋ_i = F^N(x_i, x⃗) + u_i` with RK4,
/// holding each control at its interval value. `x0` is `N × d`.
pub fn integrate(
    model: &InteractionModel,
    x0: &[f64],
    u: &ControlSignal,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    check_shapes(model, x0, u, grid)?;
    let (n, d, m) = (u.agents(), model.dim(), grid.steps());
    let w = n * d;
    let mut states = vec![0.0; (m + 1) * w];
    states[..w].copy_from_slice(x0);
    let mut ws = Rk4Workspace::new(w);
    let h = grid.dt();
    for k in 0..m {
        let v = u.embedded_step(k, model.subspace());
        let (done, rest) = states.split_at_mut((k + 1) * w);
        let next = &mut rest[..w];
        rk4_step(model, &done[k * w..], &v, h, &mut ws, next);
        if next.iter().any(|s| !s.is_finite()) {
            return Err(Error::BlowUp { step: k });
        }
    }
    Trajectory::new(*grid, n, d, states)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_motion_is_exact() {
        let model = InteractionModel::zero(2);
        let grid = TimeGrid::new(1.5, 7).unwrap();
        let u = ControlSignal::constant(7, 3, &[0.3, -2.0]);
        let x0 = vec![1.0, 1.0, 0.0, 0.0, -4.0, 2.5];
        let traj = integrate(&model, &x0, &u, &grid).unwrap();
        for k in 0..=7 {
            let t = grid.node(k);
            for i in 0..3 {
                let x = traj.agent(k, i);
                assert!((x[0] - (x0[2 * i] + 0.3 * t)).abs() < 1e-14);
                assert!((x[1] - (x0[2 * i + 1] - 2.0 * t)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn two_body_contraction() {
        // ẋ₁ = −(x₁ − x₂)/2, ẋ₂ = −(x₂ − x₁)/2 from ±1: x₁(t) = e^{−t}.
        let model = InteractionModel::linear_attraction(1, 1.0).unwrap();
        let grid = TimeGrid::new(1.0, 100).unwrap();
        let u = ControlSignal::zeros(100, 2, 1);
        let traj = integrate(&model, &[1.0, -1.0], &u, &grid).unwrap();
        let exact = (-1.0f64).exp();
        assert!(((traj.terminal()[0] - exact) / exact).abs() < 1e-6);
    }

    #[test]
    fn blow_up_is_reported() {
        let model = InteractionModel::linear_attraction(1, -1e200).unwrap();
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let u = ControlSignal::zeros(10, 2, 1);
        let err = integrate(&model, &[1e200, -1e200], &u, &grid).unwrap_err();
        assert!(matches!(err, Error::BlowUp { step: 0 }));
    }

    #[test]
    fn shape_mismatches_are_rejected() {
        let model = InteractionModel::cucker_smale(0.5, 1).unwrap();
        let grid = TimeGrid::new(1.0, 4).unwrap();
        // Controls must have dim U = 1, not 2.
        let u = ControlSignal::zeros(4, 1, 2);
        assert!(integrate(&model, &[0.0, 0.0], &u, &grid).is_err());
        let u = ControlSignal::zeros(3, 1, 1);
        assert!(integrate(&model, &[0.0, 0.0], &u, &grid).is_err());
    }
}
