//! Weak-form residual of the continuity equation along particle solutions.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{ControlSignal, InteractionModel, Trajectory};
use crate::{Error, Result};

type Scalar = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type Gradient = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// A `C¹` test function with bounded gradient.
#[derive(Clone)]
pub struct TestFunction {
    pub name: String,
    pub eval: Scalar,
    pub gradient: Gradient,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TestFunction({})", self.name)
    }
}

impl TestFunction {
    /// `ζ(x) = x_j`, undamped.
    pub fn coordinate(j: usize) -> Self {
        Self {
            name: format!("x{j}"),
            eval: Arc::new(move |x| x[j]),
            gradient: Arc::new(move |_, g| {
                g.fill(0.0);
                g[j] = 1.0;
            }),
        }
    }

    /// `ζ(x) = h(x)·exp(−|x|²/(2R²))` for a polynomial part `h` with gradient.
    fn damped(
        name: String,
        radius: f64,
        h: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        dh: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        let h = Arc::new(h);
        let h2 = h.clone();
        let s = 1.0 / (radius * radius);
        Self {
            name,
            eval: Arc::new(move |x| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                h(x) * (-0.5 * s * r2).exp()
            }),
            gradient: Arc::new(move |x, g| {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let damp = (-0.5 * s * r2).exp();
                dh(x, g);
                let hv = h2(x);
                for (gv, xv) in g.iter_mut().zip(x) {
                    *gv = damp * (*gv - hv * s * xv);
                }
            }),
        }
    }

    /// `exp(−|x − c|²/(2w²))`.
    pub fn bump(center: Vec<f64>, width: f64) -> Self {
        let c2 = center.clone();
        let s = 1.0 / (width * width);
        Self {
            name: format!("bump{center:?}"),
            eval: Arc::new(move |x| {
                let r2: f64 = x.iter().zip(&center).map(|(a, b)| (a - b).powi(2)).sum();
                (-0.5 * s * r2).exp()
            }),
            gradient: Arc::new(move |x, g| {
                let r2: f64 = x.iter().zip(&c2).map(|(a, b)| (a - b).powi(2)).sum();
                let e = (-0.5 * s * r2).exp();
                for ((gv, xv), cv) in g.iter_mut().zip(x).zip(&c2) {
                    *gv = -s * (xv - cv) * e;
                }
            }),
        }
    }
}

/// Coordinates and quadratic monomials damped by `exp(−|x|²/(2R²))`, plus two
/// seeded radial bumps of width `R/2` with centres in `[−R/2, R/2]^d`.
pub fn default_dictionary(d: usize, radius: f64, seed: u64) -> Vec<TestFunction> {
    let mut out = Vec::new();
    for j in 0..d {
        out.push(TestFunction::damped(
            format!("x{j}·damp"),
            radius,
            move |x| x[j],
            move |_, g| {
                g.fill(0.0);
                g[j] = 1.0;
            },
        ));
    }
    for a in 0..d {
        for b in a..d {
            out.push(TestFunction::damped(
                format!("x{a}x{b}·damp"),
                radius,
                move |x| x[a] * x[b],
                move |x, g| {
                    g.fill(0.0);
                    g[a] += x[b];
                    g[b] += x[a];
                },
            ));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..2 {
        let c: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.5 * radius..0.5 * radius)).collect();
        out.push(TestFunction::bump(c, 0.5 * radius));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub max_residual: f64,
    /// Worst residual per dictionary entry, in dictionary order.
    pub per_function: Vec<(String, f64)>,
    pub worst_node: usize,
}

/// For each test function `ζ` and interior node `t_k`, compares the centred
/// difference of `t ↦ (1/N)Σ ζ(x_i(t))` with
/// `(1/N)Σ ⟨F(x_i, μ_t) + v_i, ∇ζ(x_i)⟩`, where `v_i` is the mean of the
/// controls on the two adjacent intervals.
pub fn continuity_residual(
    traj: &Trajectory,
    u: &ControlSignal,
    model: &InteractionModel,
    dictionary: &[TestFunction],
) -> Result<ResidualReport> {
    let grid = traj.grid();
    let (n, d, m) = (traj.agents(), traj.dim(), grid.steps());
    if u.steps() != m || u.agents() != n || model.dim() != d || u.dim() != model.subspace().dim() {
        return Err(Error::InvalidInput("trajectory, controls and model do not match".into()));
    }
    let h = grid.dt();
    let mean_of = |f: &TestFunction, k: usize| (0..n).map(|i| (f.eval)(traj.agent(k, i))).sum::<f64>() / n as f64;
    let mut per_function: Vec<(String, f64)> = dictionary.iter().map(|f| (f.name.clone(), 0.0)).collect();
    let (mut max_residual, mut worst_node) = (0.0f64, 0);
    let mut field = vec![0.0; n * d];
    let mut g = vec![0.0; d];
    for k in 1..m {
        model.field(traj.at(k), &mut field);
        let before = u.embedded_step(k - 1, model.subspace());
        let after = u.embedded_step(k, model.subspace());
        for (f, slot) in dictionary.iter().zip(per_function.iter_mut()) {
            let lhs = (mean_of(f, k + 1) - mean_of(f, k - 1)) / (2.0 * h);
            let mut rhs = 0.0;
            for i in 0..n {
                (f.gradient)(traj.agent(k, i), &mut g);
                for a in 0..d {
                    let v = 0.5 * (before[i * d + a] + after[i * d + a]);
                    rhs += (field[i * d + a] + v) * g[a];
                }
            }
            let r = (lhs - rhs / n as f64).abs();
            slot.1 = slot.1.max(r);
            if r > max_residual {
                max_residual = r;
                worst_node = k;
            }
        }
    }
    Ok(ResidualReport {
        max_residual,
        per_function,
        worst_node,
    })
}
