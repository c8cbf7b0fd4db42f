use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::kernel::{
    kernel_jacobians, AlignmentPotential, AttractionKernel, CuckerSmaleKernel, FrictionKernel,
    Kernel, ZeroKernel,
};
use crate::transport::{DiscreteMeasure, EmpiricalMeasure};
use crate::{Error, Result, Subspace};

/// Below this many agents the `O(N²)` sweeps stay on the calling thread.
const PARALLEL_THRESHOLD: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Structure {
    FirstOrder,
    /// State `(q, p) ∈ ℝ^{2m}` with `q̇ = p`.
    SecondOrder { m: usize },
}

/// Kernel-induced field `F(x, μ) = ∫ K(x, y) dμ(y)`, its growth constants
/// `|K(x,y)| ≤ A + B(|x| + |y|)` and the control subspace `U`.
///
/// With `μ = μ[y⃗]` this is also the finite-agent field `F^N(x, y⃗)`.
#[derive(Clone)]
pub struct InteractionModel {
    name: String,
    kernel: Arc<dyn Kernel>,
    growth_a: f64,
    growth_b: f64,
    subspace: Subspace,
    structure: Structure,
}

impl fmt::Debug for InteractionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InteractionModel")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("growth_a", &self.growth_a)
            .field("growth_b", &self.growth_b)
            .field("structure", &self.structure)
            .finish()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthReport {
    pub samples: usize,
    pub radius: f64,
    /// Largest `|K(x,y)| / (A + B(|x|+|y|))` seen.
    pub worst_ratio: f64,
    pub worst_x: Vec<f64>,
    pub worst_y: Vec<f64>,
    pub passed: bool,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl InteractionModel {
    pub fn from_kernel(
        name: impl Into<String>,
        kernel: Arc<dyn Kernel>,
        growth_a: f64,
        growth_b: f64,
        subspace: Subspace,
        structure: Structure,
    ) -> Result<Self> {
        let d = kernel.dim();
        if subspace.ambient_dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: subspace.ambient_dim(),
            });
        }
        if let Structure::SecondOrder { m } = structure {
            if 2 * m != d {
                return Err(Error::InvalidInput(format!(
                    "second-order structure with m = {m} in dimension {d}"
                )));
            }
        }
        if !(growth_a >= 0.0 && growth_b >= 0.0) || !growth_a.is_finite() || !growth_b.is_finite() {
            return Err(Error::InvalidInput("growth constants must be finite and ≥ 0".into()));
        }
        Ok(Self {
            name: name.into(),
            kernel,
            growth_a,
            growth_b,
            subspace,
            structure,
        })
    }

    /// `F ≡ 0` on `ℝ^d`, controls in all of `ℝ^d`.
    pub fn zero(d: usize) -> Self {
        Self::from_kernel(
            "zero",
            Arc::new(ZeroKernel { dim: d }),
            0.0,
            0.0,
            Subspace::full(d),
            Structure::FirstOrder,
        )
        .expect("zero model is well formed")
    }

    /// First-order attraction `K(x, y) = −c(x − y)`, controls in `ℝ^d`.
    pub fn linear_attraction(d: usize, strength: f64) -> Result<Self> {
        if !strength.is_finite() {
            return Err(Error::NonFinite("attraction strength".into()));
        }
        Self::from_kernel(
            format!("attraction(c={strength})"),
            Arc::new(AttractionKernel { dim: d, strength }),
            0.0,
            strength.abs(),
            Subspace::full(d),
            Structure::FirstOrder,
        )
    }

    /// Cucker–Smale alignment with `a(r) = (1 + r²)^{−γ}`; controls act on
    /// velocities only.
    pub fn cucker_smale(gamma: f64, m: usize) -> Result<Self> {
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidInput(format!("γ must be ≥ 0, got {gamma}")));
        }
        if m == 0 {
            return Err(Error::InvalidInput("m must be ≥ 1".into()));
        }
        // |p| + a|p − p′| ≤ 2|x| + |y| since a ≤ 1.
        Self::from_kernel(
            format!("cucker_smale(gamma={gamma})"),
            Arc::new(CuckerSmaleKernel { m, gamma }),
            0.0,
            2.0,
            Subspace::velocities(m),
            Structure::SecondOrder { m },
        )
    }

    /// Friction plus alignment potential: `F₂ = −αp − Σ_j w_j ∇W(p − p_j)`.
    pub fn friction_alignment(alpha: f64, potential: AlignmentPotential, m: usize) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidInput(format!("α must be ≥ 0, got {alpha}")));
        }
        if m == 0 {
            return Err(Error::InvalidInput("m must be ≥ 1".into()));
        }
        let (wa, wb) = potential.growth();
        Self::from_kernel(
            format!("friction_alignment(alpha={alpha})"),
            Arc::new(FrictionKernel { m, alpha, potential }),
            wa,
            1.0 + alpha + wb,
            Subspace::velocities(m),
            Structure::SecondOrder { m },
        )
    }

    /// Same kernel and subspace with different declared growth constants.
    pub fn with_growth(mut self, growth_a: f64, growth_b: f64) -> Self {
        self.growth_a = growth_a;
        self.growth_b = growth_b;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn kernel(&self) -> &dyn Kernel {
        self.kernel.as_ref()
    }

    pub fn growth_a(&self) -> f64 {
        self.growth_a
    }

    pub fn growth_b(&self) -> f64 {
        self.growth_b
    }

    pub fn subspace(&self) -> &Subspace {
        &self.subspace
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    /// `Σ_j w_j K(x, y_j)` against a weighted cohort.
    pub fn eval_field(&self, x: &[f64], cohort: &DiscreteMeasure) -> Result<Vec<f64>> {
        let d = self.dim();
        if x.len() != d || cohort.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: if x.len() != d { x.len() } else { cohort.dim() },
            });
        }
        let mut out = vec![0.0; d];
        let mut buf = vec![0.0; d];
        for j in 0..cohort.len() {
            self.kernel.eval(x, cohort.point(j), &mut buf);
            let w = cohort.weight(j);
            for (o, b) in out.iter_mut().zip(&buf) {
                *o += w * b;
            }
        }
        Ok(out)
    }

    /// `out_i = F^N(x_i, x⃗)` for all agents of a flat `N × d` state.
    pub fn field(&self, states: &[f64], out: &mut [f64]) {
        let d = self.dim();
        let n = states.len() / d;
        let inv = 1.0 / n as f64;
        let agent = |i: usize, o: &mut [f64]| {
            let xi = &states[i * d..(i + 1) * d];
            let mut buf = vec![0.0; d];
            o.fill(0.0);
            for j in 0..n {
                self.kernel.eval(xi, &states[j * d..(j + 1) * d], &mut buf);
                for (a, b) in o.iter_mut().zip(&buf) {
                    *a += b;
                }
            }
            o.iter_mut().for_each(|a| *a *= inv);
        };
        if n >= PARALLEL_THRESHOLD {
            out.par_chunks_mut(d).enumerate().for_each(|(i, o)| agent(i, o));
        } else {
            out.chunks_mut(d).enumerate().for_each(|(i, o)| agent(i, o));
        }
    }

    /// Vector–Jacobian product of [`Self::field`]: `out = (∂F/∂x⃗)ᵀ w`, i.e.
    /// `out_i = (1/N) Σ_j [∂_x K(x_i, x_j)ᵀ w_i + ∂_y K(x_j, x_i)ᵀ w_j]`.
    pub fn field_vjp(&self, states: &[f64], w: &[f64], out: &mut [f64]) {
        let d = self.dim();
        let n = states.len() / d;
        let inv = 1.0 / n as f64;
        let kernel = self.kernel.as_ref();
        let agent = |i: usize, o: &mut [f64]| {
            let xi = &states[i * d..(i + 1) * d];
            let wi = &w[i * d..(i + 1) * d];
            let (mut jx, mut jy) = (vec![0.0; d * d], vec![0.0; d * d]);
            let (mut jx2, mut jy2) = (vec![0.0; d * d], vec![0.0; d * d]);
            o.fill(0.0);
            for j in 0..n {
                let xj = &states[j * d..(j + 1) * d];
                let wj = &w[j * d..(j + 1) * d];
                kernel_jacobians(kernel, xi, xj, &mut jx, &mut jy);
                kernel_jacobians(kernel, xj, xi, &mut jx2, &mut jy2);
                for b in 0..d {
                    let mut acc = 0.0;
                    for a in 0..d {
                        acc += jx[a * d + b] * wi[a] + jy2[a * d + b] * wj[a];
                    }
                    o[b] += acc;
                }
            }
            o.iter_mut().for_each(|a| *a *= inv);
        };
        if n >= PARALLEL_THRESHOLD {
            out.par_chunks_mut(d).enumerate().for_each(|(i, o)| agent(i, o));
        } else {
            out.chunks_mut(d).enumerate().for_each(|(i, o)| agent(i, o));
        }
    }

    /// Samples `x, y` uniformly in `[−radius, radius]^d` and checks the
    /// declared growth bound.
    pub fn check_growth(&self, radius: f64, samples: usize, seed: u64) -> GrowthReport {
        let d = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = vec![0.0; d];
        let mut worst = (0.0f64, vec![0.0; d], vec![0.0; d]);
        for _ in 0..samples {
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-radius..=radius)).collect();
            let y: Vec<f64> = (0..d).map(|_| rng.gen_range(-radius..=radius)).collect();
            self.kernel.eval(&x, &y, &mut out);
            let bound = self.growth_a + self.growth_b * (norm(&x) + norm(&y));
            let k = norm(&out);
            let ratio = if bound > 0.0 {
                k / bound
            } else if k > 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            if ratio > worst.0 {
                worst = (ratio, x, y);
            }
        }
        GrowthReport {
            samples,
            radius,
            worst_ratio: worst.0,
            worst_x: worst.1,
            worst_y: worst.2,
            passed: worst.0 <= 1.0 + 1e-12,
        }
    }

    /// `|P_{U^⊥}(F^N(x, y⃗) − F(x, μ[y⃗]))|`, with `F^N` summed agent by agent
    /// and `F` through the weighted cohort.
    pub fn compatibility_defect(&self, x: &[f64], cohort: &EmpiricalMeasure) -> Result<f64> {
        let d = self.dim();
        let n = cohort.len();
        let mut finite = vec![0.0; d];
        let mut buf = vec![0.0; d];
        for j in 0..n {
            self.kernel.eval(x, cohort.point(j), &mut buf);
            for (o, b) in finite.iter_mut().zip(&buf) {
                *o += b / n as f64;
            }
        }
        let limit = self.eval_field(x, &cohort.to_discrete())?;
        let diff: Vec<f64> = finite.iter().zip(&limit).map(|(a, b)| a - b).collect();
        Ok(self.subspace.distance(&diff))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_field() {
        let model = InteractionModel::zero(2);
        let cohort = DiscreteMeasure::uniform(2, vec![1.0, 2.0, -3.0, 0.5]).unwrap();
        assert_eq!(model.eval_field(&[0.3, 0.1], &cohort).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn symmetric_attraction_cancels() {
        let model = InteractionModel::linear_attraction(1, 1.0).unwrap();
        let cohort = DiscreteMeasure::uniform(1, vec![1.0, -1.0]).unwrap();
        assert_eq!(model.eval_field(&[0.0], &cohort).unwrap(), vec![0.0]);
    }

    #[test]
    fn cucker_smale_hand_case() {
        let model = InteractionModel::cucker_smale(0.5, 1).unwrap();
        let cohort = DiscreteMeasure::uniform(2, vec![0.0, 1.0, 1.0, -1.0]).unwrap();
        let f = model.eval_field(&[0.0, 1.0], &cohort).unwrap();
        assert_eq!(f[0], 1.0);
        assert!((f[1] + 1.0 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cucker_smale_alignment_fixed_point_and_constant_kernel() {
        let model = InteractionModel::cucker_smale(0.8, 2).unwrap();
        let pts = vec![0.0, 1.0, 0.5, -0.2, 3.0, -2.0, 0.5, -0.2, 1.0, 1.0, 0.5, -0.2];
        let cohort = DiscreteMeasure::uniform(4, pts.clone()).unwrap();
        let f = model.eval_field(&pts[0..4], &cohort).unwrap();
        assert_eq!(&f[2..], &[0.0, 0.0]);

        let flat = InteractionModel::cucker_smale(0.0, 1).unwrap();
        let cohort = DiscreteMeasure::new(2, vec![0.0, 1.0, 5.0, 3.0, -2.0, -1.0], vec![0.5, 0.3, 0.2]).unwrap();
        let mean_p = 0.5 * 1.0 + 0.3 * 3.0 - 0.2;
        let f = flat.eval_field(&[7.0, 2.0], &cohort).unwrap();
        assert!((f[1] + (2.0 - mean_p)).abs() < 1e-15);
    }

    #[test]
    fn friction_cases() {
        let free = InteractionModel::friction_alignment(0.0, AlignmentPotential::Zero, 2).unwrap();
        let cohort = DiscreteMeasure::uniform(4, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let x = [0.0, 0.0, 2.0, 0.0];
        assert_eq!(free.eval_field(&x, &cohort).unwrap(), vec![2.0, 0.0, 0.0, 0.0]);
        let damped = InteractionModel::friction_alignment(1.0, AlignmentPotential::Zero, 2).unwrap();
        assert_eq!(damped.eval_field(&x, &cohort).unwrap()[2..], [-2.0, 0.0]);
    }

    #[test]
    fn quadratic_potential_reduces_to_flat_alignment() {
        let fa = InteractionModel::friction_alignment(0.0, AlignmentPotential::Quadratic { strength: 1.0 }, 1).unwrap();
        let cs = InteractionModel::cucker_smale(0.0, 1).unwrap();
        let cohort = DiscreteMeasure::uniform(2, vec![0.0, 1.0, 1.0, -1.0]).unwrap();
        for x in [[0.0, 1.0], [1.0, -1.0], [0.3, 0.7]] {
            let a = fa.eval_field(&x, &cohort).unwrap();
            let b = cs.eval_field(&x, &cohort).unwrap();
            assert!((a[1] - b[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(InteractionModel::cucker_smale(-0.1, 1).is_err());
        assert!(InteractionModel::friction_alignment(-1.0, AlignmentPotential::Zero, 1).is_err());
        let model = InteractionModel::zero(2);
        let cohort = DiscreteMeasure::dirac(&[0.0]).unwrap();
        assert!(model.eval_field(&[0.0, 0.0], &cohort).is_err());
    }

    #[test]
    fn growth_declarations() {
        for model in [
            InteractionModel::cucker_smale(0.5, 2).unwrap(),
            InteractionModel::friction_alignment(0.5, AlignmentPotential::Quadratic { strength: 2.0 }, 1).unwrap(),
            InteractionModel::linear_attraction(3, 1.5).unwrap(),
        ] {
            assert!(model.check_growth(10.0, 2000, 1).passed, "{}", model.name());
        }
        let lying = InteractionModel::cucker_smale(0.5, 1).unwrap().with_growth(0.0, 0.0);
        assert!(!lying.check_growth(1.0, 100, 1).passed);
    }

    #[test]
    fn vjp_matches_transposed_finite_differences() {
        let model = InteractionModel::cucker_smale(0.5, 1).unwrap();
        let x = vec![0.1, 0.9, -0.4, 0.2, 0.8, -0.6];
        let w = vec![0.3, -1.0, 0.7, 0.5, -0.2, 0.4];
        let mut g = vec![0.0; 6];
        model.field_vjp(&x, &w, &mut g);
        let (mut fp, mut fm) = (vec![0.0; 6], vec![0.0; 6]);
        for k in 0..6 {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[k] += 1e-6;
            xm[k] -= 1e-6;
            model.field(&xp, &mut fp);
            model.field(&xm, &mut fm);
            let dir: f64 = (0..6).map(|a| w[a] * (fp[a] - fm[a]) / 2e-6).sum();
            assert!((dir - g[k]).abs() < 1e-8, "{k}: {dir} vs {}", g[k]);
        }
    }

    #[test]
    fn kernel_models_are_compatible() {
        let model = InteractionModel::cucker_smale(0.5, 1).unwrap();
        let cohort = EmpiricalMeasure::new(2, vec![0.0, 1.0, 2.0, -1.0, 0.5, 0.5]).unwrap();
        assert!(model.compatibility_defect(&[0.2, 0.3], &cohort).unwrap() <= 1e-12);
    }
}
