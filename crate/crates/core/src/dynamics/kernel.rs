//! Pairwise interaction kernels `K: ℝ^d × ℝ^d → ℝ^d`.

use std::fmt;
use std::sync::Arc;

/// A continuous interaction kernel. The induced field against a cohort with
/// weights `w_j` is `Σ_j w_j K(x, y_j)`.
pub trait Kernel: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64], y: &[f64], out: &mut [f64]);

    /// Writes row-major `∂K/∂x` and `∂K/∂y` (`d × d` each) and returns `true`,
    /// or returns `false` when no analytic form is available.
    fn jacobians(&self, _x: &[f64], _y: &[f64], _jx: &mut [f64], _jy: &mut [f64]) -> bool {
        false
    }
}

/// Analytic Jacobians when the kernel has them, central differences with step
/// `1e-6·(1 + |arg|)` otherwise.
pub fn kernel_jacobians(k: &dyn Kernel, x: &[f64], y: &[f64], jx: &mut [f64], jy: &mut [f64]) {
    if k.jacobians(x, y, jx, jy) {
        return;
    }
    let d = k.dim();
    let mut plus = vec![0.0; d];
    let mut minus = vec![0.0; d];
    let mut arg = x.to_vec();
    for b in 0..d {
        let h = 1e-6 * (1.0 + x[b].abs());
        arg[b] = x[b] + h;
        k.eval(&arg, y, &mut plus);
        arg[b] = x[b] - h;
        k.eval(&arg, y, &mut minus);
        arg[b] = x[b];
        for a in 0..d {
            jx[a * d + b] = (plus[a] - minus[a]) / (2.0 * h);
        }
    }
    let mut arg = y.to_vec();
    for b in 0..d {
        let h = 1e-6 * (1.0 + y[b].abs());
        arg[b] = y[b] + h;
        k.eval(x, &arg, &mut plus);
        arg[b] = y[b] - h;
        k.eval(x, &arg, &mut minus);
        arg[b] = y[b];
        for a in 0..d {
            jy[a * d + b] = (plus[a] - minus[a]) / (2.0 * h);
        }
    }
}

/// `K ≡ 0`.
#[derive(Debug, Clone, Copy)]
pub struct ZeroKernel {
    pub dim: usize,
}

impl Kernel for ZeroKernel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, _x: &[f64], _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn jacobians(&self, _x: &[f64], _y: &[f64], jx: &mut [f64], jy: &mut [f64]) -> bool {
        jx.fill(0.0);
        jy.fill(0.0);
        true
    }
}

/// `K(x, y) = −c(x − y)`: linear attraction towards the cohort mean.
#[derive(Debug, Clone, Copy)]
pub struct AttractionKernel {
    pub dim: usize,
    pub strength: f64,
}

impl Kernel for AttractionKernel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
            *o = -self.strength * (a - b);
        }
    }

    fn jacobians(&self, _x: &[f64], _y: &[f64], jx: &mut [f64], jy: &mut [f64]) -> bool {
        let d = self.dim;
        jx.fill(0.0);
        jy.fill(0.0);
        for a in 0..d {
            jx[a * d + a] = -self.strength;
            jy[a * d + a] = self.strength;
        }
        true
    }
}

/// Second-order alignment `K((q,p),(q′,p′)) = (p, −a(|q−q′|)(p−p′))` with
/// `a(r) = (1 + r²)^{−γ}`.
#[derive(Debug, Clone, Copy)]
pub struct CuckerSmaleKernel {
    pub m: usize,
    pub gamma: f64,
}

impl CuckerSmaleKernel {
    pub fn communication(&self, r: f64) -> f64 {
        (1.0 + r * r).powf(-self.gamma)
    }
}

impl Kernel for CuckerSmaleKernel {
    fn dim(&self) -> usize {
        2 * self.m
    }

    fn eval(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let m = self.m;
        let r2: f64 = (0..m).map(|b| (x[b] - y[b]).powi(2)).sum();
        let a = (1.0 + r2).powf(-self.gamma);
        for b in 0..m {
            out[b] = x[m + b];
            out[m + b] = -a * (x[m + b] - y[m + b]);
        }
    }

    fn jacobians(&self, x: &[f64], y: &[f64], jx: &mut [f64], jy: &mut [f64]) -> bool {
        let m = self.m;
        let d = 2 * m;
        jx.fill(0.0);
        jy.fill(0.0);
        let r2: f64 = (0..m).map(|b| (x[b] - y[b]).powi(2)).sum();
        let a = (1.0 + r2).powf(-self.gamma);
        // ∂a/∂q_b = −2γ(1+r²)^{−γ−1}(q−q′)_b
        let da = -2.0 * self.gamma * a / (1.0 + r2);
        for b in 0..m {
            jx[b * d + m + b] = 1.0;
        }
        for row in 0..m {
            let dp = x[m + row] - y[m + row];
            for b in 0..m {
                let g = -dp * da * (x[b] - y[b]);
                jx[(m + row) * d + b] = g;
                jy[(m + row) * d + b] = -g;
            }
            jx[(m + row) * d + m + row] = -a;
            jy[(m + row) * d + m + row] = a;
        }
        true
    }
}

/// Gradient `∇W` of an alignment potential acting on velocity differences.
#[derive(Clone)]
pub enum AlignmentPotential {
    Zero,
    /// `W(z) = c|z|²/2`, `∇W(z) = c z`.
    Quadratic { strength: f64 },
    /// User gradient with declared growth `|∇W(z)| ≤ a + b|z|`.
    Custom {
        gradient: Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>,
        growth_a: f64,
        growth_b: f64,
    },
}

impl fmt::Debug for AlignmentPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Quadratic { strength } => write!(f, "Quadratic {{ strength: {strength} }}"),
            Self::Custom {
                growth_a, growth_b, ..
            } => write!(f, "Custom {{ growth_a: {growth_a}, growth_b: {growth_b} }}"),
        }
    }
}

impl AlignmentPotential {
    /// `(a, b)` in `|∇W(z)| ≤ a + b|z|`.
    pub fn growth(&self) -> (f64, f64) {
        match self {
            Self::Zero => (0.0, 0.0),
            Self::Quadratic { strength } => (0.0, strength.abs()),
            Self::Custom {
                growth_a, growth_b, ..
            } => (*growth_a, *growth_b),
        }
    }

    fn gradient(&self, z: &[f64], out: &mut [f64]) {
        match self {
            Self::Zero => out.fill(0.0),
            Self::Quadratic { strength } => {
                for (o, v) in out.iter_mut().zip(z) {
                    *o = strength * v;
                }
            }
            Self::Custom { gradient, .. } => gradient(z, out),
        }
    }
}

/// `K((q,p),(q′,p′)) = (p, −αp − ∇W(p − p′))`.
#[derive(Debug, Clone)]
pub struct FrictionKernel {
    pub m: usize,
    pub alpha: f64,
    pub potential: AlignmentPotential,
}

impl Kernel for FrictionKernel {
    fn dim(&self) -> usize {
        2 * self.m
    }

    fn eval(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let m = self.m;
        let z: Vec<f64> = (0..m).map(|b| x[m + b] - y[m + b]).collect();
        let (head, tail) = out.split_at_mut(m);
        self.potential.gradient(&z, tail);
        for b in 0..m {
            head[b] = x[m + b];
            tail[b] = -self.alpha * x[m + b] - tail[b];
        }
    }

    fn jacobians(&self, _x: &[f64], _y: &[f64], jx: &mut [f64], jy: &mut [f64]) -> bool {
        let strength = match self.potential {
            AlignmentPotential::Zero => 0.0,
            AlignmentPotential::Quadratic { strength } => strength,
            AlignmentPotential::Custom { .. } => return false,
        };
        let m = self.m;
        let d = 2 * m;
        jx.fill(0.0);
        jy.fill(0.0);
        for b in 0..m {
            jx[b * d + m + b] = 1.0;
            jx[(m + b) * d + m + b] = -self.alpha - strength;
            jy[(m + b) * d + m + b] = strength;
        }
        true
    }
}

/// Wraps a closure as a kernel (Jacobians by finite differences).
pub struct FnKernel {
    pub dim: usize,
    pub f: Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>,
}

impl Kernel for FnKernel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        (self.f)(x, y, out)
    }
}
