//! Admissible (doubling) scalar functions and moderated convex penalties.
//!
//! An [`AdmissibleFunction`] is a *candidate* φ: construction does not certify
//! it. Certification happens on finite grids through [`verify_admissible`],
//! which reports every defining property separately so that non-admissible
//! candidates (linear growth, exponential growth, …) can be diagnosed.

mod certify;
mod conjugate;
mod infconv;

use std::fmt;
use std::sync::Arc;

pub use certify::{
    estimate_doubling_constant, verify_admissible, verify_admissible_with, AdmissibilityReport,
    CertifyOptions, DoublingEstimate, InvariantCheck,
};
pub use conjugate::{fenchel_conjugate, young_residual};
pub use infconv::inf_convolution;

use crate::{Error, Result, Subspace};

pub type ScalarMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type VectorMap = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorGradient = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Radius at which [`AdmissibleFunction::new`] records its superlinearity witness.
pub const WITNESS_RADIUS: f64 = 1e3;

/// Scalar function `φ: [0, ∞) → [0, ∞)` with derivative and declared doubling constant.
#[derive(Clone)]
pub struct AdmissibleFunction {
    name: String,
    eval: ScalarMap,
    deriv: ScalarMap,
    doubling_constant: f64,
    superlinearity_witness: (f64, f64),
}

impl AdmissibleFunction {
    pub fn new(
        name: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(f64) -> f64 + Send + Sync + 'static,
        doubling_constant: f64,
    ) -> Self {
        let ratio = eval(WITNESS_RADIUS) / WITNESS_RADIUS;
        Self {
            name: name.into(),
            eval: Arc::new(eval),
            deriv: Arc::new(deriv),
            doubling_constant,
            superlinearity_witness: (WITNESS_RADIUS, ratio),
        }
    }

    /// `φ(r) = r^p / p`, doubling with `K = 2^p`.
    pub fn power(p: f64) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidInput(format!(
                "power exponent must exceed 1 (got {p}); the penalty would not be superlinear"
            )));
        }
        Ok(Self::new(
            format!("r^{p}/{p}"),
            move |r: f64| r.powf(p) / p,
            move |r: f64| r.powf(p - 1.0),
            2f64.powf(p),
        ))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, r: f64) -> f64 {
        (self.eval)(r)
    }

    pub fn deriv(&self, r: f64) -> f64 {
        (self.deriv)(r)
    }

    pub fn doubling_constant(&self) -> f64 {
        self.doubling_constant
    }

    /// `(R, φ(R)/R)` recorded at construction.
    pub fn superlinearity_witness(&self) -> (f64, f64) {
        self.superlinearity_witness
    }
}

impl fmt::Debug for AdmissibleFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AdmissibleFunction")
            .field("name", &self.name)
            .field("doubling_constant", &self.doubling_constant)
            .field("superlinearity_witness", &self.superlinearity_witness)
            .finish()
    }
}

#[derive(Clone)]
pub enum PenaltyShape {
    /// `|x|^p / p`
    Power { p: f64 },
    /// `|x| / p` on the unit ball, `|x|^p / p` outside.
    Hybrid { p: f64 },
    Custom {
        eval: VectorMap,
        gradient: Option<VectorGradient>,
    },
}

impl fmt::Debug for PenaltyShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Power { p } => write!(f, "Power {{ p: {p} }}"),
            Self::Hybrid { p } => write!(f, "Hybrid {{ p: {p} }}"),
            Self::Custom { gradient, .. } => {
                write!(f, "Custom {{ analytic_gradient: {} }}", gradient.is_some())
            }
        }
    }
}

/// Convex control cost `ψ: U → [0, ∞)` sandwiched as
/// `φ(|x|) − 1 ≤ ψ(x) ≤ C(1 + φ(|x|))` against its reference `φ`.
///
/// Arguments are coordinates in the orthonormal basis of `U`, so `|x|` is the
/// Euclidean norm of the coordinate vector.
#[derive(Debug, Clone)]
pub struct ModeratedPenalty {
    name: String,
    shape: PenaltyShape,
    subspace: Subspace,
    reference: AdmissibleFunction,
    sandwich_constant: f64,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl ModeratedPenalty {
    pub fn power(p: f64, subspace: Subspace) -> Result<Self> {
        let reference = AdmissibleFunction::power(p)?;
        Ok(Self {
            name: format!("power(p={p})"),
            shape: PenaltyShape::Power { p },
            subspace,
            reference,
            sandwich_constant: 1.0,
        })
    }

    pub fn hybrid(p: f64, subspace: Subspace) -> Result<Self> {
        let reference = AdmissibleFunction::power(p)?;
        Ok(Self {
            name: format!("hybrid(p={p})"),
            shape: PenaltyShape::Hybrid { p },
            subspace,
            reference,
            sandwich_constant: 1.0,
        })
    }

    /// A user-supplied penalty. The sandwich against `reference` is not checked
    /// here; see [`ModeratedPenalty::sandwich_violation`].
    pub fn custom(
        name: impl Into<String>,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: Option<VectorGradient>,
        subspace: Subspace,
        reference: AdmissibleFunction,
        sandwich_constant: f64,
    ) -> Self {
        Self {
            name: name.into(),
            shape: PenaltyShape::Custom {
                eval: Arc::new(eval),
                gradient,
            },
            subspace,
            reference,
            sandwich_constant,
        }
    }

    /// The inf-convolution approximation `ψ^n(x) = inf_y ψ(y) + n θ(|x − y|)`
    /// as a penalty of its own (evaluated numerically on demand).
    pub fn inf_convolved(&self, theta: &AdmissibleFunction, n: usize) -> Self {
        let base = self.clone();
        let theta = theta.clone();
        let eval = move |x: &[f64]| {
            inf_convolution(&base, &theta, n, x).expect("coordinates sized to the subspace")
        };
        Self::custom(
            format!("{}^{n}", self.name),
            eval,
            None,
            self.subspace.clone(),
            self.reference.clone(),
            self.sandwich_constant,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn shape(&self) -> &PenaltyShape {
        &self.shape
    }

    pub fn subspace(&self) -> &Subspace {
        &self.subspace
    }

    pub fn dim(&self) -> usize {
        self.subspace.dim()
    }

    pub fn reference(&self) -> &AdmissibleFunction {
        &self.reference
    }

    pub fn sandwich_constant(&self) -> f64 {
        self.sandwich_constant
    }

    /// `ψ(x)` for `x` given in subspace coordinates.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.shape {
            PenaltyShape::Power { p } => norm(x).powf(*p) / p,
            PenaltyShape::Hybrid { p } => {
                let r = norm(x);
                if r <= 1.0 {
                    r / p
                } else {
                    r.powf(*p) / p
                }
            }
            PenaltyShape::Custom { eval, .. } => eval(x),
        }
    }

    /// `ψ` at an ambient vector, rejecting vectors outside `U`.
    pub fn eval_ambient(&self, x: &[f64]) -> Result<f64> {
        let coords = self.subspace.coordinates(x, 1e-9)?;
        Ok(self.eval(&coords))
    }

    /// Writes a (sub)gradient of `ψ` at `x` into `out`. Kinks use the
    /// minimal-norm element when it is zero, and custom penalties without an
    /// analytic gradient fall back to central differences.
    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        match &self.shape {
            PenaltyShape::Power { p } => {
                let r = norm(x);
                let scale = if r > 0.0 { r.powf(p - 2.0) } else { 0.0 };
                out.iter_mut().zip(x).for_each(|(o, v)| *o = scale * v);
            }
            PenaltyShape::Hybrid { p } => {
                let r = norm(x);
                let scale = if r == 0.0 {
                    0.0
                } else if r <= 1.0 {
                    1.0 / (p * r)
                } else {
                    r.powf(p - 2.0)
                };
                out.iter_mut().zip(x).for_each(|(o, v)| *o = scale * v);
            }
            PenaltyShape::Custom {
                gradient: Some(g), ..
            } => g(x, out),
            PenaltyShape::Custom {
                eval,
                gradient: None,
            } => {
                let mut probe = x.to_vec();
                for k in 0..x.len() {
                    let h = 1e-6 * (1.0 + x[k].abs());
                    probe[k] = x[k] + h;
                    let fp = eval(&probe);
                    probe[k] = x[k] - h;
                    let fm = eval(&probe);
                    probe[k] = x[k];
                    out[k] = (fp - fm) / (2.0 * h);
                }
            }
        }
    }

    /// Largest violation of the sandwich `φ(|x|) − 1 ≤ ψ(x) ≤ C(1 + φ(|x|))`
    /// over the given sample points (non-positive means the sandwich holds).
    pub fn sandwich_violation<'a>(&self, samples: impl IntoIterator<Item = &'a [f64]>) -> f64 {
        samples
            .into_iter()
            .map(|x| {
                let phi = self.reference.eval(norm(x));
                let psi = self.eval(x);
                let lower = phi - 1.0 - psi;
                let upper = psi - self.sandwich_constant * (1.0 + phi);
                lower.max(upper)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}
