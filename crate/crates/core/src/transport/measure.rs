use serde::Serialize;

use crate::{Error, Result};

fn check_points(dim: usize, points: &[f64]) -> Result<usize> {
    if dim == 0 {
        return Err(Error::InvalidInput("point dimension must be positive".into()));
    }
    if points.len() % dim != 0 {
        return Err(Error::InvalidInput(format!(
            "{} coordinates do not split into points of dimension {dim}",
            points.len()
        )));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("point coordinates".into()));
    }
    Ok(points.len() / dim)
}

/// Uniform measure `(1/N) Σ δ_{x_i}` on `N ≥ 1` points of `ℝ^d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalMeasure {
    dim: usize,
    points: Vec<f64>,
}

impl EmpiricalMeasure {
    /// `points` is row-major, `N × dim`.
    pub fn new(dim: usize, points: Vec<f64>) -> Result<Self> {
        let n = check_points(dim, &points)?;
        if n == 0 {
            return Err(Error::InvalidInput("empirical measure needs at least one point".into()));
        }
        Ok(Self { dim, points })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidInput("ragged point list".into()));
        }
        Self::new(dim, rows.concat())
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn to_discrete(&self) -> DiscreteMeasure {
        let n = self.len();
        DiscreteMeasure {
            dim: self.dim,
            points: self.points.clone(),
            weights: vec![1.0 / n as f64; n],
        }
    }
}

/// Weighted point cloud `Σ w_j δ_{x_j}`.
///
/// [`DiscreteMeasure::new`] insists on unit total mass; [`DiscreteMeasure::with_masses`]
/// accepts any nonnegative masses so that unbalanced inputs can be reported by
/// the transport solvers instead of being silently renormalized.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteMeasure {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(dim: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let m = Self::with_masses(dim, points, weights)?;
        let total = m.total_mass();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "probability weights sum to {total}, not 1"
            )));
        }
        Ok(m)
    }

    pub fn with_masses(dim: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        let n = check_points(dim, &points)?;
        if n != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: weights.len(),
            });
        }
        if n == 0 {
            return Err(Error::InvalidInput("measure needs at least one atom".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput("weights must be finite and nonnegative".into()));
        }
        Ok(Self {
            dim,
            points,
            weights,
        })
    }

    pub fn uniform(dim: usize, points: Vec<f64>) -> Result<Self> {
        Ok(EmpiricalMeasure::new(dim, points)?.to_discrete())
    }

    pub fn dirac(point: &[f64]) -> Result<Self> {
        Self::new(point.len(), point.to_vec(), vec![1.0])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Barycenter `Σ w_j x_j / Σ w_j`.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for (j, w) in self.weights.iter().enumerate() {
            for (mk, xk) in m.iter_mut().zip(self.point(j)) {
                *mk += w * xk;
            }
        }
        let total = self.total_mass();
        m.iter_mut().for_each(|v| *v /= total);
        m
    }

    /// Applies the same translation to every atom.
    pub fn translated(&self, shift: &[f64]) -> Self {
        let mut out = self.clone();
        for chunk in out.points.chunks_mut(self.dim) {
            chunk.iter_mut().zip(shift).for_each(|(p, s)| *p += s);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanEntry {
    pub source: usize,
    pub target: usize,
    pub mass: f64,
}

/// Coupling between two discrete measures together with its total cost.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportPlan {
    pub entries: Vec<PlanEntry>,
    pub cost: f64,
}

impl TransportPlan {
    /// Largest deviation of the plan marginals from the given weights.
    pub fn marginal_error(&self, source: &[f64], target: &[f64]) -> f64 {
        let mut rows = vec![0.0; source.len()];
        let mut cols = vec![0.0; target.len()];
        for e in &self.entries {
            rows[e.source] += e.mass;
            cols[e.target] += e.mass;
        }
        rows.iter()
            .zip(source)
            .chain(cols.iter().zip(target))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
