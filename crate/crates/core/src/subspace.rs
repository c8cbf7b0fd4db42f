//! Linear control subspaces `U ⊆ ℝ^d` stored through an orthonormal basis.
//!
//! Controls are always stored in basis coordinates, so a control signal lives
//! in `U` by construction; [`Subspace::embed`] maps coordinates back to `ℝ^d`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const ORTHONORMAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subspace {
    ambient: usize,
    /// Basis vectors, each of length `ambient`.
    basis: Vec<Vec<f64>>,
}

impl Subspace {
    /// The whole space `ℝ^d` with the canonical basis.
    pub fn full(ambient: usize) -> Self {
        Self::coordinate_block(ambient, 0, ambient)
    }

    /// Span of the canonical vectors `e_start, …, e_{start+len-1}`.
    pub fn coordinate_block(ambient: usize, start: usize, len: usize) -> Self {
        assert!(start + len <= ambient, "coordinate block out of range");
        let basis = (start..start + len)
            .map(|k| {
                let mut e = vec![0.0; ambient];
                e[k] = 1.0;
                e
            })
            .collect();
        Self { ambient, basis }
    }

    /// Velocity block `{0} × ℝ^m` of a second-order state `(q, p) ∈ ℝ^{2m}`.
    pub fn velocities(m: usize) -> Self {
        Self::coordinate_block(2 * m, m, m)
    }

    /// Builds a subspace from explicit basis vectors, which must be orthonormal.
    pub fn from_basis(ambient: usize, basis: Vec<Vec<f64>>) -> Result<Self> {
        if basis.len() > ambient {
            return Err(Error::InvalidInput(format!(
                "{} basis vectors in dimension {ambient}",
                basis.len()
            )));
        }
        for (a, va) in basis.iter().enumerate() {
            if va.len() != ambient {
                return Err(Error::DimensionMismatch {
                    expected: ambient,
                    found: va.len(),
                });
            }
            if va.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("subspace basis".into()));
            }
            for (b, vb) in basis.iter().enumerate().skip(a) {
                let dot: f64 = va.iter().zip(vb).map(|(x, y)| x * y).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                if (dot - target).abs() > ORTHONORMAL_TOL {
                    return Err(Error::InvalidInput(format!(
                        "basis is not orthonormal: <b{a}, b{b}> = {dot}"
                    )));
                }
            }
        }
        Ok(Self { ambient, basis })
    }

    /// Builds from a `d × m` matrix given row by row (columns are basis vectors).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let ambient = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidInput("ragged subspace matrix".into()));
        }
        let basis = (0..m).map(|c| rows.iter().map(|r| r[c]).collect()).collect();
        Self::from_basis(ambient, basis)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// Writes `Σ_a coords[a] b_a` into `out` (overwrites).
    pub fn embed_into(&self, coords: &[f64], out: &mut [f64]) {
        debug_assert_eq!(coords.len(), self.dim());
        debug_assert_eq!(out.len(), self.ambient);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (c, b) in coords.iter().zip(&self.basis) {
            for (o, bv) in out.iter_mut().zip(b) {
                *o += c * bv;
            }
        }
    }

    pub fn embed(&self, coords: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ambient];
        self.embed_into(coords, &mut out);
        out
    }

    /// Basis coordinates of the orthogonal projection of `x` onto the subspace.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        self.basis
            .iter()
            .map(|b| b.iter().zip(x).map(|(bv, xv)| bv * xv).sum())
            .collect()
    }

    /// Euclidean distance from `x` to the subspace.
    pub fn distance(&self, x: &[f64]) -> f64 {
        let back = self.embed(&self.project(x));
        back.iter()
            .zip(x)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Coordinates of `x`, rejecting points farther than `tol·(1+|x|)` from the subspace.
    pub fn coordinates(&self, x: &[f64], tol: f64) -> Result<Vec<f64>> {
        if x.len() != self.ambient {
            return Err(Error::DimensionMismatch {
                expected: self.ambient,
                found: x.len(),
            });
        }
        let distance = self.distance(x);
        let scale = 1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if distance > tol * scale {
            return Err(Error::NotInSubspace { distance });
        }
        Ok(self.project(x))
    }

    /// Whether both subspaces are the same set (compares orthogonal projectors).
    pub fn spans_same(&self, other: &Subspace) -> bool {
        if self.ambient != other.ambient || self.dim() != other.dim() {
            return false;
        }
        other
            .basis
            .iter()
            .all(|b| self.distance(b) <= 1e-9)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn velocity_block_embeds_into_trailing_coordinates() {
        let u = Subspace::velocities(2);
        assert_eq!(u.ambient_dim(), 4);
        assert_eq!(u.embed(&[3.0, -1.0]), vec![0.0, 0.0, 3.0, -1.0]);
        assert_eq!(u.project(&[9.0, 9.0, 3.0, -1.0]), vec![3.0, -1.0]);
        assert!((u.distance(&[1.0, 0.0, 5.0, 5.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_orthonormal_basis() {
        let err = Subspace::from_basis(2, vec![vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let diag = Subspace::from_rows(&[vec![s], vec![s]]).unwrap();
        assert_eq!(diag.dim(), 1);
        assert!(diag.coordinates(&[1.0, -1.0], 1e-9).is_err());
        let c = diag.coordinates(&[2.0, 2.0], 1e-9).unwrap();
        assert!((c[0] - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn spans_same_ignores_basis_orientation() {
        let a = Subspace::coordinate_block(3, 1, 1);
        let b = Subspace::from_basis(3, vec![vec![0.0, -1.0, 0.0]]).unwrap();
        assert!(a.spans_same(&b));
        assert!(!a.spans_same(&Subspace::coordinate_block(3, 0, 1)));
    }
}
