//! Exact optimal transport between discrete measures.
//!
//! - [`w1_assignment`]: `d_N` between equally sized empirical measures as an
//!   optimal assignment.
//! - [`w1_general`]: `W1` between arbitrary discrete measures (transportation
//!   problem).
//! - [`transport_cost`]: the generalized cost `𝒞_ψ(μ, ν) = min_γ ∫ ψ(y − x) dγ`
//!   for ground costs that may be `+∞` outside a subspace.
//!
//! One-dimensional inputs take a sorted-matching fast path in the `W1`
//! solvers; the combinatorial solvers remain available through
//! [`solve_assignment`] and [`solve_transportation`] for cross-checks.

mod assignment;
mod measure;
mod transportation;

pub use assignment::{solve_assignment, sorted_matching};
pub use measure::{DiscreteMeasure, EmpiricalMeasure, PlanEntry, TransportPlan};
pub use transportation::{monotone_plan, solve_transportation};

use crate::penalty::ModeratedPenalty;
use crate::{Error, Result};

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Price of moving a unit of mass by the displacement `z = y − x`; `None`
/// stands for `+∞`.
pub trait GroundCost {
    fn cost(&self, displacement: &[f64]) -> Option<f64>;
}

/// `|z|`, the `W1` ground cost.
#[derive(Debug, Clone, Copy, Default)]
pub struct Euclidean;

impl GroundCost for Euclidean {
    fn cost(&self, z: &[f64]) -> Option<f64> {
        Some(z.iter().map(|v| v * v).sum::<f64>().sqrt())
    }
}

/// `|z|^p`; with `p ≠ 1` the optimal cost is `W_p^p`.
#[derive(Debug, Clone, Copy)]
pub struct PowerCost(pub f64);

impl GroundCost for PowerCost {
    fn cost(&self, z: &[f64]) -> Option<f64> {
        Some(z.iter().map(|v| v * v).sum::<f64>().sqrt().powf(self.0))
    }
}

/// Displacements outside the penalty's subspace cost `+∞`.
impl GroundCost for ModeratedPenalty {
    fn cost(&self, z: &[f64]) -> Option<f64> {
        self.eval_ambient(z).ok()
    }
}

/// Wraps any closure as a (finite) ground cost.
pub struct FnCost<F>(pub F);

impl<F: Fn(&[f64]) -> f64> GroundCost for FnCost<F> {
    fn cost(&self, z: &[f64]) -> Option<f64> {
        Some((self.0)(z))
    }
}

/// `d_N(x, y) = min_σ (1/N) Σ |x_i − y_σ(i)|` and an optimal permutation
/// (`perm[i] = σ(i)`); equals `W1(μ[x], μ[y])`.
pub fn w1_assignment(x: &EmpiricalMeasure, y: &EmpiricalMeasure) -> Result<(f64, Vec<usize>)> {
    if x.len() != y.len() {
        return Err(Error::UnequalSizes {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    let n = x.len();
    let perm = if x.dim() == 1 {
        sorted_matching(x.points(), y.points())
    } else {
        let cost: Vec<f64> = (0..n * n)
            .map(|k| distance(x.point(k / n), y.point(k % n)))
            .collect();
        solve_assignment(&cost, n)
    };
    let value = perm
        .iter()
        .enumerate()
        .map(|(i, &j)| distance(x.point(i), y.point(j)))
        .sum::<f64>()
        / n as f64;
    Ok((value, perm))
}

fn check_pair(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<()> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            found: nu.dim(),
        });
    }
    let (a, b) = (mu.total_mass(), nu.total_mass());
    if (a - b).abs() > 1e-9 {
        return Err(Error::Unbalanced { left: a, right: b });
    }
    Ok(())
}

/// `W1(μ, ν)` with an optimal plan.
pub fn w1_general(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<(f64, TransportPlan)> {
    check_pair(mu, nu)?;
    if mu.dim() == 1 {
        let plan = monotone_plan(mu.points(), mu.weights(), nu.points(), nu.weights(), |i, j| {
            (mu.points()[i] - nu.points()[j]).abs()
        });
        return Ok((plan.cost, plan));
    }
    let plan = solve_with(&Euclidean, mu, nu)?;
    Ok((plan.cost, plan))
}

/// `W1` computed by the general transportation solver even in one dimension.
pub fn w1_network(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<(f64, TransportPlan)> {
    check_pair(mu, nu)?;
    let plan = solve_with(&Euclidean, mu, nu)?;
    Ok((plan.cost, plan))
}

fn solve_with(
    ground: &(impl GroundCost + ?Sized),
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
) -> Result<TransportPlan> {
    let (n, m, d) = (mu.len(), nu.len(), mu.dim());
    let mut z = vec![0.0; d];
    let mut cost = Vec::with_capacity(n * m);
    for i in 0..n {
        for j in 0..m {
            z.iter_mut()
                .zip(nu.point(j).iter().zip(mu.point(i)))
                .for_each(|(zk, (yk, xk))| *zk = yk - xk);
            cost.push(ground.cost(&z).unwrap_or(f64::INFINITY));
        }
    }
    solve_transportation(&cost, mu.weights(), nu.weights())
}

/// `𝒞_ψ(μ, ν)` with an optimal plan; ground cost `ψ(y − x)`.
pub fn transport_cost(
    ground: &(impl GroundCost + ?Sized),
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
) -> Result<(f64, TransportPlan)> {
    check_pair(mu, nu)?;
    let plan = solve_with(ground, mu, nu)?;
    Ok((plan.cost, plan))
}

/// `Σ_j w_j θ(|x_j|)`.
pub fn moment(mu: &DiscreteMeasure, theta: impl Fn(f64) -> f64) -> f64 {
    (0..mu.len())
        .map(|j| {
            let r = mu.point(j).iter().map(|v| v * v).sum::<f64>().sqrt();
            mu.weight(j) * theta(r)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Subspace;

    #[test]
    fn identical_clouds_are_at_distance_zero() {
        let x = EmpiricalMeasure::from_rows(&[vec![0.0, 1.0], vec![2.0, -1.0], vec![0.5, 0.5]]).unwrap();
        let (d, perm) = w1_assignment(&x, &x).unwrap();
        assert_eq!(d, 0.0);
        assert_eq!(perm, vec![0, 1, 2]);
    }

    #[test]
    fn one_dimensional_shift() {
        let x = EmpiricalMeasure::new(1, vec![0.0, 1.0]).unwrap();
        let y = EmpiricalMeasure::new(1, vec![1.0, 2.0]).unwrap();
        assert_eq!(w1_assignment(&x, &y).unwrap().0, 1.0);
    }

    #[test]
    fn unequal_sizes_are_rejected() {
        let x = EmpiricalMeasure::new(1, vec![0.0, 1.0]).unwrap();
        let y = EmpiricalMeasure::new(1, vec![1.0]).unwrap();
        assert!(matches!(w1_assignment(&x, &y), Err(Error::UnequalSizes { .. })));
    }

    #[test]
    fn dirac_to_dirac() {
        let mu = DiscreteMeasure::dirac(&[0.0, 0.0]).unwrap();
        let nu = DiscreteMeasure::dirac(&[3.0, 4.0]).unwrap();
        let (d, plan) = w1_general(&mu, &nu).unwrap();
        assert_eq!(d, 5.0);
        assert_eq!(plan.entries.len(), 1);
        assert_eq!(plan.entries[0].mass, 1.0);
    }

    #[test]
    fn split_mass_onto_midpoint() {
        let mu = DiscreteMeasure::uniform(1, vec![0.0, 2.0]).unwrap();
        let nu = DiscreteMeasure::dirac(&[1.0]).unwrap();
        assert!((w1_general(&mu, &nu).unwrap().0 - 1.0).abs() < 1e-15);
        assert!((w1_network(&mu, &nu).unwrap().0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unbalanced_masses_are_rejected() {
        let mu = DiscreteMeasure::with_masses(1, vec![0.0], vec![1.0]).unwrap();
        let nu = DiscreteMeasure::with_masses(1, vec![1.0], vec![0.5]).unwrap();
        assert!(matches!(w1_general(&mu, &nu), Err(Error::Unbalanced { .. })));
        assert!(DiscreteMeasure::new(1, vec![0.0], vec![0.5]).is_err());
    }

    #[test]
    fn subspace_restricted_costs_report_infeasibility() {
        let psi = ModeratedPenalty::power(2.0, Subspace::velocities(1)).unwrap();
        // Mass has to move in the position coordinate: impossible.
        let mu = DiscreteMeasure::dirac(&[0.0, 0.0]).unwrap();
        let nu = DiscreteMeasure::dirac(&[1.0, 0.0]).unwrap();
        assert!(matches!(transport_cost(&psi, &mu, &nu), Err(Error::Infeasible)));
        // Pure velocity moves are fine: ½|1|² = 0.5.
        let nu = DiscreteMeasure::dirac(&[0.0, 1.0]).unwrap();
        assert!((transport_cost(&psi, &mu, &nu).unwrap().0 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn diagonal_plan_for_equal_measures() {
        let psi = ModeratedPenalty::power(2.0, Subspace::full(2)).unwrap();
        let mu = DiscreteMeasure::new(2, vec![0.0, 0.0, 1.0, 2.0, -1.0, 0.5], vec![0.2, 0.5, 0.3]).unwrap();
        let (c, plan) = transport_cost(&psi, &mu, &mu).unwrap();
        assert_eq!(c, 0.0);
        assert!(plan.marginal_error(mu.weights(), mu.weights()) < 1e-12);
    }

    #[test]
    fn moments() {
        let delta0 = DiscreteMeasure::dirac(&[0.0, 0.0]).unwrap();
        assert_eq!(moment(&delta0, |r| r), 0.0);
        let mu = DiscreteMeasure::uniform(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(moment(&mu, |r| r), 1.0);
    }
}
