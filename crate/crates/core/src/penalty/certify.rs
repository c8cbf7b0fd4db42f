//! Grid certification of admissible functions.

use serde::Serialize;

use super::AdmissibleFunction;
use crate::{Error, Result};

/// Relative slack tolerated on the doubling inequalities.
const CHAIN_SLACK: f64 = 1e-9;
/// Growth of `φ(r)/r` over the last decade of the grid for the ratio to still
/// count as "increasing".
const UNBOUNDED_GROWTH: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoublingEstimate {
    /// `max φ(2r) / (1 + φ(r))` over the grid.
    pub value: f64,
    /// Grid point where the maximum is attained.
    pub argmax: f64,
    /// The ratio still grows by more than 5% over the last tenth of the grid.
    pub unbounded: bool,
}

/// Estimates the doubling constant of `phi` on the uniform grid
/// `r_j = j·r_max/n_grid`, `j = 1..=n_grid`.
pub fn estimate_doubling_constant(
    phi: impl Fn(f64) -> f64,
    r_max: f64,
    n_grid: usize,
) -> Result<DoublingEstimate> {
    if n_grid < 16 {
        return Err(Error::InvalidInput(format!(
            "doubling estimate needs at least 16 grid points (got {n_grid})"
        )));
    }
    if !(r_max > 0.0) || !r_max.is_finite() {
        return Err(Error::InvalidInput(format!("r_max must be positive (got {r_max})")));
    }
    let ratios = (1..=n_grid)
        .map(|j| {
            let r = r_max * j as f64 / n_grid as f64;
            let (a, b) = (phi(2.0 * r), phi(r));
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::NonFinite(format!("phi near r = {r}")));
            }
            Ok((r, a / (1.0 + b)))
        })
        .collect::<Result<Vec<_>>>()?;
    let (argmax, value) = ratios
        .iter()
        .copied()
        .fold((0.0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    let last = ratios[n_grid - 1].1;
    let decade_start = ratios[n_grid - 1 - n_grid / 10].1;
    Ok(DoublingEstimate {
        value,
        argmax,
        unbounded: last > UNBOUNDED_GROWTH * decade_start,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Largest violation found (positive means violated).
    pub worst_violation: f64,
    /// Grid point(s) where the worst violation occurs.
    pub worst_point: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub function: String,
    pub r_max: f64,
    pub n_grid: usize,
    pub checks: Vec<InvariantCheck>,
    pub doubling: DoublingEstimate,
}

impl AdmissibilityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&InvariantCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    pub r_max: f64,
    pub n_grid: usize,
    /// Required growth factor of `φ(r)/r` between `r_max/10` and `r_max`.
    pub superlinear_growth: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            r_max: 1e3,
            n_grid: 1024,
            superlinear_growth: 1.1,
        }
    }
}

struct Worst {
    violation: f64,
    point: Vec<f64>,
}

impl Worst {
    fn new() -> Self {
        Self {
            violation: f64::NEG_INFINITY,
            point: Vec::new(),
        }
    }

    fn offer(&mut self, violation: f64, point: &[f64]) {
        if violation > self.violation || violation.is_nan() {
            self.violation = violation;
            self.point = point.to_vec();
        }
    }

    fn into_check(self, name: &'static str) -> InvariantCheck {
        InvariantCheck {
            name,
            passed: self.violation <= 0.0,
            worst_violation: self.violation,
            worst_point: self.point,
        }
    }
}

/// Runs every defining property of an admissible function on the grid
/// `r_j = j·r_max/n_grid`, `j = 0..=n_grid` with default options otherwise.
pub fn verify_admissible(
    phi: &AdmissibleFunction,
    r_max: f64,
    n_grid: usize,
) -> Result<AdmissibilityReport> {
    verify_admissible_with(
        phi,
        &CertifyOptions {
            r_max,
            n_grid,
            ..CertifyOptions::default()
        },
    )
}

pub fn verify_admissible_with(
    phi: &AdmissibleFunction,
    opts: &CertifyOptions,
) -> Result<AdmissibilityReport> {
    let CertifyOptions {
        r_max,
        n_grid,
        superlinear_growth,
    } = *opts;
    if n_grid < 64 {
        return Err(Error::InvalidInput(format!(
            "admissibility certification needs at least 64 grid points (got {n_grid})"
        )));
    }
    if !(r_max > 0.0) || !r_max.is_finite() {
        return Err(Error::InvalidInput(format!("r_max must be positive (got {r_max})")));
    }
    let h = r_max / n_grid as f64;
    // Half-step grid so that midpoints of grid pairs are table lookups.
    let half: Vec<f64> = (0..=2 * n_grid).map(|k| phi.eval(0.5 * h * k as f64)).collect();
    let value = |j: usize| half[2 * j];
    let grid: Vec<f64> = (0..=n_grid).map(|j| h * j as f64).collect();
    let derivs: Vec<f64> = grid.iter().map(|&r| phi.deriv(r)).collect();
    let doubled: Vec<f64> = grid.iter().map(|&r| phi.eval(2.0 * r)).collect();
    let k = phi.doubling_constant();
    let mut checks = Vec::with_capacity(6);

    let mut origin = Worst::new();
    origin.offer(phi.eval(0.0).abs().max(phi.deriv(0.0).abs()) - 1e-12, &[0.0]);
    checks.push(origin.into_check("origin"));

    let mut convexity = Worst::new();
    for i in 0..=n_grid {
        for j in i + 1..=n_grid {
            let chord = 0.5 * (value(i) + value(j));
            let mid = half[i + j];
            let gap = chord - mid;
            let floor = 1e-14 * (1.0 + value(i).abs() + value(j).abs());
            convexity.offer(floor - gap, &[grid[i], grid[j]]);
        }
    }
    checks.push(convexity.into_check("strict_convexity"));

    let mut doubling = Worst::new();
    let mut chain = Worst::new();
    for j in 0..=n_grid {
        let (r, f, f2, df) = (grid[j], value(j), doubled[j], derivs[j]);
        let slack = CHAIN_SLACK * (1.0 + f2.abs());
        let bound = k * (1.0 + f);
        doubling.offer(f2 - bound - slack, &[r]);
        let links = [0.0, f, r * df, f2 - f, bound];
        let worst_link = links
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(f64::NEG_INFINITY, f64::max);
        chain.offer(worst_link - slack, &[r]);
    }
    checks.push(doubling.into_check("doubling"));
    checks.push(chain.into_check("doubling_chain"));

    // On a sorted grid, pairwise monotonicity of φ′ is equivalent to monotonicity
    // between neighbours.
    let mut monotone = Worst::new();
    for j in 0..n_grid {
        let drop = derivs[j] - derivs[j + 1];
        monotone.offer(drop - 1e-12 * (1.0 + derivs[j].abs()), &[grid[j], grid[j + 1]]);
    }
    checks.push(monotone.into_check("monotone_derivative"));

    let mut superlinear = Worst::new();
    let outer = value(n_grid) / r_max;
    let inner_r = r_max / 10.0;
    let inner = phi.eval(inner_r) / inner_r;
    superlinear.offer(superlinear_growth * inner - outer, &[inner_r, r_max]);
    if !(outer.is_finite() && inner.is_finite()) {
        superlinear.offer(f64::INFINITY, &[inner_r, r_max]);
    }
    checks.push(superlinear.into_check("superlinearity"));

    let doubling = estimate_doubling_constant(|r| phi.eval(r), r_max, n_grid)?;
    Ok(AdmissibilityReport {
        function: phi.name().to_string(),
        r_max,
        n_grid,
        checks,
        doubling,
    })
}
