//! Balanced transportation problems with real masses, solved exactly by
//! successive shortest paths with node potentials on the dense bipartite graph.

use super::{PlanEntry, TransportPlan};
use crate::{Error, Result};

/// Source/target masses compared against this tolerance (relative to the total).
const BALANCE_TOL: f64 = 1e-9;

/// Solves `min Σ c_ij γ_ij` over couplings of `supply` and `demand`.
///
/// `cost` is row-major `supply.len() × demand.len()`; `+∞` entries mark
/// forbidden pairs. They are replaced by a large sentinel and any plan that
/// still routes mass through one is reported as [`Error::Infeasible`].
pub fn solve_transportation(cost: &[f64], supply: &[f64], demand: &[f64]) -> Result<TransportPlan> {
    let (n, m) = (supply.len(), demand.len());
    if cost.len() != n * m {
        return Err(Error::DimensionMismatch {
            expected: n * m,
            found: cost.len(),
        });
    }
    if n == 0 || m == 0 {
        return Err(Error::InvalidInput("transportation problem without atoms".into()));
    }
    let (total_s, total_d): (f64, f64) = (supply.iter().sum(), demand.iter().sum());
    if (total_s - total_d).abs() > BALANCE_TOL {
        return Err(Error::Unbalanced {
            left: total_s,
            right: total_d,
        });
    }
    if cost.iter().any(|c| c.is_nan() || *c == f64::NEG_INFINITY) {
        return Err(Error::NonFinite("ground cost".into()));
    }
    let finite_max = cost
        .iter()
        .filter(|c| c.is_finite())
        .fold(0.0f64, |a, c| a.max(c.abs()));
    let sentinel = (finite_max + 1.0) * 4.0 * (n + m) as f64;
    let c: Vec<f64> = cost
        .iter()
        .map(|&v| if v.is_finite() { v } else { sentinel })
        .collect();

    let eps = 1e-15 * total_s.max(1e-300);
    let mut rem_s = supply.to_vec();
    let mut rem_d = demand.to_vec();
    // Rescale the demand so both sides carry exactly the same total.
    if total_d > 0.0 {
        let scale = total_s / total_d;
        rem_d.iter_mut().for_each(|d| *d *= scale);
    }
    let mut flow = vec![0.0; n * m];

    // Potentials: sources then sinks. Reduced cost of i→j is c_ij + π_i − π_j.
    let mut pi = vec![0.0; n + m];
    for j in 0..m {
        pi[n + j] = (0..n).map(|i| c[i * m + j]).fold(f64::INFINITY, f64::min);
    }

    let nodes = n + m;
    let mut dist = vec![0.0; nodes];
    let mut parent = vec![usize::MAX; nodes];
    let mut done = vec![false; nodes];
    let max_rounds = 64 * nodes * nodes + 1000;
    let mut rounds = 0;
    while rem_s.iter().any(|&s| s > eps) {
        rounds += 1;
        if rounds > max_rounds {
            return Err(Error::InvalidInput(
                "transportation solver failed to terminate".into(),
            ));
        }
        for v in 0..nodes {
            dist[v] = if v < n && rem_s[v] > eps { 0.0 } else { f64::INFINITY };
            parent[v] = usize::MAX;
            done[v] = false;
        }
        let mut target = usize::MAX;
        loop {
            let mut best = usize::MAX;
            let mut best_d = f64::INFINITY;
            for v in 0..nodes {
                if !done[v] && dist[v] < best_d {
                    best_d = dist[v];
                    best = v;
                }
            }
            if best == usize::MAX {
                break;
            }
            done[best] = true;
            if best >= n {
                let j = best - n;
                if rem_d[j] > eps {
                    target = best;
                    break;
                }
                for i in 0..n {
                    if done[i] || flow[i * m + j] <= eps {
                        continue;
                    }
                    let rc = (-c[i * m + j] + pi[best] - pi[i]).max(0.0);
                    if best_d + rc < dist[i] {
                        dist[i] = best_d + rc;
                        parent[i] = best;
                    }
                }
            } else {
                let i = best;
                for j in 0..m {
                    let v = n + j;
                    if done[v] {
                        continue;
                    }
                    let rc = (c[i * m + j] + pi[i] - pi[v]).max(0.0);
                    if best_d + rc < dist[v] {
                        dist[v] = best_d + rc;
                        parent[v] = i;
                    }
                }
            }
        }
        if target == usize::MAX {
            return Err(Error::Infeasible);
        }
        let reach = dist[target];
        for v in 0..nodes {
            pi[v] += dist[v].min(reach);
        }
        // Bottleneck along the path.
        let mut delta = rem_d[target - n];
        let mut v = target;
        while parent[v] != usize::MAX {
            let u = parent[v];
            if u >= n {
                // backward arc sink u → source v cancels flow on (v, u)
                delta = delta.min(flow[v * m + (u - n)]);
            }
            v = u;
        }
        let source = v;
        delta = delta.min(rem_s[source]);
        let mut v = target;
        while parent[v] != usize::MAX {
            let u = parent[v];
            if u < n {
                flow[u * m + (v - n)] += delta;
            } else {
                let k = v * m + (u - n);
                flow[k] -= delta;
                if flow[k] <= eps {
                    flow[k] = 0.0;
                }
            }
            v = u;
        }
        rem_s[source] -= delta;
        if rem_s[source] <= eps {
            rem_s[source] = 0.0;
        }
        rem_d[target - n] -= delta;
        if rem_d[target - n] <= eps {
            rem_d[target - n] = 0.0;
        }
    }

    let mut entries = Vec::new();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..m {
            let mass = flow[i * m + j];
            if mass > 0.0 {
                if !cost[i * m + j].is_finite() {
                    return Err(Error::Infeasible);
                }
                total += mass * cost[i * m + j];
                entries.push(PlanEntry {
                    source: i,
                    target: j,
                    mass,
                });
            }
        }
    }
    Ok(TransportPlan {
        entries,
        cost: total,
    })
}

/// North-west corner rule on coordinate-sorted atoms: the optimal plan in one
/// dimension for any convex cost of `y − x`. `cost(i, j)` prices a unit of mass.
pub fn monotone_plan(
    x: &[f64],
    wx: &[f64],
    y: &[f64],
    wy: &[f64],
    cost: impl Fn(usize, usize) -> f64,
) -> TransportPlan {
    let order = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        idx
    };
    let (ox, oy) = (order(x), order(y));
    let (total_x, total_y): (f64, f64) = (wx.iter().sum(), wy.iter().sum());
    let scale = if total_y > 0.0 { total_x / total_y } else { 1.0 };
    let mut rx: Vec<f64> = wx.to_vec();
    let mut ry: Vec<f64> = wy.iter().map(|w| w * scale).collect();
    let (mut a, mut b) = (0, 0);
    let mut entries = Vec::new();
    let mut total = 0.0;
    while a < ox.len() && b < oy.len() {
        let (i, j) = (ox[a], oy[b]);
        let mass = rx[i].min(ry[j]);
        if mass > 0.0 {
            total += mass * cost(i, j);
            entries.push(PlanEntry {
                source: i,
                target: j,
                mass,
            });
        }
        rx[i] -= mass;
        ry[j] -= mass;
        // Advance whichever side is exhausted (ties advance both).
        let tol = 1e-15 * total_x.max(1e-300);
        let exhausted_x = rx[i] <= tol;
        let exhausted_y = ry[j] <= tol;
        if exhausted_x {
            a += 1;
        }
        if exhausted_y {
            b += 1;
        }
        if !exhausted_x && !exhausted_y {
            // Unreachable with exact arithmetic; guard against stalls.
            a += 1;
        }
    }
    TransportPlan {
        entries,
        cost: total,
    }
}
