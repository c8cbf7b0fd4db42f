use itertools::Itertools;
use mflab::penalty::ModeratedPenalty;
use mflab::transport::{
    moment, transport_cost, w1_assignment, w1_general, w1_network, DiscreteMeasure,
    EmpiricalMeasure, Euclidean, FnCost, PowerCost,
};
use mflab::Subspace;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cloud(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<f64> {
    (0..n * d).map(|_| rng.gen_range(-2.0..2.0)).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|v| v / s).collect()
}

#[test]
fn assignment_matches_permutation_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let x = EmpiricalMeasure::new(2, cloud(&mut rng, 6, 2)).unwrap();
        let y = EmpiricalMeasure::new(2, cloud(&mut rng, 6, 2)).unwrap();
        let brute = (0..6)
            .permutations(6)
            .map(|p| {
                p.iter()
                    .enumerate()
                    .map(|(i, &j)| dist(x.point(i), y.point(j)))
                    .sum::<f64>()
                    / 6.0
            })
            .fold(f64::INFINITY, f64::min);
        let (d, perm) = w1_assignment(&x, &y).unwrap();
        assert!((d - brute).abs() < 1e-12, "{d} vs {brute}");
        let mut sorted = perm.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..6).collect::<Vec<_>>());
    }
}

fn lp_oracle(cost: &[f64], a: &[f64], b: &[f64]) -> f64 {
    use minilp::{ComparisonOp, OptimizationDirection, Problem};
    let (n, m) = (a.len(), b.len());
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = cost.iter().map(|&c| lp.add_var(c, (0.0, f64::INFINITY))).collect();
    for i in 0..n {
        let row: Vec<_> = (0..m).map(|j| (vars[i * m + j], 1.0)).collect();
        lp.add_constraint(&row, ComparisonOp::Eq, a[i]);
    }
    for j in 0..m {
        let col: Vec<_> = (0..n).map(|i| (vars[i * m + j], 1.0)).collect();
        lp.add_constraint(&col, ComparisonOp::Eq, b[j]);
    }
    lp.solve().unwrap().objective()
}

#[test]
fn general_solver_matches_linear_program() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for d in [1usize, 2, 3] {
        for _ in 0..4 {
            let mu = DiscreteMeasure::new(d, cloud(&mut rng, 5, d), simplex(&mut rng, 5)).unwrap();
            let nu = DiscreteMeasure::new(d, cloud(&mut rng, 7, d), simplex(&mut rng, 7)).unwrap();
            let cost: Vec<f64> = (0..35).map(|k| dist(mu.point(k / 7), nu.point(k % 7))).collect();
            let oracle = lp_oracle(&cost, mu.weights(), nu.weights());
            let (w, plan) = w1_general(&mu, &nu).unwrap();
            assert!((w - oracle).abs() < 1e-9, "d={d}: {w} vs {oracle}");
            assert!(plan.marginal_error(mu.weights(), nu.weights()) < 1e-9);
            assert!(plan.entries.iter().all(|e| e.mass >= 0.0));
            let (wn, _) = w1_network(&mu, &nu).unwrap();
            assert!((wn - oracle).abs() < 1e-9);
        }
    }
}

/// Minimum over basic feasible solutions: each is the unique flow on a
/// spanning tree of the complete bipartite graph.
fn vertex_enumeration(cost: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len(), b.len());
    let edges: Vec<(usize, usize)> = (0..n).cartesian_product(0..m).collect();
    let mut best = f64::INFINITY;
    for tree in edges.iter().copied().combinations(n + m - 1) {
        let mut rem: Vec<f64> = a.iter().chain(b).copied().collect();
        let mut alive = tree.clone();
        let mut flow = Vec::new();
        let mut ok = true;
        while !alive.is_empty() {
            let mut deg = vec![0usize; n + m];
            for &(i, j) in &alive {
                deg[i] += 1;
                deg[n + j] += 1;
            }
            let Some(k) = alive
                .iter()
                .position(|&(i, j)| deg[i] == 1 || deg[n + j] == 1)
            else {
                ok = false; // cycle
                break;
            };
            let (i, j) = alive.remove(k);
            let f = if deg[i] == 1 { rem[i] } else { rem[n + j] };
            rem[i] -= f;
            rem[n + j] -= f;
            flow.push((i, j, f));
        }
        if !ok || flow.iter().any(|&(_, _, f)| f < -1e-12) || rem.iter().any(|r| r.abs() > 1e-12) {
            continue;
        }
        let c: f64 = flow.iter().map(|&(i, j, f)| f * cost[i * m + j]).sum();
        best = best.min(c);
    }
    best
}

#[test]
fn squared_cost_matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let psi = PowerCost(2.0);
    for _ in 0..5 {
        let mu = DiscreteMeasure::new(2, cloud(&mut rng, 3, 2), simplex(&mut rng, 3)).unwrap();
        let nu = DiscreteMeasure::new(2, cloud(&mut rng, 3, 2), simplex(&mut rng, 3)).unwrap();
        let cost: Vec<f64> = (0..9)
            .map(|k| dist(mu.point(k / 3), nu.point(k % 3)).powi(2))
            .collect();
        let oracle = vertex_enumeration(&cost, mu.weights(), nu.weights());
        let (c, _) = transport_cost(&psi, &mu, &nu).unwrap();
        assert!((c - oracle).abs() < 1e-12, "{c} vs {oracle}");
        // Through a penalty ½|z|², the same plan at half the price.
        let half = ModeratedPenalty::power(2.0, Subspace::full(2)).unwrap();
        let (h, _) = transport_cost(&half, &mu, &nu).unwrap();
        assert!((2.0 * h - oracle).abs() < 1e-12);
    }
}

#[test]
fn euclidean_ground_cost_is_w1() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mu = DiscreteMeasure::new(2, cloud(&mut rng, 4, 2), simplex(&mut rng, 4)).unwrap();
    let nu = DiscreteMeasure::new(2, cloud(&mut rng, 6, 2), simplex(&mut rng, 6)).unwrap();
    let a = transport_cost(&Euclidean, &mu, &nu).unwrap().0;
    let b = transport_cost(&FnCost(|z: &[f64]| z.iter().map(|v| v * v).sum::<f64>().sqrt()), &mu, &nu)
        .unwrap()
        .0;
    let w = w1_general(&mu, &nu).unwrap().0;
    assert!((a - w).abs() < 1e-12 && (b - w).abs() < 1e-12);
}

#[test]
fn squared_moment_matches_direct_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pts = cloud(&mut rng, 10, 3);
    let w = simplex(&mut rng, 10);
    let mu = DiscreteMeasure::new(3, pts.clone(), w.clone()).unwrap();
    let mut direct = 0.0;
    for j in 0..10 {
        let mut r2 = 0.0;
        for k in 0..3 {
            r2 += pts[3 * j + k] * pts[3 * j + k];
        }
        direct += w[j] * r2;
    }
    assert!((moment(&mu, |r| r * r) - direct).abs() < 1e-12);
}

fn clouds(n: usize, d: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    let c = || prop::collection::vec(-5.0f64..5.0, n * d);
    (c(), c(), c())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn distance_axioms((a, b, c) in clouds(7, 2)) {
        let x = EmpiricalMeasure::new(2, a).unwrap();
        let y = EmpiricalMeasure::new(2, b).unwrap();
        let z = EmpiricalMeasure::new(2, c).unwrap();
        let xy = w1_assignment(&x, &y).unwrap().0;
        let yx = w1_assignment(&y, &x).unwrap().0;
        let yz = w1_assignment(&y, &z).unwrap().0;
        let xz = w1_assignment(&x, &z).unwrap().0;
        prop_assert!((xy - yx).abs() < 1e-12);
        prop_assert!(xz <= xy + yz + 1e-9);
    }

    #[test]
    fn relabeling_and_shift_invariance((a, b, _) in clouds(6, 2), shift in prop::collection::vec(-3.0f64..3.0, 2), seed in any::<u64>()) {
        let x = EmpiricalMeasure::new(2, a.clone()).unwrap();
        let y = EmpiricalMeasure::new(2, b.clone()).unwrap();
        let base = w1_assignment(&x, &y).unwrap().0;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut order: Vec<usize> = (0..6).collect();
        for i in (1..6).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let relabeled: Vec<f64> = order.iter().flat_map(|&i| b[2 * i..2 * i + 2].to_vec()).collect();
        let y2 = EmpiricalMeasure::new(2, relabeled).unwrap();
        prop_assert!((w1_assignment(&x, &y2).unwrap().0 - base).abs() < 1e-12);

        let (mu, nu) = (x.to_discrete(), y.to_discrete());
        let general = w1_general(&mu, &nu).unwrap().0;
        prop_assert!((general - base).abs() < 1e-9);
        let shifted = w1_general(&mu.translated(&shift), &nu.translated(&shift)).unwrap().0;
        prop_assert!((shifted - general).abs() < 1e-9);
    }

    #[test]
    fn one_dimensional_fast_path_agrees((a, b, _) in clouds(9, 1)) {
        let x = EmpiricalMeasure::new(1, a).unwrap();
        let y = EmpiricalMeasure::new(1, b).unwrap();
        let fast = w1_assignment(&x, &y).unwrap().0;
        let (mu, nu) = (x.to_discrete(), y.to_discrete());
        prop_assert!((w1_general(&mu, &nu).unwrap().0 - fast).abs() < 1e-9);
        prop_assert!((w1_network(&mu, &nu).unwrap().0 - fast).abs() < 1e-9);
    }

    #[test]
    fn first_moment_is_distance_to_origin((a, _, _) in clouds(8, 3)) {
        let x = EmpiricalMeasure::new(3, a).unwrap();
        let mu = x.to_discrete();
        let origin = DiscreteMeasure::dirac(&[0.0, 0.0, 0.0]).unwrap();
        let w = w1_general(&mu, &origin).unwrap().0;
        prop_assert!((moment(&mu, |r| r) - w).abs() < 1e-9);
    }
}
