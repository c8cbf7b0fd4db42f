use std::sync::Arc;

use mflab::cost::{Quadrature, TrackingCost, VarianceCost};
use mflab::dynamics::{ControlSignal, InteractionModel, TimeGrid};
use mflab::meanfield::{
    continuity_residual, default_dictionary, gamma_sweep, quantize, superposition_check, weakstar_pairing,
    ControlMeasure, Coupling, InitialMeasureSpec, SweepConfig, SweepTemplate, TrajectoryBundle, WarmStart,
};
use mflab::ocp::{solve, SolverConfig};
use mflab::penalty::ModeratedPenalty;
use mflab::transport::{w1_general, DiscreteMeasure};
use mflab::Subspace;
use proptest::prelude::*;

fn unit_box(d: usize, coupling: Coupling) -> InitialMeasureSpec {
    InitialMeasureSpec::ProductUniformBox {
        lower: vec![-1.0; d],
        upper: vec![1.0; d],
        coupling,
    }
}

fn lq_template(steps: usize) -> SweepTemplate {
    SweepTemplate {
        model: InteractionModel::zero(1),
        grid: TimeGrid::new(1.0, steps).unwrap(),
        running: Arc::new(TrackingCost { target: vec![1.0] }),
        penalty: ModeratedPenalty::power(2.0, Subspace::full(1)).unwrap(),
        quadrature: Quadrature::Trapezoid,
    }
}

fn cs_template(steps: usize) -> SweepTemplate {
    SweepTemplate {
        model: InteractionModel::cucker_smale(0.5, 1).unwrap(),
        grid: TimeGrid::new(1.0, steps).unwrap(),
        running: Arc::new(VarianceCost::second_order(1)),
        penalty: ModeratedPenalty::power(2.0, Subspace::velocities(1)).unwrap(),
        quadrature: Quadrature::Trapezoid,
    }
}

#[test]
fn quantize_is_deterministic() {
    let specs = [
        unit_box(2, Coupling::Hammersley),
        unit_box(3, Coupling::Lattice),
        InitialMeasureSpec::GaussianTruncated {
            mean: vec![0.0, 1.0],
            std: vec![1.0, 0.5],
            radius: 3.0,
            coupling: Coupling::Hammersley,
        },
        InitialMeasureSpec::Explicit {
            points: vec![vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, 5.0]],
            seed: 17,
        },
    ];
    for spec in &specs {
        assert_eq!(quantize(spec, 37).unwrap(), quantize(spec, 37).unwrap());
    }
}

#[test]
fn one_dimensional_quantizer_distance_is_quarter_over_n() {
    let unit = InitialMeasureSpec::ProductUniformBox {
        lower: vec![0.0],
        upper: vec![1.0],
        coupling: Coupling::default(),
    };
    let reference = DiscreteMeasure::uniform(1, quantize(&unit, 10_000).unwrap()).unwrap();
    for n in [8usize, 16, 32, 64, 128] {
        let q = DiscreteMeasure::uniform(1, quantize(&unit, n).unwrap()).unwrap();
        let (w, _) = w1_general(&q, &reference).unwrap();
        // W1(q_N, U) = 1/(4N) and W1(q_ref, U) = 1/(4·10⁴).
        assert!((w - 0.25 / n as f64).abs() <= 0.25e-4 + 1e-12, "N={n}: {w}");
    }
}

#[test]
fn quantizer_distance_to_reference_decreases_in_two_dimensions() {
    let mu0 = unit_box(2, Coupling::default());
    let reference = DiscreteMeasure::uniform(2, quantize(&mu0, 1024).unwrap()).unwrap();
    let w: Vec<f64> = [8usize, 16, 32, 64, 128]
        .iter()
        .map(|&n| w1_general(&DiscreteMeasure::uniform(2, quantize(&mu0, n).unwrap()).unwrap(), &reference).unwrap().0)
        .collect();
    assert!(w.windows(2).all(|p| p[1] < p[0]), "{w:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn quadratic_moment_gap_is_exact(n in 1usize..400, coupling in prop_oneof![Just(Coupling::Hammersley), Just(Coupling::Lattice)]) {
        // Each exact midpoint marginal of U[−1, 1] has E[x²/2] = 1/6 − 1/(6N²).
        let pts = quantize(&unit_box(2, coupling), n).unwrap();
        let moment = pts.iter().map(|v| 0.5 * v * v).sum::<f64>() / n as f64;
        let gap = 1.0 / 3.0 - moment;
        prop_assert!((gap - 1.0 / (3.0 * (n * n) as f64)).abs() < 1e-13);
    }
}

#[test]
fn control_measure_mass_and_superposition_on_solver_output() {
    let template = cs_template(30);
    let spec = template.spec(quantize(&unit_box(2, Coupling::default()), 12).unwrap()).unwrap();
    let sol = solve(&spec, &SolverConfig::default(), None).unwrap();
    let nu = ControlMeasure::new(&sol.traj, &sol.u_opt, &spec.model).unwrap();
    let l1 = sol.u_opt.l1_norm(&spec.grid) / spec.grid.horizon();
    assert!((nu.total_variation() - l1).abs() <= 1e-12);
    let bundle = TrajectoryBundle::from_trajectory(&sol.traj);
    let report = superposition_check(&bundle, &sol.traj, &spec.model, &sol.u_opt, 1e-12);
    assert!(report.passed, "{report:?}");
}

#[test]
fn static_measure_has_zero_residual() {
    let template = lq_template(10);
    let spec = template.spec(quantize(&unit_box(1, Coupling::default()), 7).unwrap()).unwrap();
    let u = ControlSignal::zeros(10, 7, 1);
    let traj = spec.rollout(&u).unwrap();
    let r = continuity_residual(&traj, &u, &spec.model, &default_dictionary(1, 3.0, 0)).unwrap();
    assert!(r.max_residual < 1e-15, "{r:?}");
}

#[test]
fn warm_and_cold_sweeps_agree_on_a_convex_problem() {
    let template = lq_template(40);
    let mu0 = unit_box(1, Coupling::default());
    let run = |warm_start| {
        let config = SweepConfig {
            warm_start,
            reference_points: Some(512),
            ..SweepConfig::default()
        };
        gamma_sweep(&template, &mu0, &[4, 8, 16], &config).unwrap()
    };
    let (warm, cold) = (run(WarmStart::Sequential), run(WarmStart::Cold));
    for (a, b) in warm.records.iter().zip(&cold.records) {
        assert_eq!(a.n, b.n);
        assert!((a.value - b.value).abs() <= 1e-9, "N={}: {} vs {}", a.n, a.value, b.value);
        assert!(a.min_moment_slack >= -1e-9);
        assert!(a.theta_ratio <= a.theta_constant);
    }
    assert!(warm.records[0].cross_w1.is_none());
    assert!(warm.records[1..].iter().all(|r| r.cross_w1.is_some()));
}

#[test]
fn lq_control_pairings_settle_across_n() {
    let template = lq_template(50);
    let mu0 = unit_box(1, Coupling::default());
    let pairings: Vec<f64> = [8usize, 16, 32, 64]
        .iter()
        .map(|&n| {
            let spec = template.spec(quantize(&mu0, n).unwrap()).unwrap();
            let sol = solve(&spec, &SolverConfig::default(), None).unwrap();
            let nu = ControlMeasure::new(&sol.traj, &sol.u_opt, &spec.model).unwrap();
            weakstar_pairing(&nu, |t, x, out| out[0] = (1.0 + t) * x[0].sin())
        })
        .collect();
    let diffs: Vec<f64> = pairings.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    assert!(diffs.windows(2).all(|w| w[1] < w[0]), "{pairings:?}");
}

#[test]
fn configuration_types_round_trip_through_json() {
    let spec: InitialMeasureSpec =
        serde_json::from_str(r#"{"kind": "product_uniform_box", "lower": [0, 0], "upper": [1, 2], "coupling": "lattice"}"#)
            .unwrap();
    assert_eq!(spec, unit_box_with(vec![0.0, 0.0], vec![1.0, 2.0], Coupling::Lattice));
    let back: InitialMeasureSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
    assert_eq!(back, spec);
    let defaulted: InitialMeasureSpec =
        serde_json::from_str(r#"{"kind": "product_uniform_box", "lower": [0], "upper": [1]}"#).unwrap();
    assert_eq!(defaulted, unit_box_with(vec![0.0], vec![1.0], Coupling::Hammersley));
    assert!(serde_json::from_str::<InitialMeasureSpec>(r#"{"kind": "explicit", "points": [], "colour": 1}"#).is_err());

    let config: SweepConfig = serde_json::from_str(r#"{"warm_start": "cold", "solver": {"max_iters": 7}}"#).unwrap();
    assert_eq!(config.warm_start, WarmStart::Cold);
    assert_eq!(config.solver.max_iters, 7);
    assert_eq!(config.sample_times, 5);
    assert!(serde_json::from_str::<SweepConfig>(r#"{"samples": 3}"#).is_err());
}

fn unit_box_with(lower: Vec<f64>, upper: Vec<f64>, coupling: Coupling) -> InitialMeasureSpec {
    InitialMeasureSpec::ProductUniformBox { lower, upper, coupling }
}
