use mflab::penalty::{
    fenchel_conjugate, inf_convolution, verify_admissible, young_residual, AdmissibleFunction, ModeratedPenalty,
};
use mflab::Subspace;
use proptest::prelude::*;

fn builtins() -> Vec<ModeratedPenalty> {
    let u = || Subspace::full(2);
    vec![
        ModeratedPenalty::power(1.5, u()).unwrap(),
        ModeratedPenalty::power(2.0, u()).unwrap(),
        ModeratedPenalty::power(3.0, u()).unwrap(),
        ModeratedPenalty::hybrid(2.0, u()).unwrap(),
        ModeratedPenalty::hybrid(4.0, u()).unwrap(),
    ]
}

#[test]
fn builtin_references_are_admissible_with_tight_chain() {
    for psi in builtins() {
        let report = verify_admissible(psi.reference(), 1e3, 1024).unwrap();
        assert!(report.passed(), "{}: {:?}", psi.name(), report.checks);
        let chain = report.check("doubling_chain").unwrap();
        assert!(chain.worst_violation <= 0.0, "{}", psi.name());
    }
}

#[test]
fn conjugate_of_power_is_dual_power() {
    // (r^p/p)* = s^q/q with 1/p + 1/q = 1, by hand.
    for p in [1.5f64, 2.0, 3.0] {
        let q = p / (p - 1.0);
        let theta = AdmissibleFunction::power(p).unwrap();
        for s in [0.0, 0.3, 1.0, 2.5] {
            let got = fenchel_conjugate(&theta, s, 1e3).unwrap();
            assert!((got - s.powf(q) / q).abs() < 1e-8 * (1.0 + s.powf(q)), "p={p} s={s}");
        }
    }
}

#[test]
fn inf_convolution_quadratic_closed_form() {
    // ½|y|² □ n·½|x − y|² = (n/(n+1))·½|x|².
    let psi = ModeratedPenalty::power(2.0, Subspace::full(2)).unwrap();
    let theta = AdmissibleFunction::power(2.0).unwrap();
    for n in [1usize, 3, 10] {
        let x = [1.2, -0.7];
        let r2 = x[0] * x[0] + x[1] * x[1];
        let expect = n as f64 / (n as f64 + 1.0) * 0.5 * r2;
        let got = inf_convolution(&psi, &theta, n, &x).unwrap();
        assert!((got - expect).abs() < 1e-8, "n={n}: {got} vs {expect}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inf_convolution_increases_to_psi(x0 in -3.0..3.0f64, x1 in -3.0..3.0f64, which in 0usize..5) {
        let psi = &builtins()[which];
        let theta = AdmissibleFunction::power(2.0).unwrap();
        let x = [x0, x1];
        let full = psi.eval(&x);
        let tol = 1e-9 * (1.0 + full);
        let mut prev = 0.0;
        for n in [1usize, 2, 4, 8, 16] {
            let v = inf_convolution(psi, &theta, n, &x).unwrap();
            prop_assert!(v >= prev - tol);
            prop_assert!(v <= full + tol);
            prev = v;
        }
    }

    #[test]
    fn young_identity(r in 0.01..8.0f64, p in 1.3..4.0f64) {
        let theta = AdmissibleFunction::power(p).unwrap();
        let res = young_residual(&theta, r, 50.0).unwrap();
        prop_assert!(res <= 1e-6 * (1.0 + r * theta.deriv(r)));
    }

    #[test]
    fn sandwich_holds(x0 in -50.0..50.0f64, x1 in -50.0..50.0f64, which in 0usize..5) {
        let psi = &builtins()[which];
        let x = [x0, x1];
        prop_assert!(psi.sandwich_violation([&x[..]]) <= 0.0);
    }

    #[test]
    fn gradient_matches_central_differences(x0 in -2.0..2.0f64, x1 in -2.0..2.0f64, which in 0usize..5) {
        let psi = &builtins()[which];
        // Keep away from the kink of the hybrid penalty at |x| = 1 and from 0.
        let r = (x0 * x0 + x1 * x1).sqrt();
        prop_assume!((r - 1.0).abs() > 1e-3 && r > 1e-3);
        let x = [x0, x1];
        let mut g = [0.0; 2];
        psi.gradient(&x, &mut g);
        for c in 0..2 {
            let h = 1e-6;
            let (mut a, mut b) = (x, x);
            a[c] += h;
            b[c] -= h;
            let fd = (psi.eval(&a) - psi.eval(&b)) / (2.0 * h);
            prop_assert!((fd - g[c]).abs() < 1e-6 * (1.0 + g[c].abs()));
        }
    }
}
