use anyhow::anyhow;
use mflab::penalty::{
    estimate_doubling_constant, inf_convolution, verify_admissible, AdmissibilityReport, AdmissibleFunction,
    DoublingEstimate,
};
use mflab::Subspace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::MakeOutput;
use crate::config::LoadedConfig;
use crate::CliError;

/// Convolution orders at which `ψ^n(x)` is compared.
const ORDERS: [usize; 6] = [1, 2, 4, 8, 16, 32];
const SAMPLE_BOX: f64 = 3.0;

#[derive(Serialize)]
struct MonotonicityCheck {
    samples: usize,
    orders: Vec<usize>,
    /// Largest violation of `ψ^n ≤ ψ^{2n} ≤ ψ` and `ψ^n ≤ n θ(|x|)`.
    worst_violation: f64,
    passed: bool,
}

#[derive(Serialize)]
struct Report {
    penalty: String,
    reference: String,
    admissibility: AdmissibilityReport,
    doubling: DoublingEstimate,
    sandwich_violation: f64,
    inf_convolution: MonotonicityCheck,
    passed: bool,
}

pub fn run(loaded: &LoadedConfig, output: impl MakeOutput) -> Result<(), CliError> {
    let cfg = &loaded.config;
    let block = cfg
        .penalty_check
        .as_ref()
        .ok_or_else(|| CliError::Config("missing `penalty_check` block".into()))?;
    let spec = block
        .penalty
        .as_ref()
        .or(cfg.penalty.as_ref())
        .ok_or_else(|| CliError::Config("penalty-check needs `penalty_check.penalty` or `penalty`".into()))?;
    if block.dim == 0 || block.samples == 0 {
        return Err(CliError::Config("penalty_check.dim and samples must be ≥ 1".into()));
    }
    let psi = cfg.penalty_on(spec, Subspace::full(block.dim))?;
    let phi = psi.reference().clone();
    let admissibility = verify_admissible(&phi, block.r_max, block.n_grid)
        .map_err(|e| CliError::Config(format!("penalty_check grid: {e}")))?;
    let doubling = estimate_doubling_constant(|r| phi.eval(r), block.r_max, block.n_grid)?;

    let theta = AdmissibleFunction::power(2.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let points: Vec<Vec<f64>> = (0..block.samples)
        .map(|_| (0..block.dim).map(|_| rng.gen_range(-SAMPLE_BOX..SAMPLE_BOX)).collect())
        .collect();
    let mut worst = f64::NEG_INFINITY;
    for x in &points {
        let full = psi.eval(x);
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let slack = 1e-9 * (1.0 + full);
        let mut prev = 0.0;
        for &n in &ORDERS {
            let v = inf_convolution(&psi, &theta, n, x)?;
            worst = worst
                .max(prev - v - slack)
                .max(v - full - slack)
                .max(v - n as f64 * theta.eval(r) - slack);
            prev = v;
        }
    }
    let sandwich_violation = psi.sandwich_violation(points.iter().map(Vec::as_slice));
    let monotone = MonotonicityCheck {
        samples: points.len(),
        orders: ORDERS.to_vec(),
        worst_violation: worst,
        passed: worst <= 0.0,
    };
    let passed = admissibility.passed() && monotone.passed && sandwich_violation <= 0.0;
    let report = Report {
        penalty: psi.name().to_string(),
        reference: phi.name().to_string(),
        admissibility,
        doubling,
        sandwich_violation,
        inf_convolution: monotone,
        passed,
    };
    for c in &report.admissibility.checks {
        log::info!("{:<28} {} (worst violation {:.3e})", c.name, if c.passed { "ok" } else { "FAILED" }, c.worst_violation);
    }
    log::info!("doubling estimate {:.6} at r = {:.3}", report.doubling.value, report.doubling.argmax);
    let out = output()?;
    out.json("penalty_check.json", &report)?;
    if passed {
        Ok(())
    } else {
        Err(anyhow!("penalty `{}` failed certification", report.penalty).into())
    }
}
