use anyhow::anyhow;
use mflab::meanfield::{gamma_sweep, SweepConfig};

use super::MakeOutput;
use crate::config::LoadedConfig;
use crate::output::num;
use crate::CliError;

pub fn run(loaded: &LoadedConfig, output: impl MakeOutput) -> Result<(), CliError> {
    let cfg = &loaded.config;
    let block = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("missing `sweep` block".into()))?;
    if block.schedule.is_empty() {
        return Err(CliError::Config("sweep.schedule is empty".into()));
    }
    if block.schedule[0] == 0 || block.schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Config(format!(
            "sweep.schedule must be strictly increasing and positive, got {:?}",
            block.schedule
        )));
    }
    let template = cfg.template()?;
    let mu0 = cfg.initial_measure(template.model.dim())?;
    let sweep_config = SweepConfig {
        solver: cfg.solver.clone(),
        warm_start: block.warm_start,
        sample_times: block.sample_times,
        reference_points: block.reference_points,
        dictionary_radius: block.dictionary_radius,
        dictionary_seed: cfg.seed,
    };
    let out = output()?;
    let result = gamma_sweep(&template, &mu0, &block.schedule, &sweep_config)?;
    for r in &result.records {
        match &r.error {
            None => log::info!("N = {:>5}: E^N = {:.10}, {} iterations", r.n, r.value, r.iterations),
            Some(e) => log::warn!("N = {:>5}: failed: {e}", r.n),
        }
    }

    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    out.csv(
        "sweep.csv",
        &[
            "n",
            "value",
            "iterations",
            "status",
            "grad_norm",
            "initial_w1",
            "cross_w1",
            "phi_moment",
            "max_residual",
            "min_moment_slack",
            "theta_ratio",
            "theta_constant",
            "error",
        ],
        result.records.iter().map(|r| {
            vec![
                r.n.to_string(),
                num(r.value),
                r.iterations.to_string(),
                format!("{:?}", r.status),
                num(r.grad_norm),
                num(r.initial_w1),
                opt(r.cross_w1),
                num(r.phi_moment),
                num(r.max_residual),
                num(r.min_moment_slack),
                num(r.theta_ratio),
                num(r.theta_constant),
                r.error.clone().unwrap_or_default(),
            ]
        }),
    )?;
    let path = out.json("sweep.json", &result)?;
    log::info!("wrote {}", path.display());

    let (failed, total) = (result.failures(), result.records.len());
    match failed {
        0 => Ok(()),
        f if f == total => Err(anyhow!("every sweep entry failed").into()),
        _ => Err(CliError::PartialSweep { failed, total }),
    }
}
