use std::time::Instant;

use anyhow::anyhow;
use mflab::cost::CostReport;
use mflab::dynamics::{check_moment_bound, check_theta_moment, MomentBoundReport, ThetaMomentInputs, ThetaMomentReport};
use mflab::meanfield::{continuity_residual, default_dictionary, quantize, ControlMeasure, ResidualReport};
use mflab::ocp::{solve, Status};
use mflab::penalty::AdmissibleFunction;
use serde::Serialize;

use super::MakeOutput;
use crate::config::LoadedConfig;
use crate::output::num;
use crate::CliError;

#[derive(Serialize)]
struct Summary {
    model: String,
    penalty: String,
    agents: usize,
    steps: usize,
    horizon: f64,
    value: f64,
    status: Status,
    converged: bool,
    iterations: usize,
    evaluations: usize,
    grad_norm: f64,
    cost: CostReport,
    min_moment_slack: f64,
    moment_bound: MomentBoundReport,
    theta_moment: ThetaMomentReport,
    residual: ResidualReport,
    wallclock_s: f64,
}

pub fn run(loaded: &LoadedConfig, output: impl MakeOutput) -> Result<(), CliError> {
    let cfg = &loaded.config;
    let n = cfg
        .solve
        .as_ref()
        .ok_or_else(|| CliError::Config("missing `solve` block".into()))?
        .n;
    if n == 0 {
        return Err(CliError::Config("solve.n must be ≥ 1".into()));
    }
    let template = cfg.template()?;
    let mu0 = cfg.initial_measure(template.model.dim())?;
    let out = output()?;

    let start = Instant::now();
    let spec = template.spec(quantize(&mu0, n)?)?;
    let sol = solve(&spec, &cfg.solver, None)?;
    log::info!(
        "N = {n}: E^N = {:.10} after {} iterations ({:?}, |∇| = {:.3e})",
        sol.value,
        sol.iterations,
        sol.status,
        sol.grad_norm
    );
    let model = &spec.model;
    let dictionary = default_dictionary(model.dim(), 3.0, cfg.seed);
    let residual = continuity_residual(&sol.traj, &sol.u_opt, model, &dictionary)?;
    let moment_bound = check_moment_bound(&sol.traj, &sol.u_opt, model.growth_a(), model.growth_b());
    let theta_moment = check_theta_moment(
        &sol.traj,
        &sol.u_opt,
        &AdmissibleFunction::power(2.0)?,
        ThetaMomentInputs {
            growth_a: model.growth_a(),
            growth_b: model.growth_b(),
            energy: sol.value,
        },
    );
    let nu = ControlMeasure::new(&sol.traj, &sol.u_opt, model)?;

    let d = model.dim();
    let grid = spec.grid;
    let mut header = vec!["step".to_string(), "t".into(), "agent".into()];
    header.extend((0..d).map(|c| format!("x{c}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    out.csv(
        "trajectory.csv",
        &header_refs,
        (0..=grid.steps()).flat_map(|k| {
            let traj = &sol.traj;
            (0..n).map(move |i| {
                let mut row = vec![k.to_string(), num(grid.node(k)), i.to_string()];
                row.extend(traj.agent(k, i).iter().map(|&v| num(v)));
                row
            })
        }),
    )?;

    let mut header = vec!["t".to_string()];
    header.extend((0..d).map(|c| format!("x{c}")));
    header.extend((0..d).map(|c| format!("u{c}")));
    header.push("mass".into());
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    out.csv(
        "controls.csv",
        &header_refs,
        nu.atoms.iter().map(|a| {
            let mut row = vec![num(a.t)];
            row.extend(a.x.iter().chain(&a.u).map(|&v| num(v)));
            row.push(num(a.mass));
            row
        }),
    )?;

    out.csv(
        "history.csv",
        &["iteration", "value", "grad_norm", "step", "moment_slack"],
        sol.history.iter().map(|h| {
            vec![h.iteration.to_string(), num(h.value), num(h.grad_norm), num(h.step), num(h.moment_slack)]
        }),
    )?;

    let passed = moment_bound.passed && theta_moment.passed;
    let summary = Summary {
        model: model.name().to_string(),
        penalty: spec.penalty.name().to_string(),
        agents: n,
        steps: grid.steps(),
        horizon: grid.horizon(),
        value: sol.value,
        status: sol.status,
        converged: sol.converged,
        iterations: sol.iterations,
        evaluations: sol.evaluations,
        grad_norm: sol.grad_norm,
        cost: sol.report,
        min_moment_slack: sol.min_moment_slack,
        moment_bound,
        theta_moment,
        residual,
        wallclock_s: start.elapsed().as_secs_f64(),
    };
    let path = out.json("summary.json", &summary)?;
    log::info!("wrote {}", path.display());
    if !sol.converged {
        log::warn!("solver stopped with status {:?}", sol.status);
    }
    if !passed {
        return Err(anyhow!(
            "moment bound violated: first-moment slack {:.3e}, θ-moment ratio {:.3e} vs constant {:.3e}",
            summary.moment_bound.slack,
            summary.theta_moment.ratio,
            summary.theta_moment.constant
        )
        .into());
    }
    Ok(())
}
