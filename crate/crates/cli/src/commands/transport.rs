use anyhow::anyhow;
use mflab::transport::{transport_cost, w1_general, PowerCost};
use mflab::Subspace;
use serde::Serialize;

use super::MakeOutput;
use crate::config::{GroundCostSpec, LoadedConfig};
use crate::output::{num, read_measure};
use crate::CliError;

#[derive(Serialize)]
struct Report {
    cost: GroundCostSpec,
    value: f64,
    source_atoms: usize,
    target_atoms: usize,
    dim: usize,
    marginal_error: f64,
}

pub fn run(loaded: &LoadedConfig, output: impl MakeOutput) -> Result<(), CliError> {
    let cfg = &loaded.config;
    let block = cfg
        .transport
        .as_ref()
        .ok_or_else(|| CliError::Config("missing `transport` block".into()))?;
    let (source, target) = (loaded.resolve(&block.source), loaded.resolve(&block.target));
    for p in [&source, &target] {
        if !p.is_file() {
            return Err(CliError::Config(format!("measure file {} does not exist", p.display())));
        }
    }
    let mu = read_measure(&source)?;
    let nu = read_measure(&target)?;
    if mu.dim() != nu.dim() {
        return Err(anyhow!("measures live in different dimensions ({} vs {})", mu.dim(), nu.dim()).into());
    }
    let (value, plan) = match &block.cost {
        GroundCostSpec::Euclidean => w1_general(&mu, &nu)?,
        GroundCostSpec::Power { p } => transport_cost(&PowerCost(*p), &mu, &nu)?,
        GroundCostSpec::Penalty => {
            let spec = cfg
                .penalty
                .as_ref()
                .ok_or_else(|| CliError::Config("cost `penalty` needs a top-level `penalty` block".into()))?;
            let psi = cfg.penalty_on(spec, Subspace::full(mu.dim()))?;
            transport_cost(&psi, &mu, &nu)?
        }
    };
    log::info!("transport cost {value:.12} between {} and {} atoms", mu.len(), nu.len());
    let out = output()?;
    out.csv(
        "plan.csv",
        &["source", "target", "mass"],
        plan.entries
            .iter()
            .map(|e| vec![e.source.to_string(), e.target.to_string(), num(e.mass)]),
    )?;
    out.json(
        "transport.json",
        &Report {
            cost: block.cost.clone(),
            value,
            source_atoms: mu.len(),
            target_atoms: nu.len(),
            dim: mu.dim(),
            marginal_error: plan.marginal_error(mu.weights(), nu.weights()),
        },
    )?;
    Ok(())
}
