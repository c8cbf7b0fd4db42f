//! JSON experiment configuration.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use mflab::cost::{Quadrature, RunningCost, TrackingCost, VarianceCost, ZeroCost};
use mflab::dynamics::{AlignmentPotential, InteractionModel, Structure, TimeGrid};
use mflab::meanfield::{InitialMeasureSpec, SweepTemplate, WarmStart};
use mflab::ocp::SolverConfig;
use mflab::penalty::{AdmissibleFunction, ModeratedPenalty};
use mflab::Subspace;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Option<ModelSpec>,
    pub penalty: Option<PenaltySpec>,
    pub running_cost: Option<RunningCostSpec>,
    pub grid: Option<GridSpec>,
    pub initial_measure: Option<InitialMeasureSpec>,
    #[serde(default)]
    pub quadrature: Quadrature,
    #[serde(default)]
    pub solver: SolverConfig,
    pub solve: Option<SolveBlock>,
    pub sweep: Option<SweepBlock>,
    pub transport: Option<TransportBlock>,
    pub penalty_check: Option<PenaltyCheckBlock>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Zero {
        dim: usize,
    },
    LinearAttraction {
        dim: usize,
        strength: f64,
    },
    CuckerSmale {
        gamma: f64,
        #[serde(default = "one")]
        m: usize,
    },
    FrictionAlignment {
        alpha: f64,
        #[serde(default = "one")]
        m: usize,
        #[serde(default)]
        potential: PotentialSpec,
    },
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    #[default]
    Zero,
    Quadratic {
        strength: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PenaltySpec {
    /// `|u|^p / p`
    Power { p: f64 },
    /// `|u|/p` on the unit ball, `|u|^p / p` outside.
    Hybrid { p: f64 },
    /// `|u|`; not superlinear, accepted only by `penalty-check`.
    Linear,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RunningCostSpec {
    Zero,
    /// Variance of positions (first-order models) or velocities (second-order).
    Variance,
    Tracking { target: Vec<f64> },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub horizon: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveBlock {
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub schedule: Vec<usize>,
    #[serde(default)]
    pub warm_start: WarmStart,
    #[serde(default = "default_sample_times")]
    pub sample_times: usize,
    #[serde(default)]
    pub reference_points: Option<usize>,
    #[serde(default = "default_radius")]
    pub dictionary_radius: f64,
}

fn default_sample_times() -> usize {
    5
}

fn default_radius() -> f64 {
    3.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportBlock {
    pub source: PathBuf,
    pub target: PathBuf,
    #[serde(default)]
    pub cost: GroundCostSpec,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GroundCostSpec {
    /// `|y − x|`, i.e. W1.
    #[default]
    Euclidean,
    /// `|y − x|^p`.
    Power { p: f64 },
    /// The configured penalty applied to `y − x` on the full space.
    Penalty,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltyCheckBlock {
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    #[serde(default = "default_n_grid")]
    pub n_grid: usize,
    /// Random points for the inf-convolution checks.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_check_dim")]
    pub dim: usize,
    /// Penalty to certify; the top-level penalty when absent.
    #[serde(default)]
    pub penalty: Option<PenaltySpec>,
}

fn default_r_max() -> f64 {
    1e3
}

fn default_n_grid() -> usize {
    1024
}

fn default_samples() -> usize {
    100
}

fn default_check_dim() -> usize {
    2
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// A parsed configuration with the hash of its source bytes.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub sha256: String,
    /// Directory relative paths in the config are resolved against.
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_bytes(&bytes, base_dir)
    }

    pub fn from_bytes(bytes: &[u8], base_dir: PathBuf) -> Result<Self, CliError> {
        let config: ExperimentConfig =
            serde_json::from_slice(bytes).map_err(|e| config_error(format!("schema error: {e}")))?;
        Ok(Self {
            config,
            sha256: hex::encode(Sha256::digest(bytes)),
            base_dir,
        })
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }
}

impl ExperimentConfig {
    fn require<'a, T>(field: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
        field.as_ref().ok_or_else(|| config_error(format!("missing `{name}` block")))
    }

    pub fn model(&self) -> Result<InteractionModel, CliError> {
        let spec = Self::require(&self.model, "model")?;
        let model = match *spec {
            ModelSpec::Zero { dim } => {
                if dim == 0 {
                    return Err(config_error("model dim must be ≥ 1"));
                }
                Ok(InteractionModel::zero(dim))
            }
            ModelSpec::LinearAttraction { dim, strength } => InteractionModel::linear_attraction(dim, strength),
            ModelSpec::CuckerSmale { gamma, m } => InteractionModel::cucker_smale(gamma, m),
            ModelSpec::FrictionAlignment { alpha, m, ref potential } => {
                let potential = match *potential {
                    PotentialSpec::Zero => AlignmentPotential::Zero,
                    PotentialSpec::Quadratic { strength } => AlignmentPotential::Quadratic { strength },
                };
                InteractionModel::friction_alignment(alpha, potential, m)
            }
        };
        model.map_err(|e| config_error(format!("model: {e}")))
    }

    pub fn penalty_on(&self, spec: &PenaltySpec, subspace: Subspace) -> Result<ModeratedPenalty, CliError> {
        let penalty = match *spec {
            PenaltySpec::Power { p } => ModeratedPenalty::power(p, subspace),
            PenaltySpec::Hybrid { p } => ModeratedPenalty::hybrid(p, subspace),
            PenaltySpec::Linear => Ok(linear_penalty(subspace)),
        };
        penalty.map_err(|e| config_error(format!("penalty: {e}")))
    }

    pub fn penalty(&self, subspace: Subspace) -> Result<ModeratedPenalty, CliError> {
        let spec = Self::require(&self.penalty, "penalty")?;
        if matches!(spec, PenaltySpec::Linear) {
            return Err(config_error("a linear penalty is not superlinear; only penalty-check accepts it"));
        }
        self.penalty_on(spec, subspace)
    }

    pub fn running_cost(&self, model: &InteractionModel) -> Result<Arc<dyn RunningCost>, CliError> {
        let spec = Self::require(&self.running_cost, "running_cost")?;
        Ok(match spec {
            RunningCostSpec::Zero => Arc::new(ZeroCost),
            RunningCostSpec::Variance => match model.structure() {
                Structure::FirstOrder => Arc::new(VarianceCost::first_order(model.dim())),
                Structure::SecondOrder { m } => Arc::new(VarianceCost::second_order(m)),
            },
            RunningCostSpec::Tracking { target } => {
                if target.len() != model.dim() {
                    return Err(config_error(format!(
                        "tracking target has {} coordinates, the state has {}",
                        target.len(),
                        model.dim()
                    )));
                }
                Arc::new(TrackingCost { target: target.clone() })
            }
        })
    }

    pub fn grid(&self) -> Result<TimeGrid, CliError> {
        let g = Self::require(&self.grid, "grid")?;
        TimeGrid::new(g.horizon, g.steps).map_err(|e| config_error(format!("grid: {e}")))
    }

    /// Initial measure with the run seed applied to explicit point lists.
    pub fn initial_measure(&self, dim: usize) -> Result<InitialMeasureSpec, CliError> {
        let mut spec = Self::require(&self.initial_measure, "initial_measure")?.clone();
        if let InitialMeasureSpec::Explicit { seed, .. } = &mut spec {
            *seed = self.seed;
        }
        spec.validate().map_err(|e| config_error(format!("initial_measure: {e}")))?;
        if spec.dim() != dim {
            return Err(config_error(format!(
                "initial_measure has dimension {}, the model state has {dim}",
                spec.dim()
            )));
        }
        Ok(spec)
    }

    /// Everything a solve or sweep needs except the cohort.
    pub fn template(&self) -> Result<SweepTemplate, CliError> {
        let model = self.model()?;
        let penalty = self.penalty(model.subspace().clone())?;
        let running = self.running_cost(&model)?;
        let grid = self.grid()?;
        self.solver.validate().map_err(|e| config_error(format!("solver: {e}")))?;
        Ok(SweepTemplate {
            model,
            grid,
            running,
            penalty,
            quadrature: self.quadrature,
        })
    }
}

/// `ψ(u) = |u|` with reference `φ(r) = r`.
fn linear_penalty(subspace: Subspace) -> ModeratedPenalty {
    let phi = AdmissibleFunction::new("r", |r| r, |_| 1.0, 2.0);
    ModeratedPenalty::custom(
        "|u|",
        |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt(),
        None,
        subspace,
        phi,
        1.0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(json: &str) -> Result<LoadedConfig, CliError> {
        LoadedConfig::from_bytes(json.as_bytes(), PathBuf::new())
    }

    #[test]
    fn minimal_solve_config() {
        let cfg = load(
            r#"{"model": {"kind": "zero", "dim": 1},
                "penalty": {"kind": "power", "p": 2},
                "running_cost": {"kind": "tracking", "target": [1.0]},
                "grid": {"horizon": 1.0, "steps": 10},
                "initial_measure": {"kind": "product_uniform_box", "lower": [-1], "upper": [1]},
                "solve": {"n": 4}}"#,
        )
        .unwrap();
        assert_eq!(cfg.config.seed, 0);
        assert_eq!(cfg.config.output_dir, PathBuf::from("out"));
        let t = cfg.config.template().unwrap();
        assert_eq!(t.grid.steps(), 10);
        assert_eq!(cfg.sha256.len(), 64);
    }

    #[test]
    fn unknown_fields_are_schema_errors() {
        for bad in [
            r#"{"modle": {}}"#,
            r#"{"model": {"kind": "zero", "dim": 1, "extra": 1}}"#,
            r#"{"solver": {"max_iter": 3}}"#,
            r#"{"model": {"kind": "nonsense"}}"#,
            "not json",
        ] {
            assert!(matches!(load(bad), Err(CliError::Config(_))), "{bad}");
        }
    }

    #[test]
    fn missing_blocks_and_mismatches() {
        let cfg = load("{}").unwrap();
        assert!(matches!(cfg.config.model(), Err(CliError::Config(_))));
        let cfg = load(
            r#"{"model": {"kind": "cucker_smale", "gamma": 0.5},
                "initial_measure": {"kind": "product_uniform_box", "lower": [0], "upper": [1]},
                "running_cost": {"kind": "tracking", "target": [1.0]}}"#,
        )
        .unwrap();
        let model = cfg.config.model().unwrap();
        assert!(cfg.config.initial_measure(model.dim()).is_err());
        assert!(cfg.config.running_cost(&model).is_err());
    }

    #[test]
    fn linear_penalty_only_for_checks() {
        let cfg = load(r#"{"penalty": {"kind": "linear"}}"#).unwrap();
        assert!(cfg.config.penalty(Subspace::full(1)).is_err());
        let psi = cfg.config.penalty_on(&PenaltySpec::Linear, Subspace::full(2)).unwrap();
        assert_eq!(psi.eval(&[3.0, 4.0]), 5.0);
    }

    #[test]
    fn explicit_measure_takes_run_seed() {
        let cfg = load(
            r#"{"seed": 9, "initial_measure": {"kind": "explicit", "points": [[0.0], [1.0]], "seed": 1}}"#,
        )
        .unwrap();
        match cfg.config.initial_measure(1).unwrap() {
            InitialMeasureSpec::Explicit { seed, .. } => assert_eq!(seed, 9),
            _ => unreachable!(),
        }
    }
}
