//! Reproducibility manifests.
//!
//! A [`RunManifest`] captures everything needed to replay one optimization
//! run bit-exactly: the scenario (family, master seed, instance count and
//! index), the run seed, the fully resolved optimizer configuration (as the
//! canonical `key = value` text, which round-trips through
//! [`crate::optimizer::parse_spec`]), and the crate version that produced it.
//! The derived fidelity schedule is embedded as a convenience block so
//! operators can see bracket sizes without re-deriving them.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::archive::Archive;
use crate::objectives::{make_scenario, ScenarioKind};
use crate::optimizer::{self, BatchMethod, OptimizerSpec};
use crate::seed;

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed manifest: {0}")]
    Malformed(String),
    #[error("unknown scenario kind {0:?}")]
    UnknownScenario(String),
    #[error("instance index {index} out of range for {count} instances")]
    BadInstance { index: usize, count: usize },
    #[error(transparent)]
    Spec(#[from] optimizer::OptError),
    #[error(transparent)]
    Scenario(#[from] crate::objectives::ObjError),
}

/// Derived fidelity schedule: one entry per bracket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleBlock {
    /// Number of fidelity stages (= number of brackets).
    pub stages: usize,
    /// Batch size μ(b) for bracket b = 1..=stages.
    pub batch_sizes: Vec<usize>,
    /// Starting fidelity of bracket b (η_fid^(b−s)).
    pub start_fidelities: Vec<f64>,
}

/// Compute the schedule block exactly as [`crate::optimizer::run`] does.
pub fn schedule_block(spec: &OptimizerSpec) -> ScheduleBlock {
    let s = optimizer::stage_count(spec.eta_fid, spec.r_min);
    let batch_sizes = match spec.batch_method {
        BatchMethod::Hb => optimizer::hb_batch_sizes(spec.mu1, s, spec.eta_surv, spec.eta_fid),
        BatchMethod::Equal => vec![spec.mu1; s],
    };
    let start_fidelities = (1..=s).map(|b| spec.eta_fid.powi(b as i32 - s as i32)).collect();
    ScheduleBlock { stages: s, batch_sizes, start_fidelities }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Version of the crate that wrote this manifest.
    pub version: String,
    /// Scenario family token (see ScenarioKind).
    pub scenario: String,
    /// Master seed the scenario instances were generated from.
    pub scenario_seed: u64,
    /// Number of instances the scenario was generated with.
    pub scenario_instances: usize,
    /// Which instance this run optimized.
    pub instance: usize,
    /// Seed for the optimizer's random stream.
    pub run_seed: u64,
    /// Fully resolved optimizer configuration, canonical text form.
    pub spec_text: String,
    /// Derived bracket schedule (informational; recomputed on replay).
    pub schedule: ScheduleBlock,
}

impl RunManifest {
    pub fn new(
        spec: &OptimizerSpec,
        kind: ScenarioKind,
        scenario_seed: u64,
        scenario_instances: usize,
        instance: usize,
        run_seed: u64,
    ) -> RunManifest {
        RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            scenario: kind.token().to_string(),
            scenario_seed,
            scenario_instances,
            instance,
            run_seed,
            spec_text: optimizer::serialize_spec(spec),
            schedule: schedule_block(spec),
        }
    }

    pub fn spec(&self) -> Result<OptimizerSpec, ManifestError> {
        // The canonical text always carries budget and r_min, so the
        // fallbacks only matter for hand-edited manifests; NaN makes a
        // missing key fail validation instead of passing silently.
        Ok(optimizer::parse_spec(&self.spec_text, f64::NAN, f64::NAN)?)
    }

    pub fn scenario_kind(&self) -> Result<ScenarioKind, ManifestError> {
        ScenarioKind::from_token(&self.scenario)
            .ok_or_else(|| ManifestError::UnknownScenario(self.scenario.clone()))
    }

    /// Re-run the optimization this manifest describes. The result is
    /// bit-identical to the original run.
    pub fn replay(&self) -> Result<Archive, ManifestError> {
        let spec = self.spec()?;
        let kind = self.scenario_kind()?;
        let scen = make_scenario(kind, self.scenario_instances, self.scenario_seed)?;
        if self.instance >= scen.instances.len() {
            return Err(ManifestError::BadInstance {
                index: self.instance,
                count: scen.instances.len(),
            });
        }
        let obj = scen.instances[self.instance].as_ref();
        let mut rng = seed::rng_from(self.run_seed);
        Ok(optimizer::run(&spec, obj, &mut rng)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), ManifestError> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| ManifestError::Malformed(e.to_string()))?;
        fs::write(path, text + "\n").map_err(|e| ManifestError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<RunManifest, ManifestError> {
        let text = fs::read_to_string(path).map_err(|e| ManifestError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        serde_json::from_str(&text).map_err(|e| ManifestError::Malformed(e.to_string()))
    }
}

/// Seed for an instance's regret-reference sample, derived from the
/// scenario's master seed so that every tool normalizing against the same
/// scenario uses the same references.
pub fn ref_seed(master_seed: u64, instance: usize) -> u64 {
    seed::derive(master_seed, "ref", &[instance as u64])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceReference {
    pub instance: usize,
    /// Best cost used as the regret zero point.
    pub min_ref: f64,
    /// Median cost of the uniform full-fidelity sample; regret one.
    pub median_ref: f64,
}

/// Scenario identity plus the cached per-instance normalization references.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioManifest {
    pub version: String,
    pub scenario: String,
    pub master_seed: u64,
    pub instances: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Size of the uniform full-fidelity sample behind each reference pair.
    pub reference_evals: usize,
    pub references: Vec<InstanceReference>,
}

impl ScenarioManifest {
    pub fn build(
        kind: ScenarioKind,
        instances: usize,
        master_seed: u64,
        reference_evals: usize,
    ) -> Result<ScenarioManifest, ManifestError> {
        let scen = make_scenario(kind, instances, master_seed)?;
        let references = scen
            .instances
            .iter()
            .enumerate()
            .map(|(i, obj)| {
                let (min_ref, median_ref) = crate::analysis::reference_stats(
                    obj.as_ref(),
                    reference_evals,
                    ref_seed(master_seed, i),
                );
                InstanceReference { instance: i, min_ref, median_ref }
            })
            .collect();
        Ok(ScenarioManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            scenario: kind.token().to_string(),
            master_seed,
            instances,
            train: scen.train.clone(),
            test: scen.test.clone(),
            reference_evals,
            references,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), ManifestError> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| ManifestError::Malformed(e.to_string()))?;
        fs::write(path, text + "\n").map_err(|e| ManifestError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn load(path: &Path) -> Result<ScenarioManifest, ManifestError> {
        let text = fs::read_to_string(path).map_err(|e| ManifestError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        serde_json::from_str(&text).map_err(|e| ManifestError::Malformed(e.to_string()))
    }
}
