//! Experiment configuration (`"schema": 1`).

use std::f64::consts::TAU;
use std::path::Path;
use std::sync::Arc;

use ergodic_core::averaging::Checkpoints;
use ergodic_core::descriptors::{FunctionValues, SpaceSpec};
use ergodic_core::measure_space::{AtomicMeasureSpace, MeasurableFunction};
use ergodic_core::return_times::PointSystem;
use ergodic_core::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    /// Subcommand for `ergodic run`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<FunctionSpec>,
    /// Operator description, resolved through the operator registry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<Value>,
    /// Weight description, resolved through the weight registry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<CheckpointSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probes: Vec<usize>,
    /// Retain full averages and record majorization against the input.
    #[serde(default)]
    pub full: bool,
    /// Norm descriptions for `norms`; defaults to the four rearrangement norms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norms: Option<Vec<Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_system: Option<SystemSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub second_function: Option<FunctionSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub probe_pairs: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    #[serde(default)]
    pub outputs: Outputs,
}

/// File names, relative to `--output-dir`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionSpec {
    Values(FunctionValues),
    Generated(GeneratedFunction),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratedFunction {
    /// Independent uniform draws from `[-scale, scale]`, real or complex.
    Random {
        #[serde(default = "unit")]
        scale: f64,
        #[serde(default)]
        complex: bool,
    },
    /// `e^{2πi·freq·j/N}` on an `N`-atom space.
    Character {
        #[serde(default = "one_i64")]
        freq: i64,
    },
    Constant {
        #[serde(default = "unit")]
        re: f64,
        #[serde(default)]
        im: f64,
    },
    Indicator {
        atoms: Vec<usize>,
    },
}

fn unit() -> f64 {
    1.0
}

fn one_i64() -> i64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CheckpointSpec {
    List(Vec<u64>),
    Geometric { geometric: u64 },
    Every { every: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    /// `j ↦ j + step (mod order)` on `order` atoms of weight `1/order`.
    Rotation { order: usize, step: usize },
    /// A measure-preserving bijection of the configured space.
    Map { map: Vec<usize> },
}

pub const DEFAULT_CHECKPOINTS: u64 = 1024;

impl ExperimentConfig {
    pub fn parse(text: &str, path: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Parse {
            path: path.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn checkpoints(&self) -> CliResult<Checkpoints> {
        Ok(match &self.checkpoints {
            None => Checkpoints::geometric(DEFAULT_CHECKPOINTS)?,
            Some(CheckpointSpec::List(ns)) => Checkpoints::new(ns.clone())?,
            Some(CheckpointSpec::Geometric { geometric }) => Checkpoints::geometric(*geometric)?,
            Some(CheckpointSpec::Every { every }) => Checkpoints::every(*every)?,
        })
    }

    pub fn probes_or_default(&self) -> Vec<usize> {
        if self.probes.is_empty() {
            vec![0]
        } else {
            self.probes.clone()
        }
    }

    pub fn build_space(&self) -> CliResult<Arc<AtomicMeasureSpace>> {
        let spec = self
            .space
            .as_ref()
            .ok_or_else(|| CliError::Usage("config has no \"space\"".into()))?;
        Ok(Arc::new(spec.build()?))
    }

    /// The configured function on `space`. Random draws use a ChaCha8
    /// stream seeded with `seed ^ stream`.
    pub fn build_function(
        &self,
        spec: Option<&FunctionSpec>,
        space: &Arc<AtomicMeasureSpace>,
        stream: u64,
    ) -> CliResult<MeasurableFunction> {
        let spec = spec.ok_or_else(|| CliError::Usage("config has no function".into()))?;
        build_function(spec, space, self.seed ^ stream)
    }

    pub fn build_system(
        &self,
        spec: Option<&SystemSpec>,
        label: &str,
    ) -> CliResult<PointSystem> {
        match spec {
            None => Err(CliError::Usage(format!("config has no \"{label}\""))),
            Some(SystemSpec::Rotation { order, step }) => {
                Ok(PointSystem::rotation(*order, *step, label)?)
            }
            Some(SystemSpec::Map { map }) => {
                Ok(PointSystem::new(self.build_space()?, map.clone(), label)?)
            }
        }
    }
}

pub fn build_function(
    spec: &FunctionSpec,
    space: &Arc<AtomicMeasureSpace>,
    seed: u64,
) -> CliResult<MeasurableFunction> {
    let n = space.len();
    let space = Arc::clone(space);
    let f = match spec {
        FunctionSpec::Values(v) => v.build(space)?,
        FunctionSpec::Generated(GeneratedFunction::Random { scale, complex }) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let values = (0..n)
                .map(|_| {
                    let re = rng.gen_range(-1.0..=1.0) * scale;
                    let im = if *complex { rng.gen_range(-1.0..=1.0) * scale } else { 0.0 };
                    C64::new(re, im)
                })
                .collect();
            MeasurableFunction::new(space, values)?
        }
        FunctionSpec::Generated(GeneratedFunction::Character { freq }) => {
            let values = (0..n as i64)
                .map(|j| {
                    let phase = (freq * j).rem_euclid(n as i64) as f64 / n as f64;
                    C64::from_polar(1.0, TAU * phase)
                })
                .collect();
            MeasurableFunction::new(space, values)?
        }
        FunctionSpec::Generated(GeneratedFunction::Constant { re, im }) => {
            MeasurableFunction::constant(space, C64::new(*re, *im))?
        }
        FunctionSpec::Generated(GeneratedFunction::Indicator { atoms }) => {
            MeasurableFunction::indicator(space, atoms)?
        }
    };
    Ok(f)
}
