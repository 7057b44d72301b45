//! Experiment configuration.
//!
//! The file is TOML with the tables `model`, `distribution`, `window`,
//! `run`, `partition` and the optional `localization`, `ids`, `verify`.
//! Unknown keys are rejected so that typos surface as errors.

use std::path::{Path, PathBuf};

use anderson_core::lattice::{choose_scales, partition_cube, CubeGeometry, ScaleParams};
use anderson_core::{DistributionKind, HamiltonianSpec, Hopping, SingleSiteDistribution};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub distribution: DistributionConfig,
    pub window: WindowConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub partition: PartitionConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub localization: Option<LocalizationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ids: Option<IdsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub dimension: usize,
    /// One half-side `L`, or a ladder of them.
    pub half_side: HalfSides,
    pub hopping: Hopping,
    pub coupling: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HalfSides {
    One(usize),
    Ladder(Vec<usize>),
}

impl HalfSides {
    pub fn values(&self) -> Vec<usize> {
        match self {
            HalfSides::One(l) => vec![*l],
            HalfSides::Ladder(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionConfig {
    #[serde(flatten)]
    pub kind: DistributionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holder_constant: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub energy: f64,
    /// Macroscopic interval `(a, b]`.
    pub interval: [f64; 2],
    /// Hölder exponent used in `β_L`; defaults to that of the distribution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub realizations: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum PartitionConfig {
    Asymptotic { epsilon: f64, gamma: f64 },
    Scaled { blocks_per_side: usize, interior_margin: usize },
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig::Scaled {
            blocks_per_side: 1,
            interior_margin: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalizationConfig {
    /// `[a_loc, b_loc]`, the range of `Re z`.
    pub window: [f64; 2],
    #[serde(default = "default_s")]
    pub s: f64,
    pub distances: Vec<usize>,
    #[serde(default = "default_imag_parts")]
    pub imag_parts: Vec<f64>,
    /// Number of evenly spaced real parts across the window.
    #[serde(default = "default_one")]
    pub real_points: usize,
}

fn default_s() -> f64 {
    1.0 / 3.0
}

fn default_imag_parts() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3, 1e-4]
}

fn default_one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdsConfig {
    /// Evenly spaced grid `[start, stop]` with `points` nodes.
    pub grid: [f64; 2],
    pub points: usize,
    pub eps_min: f64,
    pub eps_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_wegner")]
    pub wegner_realizations: usize,
    #[serde(default = "default_minami")]
    pub minami_realizations: usize,
    #[serde(default = "default_green")]
    pub green_realizations: usize,
    /// `[Re z, Im z]` for the diagonal bound and the resolvent identity.
    #[serde(default = "default_z")]
    pub z: [f64; 2],
    #[serde(default = "default_k")]
    pub k: f64,
    #[serde(default = "default_identity")]
    pub identity_samples: usize,
}

fn default_wegner() -> usize {
    200
}
fn default_minami() -> usize {
    1000
}
fn default_green() -> usize {
    100
}
fn default_z() -> [f64; 2] {
    [0.0, 0.1]
}
fn default_k() -> f64 {
    1.0
}
fn default_identity() -> usize {
    10
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            wegner_realizations: default_wegner(),
            minami_realizations: default_minami(),
            green_realizations: default_green(),
            z: default_z(),
            k: default_k(),
            identity_samples: default_identity(),
        }
    }
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Applies command-line overrides.
    pub fn with_overrides(mut self, seed: Option<u64>, out: Option<PathBuf>, workers: Option<usize>) -> Result<Self, CliError> {
        if let Some(s) = seed {
            self.run.seed = s;
        }
        if let Some(o) = out {
            self.run.output_dir = Some(o);
        }
        if workers.is_some() {
            self.run.workers = workers;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let m = &self.model;
        if !(1..=3).contains(&m.dimension) {
            return Err(invalid("model.dimension", format!("must be 1, 2 or 3, got {}", m.dimension)));
        }
        let ls = m.half_side.values();
        if ls.is_empty() {
            return Err(invalid("model.half_side", "ladder is empty"));
        }
        if let Some(&bad) = ls.iter().find(|&&l| l == 0) {
            return Err(invalid("model.half_side", format!("must be at least 1, got {bad}")));
        }
        if !(m.coupling > 0.0 && m.coupling.is_finite()) {
            return Err(invalid("model.coupling", format!("must be positive, got {}", m.coupling)));
        }
        self.single_site().map_err(|e| invalid("distribution", e))?;
        let [a, b] = self.window.interval;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(invalid("window.interval", format!("need finite a < b, got ({a}, {b}]")));
        }
        if !self.window.energy.is_finite() {
            return Err(invalid("window.energy", "must be finite"));
        }
        if let Some(alpha) = self.window.alpha {
            if !(alpha > 0.0 && alpha <= 1.0) {
                return Err(invalid("window.alpha", format!("must lie in (0, 1], got {alpha}")));
            }
        }
        if self.run.realizations == 0 {
            return Err(invalid("run.realizations", "must be positive"));
        }
        if self.run.workers == Some(0) {
            return Err(invalid("run.workers", "must be positive"));
        }
        match self.partition {
            PartitionConfig::Asymptotic { epsilon, gamma } => {
                if !(epsilon > 0.0 && epsilon < 1.0) {
                    return Err(invalid("partition.epsilon", format!("must lie in (0, 1), got {epsilon}")));
                }
                if !(gamma > 0.0 && gamma.is_finite()) {
                    return Err(invalid("partition.gamma", format!("must be positive, got {gamma}")));
                }
            }
            PartitionConfig::Scaled { blocks_per_side, .. } => {
                if blocks_per_side == 0 {
                    return Err(invalid("partition.blocks_per_side", "must be positive"));
                }
            }
        }
        if let Some(loc) = &self.localization {
            let [lo, hi] = loc.window;
            if !(lo <= hi) {
                return Err(invalid("localization.window", format!("need a_loc <= b_loc, got [{lo}, {hi}]")));
            }
            let e = self.window.energy;
            if !(lo <= e && e <= hi) {
                return Err(invalid("localization.window", format!("energy {e} lies outside [{lo}, {hi}]")));
            }
            if !(loc.s > 0.0 && loc.s < 1.0) {
                return Err(invalid("localization.s", format!("must lie in (0, 1), got {}", loc.s)));
            }
            if loc.distances.len() < 3 || loc.distances.windows(2).any(|w| w[0] >= w[1]) {
                return Err(invalid("localization.distances", "need at least three strictly increasing distances"));
            }
            if loc.imag_parts.is_empty() || loc.imag_parts.iter().any(|&v| !(v >= anderson_core::estimates::IM_Z_FLOOR)) {
                return Err(invalid(
                    "localization.imag_parts",
                    format!("need nonempty values >= {}", anderson_core::estimates::IM_Z_FLOOR),
                ));
            }
            if loc.real_points == 0 {
                return Err(invalid("localization.real_points", "must be positive"));
            }
        }
        if let Some(ids) = &self.ids {
            let [lo, hi] = ids.grid;
            if !(lo < hi) || ids.points < 2 {
                return Err(invalid("ids.grid", "need start < stop and at least two points"));
            }
            if !(ids.eps_min > 0.0 && ids.eps_min <= ids.eps_max) {
                return Err(invalid("ids.eps_min", "need 0 < eps_min <= eps_max"));
            }
        }
        if let Some(v) = &self.verify {
            if v.wegner_realizations < 100 {
                return Err(invalid("verify.wegner_realizations", "must be at least 100"));
            }
            if v.minami_realizations < 1000 {
                return Err(invalid("verify.minami_realizations", "must be at least 1000"));
            }
            if v.green_realizations == 0 {
                return Err(invalid("verify.green_realizations", "must be positive"));
            }
            if !(v.z[1] > 0.0) {
                return Err(invalid("verify.z", "Im z must be positive"));
            }
            if !(v.k > 0.0) {
                return Err(invalid("verify.k", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn single_site(&self) -> anderson_core::Result<SingleSiteDistribution> {
        let dist = SingleSiteDistribution::from_kind(self.distribution.kind.clone())?;
        match self.distribution.holder_constant {
            Some(u) => dist.with_holder_constant(u),
            None => Ok(dist),
        }
    }

    pub fn spec(&self) -> anderson_core::Result<HamiltonianSpec> {
        HamiltonianSpec::new(self.model.hopping, self.model.coupling)
    }

    /// Exponent in `β_L`: the configured one, or the distribution's.
    pub fn alpha(&self) -> anderson_core::Result<f64> {
        Ok(match self.window.alpha {
            Some(a) => a,
            None => self.single_site()?.alpha(),
        })
    }

    pub fn half_sides(&self) -> Vec<usize> {
        self.model.half_side.values()
    }

    pub fn scale_params(&self, l: usize) -> anderson_core::Result<ScaleParams> {
        match self.partition {
            PartitionConfig::Asymptotic { epsilon, gamma } => {
                choose_scales(l, epsilon, self.alpha()?, gamma, self.model.dimension)
            }
            PartitionConfig::Scaled {
                blocks_per_side,
                interior_margin,
            } => ScaleParams::scaled(l, blocks_per_side, interior_margin),
        }
    }

    pub fn geometry(&self, l: usize) -> anderson_core::Result<CubeGeometry> {
        partition_cube(self.model.dimension, l, &self.scale_params(l)?)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.run.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}
