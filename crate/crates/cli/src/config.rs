use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use delaymap::{ObservableSpec, SystemSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSpec,
    pub observable: ObservableSpec,
    /// Covering dimension of the phase space; the delay count is `2d+1`.
    pub d: usize,
    /// Delay count override.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub trajectory: TrajectoryConfig,
    #[serde(default)]
    pub pairs: PairConfig,
    #[serde(default)]
    pub dimension: DimensionConfig,
    #[serde(default)]
    pub perturb: PerturbConfig,
    #[serde(default)]
    pub hypothesis: HypothesisConfig,
    #[serde(default)]
    pub yorke: YorkeConfig,
    #[serde(default)]
    pub genericity: GenericityConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryConfig {
    pub length: usize,
    pub burn_in: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
    /// Trajectory CSV to embed instead of simulating.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self { length: 1000, burn_in: 0, initial: None, file: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PairConfig {
    /// Minimum separation of the two states of a pair.
    pub delta: f64,
    pub count: usize,
    /// Attractor samples the pairs are drawn from.
    pub samples: usize,
    pub burn_in: usize,
    /// Pair CSV to use instead of sampling.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

impl Default for PairConfig {
    fn default() -> Self {
        Self { delta: 1e-2, count: 200, samples: 2000, burn_in: 500, file: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DimensionConfig {
    pub samples: usize,
    pub burn_in: usize,
    /// Strictly decreasing scales; geometric from a quarter of the sample
    /// extent when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scales: Option<Vec<f64>>,
    pub scale_count: usize,
    /// Point-cloud CSV to measure instead of sampling.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

impl Default for DimensionConfig {
    fn default() -> Self {
        Self { samples: 20000, burn_in: 500, scales: None, scale_count: 6, file: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbConfig {
    pub epsilon: f64,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        Self { epsilon: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HypothesisConfig {
    pub seeds: usize,
    /// Periodic-point tolerance; the system default when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

impl Default for HypothesisConfig {
    fn default() -> Self {
        Self { seeds: 400, tol: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct YorkeConfig {
    /// Overrides the field's own Lipschitz bound.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    pub equilibrium_seeds: usize,
    /// Grid seeds for the periodic-return scan.
    pub scan_seeds: usize,
    pub tol: f64,
}

impl Default for YorkeConfig {
    fn default() -> Self {
        Self { lipschitz: None, equilibrium_seeds: 100, scan_seeds: 1000, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenericityConfig {
    pub trials: usize,
    pub bump_scale: f64,
}

impl Default for GenericityConfig {
    fn default() -> Self {
        Self { trials: 200, bump_scale: 0.1 }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            if path == "." {
                anyhow::anyhow!("{}", e.into_inner())
            } else {
                anyhow::anyhow!("field `{path}`: {}", e.into_inner())
            }
        })?;
        cfg.system.validate().context("field `system`")?;
        cfg.observable.validate().context("field `observable`")?;
        Ok(cfg)
    }

    /// The command-line seed wins over the config seed; one of them is required.
    pub fn resolve_seed(&mut self, cli: Option<u64>) -> Result<u64> {
        match cli.or(self.seed) {
            Some(s) => {
                self.seed = Some(s);
                Ok(s)
            }
            None => bail!("field `seed`: missing (set it in the config or pass --seed)"),
        }
    }

    pub fn delay_count(&self) -> Result<usize> {
        match self.m {
            Some(0) => bail!("field `m`: need m >= 1"),
            Some(m) => Ok(m),
            None => Ok(delaymap::delay_count_for(self.d as i64)?),
        }
    }
}
