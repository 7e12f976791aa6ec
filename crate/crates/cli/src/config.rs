//! TOML run configuration. Every section is optional; absent fields take
//! the documented defaults.

use std::path::Path;

use anyhow::{bail, Context, Result};
use hsc_core::models::{ChartId, GridSpec, ModelSpec};
use hsc_core::positivity::{OptimizerOptions, ScanOptions};
use hsc_core::C64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads; the rayon default when absent.
    pub jobs: Option<usize>,
    pub model: Option<ModelSpec>,
    pub eval: EvalConfig,
    pub scan: ScanConfig,
    pub lambda0: Lambda0Config,
    pub certify: CertifyConfig,
    pub papercheck: PapercheckConfig,
    pub berger: BergerConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub lambda: f64,
    pub chart: ChartId,
    /// Chart coordinates as `[re, im]` pairs; the chart origin when empty.
    pub points: Vec<Vec<C64>>,
    /// Tangent directions; when empty, `H` is minimized and maximized instead.
    pub directions: Vec<Vec<C64>>,
    pub optimizer: OptimizerOptions,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            chart: ChartId::new(0, 0),
            points: Vec::new(),
            directions: Vec::new(),
            optimizer: OptimizerOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub lambda: f64,
    pub grid: GridSpec,
    pub options: ScanOptions,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            grid: GridSpec::default(),
            options: ScanOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Lambda0Config {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub tol: f64,
    pub grid: GridSpec,
    pub options: ScanOptions,
}

impl Default for Lambda0Config {
    fn default() -> Self {
        Self {
            lambda_lo: 0.1,
            lambda_hi: 50.0,
            tol: 0.01,
            grid: GridSpec::default(),
            options: ScanOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyConfig {
    /// Base curvature floor; scanned from the model's base when absent.
    pub h0: Option<f64>,
    /// Bundle constant; estimated from the model's bundle when absent.
    pub c: Option<f64>,
    pub grid: GridSpec,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            h0: None,
            c: None,
            grid: GridSpec::new(17, 1, 2.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PapercheckConfig {
    /// Catalog ids; every projectivized catalog model when empty.
    pub models: Vec<String>,
    pub lambda: f64,
    pub decomposition_trials: usize,
    pub bound_trials: usize,
    pub grid: GridSpec,
}

impl Default for PapercheckConfig {
    fn default() -> Self {
        let suite = hsc_core::papercheck::SuiteOptions::default();
        Self {
            models: Vec::new(),
            lambda: suite.lambda,
            decomposition_trials: suite.decomposition_trials,
            bound_trials: suite.bound_trials,
            grid: suite.grid,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BergerConfig {
    pub lambda: f64,
    pub chart: ChartId,
    /// The chart origin when absent.
    pub point: Option<Vec<C64>>,
    pub samples: usize,
    /// Largest accepted `|z|`.
    pub max_z: f64,
}

impl Default for BergerConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            chart: ChartId::new(0, 0),
            point: None,
            samples: 100_000,
            max_z: 4.0,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        // toml reports the line and column of the offending key
        let cfg: RunConfig = toml::from_str(text).map_err(|e| anyhow::anyhow!("{e}"))?;
        if cfg.jobs == Some(0) {
            bail!("jobs must be at least 1");
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn model_spec(&self) -> Result<&ModelSpec> {
        self.model
            .as_ref()
            .context("this command needs a [model] section (for example `catalog = \"f2\"`)")
    }
}
