//! Experiment configuration files.
//!
//! A config is a TOML document with `schema_version`, `kind`, an optional
//! master `seed` and `output` stem, and one flat `[params]` table holding
//! the model parameters together with every run control.

use std::path::Path;

use lrising::kernel::ModelParams;
use lrising::mc::{ExteriorPattern, GrowthPolicy};
use lrising::sums::{CellShape, FitModel};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    SumsScan,
    Quadrature,
    Fit,
    SurfaceRatio,
    McRun,
    FieldSweep,
    Peierls,
    ExactCheck,
    Anneal,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::SumsScan => "sums_scan",
            Kind::Quadrature => "quadrature",
            Kind::Fit => "fit",
            Kind::SurfaceRatio => "surface_ratio",
            Kind::McRun => "mc_run",
            Kind::FieldSweep => "field_sweep",
            Kind::Peierls => "peierls",
            Kind::ExactCheck => "exact_check",
            Kind::Anneal => "anneal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Start {
    #[default]
    Plus,
    Minus,
    Random,
}

fn one() -> f64 {
    1.0
}
fn default_tol() -> f64 {
    1e-10
}
fn default_bins() -> usize {
    16
}
fn default_every() -> u64 {
    1
}
fn default_policy() -> GrowthPolicy {
    GrowthPolicy::RandomGrowth
}
fn default_fit() -> FitModel {
    FitModel::PurePower
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub dim: usize,
    pub s: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(default = "one")]
    pub kappa: f64,
    #[serde(default)]
    pub h: f64,
    #[serde(default = "one")]
    pub beta: f64,

    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Box half-sides for sums, fits and surface ratios; inner boxes for
    /// the observable of `mc_run`.
    #[serde(default)]
    pub l_grid: Vec<usize>,
    #[serde(default)]
    pub shape: CellShape,
    #[serde(default = "default_fit")]
    pub fit_model: FitModel,
    /// Fit abscissa: box side `2L+1` instead of the half-side `L`.
    #[serde(default)]
    pub fit_by_side: bool,
    /// `(L, a, s)` points for the transverse integral.
    #[serde(default)]
    pub points: Vec<[f64; 3]>,

    #[serde(default)]
    pub side: usize,
    #[serde(default)]
    pub sides: Vec<usize>,
    #[serde(default)]
    pub start: Start,
    #[serde(default)]
    pub h_grid: Vec<f64>,
    #[serde(default)]
    pub equil_sweeps: u64,
    #[serde(default)]
    pub measure_sweeps: u64,
    #[serde(default = "default_every")]
    pub measure_every: u64,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default)]
    pub blocks: Vec<usize>,
    #[serde(default)]
    pub t_inner: Option<usize>,

    #[serde(default)]
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub samples: usize,
    #[serde(default = "default_policy")]
    pub policy: GrowthPolicy,
    #[serde(default)]
    pub check_every: usize,

    #[serde(default)]
    pub inner_l: usize,
    #[serde(default)]
    pub kappas: Vec<f64>,
    #[serde(default)]
    pub betas: Vec<f64>,
    #[serde(default)]
    pub exteriors: Vec<ExteriorPattern>,
    #[serde(default)]
    pub r_ext: Option<usize>,

    /// Non-decreasing beta ladder for annealing.
    #[serde(default)]
    pub schedule: Vec<f64>,
    #[serde(default)]
    pub sweeps_per_stage: u64,
}

impl Params {
    pub fn model(&self) -> ModelParams {
        ModelParams::new(self.dim, self.s, self.j)
            .with_kappa(self.kappa)
            .with_field(self.h)
            .with_beta(self.beta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<String>,
    pub params: Params,
}

/// A parsed config together with its source text, which is echoed into
/// every artifact.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    pub source: String,
}

impl LoadedConfig {
    pub fn parse(source: &str) -> Result<Self, CliError> {
        let config: ExperimentConfig = toml::from_str(source).map_err(|e| CliError::Parse(e.to_string()))?;
        if config.schema_version != SCHEMA_VERSION {
            return Err(CliError::Parse(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                config.schema_version
            )));
        }
        Ok(Self {
            config,
            source: source.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn stem(&self) -> String {
        self.config
            .output
            .clone()
            .unwrap_or_else(|| self.config.kind.name().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
schema_version = 1
kind = "exact_check"
seed = 5

[params]
dim = 1
s = 2.0
J = 1.0
inner_l = 1
kappas = [0.5]
exteriors = [{ uniform = 1 }, "checkerboard", { random_patch = { seed = 3, radius = 4, outside = -1 } }]
"#;

    #[test]
    fn parses_flat_params() {
        let c = LoadedConfig::parse(SAMPLE).unwrap();
        assert_eq!(c.config.kind, Kind::ExactCheck);
        assert_eq!(c.config.params.model().kappa, 1.0);
        assert_eq!(c.config.params.exteriors.len(), 3);
        assert_eq!(c.stem(), "exact_check");
    }

    #[test]
    fn rejects_unknown_keys_and_versions() {
        let bad = SAMPLE.replace("inner_l = 1", "inner_l = 1\nbogus = 2");
        assert!(matches!(LoadedConfig::parse(&bad), Err(CliError::Parse(_))));
        let old = SAMPLE.replace("schema_version = 1", "schema_version = 0");
        assert!(matches!(LoadedConfig::parse(&old), Err(CliError::Parse(_))));
    }
}
