// SPDX-License-Identifier: Apache-2.0

//! The JSON run config: `{walks, n_grid, replicates, seed, experiment, tolerances}`.

use std::path::Path;

use serde::Deserialize;

use hullwalk::driftgeo::DEFAULT_DRIFT_TOL;
use hullwalk::experiments::{
    ExperimentConfig, Functional, LimitComparison, Quantity, Statistic,
};
use hullwalk::geom2d::{Mat2, Vec2};
use hullwalk::walks::{Ensemble, IncrementLaw, WalkSpec};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkConfig {
    pub mu: [f64; 2],
    #[serde(default = "identity")]
    pub sigma: [[f64; 2]; 2],
    #[serde(default)]
    pub law: IncrementLaw,
}

fn identity() -> [[f64; 2]; 2] {
    [[1.0, 0.0], [0.0, 1.0]]
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    /// Free-form id echoed in report rows.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub quantities: Option<Vec<Quantity>>,
    #[serde(default)]
    pub limit: Option<LimitComparison>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative error allowed on rows that carry a target.
    #[serde(default = "default_relative")]
    pub relative: f64,
    #[serde(default = "default_drift")]
    pub drift: f64,
}

fn default_relative() -> f64 {
    0.05
}

fn default_drift() -> f64 {
    DEFAULT_DRIFT_TOL
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { relative: default_relative(), drift: default_drift() }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub walks: Vec<WalkConfig>,
    #[serde(default)]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_replicates")]
    pub replicates: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_replicates() -> u64 {
    1000
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        RunConfig::parse(&text)
    }

    pub fn experiment_name(&self) -> String {
        self.experiment.name.clone().unwrap_or_else(|| "simulate".into())
    }

    pub fn drifts(&self) -> Vec<Vec2> {
        self.walks.iter().map(|w| Vec2::new(w.mu[0], w.mu[1])).collect()
    }

    pub fn sigmas(&self) -> Vec<Mat2> {
        self.walks
            .iter()
            .map(|w| Mat2::new(w.sigma[0][0], w.sigma[0][1], w.sigma[1][0], w.sigma[1][1]))
            .collect()
    }

    pub fn ensemble(&self) -> Result<Ensemble, CliError> {
        if self.walks.is_empty() {
            return Err(CliError::Usage("config field `walks`: at least one walk is required".into()));
        }
        let walks = self
            .drifts()
            .into_iter()
            .zip(self.sigmas())
            .zip(&self.walks)
            .enumerate()
            .map(|(k, ((mu, sigma), w))| {
                WalkSpec::new(mu, sigma, w.law, k as u64)
                    .map_err(|e| CliError::Usage(format!("config field `walks[{k}]`: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ensemble::new(walks, self.seed).map_err(|e| CliError::Usage(format!("config field `walks`: {e}")))
    }

    /// Default quantities: `Var/n` of the perimeter and the diameter.
    pub fn experiment_config(&self) -> Result<ExperimentConfig, CliError> {
        if self.n_grid.is_empty() {
            return Err(CliError::Usage("config field `n_grid`: must list at least one horizon".into()));
        }
        let quantities = self.experiment.quantities.clone().unwrap_or_else(|| {
            vec![
                Quantity::new(Functional::Perimeter, Statistic::Variance, 1.0),
                Quantity::new(Functional::Diameter, Statistic::Variance, 1.0),
            ]
        });
        let mut cfg = ExperimentConfig::new(self.ensemble()?, self.n_grid.clone(), self.replicates, quantities);
        cfg.limit = self.experiment.limit;
        cfg.drift_tol = self.tolerances.drift;
        Ok(cfg)
    }
}
