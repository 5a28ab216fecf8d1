//! Scenario configuration: a TOML file with `[model]` and `[run]` sections.
//! Matrix fields are row-major; every omitted field falls back to the
//! reference scenario compiled into the crate, so an empty file runs the
//! standard experiment.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::filters::Regime;
use crate::linalg::SpdMatrix;
use crate::montecarlo::MCConfig;
use crate::params::ModelParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Simulate,
    Convergence,
    Bounds,
    Check,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Simulate => write!(f, "simulate"),
            Mode::Convergence => write!(f, "convergence"),
            Mode::Bounds => write!(f, "bounds"),
            Mode::Check => write!(f, "check"),
        }
    }
}

/// `[model]` section: market and filter parameters, matrices row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub d: usize,
    pub kappa: Vec<f64>,
    pub mu_bar: Vec<f64>,
    pub sigma_mu: Vec<f64>,
    #[serde(rename = "sigma_R")]
    pub sigma_r: Vec<f64>,
    pub gamma: Vec<f64>,
    pub sigma_j_bar: Vec<f64>,
    pub m0: Vec<f64>,
    pub q0: Vec<f64>,
    pub m0_prior: Vec<f64>,
    pub q0_prior: Vec<f64>,
    pub horizon: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let q_stat = 1.0 / 6.0;
        ModelSection {
            d: 1,
            kappa: vec![3.0],
            mu_bar: vec![0.1],
            sigma_mu: vec![1.0],
            sigma_r: vec![0.25],
            gamma: vec![0.05],
            sigma_j_bar: vec![0.05],
            m0: vec![0.1],
            q0: vec![q_stat],
            m0_prior: vec![0.1],
            q0_prior: vec![q_stat],
            horizon: 1.0,
        }
    }
}

/// `[run]` section: what to compute and where to write it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub mode: Mode,
    pub lambdas: Vec<f64>,
    pub n_paths: usize,
    pub dt_max: f64,
    pub delta: f64,
    pub eval_times: Vec<f64>,
    pub seed: u64,
    pub regimes: Vec<Regime>,
    pub output_dir: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            mode: Mode::Simulate,
            lambdas: vec![5.0, 20.0, 2000.0],
            n_paths: 10_000,
            dt_max: 1e-3,
            delta: 0.1,
            eval_times: vec![0.25, 0.5, 0.75, 1.0],
            seed: 1,
            regimes: vec![Regime::Z, Regime::J],
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Full scenario: model plus run plan.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelSection,
    pub run: RunSection,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("scenario parse error: {e}")))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("scenario serialize error: {e}")))
    }

    /// Builds and validates the model parameters.
    pub fn to_model_params(&self) -> Result<ModelParams> {
        let m = &self.model;
        let d = m.d;
        if d == 0 {
            return Err(Error::Config("model.d must be positive".into()));
        }
        let matrix = |name: &str, v: &Vec<f64>| -> Result<DMatrix<f64>> {
            if v.len() != d * d {
                return Err(Error::Config(format!(
                    "model.{name}: expected {} row-major entries for d = {d}, got {}",
                    d * d,
                    v.len()
                )));
            }
            Ok(DMatrix::from_row_slice(d, d, v))
        };
        let vector = |name: &str, v: &Vec<f64>| -> Result<DVector<f64>> {
            if v.len() != d {
                return Err(Error::Config(format!(
                    "model.{name}: expected {d} entries, got {}",
                    v.len()
                )));
            }
            Ok(DVector::from_row_slice(v))
        };
        let spd = |name: &str, v: &Vec<f64>| -> Result<SpdMatrix> {
            let m = matrix(name, v)?;
            SpdMatrix::new(m).map_err(|e| Error::Config(format!("model.{name}: {e}")))
        };
        let params = ModelParams {
            dim: d,
            kappa: matrix("kappa", &m.kappa)?,
            mu_bar: vector("mu_bar", &m.mu_bar)?,
            sigma_mu: matrix("sigma_mu", &m.sigma_mu)?,
            sigma_r: matrix("sigma_R", &m.sigma_r)?,
            gamma: spd("gamma", &m.gamma)?,
            sigma_j_bar: spd("sigma_j_bar", &m.sigma_j_bar)?,
            m0: vector("m0", &m.m0)?,
            q0: spd("q0", &m.q0)?,
            m0_prior: vector("m0_prior", &m.m0_prior)?,
            q0_prior: spd("q0_prior", &m.q0_prior)?,
            horizon: m.horizon,
        };
        params.validate().map_err(|e| Error::Config(format!("model: {e}")))?;
        Ok(params)
    }

    /// Builds the Monte Carlo configuration for the convergence mode.
    pub fn to_mc_config(&self) -> Result<MCConfig> {
        Ok(MCConfig {
            n_paths: self.run.n_paths,
            lambdas: self.run.lambdas.clone(),
            dt_max: self.run.dt_max,
            eval_times: self.run.eval_times.clone(),
            delta: self.run.delta,
            seed: self.run.seed,
            regimes: self.run.regimes.clone(),
        })
    }
}
