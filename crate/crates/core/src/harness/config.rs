use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::control::{CalibrationOptions, ControlConfig};
use crate::error::{Error, Result};
use crate::hawkes::NetworkModel;
use crate::networks::{kronecker_graph, sample_parameters, Graph, KroneckerSeed, ParameterRanges};
use crate::simulation::DEFAULT_EVENT_CAP;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cheshire,
    Prk,
    Deg,
    Uncontrolled,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Cheshire => "cheshire",
            Method::Prk => "prk",
            Method::Deg => "deg",
            Method::Uncontrolled => "uncontrolled",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cheshire" => Ok(Method::Cheshire),
            "prk" => Ok(Method::Prk),
            "deg" => Ok(Method::Deg),
            "uncontrolled" => Ok(Method::Uncontrolled),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }
}

/// Where the network model comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSource {
    /// A model JSON file.
    File { path: PathBuf },
    /// A Kronecker graph with sampled parameters. Either `preset` or
    /// `theta` names the initiator; graph and parameters are drawn from one
    /// generator seeded with `graph_seed`.
    Kronecker {
        #[serde(default)]
        preset: Option<String>,
        #[serde(default)]
        theta: Option<[[f64; 2]; 2]>,
        k: u32,
        graph_seed: u64,
        #[serde(default = "ParameterRanges::demonstration")]
        parameters: ParameterRanges,
    },
}

impl ModelSource {
    /// Loads or generates the model, plus the graph it lives on.
    pub fn resolve(&self) -> Result<(NetworkModel, Graph)> {
        match self {
            ModelSource::File { path } => {
                let model = NetworkModel::load(path)?;
                let graph = Graph::new(model.n(), model.edges())?;
                Ok((model, graph))
            }
            ModelSource::Kronecker { preset, theta, k, graph_seed, parameters } => {
                let seed = match (preset, theta) {
                    (Some(name), None) => KroneckerSeed::preset(name, *k)?,
                    (None, Some(theta)) => KroneckerSeed::new(*theta, *k)?,
                    _ => return Err(Error::Config("kronecker model needs exactly one of 'preset' or 'theta'".into())),
                };
                let mut rng = ChaCha8Rng::seed_from_u64(*graph_seed);
                let graph = kronecker_graph(&seed, &mut rng);
                let model = sample_parameters(&graph, parameters, &mut rng)?;
                Ok((model, graph))
            }
        }
    }
}

/// Uniform diagonal weights of the control objective; calibration rescales `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControlTemplate {
    pub q: f64,
    pub s: f64,
    pub f: f64,
    pub grid_steps: usize,
}

impl Default for ControlTemplate {
    fn default() -> Self {
        Self { q: 1.0, s: 1.0, f: 1.0, grid_steps: ControlConfig::DEFAULT_GRID_STEPS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationSettings {
    pub runs: usize,
    pub tol: f64,
    pub max_probes: usize,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        let d = CalibrationOptions::default();
        Self { runs: d.runs, tol: d.tol, max_probes: d.max_probes }
    }
}

/// Declarative description of one experiment, read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelSource,
    #[serde(default)]
    pub t0: f64,
    pub tf: f64,
    pub methods: Vec<Method>,
    /// Expected number of incentivized actions per run.
    pub budget: f64,
    pub runs: usize,
    pub master_seed: u64,
    #[serde(default = "default_cap")]
    pub event_cap: usize,
    /// Organic-count target for the milestone metric.
    #[serde(default)]
    pub milestone: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub control: ControlTemplate,
    #[serde(default)]
    pub calibration: CalibrationSettings,
}

fn default_cap() -> usize {
    DEFAULT_EVENT_CAP
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if !(self.budget.is_finite() && self.budget >= 0.0) {
            return Err(Error::Config(format!("budget must be >= 0, got {}", self.budget)));
        }
        if !(self.t0.is_finite() && self.tf.is_finite() && self.tf > self.t0) {
            return Err(Error::Config(format!("bad horizon [{}, {}]", self.t0, self.tf)));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("methods list is empty".into()));
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return Err(Error::Config("methods list has duplicates".into()));
        }
        if self.event_cap == 0 {
            return Err(Error::Config("event cap must be positive".into()));
        }
        if self.milestone == Some(0) {
            return Err(Error::Config("milestone target must be at least 1".into()));
        }
        if self.calibration.runs == 0 {
            return Err(Error::Config("calibration runs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Control template expanded to the model size.
    pub fn control_config(&self, n: usize) -> ControlConfig {
        let c = &self.control;
        ControlConfig::uniform(n, self.t0, self.tf, c.q, c.s, c.f).with_grid_steps(c.grid_steps)
    }
}
