//! Experiment configuration files.
//!
//! A config is a TOML document with the sections `[scenario]`,
//! `[combination]`, `[supervisor]`, `[baselines]` and `[harness]`:
//!
//! ```toml
//! [scenario]
//! filter_length = 7
//! input_variance = 1.0
//! noise_variance = 0.01
//! horizon = 3000
//! seed = 1
//!
//! [combination]
//! topology = "cyclic_feedback"
//! mu1 = 0.05
//! mu2 = 0.005
//! cycle_period = 50
//!
//! [supervisor]
//! activation = "sigmoid"
//! step_size = 200.0
//!
//! [harness]
//! ensemble_size = 300
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::combinations::{CyclePeriod, Topology, DEFAULT_ETA_THRESHOLD};
use crate::error::{Error, Result};
use crate::filters::VssParams;
use crate::scenario::ScenarioConfig;
use crate::supervisors::{Activation, SupervisorState, DEFAULT_EPSILON};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    Independent,
    Leakage,
    Handover,
    CyclicFeedback,
}

/// `[combination]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombinationSpec {
    pub topology: TopologyKind,
    pub mu1: f64,
    pub mu2: f64,
    /// `L`; absent means no cycle instants after iteration 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle_period: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leak_amount: Option<f64>,
    #[serde(default = "default_threshold")]
    pub eta_threshold: f64,
}

fn default_threshold() -> f64 {
    DEFAULT_ETA_THRESHOLD
}

impl CombinationSpec {
    pub fn new(topology: TopologyKind, mu1: f64, mu2: f64) -> Self {
        Self { topology, mu1, mu2, cycle_period: None, leak_amount: None, eta_threshold: DEFAULT_ETA_THRESHOLD }
    }

    pub fn with_period(mut self, l: u64) -> Self {
        self.cycle_period = Some(l);
        self
    }

    pub fn period(&self) -> Result<CyclePeriod> {
        match self.cycle_period {
            Some(l) => CyclePeriod::every(l),
            None => Ok(CyclePeriod::Never),
        }
    }

    pub fn topology(&self) -> Result<Topology> {
        let t = match self.topology {
            TopologyKind::Independent => Topology::Independent,
            TopologyKind::CyclicFeedback => Topology::CyclicFeedback { period: self.period()? },
            TopologyKind::Handover => Topology::Handover { period: self.period()?, threshold: self.eta_threshold },
            TopologyKind::Leakage => Topology::Leakage {
                amount: self
                    .leak_amount
                    .ok_or_else(|| Error::Validation(vec!["leakage topology needs leak_amount".to_string()]))?,
                threshold: self.eta_threshold,
            },
        };
        t.validate()?;
        Ok(t)
    }
}

/// `[supervisor]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupervisorSpec {
    pub activation: Activation,
    /// `mu_a`, or `mu~` when normalized.
    pub step_size: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_bounds: Option<(f64, f64)>,
    #[serde(default = "half")]
    pub initial_eta: f64,
    #[serde(default)]
    pub normalized: bool,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn half() -> f64 {
    0.5
}

fn default_beta() -> f64 {
    0.9
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

impl SupervisorSpec {
    pub fn new(activation: Activation, step_size: f64) -> Self {
        Self {
            activation,
            step_size,
            a_bounds: None,
            initial_eta: 0.5,
            normalized: false,
            beta: default_beta(),
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn normalized(mut self, beta: f64, epsilon: f64) -> Self {
        self.normalized = true;
        self.beta = beta;
        self.epsilon = epsilon;
        self
    }

    pub fn state(&self) -> Result<SupervisorState> {
        let mut s = SupervisorState::new(self.activation, self.step_size)?;
        if let Some((lo, hi)) = self.a_bounds {
            s = s.with_bounds(lo, hi)?;
        }
        s = s.with_initial_eta(self.initial_eta)?;
        if self.normalized {
            s = s.with_normalization(self.beta, self.epsilon)?;
        }
        Ok(s)
    }
}

/// `[baselines]` section: standalone filters run on the same streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSpec {
    #[serde(default)]
    pub lms_step_sizes: Vec<f64>,
    #[serde(default)]
    pub vss: bool,
    #[serde(default = "default_vss_decay")]
    pub vss_decay: f64,
    #[serde(default = "default_vss_gain")]
    pub vss_gain: f64,
    /// Defaults to the smaller component step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vss_mu_min: Option<f64>,
    /// Defaults to the larger component step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vss_mu_max: Option<f64>,
}

fn default_vss_decay() -> f64 {
    0.95
}

fn default_vss_gain() -> f64 {
    0.1
}

impl Default for BaselineSpec {
    fn default() -> Self {
        Self {
            lms_step_sizes: Vec::new(),
            vss: false,
            vss_decay: default_vss_decay(),
            vss_gain: default_vss_gain(),
            vss_mu_min: None,
            vss_mu_max: None,
        }
    }
}

/// `[harness]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnessSpec {
    #[serde(default = "default_ensemble")]
    pub ensemble_size: usize,
    #[serde(default = "default_window")]
    pub steady_state_window: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Worker threads; absent uses the global pool.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

fn default_ensemble() -> usize {
    300
}

fn default_window() -> usize {
    1000
}

impl Default for HarnessSpec {
    fn default() -> Self {
        Self { ensemble_size: 300, steady_state_window: 1000, output: None, workers: None }
    }
}

/// A full experiment: scenario, combination, supervisor, baselines, harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub combination: CombinationSpec,
    pub supervisor: SupervisorSpec,
    #[serde(default)]
    pub baselines: BaselineSpec,
    #[serde(default)]
    pub harness: HarnessSpec,
}

impl ExperimentConfig {
    pub fn new(scenario: ScenarioConfig, combination: CombinationSpec, supervisor: SupervisorSpec) -> Self {
        Self { scenario, combination, supervisor, baselines: BaselineSpec::default(), harness: HarnessSpec::default() }
    }

    pub fn with_ensemble(mut self, ensemble_size: usize, steady_state_window: usize) -> Self {
        self.harness.ensemble_size = ensemble_size;
        self.harness.steady_state_window = steady_state_window;
        self
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::parse(text, Path::new("<inline>"))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text, path)
    }

    fn parse(text: &str, path: &Path) -> Result<Self> {
        let cfg: Self = toml::from_str(text)
            .map_err(|e| Error::Parse { path: path.to_path_buf(), message: e.message().to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse { path: PathBuf::from("<config>"), message: e.to_string() })
    }

    pub fn topology(&self) -> Result<Topology> {
        self.combination.topology()
    }

    pub fn supervisor_state(&self) -> Result<SupervisorState> {
        self.supervisor.state()
    }

    pub fn vss_params(&self) -> VssParams {
        let (lo, hi) = (self.combination.mu1.min(self.combination.mu2), self.combination.mu1.max(self.combination.mu2));
        VssParams {
            decay: self.baselines.vss_decay,
            gain: self.baselines.vss_gain,
            mu_min: self.baselines.vss_mu_min.unwrap_or(lo),
            mu_max: self.baselines.vss_mu_max.unwrap_or(hi),
        }
    }

    /// Checks every section and reports all problems at once.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let mut absorb = |r: Result<()>| match r {
            Ok(()) => {}
            Err(Error::Validation(list)) => problems.extend(list),
            Err(e) => problems.push(e.to_string()),
        };
        absorb(self.scenario.validate());
        absorb(self.topology().map(|_| ()));
        absorb(self.supervisor_state().map(|_| ()));
        let c = &self.combination;
        if !(c.mu1 > 0.0 && c.mu1.is_finite() && c.mu2 > 0.0 && c.mu2.is_finite()) {
            absorb(Err(Error::Domain(format!("component step sizes must be positive, got ({}, {})", c.mu1, c.mu2))));
        }
        if self.baselines.lms_step_sizes.iter().any(|mu| !(*mu > 0.0 && mu.is_finite())) {
            absorb(Err(Error::Domain("baseline LMS step sizes must be positive".to_string())));
        }
        if self.baselines.vss {
            absorb(self.vss_params().validate());
        }
        let h = &self.harness;
        if h.ensemble_size == 0 {
            absorb(Err(Error::Domain("ensemble_size must be at least 1".to_string())));
        }
        if h.steady_state_window == 0 || h.steady_state_window >= self.scenario.horizon {
            absorb(Err(Error::Domain(format!(
                "steady_state_window must lie in [1, horizon), got {} with horizon {}",
                h.steady_state_window, self.scenario.horizon
            ))));
        }
        if h.workers == Some(0) {
            absorb(Err(Error::Domain("workers must be at least 1".to_string())));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }
}
