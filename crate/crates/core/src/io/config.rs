//! TOML experiment configuration. Every section is optional and falls back
//! to defaults; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::analytics::AttackRoute;
use crate::attack::AttackBudget;
use crate::channel::{ChannelModelConfig, ChannelModelKind};
use crate::error::{Error, Result};
use crate::guideline::{GuidelineConfig, GuidelineMode, RhoSource};
use crate::keyphase::{KeyPhaseMapping, PhaseVector, SecretKey};
use crate::protocol::ProtocolConfig;
use crate::randomness::RandomnessTestConfig;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub channel: ChannelSection,
    pub protocol: ProtocolSection,
    pub attack: AttackSection,
    pub analytics: AnalyticsSection,
    pub randomness: RandomnessSection,
    pub guideline: GuidelineSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub model: ChannelModelKind,
    pub rho: f64,
    #[serde(rename = "L")]
    pub l: usize,
    /// Top-level seed for every random stream; `--seed` overrides it.
    pub seed: u64,
    /// Trace CSV for `trace_replay`.
    pub trace: Option<PathBuf>,
    pub bandwidth_label: Option<String>,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            model: ChannelModelKind::BernoulliDifferential,
            rho: 0.7,
            l: 56,
            seed: 1,
            trace: None,
            bandwidth_label: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolSection {
    pub m: u32,
    /// Key bits; defaults to `L * m`.
    #[serde(rename = "S")]
    pub s: Option<usize>,
    pub tol: f64,
    pub rounds: u64,
    pub phase_noise_kappa: Option<f64>,
}

impl Default for ProtocolSection {
    fn default() -> Self {
        Self {
            m: 1,
            s: None,
            tol: crate::protocol::DEFAULT_TOLERANCE,
            rounds: 10,
            phase_noise_kappa: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteName {
    #[default]
    Enumerate,
    Ranked,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackSection {
    #[serde(rename = "N")]
    pub n: u64,
    pub trials: u64,
    pub route: RouteName,
    /// Fixed instance: true key as a bit string and Eve's observed phases.
    pub replay_key: Option<String>,
    pub replay_z: Option<Vec<f64>>,
}

impl Default for AttackSection {
    fn default() -> Self {
        Self {
            n: 1000,
            trials: 1000,
            route: RouteName::Enumerate,
            replay_key: None,
            replay_z: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticsSection {
    /// Monte Carlo trials per sweep point.
    pub trials: u64,
    /// Grids for `analytic` and `sweep`; empty means the single value from
    /// the channel/protocol/attack sections.
    pub rho_grid: Vec<f64>,
    pub n_grid: Vec<u64>,
    pub m_grid: Vec<u32>,
}

impl Default for AnalyticsSection {
    fn default() -> Self {
        Self {
            trials: 1000,
            rho_grid: Vec::new(),
            n_grid: Vec::new(),
            m_grid: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RandomnessSection {
    pub alpha: f64,
    pub concat: usize,
    pub min_sequence_length: usize,
    /// Test instances drawn from the channel model.
    pub trials: u64,
}

impl Default for RandomnessSection {
    fn default() -> Self {
        Self {
            alpha: 0.2,
            concat: 1,
            min_sequence_length: 100,
            trials: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoSourceName {
    #[default]
    Nominal,
    Effective,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GuidelineSection {
    pub p_benchmark: f64,
    pub alpha_step: f64,
    pub mode: GuidelineMode,
    pub rho_source: RhoSourceName,
    pub min_accept: f64,
    /// Channel draws in the ensemble.
    pub trials: u64,
}

impl Default for GuidelineSection {
    fn default() -> Self {
        Self {
            p_benchmark: 1e-4,
            alpha_step: 0.01,
            mode: GuidelineMode::Analytic,
            rho_source: RhoSourceName::Nominal,
            min_accept: 0.0,
            trials: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub formats: Vec<String>,
    /// `simulate` also writes the channel snapshots as a trace CSV.
    pub export_trace: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            formats: vec!["csv".into()],
            export_trace: false,
        }
    }
}

fn cfg_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(cfg_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Checks every section against the constraints of the module it feeds.
    pub fn validate(&self) -> Result<()> {
        if self.channel.model != ChannelModelKind::TraceReplay {
            self.channel_config().map_err(cfg_err)?;
        } else if self.channel.trace.is_none() {
            return Err(Error::Config("trace_replay needs channel.trace".into()));
        }
        let mapping = self.mapping().map_err(cfg_err)?;
        let s = self.key_bits();
        if mapping.subkey_count(s).map_err(cfg_err)? != self.channel.l {
            return Err(Error::Config(format!(
                "protocol.S = {s} with m = {} does not match channel.L = {}",
                self.protocol.m, self.channel.l
            )));
        }
        if !(self.protocol.tol > 0.0) {
            return Err(Error::Config("protocol.tol must be positive".into()));
        }
        if let Some(k) = self.protocol.phase_noise_kappa {
            if !(k > 0.0) {
                return Err(Error::Config("protocol.phase_noise_kappa must be positive".into()));
            }
        }
        AttackBudget::new(self.attack.n).map_err(cfg_err)?;
        if self.attack.replay_key.is_some() != self.attack.replay_z.is_some() {
            return Err(Error::Config(
                "attack.replay_key and attack.replay_z go together".into(),
            ));
        }
        self.replay_fixture().map_err(cfg_err)?;
        for &r in &self.analytics.rho_grid {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::Config(format!("analytics.rho_grid value {r} outside [0, 1]")));
            }
        }
        for &m in &self.analytics.m_grid {
            KeyPhaseMapping::new(m).map_err(cfg_err)?;
        }
        if self.analytics.n_grid.contains(&0) {
            return Err(Error::Config("analytics.n_grid values must be at least 1".into()));
        }
        self.randomness_config().map_err(cfg_err)?;
        self.guideline_config().map_err(cfg_err)?;
        if self.output.formats.iter().any(|f| f != "csv") {
            return Err(Error::Config("output.formats supports only \"csv\"".into()));
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.channel.seed
    }

    pub fn channel_config(&self) -> Result<ChannelModelConfig> {
        ChannelModelConfig::new(self.channel.model, self.channel.rho, self.channel.l, self.channel.seed)
    }

    pub fn mapping(&self) -> Result<KeyPhaseMapping> {
        KeyPhaseMapping::new(self.protocol.m)
    }

    pub fn key_bits(&self) -> usize {
        self.protocol.s.unwrap_or(self.channel.l * self.protocol.m as usize)
    }

    pub fn protocol_config(&self) -> ProtocolConfig {
        ProtocolConfig {
            tolerance: self.protocol.tol,
            phase_noise_kappa: self.protocol.phase_noise_kappa,
        }
    }

    pub fn budget(&self) -> Result<AttackBudget> {
        AttackBudget::new(self.attack.n)
    }

    pub fn route(&self) -> AttackRoute {
        match self.attack.route {
            RouteName::Enumerate => AttackRoute::Enumerate,
            RouteName::Ranked => AttackRoute::Ranked,
        }
    }

    pub fn replay_fixture(&self) -> Result<Option<(SecretKey, PhaseVector)>> {
        match (&self.attack.replay_key, &self.attack.replay_z) {
            (Some(k), Some(z)) => {
                let key: SecretKey = k.parse()?;
                let z = PhaseVector::new(z.clone())?;
                let subkeys = self.mapping()?.subkey_count(key.len())?;
                crate::error::check_len(subkeys, z.len())?;
                Ok(Some((key, z)))
            }
            _ => Ok(None),
        }
    }

    pub fn randomness_config(&self) -> Result<RandomnessTestConfig> {
        let cfg = RandomnessTestConfig {
            alpha: self.randomness.alpha,
            min_sequence_length: self.randomness.min_sequence_length,
            concat_snapshots: self.randomness.concat,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn guideline_config(&self) -> Result<GuidelineConfig> {
        let g = &self.guideline;
        let rho = match g.rho_source {
            RhoSourceName::Nominal => RhoSource::Nominal(self.channel.rho),
            RhoSourceName::Effective => RhoSource::Effective,
        };
        let cfg = GuidelineConfig {
            p_benchmark: g.p_benchmark,
            budget: self.budget()?,
            alpha_step: g.alpha_step,
            mode: g.mode,
            rho,
            min_accept: g.min_accept,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets the top-level seed (and with it every substream).
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.channel.seed = seed;
        self
    }
}
