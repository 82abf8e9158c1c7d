//! When to use PLA: pick the smallest randomness-test threshold α whose
//! acceptance probability, multiplied by the attack success probability,
//! stays under a benchmark.

use rayon::prelude::*;

use crate::analytics::{p_mdlg, AnalyticQuery, MonteCarloEstimate};
use crate::attack::{candidate_index, derive_reference, AttackBudget};
use crate::channel::ChannelSampler;
use crate::error::{Error, Result};
use crate::keyphase::{KeyPhaseMapping, SecretKey};
use crate::protocol::{run_authentication_round, ProtocolConfig};
use crate::randomness::{test_trial, RandomnessTestConfig};
use crate::rng::{substream, Stream};

/// `P(test accepts) * P(attack succeeds)`.
pub fn eve_success_probability(p_accept: f64, p_mdlg: f64) -> Result<f64> {
    for p in [p_accept, p_mdlg] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("probability {p} outside [0, 1]")));
        }
    }
    Ok(p_accept * p_mdlg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuidelineMode {
    /// Unconditional closed-form attack success times measured acceptance.
    #[default]
    Analytic,
    /// Both factors measured on the ensemble, attack success only over
    /// accepted channels.
    Empirical,
}

/// Correlation fed to the closed form in analytic mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoSource {
    Nominal(f64),
    /// 1 - 2 P̂_b measured on the ensemble, clamped to [0, 1].
    Effective,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidelineConfig {
    pub p_benchmark: f64,
    pub budget: AttackBudget,
    pub alpha_step: f64,
    pub mode: GuidelineMode,
    pub rho: RhoSource,
    /// Acceptance at or below this means PLA is effectively never used.
    pub min_accept: f64,
}

impl GuidelineConfig {
    pub fn new(p_benchmark: f64, budget: AttackBudget, mode: GuidelineMode, rho: RhoSource) -> Result<Self> {
        let cfg = Self {
            p_benchmark,
            budget,
            alpha_step: 0.01,
            mode,
            rho,
            min_accept: 0.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_benchmark > 0.0 && self.p_benchmark <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "p_benchmark must be in (0, 1], got {}",
                self.p_benchmark
            )));
        }
        if !(self.alpha_step > 0.0 && self.alpha_step <= 0.5) {
            return Err(Error::InvalidParameter(format!(
                "alpha grid step must be in (0, 0.5], got {}",
                self.alpha_step
            )));
        }
        if !(0.0..1.0).contains(&self.min_accept) {
            return Err(Error::InvalidParameter("min_accept must be in [0, 1)".into()));
        }
        if let RhoSource::Nominal(r) = self.rho {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidParameter(format!("rho must be in [0, 1], got {r}")));
            }
        }
        Ok(())
    }

    /// `0, step, 2 step, ..., 1`; the last point is exactly 1.
    pub fn alpha_grid(&self) -> Vec<f64> {
        let n = (1.0 / self.alpha_step).round() as usize;
        (0..=n)
            .map(|k| (k as f64 * self.alpha_step).min(1.0))
            .chain(
                // step need not divide 1
                ((n as f64 * self.alpha_step) < 1.0).then_some(1.0),
            )
            .collect()
    }
}

/// One simulated channel use.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    /// Frequency-test p-value of the quantized channel phases.
    pub p_value: f64,
    /// Differential bit flips of θ and the number of differentials.
    pub flips: u64,
    pub pairs: u64,
    /// Zero-based position of the true key in Eve's candidate list
    /// (saturating).
    pub candidate_rank: u128,
}

/// Channel draws with their test outcomes and attack ranks, so that every
/// (α, N) pair can be evaluated without re-simulating.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEnsemble {
    pub num_subcarriers: usize,
    pub records: Vec<TrialRecord>,
}

impl ChannelEnsemble {
    /// Trial `t` uses channel snapshot `t` for both the randomness test and a
    /// full protocol round with key `t` from the key substream.
    pub fn simulate(channel: &ChannelSampler, trials: u64, seed: u64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        let mapping = KeyPhaseMapping::binary();
        let l = channel.config().num_subcarriers;
        let test_cfg = RandomnessTestConfig::new(0.0)?;
        let records = (0..trials)
            .into_par_iter()
            .map(|t| {
                let tested = test_trial(channel, &test_cfg, mapping, t)?;
                let key = SecretKey::random(l, &mut substream(seed, Stream::Key, t))?;
                let (_, z) = run_authentication_round(channel, &key, mapping, &ProtocolConfig::default(), seed, t)?;
                let rank = candidate_index(&derive_reference(&z)?, mapping, &key)?;
                Ok(TrialRecord {
                    p_value: tested.result.p_value,
                    flips: tested.flips,
                    pairs: tested.pairs,
                    candidate_rank: rank,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            num_subcarriers: l,
            records,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn p_accept(&self, alpha: f64) -> f64 {
        self.records.iter().filter(|r| r.p_value > alpha).count() as f64 / self.len() as f64
    }

    fn rho_eff_of<'a>(records: impl Iterator<Item = &'a TrialRecord>) -> Option<f64> {
        let (f, p) = records.fold((0u64, 0u64), |(f, p), r| (f + r.flips, p + r.pairs));
        (p > 0).then(|| 1.0 - 2.0 * f as f64 / p as f64)
    }

    pub fn rho_eff(&self) -> f64 {
        Self::rho_eff_of(self.records.iter()).unwrap_or(1.0)
    }

    pub fn rho_eff_accepted(&self, alpha: f64) -> Option<f64> {
        Self::rho_eff_of(self.records.iter().filter(|r| r.p_value > alpha))
    }

    /// Attack success over every trial, ignoring the test.
    pub fn success(&self, budget: AttackBudget) -> MonteCarloEstimate {
        let hits = self
            .records
            .iter()
            .filter(|r| r.candidate_rank < budget.get() as u128)
            .count();
        MonteCarloEstimate::from_counts(hits as u64, self.len() as u64)
    }

    /// Attack success over the trials the test accepts at `alpha`.
    pub fn conditional_success(&self, alpha: f64, budget: AttackBudget) -> Option<MonteCarloEstimate> {
        let accepted: Vec<_> = self.records.iter().filter(|r| r.p_value > alpha).collect();
        if accepted.is_empty() {
            return None;
        }
        let hits = accepted
            .iter()
            .filter(|r| r.candidate_rank < budget.get() as u128)
            .count();
        Some(MonteCarloEstimate::from_counts(hits as u64, accepted.len() as u64))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuidelineRow {
    pub alpha: f64,
    pub p_accept: f64,
    /// Attack success used at this α: closed form (analytic) or conditional
    /// on acceptance (empirical).
    pub p_mdlg_mode: f64,
    pub p_eve: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GuidelineDecision {
    Use {
        alpha_star: f64,
        p_accept: f64,
        p_eve: f64,
    },
    /// No threshold keeps the attack under the benchmark while still letting
    /// the protocol run.
    RejectPla,
}

impl GuidelineDecision {
    /// α* with "reject" read as the strictest threshold, 1.
    pub fn effective_alpha(&self) -> f64 {
        match self {
            GuidelineDecision::Use { alpha_star, .. } => *alpha_star,
            GuidelineDecision::RejectPla => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuidelineReport {
    pub rows: Vec<GuidelineRow>,
    pub decision: GuidelineDecision,
    /// Correlation the closed form was evaluated at (analytic mode).
    pub rho_used: Option<f64>,
}

pub fn optimize_alpha(cfg: &GuidelineConfig, ensemble: &ChannelEnsemble) -> Result<GuidelineReport> {
    cfg.validate()?;
    if ensemble.is_empty() {
        return Err(Error::InvalidParameter("empty channel ensemble".into()));
    }
    let (rho_used, p_analytic) = match cfg.mode {
        GuidelineMode::Analytic => {
            let rho = match cfg.rho {
                RhoSource::Nominal(r) => r,
                RhoSource::Effective => ensemble.rho_eff().clamp(0.0, 1.0),
            };
            let q = AnalyticQuery::binary(ensemble.num_subcarriers, rho, cfg.budget.get())?;
            (Some(rho), Some(p_mdlg(&q)?.value))
        }
        GuidelineMode::Empirical => (None, None),
    };

    let rows: Vec<GuidelineRow> = cfg
        .alpha_grid()
        .into_iter()
        .map(|alpha| {
            let p_accept = ensemble.p_accept(alpha);
            let p_mdlg_mode = match p_analytic {
                Some(p) => p,
                None => ensemble.conditional_success(alpha, cfg.budget).map_or(0.0, |e| e.rate),
            };
            let p_eve = p_accept * p_mdlg_mode;
            GuidelineRow {
                alpha,
                p_accept,
                p_mdlg_mode,
                p_eve,
                feasible: p_eve <= cfg.p_benchmark,
            }
        })
        .collect();

    let decision = match rows.iter().find(|r| r.feasible) {
        Some(r) if r.p_accept > cfg.min_accept => GuidelineDecision::Use {
            alpha_star: r.alpha,
            p_accept: r.p_accept,
            p_eve: r.p_eve,
        },
        _ => GuidelineDecision::RejectPla,
    };
    Ok(GuidelineReport {
        rows,
        decision,
        rho_used,
    })
}
