//! Simulation, attack and analysis toolkit for OFDM challenge-response
//! physical-layer authentication.
//!
//! Alice and Bob share a secret key mapped onto per-subcarrier phases. An
//! eavesdropper who observes both legs of the exchange learns the key phases
//! rotated by the unknown channel; when adjacent subcarriers are correlated,
//! the phase differentials leak and a likelihood-ordered guess recovers the
//! key. The crate provides the protocol, the attack, closed-form success
//! probabilities, a randomness test on channel responses, and the threshold
//! optimizer that decides when the protocol is safe to use.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod attack;
pub mod channel;
pub mod cli;
pub mod combinatorics;
pub mod error;
pub mod guideline;
pub mod io;
pub mod keyphase;
pub mod protocol;
pub mod randomness;
pub mod rng;

pub use analytics::{p_m_mdlg, p_mdlg, AnalyticQuery, SuccessProbability};
pub use attack::{run_m_mdlg, run_mdlg, AttackBudget, AttackReport, CandidateEnumerator, KeyOracle};
pub use channel::{ChannelModelConfig, ChannelModelKind, ChannelSampler, TraceStore};
pub use error::{Error, Result};
pub use keyphase::{ChannelSnapshot, KeyPhaseMapping, PhaseVector, SecretKey};
