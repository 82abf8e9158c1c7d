//! Correlated OFDM subchannel generation, trace replay and correlation
//! estimation.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::keyphase::{differential_sequence, quantize_binary, wrap_phase, ChannelSnapshot};
use crate::rng::{substream, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelModelKind {
    /// Phase differentials whose quantized bit flips with probability (1-ρ)/2.
    BernoulliDifferential,
    /// g_{l+1} = ρ g_l + sqrt(1-ρ²) w_l over complex unit Gaussians.
    Ar1ComplexGaussian,
    /// Identical response on every subcarrier.
    FlatFading,
    /// Snapshots from an ingested trace, round-robin.
    TraceReplay,
}

impl ChannelModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ChannelModelKind::BernoulliDifferential => "bernoulli_differential",
            ChannelModelKind::Ar1ComplexGaussian => "ar1_complex_gaussian",
            ChannelModelKind::FlatFading => "flat_fading",
            ChannelModelKind::TraceReplay => "trace_replay",
        }
    }
}

impl fmt::Display for ChannelModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChannelModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bernoulli_differential" => Ok(Self::BernoulliDifferential),
            "ar1_complex_gaussian" => Ok(Self::Ar1ComplexGaussian),
            "flat_fading" => Ok(Self::FlatFading),
            "trace_replay" => Ok(Self::TraceReplay),
            other => Err(Error::InvalidParameter(format!("unknown channel model {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModelConfig {
    pub kind: ChannelModelKind,
    /// Target adjacent-subcarrier correlation in [0, 1]. Ignored by
    /// `flat_fading` (always 1) and `trace_replay`.
    pub rho: f64,
    pub num_subcarriers: usize,
    pub seed: u64,
}

impl ChannelModelConfig {
    pub fn new(kind: ChannelModelKind, rho: f64, num_subcarriers: usize, seed: u64) -> Result<Self> {
        let cfg = Self {
            kind,
            rho,
            num_subcarriers,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidParameter(format!(
                "rho must be in [0, 1], got {}",
                self.rho
            )));
        }
        if self.num_subcarriers < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 subcarriers, got {}",
                self.num_subcarriers
            )));
        }
        Ok(())
    }

    /// The correlation the model is built to exhibit.
    pub fn nominal_rho(&self) -> f64 {
        match self.kind {
            ChannelModelKind::FlatFading => 1.0,
            _ => self.rho,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceSource {
    pub path: Option<PathBuf>,
    pub bandwidth_label: Option<String>,
    pub num_subcarriers: usize,
}

/// Externally collected snapshots replayed in order.
#[derive(Debug, Clone)]
pub struct TraceStore {
    snapshots: Vec<ChannelSnapshot>,
    source: TraceSource,
    cursor: usize,
}

impl TraceStore {
    pub fn new(snapshots: Vec<ChannelSnapshot>, mut source: TraceSource) -> Result<Self> {
        if let Some(first) = snapshots.first() {
            let l = first.num_subcarriers();
            for s in &snapshots {
                check_len(l, s.num_subcarriers())?;
            }
            source.num_subcarriers = l;
        }
        Ok(Self {
            snapshots,
            source,
            cursor: 0,
        })
    }

    pub fn snapshots(&self) -> &[ChannelSnapshot] {
        &self.snapshots
    }

    pub fn source(&self) -> &TraceSource {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn num_subcarriers(&self) -> usize {
        self.source.num_subcarriers
    }

    /// Next snapshot, wrapping around at the end.
    pub fn next_snapshot(&mut self) -> Result<ChannelSnapshot> {
        if self.snapshots.is_empty() {
            return Err(Error::EmptyTrace);
        }
        let s = self.snapshots[self.cursor].clone();
        self.cursor = (self.cursor + 1) % self.snapshots.len();
        Ok(s)
    }

    /// Snapshot `index` modulo the store size.
    pub fn at(&self, index: u64) -> Result<&ChannelSnapshot> {
        if self.snapshots.is_empty() {
            return Err(Error::EmptyTrace);
        }
        Ok(&self.snapshots[(index % self.snapshots.len() as u64) as usize])
    }
}

/// Circularly-symmetric complex Gaussian with unit power, as (re, im).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    (re * scale, im * scale)
}

/// Uniform phase on (-π, π].
pub fn uniform_phase<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    PI - rng.random::<f64>() * 2.0 * PI
}

/// Independent Rayleigh gains on every subcarrier.
pub fn sample_rayleigh<R: Rng + ?Sized>(num_subcarriers: usize, rng: &mut R) -> Result<ChannelSnapshot> {
    let gains: Vec<(f64, f64)> = (0..num_subcarriers).map(|_| complex_gaussian(rng)).collect();
    ChannelSnapshot::from_gains(&gains)
}

/// Draws one snapshot from the configured model.
pub fn sample_channel<R: Rng + ?Sized>(
    cfg: &ChannelModelConfig,
    rng: &mut R,
    trace: Option<&mut TraceStore>,
) -> Result<ChannelSnapshot> {
    cfg.validate()?;
    let l = cfg.num_subcarriers;
    match cfg.kind {
        ChannelModelKind::BernoulliDifferential => {
            let keep = (1.0 + cfg.rho) / 2.0;
            let mut phases = Vec::with_capacity(l);
            let mut theta = uniform_phase(rng);
            phases.push(theta);
            for _ in 1..l {
                let u: f64 = rng.random();
                // Uniform inside the chosen quantization region, both half-open
                // on the left: (-π/2, π/2] or (π/2, 3π/2].
                let v: f64 = rng.random();
                let delta = if u < keep {
                    FRAC_PI_2 - v * PI
                } else {
                    3.0 * FRAC_PI_2 - v * PI
                };
                theta = wrap_phase(theta + delta);
                phases.push(theta);
            }
            ChannelSnapshot::new(vec![1.0; l], phases)
        }
        ChannelModelKind::Ar1ComplexGaussian => {
            let innovation = (1.0 - cfg.rho * cfg.rho).max(0.0).sqrt();
            let mut gains = Vec::with_capacity(l);
            let mut g = complex_gaussian(rng);
            gains.push(g);
            for _ in 1..l {
                let w = complex_gaussian(rng);
                g = (cfg.rho * g.0 + innovation * w.0, cfg.rho * g.1 + innovation * w.1);
                gains.push(g);
            }
            ChannelSnapshot::from_gains(&gains)
        }
        ChannelModelKind::FlatFading => {
            let (re, im) = complex_gaussian(rng);
            let amplitude = re.hypot(im);
            let theta = uniform_phase(rng);
            ChannelSnapshot::new(vec![amplitude; l], vec![theta; l])
        }
        ChannelModelKind::TraceReplay => {
            let store = trace.ok_or(Error::EmptyTrace)?;
            let s = store.next_snapshot()?;
            check_len(l, s.num_subcarriers())?;
            Ok(s)
        }
    }
}

/// Order-independent snapshot generation: snapshot `index` always comes from
/// its own substream (or, when replaying, from trace position `index`).
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    cfg: ChannelModelConfig,
    trace: Option<TraceStore>,
}

impl ChannelSampler {
    pub fn new(cfg: ChannelModelConfig, trace: Option<TraceStore>) -> Result<Self> {
        cfg.validate()?;
        if cfg.kind == ChannelModelKind::TraceReplay {
            let store = trace.as_ref().ok_or(Error::EmptyTrace)?;
            if store.is_empty() {
                return Err(Error::EmptyTrace);
            }
            check_len(cfg.num_subcarriers, store.num_subcarriers())?;
        }
        Ok(Self { cfg, trace })
    }

    pub fn config(&self) -> &ChannelModelConfig {
        &self.cfg
    }

    pub fn sample_indexed(&self, index: u64) -> Result<ChannelSnapshot> {
        match (&self.cfg.kind, &self.trace) {
            (ChannelModelKind::TraceReplay, Some(store)) => store.at(index).cloned(),
            _ => {
                let mut rng = substream(self.cfg.seed, Stream::Channel, index);
                sample_channel(&self.cfg, &mut rng, None)
            }
        }
    }
}

fn check_ensemble(snapshots: &[ChannelSnapshot], min_snapshots: usize) -> Result<usize> {
    if snapshots.len() < min_snapshots {
        return Err(Error::TooShort {
            min: min_snapshots,
            len: snapshots.len(),
        });
    }
    let l = snapshots[0].num_subcarriers();
    if l < 2 {
        return Err(Error::TooShort { min: 2, len: l });
    }
    for s in snapshots {
        check_len(l, s.num_subcarriers())?;
    }
    Ok(l)
}

/// Pooled Pearson correlation between adjacent-subcarrier complex gains:
/// `Re(Σ (y-ȳ)(x-x̄)*) / sqrt(Σ|x-x̄|² Σ|y-ȳ|²)` with x = g_l, y = g_{l+1}
/// over every adjacent pair of every snapshot.
pub fn estimate_correlation(snapshots: &[ChannelSnapshot]) -> Result<f64> {
    let l = check_ensemble(snapshots, 2)?;
    let count = (snapshots.len() * (l - 1)) as f64;

    let mut mx = (0.0, 0.0);
    let mut my = (0.0, 0.0);
    for s in snapshots {
        for i in 0..l - 1 {
            let x = s.gain(i);
            let y = s.gain(i + 1);
            mx = (mx.0 + x.0, mx.1 + x.1);
            my = (my.0 + y.0, my.1 + y.1);
        }
    }
    mx = (mx.0 / count, mx.1 / count);
    my = (my.0 / count, my.1 / count);

    let (mut cross, mut vx, mut vy) = (0.0, 0.0, 0.0);
    for s in snapshots {
        for i in 0..l - 1 {
            let x = s.gain(i);
            let y = s.gain(i + 1);
            let dx = (x.0 - mx.0, x.1 - mx.1);
            let dy = (y.0 - my.0, y.1 - my.1);
            // Re(dy * conj(dx))
            cross += dy.0 * dx.0 + dy.1 * dx.1;
            vx += dx.0 * dx.0 + dx.1 * dx.1;
            vy += dy.0 * dy.0 + dy.1 * dy.1;
        }
    }
    let denom = (vx * vy).sqrt();
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(Error::Degenerate("zero variance in subcarrier gains".into()));
    }
    Ok((cross / denom).clamp(-1.0, 1.0))
}

/// Fraction of ones in the quantized phase differential of one snapshot.
pub fn snapshot_flip_rate(snapshot: &ChannelSnapshot) -> Result<f64> {
    let bits = quantize_binary(&differential_sequence(&snapshot.phase_vector())?);
    let ones = bits.symbols().iter().filter(|&&b| b == 1).count();
    Ok(ones as f64 / bits.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionEstimate {
    /// Empirical probability that a quantized phase differential is 1.
    pub p_flip: f64,
    /// 1 - 2 p_flip.
    pub rho_eff: f64,
    /// Number of adjacent pairs pooled.
    pub pairs: usize,
}

pub fn estimate_transition_probability(snapshots: &[ChannelSnapshot]) -> Result<TransitionEstimate> {
    let l = check_ensemble(snapshots, 1)?;
    let mut ones = 0usize;
    for s in snapshots {
        let bits = quantize_binary(&differential_sequence(&s.phase_vector())?);
        ones += bits.symbols().iter().filter(|&&b| b == 1).count();
    }
    let pairs = snapshots.len() * (l - 1);
    let p_flip = ones as f64 / pairs as f64;
    Ok(TransitionEstimate {
        p_flip,
        rho_eff: 1.0 - 2.0 * p_flip,
        pairs,
    })
}
