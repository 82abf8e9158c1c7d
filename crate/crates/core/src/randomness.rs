//! Frequency (monobit) randomness test on quantized channel responses.
//!
//! Bob quantizes the phases of `h` to bits and only runs the protocol when
//! the test accepts them as random. The test is behind a trait so that other
//! statistical tests can be dropped in.

use rayon::prelude::*;
use statrs::function::factorial::ln_binomial;

use crate::channel::ChannelSampler;
use crate::error::{Error, Result};
use crate::keyphase::{differential_sequence, inverse_map, quantize_binary, ChannelSnapshot, KeyPhaseMapping};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomnessTestConfig {
    /// Accept iff p-value > alpha.
    pub alpha: f64,
    /// Shorter sequences are still tested; callers decide whether to warn.
    pub min_sequence_length: usize,
    /// Snapshots concatenated into one tested sequence.
    pub concat_snapshots: usize,
}

impl RandomnessTestConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        let cfg = Self {
            alpha,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be in [0, 1], got {}",
                self.alpha
            )));
        }
        if self.concat_snapshots == 0 {
            return Err(Error::InvalidParameter("concat_snapshots must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for RandomnessTestConfig {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            min_sequence_length: 100,
            concat_snapshots: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub p_value: f64,
    pub accepted: bool,
    pub sequence_length: usize,
    pub ones_count: usize,
}

pub trait RandomnessTest {
    fn name(&self) -> &'static str;

    /// p-value of `bits` under the i.i.d. fair-coin hypothesis.
    fn p_value(&self, bits: &[u8]) -> Result<f64>;

    fn run(&self, bits: &[u8], cfg: &RandomnessTestConfig) -> Result<TestResult> {
        cfg.validate()?;
        if bits.len() < cfg.min_sequence_length {
            log::debug!(
                "{} test on {} bits, below the recommended minimum of {}",
                self.name(),
                bits.len(),
                cfg.min_sequence_length
            );
        }
        let p_value = self.p_value(bits)?;
        Ok(TestResult {
            p_value,
            accepted: p_value > cfg.alpha,
            sequence_length: bits.len(),
            ones_count: bits.iter().filter(|&&b| b != 0).count(),
        })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FrequencyTest;

impl RandomnessTest for FrequencyTest {
    fn name(&self) -> &'static str {
        "frequency"
    }

    fn p_value(&self, bits: &[u8]) -> Result<f64> {
        if bits.is_empty() {
            return Err(Error::TooShort { min: 1, len: 0 });
        }
        let ones = bits.iter().filter(|&&b| b != 0).count() as f64;
        let n = bits.len() as f64;
        Ok(monobit_p_value(ones, n))
    }
}

fn monobit_p_value(ones: f64, n: f64) -> f64 {
    let s_n = 2.0 * ones - n;
    libm::erfc(s_n.abs() / (2.0 * n).sqrt()).clamp(0.0, 1.0)
}

pub fn frequency_test(bits: &[u8], cfg: &RandomnessTestConfig) -> Result<TestResult> {
    FrequencyTest.run(bits, cfg)
}

/// Quantizes each θ_l through the inverse key mapping; with the binary
/// mapping, (-π/2, π/2] gives 0 and the rest 1.
pub fn channel_to_bits(h: &ChannelSnapshot, mapping: KeyPhaseMapping) -> Vec<u8> {
    inverse_map(&h.phase_vector(), mapping)
        .expect("snapshots are non-empty")
        .bits()
        .to_vec()
}

/// Bits of several snapshots, concatenated in order.
pub fn snapshots_to_bits(snapshots: &[ChannelSnapshot], mapping: KeyPhaseMapping) -> Vec<u8> {
    snapshots.iter().flat_map(|h| channel_to_bits(h, mapping)).collect()
}

/// Exact probability that an i.i.d. fair-coin sequence of `n` bits passes
/// the frequency test at `alpha`. The p-value only takes `n/2 + 1` distinct
/// values, so this is generally not `1 - alpha`.
pub fn fair_coin_acceptance(n: usize, alpha: f64) -> f64 {
    let ln_half_n = n as f64 * std::f64::consts::LN_2;
    (0..=n)
        .filter(|&k| monobit_p_value(k as f64, n as f64) > alpha)
        .map(|k| (ln_binomial(n as u64, k as u64) - ln_half_n).exp())
        .sum::<f64>()
        .min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptanceEstimate {
    pub p_accept: f64,
    pub stderr: f64,
    pub accepted: u64,
    pub trials: u64,
    /// 1 - 2 P̂_b over every tested snapshot.
    pub rho_eff_all: f64,
    /// Same, restricted to snapshots whose test accepted; `None` when none did.
    pub rho_eff_accepted: Option<f64>,
}

/// Outcome of testing one group of snapshots, with the differential flip
/// counts needed for ρ_eff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotTest {
    pub result: TestResult,
    pub flips: u64,
    pub pairs: u64,
}

/// Tests trial `t`, made of snapshots `t*c .. t*c + c` of the sampler.
pub fn test_trial(
    channel: &ChannelSampler,
    cfg: &RandomnessTestConfig,
    mapping: KeyPhaseMapping,
    trial: u64,
) -> Result<SnapshotTest> {
    let c = cfg.concat_snapshots as u64;
    let snaps = (trial * c..trial * c + c)
        .map(|i| channel.sample_indexed(i))
        .collect::<Result<Vec<_>>>()?;
    let result = frequency_test(&snapshots_to_bits(&snaps, mapping), cfg)?;
    let (mut flips, mut pairs) = (0u64, 0u64);
    for s in &snaps {
        let d = quantize_binary(&differential_sequence(&s.phase_vector())?);
        flips += d.symbols().iter().filter(|&&b| b == 1).count() as u64;
        pairs += d.len() as u64;
    }
    Ok(SnapshotTest { result, flips, pairs })
}

/// Fraction of channel draws whose quantized bits pass the test, and the
/// effective correlation of all versus accepted draws.
pub fn p_accept_estimate(
    channel: &ChannelSampler,
    cfg: &RandomnessTestConfig,
    trials: u64,
) -> Result<AcceptanceEstimate> {
    cfg.validate()?;
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let mapping = KeyPhaseMapping::binary();
    // (accepted, flips_all, pairs_all, flips_acc, pairs_acc)
    let totals = (0..trials)
        .into_par_iter()
        .map(|t| {
            let r = test_trial(channel, cfg, mapping, t)?;
            let acc = r.result.accepted as u64;
            Ok::<_, Error>([acc, r.flips, r.pairs, r.flips * acc, r.pairs * acc])
        })
        .try_reduce(
            || [0u64; 5],
            |a, b| {
                let mut out = a;
                out.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                Ok(out)
            },
        )?;
    let [accepted, flips, pairs, flips_acc, pairs_acc] = totals;
    let p = accepted as f64 / trials as f64;
    Ok(AcceptanceEstimate {
        p_accept: p,
        stderr: (p * (1.0 - p) / trials as f64).sqrt(),
        accepted,
        trials,
        rho_eff_all: 1.0 - 2.0 * flips as f64 / pairs as f64,
        rho_eff_accepted: (pairs_acc > 0).then(|| 1.0 - 2.0 * flips_acc as f64 / pairs_acc as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelModelConfig, ChannelModelKind};
    use crate::rng::{substream, Stream};
    use rand::Rng;
    use std::f64::consts::PI;

    /// erfc by the Maclaurin series of erf below 3 and the Laplace continued
    /// fraction above.
    fn erfc_oracle(x: f64) -> f64 {
        if x < 3.0 {
            let (mut term, mut sum) = (x, x);
            for k in 1..200 {
                term *= -x * x / k as f64;
                sum += term / (2 * k + 1) as f64;
            }
            1.0 - 2.0 / PI.sqrt() * sum
        } else {
            let mut f = 0.0;
            for k in (1..200).rev() {
                f = (k as f64 / 2.0) / (x + f);
            }
            (-x * x).exp() / PI.sqrt() / (x + f)
        }
    }

    #[test]
    fn erfc_oracle_sanity() {
        assert!((erfc_oracle(0.0) - 1.0).abs() < 1e-16);
        assert!((erfc_oracle(1.0) - 0.157_299_207_050_285_13).abs() < 1e-15);
        assert!((erfc_oracle(3.0) / 2.209_049_699_858_544e-5 - 1.0).abs() < 1e-13);
    }

    fn cfg(alpha: f64) -> RandomnessTestConfig {
        RandomnessTestConfig::new(alpha).unwrap()
    }

    fn sampler(kind: ChannelModelKind, rho: f64, l: usize, seed: u64) -> ChannelSampler {
        ChannelSampler::new(ChannelModelConfig::new(kind, rho, l, seed).unwrap(), None).unwrap()
    }

    #[test]
    fn frequency_examples() {
        let mut balanced = vec![1u8; 28];
        balanced.extend([0u8; 28]);
        let r = frequency_test(&balanced, &cfg(0.99)).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert!(r.accepted);
        assert_eq!((r.sequence_length, r.ones_count), (56, 28));

        let r = frequency_test(&[1u8; 56], &cfg(1e-12)).unwrap();
        assert!((r.p_value - erfc_oracle(28f64.sqrt())).abs() < 1e-25);
        assert!(r.p_value > 7.1e-14 && r.p_value < 7.3e-14);
        assert!(!r.accepted);

        let mut bits = vec![1u8; 32];
        bits.extend([0u8; 24]);
        let r = frequency_test(&bits, &cfg(0.2)).unwrap();
        assert!((r.p_value - 0.2850).abs() < 5e-5, "{}", r.p_value);
        assert!(r.accepted);

        assert!(frequency_test(&[], &cfg(0.2)).is_err());
        assert!(RandomnessTestConfig::new(1.5).is_err());
    }

    #[test]
    fn p_value_matches_erfc_oracle_and_decision_is_consistent() {
        let mut rng = substream(9, Stream::Test, 0);
        for _ in 0..1000 {
            let n = rng.random_range(1..300);
            let bits: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
            let alpha = rng.random::<f64>();
            let r = frequency_test(&bits, &cfg(alpha)).unwrap();
            let s: i64 = bits.iter().map(|&b| 2 * b as i64 - 1).sum();
            let oracle = erfc_oracle((s.abs() as f64 / (n as f64).sqrt()) / 2f64.sqrt());
            assert!((r.p_value - oracle).abs() < 1e-12);
            assert_eq!(r.accepted, r.p_value > alpha);
        }
    }

    #[test]
    fn channel_to_bits_examples() {
        let h = ChannelSnapshot::new(vec![1.0; 4], vec![0.0; 4]).unwrap();
        assert_eq!(channel_to_bits(&h, KeyPhaseMapping::binary()), vec![0; 4]);
        let h = ChannelSnapshot::new(vec![1.0; 4], vec![0.0, PI, 0.0, PI]).unwrap();
        assert_eq!(channel_to_bits(&h, KeyPhaseMapping::binary()), vec![0, 1, 0, 1]);
        let h = ChannelSnapshot::new(vec![1.0; 2], vec![PI / 2.0, -PI / 2.0]).unwrap();
        assert_eq!(channel_to_bits(&h, KeyPhaseMapping::binary()), vec![0, 1]);

        let flat = sampler(ChannelModelKind::FlatFading, 1.0, 16, 2)
            .sample_indexed(0)
            .unwrap();
        let bits = channel_to_bits(&flat, KeyPhaseMapping::binary());
        assert!(bits.iter().all(|&b| b == bits[0]));
        assert_eq!(
            snapshots_to_bits(&[flat.clone(), flat], KeyPhaseMapping::binary()).len(),
            32
        );
    }

    #[test]
    fn acceptance_boundaries() {
        let ch = sampler(ChannelModelKind::BernoulliDifferential, 1.0, 56, 4);
        assert_eq!(p_accept_estimate(&ch, &cfg(0.0), 500).unwrap().p_accept, 1.0);
        assert_eq!(p_accept_estimate(&ch, &cfg(1.0), 500).unwrap().p_accept, 0.0);
        let flat = sampler(ChannelModelKind::FlatFading, 1.0, 56, 4);
        assert_eq!(p_accept_estimate(&flat, &cfg(0.2), 500).unwrap().p_accept, 0.0);
    }

    #[test]
    fn independent_subcarriers_pass_near_the_exact_rate() {
        // ρ = 0 makes the quantized phases i.i.d. fair bits
        let ch = sampler(ChannelModelKind::BernoulliDifferential, 0.0, 56, 8);
        let trials = 10_000;
        let est = p_accept_estimate(&ch, &cfg(0.2), trials).unwrap();
        let exact = fair_coin_acceptance(56, 0.2);
        assert!((exact - 0.77119).abs() < 1e-4);
        let se = (exact * (1.0 - exact) / trials as f64).sqrt();
        assert!((est.p_accept - exact).abs() < 3.0 * se, "{} vs {exact}", est.p_accept);
        assert!((est.p_accept - 0.8).abs() < 0.04);
    }

    #[test]
    fn fair_coin_acceptance_exact_values() {
        assert!((fair_coin_acceptance(128, 0.1) - 0.90731).abs() < 1e-5);
        assert!((fair_coin_acceptance(128, 0.2) - 0.81532).abs() < 1e-5);
        assert!((fair_coin_acceptance(128, 0.5) - 0.46373).abs() < 1e-5);
        assert_eq!(fair_coin_acceptance(10, 1.0), 0.0);
        assert!((fair_coin_acceptance(10, 0.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn acceptance_is_monotone_in_alpha() {
        let ch = sampler(ChannelModelKind::Ar1ComplexGaussian, 0.6, 56, 12);
        let mut prev = 1.0;
        for i in 0..=10 {
            let p = p_accept_estimate(&ch, &cfg(i as f64 / 10.0), 2000).unwrap().p_accept;
            assert!(p <= prev);
            prev = p;
        }
    }

    #[test]
    fn test_filters_toward_lower_correlation() {
        // mixture of ρ = 0.2 and ρ = 0.8 channels
        let lo = sampler(ChannelModelKind::BernoulliDifferential, 0.2, 56, 21);
        let hi = sampler(ChannelModelKind::BernoulliDifferential, 0.8, 56, 22);
        let c = cfg(0.2);
        let mut tests = Vec::new();
        for t in 0..4000u64 {
            let ch = if t % 2 == 0 { &lo } else { &hi };
            tests.push(test_trial(ch, &c, KeyPhaseMapping::binary(), t / 2).unwrap());
        }
        let rho = |sel: &dyn Fn(&SnapshotTest) -> bool| {
            let (f, p) = tests
                .iter()
                .filter(|t| sel(t))
                .fold((0, 0), |(f, p), t| (f + t.flips, p + t.pairs));
            1.0 - 2.0 * f as f64 / p as f64
        };
        let all = rho(&|_| true);
        let accepted = rho(&|t| t.result.accepted);
        assert!(accepted <= all, "{accepted} > {all}");
    }

    #[test]
    fn concatenation_lengthens_sequences() {
        let ch = sampler(ChannelModelKind::BernoulliDifferential, 0.5, 56, 3);
        let c = RandomnessTestConfig {
            concat_snapshots: 2,
            ..cfg(0.2)
        };
        let t = test_trial(&ch, &c, KeyPhaseMapping::binary(), 5).unwrap();
        assert_eq!(t.result.sequence_length, 112);
        assert_eq!(t.pairs, 110);
        let joined = snapshots_to_bits(
            &[ch.sample_indexed(10).unwrap(), ch.sample_indexed(11).unwrap()],
            KeyPhaseMapping::binary(),
        );
        assert_eq!(t.result, frequency_test(&joined, &c).unwrap());
    }
}
