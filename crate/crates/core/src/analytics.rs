//! Closed-form attack success probabilities, the budget-to-level conversion
//! behind them, and a Monte Carlo harness that measures the same quantity by
//! running the protocol and the attack end to end.

use rayon::prelude::*;
use statrs::function::factorial::ln_binomial;
use statrs::function::gamma::ln_gamma;

use crate::attack::{run_m_mdlg, run_m_mdlg_ranked, AttackBudget, EqualityOracle};
use crate::channel::ChannelSampler;
use crate::combinatorics::{binomial, cumulative_level_size};
use crate::error::{Error, Result};
use crate::keyphase::{KeyPhaseMapping, SecretKey};
use crate::protocol::{run_authentication_round, ProtocolConfig};
use crate::rng::{substream, Stream};

/// Parameters of one analytic evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticQuery {
    /// Subcarriers, equal to the number of sub-keys.
    pub l: usize,
    /// Key bits.
    pub s: usize,
    /// Bits per sub-key.
    pub m: u32,
    pub rho: f64,
    /// Attack budget.
    pub n: u64,
}

impl AnalyticQuery {
    pub fn binary(l: usize, rho: f64, n: u64) -> Result<Self> {
        Self::m_ary(l, 1, rho, n)
    }

    pub fn m_ary(s: usize, m: u32, rho: f64, n: u64) -> Result<Self> {
        let mapping = KeyPhaseMapping::new(m)?;
        let l = mapping.subkey_count(s)?;
        let q = Self { l, s, m, rho, n };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        let mapping = KeyPhaseMapping::new(self.m)?;
        if mapping.subkey_count(self.s)? != self.l {
            return Err(Error::InvalidParameter(format!(
                "S = {} with m = {} gives {} sub-keys, but L = {}",
                self.s,
                self.m,
                self.s / self.m as usize,
                self.l
            )));
        }
        if self.l < 2 {
            return Err(Error::TooShort { min: 2, len: self.l });
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidParameter(format!(
                "rho must be in [0, 1], got {}",
                self.rho
            )));
        }
        Ok(())
    }

    pub fn mapping(&self) -> KeyPhaseMapping {
        KeyPhaseMapping::new(self.m).expect("validated")
    }

    /// Probability that one differential symbol of Eve's reference differs
    /// from the key's.
    pub fn symbol_error_probability(&self) -> f64 {
        1.0 - (1.0 + self.rho) / self.mapping().alphabet_size() as f64
    }

    pub fn n_max(&self) -> i64 {
        n_max_levels(self.l - 1, self.mapping().alphabet_size(), self.n)
    }
}

/// A probability together with its base-10 logarithm, which stays finite
/// when the value underflows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuccessProbability {
    pub value: f64,
    pub log10: f64,
}

impl SuccessProbability {
    pub fn from_ln(ln: f64) -> Self {
        Self {
            value: ln.exp(),
            log10: ln / std::f64::consts::LN_10,
        }
    }

    pub fn zero() -> Self {
        Self {
            value: 0.0,
            log10: f64::NEG_INFINITY,
        }
    }
}

/// Largest `n'` with `q * sum_{n<=n'} C(elements, n) (q-1)^n <= budget`, or
/// -1 if not even the first level fits.
pub fn n_max_levels(elements: usize, alphabet: u32, budget: u64) -> i64 {
    let mut best = -1;
    for n in 0..=elements {
        if cumulative_level_size(elements as u64, n as u64, alphabet) <= budget as u128 {
            best = n as i64;
        } else {
            break;
        }
    }
    best
}

pub fn n_max_binary(l: usize, budget: u64) -> i64 {
    n_max_levels(l.saturating_sub(1), 2, budget)
}

pub fn n_max_m_ary(s: usize, m: u32, budget: u64) -> Result<i64> {
    let mapping = KeyPhaseMapping::new(m)?;
    let l = mapping.subkey_count(s)?;
    Ok(n_max_levels(l - 1, mapping.alphabet_size(), budget))
}

/// Candidates in all levels up to and including `n_max`; the largest budget
/// that the analytic formula treats as `n_max`.
pub fn complete_level_budget(elements: usize, alphabet: u32, n_max: i64) -> u128 {
    if n_max < 0 {
        0
    } else {
        cumulative_level_size(elements as u64, n_max as u64, alphabet)
    }
}

fn ln_choose(n: u64, k: u64) -> f64 {
    match binomial(n, k) {
        u128::MAX => ln_binomial(n, k),
        b => (b as f64).ln(),
    }
}

/// ln of `sum_{n=0}^{n_max} C(k, n) p^n (1-p)^(k-n)`, by log-sum-exp.
fn ln_binomial_lower_tail(k: usize, p: f64, n_max: i64) -> f64 {
    if n_max < 0 {
        return f64::NEG_INFINITY;
    }
    let top = (n_max as usize).min(k);
    let ln_p = p.ln();
    let ln_q = (1.0 - p).ln();
    let terms: Vec<f64> = (0..=top)
        .map(|n| {
            // 0 * ln 0 is taken as 0
            let a = if n == 0 { 0.0 } else { n as f64 * ln_p };
            let b = if n == k { 0.0 } else { (k - n) as f64 * ln_q };
            ln_choose(k as u64, n as u64) + a + b
        })
        .filter(|t| t.is_finite())
        .collect();
    let Some(max) = terms.iter().cloned().reduce(f64::max) else {
        return f64::NEG_INFINITY;
    };
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    (max + sum.ln()).min(0.0)
}

/// MDLG success probability with the binary mapping.
pub fn p_mdlg(query: &AnalyticQuery) -> Result<SuccessProbability> {
    query.validate()?;
    if query.m != 1 {
        return Err(Error::InvalidParameter("p_mdlg needs m = 1; use p_m_mdlg".into()));
    }
    Ok(p_m_mdlg_unchecked(query))
}

/// m-MDLG success probability; equals [`p_mdlg`] when m = 1.
pub fn p_m_mdlg(query: &AnalyticQuery) -> Result<SuccessProbability> {
    query.validate()?;
    Ok(p_m_mdlg_unchecked(query))
}

fn p_m_mdlg_unchecked(query: &AnalyticQuery) -> SuccessProbability {
    let n_max = query.n_max();
    if n_max < 0 {
        return SuccessProbability::zero();
    }
    let p = query.symbol_error_probability();
    SuccessProbability::from_ln(ln_binomial_lower_tail(query.l - 1, p, n_max))
}

/// Regularized incomplete beta function I_x(a, b).
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || !(a > 0.0) || !(b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "incomplete beta needs x in [0, 1] and a, b > 0 (x={x}, a={a}, b={b})"
        )));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(x);
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    // the continued fraction converges fast below the mean; use symmetry above
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok((ln_front.exp() * beta_continued_fraction(x, a, b) / a).clamp(0.0, 1.0))
    } else {
        Ok((1.0 - ln_front.exp() * beta_continued_fraction(1.0 - x, b, a) / b).clamp(0.0, 1.0))
    }
}

/// Modified Lentz evaluation of the incomplete beta continued fraction.
fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for i in 1..10_000 {
        let m = i as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Success probability through the binomial-CDF identity
/// `sum_{n<=n_max} C(K,n) P^n (1-P)^(K-n) = I_{1-P}(K - n_max, n_max + 1)`.
/// Independent of [`p_m_mdlg`]; used to cross-check it.
pub fn p_m_mdlg_beta_form(query: &AnalyticQuery) -> Result<f64> {
    query.validate()?;
    let k = (query.l - 1) as i64;
    let n_max = query.n_max();
    if n_max < 0 {
        return Ok(0.0);
    }
    if n_max >= k {
        return Ok(1.0);
    }
    let p = query.symbol_error_probability();
    regularized_incomplete_beta(1.0 - p, (k - n_max) as f64, (n_max + 1) as f64)
}

/// Success of guessing `n` distinct keys uniformly out of 2^s.
pub fn random_guess_baseline(s: usize, n: u64) -> Result<SuccessProbability> {
    if s < 64 && n > 1u64 << s {
        return Err(Error::InvalidParameter(format!(
            "budget {n} exceeds the 2^{s} key space"
        )));
    }
    let ln = (n as f64).ln() - s as f64 * std::f64::consts::LN_2;
    let mut p = SuccessProbability::from_ln(ln);
    p.value = p.value.min(1.0);
    Ok(p)
}

/// How the Monte Carlo harness decides whether the attack succeeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AttackRoute {
    /// Walk the candidate list and query an equality oracle.
    #[default]
    Enumerate,
    /// Compute the true key's position in the list directly.
    Ranked,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub rate: f64,
    /// Binomial standard error of `rate`.
    pub stderr: f64,
    pub successes: u64,
    pub trials: u64,
}

impl MonteCarloEstimate {
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        let rate = successes as f64 / trials as f64;
        Self {
            rate,
            stderr: (rate * (1.0 - rate) / trials as f64).sqrt(),
            successes,
            trials,
        }
    }
}

/// One simulated round plus attack: fresh key from the key substream, the
/// channel snapshot at `trial`, full protocol, then m-MDLG against Eve's `z`.
pub fn simulate_attack_trial(
    channel: &ChannelSampler,
    mapping: KeyPhaseMapping,
    budget: AttackBudget,
    seed: u64,
    trial: u64,
    route: AttackRoute,
) -> Result<crate::attack::AttackReport> {
    let l = channel.config().num_subcarriers;
    let mut key_rng = substream(seed, Stream::Key, trial);
    let key = SecretKey::random(l * mapping.bits_per_subkey() as usize, &mut key_rng)?;
    let (_, z) = run_authentication_round(channel, &key, mapping, &ProtocolConfig::default(), seed, trial)?;
    match route {
        AttackRoute::Enumerate => run_m_mdlg(&z, mapping, &mut EqualityOracle::new(key), budget),
        AttackRoute::Ranked => run_m_mdlg_ranked(&z, mapping, &key, budget),
    }
}

/// Empirical attack success over `trials` independent rounds. Trials run in
/// parallel; the result depends only on `seed` and the channel config.
pub fn monte_carlo_success(
    channel: &ChannelSampler,
    mapping: KeyPhaseMapping,
    budget: AttackBudget,
    trials: u64,
    seed: u64,
    route: AttackRoute,
) -> Result<MonteCarloEstimate> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let successes = (0..trials)
        .into_par_iter()
        .map(|t| simulate_attack_trial(channel, mapping, budget, seed, t, route).map(|r| r.success as u64))
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(MonteCarloEstimate::from_counts(successes, trials))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack::CandidateEnumerator;
    use crate::channel::{ChannelModelConfig, ChannelModelKind};
    use crate::keyphase::DifferentialBitSeq;
    use proptest::prelude::*;

    fn q(l: usize, rho: f64, n: u64) -> AnalyticQuery {
        AnalyticQuery::binary(l, rho, n).unwrap()
    }

    #[test]
    fn n_max_examples() {
        assert_eq!(n_max_binary(5, 10), 1);
        assert_eq!(n_max_binary(5, 21), 1);
        assert_eq!(n_max_binary(5, 22), 2);
        assert_eq!(n_max_binary(56, 2), 0);
        assert_eq!(n_max_binary(56, 1), -1);
        assert_eq!(n_max_binary(4, 16), 3);
        assert_eq!(n_max_binary(4, u64::MAX), 3);
        assert_eq!(n_max_m_ary(4, 2, 4).unwrap(), 0);
        assert_eq!(n_max_m_ary(4, 2, 15).unwrap(), 0);
        assert_eq!(n_max_m_ary(4, 2, 16).unwrap(), 1);
        assert!(n_max_m_ary(5, 2, 16).is_err());
    }

    #[test]
    fn p_mdlg_examples() {
        for n in [2, 10, 1000, u64::MAX] {
            assert_eq!(p_mdlg(&q(56, 1.0, n)).unwrap().value, 1.0);
        }
        let p = p_mdlg(&q(5, 0.6, 10)).unwrap();
        assert!((p.value - 0.8192).abs() < 1e-12, "{}", p.value);
        assert_eq!(p_mdlg(&q(5, 0.6, 1)).unwrap(), SuccessProbability::zero());

        let m2 = AnalyticQuery::m_ary(4, 2, 1.0, 4).unwrap();
        assert!((p_m_mdlg(&m2).unwrap().value - 0.5).abs() < 1e-15);
        assert!(p_mdlg(&m2).is_err());
    }

    #[test]
    fn rho_zero_at_complete_levels_is_random_guessing() {
        for n_max in 0..6 {
            let n = complete_level_budget(55, 2, n_max) as u64;
            let p = p_mdlg(&q(56, 0.0, n)).unwrap();
            let g = random_guess_baseline(56, n).unwrap();
            assert!(((p.log10 - g.log10) / g.log10).abs() < 1e-12);
        }
    }

    #[test]
    fn random_guess_examples() {
        assert_eq!(random_guess_baseline(4, 16).unwrap().value, 1.0);
        assert!((random_guess_baseline(8, 1).unwrap().value - 1.0 / 256.0).abs() < 1e-18);
        let g = random_guess_baseline(56, 1000).unwrap();
        assert!((g.value - 1000.0 / 2f64.powi(56)).abs() / g.value < 1e-12);
        assert!(random_guess_baseline(4, 17).is_err());
        assert!(random_guess_baseline(200, u64::MAX).unwrap().log10 < -40.0);
    }

    #[test]
    fn incomplete_beta_examples() {
        for x in [0.0, 0.3, 1.0] {
            assert!((regularized_incomplete_beta(x, 1.0, 1.0).unwrap() - x).abs() < 1e-14);
        }
        for a in [1.0, 2.0, 5.0] {
            assert!((regularized_incomplete_beta(0.5, a, a).unwrap() - 0.5).abs() < 1e-14);
        }
        assert!(regularized_incomplete_beta(1.2, 1.0, 1.0).is_err());
        assert!(regularized_incomplete_beta(0.5, 0.0, 1.0).is_err());
        assert!(regularized_incomplete_beta(0.5, 1.0, f64::NAN).is_err());
    }

    /// Exact binomial CDF from rational arithmetic on p = num/den.
    fn exact_cdf(n: u32, k0: u32, num: u128, den: u128) -> f64 {
        let mut total: u128 = 0;
        for k in 0..=k0 {
            total += binomial(n as u64, k as u64) * num.pow(k) * (den - num).pow(n - k);
        }
        total as f64 / (den.pow(n)) as f64
    }

    #[test]
    fn binomial_cdf_identity_against_exact_sums() {
        let n = 20u32;
        for num in 1..20u128 {
            let p = num as f64 / 20.0;
            for k0 in 0..n {
                let exact = exact_cdf(n, k0, num, 20);
                let beta = regularized_incomplete_beta(1.0 - p, (n - k0) as f64, k0 as f64 + 1.0).unwrap();
                assert!((exact - beta).abs() < 1e-12, "p={p} k0={k0}: {exact} vs {beta}");
            }
        }
    }

    #[test]
    fn incomplete_beta_agrees_with_statrs() {
        for &(x, a, b) in &[(0.1, 0.5, 3.0), (0.7, 12.0, 40.0), (0.99, 2.0, 0.3), (0.25, 55.0, 1.0)] {
            let ours = regularized_incomplete_beta(x, a, b).unwrap();
            let theirs = statrs::function::beta::beta_reg(a, b, x);
            assert!((ours - theirs).abs() < 1e-12, "{x} {a} {b}");
        }
    }

    #[test]
    fn printed_beta_argument_does_not_match_the_sum() {
        // I_{P_b}(...) instead of I_{1-P_b}(...)
        let query = q(16, 0.5, 100);
        let k = 15.0;
        let n_max = query.n_max() as f64;
        let printed = regularized_incomplete_beta(query.symbol_error_probability(), k - n_max, n_max + 1.0).unwrap();
        let sum = p_mdlg(&query).unwrap().value;
        assert!((printed - sum).abs() > 0.5 * sum, "{printed} vs {sum}");
        assert!((p_m_mdlg_beta_form(&query).unwrap() - sum).abs() < 1e-12);
    }

    /// Weights each flip pattern of the reference by its probability and asks
    /// the real enumerator whether the key is reached within the budget.
    fn exhaustive_oracle(query: &AnalyticQuery) -> f64 {
        let k = query.l - 1;
        let mapping = KeyPhaseMapping::binary();
        let key = SecretKey::new(vec![0; query.l]).unwrap();
        let p = query.symbol_error_probability();
        let mut total = 0.0;
        for pattern in 0u32..1 << k {
            let flips: Vec<u8> = (0..k).map(|i| ((pattern >> i) & 1) as u8).collect();
            let reference = DifferentialBitSeq::binary(&flips).unwrap();
            let found = CandidateEnumerator::new(&reference, mapping, AttackBudget::new(query.n).unwrap())
                .unwrap()
                .any(|c| c == key);
            if found {
                let w = pattern.count_ones() as i32;
                total += p.powi(w) * (1.0 - p).powi(k as i32 - w);
            }
        }
        total
    }

    #[test]
    fn p_mdlg_matches_exhaustive_oracle() {
        for l in [3, 5, 7] {
            for rho in [0.0, 0.3, 0.6, 1.0] {
                for n_max in 0..l as i64 - 1 {
                    let n = complete_level_budget(l - 1, 2, n_max) as u64;
                    let query = q(l, rho, n);
                    let p = p_mdlg(&query).unwrap().value;
                    assert!((p - exhaustive_oracle(&query)).abs() < 1e-12, "L={l} rho={rho} N={n}");
                }
            }
        }
    }

    #[test]
    fn monte_carlo_trivial_cases() {
        let cfg = ChannelModelConfig::new(ChannelModelKind::BernoulliDifferential, 1.0, 12, 5).unwrap();
        let ch = ChannelSampler::new(cfg, None).unwrap();
        let budget = AttackBudget::new(2).unwrap();
        let est = monte_carlo_success(&ch, KeyPhaseMapping::binary(), budget, 200, 5, AttackRoute::Enumerate).unwrap();
        assert_eq!(est.rate, 1.0);

        let cfg = ChannelModelConfig::new(ChannelModelKind::BernoulliDifferential, 0.2, 10, 6).unwrap();
        let ch = ChannelSampler::new(cfg, None).unwrap();
        let budget = AttackBudget::new(1 << 10).unwrap();
        let est = monte_carlo_success(&ch, KeyPhaseMapping::binary(), budget, 200, 6, AttackRoute::Enumerate).unwrap();
        assert_eq!(est.rate, 1.0);
        assert!(monte_carlo_success(&ch, KeyPhaseMapping::binary(), budget, 0, 6, AttackRoute::Enumerate).is_err());
    }

    #[test]
    fn monte_carlo_matches_analytic_and_routes_agree() {
        let (l, rho) = (16, 0.7);
        let n = complete_level_budget(l - 1, 2, 2) as u64;
        let cfg = ChannelModelConfig::new(ChannelModelKind::BernoulliDifferential, rho, l, 11).unwrap();
        let ch = ChannelSampler::new(cfg, None).unwrap();
        let budget = AttackBudget::new(n).unwrap();
        let a = monte_carlo_success(&ch, KeyPhaseMapping::binary(), budget, 4000, 11, AttackRoute::Enumerate).unwrap();
        let b = monte_carlo_success(&ch, KeyPhaseMapping::binary(), budget, 4000, 11, AttackRoute::Ranked).unwrap();
        assert_eq!(a, b);
        let p = p_mdlg(&q(l, rho, n)).unwrap().value;
        let se = (p * (1.0 - p) / 4000.0).sqrt();
        assert!((a.rate - p).abs() < 3.0 * se, "{} vs {p}", a.rate);
    }

    /// Draws m-ary reference sequences directly: each symbol is correct with
    /// probability (1+ρ)/2^m, otherwise one of the other symbols uniformly.
    #[test]
    fn m_ary_formula_matches_direct_symbol_simulation() {
        use rand::Rng;
        let mapping = KeyPhaseMapping::new(2).unwrap();
        let query = AnalyticQuery::m_ary(12, 2, 0.6, 4 + 4 * 5 * 3).unwrap();
        assert_eq!(query.n_max(), 1);
        let pe = query.symbol_error_probability();
        let key = SecretKey::new(vec![0; 12]).unwrap();
        let mut rng = substream(3, Stream::Test, 0);
        let trials = 20_000;
        let mut hits = 0;
        for _ in 0..trials {
            let symbols: Vec<u32> = (0..5)
                .map(|_| {
                    if rng.random::<f64>() < pe {
                        rng.random_range(1..4)
                    } else {
                        0
                    }
                })
                .collect();
            let reference = DifferentialBitSeq::m_ary(symbols, mapping).unwrap();
            let budget = AttackBudget::new(query.n).unwrap();
            if CandidateEnumerator::new(&reference, mapping, budget)
                .unwrap()
                .any(|c| c == key)
            {
                hits += 1;
            }
        }
        let p = p_m_mdlg(&query).unwrap().value;
        let rate = hits as f64 / trials as f64;
        assert!(
            (rate - p).abs() < 3.0 * (p * (1.0 - p) / trials as f64).sqrt(),
            "{rate} vs {p}"
        );
    }

    proptest! {
        #[test]
        fn m_one_reduces_to_binary(l in 2usize..80, rho in 0.0f64..=1.0, n in 1u64..u64::MAX) {
            let a = p_mdlg(&q(l, rho, n)).unwrap();
            let b = p_m_mdlg(&AnalyticQuery::m_ary(l, 1, rho, n).unwrap()).unwrap();
            prop_assert!((a.value - b.value).abs() <= 1e-12);
        }

        #[test]
        fn monotone_in_rho_and_budget(l in 2usize..64, r1 in 0.0f64..=1.0, r2 in 0.0f64..=1.0, n1 in 2u64..1_000_000, n2 in 2u64..1_000_000) {
            let (rl, rh) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            let (nl, nh) = if n1 <= n2 { (n1, n2) } else { (n2, n1) };
            prop_assert!(p_mdlg(&q(l, rl, nl)).unwrap().value <= p_mdlg(&q(l, rh, nl)).unwrap().value + 1e-12);
            prop_assert!(p_mdlg(&q(l, rl, nl)).unwrap().value <= p_mdlg(&q(l, rl, nh)).unwrap().value + 1e-12);
        }

        #[test]
        fn sum_equals_beta_form(l in 2usize..64, m in 1u32..=3, rho in 0.0f64..=1.0, n in 1u64..10_000_000) {
            let query = AnalyticQuery::m_ary(l * m as usize, m, rho, n).unwrap();
            let sum = p_m_mdlg(&query).unwrap().value;
            prop_assert!((sum - p_m_mdlg_beta_form(&query).unwrap()).abs() <= 1e-10);
            prop_assert!((0.0..=1.0).contains(&sum));
        }
    }
}
