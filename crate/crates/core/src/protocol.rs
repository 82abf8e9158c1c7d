//! The four-step challenge-response exchange between Alice and Bob, and the
//! phase vector an eavesdropper with perfect knowledge of her own channels
//! extracts from it.

use std::f64::consts::PI;

use rand::Rng;

use crate::channel::{sample_rayleigh, uniform_phase, ChannelSampler};
use crate::error::{check_len, Error, Result};
use crate::keyphase::{
    angular_distance, map_key_to_phases, wrap_phase, ChannelSnapshot, KeyPhaseMapping, PhaseVector, SecretKey,
};
use crate::rng::{substream, Stream};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Alice's random transmit phases β_l.
#[derive(Debug, Clone, PartialEq)]
pub struct Challenge {
    beta: PhaseVector,
}

impl Challenge {
    pub fn new(beta: PhaseVector) -> Result<Self> {
        if beta.len() < 2 {
            return Err(Error::TooShort {
                min: 2,
                len: beta.len(),
            });
        }
        Ok(Self { beta })
    }

    pub fn beta(&self) -> &PhaseVector {
        &self.beta
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    /// The transmitted unit-amplitude signal `exp(j β_l)`.
    pub fn signal(&self) -> FrequencySignal {
        FrequencySignal {
            amplitudes: vec![1.0; self.beta.len()],
            phases: self.beta.as_slice().to_vec(),
        }
    }
}

/// Per-subcarrier amplitude and phase of a transmitted or received signal.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySignal {
    amplitudes: Vec<f64>,
    phases: Vec<f64>,
}

impl FrequencySignal {
    pub fn new(amplitudes: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        check_len(amplitudes.len(), phases.len())?;
        if amplitudes.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::InvalidParameter(
                "signal amplitudes must be finite and non-negative".into(),
            ));
        }
        let phases = PhaseVector::new(phases)?.into_inner();
        Ok(Self { amplitudes, phases })
    }

    /// Unit amplitude on every subcarrier with the given phases.
    pub fn unit(phases: &PhaseVector) -> Self {
        Self {
            amplitudes: vec![1.0; phases.len()],
            phases: phases.as_slice().to_vec(),
        }
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    fn add_phase_noise<R: Rng + ?Sized>(&mut self, kappa: f64, rng: &mut R) {
        for p in &mut self.phases {
            *p = wrap_phase(*p + sample_von_mises(kappa, rng));
        }
    }
}

/// Eve's best phase information, `z_l = φ_l - θ_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct EveObservation {
    z: PhaseVector,
}

impl EveObservation {
    pub fn new(z: PhaseVector) -> Self {
        Self { z }
    }

    pub fn z(&self) -> &PhaseVector {
        &self.z
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }
}

pub fn make_challenge<R: Rng + ?Sized>(num_subcarriers: usize, rng: &mut R) -> Result<Challenge> {
    if num_subcarriers < 2 {
        return Err(Error::TooShort {
            min: 2,
            len: num_subcarriers,
        });
    }
    let beta = (0..num_subcarriers).map(|_| uniform_phase(rng)).collect();
    Challenge::new(PhaseVector::from_wrapped(beta))
}

/// Noise-free pass through a channel: amplitudes multiply, phases add.
pub fn propagate(signal: &FrequencySignal, channel: &ChannelSnapshot) -> Result<FrequencySignal> {
    check_len(signal.len(), channel.num_subcarriers())?;
    Ok(FrequencySignal {
        amplitudes: signal
            .amplitudes
            .iter()
            .zip(channel.amplitudes())
            .map(|(a, h)| a * h)
            .collect(),
        phases: signal
            .phases
            .iter()
            .zip(channel.phases())
            .map(|(p, t)| wrap_phase(p + t))
            .collect(),
    })
}

/// Bob negates the received phases and adds the key-mapped phases.
pub fn bob_response(received: &FrequencySignal, key: &SecretKey, mapping: KeyPhaseMapping) -> Result<FrequencySignal> {
    let phi = map_key_to_phases(key, mapping)?;
    check_len(received.len(), phi.len())?;
    Ok(FrequencySignal {
        amplitudes: received.amplitudes.clone(),
        phases: phi
            .as_slice()
            .iter()
            .zip(&received.phases)
            .map(|(f, r)| wrap_phase(f - r))
            .collect(),
    })
}

/// Accepts iff every received phase is within `tol` of `φ_l - β_l`. Any
/// single mismatching subcarrier rejects.
pub fn alice_verify(
    received: &FrequencySignal,
    challenge: &Challenge,
    key: &SecretKey,
    mapping: KeyPhaseMapping,
    tol: f64,
) -> Result<bool> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if tol >= PI {
        log::warn!("verification tolerance {tol} >= π accepts every response");
    }
    let phi = map_key_to_phases(key, mapping)?;
    check_len(challenge.len(), phi.len())?;
    check_len(challenge.len(), received.len())?;
    Ok(received
        .phases
        .iter()
        .zip(phi.as_slice())
        .zip(challenge.beta.as_slice())
        .all(|((r, f), b)| angular_distance(*r, f - b) <= tol))
}

/// Recovers β from the challenge Eve overheard (removing θ'), then strips
/// θ'' and -β from the overheard response, leaving `φ_l - θ_l`.
pub fn eve_observe(
    challenge_at_eve: &FrequencySignal,
    response_at_eve: &FrequencySignal,
    h_prime: &ChannelSnapshot,
    h_double_prime: &ChannelSnapshot,
) -> Result<EveObservation> {
    let l = challenge_at_eve.len();
    check_len(l, response_at_eve.len())?;
    check_len(l, h_prime.num_subcarriers())?;
    check_len(l, h_double_prime.num_subcarriers())?;
    let z = (0..l)
        .map(|i| {
            let beta = challenge_at_eve.phases[i] - h_prime.phases()[i];
            wrap_phase(response_at_eve.phases[i] - h_double_prime.phases()[i] + beta)
        })
        .collect();
    Ok(EveObservation::new(PhaseVector::from_wrapped(z)))
}

/// Von Mises draw with mean 0 and concentration `kappa` (Best-Fisher).
pub fn sample_von_mises<R: Rng + ?Sized>(kappa: f64, rng: &mut R) -> f64 {
    if kappa < 1e-8 {
        return uniform_phase(rng);
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let u3: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let theta = f.clamp(-1.0, 1.0).acos();
            return if u3 > 0.5 { theta } else { -theta };
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    pub tolerance: f64,
    /// Von Mises concentration of additive phase noise on every reception;
    /// `None` is the noise-free protocol.
    pub phase_noise_kappa: Option<f64>,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            phase_noise_kappa: None,
        }
    }
}

/// Everything observable in one round, for audit logs.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub round_id: u64,
    pub seed: u64,
    pub theta: Vec<f64>,
    pub beta: Vec<f64>,
    pub phi: Vec<f64>,
    pub z: Vec<f64>,
    /// Phases Alice received in the response.
    pub alice_received: Vec<f64>,
    pub verified: bool,
}

/// Runs one full round with fresh h (from the sampler, index `round_id`),
/// fresh challenge, and fresh Eve channels h', h''.
pub fn run_authentication_round(
    channel: &ChannelSampler,
    key: &SecretKey,
    mapping: KeyPhaseMapping,
    cfg: &ProtocolConfig,
    seed: u64,
    round_id: u64,
) -> Result<(Transcript, EveObservation)> {
    let h = channel.sample_indexed(round_id)?;
    let l = h.num_subcarriers();
    check_len(l, mapping.subkey_count(key.len())?)?;

    let mut proto_rng = substream(seed, Stream::Protocol, round_id);
    let mut eve_rng = substream(seed, Stream::Eve, round_id);
    let h_prime = sample_rayleigh(l, &mut eve_rng)?;
    let h_double_prime = sample_rayleigh(l, &mut eve_rng)?;

    let challenge = make_challenge(l, &mut proto_rng)?;
    let s_a = challenge.signal();
    let noisy = |mut s: FrequencySignal, rng: &mut crate::rng::SimRng| {
        if let Some(kappa) = cfg.phase_noise_kappa {
            s.add_phase_noise(kappa, rng);
        }
        s
    };

    let r_b = noisy(propagate(&s_a, &h)?, &mut proto_rng);
    let s_b = bob_response(&r_b, key, mapping)?;
    let r_a = noisy(propagate(&s_b, &h)?, &mut proto_rng);
    let verified = alice_verify(&r_a, &challenge, key, mapping, cfg.tolerance)?;

    let r_ae = noisy(propagate(&s_a, &h_prime)?, &mut eve_rng);
    let r_be = noisy(propagate(&s_b, &h_double_prime)?, &mut eve_rng);
    let obs = eve_observe(&r_ae, &r_be, &h_prime, &h_double_prime)?;

    let transcript = Transcript {
        round_id,
        seed,
        theta: h.phases().to_vec(),
        beta: challenge.beta().as_slice().to_vec(),
        phi: map_key_to_phases(key, mapping)?.into_inner(),
        z: obs.z().as_slice().to_vec(),
        alice_received: r_a.phases().to_vec(),
        verified,
    };
    Ok((transcript, obs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelModelConfig, ChannelModelKind};
    use proptest::prelude::*;

    fn snapshot(amps: &[f64], phases: &[f64]) -> ChannelSnapshot {
        ChannelSnapshot::new(amps.to_vec(), phases.to_vec()).unwrap()
    }

    fn key(bits: &[u8]) -> SecretKey {
        SecretKey::new(bits.to_vec()).unwrap()
    }

    #[test]
    fn challenge_is_reproducible_and_in_range() {
        let a = make_challenge(8, &mut substream(3, Stream::Protocol, 0)).unwrap();
        let b = make_challenge(8, &mut substream(3, Stream::Protocol, 0)).unwrap();
        assert_eq!(a, b);
        let c = make_challenge(2, &mut substream(3, Stream::Protocol, 1)).unwrap();
        assert_eq!(c.len(), 2);
        assert!(c.beta().as_slice().iter().all(|&p| p > -PI && p <= PI));
        assert!(make_challenge(1, &mut substream(3, Stream::Protocol, 1)).is_err());
    }

    #[test]
    fn challenge_phases_have_zero_mean_moment() {
        let mut rng = substream(17, Stream::Protocol, 0);
        let (mut re, mut im) = ([0.0; 4], [0.0; 4]);
        let n = 100_000;
        for _ in 0..n {
            let c = make_challenge(4, &mut rng).unwrap();
            for (l, b) in c.beta().as_slice().iter().enumerate() {
                re[l] += b.cos();
                im[l] += b.sin();
            }
        }
        for l in 0..4 {
            assert!((re[l] / n as f64).hypot(im[l] / n as f64) < 0.02);
        }
    }

    #[test]
    fn propagate_examples() {
        let h = snapshot(&[0.5, 2.0, 1.5], &[0.3, -2.0, PI]);
        let unit = FrequencySignal::unit(&PhaseVector::new(vec![0.0; 3]).unwrap());
        let out = propagate(&unit, &h).unwrap();
        assert_eq!(out.amplitudes(), h.amplitudes());
        assert_eq!(out.phases(), h.phases());

        let beta = PhaseVector::new(vec![1.0, 2.0, -3.0]).unwrap();
        let out = propagate(&FrequencySignal::unit(&beta), &h).unwrap();
        let twice = propagate(&out, &h).unwrap();
        for l in 0..3 {
            assert!(angular_distance(out.phases()[l], h.phases()[l] + beta.as_slice()[l]) < 1e-12);
            assert!(angular_distance(twice.phases()[l], 2.0 * h.phases()[l] + beta.as_slice()[l]) < 1e-12);
            assert!((twice.amplitudes()[l] - h.amplitudes()[l].powi(2)).abs() < 1e-12);
        }
        assert!(propagate(&unit, &snapshot(&[1.0; 2], &[0.0; 2])).is_err());
    }

    #[test]
    fn bob_response_examples() {
        let zero = FrequencySignal::unit(&PhaseVector::new(vec![0.0; 4]).unwrap());
        let m1 = KeyPhaseMapping::binary();
        let r = bob_response(&zero, &key(&[0, 0, 0, 0]), m1).unwrap();
        assert_eq!(r.phases(), &[0.0; 4]);
        let r = bob_response(&zero, &key(&[1, 1, 0, 1]), m1).unwrap();
        assert_eq!(r.phases(), &[PI, PI, 0.0, PI]);
        assert!(bob_response(&zero, &key(&[1, 1, 0]), m1).is_err());
    }

    #[test]
    fn one_bit_change_fails_and_huge_tolerance_passes() {
        let m1 = KeyPhaseMapping::binary();
        let k = key(&[1, 0, 1, 1, 0, 0]);
        let mut rng = substream(5, Stream::Protocol, 0);
        let challenge = make_challenge(6, &mut rng).unwrap();
        let h = sample_rayleigh(6, &mut rng).unwrap();
        let r_b = propagate(&challenge.signal(), &h).unwrap();
        let forged = bob_response(&r_b, &k.with_flipped(3), m1).unwrap();
        let r_a = propagate(&forged, &h).unwrap();
        assert!(!alice_verify(&r_a, &challenge, &k, m1, 1e-9).unwrap());
        assert!(alice_verify(&r_a, &challenge, &k, m1, PI).unwrap());
        assert!(alice_verify(&r_a, &challenge, &k, m1, 0.0).is_err());
    }

    #[test]
    fn eve_observe_examples() {
        let m1 = KeyPhaseMapping::binary();
        // all-zero key over an all-zero-phase channel
        let h = snapshot(&[1.0; 4], &[0.0; 4]);
        let hp = snapshot(&[0.7; 4], &[0.1, 0.2, 0.3, 0.4]);
        let hpp = snapshot(&[1.3; 4], &[-1.0, 2.0, 3.0, -0.5]);
        let challenge = Challenge::new(PhaseVector::new(vec![0.4, -2.0, 1.0, 3.0]).unwrap()).unwrap();
        let s_b = bob_response(&propagate(&challenge.signal(), &h).unwrap(), &key(&[0; 4]), m1).unwrap();
        let obs = eve_observe(
            &propagate(&challenge.signal(), &hp).unwrap(),
            &propagate(&s_b, &hpp).unwrap(),
            &hp,
            &hpp,
        )
        .unwrap();
        assert!(obs.z().as_slice().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn flat_channel_observation_preserves_key_differentials() {
        use crate::keyphase::differential_sequence;
        let m1 = KeyPhaseMapping::binary();
        let sampler = ChannelSampler::new(
            ChannelModelConfig::new(ChannelModelKind::FlatFading, 1.0, 10, 4).unwrap(),
            None,
        )
        .unwrap();
        let k = key(&[1, 0, 0, 1, 1, 1, 0, 1, 0, 0]);
        let (t, obs) = run_authentication_round(&sampler, &k, m1, &ProtocolConfig::default(), 4, 0).unwrap();
        let dz = differential_sequence(obs.z()).unwrap();
        let dphi = differential_sequence(&PhaseVector::new(t.phi).unwrap()).unwrap();
        for (a, b) in dz.as_slice().iter().zip(dphi.as_slice()) {
            assert!(angular_distance(*a, *b) < 1e-12);
        }
    }

    #[test]
    fn rounds_are_reproducible() {
        let sampler = ChannelSampler::new(
            ChannelModelConfig::new(ChannelModelKind::Ar1ComplexGaussian, 0.5, 8, 21).unwrap(),
            None,
        )
        .unwrap();
        let k = key(&[1, 0, 1, 1, 0, 0, 1, 0]);
        for round in 0..3 {
            let a = run_authentication_round(
                &sampler,
                &k,
                KeyPhaseMapping::binary(),
                &ProtocolConfig::default(),
                21,
                round,
            )
            .unwrap();
            let b = run_authentication_round(
                &sampler,
                &k,
                KeyPhaseMapping::binary(),
                &ProtocolConfig::default(),
                21,
                round,
            )
            .unwrap();
            assert_eq!(a, b);
            assert!(a.0.verified);
        }
    }

    #[test]
    fn von_mises_mean_resultant_length() {
        // A(κ) = I1(κ)/I0(κ); A(2) = 0.697774657964...
        let mut rng = substream(9, Stream::Protocol, 0);
        let n = 200_000;
        let (mut c, mut s) = (0.0, 0.0);
        for _ in 0..n {
            let x = sample_von_mises(2.0, &mut rng);
            c += x.cos();
            s += x.sin();
        }
        assert!((c / n as f64 - 0.697_774_657_964).abs() < 0.005);
        assert!((s / n as f64).abs() < 0.005);
    }

    #[test]
    fn noisy_rounds_still_run() {
        let sampler = ChannelSampler::new(
            ChannelModelConfig::new(ChannelModelKind::BernoulliDifferential, 0.5, 8, 2).unwrap(),
            None,
        )
        .unwrap();
        let cfg = ProtocolConfig {
            tolerance: 0.5,
            phase_noise_kappa: Some(400.0),
        };
        let k = key(&[1, 0, 1, 1, 0, 0, 1, 0]);
        let (t, _) = run_authentication_round(&sampler, &k, KeyPhaseMapping::binary(), &cfg, 2, 0).unwrap();
        assert!(t.verified);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]
        #[test]
        fn completeness_and_eve_ground_truth(
            bits in proptest::collection::vec(0u8..=1, 2..40),
            rho in 0.0f64..=1.0,
            seed in any::<u64>(),
            kind in prop_oneof![
                Just(ChannelModelKind::BernoulliDifferential),
                Just(ChannelModelKind::Ar1ComplexGaussian),
                Just(ChannelModelKind::FlatFading),
            ],
        ) {
            let l = bits.len();
            let sampler = ChannelSampler::new(ChannelModelConfig::new(kind, rho, l, seed).unwrap(), None).unwrap();
            let k = SecretKey::new(bits).unwrap();
            let (t, obs) = run_authentication_round(&sampler, &k, KeyPhaseMapping::binary(), &ProtocolConfig::default(), seed, 0).unwrap();
            prop_assert!(t.verified);
            for i in 0..l {
                prop_assert!(angular_distance(obs.z().as_slice()[i] + t.theta[i], t.phi[i]) < 1e-9);
                prop_assert!(angular_distance(t.alice_received[i], t.phi[i] - t.beta[i]) < 1e-9);
            }
        }
    }
}
