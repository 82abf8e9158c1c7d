//! Keys, key-to-phase mappings and the phase arithmetic every other module
//! builds on.
//!
//! All phases live on the half-open interval (-π, π]. The upper-closed
//! convention matches the binary quantizer: a differential of exactly π/2
//! quantizes to 0 and one of exactly -π/2 quantizes to 1.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{check_len, Error, Result};

/// Wraps an angle into (-π, π].
pub fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Shortest angular distance between two phases, in [0, π].
pub fn angular_distance(a: f64, b: f64) -> f64 {
    wrap_phase(a - b).abs()
}

/// The pre-shared key as a sequence of bits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SecretKey {
    bits: Vec<u8>,
}

impl SecretKey {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::InvalidKey("key must contain at least one bit".into()));
        }
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(Error::InvalidKey(format!(
                "element {pos} is {}, expected 0 or 1",
                bits[pos]
            )));
        }
        Ok(Self { bits })
    }

    pub(crate) fn from_bits_unchecked(bits: Vec<u8>) -> Self {
        debug_assert!(!bits.is_empty() && bits.iter().all(|&b| b <= 1));
        Self { bits }
    }

    /// Uniformly random key of `len` bits.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidKey("key must contain at least one bit".into()));
        }
        Ok(Self {
            bits: (0..len).map(|_| rng.random::<bool>() as u8).collect(),
        })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Copy of this key with bit `index` inverted.
    pub fn with_flipped(&self, index: usize) -> Self {
        let mut bits = self.bits.clone();
        bits[index] ^= 1;
        Self { bits }
    }
}

impl fmt::Display for SecretKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl FromStr for SecretKey {
    type Err = Error;

    /// Accepts `1101` or `1,1,0,1`.
    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .filter(|c| !c.is_whitespace() && *c != ',')
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::InvalidKey(format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::new(bits)
    }
}

pub const MAX_BITS_PER_SUBKEY: u32 = 16;

/// Bijection between m-bit sub-keys and the 2^m phases `k * 2π / 2^m`.
///
/// Sub-key value `k` (natural binary, most significant bit first) maps to
/// grid index `k`; the phase is wrapped into (-π, π].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct KeyPhaseMapping {
    bits_per_subkey: u32,
}

impl KeyPhaseMapping {
    pub fn new(bits_per_subkey: u32) -> Result<Self> {
        if bits_per_subkey == 0 || bits_per_subkey > MAX_BITS_PER_SUBKEY {
            return Err(Error::InvalidParameter(format!(
                "bits per sub-key must be in 1..={MAX_BITS_PER_SUBKEY}, got {bits_per_subkey}"
            )));
        }
        Ok(Self { bits_per_subkey })
    }

    /// The 0 -> 0, 1 -> π mapping.
    pub fn binary() -> Self {
        Self { bits_per_subkey: 1 }
    }

    pub fn bits_per_subkey(&self) -> u32 {
        self.bits_per_subkey
    }

    pub fn is_binary(&self) -> bool {
        self.bits_per_subkey == 1
    }

    /// 2^m.
    pub fn alphabet_size(&self) -> u32 {
        1 << self.bits_per_subkey
    }

    /// Grid spacing 2π / 2^m.
    pub fn step(&self) -> f64 {
        TAU / self.alphabet_size() as f64
    }

    /// Phase of grid index `index` (taken modulo 2^m).
    pub fn phase_of(&self, index: u32) -> f64 {
        let v = (index % self.alphabet_size()) as f64 * self.step();
        if v > PI {
            v - TAU
        } else {
            v
        }
    }

    /// Grid index of the cell containing `phase`. Cells are upper-closed,
    /// `(g - step/2, g + step/2]`, consistent with the binary quantizer.
    pub fn grid_index(&self, phase: f64) -> u32 {
        let t = wrap_phase(phase) / self.step();
        let k = (t - 0.5).ceil() as i64;
        k.rem_euclid(self.alphabet_size() as i64) as u32
    }

    pub fn phase_alphabet(&self) -> Vec<f64> {
        (0..self.alphabet_size()).map(|k| self.phase_of(k)).collect()
    }

    /// Number of sub-keys for a key of `key_bits` bits.
    pub fn subkey_count(&self, key_bits: usize) -> Result<usize> {
        let m = self.bits_per_subkey as usize;
        if key_bits == 0 || !key_bits.is_multiple_of(m) {
            return Err(Error::KeyLength {
                len: key_bits,
                bits_per_subkey: self.bits_per_subkey,
            });
        }
        Ok(key_bits / m)
    }

    /// Splits a key into sub-key values.
    pub fn subkey_values(&self, key: &SecretKey) -> Result<Vec<u32>> {
        self.subkey_count(key.len())?;
        Ok(key
            .bits()
            .chunks(self.bits_per_subkey as usize)
            .map(|chunk| chunk.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32))
            .collect())
    }

    /// Inverse of [`subkey_values`](Self::subkey_values).
    pub fn key_from_subkeys(&self, values: &[u32]) -> SecretKey {
        let m = self.bits_per_subkey;
        let mut bits = Vec::with_capacity(values.len() * m as usize);
        for &v in values {
            for shift in (0..m).rev() {
                bits.push(((v >> shift) & 1) as u8);
            }
        }
        SecretKey::from_bits_unchecked(bits)
    }
}

impl Default for KeyPhaseMapping {
    fn default() -> Self {
        Self::binary()
    }
}

/// A sequence of phases, each wrapped into (-π, π].
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector(Vec<f64>);

impl PhaseVector {
    /// Wraps every element; NaN and infinities are rejected.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinitePhase);
        }
        Ok(Self(values.into_iter().map(wrap_phase).collect()))
    }

    pub(crate) fn from_wrapped(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Adds a constant to every element (re-wrapped).
    pub fn rotated(&self, offset: f64) -> Self {
        Self(self.0.iter().map(|&v| wrap_phase(v + offset)).collect())
    }
}

/// Per-subcarrier channel response `a_l * exp(j θ_l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSnapshot {
    amplitudes: Vec<f64>,
    phases: Vec<f64>,
}

impl ChannelSnapshot {
    pub fn new(amplitudes: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        check_len(amplitudes.len(), phases.len())?;
        if amplitudes.is_empty() {
            return Err(Error::TooShort { min: 1, len: 0 });
        }
        if let Some(a) = amplitudes.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::Degenerate(format!(
                "amplitudes must be finite and strictly positive, found {a}"
            )));
        }
        let phases = PhaseVector::new(phases)?.into_inner();
        Ok(Self { amplitudes, phases })
    }

    /// Builds a snapshot from complex gains given as (re, im) pairs.
    pub fn from_gains(gains: &[(f64, f64)]) -> Result<Self> {
        let amplitudes = gains.iter().map(|(re, im)| re.hypot(*im)).collect();
        let phases = gains.iter().map(|(re, im)| im.atan2(*re)).collect();
        Self::new(amplitudes, phases)
    }

    pub fn num_subcarriers(&self) -> usize {
        self.phases.len()
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn phase_vector(&self) -> PhaseVector {
        PhaseVector::from_wrapped(self.phases.clone())
    }

    /// Complex gain of subcarrier `l` as (re, im).
    pub fn gain(&self, l: usize) -> (f64, f64) {
        let (s, c) = self.phases[l].sin_cos();
        (self.amplitudes[l] * c, self.amplitudes[l] * s)
    }
}

/// Quantized differential sequence. For the binary mapping the symbols are
/// bits; for a 2^m-ary mapping they are grid indices in `0..2^m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DifferentialBitSeq {
    symbols: Vec<u32>,
    alphabet_size: u32,
}

impl DifferentialBitSeq {
    pub fn binary(bits: &[u8]) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidParameter("differential bits must be 0 or 1".into()));
        }
        Ok(Self {
            symbols: bits.iter().map(|&b| b as u32).collect(),
            alphabet_size: 2,
        })
    }

    pub fn m_ary(symbols: Vec<u32>, mapping: KeyPhaseMapping) -> Result<Self> {
        let q = mapping.alphabet_size();
        if symbols.iter().any(|&s| s >= q) {
            return Err(Error::InvalidParameter(format!(
                "differential symbols must be below {q}"
            )));
        }
        Ok(Self {
            symbols,
            alphabet_size: q,
        })
    }

    pub fn symbols(&self) -> &[u32] {
        &self.symbols
    }

    pub fn alphabet_size(&self) -> u32 {
        self.alphabet_size
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Bits of a binary sequence; `None` for larger alphabets.
    pub fn to_bits(&self) -> Option<Vec<u8>> {
        (self.alphabet_size == 2).then(|| self.symbols.iter().map(|&s| s as u8).collect())
    }

    /// Number of positions where two sequences differ.
    pub fn hamming_distance(&self, other: &Self) -> Result<usize> {
        check_len(self.len(), other.len())?;
        Ok(self.symbols.iter().zip(&other.symbols).filter(|(a, b)| a != b).count())
    }
}

/// `phi_l = M(s_l)` for every sub-key.
pub fn map_key_to_phases(key: &SecretKey, mapping: KeyPhaseMapping) -> Result<PhaseVector> {
    let values = mapping.subkey_values(key)?;
    Ok(PhaseVector::from_wrapped(
        values.into_iter().map(|v| mapping.phase_of(v)).collect(),
    ))
}

/// Snaps each phase to its nearest alphabet point and inverts the mapping.
pub fn inverse_map(phases: &PhaseVector, mapping: KeyPhaseMapping) -> Result<SecretKey> {
    if phases.is_empty() {
        return Err(Error::TooShort { min: 1, len: 0 });
    }
    let values: Vec<u32> = phases.as_slice().iter().map(|&p| mapping.grid_index(p)).collect();
    Ok(mapping.key_from_subkeys(&values))
}

/// `wrap(x[l+1] - x[l])` for every adjacent pair.
pub fn differential_sequence(x: &PhaseVector) -> Result<PhaseVector> {
    if x.len() < 2 {
        return Err(Error::TooShort { min: 2, len: x.len() });
    }
    Ok(PhaseVector::from_wrapped(
        x.as_slice().windows(2).map(|w| wrap_phase(w[1] - w[0])).collect(),
    ))
}

/// Bit 0 on (-π/2, π/2], bit 1 on (-π, -π/2] ∪ (π/2, π].
pub fn quantize_phase(delta: f64) -> u8 {
    let d = wrap_phase(delta);
    if d > -FRAC_PI_2 && d <= FRAC_PI_2 {
        0
    } else {
        1
    }
}

pub fn quantize_binary(delta: &PhaseVector) -> DifferentialBitSeq {
    DifferentialBitSeq {
        symbols: delta.as_slice().iter().map(|&d| quantize_phase(d) as u32).collect(),
        alphabet_size: 2,
    }
}

/// Replaces each element with its nearest multiple of 2π / 2^m.
pub fn snap_to_grid(delta: &PhaseVector, mapping: KeyPhaseMapping) -> PhaseVector {
    PhaseVector::from_wrapped(
        delta
            .as_slice()
            .iter()
            .map(|&d| mapping.phase_of(mapping.grid_index(d)))
            .collect(),
    )
}

/// Grid indices of [`snap_to_grid`]; equals [`quantize_binary`] when m = 1.
pub fn grid_symbols(delta: &PhaseVector, mapping: KeyPhaseMapping) -> DifferentialBitSeq {
    DifferentialBitSeq {
        symbols: delta.as_slice().iter().map(|&d| mapping.grid_index(d)).collect(),
        alphabet_size: mapping.alphabet_size(),
    }
}
