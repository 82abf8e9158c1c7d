//! Maximum differential likelihood key recovery.
//!
//! Eve quantizes the adjacent differences of her observation `z` into a
//! reference sequence, then walks candidate differential sequences in
//! increasing Hamming distance from it. Every differential candidate expands
//! into one key per possible first sub-key; each key is checked against the
//! oracle until it accepts or the budget runs out.
//!
//! Enumeration order, fixed for reproducibility:
//!
//! 1. flip weight `n = 0, 1, 2, ...`
//! 2. position subsets of size `n` in lexicographic order
//! 3. replacement symbols for the changed positions, each ranging over the
//!    non-reference grid indices in ascending order, last position fastest
//! 4. first sub-key value `0 .. 2^m`
//!
//! With the binary mapping, step 3 is trivial and step 4 is "first bit 0,
//! then 1".

use crate::combinatorics::{binomial, cumulative_level_size, level_size, saturating_pow};
use crate::error::{check_len, Error, Result};
use crate::keyphase::{
    differential_sequence, grid_symbols, quantize_binary, DifferentialBitSeq, KeyPhaseMapping, SecretKey,
};
use crate::protocol::EveObservation;

/// Maximum number of key candidates Eve may verify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttackBudget(u64);

impl AttackBudget {
    pub fn new(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("attack budget must be at least 1".into()));
        }
        Ok(Self(n))
    }

    pub fn get(self) -> u64 {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackReport {
    pub success: bool,
    /// Oracle queries made.
    pub candidates_tried: u64,
    pub recovered_key: Option<SecretKey>,
    /// Flip-weight level of the last candidate tried.
    pub n_reached: usize,
}

/// Answers "is this the key?". In simulation this is equality with the true
/// key; in the protocol it is a verification attempt against Alice.
pub trait KeyOracle {
    fn verify(&mut self, candidate: &SecretKey) -> bool;
}

impl<F: FnMut(&SecretKey) -> bool> KeyOracle for F {
    fn verify(&mut self, candidate: &SecretKey) -> bool {
        self(candidate)
    }
}

#[derive(Debug, Clone)]
pub struct EqualityOracle {
    key: SecretKey,
}

impl EqualityOracle {
    pub fn new(key: SecretKey) -> Self {
        Self { key }
    }
}

impl KeyOracle for EqualityOracle {
    fn verify(&mut self, candidate: &SecretKey) -> bool {
        candidate.bits() == self.key.bits()
    }
}

/// `quantize_binary(differential_sequence(z))`.
pub fn derive_reference(z: &EveObservation) -> Result<DifferentialBitSeq> {
    Ok(quantize_binary(&differential_sequence(z.z())?))
}

/// Grid indices of `snap_to_grid(differential_sequence(z))`.
pub fn derive_m_ary_reference(z: &EveObservation, mapping: KeyPhaseMapping) -> Result<DifferentialBitSeq> {
    Ok(grid_symbols(&differential_sequence(z.z())?, mapping))
}

/// Rebuilds a key from a differential bit sequence and an assumed first bit:
/// the next bit repeats on 0 and flips on 1.
pub fn reconstruct_keys(b_phi_candidate: &DifferentialBitSeq, first_bit: u8) -> Result<SecretKey> {
    if b_phi_candidate.alphabet_size() != 2 {
        return Err(Error::InvalidParameter(
            "reconstruct_keys expects a binary differential sequence".into(),
        ));
    }
    if first_bit > 1 {
        return Err(Error::InvalidParameter("first bit must be 0 or 1".into()));
    }
    reconstruct_m_ary(b_phi_candidate, first_bit as u32, KeyPhaseMapping::binary())
}

/// m-ary reconstruction: sub-key grid indices are the running sum of the
/// differential symbols (mod 2^m) starting from `first_subkey`.
pub fn reconstruct_m_ary(
    differential: &DifferentialBitSeq,
    first_subkey: u32,
    mapping: KeyPhaseMapping,
) -> Result<SecretKey> {
    let q = mapping.alphabet_size();
    if differential.alphabet_size() != q || first_subkey >= q {
        return Err(Error::InvalidParameter(format!(
            "symbols and first sub-key must be below {q}"
        )));
    }
    let mut buf = Vec::new();
    write_key(differential.symbols(), first_subkey, mapping, &mut buf);
    Ok(SecretKey::from_bits_unchecked(buf))
}

fn write_key(symbols: &[u32], first: u32, mapping: KeyPhaseMapping, out: &mut Vec<u8>) {
    let q = mapping.alphabet_size();
    let m = mapping.bits_per_subkey();
    out.clear();
    let mut push = |v: u32| {
        for shift in (0..m).rev() {
            out.push(((v >> shift) & 1) as u8);
        }
    };
    let mut v = first;
    push(v);
    for &d in symbols {
        v = (v + d) % q;
        push(v);
    }
}

/// Lazily yields key candidates in likelihood order, stopping after the
/// budget.
#[derive(Debug, Clone)]
pub struct CandidateEnumerator {
    reference: Vec<u32>,
    mapping: KeyPhaseMapping,
    level: usize,
    subset: Vec<usize>,
    digits: Vec<u32>,
    first: u32,
    work: Vec<u32>,
    emitted: u64,
    budget: u64,
    exhausted: bool,
}

impl CandidateEnumerator {
    pub fn new(reference: &DifferentialBitSeq, mapping: KeyPhaseMapping, budget: AttackBudget) -> Result<Self> {
        if reference.alphabet_size() != mapping.alphabet_size() {
            return Err(Error::InvalidParameter(format!(
                "reference alphabet {} does not match mapping alphabet {}",
                reference.alphabet_size(),
                mapping.alphabet_size()
            )));
        }
        Ok(Self {
            reference: reference.symbols().to_vec(),
            mapping,
            level: 0,
            subset: Vec::new(),
            digits: Vec::new(),
            first: 0,
            work: reference.symbols().to_vec(),
            emitted: 0,
            budget: budget.get(),
            exhausted: false,
        })
    }

    /// Candidates yielded so far.
    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    /// Writes the next candidate key into `out` and returns its flip-weight
    /// level.
    pub fn next_into(&mut self, out: &mut Vec<u8>) -> Option<usize> {
        if self.exhausted || self.emitted >= self.budget {
            return None;
        }
        if self.first == 0 {
            self.load_differential();
        }
        write_key(&self.work, self.first, self.mapping, out);
        let level = self.level;
        self.emitted += 1;
        self.advance();
        Some(level)
    }

    fn load_differential(&mut self) {
        self.work.copy_from_slice(&self.reference);
        for (&pos, &digit) in self.subset.iter().zip(&self.digits) {
            let r = self.reference[pos];
            self.work[pos] = if digit < r { digit } else { digit + 1 };
        }
    }

    fn advance(&mut self) {
        let q = self.mapping.alphabet_size();
        self.first += 1;
        if self.first < q {
            return;
        }
        self.first = 0;

        // odometer over replacement symbols, last position fastest
        for i in (0..self.digits.len()).rev() {
            self.digits[i] += 1;
            if self.digits[i] < q - 1 {
                return;
            }
            self.digits[i] = 0;
        }

        if next_combination(&mut self.subset, self.reference.len()) {
            return;
        }
        self.level += 1;
        if self.level > self.reference.len() {
            self.exhausted = true;
            return;
        }
        self.subset = (0..self.level).collect();
        self.digits = vec![0; self.level];
    }
}

impl Iterator for CandidateEnumerator {
    type Item = SecretKey;

    fn next(&mut self) -> Option<SecretKey> {
        let mut buf = Vec::new();
        self.next_into(&mut buf)?;
        Some(SecretKey::from_bits_unchecked(buf))
    }
}

/// Advances `subset` to the next subset of `0..k` of the same size in
/// lexicographic order. Returns false after the last one.
fn next_combination(subset: &mut [usize], k: usize) -> bool {
    let n = subset.len();
    for i in (0..n).rev() {
        if subset[i] < k - n + i {
            subset[i] += 1;
            for j in i + 1..n {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Binary-mapping candidate sequence.
pub fn enumerate_candidates(reference: &DifferentialBitSeq, budget: AttackBudget) -> Result<CandidateEnumerator> {
    CandidateEnumerator::new(reference, KeyPhaseMapping::binary(), budget)
}

fn run_enumeration<O: KeyOracle + ?Sized>(mut enumerator: CandidateEnumerator, oracle: &mut O) -> AttackReport {
    let mut buf = Vec::new();
    let mut n_reached = 0;
    while let Some(level) = enumerator.next_into(&mut buf) {
        n_reached = level;
        let candidate = SecretKey::from_bits_unchecked(std::mem::take(&mut buf));
        if oracle.verify(&candidate) {
            return AttackReport {
                success: true,
                candidates_tried: enumerator.emitted(),
                recovered_key: Some(candidate),
                n_reached,
            };
        }
        buf = candidate.bits().to_vec();
    }
    AttackReport {
        success: false,
        candidates_tried: enumerator.emitted(),
        recovered_key: None,
        n_reached,
    }
}

/// MDLG against the binary mapping.
pub fn run_mdlg<O: KeyOracle + ?Sized>(
    z: &EveObservation,
    oracle: &mut O,
    budget: AttackBudget,
) -> Result<AttackReport> {
    let reference = derive_reference(z)?;
    Ok(run_enumeration(enumerate_candidates(&reference, budget)?, oracle))
}

/// m-MDLG: the reference is Δz snapped to the 2π/2^m grid.
pub fn run_m_mdlg<O: KeyOracle + ?Sized>(
    z: &EveObservation,
    mapping: KeyPhaseMapping,
    oracle: &mut O,
    budget: AttackBudget,
) -> Result<AttackReport> {
    let reference = derive_m_ary_reference(z, mapping)?;
    Ok(run_enumeration(
        CandidateEnumerator::new(&reference, mapping, budget)?,
        oracle,
    ))
}

/// Zero-based position at which `key` appears in the candidate sequence for
/// `reference`, computed combinatorially instead of by walking the sequence.
/// Saturates at `u128::MAX` for positions beyond any representable budget.
pub fn candidate_index(reference: &DifferentialBitSeq, mapping: KeyPhaseMapping, key: &SecretKey) -> Result<u128> {
    let q = mapping.alphabet_size();
    if reference.alphabet_size() != q {
        return Err(Error::InvalidParameter("reference/mapping alphabet mismatch".into()));
    }
    let values = mapping.subkey_values(key)?;
    check_len(reference.len() + 1, values.len())?;
    let k = reference.len();

    let mut changed = Vec::new();
    let mut odometer: u128 = 0;
    for (l, &r) in reference.symbols().iter().enumerate() {
        let d = (values[l + 1] + q - values[l]) % q;
        if d != r {
            changed.push(l);
            let digit = if d < r { d } else { d - 1 };
            odometer = odometer.saturating_mul((q - 1) as u128).saturating_add(digit as u128);
        }
    }
    let w = changed.len();

    let below = if w == 0 {
        0
    } else {
        cumulative_level_size(k as u64, w as u64 - 1, q)
    };

    // lexicographic rank of the changed-position subset
    let mut lex: u128 = 0;
    let mut prev: Option<usize> = None;
    for (i, &p) in changed.iter().enumerate() {
        let start = prev.map_or(0, |x| x + 1);
        for j in start..p {
            lex = lex.saturating_add(binomial((k - 1 - j) as u64, (w - 1 - i) as u64));
        }
        prev = Some(p);
    }

    let within = lex
        .saturating_mul(saturating_pow((q - 1) as u128, w as u32))
        .saturating_add(odometer)
        .saturating_mul(q as u128)
        .saturating_add(values[0] as u128);
    Ok(below.saturating_add(within))
}

/// Flip-weight level of enumeration position `index` for a reference of
/// `elements` symbols.
pub fn level_of_index(index: u128, elements: usize, alphabet: u32) -> usize {
    let mut acc: u128 = 0;
    for n in 0..=elements {
        acc = acc.saturating_add(level_size(elements as u64, n as u64, alphabet));
        if index < acc {
            return n;
        }
    }
    elements
}

/// The report an equality oracle would produce, derived from
/// [`candidate_index`] without enumerating. Only valid when the oracle is
/// "equals `true_key`".
pub fn run_m_mdlg_ranked(
    z: &EveObservation,
    mapping: KeyPhaseMapping,
    true_key: &SecretKey,
    budget: AttackBudget,
) -> Result<AttackReport> {
    let reference = derive_m_ary_reference(z, mapping)?;
    let index = candidate_index(&reference, mapping, true_key)?;
    let q = mapping.alphabet_size();
    let total = cumulative_level_size(reference.len() as u64, reference.len() as u64, q);
    let n = budget.get() as u128;
    if index < n {
        Ok(AttackReport {
            success: true,
            candidates_tried: index as u64 + 1,
            recovered_key: Some(true_key.clone()),
            n_reached: level_of_index(index, reference.len(), q),
        })
    } else {
        let tried = n.min(total);
        Ok(AttackReport {
            success: false,
            candidates_tried: tried as u64,
            recovered_key: None,
            n_reached: level_of_index(tried - 1, reference.len(), q),
        })
    }
}
