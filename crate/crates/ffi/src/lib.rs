//! C ABI over `pla-core`.
//!
//! Every function returns a [`PlaStatus`]; outputs go through caller-provided
//! pointers. On failure, [`pla_last_error_message`] describes the error for
//! the calling thread. Stateful objects are opaque handles created by a
//! `*_new` function and released with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pla_core::analytics::{
    n_max_binary, n_max_m_ary, p_m_mdlg, p_mdlg, random_guess_baseline, regularized_incomplete_beta, AnalyticQuery,
};
use pla_core::attack::{derive_m_ary_reference, run_m_mdlg, AttackBudget, CandidateEnumerator, EqualityOracle};
use pla_core::channel::{ChannelModelConfig, ChannelModelKind, ChannelSampler};
use pla_core::keyphase::{KeyPhaseMapping, PhaseVector, SecretKey};
use pla_core::protocol::EveObservation;
use pla_core::randomness::{frequency_test, RandomnessTestConfig};
use pla_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlaStatus {
    Ok = 0,
    NullPointer = 1,
    Key = 2,
    Length = 3,
    Parameter = 4,
    Degenerate = 5,
    Trace = 6,
    Config = 7,
    Io = 8,
    /// The enumerator has no more candidates.
    Exhausted = 9,
    /// Output buffer too small.
    BufferTooSmall = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlaChannelModel {
    BernoulliDifferential = 0,
    Ar1ComplexGaussian = 1,
    FlatFading = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PlaAttackReport {
    pub success: bool,
    pub candidates_tried: u64,
    pub n_reached: u64,
}

/// Lazily enumerated key candidates for one observation.
pub struct PlaEnumerator {
    inner: CandidateEnumerator,
    key_bits: usize,
    buf: Vec<u8>,
}

/// Seeded channel generator.
pub struct PlaChannel {
    inner: ChannelSampler,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> PlaStatus {
    match e.category() {
        "key" => PlaStatus::Key,
        "length" => PlaStatus::Length,
        "degenerate" => PlaStatus::Degenerate,
        "trace" => PlaStatus::Trace,
        "config" => PlaStatus::Config,
        "io" => PlaStatus::Io,
        _ => PlaStatus::Parameter,
    }
}

enum Failure {
    Core(Error),
    Status(PlaStatus, &'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PlaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PlaStatus::Ok,
        Ok(Err(Failure::Core(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic");
            PlaStatus::Panic
        }
    }
}

fn null() -> Failure {
    Failure::Status(PlaStatus::NullPointer, "null pointer argument")
}

/// # Safety
/// `p` must be null or valid for `len` reads.
unsafe fn slice<'a, T>(p: *const T, len: usize) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// # Safety
/// `p` must be null or valid for one write.
unsafe fn put<T>(p: *mut T, v: T) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null());
    }
    p.write(v);
    Ok(())
}

/// Message for the last failed call on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pla_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Binary-mapping attack success probability.
///
/// # Safety
/// Output pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pla_p_mdlg(
    l: usize,
    rho: f64,
    budget: u64,
    out_value: *mut f64,
    out_log10: *mut f64,
) -> PlaStatus {
    guard(|| {
        let p = p_mdlg(&AnalyticQuery::binary(l, rho, budget)?)?;
        put(out_value, p.value)?;
        put(out_log10, p.log10)
    })
}

/// m-ary attack success probability for an `s`-bit key.
///
/// # Safety
/// Output pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pla_p_m_mdlg(
    s: usize,
    m: u32,
    rho: f64,
    budget: u64,
    out_value: *mut f64,
    out_log10: *mut f64,
) -> PlaStatus {
    guard(|| {
        let p = p_m_mdlg(&AnalyticQuery::m_ary(s, m, rho, budget)?)?;
        put(out_value, p.value)?;
        put(out_log10, p.log10)
    })
}

/// Largest complete flip-weight level within `budget`, -1 if none.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn pla_n_max(s: usize, m: u32, budget: u64, out: *mut i64) -> PlaStatus {
    guard(|| {
        let n = if m == 1 {
            n_max_binary(s, budget)
        } else {
            n_max_m_ary(s, m, budget)?
        };
        put(out, n)
    })
}

/// # Safety
/// Output pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pla_random_guess(
    s: usize,
    budget: u64,
    out_value: *mut f64,
    out_log10: *mut f64,
) -> PlaStatus {
    guard(|| {
        let p = random_guess_baseline(s, budget)?;
        put(out_value, p.value)?;
        put(out_log10, p.log10)
    })
}

/// Regularized incomplete beta function I_x(a, b).
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn pla_incomplete_beta(x: f64, a: f64, b: f64, out: *mut f64) -> PlaStatus {
    guard(|| put(out, regularized_incomplete_beta(x, a, b)?))
}

/// Frequency test on `len` bits (each 0 or non-zero).
///
/// # Safety
/// `bits` must be valid for `len` reads; output pointers for writes.
#[no_mangle]
pub unsafe extern "C" fn pla_frequency_test(
    bits: *const u8,
    len: usize,
    alpha: f64,
    out_p_value: *mut f64,
    out_accepted: *mut bool,
) -> PlaStatus {
    guard(|| {
        let bits = slice(bits, len)?;
        let r = frequency_test(bits, &RandomnessTestConfig::new(alpha)?)?;
        put(out_p_value, r.p_value)?;
        put(out_accepted, r.accepted)
    })
}

fn observation(z: &[f64]) -> Result<EveObservation, Failure> {
    Ok(EveObservation::new(PhaseVector::new(z.to_vec())?))
}

/// Runs the attack on Eve's phases `z` against a known key (`key_len` bits).
///
/// # Safety
/// `z` valid for `z_len` reads, `key` for `key_len` reads, `out` for a write.
#[no_mangle]
pub unsafe extern "C" fn pla_attack(
    z: *const f64,
    z_len: usize,
    key: *const u8,
    key_len: usize,
    bits_per_subkey: u32,
    budget: u64,
    out: *mut PlaAttackReport,
) -> PlaStatus {
    guard(|| {
        let obs = observation(slice(z, z_len)?)?;
        let key = SecretKey::new(slice(key, key_len)?.to_vec())?;
        let mapping = KeyPhaseMapping::new(bits_per_subkey)?;
        let r = run_m_mdlg(&obs, mapping, &mut EqualityOracle::new(key), AttackBudget::new(budget)?)?;
        put(
            out,
            PlaAttackReport {
                success: r.success,
                candidates_tried: r.candidates_tried,
                n_reached: r.n_reached as u64,
            },
        )
    })
}

/// Creates a candidate enumerator for Eve's phases `z`.
///
/// # Safety
/// `z` valid for `len` reads; `out` valid for a write. Free the handle with
/// [`pla_enumerator_free`].
#[no_mangle]
pub unsafe extern "C" fn pla_enumerator_new(
    z: *const f64,
    len: usize,
    bits_per_subkey: u32,
    budget: u64,
    out: *mut *mut PlaEnumerator,
) -> PlaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let obs = observation(slice(z, len)?)?;
        let mapping = KeyPhaseMapping::new(bits_per_subkey)?;
        let reference = derive_m_ary_reference(&obs, mapping)?;
        let inner = CandidateEnumerator::new(&reference, mapping, AttackBudget::new(budget)?)?;
        let handle = Box::new(PlaEnumerator {
            inner,
            key_bits: len * bits_per_subkey as usize,
            buf: Vec::new(),
        });
        put(out, Box::into_raw(handle))
    })
}

/// Key length in bits of every candidate.
///
/// # Safety
/// `h` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn pla_enumerator_key_bits(h: *const PlaEnumerator) -> usize {
    h.as_ref().map_or(0, |h| h.key_bits)
}

/// Writes the next candidate's bits into `key_out` (capacity `cap`) and its
/// flip-weight level into `out_level`. Returns `Exhausted` when done.
///
/// # Safety
/// `h` must be a live handle; `key_out` valid for `cap` writes; `out_level`
/// null or valid for a write.
#[no_mangle]
pub unsafe extern "C" fn pla_enumerator_next(
    h: *mut PlaEnumerator,
    key_out: *mut u8,
    cap: usize,
    out_level: *mut u64,
) -> PlaStatus {
    guard(|| {
        let h = h.as_mut().ok_or_else(null)?;
        if key_out.is_null() {
            return Err(null());
        }
        if cap < h.key_bits {
            return Err(Failure::Status(
                PlaStatus::BufferTooSmall,
                "key buffer smaller than key length",
            ));
        }
        let Some(level) = h.inner.next_into(&mut h.buf) else {
            return Err(Failure::Status(PlaStatus::Exhausted, "no more candidates"));
        };
        ptr::copy_nonoverlapping(h.buf.as_ptr(), key_out, h.buf.len());
        if !out_level.is_null() {
            out_level.write(level as u64);
        }
        Ok(())
    })
}

/// # Safety
/// `h` must come from [`pla_enumerator_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pla_enumerator_free(h: *mut PlaEnumerator) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// # Safety
/// `out` valid for a write. Free the handle with [`pla_channel_free`].
#[no_mangle]
pub unsafe extern "C" fn pla_channel_new(
    model: PlaChannelModel,
    rho: f64,
    num_subcarriers: usize,
    seed: u64,
    out: *mut *mut PlaChannel,
) -> PlaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let kind = match model {
            PlaChannelModel::BernoulliDifferential => ChannelModelKind::BernoulliDifferential,
            PlaChannelModel::Ar1ComplexGaussian => ChannelModelKind::Ar1ComplexGaussian,
            PlaChannelModel::FlatFading => ChannelModelKind::FlatFading,
        };
        let inner = ChannelSampler::new(ChannelModelConfig::new(kind, rho, num_subcarriers, seed)?, None)?;
        put(out, Box::into_raw(Box::new(PlaChannel { inner })))
    })
}

/// Snapshot `index`: amplitudes and phases, `cap` entries each.
///
/// # Safety
/// `h` must be a live handle; both buffers valid for `cap` writes.
#[no_mangle]
pub unsafe extern "C" fn pla_channel_sample(
    h: *const PlaChannel,
    index: u64,
    amplitudes: *mut f64,
    phases: *mut f64,
    cap: usize,
) -> PlaStatus {
    guard(|| {
        let h = h.as_ref().ok_or_else(null)?;
        if amplitudes.is_null() || phases.is_null() {
            return Err(null());
        }
        let s = h.inner.sample_indexed(index)?;
        if cap < s.num_subcarriers() {
            return Err(Failure::Status(
                PlaStatus::BufferTooSmall,
                "buffers smaller than subcarrier count",
            ));
        }
        ptr::copy_nonoverlapping(s.amplitudes().as_ptr(), amplitudes, s.num_subcarriers());
        ptr::copy_nonoverlapping(s.phases().as_ptr(), phases, s.num_subcarriers());
        Ok(())
    })
}

/// # Safety
/// `h` must come from [`pla_channel_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pla_channel_free(h: *mut PlaChannel) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}
