//! C ABI over `wfa_complexity`.
//!
//! Automata and samples are opaque handles created by `*_from_*` functions
//! and released with the matching `*_free`. Every fallible call returns a
//! [`WfaStatus`]; on failure the message is kept per thread and read with
//! [`wfa_last_error`]. Panics are caught at the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use wfa_complexity::bounds::{
    bound_an1, bound_dist_h1r, bound_dist_r1r, bound_h1r, bound_h2r, bound_r1r, bound_r2r, bound_ranr, BoundReport,
};
use wfa_complexity::hankel::hankel_singular_values;
use wfa_complexity::io::{infer_alphabet, parse_sample, parse_wfa, read_wfa};
use wfa_complexity::norms::{l2_norm_squared, wfa_norm, HolderPair, NormIndex, NormStatus};
use wfa_complexity::pfa::sample_pfa;
use wfa_complexity::rademacher::{rademacher_rpr, Direction, Mode};
use wfa_complexity::stats::{collision_stat, length_stat, ws_auto, Exactness, DEFAULT_RESTARTS, DEFAULT_SPLIT_GUARD};
use wfa_complexity::{Error, StringSample, WeightedAutomaton, Word};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WfaStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Resource = 3,
    Numeric = 4,
    Parse = 5,
    Io = 6,
    Utf8 = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Opaque automaton handle.
pub struct WfaAutomaton(WeightedAutomaton);

/// Opaque sample handle.
pub struct WfaSample(StringSample);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: WfaStatus, msg: impl Into<String>) -> WfaStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> WfaStatus {
    let status = match &e {
        Error::Domain(_) => WfaStatus::Domain,
        Error::Resource(_) => WfaStatus::Resource,
        Error::Numeric(_) => WfaStatus::Numeric,
        Error::Parse(_) => WfaStatus::Parse,
        Error::Io(_) => WfaStatus::Io,
    };
    fail(status, e.to_string())
}

/// Runs `f`, mapping errors and panics to a status.
fn guard<F: FnOnce() -> Result<(), WfaStatus>>(f: F) -> WfaStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WfaStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(WfaStatus::Panic, "internal panic"),
    }
}

trait IntoStatus<T> {
    fn status(self) -> Result<T, WfaStatus>;
}

impl<T> IntoStatus<T> for wfa_complexity::Result<T> {
    fn status(self) -> Result<T, WfaStatus> {
        self.map_err(from_error)
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, WfaStatus> {
    if p.is_null() {
        return Err(fail(WfaStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(WfaStatus::Utf8, format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, WfaStatus> {
    p.as_ref().ok_or_else(|| fail(WfaStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, WfaStatus> {
    p.as_mut().ok_or_else(|| fail(WfaStatus::NullPointer, format!("{what} is null")))
}

fn norm_index(p: f64) -> Result<NormIndex, WfaStatus> {
    NormIndex::from_value(p).status()
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn wfa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses an automaton from JSON text.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wfa_automaton_from_json(json: *const c_char, out: *mut *mut WfaAutomaton) -> WfaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let a = parse_wfa(str_arg(json, "json")?).status()?;
        *out = Box::into_raw(Box::new(WfaAutomaton(a)));
        Ok(())
    })
}

/// Reads an automaton from a JSON file.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wfa_automaton_load(path: *const c_char, out: *mut *mut WfaAutomaton) -> WfaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let a = read_wfa(Path::new(str_arg(path, "path")?)).status()?;
        *out = Box::into_raw(Box::new(WfaAutomaton(a)));
        Ok(())
    })
}

/// # Safety
/// `a` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wfa_automaton_free(a: *mut WfaAutomaton) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// Number of states, 0 for NULL.
///
/// # Safety
/// `a` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wfa_automaton_states(a: *const WfaAutomaton) -> usize {
    a.as_ref().map_or(0, |a| a.0.states())
}

/// Alphabet size, 0 for NULL.
///
/// # Safety
/// `a` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wfa_automaton_alphabet_size(a: *const WfaAutomaton) -> usize {
    a.as_ref().map_or(0, |a| a.0.alphabet().size())
}

/// f(x) for a word given as symbol indices.
///
/// # Safety
/// `symbols` must point to `len` readable values (or be NULL with `len` 0).
#[no_mangle]
pub unsafe extern "C" fn wfa_automaton_evaluate(
    a: *const WfaAutomaton,
    symbols: *const usize,
    len: usize,
    out: *mut f64,
) -> WfaStatus {
    guard(|| {
        let a = ref_arg(a, "automaton")?;
        let out = out_arg(out, "out")?;
        let syms = if len == 0 {
            &[][..]
        } else {
            if symbols.is_null() {
                return Err(fail(WfaStatus::NullPointer, "symbols is null"));
            }
            slice::from_raw_parts(symbols, len)
        };
        *out = a.0.evaluate(&Word::from(syms.to_vec())).status()?;
        Ok(())
    })
}

/// f(x) for a word given as whitespace-separated tokens.
///
/// # Safety
/// `text` must be a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn wfa_automaton_evaluate_text(
    a: *const WfaAutomaton,
    text: *const c_char,
    out: *mut f64,
) -> WfaStatus {
    guard(|| {
        let a = ref_arg(a, "automaton")?;
        let out = out_arg(out, "out")?;
        let w = a.0.alphabet().parse_word(str_arg(text, "text")?).status()?;
        *out = a.0.evaluate(&w).status()?;
        Ok(())
    })
}

/// Weight norm ‖A‖ for `p` in {1, 2, inf} and its Hölder conjugate.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wfa_automaton_weight_norm(a: *const WfaAutomaton, p: f64, out: *mut f64) -> WfaStatus {
    guard(|| {
        let a = ref_arg(a, "automaton")?;
        let out = out_arg(out, "out")?;
        *out = wfa_norm(&a.0, HolderPair::from_p(norm_index(p)?));
        Ok(())
    })
}

/// Squared ℓ2 norm of the function; `exact` is set false when only a
/// truncated lower bound was available.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wfa_automaton_l2_norm_squared(
    a: *const WfaAutomaton,
    out: *mut f64,
    exact: *mut bool,
) -> WfaStatus {
    guard(|| {
        let a = ref_arg(a, "automaton")?;
        let out = out_arg(out, "out")?;
        let exact = out_arg(exact, "exact")?;
        let r = l2_norm_squared(&a.0).status()?;
        *out = r.value;
        *exact = r.status == NormStatus::Exact;
        Ok(())
    })
}

/// Hankel singular values, descending. Writes up to `capacity` values and
/// sets `len` to the full count; returns `BUFFER_TOO_SMALL` if truncated.
///
/// # Safety
/// `values` must hold `capacity` writable doubles (may be NULL when 0).
#[no_mangle]
pub unsafe extern "C" fn wfa_automaton_hankel_spectrum(
    a: *const WfaAutomaton,
    values: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> WfaStatus {
    guard(|| {
        let a = ref_arg(a, "automaton")?;
        let len = out_arg(len, "len")?;
        let spec = hankel_singular_values(&a.0).status()?;
        let sv = &spec.singular_values;
        *len = sv.len();
        let n = sv.len().min(capacity);
        if n > 0 {
            if values.is_null() {
                return Err(fail(WfaStatus::NullPointer, "values is null"));
            }
            slice::from_raw_parts_mut(values, n).copy_from_slice(&sv[..n]);
        }
        if n < sv.len() {
            return Err(fail(WfaStatus::BufferTooSmall, format!("{} singular values, capacity {capacity}", sv.len())));
        }
        Ok(())
    })
}

/// Parses a sample, one string per line. With `alphabet_of` NULL the
/// alphabet is inferred from the text.
///
/// # Safety
/// `text` must be a nul-terminated string; `alphabet_of` NULL or live.
#[no_mangle]
pub unsafe extern "C" fn wfa_sample_from_text(
    text: *const c_char,
    alphabet_of: *const WfaAutomaton,
    out: *mut *mut WfaSample,
) -> WfaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let text = str_arg(text, "text")?;
        let s = match alphabet_of.as_ref() {
            Some(a) => parse_sample(text, a.0.alphabet()),
            None => infer_alphabet(text).and_then(|al| parse_sample(text, &al)),
        }
        .status()?;
        *out = Box::into_raw(Box::new(WfaSample(s)));
        Ok(())
    })
}

/// Draws `m` strings from a probabilistic automaton.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wfa_sample_from_pfa(
    a: *const WfaAutomaton,
    m: usize,
    seed: u64,
    max_len: usize,
    out: *mut *mut WfaSample,
) -> WfaStatus {
    guard(|| {
        let a = ref_arg(a, "automaton")?;
        let out = out_arg(out, "out")?;
        let s = sample_pfa(&a.0, m, seed, max_len).status()?;
        *out = Box::into_raw(Box::new(WfaSample(s)));
        Ok(())
    })
}

/// # Safety
/// `s` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wfa_sample_free(s: *mut WfaSample) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Sample size, 0 for NULL.
///
/// # Safety
/// `s` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wfa_sample_len(s: *const WfaSample) -> usize {
    s.as_ref().map_or(0, |s| s.0.len())
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct WfaSampleStats {
    pub m: usize,
    pub l_s: usize,
    pub c_s: usize,
    pub w_s: usize,
    /// False when W_S came from local search (an upper bound).
    pub w_s_exact: bool,
}

/// L_S, C_S and W_S. `seed` is used only if the split search falls back
/// to local search.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wfa_sample_stats(s: *const WfaSample, seed: u64, out: *mut WfaSampleStats) -> WfaStatus {
    guard(|| {
        let s = ref_arg(s, "sample")?;
        let out = out_arg(out, "out")?;
        let ws = ws_auto(&s.0, DEFAULT_SPLIT_GUARD, seed, DEFAULT_RESTARTS).status()?;
        *out = WfaSampleStats {
            m: s.0.len(),
            l_s: length_stat(&s.0),
            c_s: collision_stat(&s.0),
            w_s: ws.value,
            w_s_exact: ws.exactness == Exactness::Exhaustive,
        };
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WfaMode {
    Exact = 0,
    Enumerate = 1,
    MonteCarlo = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct WfaEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub draws: u64,
    /// -1 lower bound, 0 equals, 1 upper bound.
    pub direction: i32,
}

/// Empirical Rademacher complexity of the ℓp ball of radius `r`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wfa_rademacher_rpr(
    s: *const WfaSample,
    r: f64,
    p: f64,
    mode: WfaMode,
    draws: usize,
    seed: u64,
    out: *mut WfaEstimate,
) -> WfaStatus {
    guard(|| {
        let s = ref_arg(s, "sample")?;
        let out = out_arg(out, "out")?;
        let mode = match mode {
            WfaMode::Exact => Mode::Exact,
            WfaMode::Enumerate => Mode::Enumerate,
            WfaMode::MonteCarlo => Mode::MonteCarlo { draws },
        };
        let e = rademacher_rpr(&s.0, r, norm_index(p)?, mode, seed).status()?;
        *out = WfaEstimate {
            value: e.value,
            standard_error: e.standard_error,
            draws: e.draws,
            direction: match e.direction {
                Direction::LowerBound => -1,
                Direction::Equals => 0,
                Direction::UpperBound => 1,
            },
        };
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WfaBoundClass {
    An1 = 0,
    RAnr = 1,
    R1r = 2,
    R2r = 3,
    H1r = 4,
    H2r = 5,
    /// R1r from D_max and kappa.
    R1rDistribution = 6,
    /// H1r from D_vee and kappa.
    H1rDistribution = 7,
}

/// Inputs to the closed-form bounds; fields a bound does not use are ignored.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct WfaBoundInputs {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub r: f64,
    pub l: f64,
    pub c: usize,
    pub w: usize,
    pub d_max: f64,
    pub d_vee: f64,
    pub kappa: f64,
}

fn bound_report(class: WfaBoundClass, b: &WfaBoundInputs) -> wfa_complexity::Result<BoundReport> {
    match class {
        WfaBoundClass::An1 => bound_an1(b.m, b.n, b.k, b.l),
        WfaBoundClass::RAnr => {
            if !(b.l >= 0.0 && b.l.fract() == 0.0) {
                return Err(Error::domain("l must be a non-negative integer"));
            }
            bound_ranr(b.m, b.n, b.k, b.r, b.l as usize)
        }
        WfaBoundClass::R1r => bound_r1r(b.m, b.r, b.c),
        WfaBoundClass::R2r => bound_r2r(b.m, b.r),
        WfaBoundClass::H1r => bound_h1r(b.m, b.r, b.w),
        WfaBoundClass::H2r => bound_h2r(b.m, b.r),
        WfaBoundClass::R1rDistribution => bound_dist_r1r(b.m, b.r, b.d_max, b.kappa),
        WfaBoundClass::H1rDistribution => bound_dist_h1r(b.m, b.r, b.d_vee, b.kappa),
    }
}

/// Evaluates a Rademacher bound. `lower` receives the lower end for bounds
/// that come as a sandwich and NaN otherwise; it may be NULL.
///
/// # Safety
/// `inputs` and `value` must be valid; `lower` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn wfa_bound(
    class: WfaBoundClass,
    inputs: *const WfaBoundInputs,
    value: *mut f64,
    lower: *mut f64,
) -> WfaStatus {
    guard(|| {
        let b = ref_arg(inputs, "inputs")?;
        let value = out_arg(value, "value")?;
        let report = bound_report(class, b).status()?;
        *value = report.value;
        if let Some(l) = lower.as_mut() {
            *l = report.lower.unwrap_or(f64::NAN);
        }
        Ok(())
    })
}
