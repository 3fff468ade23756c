//! C ABI for the tofec library.
//!
//! Handles are opaque pointers created and destroyed by the paired
//! `*_new` / `*_free` functions. Every fallible call returns a
//! [`TofecStatus`]; on failure, [`tofec_last_error_message`] returns a
//! human-readable description valid until the next failing call on the same
//! thread. Strings and byte buffers returned through out-parameters are
//! allocated by this library and must be released with [`tofec_string_free`]
//! or [`tofec_bytes_free`].
//!
//! The header `include/tofec.h` is generated from this file by cbindgen at
//! build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};

use tofec::analysis::{
    expected_queue_length, expected_service_delay_approx, expected_service_delay_exact,
    expected_usage, load_from_queue_length, ClassSpec, CodeChoice, OpType,
};
use tofec::codec::StripCode;
use tofec::delay_model::{ChunkSize, DelayParams};
use tofec::error::Error;
use tofec::scenario::ScenarioConfig;
use tofec::simulator::run_simulation;
use tofec::solver::{build_thresholds, optimal_code_for_q, ThresholdTable};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TofecStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// An argument failed validation; see `tofec_last_error_message`.
    InvalidArgument = 2,
    /// The offered load exceeds the thread count.
    Unstable = 3,
    /// A numerical search found no solution in range.
    NoSolution = 4,
    NotFound = 5,
    IoError = 6,
    Internal = 7,
}

/// Storage operation type.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TofecOpType {
    Read = 0,
    Write = 1,
}

impl From<TofecOpType> for OpType {
    fn from(op: TofecOpType) -> Self {
        match op {
            TofecOpType::Read => OpType::Read,
            TofecOpType::Write => OpType::Write,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(err: &Error) -> TofecStatus {
    let status = match err {
        Error::UnstableLoad { .. } => TofecStatus::Unstable,
        Error::NoRoot
        | Error::QueueBelowSolvableRange(_)
        | Error::QueueAboveSolvableRange(_)
        | Error::Numeric(_) => TofecStatus::NoSolution,
        Error::NotFound(_) => TofecStatus::NotFound,
        Error::Io(_) => TofecStatus::IoError,
        _ => TofecStatus::InvalidArgument,
    };
    let message = CString::new(err.to_string()).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
    status
}

/// Message describing the most recent failure on this thread, or null if no
/// call has failed yet. The pointer stays valid until the next failing call
/// on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn tofec_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map(|s| s.as_ptr())
            .unwrap_or(std::ptr::null())
    })
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn tofec_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must be a pointer previously returned through a `*mut c_char`
/// out-parameter of this library, not yet freed, or null.
#[no_mangle]
pub unsafe extern "C" fn tofec_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Release a byte buffer returned by this library.
///
/// # Safety
/// `(ptr, len)` must come from a buffer out-parameter of this library, not
/// yet freed; `ptr` may be null.
#[no_mangle]
pub unsafe extern "C" fn tofec_bytes_free(ptr: *mut u8, len: usize) {
    if !ptr.is_null() {
        drop(Vec::from_raw_parts(ptr, len, len));
    }
}

fn string_out(value: String, out: *mut *mut c_char) -> TofecStatus {
    match CString::new(value) {
        Ok(s) => {
            unsafe { *out = s.into_raw() };
            TofecStatus::Ok
        }
        Err(_) => TofecStatus::Internal,
    }
}

fn bytes_out(value: Vec<u8>, out: *mut *mut u8, out_len: *mut usize) -> TofecStatus {
    let mut boxed = value.into_boxed_slice();
    unsafe {
        *out = boxed.as_mut_ptr();
        *out_len = boxed.len();
    }
    std::mem::forget(boxed);
    TofecStatus::Ok
}

// --- delay model -----------------------------------------------------------

/// Opaque handle to a validated set of delay coefficients.
pub struct TofecDelayParams {
    inner: DelayParams,
}

/// Create delay coefficients. All four values are in seconds (the slopes per
/// MB of chunk size).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tofec_delay_params_new(
    fixed_shift_s: f64,
    shift_slope_s_per_mb: f64,
    fixed_tail_s: f64,
    tail_slope_s_per_mb: f64,
    out: *mut *mut TofecDelayParams,
) -> TofecStatus {
    if out.is_null() {
        return TofecStatus::NullArgument;
    }
    match DelayParams::new(
        fixed_shift_s,
        shift_slope_s_per_mb,
        fixed_tail_s,
        tail_slope_s_per_mb,
    ) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(TofecDelayParams { inner }));
            TofecStatus::Ok
        }
        Err(e) => set_error(&e),
    }
}

/// # Safety
/// `params` must come from `tofec_delay_params_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn tofec_delay_params_free(params: *mut TofecDelayParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Deterministic lower bound of the task delay at the given chunk size.
///
/// # Safety
/// `params` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tofec_delay_params_shift(
    params: *const TofecDelayParams,
    chunk_mb: f64,
    out: *mut f64,
) -> TofecStatus {
    if params.is_null() || out.is_null() {
        return TofecStatus::NullArgument;
    }
    match ChunkSize::new(chunk_mb) {
        Ok(chunk) => {
            *out = (*params).inner.shift(chunk);
            TofecStatus::Ok
        }
        Err(e) => set_error(&e),
    }
}

/// Mean of the exponential delay tail at the given chunk size.
///
/// # Safety
/// `params` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tofec_delay_params_tail_mean(
    params: *const TofecDelayParams,
    chunk_mb: f64,
    out: *mut f64,
) -> TofecStatus {
    if params.is_null() || out.is_null() {
        return TofecStatus::NullArgument;
    }
    match ChunkSize::new(chunk_mb) {
        Ok(chunk) => {
            *out = (*params).inner.tail_mean(chunk);
            TofecStatus::Ok
        }
        Err(e) => set_error(&e),
    }
}

// --- request classes and closed-form analysis ------------------------------

/// Opaque handle to one request class.
pub struct TofecClassSpec {
    inner: ClassSpec,
}

/// Create a request class. The delay coefficients are copied; the `params`
/// handle stays owned by the caller.
///
/// # Safety
/// `params` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tofec_class_spec_new(
    op_type: TofecOpType,
    file_size_mb: f64,
    mix_fraction: f64,
    k_max: u32,
    n_max: u32,
    r_max: f64,
    params: *const TofecDelayParams,
    out: *mut *mut TofecClassSpec,
) -> TofecStatus {
    if params.is_null() || out.is_null() {
        return TofecStatus::NullArgument;
    }
    match ClassSpec::new(
        op_type.into(),
        file_size_mb,
        mix_fraction,
        k_max,
        n_max,
        r_max,
        (*params).inner,
    ) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(TofecClassSpec { inner }));
            TofecStatus::Ok
        }
        Err(e) => set_error(&e),
    }
}

/// # Safety
/// `class` must come from `tofec_class_spec_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn tofec_class_spec_free(class: *mut TofecClassSpec) {
    if !class.is_null() {
        drop(Box::from_raw(class));
    }
}

unsafe fn with_code(
    class: *const TofecClassSpec,
    n: u32,
    k: u32,
    out: *mut f64,
    f: impl Fn(&ClassSpec, CodeChoice) -> Result<f64, Error>,
) -> TofecStatus {
    if class.is_null() || out.is_null() {
        return TofecStatus::NullArgument;
    }
    let code = match CodeChoice::new(n, k) {
        Ok(c) => c,
        Err(e) => return set_error(&e),
    };
    match f(&(*class).inner, code) {
        Ok(v) => {
            *out = v;
            TofecStatus::Ok
        }
        Err(e) => set_error(&e),
    }
}

/// Expected service delay of an (n, k) code when all its tasks start
/// together (harmonic-sum form), in seconds.
///
/// # Safety
/// `class` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tofec_service_delay_exact(
    class: *const TofecClassSpec,
    n: u32,
    k: u32,
    out: *mut f64,
) -> TofecStatus {
    with_code(class, n, k, out, |cls, code| {
        Ok(expected_service_delay_exact(cls, code))
    })
}

/// Logarithmic approximation of the service delay; fails for n = k.
///
/// # Safety
/// `class` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tofec_service_delay_approx(
    class: *const TofecClassSpec,
    n: u32,
    k: u32,
    out: *mut f64,
) -> TofecStatus {
    with_code(class, n, k, out, expected_service_delay_approx)
}

/// Expected thread-seconds one request consumes under an (n, k) code.
///
/// # Safety
/// `class` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tofec_expected_usage(
    class: *const TofecClassSpec,
    n: u32,
    k: u32,
    out: *mut f64,
) -> TofecStatus {
    with_code(class, n, k, out, |cls, code| Ok(expected_usage(cls, code)))
}

/// Expected request-queue length at normalized load `rho` with `threads`
/// parallel connections; fails when `rho >= threads`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tofec_expected_queue_length(
    rho: f64,
    threads: u32,
    out: *mut f64,
) -> TofecStatus {
    if out.is_null() {
        return TofecStatus::NullArgument;
    }
    match expected_queue_length(rho, threads) {
        Ok(q) => {
            *out = q;
            TofecStatus::Ok
        }
        Err(e) => set_error(&e),
    }
}

/// Exact inverse of `tofec_expected_queue_length`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tofec_load_from_queue_length(
    queue_length: f64,
    threads: u32,
    out: *mut f64,
) -> TofecStatus {
    if out.is_null() {
        return TofecStatus::NullArgument;
    }
    if !(queue_length.is_finite() && queue_length >= 0.0) {
        return set_error(&Error::InvalidParameter(format!(
            "queue length must be >= 0, got {queue_length}"
        )));
    }
    *out = load_from_queue_length(queue_length, threads);
    TofecStatus::Ok
}

// --- solver ------------------------------------------------------------------

/// Opaque handle to a per-class threshold table.
pub struct TofecThresholds {
    inner: ThresholdTable,
}

/// Build the adaptation threshold table for a class with the given thread
/// count.
///
/// # Safety
/// `class` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tofec_thresholds_build(
    class: *const TofecClassSpec,
    threads: u32,
    out: *mut *mut TofecThresholds,
) -> TofecStatus {
    if class.is_null() || out.is_null() {
        return TofecStatus::NullArgument;
    }
    match build_thresholds(&(*class).inner, threads) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(TofecThresholds { inner }));
            TofecStatus::Ok
        }
        Err(e) => set_error(&e),
    }
}

/// # Safety
/// `thresholds` must come from `tofec_thresholds_build` and not be freed
/// twice.
#[no_mangle]
pub unsafe extern "C" fn tofec_thresholds_free(thresholds: *mut TofecThresholds) {
    if !thresholds.is_null() {
        drop(Box::from_raw(thresholds));
    }
}

/// Serialize a threshold table to JSON (arrays `zeta` and `kappa`, with the
/// leading infinite entry encoded as the string "inf"). Free the result with
/// `tofec_string_free`.
///
/// # Safety
/// `thresholds` and `out_json` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tofec_thresholds_to_json(
    thresholds: *const TofecThresholds,
    out_json: *mut *mut c_char,
) -> TofecStatus {
    if thresholds.is_null() || out_json.is_null() {
        return TofecStatus::NullArgument;
    }
    match serde_json::to_string_pretty(&(*thresholds).inner) {
        Ok(json) => string_out(json, out_json),
        Err(e) => set_error(&Error::Json(e)),
    }
}

/// Relaxed (real-valued) optimal code for one class at expected queue length
/// `queue_length`.
///
/// # Safety
/// `class` and the three out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tofec_optimal_code_for_queue(
    class: *const TofecClassSpec,
    queue_length: f64,
    threads: u32,
    out_k: *mut f64,
    out_r: *mut f64,
    out_n: *mut f64,
) -> TofecStatus {
    if class.is_null() || out_k.is_null() || out_r.is_null() || out_n.is_null() {
        return TofecStatus::NullArgument;
    }
    match optimal_code_for_q(&(*class).inner, queue_length, threads) {
        Ok(code) => {
            *out_k = code.k;
            *out_r = code.r;
            *out_n = code.n;
            TofecStatus::Ok
        }
        Err(e) => set_error(&e),
    }
}

// --- simulation ----------------------------------------------------------------

/// Run one simulation from a scenario-config JSON document (the same schema
/// the CLI accepts) and return the aggregate report as JSON. Trace-driven
/// scenarios resolve relative trace paths against the process working
/// directory. Free the result with `tofec_string_free`.
///
/// # Safety
/// `config_json` must be a valid NUL-terminated string and `out_report_json`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tofec_simulate_json(
    config_json: *const c_char,
    out_report_json: *mut *mut c_char,
) -> TofecStatus {
    if config_json.is_null() || out_report_json.is_null() {
        return TofecStatus::NullArgument;
    }
    let text = match CStr::from_ptr(config_json).to_str() {
        Ok(t) => t,
        Err(_) => {
            return set_error(&Error::Config("config JSON is not valid UTF-8".into()));
        }
    };
    let run = || -> Result<String, Error> {
        let scenario = ScenarioConfig::from_json(text)?;
        let sim = scenario.build_sim()?;
        let report = run_simulation(&sim)?;
        Ok(serde_json::to_string_pretty(&serde_json::json!({
            "strategy": sim.strategy.label(),
            "seed": sim.seed,
            "duration_s": report.duration_s,
            "warmup_s": report.warmup_s,
            "aggregates": report.aggregates,
        }))?)
    };
    match run() {
        Ok(json) => string_out(json, out_report_json),
        Err(e) => set_error(&e),
    }
}

// --- codec ----------------------------------------------------------------------

/// Opaque handle to a systematic MDS strip code.
pub struct TofecCodec {
    inner: StripCode,
}

/// Create a systematic (total_strips, data_strips) code over strips of
/// `strip_bytes` bytes. At most 256 strips.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tofec_codec_new(
    total_strips: u32,
    data_strips: u32,
    strip_bytes: usize,
    out: *mut *mut TofecCodec,
) -> TofecStatus {
    if out.is_null() {
        return TofecStatus::NullArgument;
    }
    match StripCode::systematic(total_strips, data_strips, strip_bytes) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(TofecCodec { inner }));
            TofecStatus::Ok
        }
        Err(e) => set_error(&e),
    }
}

/// # Safety
/// `codec` must come from `tofec_codec_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn tofec_codec_free(codec: *mut TofecCodec) {
    if !codec.is_null() {
        drop(Box::from_raw(codec));
    }
}

/// Encode exactly `data_strips * strip_bytes` input bytes into a coded file
/// of `total_strips * strip_bytes` bytes. Free the output with
/// `tofec_bytes_free`.
///
/// # Safety
/// `codec` must be valid; `data` must point to `data_len` readable bytes;
/// `out` and `out_len` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tofec_codec_encode(
    codec: *const TofecCodec,
    data: *const u8,
    data_len: usize,
    out: *mut *mut u8,
    out_len: *mut usize,
) -> TofecStatus {
    if codec.is_null() || data.is_null() || out.is_null() || out_len.is_null() {
        return TofecStatus::NullArgument;
    }
    let input = std::slice::from_raw_parts(data, data_len);
    match (*codec).inner.encode(input) {
        Ok(coded) => bytes_out(coded, out, out_len),
        Err(e) => set_error(&e),
    }
}

/// Reconstruct the original file from `count` strips. `indices` holds the
/// strip indices; `strips` holds the strip payloads concatenated in the same
/// order, `count * strip_bytes` bytes total. Free the output with
/// `tofec_bytes_free`.
///
/// # Safety
/// `codec` must be valid; `indices` must point to `count` u32 values;
/// `strips` must point to `count * strip_bytes` readable bytes; `out` and
/// `out_len` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tofec_codec_decode(
    codec: *const TofecCodec,
    indices: *const u32,
    count: usize,
    strips: *const u8,
    out: *mut *mut u8,
    out_len: *mut usize,
) -> TofecStatus {
    if codec.is_null()
        || indices.is_null()
        || strips.is_null()
        || out.is_null()
        || out_len.is_null()
    {
        return TofecStatus::NullArgument;
    }
    let codec = &(*codec).inner;
    let idx = std::slice::from_raw_parts(indices, count);
    let payload = std::slice::from_raw_parts(strips, count * codec.strip_bytes());
    let pairs: Vec<(u32, &[u8])> = idx
        .iter()
        .enumerate()
        .map(|(i, &index)| {
            (
                index,
                &payload[i * codec.strip_bytes()..(i + 1) * codec.strip_bytes()],
            )
        })
        .collect();
    match codec.decode(&pairs) {
        Ok(file) => bytes_out(file, out, out_len),
        Err(e) => set_error(&e),
    }
}

/// Reconstruct the original file from whole chunks of `chunk_bytes` bytes
/// each (a batch of strips per chunk). `chunks` holds `count * chunk_bytes`
/// bytes. Free the output with `tofec_bytes_free`.
///
/// # Safety
/// `codec` must be valid; `indices` must point to `count` u32 values;
/// `chunks` must point to `count * chunk_bytes` readable bytes; `out` and
/// `out_len` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tofec_codec_decode_chunks(
    codec: *const TofecCodec,
    chunk_bytes: usize,
    indices: *const u32,
    count: usize,
    chunks: *const u8,
    out: *mut *mut u8,
    out_len: *mut usize,
) -> TofecStatus {
    if codec.is_null()
        || indices.is_null()
        || chunks.is_null()
        || out.is_null()
        || out_len.is_null()
    {
        return TofecStatus::NullArgument;
    }
    let codec = &(*codec).inner;
    let idx = std::slice::from_raw_parts(indices, count);
    let payload = std::slice::from_raw_parts(chunks, count * chunk_bytes);
    let pairs: Vec<(u32, &[u8])> = idx
        .iter()
        .enumerate()
        .map(|(i, &index)| (index, &payload[i * chunk_bytes..(i + 1) * chunk_bytes]))
        .collect();
    match codec.decode_chunks(chunk_bytes, &pairs) {
        Ok(file) => bytes_out(file, out, out_len),
        Err(e) => set_error(&e),
    }
}
