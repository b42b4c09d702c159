//! C ABI over `mcfqkd`.
//!
//! Every fallible function returns a [`McfqkdStatus`] and writes its result
//! through an out-pointer. On failure the message is available from
//! [`mcfqkd_last_error`] on the same thread. Objects are opaque handles that
//! must be released with the matching `_free` function; strings returned by
//! the library are released with [`mcfqkd_string_free`].

// Range checks are written as `!(x >= lo)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mcfqkd::config::{parse_config, RunConfig};
use mcfqkd::output::{self, Format};
use mcfqkd::protocol::{
    run_session, run_session_with_workers, tomography, tomography_with_workers, IntensityClass,
    SessionReport,
};
use mcfqkd::security::{
    cutoff_distance, key_rate_vs_distance, mutual_info_ab, mutual_info_ae, secret_rate_ideal,
    threshold_coherent, threshold_individual_2mub, KeyRateCurve, KeyRateMode,
};
use mcfqkd::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum McfqkdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Validation = 4,
    Domain = 5,
    Solver = 6,
    Estimation = 7,
    Io = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum McfqkdIntensity {
    Signal = 0,
    Decoy = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum McfqkdKeyRateMode {
    Decoy = 0,
    NoDecoy = 1,
}

/// One row of a session report. `qber` is NaN when the bin has no sifted
/// symbols.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McfqkdBin {
    pub time_s: f64,
    pub intensity: McfqkdIntensity,
    pub pulses: u64,
    pub sifted_count: u64,
    pub errors: u64,
    pub qber: f64,
}

/// Opaque run configuration.
pub struct McfqkdConfig {
    inner: RunConfig,
}

/// Opaque session report.
pub struct McfqkdReport {
    inner: SessionReport,
}

/// Opaque key-rate curve.
pub struct McfqkdCurve {
    inner: KeyRateCurve,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> McfqkdStatus {
    match e {
        Error::Parse { .. } => McfqkdStatus::Parse,
        Error::Validation { .. } => McfqkdStatus::Validation,
        Error::Domain(_) | Error::Configuration(_) => McfqkdStatus::Domain,
        Error::Solver { .. } => McfqkdStatus::Solver,
        Error::UndefinedEstimate(_) | Error::Estimation(_) => McfqkdStatus::Estimation,
        Error::Io(_) => McfqkdStatus::Io,
    }
}

enum Failure {
    Status(McfqkdStatus, String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn null(what: &str) -> Failure {
    Failure::Status(McfqkdStatus::NullPointer, format!("`{what}` is null"))
}

fn bad(msg: impl Into<String>) -> Failure {
    Failure::Status(McfqkdStatus::InvalidArgument, msg.into())
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> McfqkdStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            McfqkdStatus::Ok
        }
        Ok(Err(Failure::Status(s, msg))) => {
            set_error(&msg);
            s
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            McfqkdStatus::Panic
        }
    }
}

unsafe fn put<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn get<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| bad("output contains a NUL byte"))
}

fn workers(n: u32) -> Option<usize> {
    (n > 0).then_some(n as usize)
}

fn dim(n: u32) -> Result<usize, Failure> {
    if n < 2 {
        return Err(Failure::Lib(Error::Domain(format!(
            "dimension must be ≥ 2, got {n}"
        ))));
    }
    Ok(n as usize)
}

/// Message describing the last failure on this thread, or an empty string.
/// The pointer stays valid until the next library call on this thread.
#[no_mangle]
pub extern "C" fn mcfqkd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mcfqkd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mcfqkd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Configuration with every default.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcfqkd_config_default(out: *mut *mut McfqkdConfig) -> McfqkdStatus {
    guard(|| {
        let cfg = Box::new(McfqkdConfig {
            inner: RunConfig::default(),
        });
        put(out, Box::into_raw(cfg), "out")
    })
}

/// Parses and validates a JSON configuration.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcfqkd_config_parse(
    json: *const c_char,
    out: *mut *mut McfqkdConfig,
) -> McfqkdStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| bad("json is not UTF-8"))?;
        let cfg = Box::new(McfqkdConfig {
            inner: parse_config(text)?,
        });
        put(out, Box::into_raw(cfg), "out")
    })
}

/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn mcfqkd_config_set_seed(
    config: *mut McfqkdConfig,
    seed: u64,
) -> McfqkdStatus {
    guard(|| {
        let cfg = config.as_mut().ok_or_else(|| null("config"))?;
        cfg.inner.seed = seed;
        Ok(())
    })
}

/// Serializes the configuration as JSON; free the result with
/// [`mcfqkd_string_free`].
///
/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcfqkd_config_to_json(
    config: *const McfqkdConfig,
    out: *mut *mut c_char,
) -> McfqkdStatus {
    guard(|| {
        let cfg = get(config, "config")?;
        put(out, into_c_string(cfg.inner.to_json())?, "out")
    })
}

/// # Safety
/// `config` must come from this library; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn mcfqkd_config_free(config: *mut McfqkdConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Two-basis individual-attack disturbance threshold in percent.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcfqkd_threshold_individual(n: u32, out: *mut f64) -> McfqkdStatus {
    guard(|| put(out, threshold_individual_2mub(dim(n)?)?, "out"))
}

/// Coherent-attack disturbance threshold in percent.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcfqkd_threshold_coherent(n: u32, out: *mut f64) -> McfqkdStatus {
    guard(|| put(out, threshold_coherent(dim(n)?)?, "out"))
}

/// Alice-Bob and Alice-Eve mutual information at Bob's fidelity `fidelity`.
///
/// # Safety
/// `i_ab` and `i_ae` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mcfqkd_mutual_info(
    fidelity: f64,
    n: u32,
    i_ab: *mut f64,
    i_ae: *mut f64,
) -> McfqkdStatus {
    guard(|| {
        let n = dim(n)?;
        if !fidelity.is_finite() {
            return Err(bad("fidelity must be finite"));
        }
        put(i_ab, mutual_info_ab(fidelity, n), "i_ab")?;
        put(i_ae, mutual_info_ae(fidelity, n), "i_ae")
    })
}

/// `max(0, I_AB − I_AE)` at disturbance `d`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcfqkd_secret_rate_ideal(d: f64, n: u32, out: *mut f64) -> McfqkdStatus {
    guard(|| {
        let n = dim(n)?;
        if !d.is_finite() {
            return Err(bad("disturbance must be finite"));
        }
        put(out, secret_rate_ideal(d, n), "out")
    })
}

/// Simulates a session. `workers = 0` uses every core; the report does not
/// depend on the worker count.
///
/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcfqkd_simulate(
    config: *const McfqkdConfig,
    workers_: u32,
    out: *mut *mut McfqkdReport,
) -> McfqkdStatus {
    guard(|| {
        let proto = get(config, "config")?.inner.protocol();
        let report = match workers(workers_) {
            Some(w) => run_session_with_workers(&proto, w)?,
            None => run_session(&proto)?,
        };
        put(
            out,
            Box::into_raw(Box::new(McfqkdReport { inner: report })),
            "out",
        )
    })
}

fn class(c: McfqkdIntensity) -> IntensityClass {
    match c {
        McfqkdIntensity::Signal => IntensityClass::Signal,
        McfqkdIntensity::Decoy => IntensityClass::Decoy,
    }
}

/// Total sifted symbols and QBER of one intensity class. `qber` is NaN when
/// the class has no sifted symbols.
///
/// # Safety
/// `report` must be a live handle; `sifted` and `qber` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mcfqkd_report_class_totals(
    report: *const McfqkdReport,
    intensity: McfqkdIntensity,
    sifted: *mut u64,
    qber: *mut f64,
) -> McfqkdStatus {
    guard(|| {
        let t = get(report, "report")?.inner.totals.class(class(intensity));
        put(sifted, t.sifted, "sifted")?;
        put(qber, t.qber().unwrap_or(f64::NAN), "qber")
    })
}

/// Number of decoy windows in the session.
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcfqkd_report_decoy_windows(
    report: *const McfqkdReport,
    out: *mut usize,
) -> McfqkdStatus {
    guard(|| {
        put(
            out,
            get(report, "report")?.inner.totals.decoy_windows,
            "out",
        )
    })
}

/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcfqkd_report_bin_count(
    report: *const McfqkdReport,
    out: *mut usize,
) -> McfqkdStatus {
    guard(|| put(out, get(report, "report")?.inner.bins.len(), "out"))
}

/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcfqkd_report_bin(
    report: *const McfqkdReport,
    index: usize,
    out: *mut McfqkdBin,
) -> McfqkdStatus {
    guard(|| {
        let bins = &get(report, "report")?.inner.bins;
        let b = bins
            .get(index)
            .ok_or_else(|| bad(format!("bin {index} out of range ({} bins)", bins.len())))?;
        let row = McfqkdBin {
            time_s: b.time_s,
            intensity: match b.intensity_class {
                IntensityClass::Signal => McfqkdIntensity::Signal,
                IntensityClass::Decoy => McfqkdIntensity::Decoy,
            },
            pulses: b.pulses,
            sifted_count: b.sifted_count,
            errors: b.errors,
            qber: b.qber.unwrap_or(f64::NAN),
        };
        put(out, row, "out")
    })
}

/// Report as CSV (`time_s,qber,sifted_count,intensity_class`); free the
/// result with [`mcfqkd_string_free`].
///
/// # Safety
/// `report` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcfqkd_report_to_csv(
    report: *const McfqkdReport,
    out: *mut *mut c_char,
) -> McfqkdStatus {
    guard(|| {
        let text = output::session(&get(report, "report")?.inner, Format::Csv)?;
        put(out, into_c_string(text)?, "out")
    })
}

/// # Safety
/// `report` must come from this library; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn mcfqkd_report_free(report: *mut McfqkdReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

fn rate_mode(m: McfqkdKeyRateMode) -> KeyRateMode {
    match m {
        McfqkdKeyRateMode::Decoy => KeyRateMode::Decoy,
        McfqkdKeyRateMode::NoDecoy => KeyRateMode::NoDecoy,
    }
}

/// Key rate on `0, step_km, …, max_km` using the configuration's rate and
/// channel settings with dimension `n`.
///
/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcfqkd_keyrate(
    config: *const McfqkdConfig,
    mode: McfqkdKeyRateMode,
    n: u32,
    max_km: f64,
    step_km: f64,
    out: *mut *mut McfqkdCurve,
) -> McfqkdStatus {
    guard(|| {
        let mut params = get(config, "config")?.inner.rate_params();
        params.dim = dim(n)?;
        let curve = key_rate_vs_distance(&params, rate_mode(mode), max_km, step_km)?;
        put(
            out,
            Box::into_raw(Box::new(McfqkdCurve { inner: curve })),
            "out",
        )
    })
}

/// Distance where the key rate first vanishes, searched up to `max_km`.
///
/// # Safety
/// `config` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcfqkd_cutoff_distance(
    config: *const McfqkdConfig,
    mode: McfqkdKeyRateMode,
    n: u32,
    max_km: f64,
    out: *mut f64,
) -> McfqkdStatus {
    guard(|| {
        let mut params = get(config, "config")?.inner.rate_params();
        params.dim = dim(n)?;
        if !(max_km > 0.0) || !max_km.is_finite() {
            return Err(bad("max_km must be positive"));
        }
        put(
            out,
            cutoff_distance(&params, rate_mode(mode), max_km)?,
            "out",
        )
    })
}

/// # Safety
/// `curve` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mcfqkd_curve_len(
    curve: *const McfqkdCurve,
    out: *mut usize,
) -> McfqkdStatus {
    guard(|| put(out, get(curve, "curve")?.inner.points.len(), "out"))
}

/// # Safety
/// `curve` must be a live handle; `distance_km` and `rate` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn mcfqkd_curve_point(
    curve: *const McfqkdCurve,
    index: usize,
    distance_km: *mut f64,
    rate: *mut f64,
) -> McfqkdStatus {
    guard(|| {
        let points = &get(curve, "curve")?.inner.points;
        let p = points.get(index).ok_or_else(|| {
            bad(format!(
                "point {index} out of range ({} points)",
                points.len()
            ))
        })?;
        put(distance_km, p.distance_km, "distance_km")?;
        put(rate, p.rate_bits_per_pulse, "rate")
    })
}

/// # Safety
/// `curve` must come from this library; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn mcfqkd_curve_free(curve: *mut McfqkdCurve) {
    if !curve.is_null() {
        drop(Box::from_raw(curve));
    }
}

/// Fills `out[144]` row-major with the tomography matrix, rows and columns
/// ordered `M0_0 … M2_3`. `detections = 0` uses the configured budget.
///
/// # Safety
/// `config` must be a live handle and `out` must point to 144 doubles.
#[no_mangle]
pub unsafe extern "C" fn mcfqkd_tomography(
    config: *const McfqkdConfig,
    detections: u64,
    workers_: u32,
    out: *mut f64,
) -> McfqkdStatus {
    guard(|| {
        let cfg = &get(config, "config")?.inner;
        if out.is_null() {
            return Err(null("out"));
        }
        let n = if detections == 0 {
            cfg.tomography.detections_per_cell
        } else {
            detections
        };
        let proto = cfg.tomography_protocol();
        let m = match workers(workers_) {
            Some(w) => tomography_with_workers(&proto, n, w)?,
            None => tomography(&proto, n)?,
        };
        let flat: Vec<f64> = m.entries.iter().flatten().copied().collect();
        ptr::copy_nonoverlapping(flat.as_ptr(), out, flat.len());
        Ok(())
    })
}
