//! C ABI over `specvar`.
//!
//! Every fallible function returns a [`SpecvarStatus`] and writes its result
//! through an out-pointer. On failure the message is available from
//! [`specvar_last_error`] on the same thread. Handles are opaque and owned by
//! the caller, who releases them with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use specvar::generators::{aes_ctr_bits, inject_periodic, mt19937_bits, PeriodicDefect};
use specvar::harness::{run_batch, run_detection_sweep, ExperimentReport, ReportFormat, Settings};
use specvar::{BitFormat, BitSequence, Error, Probability, SecondLevelReport, TestKind};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecvarStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad parameter or configuration.
    InvalidArgument = 2,
    /// Malformed or unsuitable bit data.
    InvalidData = 3,
    Io = 4,
    /// A Rust panic was caught at the boundary.
    Internal = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecvarTest {
    Original = 0,
    Kim = 1,
    Pareschi = 2,
    Proposed = 3,
}

impl From<SpecvarTest> for TestKind {
    fn from(t: SpecvarTest) -> Self {
        match t {
            SpecvarTest::Original => TestKind::Original,
            SpecvarTest::Kim => TestKind::Kim,
            SpecvarTest::Pareschi => TestKind::Pareschi,
            SpecvarTest::Proposed => TestKind::Proposed,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecvarReportFormat {
    Csv = 0,
    Json = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SpecvarOutcome {
    pub statistic: f64,
    pub pvalue: f64,
    pub n: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SpecvarSecondLevel {
    pub m: usize,
    pub r: usize,
    pub proportion_pass: bool,
    pub chi2: f64,
    pub p_uniform: f64,
    pub uniformity_pass: bool,
}

/// Packed bit sequence.
pub struct SpecvarBits(BitSequence);

/// Result of an experiment run.
pub struct SpecvarReport(ExperimentReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SpecvarStatus {
    match e {
        Error::Io(_) | Error::File { .. } => SpecvarStatus::Io,
        Error::EmptySequence
        | Error::Truncated { .. }
        | Error::InvalidSymbol { .. }
        | Error::OddLength { .. }
        | Error::TooShort { .. }
        | Error::TooLarge { .. } => SpecvarStatus::InvalidData,
        _ => SpecvarStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), SpecvarStatus>) -> SpecvarStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SpecvarStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal error: {msg}"));
            SpecvarStatus::Internal
        }
    }
}

fn fail(e: Error) -> SpecvarStatus {
    let status = status_of(&e);
    set_last_error(e.to_string());
    status
}

fn null(what: &str) -> SpecvarStatus {
    set_last_error(format!("{what} is null"));
    SpecvarStatus::NullPointer
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), SpecvarStatus> {
    if out.is_null() {
        return Err(null("out"));
    }
    out.write(value);
    Ok(())
}

unsafe fn bits_ref<'a>(bits: *const SpecvarBits) -> Result<&'a BitSequence, SpecvarStatus> {
    bits.as_ref().map(|b| &b.0).ok_or_else(|| null("bits"))
}

fn boxed_bits(bits: BitSequence) -> *mut SpecvarBits {
    Box::into_raw(Box::new(SpecvarBits(bits)))
}

/// Message of the last failure on this thread, or NULL. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn specvar_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn specvar_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses ASCII '0'/'1' text; whitespace is ignored.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn specvar_bits_from_ascii(text: *const c_char, out: *mut *mut SpecvarBits) -> SpecvarStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        let bytes = CStr::from_ptr(text).to_bytes();
        let bits = specvar::bitseq::parse_all_bits(bytes, BitFormat::Ascii).map_err(fail)?;
        write_out(out, boxed_bits(bits))
    })
}

/// First `n_bits` bits of `data`, MSB first within each byte.
///
/// # Safety
/// `data` must point to at least `len` readable bytes and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn specvar_bits_from_bytes(
    data: *const u8,
    len: usize,
    n_bits: usize,
    out: *mut *mut SpecvarBits,
) -> SpecvarStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        let bytes = std::slice::from_raw_parts(data, len);
        let bits = BitSequence::from_msb_bytes(bytes, n_bits).map_err(fail)?;
        write_out(out, boxed_bits(bits))
    })
}

/// `n` bits of MT19937 output for `seed`, MSB first per 32-bit word.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn specvar_generate_mt(seed: u32, n: usize, out: *mut *mut SpecvarBits) -> SpecvarStatus {
    guard(|| {
        let bits = mt19937_bits(seed, n).map_err(fail)?;
        write_out(out, boxed_bits(bits))
    })
}

/// `n` bits of AES-128 counter-mode keystream. `counter` is the first
/// 128-bit block, big-endian.
///
/// # Safety
/// `key` and `counter` must each point to 16 readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn specvar_generate_aes(
    key: *const u8,
    counter: *const u8,
    n: usize,
    out: *mut *mut SpecvarBits,
) -> SpecvarStatus {
    guard(|| {
        if key.is_null() || counter.is_null() {
            return Err(null("key/counter"));
        }
        let key: [u8; 16] = std::slice::from_raw_parts(key, 16).try_into().expect("16 bytes");
        let ctr: [u8; 16] = std::slice::from_raw_parts(counter, 16).try_into().expect("16 bytes");
        let bits = aes_ctr_bits(key, u128::from_be_bytes(ctr), n).map_err(fail)?;
        write_out(out, boxed_bits(bits))
    })
}

/// Number of bits, or 0 for NULL.
///
/// # Safety
/// `bits` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn specvar_bits_len(bits: *const SpecvarBits) -> usize {
    bits.as_ref().map_or(0, |b| b.0.len())
}

/// Copies the packed MSB-first bytes of `bits` into `buf`. The padding bits
/// of the last byte are zero. `written` receives the byte count, which is
/// `ceil(len / 8)`; `buf_len` smaller than that fails with
/// `SPECVAR_STATUS_INVALID_ARGUMENT`.
///
/// # Safety
/// `bits` must be a live handle, `buf` must have `buf_len` writable bytes and
/// `written` be writable.
#[no_mangle]
pub unsafe extern "C" fn specvar_bits_to_bytes(
    bits: *const SpecvarBits,
    buf: *mut u8,
    buf_len: usize,
    written: *mut usize,
) -> SpecvarStatus {
    guard(|| {
        let bytes = bits_ref(bits)?.as_bytes();
        if buf.is_null() {
            return Err(null("buf"));
        }
        if buf_len < bytes.len() {
            set_last_error(format!("buffer of {buf_len} bytes, need {}", bytes.len()));
            return Err(SpecvarStatus::InvalidArgument);
        }
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len());
        write_out(written, bytes.len())
    })
}

/// Copy of `bits` with the period-`period` defect applied.
///
/// # Safety
/// `bits` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn specvar_bits_inject_periodic(
    bits: *const SpecvarBits,
    period: usize,
    out: *mut *mut SpecvarBits,
) -> SpecvarStatus {
    guard(|| {
        let x = bits_ref(bits)?;
        let defect = PeriodicDefect::new(period).map_err(fail)?;
        let y = inject_periodic(&x.to_pm1(), defect).map_err(fail)?;
        write_out(out, boxed_bits(y.to_bits()))
    })
}

/// # Safety
/// `bits` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn specvar_bits_free(bits: *mut SpecvarBits) {
    if !bits.is_null() {
        drop(Box::from_raw(bits));
    }
}

/// Runs one first-level test on `bits`.
///
/// # Safety
/// `bits` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn specvar_test(
    bits: *const SpecvarBits,
    test: SpecvarTest,
    out: *mut SpecvarOutcome,
) -> SpecvarStatus {
    guard(|| {
        let x = bits_ref(bits)?;
        let kind = TestKind::from(test);
        let spectrum = specvar::spectral::dft_power(&x.to_pm1(), true).map_err(fail)?;
        let o = kind.evaluate(&spectrum).map_err(fail)?;
        write_out(
            out,
            SpecvarOutcome {
                statistic: o.statistic,
                pvalue: o.pvalue.value(),
                n: o.n,
            },
        )
    })
}

/// Proportion and uniformity tests over `len` p-values.
///
/// # Safety
/// `pvalues` must point to `len` readable doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn specvar_second_level(
    pvalues: *const f64,
    len: usize,
    out: *mut SpecvarSecondLevel,
) -> SpecvarStatus {
    guard(|| {
        if pvalues.is_null() {
            return Err(null("pvalues"));
        }
        let ps = std::slice::from_raw_parts(pvalues, len)
            .iter()
            .map(|&p| Probability::new(p))
            .collect::<Result<Vec<_>, _>>()
            .map_err(fail)?;
        let r = SecondLevelReport::evaluate(&ps).map_err(fail)?;
        write_out(
            out,
            SpecvarSecondLevel {
                m: r.m,
                r: r.r,
                proportion_pass: r.proportion_pass,
                chi2: r.chi2_stat,
                p_uniform: r.p_uniform.value(),
                uniformity_pass: r.uniformity_pass,
            },
        )
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn specvar_erfc(z: f64, out: *mut f64) -> SpecvarStatus {
    guard(|| write_out(out, specvar::specialfns::erfc(z).map_err(fail)?))
}

/// Upper tail of the chi-square distribution with `dof` degrees of freedom.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn specvar_chi2_sf(stat: f64, dof: u32, out: *mut f64) -> SpecvarStatus {
    guard(|| write_out(out, specvar::specialfns::chi2_sf(stat, dof).map_err(fail)?.value()))
}

/// Runs an experiment described by TOML text whose keys are the CLI flag
/// names. `sweep` non-zero selects the defect sweep (exp2), zero the batch
/// run (exp1). Output paths in the config are ignored.
///
/// # Safety
/// `config` must be a valid NUL-terminated UTF-8 string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn specvar_experiment_run(
    config: *const c_char,
    sweep: c_int,
    out: *mut *mut SpecvarReport,
) -> SpecvarStatus {
    guard(|| {
        if config.is_null() {
            return Err(null("config"));
        }
        let text = CStr::from_ptr(config)
            .to_str()
            .map_err(|_| fail(Error::Config("config is not UTF-8".into())))?;
        let settings = Settings::from_toml_str(text).map_err(fail)?;
        let mut cfg = settings.experiment(sweep != 0).map_err(fail)?;
        cfg.output = None;
        let report = if sweep != 0 {
            run_detection_sweep(&cfg)
        } else {
            run_batch(&cfg)
        }
        .map_err(fail)?;
        write_out(out, Box::into_raw(Box::new(SpecvarReport(report))))
    })
}

/// Serializes a report. The string is released with [`specvar_string_free`].
///
/// # Safety
/// `report` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn specvar_report_to_string(
    report: *const SpecvarReport,
    format: SpecvarReportFormat,
    out: *mut *mut c_char,
) -> SpecvarStatus {
    guard(|| {
        let report = report.as_ref().ok_or_else(|| null("report"))?;
        let format = match format {
            SpecvarReportFormat::Csv => ReportFormat::Csv,
            SpecvarReportFormat::Json => ReportFormat::Json,
        };
        let mut buf = Vec::new();
        report.0.write(format, &mut buf).map_err(fail)?;
        let s = CString::new(buf).map_err(|_| fail(Error::Config("report contains NUL".into())))?;
        write_out(out, s.into_raw())
    })
}

/// Number of sets (in the sweep: sets per period) rejected by at least one
/// criterion for `test`, or `SIZE_MAX` if the report has no such entry.
///
/// # Safety
/// `report` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn specvar_report_total_rejections(
    report: *const SpecvarReport,
    test: SpecvarTest,
    period: usize,
) -> usize {
    let Some(report) = report.as_ref() else { return usize::MAX };
    let kind = TestKind::from(test);
    let period = (period != 0).then_some(period);
    report.0.summary(kind, period).map_or(usize::MAX, |s| s.total_rejections)
}

/// # Safety
/// `report` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn specvar_report_free(report: *mut SpecvarReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn specvar_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
