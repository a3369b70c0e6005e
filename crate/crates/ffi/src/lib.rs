//! C ABI over the hvsim simulator.
//!
//! Every object crosses the boundary as an opaque pointer owned by the
//! caller and released with its `_free` function. Fallible calls return an
//! [`HvsimStatus`]; the message of the most recent failure on the calling
//! thread is available from [`hvsim_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use hvsim::config::SimConfig;
use hvsim::guest::{Fixture, FixtureName};
use hvsim::runner::{run_compare, run_experiment, ProgramSource, RunOutcome, RunnerError};
use hvsim::stats::{render_report, render_stats, Format, Value};
use hvsim::trace::TraceRecord;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HvsimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Program = 4,
    LimitExhausted = 5,
    Parse = 6,
    Io = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HvsimFormat {
    Table = 0,
    Json = 1,
    Csv = 2,
}

impl From<HvsimFormat> for Format {
    fn from(f: HvsimFormat) -> Format {
        match f {
            HvsimFormat::Table => Format::Table,
            HvsimFormat::Json => Format::Json,
            HvsimFormat::Csv => Format::Csv,
        }
    }
}

/// Simulator configuration.
pub struct HvsimConfig(SimConfig);

/// Result of one completed run.
pub struct HvsimRun(RunOutcome);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(HvsimStatus, String);

impl From<RunnerError> for Failure {
    fn from(e: RunnerError) -> Self {
        let status = match &e {
            RunnerError::Config(_) | RunnerError::Usage(_) | RunnerError::Guest(_) => HvsimStatus::Config,
            RunnerError::Image { .. } | RunnerError::Asm { .. } | RunnerError::TraceFile { .. } => HvsimStatus::Parse,
            RunnerError::Io { .. } => HvsimStatus::Io,
            RunnerError::LimitExhausted { .. } => HvsimStatus::LimitExhausted,
            RunnerError::Program(_) | RunnerError::Timing(_) | RunnerError::Stats(_) => HvsimStatus::Program,
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> HvsimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HvsimStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside hvsim".into());
            HvsimStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(HvsimStatus::NullPointer, format!("{what} is NULL")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(HvsimStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure(HvsimStatus::NullPointer, format!("{what} is NULL")))
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

unsafe fn config_or_default(cfg: *const HvsimConfig) -> SimConfig {
    cfg.as_ref().map_or_else(SimConfig::default, |c| c.0.clone())
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hvsim_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Default configuration.
#[no_mangle]
pub extern "C" fn hvsim_config_new() -> *mut HvsimConfig {
    Box::into_raw(Box::new(HvsimConfig(SimConfig::default())))
}

/// Loads a `key = value` configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hvsim_config_load(path: *const c_char, out: *mut *mut HvsimConfig) -> HvsimStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let path = PathBuf::from(text(path, "path")?);
        let cfg = SimConfig::load(&path).map_err(|e| Failure::from(RunnerError::from(e)))?;
        *out = Box::into_raw(Box::new(HvsimConfig(cfg)));
        Ok(())
    })
}

/// Sets one configuration key and revalidates.
///
/// # Safety
/// `cfg` must come from this library; `key` and `value` must be
/// NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn hvsim_config_set(
    cfg: *mut HvsimConfig,
    key: *const c_char,
    value: *const c_char,
) -> HvsimStatus {
    guard(|| {
        let cfg = out_ptr(cfg, "cfg")?;
        let (key, value) = (text(key, "key")?, text(value, "value")?);
        let mut next = cfg.0.clone();
        next.set(key, value).map_err(|e| Failure::from(RunnerError::from(e)))?;
        next.validate().map_err(|e| Failure::from(RunnerError::from(e)))?;
        cfg.0 = next;
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn hvsim_config_free(cfg: *mut HvsimConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

unsafe fn run(
    cfg: *const HvsimConfig,
    source: ProgramSource,
    virtualized: bool,
    out: *mut *mut HvsimRun,
) -> Result<(), Failure> {
    let out = out_ptr(out, "out")?;
    let mut cfg = config_or_default(cfg);
    cfg.virtualized = virtualized;
    let outcome = run_experiment(&source, &cfg)?;
    *out = Box::into_raw(Box::new(HvsimRun(outcome)));
    Ok(())
}

fn fixture(name: &str) -> Result<Fixture, Failure> {
    let name: FixtureName =
        name.parse().map_err(|e: hvsim::guest::GuestError| Failure(HvsimStatus::Config, e.to_string()))?;
    Ok(Fixture::default_for(name))
}

/// Runs a bundled fixture (`"search"` or `"sort"`) with its default inputs.
/// A NULL `cfg` means the default configuration.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hvsim_run_fixture(
    cfg: *const HvsimConfig,
    name: *const c_char,
    virtualized: bool,
    out: *mut *mut HvsimRun,
) -> HvsimStatus {
    guard(|| run(cfg, ProgramSource::Fixture(fixture(text(name, "name")?)?), virtualized, out))
}

/// Runs a user program: an ELF file, a `.s` source or a `.layout` manifest.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hvsim_run_program(
    cfg: *const HvsimConfig,
    path: *const c_char,
    virtualized: bool,
    out: *mut *mut HvsimRun,
) -> HvsimStatus {
    guard(|| run(cfg, ProgramSource::Path(PathBuf::from(text(path, "path")?)), virtualized, out))
}

/// # Safety
/// `run` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn hvsim_run_free(run: *mut HvsimRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// # Safety
/// `run` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hvsim_run_cycles(run: *const HvsimRun) -> u64 {
    run.as_ref().map_or(0, |r| r.0.stats.cycles)
}

/// # Safety
/// `run` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hvsim_run_instret(run: *const HvsimRun) -> u64 {
    run.as_ref().map_or(0, |r| r.0.stats.instret)
}

/// # Safety
/// `run` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hvsim_run_cpi(run: *const HvsimRun) -> f64 {
    run.as_ref().map_or(0.0, |r| r.0.stats.cpi)
}

/// # Safety
/// `run` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hvsim_run_ipc(run: *const HvsimRun) -> f64 {
    run.as_ref().map_or(0.0, |r| r.0.stats.ipc)
}

/// Number of trace records the run produced.
///
/// # Safety
/// `run` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hvsim_run_trace_len(run: *const HvsimRun) -> usize {
    run.as_ref().map_or(0, |r| r.0.trace.len())
}

/// Reads a counter row by key, e.g. `"icache_miss_if"` or
/// `"total_dcache_misses"`.
///
/// # Safety
/// `run` must be a live handle, `key` a NUL-terminated string and `out` a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hvsim_run_counter(run: *const HvsimRun, key: *const c_char, out: *mut u64) -> HvsimStatus {
    guard(|| {
        let run = run.as_ref().ok_or_else(|| Failure(HvsimStatus::NullPointer, "run is NULL".into()))?;
        let key = text(key, "key")?;
        let out = out_ptr(out, "out")?;
        match run.0.stats.rows().into_iter().find(|r| r.key == key).map(|r| r.value) {
            Some(Value::Count(n)) => {
                *out = n;
                Ok(())
            }
            Some(Value::Ratio(_)) => Err(Failure(HvsimStatus::Config, format!("`{key}` is a ratio, not a counter"))),
            None => Err(Failure(HvsimStatus::Config, format!("unknown counter `{key}`"))),
        }
    })
}

/// Console bytes written by the guest. The buffer lives as long as `run`.
///
/// # Safety
/// `run` must be a live handle and `len` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hvsim_run_console(run: *const HvsimRun, len: *mut usize) -> *const u8 {
    match (run.as_ref(), len.as_mut()) {
        (Some(r), Some(len)) => {
            *len = r.0.console.len();
            r.0.console.as_ptr()
        }
        _ => ptr::null(),
    }
}

/// Renders the statistics block. Free the result with
/// [`hvsim_string_free`].
///
/// # Safety
/// `run` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hvsim_run_render(run: *const HvsimRun, format: HvsimFormat) -> *mut c_char {
    match run.as_ref() {
        Some(r) => owned_string(render_stats(&r.0.stats, format.into())),
        None => ptr::null_mut(),
    }
}

/// Runs a fixture in both modes and renders the overhead report into
/// `*out`. Free it with [`hvsim_string_free`].
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hvsim_compare_fixture(
    cfg: *const HvsimConfig,
    name: *const c_char,
    format: HvsimFormat,
    with_alt: bool,
    out: *mut *mut c_char,
) -> HvsimStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let source = ProgramSource::Fixture(fixture(text(name, "name")?)?);
        let cmp = run_compare(&source, &config_or_default(cfg))?;
        *out = owned_string(render_report(&cmp.report, format.into(), with_alt));
        Ok(())
    })
}

/// Parses one trace line and writes its canonical form into `*out`.
///
/// # Safety
/// `line` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn hvsim_trace_normalize(line: *const c_char, out: *mut *mut c_char) -> HvsimStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let rec = TraceRecord::parse(text(line, "line")?).map_err(|e| Failure(HvsimStatus::Parse, e.to_string()))?;
        *out = owned_string(rec.to_string());
        Ok(())
    })
}

/// Assembles `source` at `origin` into `words`. `*len` receives the word
/// count; if it exceeds `capacity` nothing is copied and the call returns
/// `BufferTooSmall`.
///
/// # Safety
/// `source` must be a NUL-terminated string, `len` a valid pointer and
/// `words` valid for `capacity` writes (or NULL when `capacity` is 0).
#[no_mangle]
pub unsafe extern "C" fn hvsim_assemble(
    source: *const c_char,
    origin: u32,
    words: *mut u32,
    capacity: usize,
    len: *mut usize,
) -> HvsimStatus {
    guard(|| {
        let len = out_ptr(len, "len")?;
        let blob = hvsim::asm::assemble(text(source, "source")?, origin)
            .map_err(|e| Failure(HvsimStatus::Parse, e.to_string()))?;
        *len = blob.words.len();
        if blob.words.len() > capacity {
            return Err(Failure(HvsimStatus::BufferTooSmall, format!("{} words needed", blob.words.len())));
        }
        if !blob.words.is_empty() {
            if words.is_null() {
                return Err(Failure(HvsimStatus::NullPointer, "words is NULL".into()));
            }
            ptr::copy_nonoverlapping(blob.words.as_ptr(), words, blob.words.len());
        }
        Ok(())
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn hvsim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
