//! C ABI for the stream monitor.
//!
//! A monitor is an opaque handle created by [`panemon_monitor_new`] and
//! released with [`panemon_monitor_free`]. Events are assembled with
//! [`panemon_begin_event`] and the `panemon_set_*` functions, then processed by
//! [`panemon_commit_event`]. Verdicts accumulate inside the monitor until
//! collected as JSON lines with [`panemon_take_verdicts`].
//!
//! Every fallible function returns a [`PanemonStatus`]. The message of the most
//! recent failure on the calling thread is available from
//! [`panemon_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use panemon::analysis::{analyze, AnalysisOptions};
use panemon::engine::{EngineError, Event, Mode, Monitor, MonitorConfig, Verdict};
use panemon::parser::parse_frequency;
use panemon::time::Time;
use panemon::value::Value;
use panemon::{compile, SpecError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PanemonStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    SpecError = 3,
    /// Memory cannot be bounded statically.
    Unbounded = 4,
    UnknownInput = 5,
    TypeMismatch = 6,
    OutOfOrder = 7,
    /// A value was set or an event committed without a pending event.
    NoPendingEvent = 8,
    InvalidArgument = 9,
    Internal = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PanemonMode {
    Variable = 0,
    Fixed = 1,
}

/// Opaque monitor handle.
pub struct PanemonMonitor {
    monitor: Monitor,
    pending: Option<Event>,
    verdicts: Vec<Verdict>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn fail(status: PanemonStatus, message: impl Into<String>) -> PanemonStatus {
    let text = CString::new(message.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
    status
}

fn guard(f: impl FnOnce() -> PanemonStatus) -> PanemonStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(PanemonStatus::Internal, "internal error"))
}

/// # Safety
/// `s` must be null or point to a NUL-terminated string.
unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, PanemonStatus> {
    if s.is_null() {
        return Err(fail(PanemonStatus::NullArgument, "null string argument"));
    }
    CStr::from_ptr(s).to_str().map_err(|_| fail(PanemonStatus::InvalidUtf8, "string argument is not valid UTF-8"))
}

fn engine_status(err: &EngineError) -> PanemonStatus {
    let status = match err {
        EngineError::OutOfOrderEvent { .. } | EngineError::NegativeTimestamp(_) => PanemonStatus::OutOfOrder,
        EngineError::UnknownInputStream(_) => PanemonStatus::UnknownInput,
        EngineError::InputType { .. } => PanemonStatus::TypeMismatch,
        EngineError::AnalysisRefusal { .. } => PanemonStatus::Unbounded,
        EngineError::Analysis(_) => PanemonStatus::SpecError,
        EngineError::Window(_) => PanemonStatus::Internal,
    };
    fail(status, err.to_string())
}

fn spec_status(source: &str, err: &SpecError) -> PanemonStatus {
    fail(PanemonStatus::SpecError, err.render(source))
}

fn into_c_string(text: String, out: *mut *mut c_char) -> PanemonStatus {
    match CString::new(text) {
        Ok(c) => {
            // SAFETY: callers check `out` for null before calling.
            unsafe { *out = c.into_raw() };
            PanemonStatus::Ok
        }
        Err(_) => fail(PanemonStatus::Internal, "output contains a NUL byte"),
    }
}

/// Compiles `spec` and creates a monitor.
///
/// `frequency` is the clock of unclocked outputs in fixed mode (for example
/// `"1Hz"`) and must be null in variable mode.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn panemon_monitor_new(
    spec: *const c_char,
    mode: PanemonMode,
    frequency: *const c_char,
    allow_unbounded: bool,
    out: *mut *mut PanemonMonitor,
) -> PanemonStatus {
    guard(|| {
        if out.is_null() {
            return fail(PanemonStatus::NullArgument, "null output pointer");
        }
        let source = match read_str(spec) {
            Ok(s) => s,
            Err(status) => return status,
        };
        let mode = match (mode, frequency.is_null()) {
            (PanemonMode::Variable, true) => Mode::Variable,
            (PanemonMode::Variable, false) => {
                return fail(PanemonStatus::InvalidArgument, "a frequency only applies to fixed mode")
            }
            (PanemonMode::Fixed, true) => return fail(PanemonStatus::InvalidArgument, "fixed mode needs a frequency"),
            (PanemonMode::Fixed, false) => {
                let text = match read_str(frequency) {
                    Ok(s) => s,
                    Err(status) => return status,
                };
                match parse_frequency(text) {
                    Ok(freq) => Mode::Fixed(freq),
                    Err(message) => return fail(PanemonStatus::InvalidArgument, message),
                }
            }
        };
        let typed = match compile(source) {
            Ok(typed) => typed,
            Err(err) => return spec_status(source, &err),
        };
        let config = MonitorConfig { mode, allow_unbounded, analysis: AnalysisOptions::default() };
        match Monitor::new(&typed, &config) {
            Ok(monitor) => {
                let handle = Box::new(PanemonMonitor { monitor, pending: None, verdicts: Vec::new() });
                *out = Box::into_raw(handle);
                PanemonStatus::Ok
            }
            Err(err) => engine_status(&err),
        }
    })
}

/// # Safety
/// `monitor` must be null or a handle from [`panemon_monitor_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn panemon_monitor_free(monitor: *mut PanemonMonitor) {
    if !monitor.is_null() {
        drop(Box::from_raw(monitor));
    }
}

/// Runs `f` on the handle, mapping a null handle to an error.
///
/// # Safety
/// `monitor` must be null or a live handle.
unsafe fn with_monitor(monitor: *mut PanemonMonitor, f: impl FnOnce(&mut PanemonMonitor) -> PanemonStatus) -> PanemonStatus {
    match monitor.as_mut() {
        Some(m) => guard(|| f(m)),
        None => fail(PanemonStatus::NullArgument, "null monitor handle"),
    }
}

/// Starts a new event at `ts_seconds`, discarding any uncommitted one.
///
/// # Safety
/// `monitor` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn panemon_begin_event(monitor: *mut PanemonMonitor, ts_seconds: f64) -> PanemonStatus {
    with_monitor(monitor, |m| {
        if !ts_seconds.is_finite() || ts_seconds < 0.0 {
            return fail(PanemonStatus::InvalidArgument, "timestamp must be a non-negative number of seconds");
        }
        m.pending = Some(Event::new(Time::from_secs_f64(ts_seconds)));
        PanemonStatus::Ok
    })
}

/// # Safety
/// `monitor` must be a live handle and `input` NUL-terminated.
unsafe fn set_value(monitor: *mut PanemonMonitor, input: *const c_char, value: Value) -> PanemonStatus {
    with_monitor(monitor, |m| {
        let name = match read_str(input) {
            Ok(s) => s,
            Err(status) => return status,
        };
        let index = match m.monitor.input_index(name) {
            Ok(i) => i,
            Err(err) => return engine_status(&err),
        };
        let expected = m.monitor.spec().inputs[index].ty;
        let Some(value) = value.coerce(expected) else {
            return fail(PanemonStatus::TypeMismatch, format!("input `{name}` expects a {expected} value"));
        };
        match m.pending.as_mut() {
            Some(event) => {
                event.values.retain(|(i, _)| *i != index);
                event.values.push((index, value));
                PanemonStatus::Ok
            }
            None => fail(PanemonStatus::NoPendingEvent, "no event has been started"),
        }
    })
}

/// # Safety
/// `monitor` must be a live handle and `input` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn panemon_set_bool(monitor: *mut PanemonMonitor, input: *const c_char, value: bool) -> PanemonStatus {
    set_value(monitor, input, Value::Bool(value))
}

/// # Safety
/// `monitor` must be a live handle and `input` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn panemon_set_int(monitor: *mut PanemonMonitor, input: *const c_char, value: i64) -> PanemonStatus {
    set_value(monitor, input, Value::Int(value))
}

/// # Safety
/// `monitor` must be a live handle and `input` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn panemon_set_double(monitor: *mut PanemonMonitor, input: *const c_char, value: f64) -> PanemonStatus {
    if !value.is_finite() {
        return fail(PanemonStatus::InvalidArgument, "value must be finite");
    }
    set_value(monitor, input, Value::Double(value))
}

/// Processes the clock ticks up to the pending event, then the event.
///
/// # Safety
/// `monitor` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn panemon_commit_event(monitor: *mut PanemonMonitor) -> PanemonStatus {
    with_monitor(monitor, |m| {
        let Some(event) = m.pending.take() else {
            return fail(PanemonStatus::NoPendingEvent, "no event has been started");
        };
        match m.monitor.process(&event) {
            Ok(verdicts) => {
                m.verdicts.extend(verdicts);
                PanemonStatus::Ok
            }
            Err(err) => engine_status(&err),
        }
    })
}

/// Processes the clock ticks up to and including `ts_seconds`.
///
/// # Safety
/// `monitor` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn panemon_advance(monitor: *mut PanemonMonitor, ts_seconds: f64) -> PanemonStatus {
    with_monitor(monitor, |m| {
        if !ts_seconds.is_finite() || ts_seconds < 0.0 {
            return fail(PanemonStatus::InvalidArgument, "timestamp must be a non-negative number of seconds");
        }
        match m.monitor.advance_to(Time::from_secs_f64(ts_seconds)) {
            Ok(verdicts) => {
                m.verdicts.extend(verdicts);
                PanemonStatus::Ok
            }
            Err(err) => engine_status(&err),
        }
    })
}

/// Moves the collected verdicts out as newline-terminated JSON records.
/// Free the string with [`panemon_string_free`].
///
/// # Safety
/// `monitor` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn panemon_take_verdicts(monitor: *mut PanemonMonitor, out: *mut *mut c_char) -> PanemonStatus {
    with_monitor(monitor, |m| {
        if out.is_null() {
            return fail(PanemonStatus::NullArgument, "null output pointer");
        }
        let text: String = m.verdicts.drain(..).map(|v| v.to_json_line() + "\n").collect();
        into_c_string(text, out)
    })
}

/// Highest number of value-slots retained so far.
///
/// # Safety
/// `monitor` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn panemon_peak_slots(monitor: *mut PanemonMonitor, out: *mut u64) -> PanemonStatus {
    with_monitor(monitor, |m| {
        if out.is_null() {
            return fail(PanemonStatus::NullArgument, "null output pointer");
        }
        *out = m.monitor.stats().peak_slots as u64;
        PanemonStatus::Ok
    })
}

/// Analyzes `spec` and writes the memory report as JSON to `out`.
/// Returns `Unbounded` (with the report written) when memory cannot be bounded.
///
/// # Safety
/// `spec` must be NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn panemon_analyze_json(spec: *const c_char, out: *mut *mut c_char) -> PanemonStatus {
    guard(|| {
        if out.is_null() {
            return fail(PanemonStatus::NullArgument, "null output pointer");
        }
        let source = match read_str(spec) {
            Ok(s) => s,
            Err(status) => return status,
        };
        let typed = match compile(source) {
            Ok(typed) => typed,
            Err(err) => return spec_status(source, &err),
        };
        let analysis = match analyze(&typed, &AnalysisOptions::default()) {
            Ok(analysis) => analysis,
            Err(err) => return fail(PanemonStatus::SpecError, err.to_string()),
        };
        let json = match serde_json::to_string(&analysis.report) {
            Ok(json) => json,
            Err(err) => return fail(PanemonStatus::Internal, err.to_string()),
        };
        match into_c_string(json, out) {
            PanemonStatus::Ok if !analysis.report.total.is_bounded() => PanemonStatus::Unbounded,
            status => status,
        }
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn panemon_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn panemon_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}
