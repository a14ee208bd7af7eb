//! C ABI over `netwave`.
//!
//! Scenarios and campaign results are opaque handles owned by the caller and
//! released with the matching `_free` function. Every fallible call returns an
//! [`NwStatus`]; on failure the message is available from
//! [`nw_last_error_message`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use netwave::harness::{load_scenario, run_campaign_with_powers, FrameRecord, Scenario};
use netwave::Error;

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Scenario = 4,
    Io = 5,
    Numerical = 6,
    OutOfRange = 7,
    Panic = 8,
}

/// Parsed and validated scenario.
pub struct NwScenario(Scenario);

/// Per-frame records of one campaign.
pub struct NwCampaign(Vec<FrameRecord>);

/// Scalar fields of one frame record.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NwFrameRecord {
    pub frame: usize,
    pub zeta: f64,
    pub pcrlb_trace: f64,
    pub crlb_x: f64,
    pub crlb_y: f64,
    pub crlb_vx: f64,
    pub crlb_vy: f64,
    /// 1 when the designed codes passed the per-frame gate.
    pub accepted: u8,
    pub iterations: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: NwStatus, msg: impl Into<String>) -> NwStatus {
    set_error(msg.into());
    status
}

fn status_of(e: &Error) -> NwStatus {
    match e.root() {
        Error::Scenario { .. } | Error::Parse(_) => NwStatus::Scenario,
        Error::Io(_) => NwStatus::Io,
        Error::InvalidArgument(_) | Error::Shape(_) => NwStatus::InvalidArgument,
        _ => NwStatus::Numerical,
    }
}

fn from_error(e: Error) -> NwStatus {
    let status = status_of(&e);
    fail(status, e.to_string())
}

/// Runs `f`, converting panics into [`NwStatus::Panic`].
fn guard(f: impl FnOnce() -> NwStatus) -> NwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(NwStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, NwStatus> {
    if s.is_null() {
        return Err(fail(NwStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(NwStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

/// Message of the last failure on this thread, or null if none. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nw_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Generalized Marcum Q function of integer order `order >= 1`.
///
/// # Safety
/// `out` must be null or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn nw_marcum_q(order: u32, a: f64, b: f64, out: *mut f64) -> NwStatus {
    guard(|| {
        if out.is_null() {
            return fail(NwStatus::NullPointer, "out is null");
        }
        match netwave::math::marcum_q(order, a, b) {
            Ok(q) => {
                *out = q;
                NwStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Detection probability at the given SINR and false-alarm probability.
///
/// # Safety
/// `out` must be null or point to writable memory for one `double`.
#[no_mangle]
pub unsafe extern "C" fn nw_detection_probability(sinr: f64, pfa: f64, out: *mut f64) -> NwStatus {
    guard(|| {
        if out.is_null() {
            return fail(NwStatus::NullPointer, "out is null");
        }
        match netwave::math::detection_probability(sinr, pfa) {
            Ok(p) => {
                *out = p;
                NwStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

unsafe fn store_scenario(result: netwave::Result<Scenario>, out: *mut *mut NwScenario) -> NwStatus {
    match result {
        Ok(s) => {
            *out = Box::into_raw(Box::new(NwScenario(s)));
            NwStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

/// Loads a scenario from a TOML file path or a built-in name.
///
/// # Safety
/// `source` must be null or a NUL-terminated string; `out` must be null or
/// point to writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn nw_scenario_load(
    source: *const c_char,
    out: *mut *mut NwScenario,
) -> NwStatus {
    guard(|| {
        if out.is_null() {
            return fail(NwStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        match read_str(source, "source") {
            Ok(path) => store_scenario(load_scenario(path), out),
            Err(s) => s,
        }
    })
}

/// Parses a scenario from TOML text.
///
/// # Safety
/// Same contract as [`nw_scenario_load`].
#[no_mangle]
pub unsafe extern "C" fn nw_scenario_from_toml(
    text: *const c_char,
    out: *mut *mut NwScenario,
) -> NwStatus {
    guard(|| {
        if out.is_null() {
            return fail(NwStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        match read_str(text, "text") {
            Ok(t) => store_scenario(Scenario::from_toml(t), out),
            Err(s) => s,
        }
    })
}

/// # Safety
/// `scenario` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nw_scenario_free(scenario: *mut NwScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nw_scenario_nodes(scenario: *const NwScenario) -> usize {
    scenario.as_ref().map_or(0, |s| s.0.nodes.len())
}

/// Number of frames, or 0 for a null handle.
///
/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nw_scenario_frames(scenario: *const NwScenario) -> usize {
    scenario.as_ref().map_or(0, |s| s.0.frames)
}

/// Overrides the frame count; `frames` must be at least 1.
///
/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nw_scenario_set_frames(
    scenario: *mut NwScenario,
    frames: usize,
) -> NwStatus {
    let Some(s) = scenario.as_mut() else {
        return fail(NwStatus::NullPointer, "scenario is null");
    };
    if frames == 0 {
        return fail(NwStatus::InvalidArgument, "frames must be at least 1");
    }
    s.0.frames = frames;
    NwStatus::Ok
}

/// Runs one campaign at similarity `zeta` (0 keeps the reference code).
///
/// # Safety
/// `scenario` must be null or a live handle; `out` must be null or point to
/// writable memory for one pointer.
#[no_mangle]
pub unsafe extern "C" fn nw_campaign_run(
    scenario: *const NwScenario,
    zeta: f64,
    out: *mut *mut NwCampaign,
) -> NwStatus {
    guard(|| {
        if out.is_null() {
            return fail(NwStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let Some(s) = scenario.as_ref() else {
            return fail(NwStatus::NullPointer, "scenario is null");
        };
        match run_campaign_with_powers(&s.0, zeta, &s.0.target_powers()) {
            Ok(c) => {
                *out = Box::into_raw(Box::new(NwCampaign(c.records)));
                NwStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `campaign` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nw_campaign_free(campaign: *mut NwCampaign) {
    if !campaign.is_null() {
        drop(Box::from_raw(campaign));
    }
}

/// Number of frame records, or 0 for a null handle.
///
/// # Safety
/// `campaign` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nw_campaign_len(campaign: *const NwCampaign) -> usize {
    campaign.as_ref().map_or(0, |c| c.0.len())
}

unsafe fn record_at<'a>(
    campaign: *const NwCampaign,
    index: usize,
) -> Result<&'a FrameRecord, NwStatus> {
    let c = campaign
        .as_ref()
        .ok_or_else(|| fail(NwStatus::NullPointer, "campaign is null"))?;
    c.0.get(index).ok_or_else(|| {
        fail(
            NwStatus::OutOfRange,
            format!("frame index {index} of {}", c.0.len()),
        )
    })
}

/// Scalar fields of record `index` (0-based).
///
/// # Safety
/// `campaign` must be null or a live handle; `out` must be null or point to
/// one writable `NwFrameRecord`.
#[no_mangle]
pub unsafe extern "C" fn nw_campaign_frame(
    campaign: *const NwCampaign,
    index: usize,
    out: *mut NwFrameRecord,
) -> NwStatus {
    if out.is_null() {
        return fail(NwStatus::NullPointer, "out is null");
    }
    match record_at(campaign, index) {
        Ok(r) => {
            *out = NwFrameRecord {
                frame: r.frame,
                zeta: r.zeta,
                pcrlb_trace: r.pcrlb_trace,
                crlb_x: r.crlb_x,
                crlb_y: r.crlb_y,
                crlb_vx: r.crlb_vx,
                crlb_vy: r.crlb_vy,
                accepted: u8::from(r.accepted),
                iterations: r.iterations,
            };
            NwStatus::Ok
        }
        Err(s) => s,
    }
}

/// Detection probability of node `node` (0-based) in record `index`, with
/// the SINR-benchmark value alongside.
///
/// # Safety
/// `campaign` must be null or a live handle; `pd` and `pd_bench` must be null
/// or point to one writable `double` each.
#[no_mangle]
pub unsafe extern "C" fn nw_campaign_detection(
    campaign: *const NwCampaign,
    index: usize,
    node: usize,
    pd: *mut f64,
    pd_bench: *mut f64,
) -> NwStatus {
    if pd.is_null() || pd_bench.is_null() {
        return fail(NwStatus::NullPointer, "output pointer is null");
    }
    match record_at(campaign, index) {
        Ok(r) => match (r.pd.get(node), r.pd_bench.get(node)) {
            (Some(p), Some(b)) => {
                *pd = *p;
                *pd_bench = *b;
                NwStatus::Ok
            }
            _ => fail(
                NwStatus::OutOfRange,
                format!("node index {node} of {}", r.pd.len()),
            ),
        },
        Err(s) => s,
    }
}
