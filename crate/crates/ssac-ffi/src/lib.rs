//! C ABI for the community-search library.
//!
//! Bundles are opaque handles created by [`ssac_bundle_load`] and released
//! by [`ssac_bundle_free`]. Query parameters and results cross the boundary
//! as JSON strings (schema in `include/ssac.h`), keeping the ABI small.
//! Every function returns a status code; on failure a thread-local message
//! is readable through [`ssac_last_error`]. Strings returned by this
//! library are freed with [`ssac_string_free`].

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use ssac::cli::{run_query, Algo, CliError, ErrorCategory, QueryConfig};
use ssac::dataio::{load_bundle, LoadedBundle};
use ssac::model::{Query, RoadNodeId, SocialNodeId};
use ssac::routing::{td_shortest_time, HeuristicMode, WeightPolicy};

/// Status codes returned by every entry point. Zero is success; the
/// nonzero codes match the CLI exit codes, with two FFI-specific additions.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsacStatus {
    Ok = 0,
    Usage = 1,
    Io = 2,
    Validation = 3,
    NoCommunity = 4,
    CapExceeded = 5,
    /// Null pointer or malformed UTF-8/JSON argument.
    InvalidArgument = 6,
    /// An internal panic was caught; the handle remains usable.
    Internal = 7,
}

/// Opaque bundle handle: a loaded network plus its embedding store.
pub struct SsacBundle {
    inner: LoadedBundle,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(category: ErrorCategory) -> SsacStatus {
    match category {
        ErrorCategory::Usage => SsacStatus::Usage,
        ErrorCategory::Io => SsacStatus::Io,
        ErrorCategory::Validation => SsacStatus::Validation,
        ErrorCategory::NoCommunity => SsacStatus::NoCommunity,
        ErrorCategory::CapExceeded => SsacStatus::CapExceeded,
    }
}

fn fail(e: &CliError) -> SsacStatus {
    set_error(&e.to_string());
    status_of(e.category)
}

fn guard(body: impl FnOnce() -> SsacStatus) -> SsacStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "internal panic".to_string());
            set_error(&msg);
            SsacStatus::Internal
        }
    }
}

/// # Safety
/// `ptr` must be null or a valid NUL-terminated string.
unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, SsacStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(SsacStatus::InvalidArgument);
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        SsacStatus::InvalidArgument
    })
}

fn give_string(out: *mut *mut c_char, text: String) -> SsacStatus {
    let c = match CString::new(text) {
        Ok(c) => c,
        Err(_) => {
            set_error("result contained an interior NUL byte");
            return SsacStatus::Internal;
        }
    };
    unsafe { *out = c.into_raw() };
    SsacStatus::Ok
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn ssac_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message describing the most recent failure on this thread; valid until
/// the next failing call. Do not free.
#[no_mangle]
pub extern "C" fn ssac_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Free a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a pointer previously returned by a `ssac_*` function
/// that allocates, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ssac_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Load a bundle directory into an opaque handle. On success writes the
/// handle to `out` and returns `Ok`.
///
/// # Safety
/// `dir` must be a valid NUL-terminated path string and `out` a valid
/// pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn ssac_bundle_load(
    dir: *const c_char,
    out: *mut *mut SsacBundle,
) -> SsacStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return SsacStatus::InvalidArgument;
        }
        let dir = match unsafe { read_str(dir) } {
            Ok(s) => s,
            Err(status) => return status,
        };
        match load_bundle(dir) {
            Ok(inner) => {
                let handle = Box::new(SsacBundle { inner });
                unsafe { *out = Box::into_raw(handle) };
                SsacStatus::Ok
            }
            Err(e) => fail(&e.into()),
        }
    })
}

/// Release a bundle handle. Null is ignored.
///
/// # Safety
/// `bundle` must be null or a handle from [`ssac_bundle_load`], not yet
/// freed, with no other references in flight.
#[no_mangle]
pub unsafe extern "C" fn ssac_bundle_free(bundle: *mut SsacBundle) {
    if !bundle.is_null() {
        drop(unsafe { Box::from_raw(bundle) });
    }
}

/// Counts of the loaded networks.
///
/// # Safety
/// `bundle` must be a live handle; output pointers may be null to skip.
#[no_mangle]
pub unsafe extern "C" fn ssac_bundle_counts(
    bundle: *const SsacBundle,
    social_nodes: *mut u64,
    social_edges: *mut u64,
    road_nodes: *mut u64,
) -> SsacStatus {
    guard(|| {
        if bundle.is_null() {
            set_error("null bundle handle");
            return SsacStatus::InvalidArgument;
        }
        let net = unsafe { &(*bundle).inner.net };
        if !social_nodes.is_null() {
            unsafe { *social_nodes = net.social.node_count() as u64 };
        }
        if !social_edges.is_null() {
            unsafe { *social_edges = net.social.edge_count() as u64 };
        }
        if !road_nodes.is_null() {
            unsafe { *road_nodes = net.road.node_count() as u64 };
        }
        SsacStatus::Ok
    })
}

fn heuristic_from(code: i32) -> Result<HeuristicMode, SsacStatus> {
    match code {
        0 => Ok(HeuristicMode::Paper),
        1 => Ok(HeuristicMode::Admissible),
        2 => Ok(HeuristicMode::None),
        other => {
            set_error(&format!(
                "unknown heuristic code {other}; expected 0 (paper), 1 (admissible), 2 (none)"
            ));
            Err(SsacStatus::InvalidArgument)
        }
    }
}

/// Shortest travel time in minutes from road node `src` to `dst` departing
/// at `depart`, written to `out_minutes`. `heuristic`: 0 paper,
/// 1 admissible, 2 none. `fixed_departure` non-zero evaluates every edge at
/// the departure time.
///
/// # Safety
/// `bundle` must be a live handle and `out_minutes` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ssac_travel_time(
    bundle: *const SsacBundle,
    src: u64,
    dst: u64,
    depart: f64,
    heuristic: i32,
    fixed_departure: i32,
    out_minutes: *mut f64,
) -> SsacStatus {
    guard(|| {
        if bundle.is_null() || out_minutes.is_null() {
            set_error("null pointer argument");
            return SsacStatus::InvalidArgument;
        }
        let mode = match heuristic_from(heuristic) {
            Ok(m) => m,
            Err(status) => return status,
        };
        let policy = if fixed_departure != 0 {
            WeightPolicy::FixedDeparture
        } else {
            WeightPolicy::ArrivalTime
        };
        let net = unsafe { &(*bundle).inner.net };
        match td_shortest_time(&net.road, RoadNodeId(src), RoadNodeId(dst), depart, mode, policy) {
            Ok(route) => {
                unsafe { *out_minutes = route.travel_time };
                SsacStatus::Ok
            }
            Err(e) => fail(&e.into()),
        }
    })
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryParams {
    #[serde(default = "default_algo")]
    algo: String,
    q: u64,
    k: u32,
    kw: Vec<String>,
    lq: u64,
    #[serde(default)]
    t: f64,
    #[serde(default = "default_heuristic")]
    heuristic: String,
    #[serde(default)]
    fixed_departure_weights: bool,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    max_candidates: Option<usize>,
    #[serde(default)]
    max_size: Option<usize>,
    #[serde(default)]
    init_cap: Option<usize>,
    #[serde(default)]
    round_cap: Option<usize>,
    #[serde(default)]
    baseline_size: Option<usize>,
}

fn default_algo() -> String {
    "gssac".to_string()
}

fn default_heuristic() -> String {
    "admissible".to_string()
}

/// Run one community search. `params_json` follows the schema documented in
/// the header; the result (members, objectives, metrics) is returned as a
/// JSON string in `out_json`, to be freed with [`ssac_string_free`].
///
/// # Safety
/// `bundle` must be a live handle, `params_json` a valid NUL-terminated
/// string, and `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ssac_query(
    bundle: *const SsacBundle,
    params_json: *const c_char,
    out_json: *mut *mut c_char,
) -> SsacStatus {
    guard(|| {
        if bundle.is_null() || out_json.is_null() {
            set_error("null pointer argument");
            return SsacStatus::InvalidArgument;
        }
        let raw = match unsafe { read_str(params_json) } {
            Ok(s) => s,
            Err(status) => return status,
        };
        let params: QueryParams = match serde_json::from_str(raw) {
            Ok(p) => p,
            Err(e) => {
                set_error(&format!("bad query parameters: {e}"));
                return SsacStatus::InvalidArgument;
            }
        };
        let algo = match params.algo.as_str() {
            "essac" => Algo::Essac,
            "gssac" => Algo::Gssac,
            "baseline" => Algo::Baseline,
            other => {
                set_error(&format!(
                    "unknown algo {other:?}; expected essac, gssac, or baseline"
                ));
                return SsacStatus::InvalidArgument;
            }
        };
        let heuristic = match params.heuristic.as_str() {
            "paper" => HeuristicMode::Paper,
            "admissible" => HeuristicMode::Admissible,
            "none" => HeuristicMode::None,
            other => {
                set_error(&format!(
                    "unknown heuristic {other:?}; expected paper, admissible, or none"
                ));
                return SsacStatus::InvalidArgument;
            }
        };

        let inner = unsafe { &(*bundle).inner };
        let keywords: BTreeSet<String> = params.kw.iter().cloned().collect();
        let query = match Query::new(
            &inner.net,
            SocialNodeId(params.q),
            params.k,
            keywords,
            RoadNodeId(params.lq),
            params.t,
        ) {
            Ok(q) => q,
            Err(e) => return fail(&e.into()),
        };
        let config = QueryConfig {
            bundle: PathBuf::from(&inner.dir),
            algo,
            q: params.q,
            k: params.k,
            kw: params.kw.clone(),
            lq: params.lq,
            t: params.t,
            heuristic,
            fixed_departure_weights: params.fixed_departure_weights,
            seed: params.seed,
            max_candidates: params.max_candidates.unwrap_or(1_000_000),
            max_size: params.max_size,
            init_cap: params.init_cap.unwrap_or(5_000),
            round_cap: params.round_cap.unwrap_or(10_000),
            baseline_size: params.baseline_size,
            remote_embed: false,
        };
        match run_query(inner, &query, &config) {
            Ok((result, _trace)) => {
                let text = serde_json::to_string(&result).expect("result serializes");
                give_string(out_json, text)
            }
            Err(e) => fail(&e),
        }
    })
}
