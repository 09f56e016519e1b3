//! C ABI for the laborscape library.
//!
//! Conventions:
//! - Handles (`LsEmployment`, `LsRisk`, `LsNetwork`) are opaque; create
//!   them with the `*_load`/`*_build` functions and release them with the
//!   matching `*_free`. Passing a handle after freeing it is undefined
//!   behavior, as in any C API.
//! - Every fallible function returns an [`LsStatus`] code and writes its
//!   result through out-pointers, which are only written on `LS_STATUS_OK`.
//! - On failure, `ls_last_error_message` returns a thread-local, NUL
//!   terminated description valid until the next failing call on the same
//!   thread.
//! - All strings are UTF-8.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use libc::{c_char, c_double, size_t};

use laborscape::dataset::{EmploymentTable, RiskTable, TableSchema};
use laborscape::occspace::{self, ExportFormat, OccupationNetwork};
use laborscape::{metrics, regress, structure};

/// Status code returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Compute = 5,
    NotFound = 6,
    Panic = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: impl Into<String>) {
    let message = message.into().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(message).unwrap_or_default();
    });
}

/// Message describing the most recent failure on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ls_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ls_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Opaque handle to a validated employment table.
pub struct LsEmployment {
    inner: EmploymentTable,
}

/// Opaque handle to a per-occupation risk table.
pub struct LsRisk {
    inner: RiskTable,
}

/// Opaque handle to a built occupation network with closeness scores.
pub struct LsNetwork {
    network: OccupationNetwork,
    closeness: std::collections::BTreeMap<String, f64>,
}

unsafe fn cstr<'a>(ptr: *const c_char) -> Result<&'a str, LsStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(LsStatus::NullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        LsStatus::InvalidUtf8
    })
}

fn guard(body: impl FnOnce() -> LsStatus) -> LsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            LsStatus::Panic
        }
    }
}

/// Loads an employment table. `schema` is 0 for wide, 1 for long.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ls_employment_load(
    path: *const c_char,
    schema: i32,
    out: *mut *mut LsEmployment,
) -> LsStatus {
    guard(|| {
        if out.is_null() {
            set_error("null out pointer");
            return LsStatus::NullPointer;
        }
        let path = match cstr(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        let schema = match schema {
            0 => TableSchema::Wide,
            1 => TableSchema::Long,
            other => {
                set_error(format!("unknown schema {other} (0 = wide, 1 = long)"));
                return LsStatus::Parse;
            }
        };
        match EmploymentTable::load(path, schema) {
            Ok(table) => {
                *out = Box::into_raw(Box::new(LsEmployment { inner: table }));
                LsStatus::Ok
            }
            Err(err) => {
                set_error(err.to_string());
                match err {
                    laborscape::dataset::DatasetError::Io(_) => LsStatus::Io,
                    _ => LsStatus::Parse,
                }
            }
        }
    })
}

/// # Safety
/// `handle` must come from [`ls_employment_load`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ls_employment_free(handle: *mut LsEmployment) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Number of cities, or 0 for a null handle.
///
/// # Safety
/// `handle` must be a live employment handle or null.
#[no_mangle]
pub unsafe extern "C" fn ls_employment_city_count(handle: *const LsEmployment) -> size_t {
    handle.as_ref().map_or(0, |h| h.inner.cities().len())
}

/// Number of occupations, or 0 for a null handle.
///
/// # Safety
/// `handle` must be a live employment handle or null.
#[no_mangle]
pub unsafe extern "C" fn ls_employment_occupation_count(handle: *const LsEmployment) -> size_t {
    handle.as_ref().map_or(0, |h| h.inner.occupations().len())
}

/// Loads a `code,probability` risk table.
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ls_risk_load(path: *const c_char, out: *mut *mut LsRisk) -> LsStatus {
    guard(|| {
        if out.is_null() {
            set_error("null out pointer");
            return LsStatus::NullPointer;
        }
        let path = match cstr(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match RiskTable::load(path) {
            Ok(table) => {
                *out = Box::into_raw(Box::new(LsRisk { inner: table }));
                LsStatus::Ok
            }
            Err(err) => {
                set_error(err.to_string());
                match err {
                    laborscape::dataset::DatasetError::Io(_) => LsStatus::Io,
                    _ => LsStatus::Parse,
                }
            }
        }
    })
}

/// # Safety
/// `handle` must come from [`ls_risk_load`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ls_risk_free(handle: *mut LsRisk) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Looks up one occupation's computerization probability.
///
/// # Safety
/// `risk` must be a live risk handle; `code` a valid string; `out_value`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ls_risk_get(
    risk: *const LsRisk,
    code: *const c_char,
    out_value: *mut c_double,
) -> LsStatus {
    guard(|| {
        let (Some(risk), false) = (risk.as_ref(), out_value.is_null()) else {
            set_error("null argument");
            return LsStatus::NullPointer;
        };
        let code = match cstr(code) {
            Ok(c) => c,
            Err(status) => return status,
        };
        match risk.inner.get(code) {
            Some(value) => {
                *out_value = value;
                LsStatus::Ok
            }
            None => {
                set_error(format!("no risk entry for '{code}'"));
                LsStatus::NotFound
            }
        }
    })
}

/// Expected job impact rate for one city.
///
/// # Safety
/// `emp` and `risk` must be live handles; `city` a valid string;
/// `out_value` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ls_impact_rate(
    emp: *const LsEmployment,
    risk: *const LsRisk,
    city: *const c_char,
    out_value: *mut c_double,
) -> LsStatus {
    guard(|| {
        let (Some(emp), Some(risk), false) = (emp.as_ref(), risk.as_ref(), out_value.is_null())
        else {
            set_error("null argument");
            return LsStatus::NullPointer;
        };
        let city = match cstr(city) {
            Ok(c) => c,
            Err(status) => return status,
        };
        match metrics::impact_rate(&emp.inner, &risk.inner, city) {
            Ok(value) => {
                *out_value = value;
                LsStatus::Ok
            }
            Err(err) => {
                set_error(err.to_string());
                match err {
                    metrics::MetricsError::UnknownCity(_) => LsStatus::NotFound,
                    _ => LsStatus::Compute,
                }
            }
        }
    })
}

/// Normalized Shannon entropy of the city's occupation distribution.
///
/// # Safety
/// `emp` must be a live handle; `city` a valid string; `out_value` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn ls_job_diversity(
    emp: *const LsEmployment,
    city: *const c_char,
    out_value: *mut c_double,
) -> LsStatus {
    guard(|| {
        let (Some(emp), false) = (emp.as_ref(), out_value.is_null()) else {
            set_error("null argument");
            return LsStatus::NullPointer;
        };
        let city = match cstr(city) {
            Ok(c) => c,
            Err(status) => return status,
        };
        match metrics::job_diversity(&emp.inner, city) {
            Ok(value) => {
                *out_value = value;
                LsStatus::Ok
            }
            Err(err) => {
                set_error(err.to_string());
                LsStatus::NotFound
            }
        }
    })
}

/// Normalized Shannon entropy of a raw count vector.
///
/// # Safety
/// `counts` must point to `len` readable u64 values; `out_value` must be a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ls_normalized_entropy(
    counts: *const u64,
    len: size_t,
    out_value: *mut c_double,
) -> LsStatus {
    guard(|| {
        if (counts.is_null() && len > 0) || out_value.is_null() {
            set_error("null argument");
            return LsStatus::NullPointer;
        }
        let slice = if len == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(counts, len)
        };
        *out_value = metrics::normalized_entropy(slice);
        LsStatus::Ok
    })
}

/// Simple least squares of `ys` on `xs`. Any out-pointer may be null to
/// skip that statistic.
///
/// # Safety
/// `xs` and `ys` must point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn ls_ols(
    xs: *const c_double,
    ys: *const c_double,
    len: size_t,
    out_beta: *mut c_double,
    out_intercept: *mut c_double,
    out_p_value: *mut c_double,
    out_r_squared: *mut c_double,
) -> LsStatus {
    guard(|| {
        if xs.is_null() || ys.is_null() {
            set_error("null data pointer");
            return LsStatus::NullPointer;
        }
        let xs = std::slice::from_raw_parts(xs, len);
        let ys = std::slice::from_raw_parts(ys, len);
        match regress::ols(xs, ys) {
            Ok(fit) => {
                if !out_beta.is_null() {
                    *out_beta = fit.beta;
                }
                if !out_intercept.is_null() {
                    *out_intercept = fit.intercept;
                }
                if !out_p_value.is_null() {
                    *out_p_value = fit.p_value;
                }
                if !out_r_squared.is_null() {
                    *out_r_squared = fit.r_squared;
                }
                LsStatus::Ok
            }
            Err(err) => {
                set_error(err.to_string());
                LsStatus::Compute
            }
        }
    })
}

/// Log-log scaling exponent of counts against sizes.
///
/// # Safety
/// `sizes` and `counts` must point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn ls_scaling_exponent(
    sizes: *const c_double,
    counts: *const c_double,
    len: size_t,
    out_beta: *mut c_double,
    out_p_value: *mut c_double,
) -> LsStatus {
    guard(|| {
        if sizes.is_null() || counts.is_null() {
            set_error("null data pointer");
            return LsStatus::NullPointer;
        }
        let sizes = std::slice::from_raw_parts(sizes, len);
        let counts = std::slice::from_raw_parts(counts, len);
        match regress::scaling_exponent(sizes, counts) {
            Ok(fit) => {
                if !out_beta.is_null() {
                    *out_beta = fit.beta;
                }
                if !out_p_value.is_null() {
                    *out_p_value = fit.p_value;
                }
                LsStatus::Ok
            }
            Err(err) => {
                set_error(err.to_string());
                LsStatus::Compute
            }
        }
    })
}

/// Haversine great-circle distance in kilometers.
#[no_mangle]
pub extern "C" fn ls_haversine_km(
    lat1: c_double,
    lon1: c_double,
    lat2: c_double,
    lon2: c_double,
) -> c_double {
    structure::haversine_km(lat1, lon1, lat2, lon2)
}

/// Builds the occupation network (RCA, proximity, maximum spanning forest
/// plus threshold links) and its closeness scores.
///
/// # Safety
/// `emp` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ls_network_build(
    emp: *const LsEmployment,
    advantage_cutoff: c_double,
    proximity_threshold: c_double,
    out: *mut *mut LsNetwork,
) -> LsStatus {
    guard(|| {
        let (Some(emp), false) = (emp.as_ref(), out.is_null()) else {
            set_error("null argument");
            return LsStatus::NullPointer;
        };
        let rca = match metrics::rca(&emp.inner) {
            Ok(rca) => rca,
            Err(err) => {
                set_error(err.to_string());
                return LsStatus::Compute;
            }
        };
        let prox = occspace::proximity(&rca, advantage_cutoff);
        let network = occspace::build_network(&prox, proximity_threshold);
        let closeness = occspace::closeness(&network);
        *out = Box::into_raw(Box::new(LsNetwork { network, closeness }));
        LsStatus::Ok
    })
}

/// # Safety
/// `handle` must come from [`ls_network_build`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ls_network_free(handle: *mut LsNetwork) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `handle` must be a live network handle or null.
#[no_mangle]
pub unsafe extern "C" fn ls_network_node_count(handle: *const LsNetwork) -> size_t {
    handle.as_ref().map_or(0, |h| h.network.nodes().len())
}

/// Number of edges, or 0 for a null handle.
///
/// # Safety
/// `handle` must be a live network handle or null.
#[no_mangle]
pub unsafe extern "C" fn ls_network_edge_count(handle: *const LsNetwork) -> size_t {
    handle.as_ref().map_or(0, |h| h.network.edges().len())
}

/// Closeness centrality of one occupation node.
///
/// # Safety
/// `net` must be a live network handle; `code` a valid string; `out_value`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ls_network_closeness(
    net: *const LsNetwork,
    code: *const c_char,
    out_value: *mut c_double,
) -> LsStatus {
    guard(|| {
        let (Some(net), false) = (net.as_ref(), out_value.is_null()) else {
            set_error("null argument");
            return LsStatus::NullPointer;
        };
        let code = match cstr(code) {
            Ok(c) => c,
            Err(status) => return status,
        };
        match net.closeness.get(code) {
            Some(value) => {
                *out_value = *value;
                LsStatus::Ok
            }
            None => {
                set_error(format!("no node '{code}' in the network"));
                LsStatus::NotFound
            }
        }
    })
}

/// Writes the network to `path`. `format` is 0 for edgelist (plus node
/// sidecar), 1 for GraphML, 2 for JSON. `risk` may be null; node risk
/// attributes are then omitted.
///
/// # Safety
/// `net` must be a live network handle; `risk` a live risk handle or null;
/// `path` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ls_network_export(
    net: *const LsNetwork,
    risk: *const LsRisk,
    path: *const c_char,
    format: i32,
) -> LsStatus {
    guard(|| {
        let Some(net) = net.as_ref() else {
            set_error("null network handle");
            return LsStatus::NullPointer;
        };
        let path = match cstr(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        let format = match format {
            0 => ExportFormat::EdgeList,
            1 => ExportFormat::GraphXml,
            2 => ExportFormat::Json,
            other => {
                set_error(format!("unknown format {other} (0 edgelist, 1 graphml, 2 json)"));
                return LsStatus::Parse;
            }
        };
        let empty = RiskTable::new();
        let risk = risk.as_ref().map_or(&empty, |r| &r.inner);
        match occspace::export_network(&net.network, &net.closeness, risk, path, format) {
            Ok(()) => LsStatus::Ok,
            Err(err) => {
                set_error(err.to_string());
                LsStatus::Io
            }
        }
    })
}
