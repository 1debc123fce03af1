//! C ABI for the cealab library.
//!
//! Instances are opaque handles created by the `*_load` functions and
//! released by the matching `*_free`. Every fallible call returns a
//! [`CealabStatus`] and writes its result through out-pointers, which are
//! only written on `CEALAB_STATUS_OK`. The generated header lives in
//! `include/cealab.h`.

use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use cealab::engine;
use cealab::grid::GridConfig;
use cealab::nk::{BitString, NkLandscape};
use cealab::problem::Problem;
use cealab::qap::{load_qaplib, Permutation, QapInstance};
use cealab::takeover::{takeover_run, SeedPlacement};

/// Result of a C API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CealabStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    ParseError = 3,
    IoError = 4,
    SizeLimit = 5,
    InternalError = 6,
}

/// Opaque quadratic-assignment instance.
pub struct CealabQap(QapInstance);

/// Opaque NK-landscape instance.
pub struct CealabNk(NkLandscape);

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");

/// Library version as a static NUL-terminated string; never freed.
#[no_mangle]
pub extern "C" fn cealab_version() -> *const c_char {
    VERSION.as_ptr() as *const c_char
}

unsafe fn path_from_c(path: *const c_char) -> Result<&'static Path, CealabStatus> {
    if path.is_null() {
        return Err(CealabStatus::NullArgument);
    }
    match CStr::from_ptr(path).to_str() {
        Ok(s) => Ok(Path::new(s)),
        Err(_) => Err(CealabStatus::InvalidArgument),
    }
}

fn guard(body: impl FnOnce() -> CealabStatus) -> CealabStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => CealabStatus::InternalError,
    }
}

/// Load a QAP instance from a QAPLIB-format text file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_instance` a valid
/// pointer. On `CEALAB_STATUS_OK` the caller owns the handle and must
/// release it with `cealab_qap_free`.
#[no_mangle]
pub unsafe extern "C" fn cealab_qap_load(
    path: *const c_char,
    out_instance: *mut *mut CealabQap,
) -> CealabStatus {
    if out_instance.is_null() {
        return CealabStatus::NullArgument;
    }
    let path = match path_from_c(path) {
        Ok(p) => p,
        Err(status) => return status,
    };
    guard(|| match load_qaplib(path) {
        Ok(instance) => {
            *out_instance = Box::into_raw(Box::new(CealabQap(instance)));
            CealabStatus::Ok
        }
        Err(cealab::qap::QapParseError::Io(_)) => CealabStatus::IoError,
        Err(_) => CealabStatus::ParseError,
    })
}

/// Number of facilities of a loaded instance.
///
/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cealab_qap_size(
    instance: *const CealabQap,
    out_size: *mut usize,
) -> CealabStatus {
    if instance.is_null() || out_size.is_null() {
        return CealabStatus::NullArgument;
    }
    *out_size = (*instance).0.n();
    CealabStatus::Ok
}

/// Assignment cost of a permutation given as `len` facility locations.
///
/// # Safety
/// `assignment` must point to `len` readable entries; the other pointers
/// must be valid.
#[no_mangle]
pub unsafe extern "C" fn cealab_qap_cost(
    instance: *const CealabQap,
    assignment: *const u32,
    len: usize,
    out_cost: *mut f64,
) -> CealabStatus {
    if instance.is_null() || assignment.is_null() || out_cost.is_null() {
        return CealabStatus::NullArgument;
    }
    let instance = &(*instance).0;
    if len != instance.n() {
        return CealabStatus::InvalidArgument;
    }
    let mapping: Vec<usize> = std::slice::from_raw_parts(assignment, len)
        .iter()
        .map(|&v| v as usize)
        .collect();
    let permutation = Permutation(mapping);
    if !permutation.is_valid() {
        return CealabStatus::InvalidArgument;
    }
    *out_cost = instance.evaluate(&permutation);
    CealabStatus::Ok
}

/// Release a QAP handle; a null pointer is ignored.
///
/// # Safety
/// `instance` must come from `cealab_qap_load` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cealab_qap_free(instance: *mut CealabQap) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Load an NK landscape from its text serialization.
///
/// # Safety
/// As `cealab_qap_load`; release with `cealab_nk_free`.
#[no_mangle]
pub unsafe extern "C" fn cealab_nk_load(
    path: *const c_char,
    out_instance: *mut *mut CealabNk,
) -> CealabStatus {
    if out_instance.is_null() {
        return CealabStatus::NullArgument;
    }
    let path = match path_from_c(path) {
        Ok(p) => p,
        Err(status) => return status,
    };
    guard(|| match NkLandscape::load(path) {
        Ok(landscape) => {
            *out_instance = Box::into_raw(Box::new(CealabNk(landscape)));
            CealabStatus::Ok
        }
        Err(cealab::nk::NkParseError::Io(_)) => CealabStatus::IoError,
        Err(_) => CealabStatus::ParseError,
    })
}

/// Bit-string length of a loaded landscape.
///
/// # Safety
/// Both pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn cealab_nk_size(
    instance: *const CealabNk,
    out_size: *mut usize,
) -> CealabStatus {
    if instance.is_null() || out_size.is_null() {
        return CealabStatus::NullArgument;
    }
    *out_size = (*instance).0.n();
    CealabStatus::Ok
}

/// Fitness of a bit string given as `len` bytes holding 0 or 1.
///
/// # Safety
/// `bits` must point to `len` readable bytes; the other pointers must be
/// valid.
#[no_mangle]
pub unsafe extern "C" fn cealab_nk_fitness(
    instance: *const CealabNk,
    bits: *const u8,
    len: usize,
    out_fitness: *mut f64,
) -> CealabStatus {
    if instance.is_null() || bits.is_null() || out_fitness.is_null() {
        return CealabStatus::NullArgument;
    }
    let landscape = &(*instance).0;
    if len != landscape.n() {
        return CealabStatus::InvalidArgument;
    }
    let raw = std::slice::from_raw_parts(bits, len);
    if raw.iter().any(|&b| b > 1) {
        return CealabStatus::InvalidArgument;
    }
    let string = BitString(raw.iter().map(|&b| b == 1).collect());
    *out_fitness = landscape.evaluate(&string);
    CealabStatus::Ok
}

/// Release an NK handle; a null pointer is ignored.
///
/// # Safety
/// `instance` must come from `cealab_nk_load` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cealab_nk_free(instance: *mut CealabNk) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

fn run_config<P: Problem>(
    problem: &P,
    width: usize,
    height: usize,
    beta: f64,
) -> Result<GridConfig, CealabStatus> {
    if width < 1 || height < 1 || !(0.0..=1.0).contains(&beta) {
        return Err(CealabStatus::InvalidArgument);
    }
    Ok(GridConfig::new(width, height, beta, problem.orientation()))
}

/// Run the cellular EA on a QAP instance and report the best cost found.
///
/// # Safety
/// `instance` and `out_best_cost` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cealab_run_qap(
    instance: *const CealabQap,
    width: usize,
    height: usize,
    beta: f64,
    generations: u64,
    seed: u64,
    out_best_cost: *mut f64,
) -> CealabStatus {
    if instance.is_null() || out_best_cost.is_null() {
        return CealabStatus::NullArgument;
    }
    if generations < 1 {
        return CealabStatus::InvalidArgument;
    }
    let problem = &(*instance).0;
    let config = match run_config(problem, width, height, beta) {
        Ok(config) => config,
        Err(status) => return status,
    };
    guard(|| {
        let log = engine::run(problem, &config, generations, seed);
        *out_best_cost = log.final_best();
        CealabStatus::Ok
    })
}

/// Run the cellular EA on an NK landscape and report the best fitness found.
///
/// # Safety
/// `instance` and `out_best_fitness` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cealab_run_nk(
    instance: *const CealabNk,
    width: usize,
    height: usize,
    beta: f64,
    generations: u64,
    seed: u64,
    out_best_fitness: *mut f64,
) -> CealabStatus {
    if instance.is_null() || out_best_fitness.is_null() {
        return CealabStatus::NullArgument;
    }
    if generations < 1 {
        return CealabStatus::InvalidArgument;
    }
    let problem = &(*instance).0;
    let config = match run_config(problem, width, height, beta) {
        Ok(config) => config,
        Err(status) => return status,
    };
    guard(|| {
        let log = engine::run(problem, &config, generations, seed);
        *out_best_fitness = log.final_best();
        CealabStatus::Ok
    })
}

/// Selection-only takeover time on a `side x side` grid; writes -1 when the
/// run hits `max_generations` without converging (always at `beta = 1` on
/// grids larger than one cell).
///
/// # Safety
/// `out_takeover_time` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cealab_takeover_time(
    side: usize,
    beta: f64,
    max_generations: u64,
    seed: u64,
    out_takeover_time: *mut i64,
) -> CealabStatus {
    if out_takeover_time.is_null() {
        return CealabStatus::NullArgument;
    }
    if side < 1 || max_generations < 1 || !(0.0..=1.0).contains(&beta) {
        return CealabStatus::InvalidArgument;
    }
    guard(|| {
        let record = takeover_run(side, beta, max_generations, seed, SeedPlacement::Random);
        *out_takeover_time = match record.takeover_time {
            Some(t) => t as i64,
            None => -1,
        };
        CealabStatus::Ok
    })
}
