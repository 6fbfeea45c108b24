//! C ABI over the fairforest engine.
//!
//! Forests and datasets cross the boundary as opaque handles. Every fallible
//! function returns one of the `FF_*` status codes and writes its result
//! through an out-pointer; on failure `ff_last_error_message` describes the
//! error on the calling thread. Strings returned by the library must be
//! released with `ff_string_free`, handles with their `*_free` function.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fairforest::ingest::{load_csv, resolve_schema};
use fairforest::metrics::forest_report;
use fairforest::{relabel, Dataset, Error, Forest, RelabelConfig, Strategy, TrainConfig};

pub const FF_OK: i32 = 0;
/// A required pointer argument was null.
pub const FF_ERR_NULL: i32 = 1;
/// Bad input data: unreadable file, dimension mismatch, non-binary labels.
pub const FF_ERR_INPUT: i32 = 2;
/// A metric is undefined because a sensitive group is empty.
pub const FF_ERR_METRIC_UNDEFINED: i32 = 3;
/// An internal invariant was violated.
pub const FF_ERR_INTERNAL: i32 = 4;
/// A forest document failed validation.
pub const FF_ERR_PARSE: i32 = 5;
/// Invalid configuration or call order.
pub const FF_ERR_CONFIG: i32 = 6;
/// The library panicked; the handles passed in should be freed, not reused.
pub const FF_ERR_PANIC: i32 = 7;

pub const FF_STRATEGY_LEAF_BASED: i32 = 0;
pub const FF_STRATEGY_TREE_BASED: i32 = 1;

/// Opaque trained forest.
pub struct FfForest {
    inner: Forest,
}

/// Opaque encoded dataset.
pub struct FfDataset {
    inner: Dataset,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FfMetrics {
    pub accuracy: f64,
    pub discrimination: f64,
    pub rate_s1: f64,
    pub rate_s0: f64,
    pub n: usize,
    pub n_s1: usize,
    pub n_s0: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("NULs were replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Status code for a library error.
pub fn status_of(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } => FF_ERR_PARSE,
        Error::UndefinedMetric(_) => FF_ERR_METRIC_UNDEFINED,
        Error::Invariant(_) | Error::Structural { .. } => FF_ERR_INTERNAL,
        Error::Config(_) | Error::Usage(_) => FF_ERR_CONFIG,
        _ => FF_ERR_INPUT,
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> i32 {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FF_OK,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer passed for {what}"));
            FF_ERR_NULL
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            FF_ERR_PANIC
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Lib(Error::Input(format!("{what} is not valid UTF-8"))))
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("NULs were replaced").into_raw()
}

/// Message of the last error raised on this thread, or NULL. The pointer
/// stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn ff_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by the library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ff_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a forest JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ff_forest_load(path: *const c_char, out: *mut *mut FfForest) -> i32 {
    guard(|| {
        let path = str_arg(path, "path")?;
        let out = deref_mut(out, "out")?;
        let forest = Forest::load(path)?;
        *out = Box::into_raw(Box::new(FfForest { inner: forest }));
        Ok(())
    })
}

/// Parses a forest from its JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ff_forest_from_json(json: *const c_char, out: *mut *mut FfForest) -> i32 {
    guard(|| {
        let json = str_arg(json, "json")?;
        let out = deref_mut(out, "out")?;
        let forest = Forest::from_json(json)?;
        *out = Box::into_raw(Box::new(FfForest { inner: forest }));
        Ok(())
    })
}

/// Serializes a forest; free the result with `ff_string_free`.
///
/// # Safety
/// `forest` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ff_forest_to_json(forest: *const FfForest, out: *mut *mut c_char) -> i32 {
    guard(|| {
        let forest = deref(forest, "forest")?;
        let out = deref_mut(out, "out")?;
        *out = c_string(forest.inner.to_json());
        Ok(())
    })
}

/// # Safety
/// `forest` must be NULL or a handle from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ff_forest_free(forest: *mut FfForest) {
    if !forest.is_null() {
        drop(Box::from_raw(forest));
    }
}

/// # Safety
/// `forest` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ff_forest_n_trees(forest: *const FfForest, out: *mut usize) -> i32 {
    guard(|| {
        *deref_mut(out, "out")? = deref(forest, "forest")?.inner.trees().len();
        Ok(())
    })
}

/// Builds a dataset from a row-major `n_rows x n_features` matrix and binary
/// labels and sensitive values. Features are named `f0`, `f1`, ...
///
/// # Safety
/// `features` must hold `n_rows * n_features` values and `labels`, `groups`
/// `n_rows` values each; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ff_dataset_new(
    features: *const f64,
    n_rows: usize,
    n_features: usize,
    labels: *const u8,
    groups: *const u8,
    out: *mut *mut FfDataset,
) -> i32 {
    guard(|| {
        let out = deref_mut(out, "out")?;
        let total = n_rows
            .checked_mul(n_features)
            .ok_or_else(|| Error::Input("n_rows * n_features overflows".into()))?;
        let slice = |p: *const f64, n: usize, what| {
            if n == 0 {
                Ok(&[][..])
            } else if p.is_null() {
                Err(Failure::Null(what))
            } else {
                Ok(std::slice::from_raw_parts(p, n))
            }
        };
        let bytes = |p: *const u8, n: usize, what| {
            if n == 0 {
                Ok(&[][..])
            } else if p.is_null() {
                Err(Failure::Null(what))
            } else {
                Ok(std::slice::from_raw_parts(p, n))
            }
        };
        let features = slice(features, total, "features")?.to_vec();
        let labels = bytes(labels, n_rows, "labels")?.to_vec();
        let groups = bytes(groups, n_rows, "groups")?.to_vec();
        let names = (0..n_features).map(|j| format!("f{j}")).collect();
        let data = Dataset::new(names, "s", features, labels, groups)?;
        *out = Box::into_raw(Box::new(FfDataset { inner: data }));
        Ok(())
    })
}

/// Loads and encodes a CSV file with a built-in schema name or schema path.
///
/// # Safety
/// `path` and `schema` must be NUL-terminated strings, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ff_dataset_from_csv(
    path: *const c_char,
    schema: *const c_char,
    out: *mut *mut FfDataset,
) -> i32 {
    guard(|| {
        let path = str_arg(path, "path")?;
        let schema = resolve_schema(str_arg(schema, "schema")?)?;
        let out = deref_mut(out, "out")?;
        let data = load_csv(path, &schema)?;
        *out = Box::into_raw(Box::new(FfDataset { inner: data }));
        Ok(())
    })
}

/// # Safety
/// `dataset` must be NULL or a handle from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ff_dataset_free(dataset: *mut FfDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// # Safety
/// `dataset` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ff_dataset_len(dataset: *const FfDataset, out: *mut usize) -> i32 {
    guard(|| {
        *deref_mut(out, "out")? = deref(dataset, "dataset")?.inner.len();
        Ok(())
    })
}

/// Trains a forest. `config_json` is a training configuration object or
/// NULL for the defaults.
///
/// # Safety
/// `data` must be a live handle, `config_json` NULL or a NUL-terminated
/// string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ff_forest_train(
    data: *const FfDataset,
    config_json: *const c_char,
    out: *mut *mut FfForest,
) -> i32 {
    guard(|| {
        let data = deref(data, "data")?;
        let out = deref_mut(out, "out")?;
        let config = if config_json.is_null() {
            TrainConfig::default()
        } else {
            TrainConfig::from_json(str_arg(config_json, "config_json")?)?
        };
        let forest = fairforest::train_forest(&data.inner, &config)?;
        *out = Box::into_raw(Box::new(FfForest { inner: forest }));
        Ok(())
    })
}

/// Recomputes leaf statistics from `repair`.
///
/// # Safety
/// Both handles must be live.
#[no_mangle]
pub unsafe extern "C" fn ff_forest_annotate(forest: *mut FfForest, repair: *const FfDataset) -> i32 {
    guard(|| {
        let forest = deref_mut(forest, "forest")?;
        let repair = deref(repair, "repair")?;
        forest.inner.annotate_leaf_stats(&repair.inner)?;
        Ok(())
    })
}

/// Writes one prediction per row of `data` into `out`, which must have room
/// for `out_len >= ff_dataset_len(data)` bytes.
///
/// # Safety
/// Handles must be live and `out` must point to `out_len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ff_forest_predict(
    forest: *const FfForest,
    data: *const FfDataset,
    out: *mut u8,
    out_len: usize,
) -> i32 {
    guard(|| {
        let forest = deref(forest, "forest")?;
        let data = deref(data, "data")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        if out_len < data.inner.len() {
            return Err(Error::Input(format!(
                "output buffer holds {out_len} values, dataset has {} rows",
                data.inner.len()
            ))
            .into());
        }
        forest.inner.check_dimensions(&data.inner)?;
        let preds = fairforest::metrics::predictions(|x| forest.inner.predict(x), &data.inner)?;
        std::slice::from_raw_parts_mut(out, preds.len()).copy_from_slice(&preds);
        Ok(())
    })
}

/// Accuracy and discrimination of `forest` on `data`.
///
/// # Safety
/// Handles must be live and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ff_forest_metrics(
    forest: *const FfForest,
    data: *const FfDataset,
    out: *mut FfMetrics,
) -> i32 {
    guard(|| {
        let forest = deref(forest, "forest")?;
        let data = deref(data, "data")?;
        let out = deref_mut(out, "out")?;
        forest.inner.check_dimensions(&data.inner)?;
        let r = forest_report(&forest.inner, &data.inner)?;
        *out = FfMetrics {
            accuracy: r.accuracy,
            discrimination: r.discrimination,
            rate_s1: r.rate_s1,
            rate_s0: r.rate_s0,
            n: r.n,
            n_s1: r.n_s1,
            n_s0: r.n_s0,
        };
        Ok(())
    })
}

/// Flips leaves of `forest` in place against `repair`, which the forest
/// must be annotated with. When `report_out` is not NULL it receives the
/// iteration report as JSON lines; free it with `ff_string_free`. On failure
/// the forest is left unchanged.
///
/// # Safety
/// Handles must be live; `report_out` must be NULL or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ff_forest_relabel(
    forest: *mut FfForest,
    repair: *const FfDataset,
    epsilon: f64,
    alpha: f64,
    strategy: i32,
    report_out: *mut *mut c_char,
) -> i32 {
    guard(|| {
        let forest = deref_mut(forest, "forest")?;
        let repair = deref(repair, "repair")?;
        let strategy = match strategy {
            FF_STRATEGY_LEAF_BASED => Strategy::LeafBased,
            FF_STRATEGY_TREE_BASED => Strategy::TreeBased,
            other => return Err(Error::Config(format!("unknown strategy code {other}")).into()),
        };
        let config = RelabelConfig::new(epsilon, alpha, strategy);
        let (flipped, report) = relabel(forest.inner.clone(), &repair.inner, &config)?;
        forest.inner = flipped;
        if !report_out.is_null() {
            *report_out = c_string(report.to_json_lines());
        }
        Ok(())
    })
}
