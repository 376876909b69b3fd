//! C interface to the Deep-MF detector.
//!
//! Models are opaque `DmfModel` handles created by `dmf_model_load` or
//! `dmf_model_init` and released with `dmf_model_free`. Every fallible call
//! returns a `DmfStatus`; on failure `dmf_last_error` describes the error
//! for the calling thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use deepmf::baselines::{detection_constraints, matched_filter};
use deepmf::deepmf::{infer_stream, DeepMfModel, EcgTemplate, InitSpec};
use deepmf::dsp::{find_peaks, SignalTrace, MODEL_FS};
use deepmf::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DmfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Length = 5,
    Numerical = 6,
    BufferTooSmall = 7,
    Panic = 8,
    Other = 9,
}

/// Opaque model handle.
pub struct DmfModel {
    inner: DeepMfModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("NUL bytes were replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> DmfStatus {
    match e {
        Error::InvalidArgument(_) | Error::Config(_) | Error::InvalidSpec(_) | Error::Shape(_) => {
            DmfStatus::InvalidArgument
        }
        Error::Io(_) | Error::Load(_) => DmfStatus::Io,
        Error::Format(_) => DmfStatus::Format,
        Error::Length(_) | Error::InsufficientData(_) => DmfStatus::Length,
        Error::Numerical(_) | Error::Invariant(_) => DmfStatus::Numerical,
        _ => DmfStatus::Other,
    }
}

fn fail(status: DmfStatus, msg: impl Into<String>) -> DmfStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), DmfStatus>) -> DmfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DmfStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(DmfStatus::Panic, "internal panic"),
    }
}

fn lift(e: Error) -> DmfStatus {
    fail(status_of(&e), e.to_string())
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), DmfStatus> {
    if p.is_null() {
        Err(fail(DmfStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

/// Reads `len` samples from `ptr`; an empty slice may pass a null pointer.
unsafe fn input<'a>(ptr: *const f64, len: usize, name: &str) -> Result<&'a [f64], DmfStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    non_null(ptr, name)?;
    Ok(std::slice::from_raw_parts(ptr, len))
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dmf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dmf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Sample rate expected by `dmf_infer`, Hz.
#[no_mangle]
pub extern "C" fn dmf_model_fs() -> f64 {
    MODEL_FS
}

/// Loads a model file written by the `deepmf` tool.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dmf_model_load(path: *const c_char, out: *mut *mut DmfModel) -> DmfStatus {
    guard(|| {
        non_null(path, "path")?;
        non_null(out, "out")?;
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| fail(DmfStatus::InvalidArgument, "path is not UTF-8"))?;
        let inner = DeepMfModel::load(Path::new(path)).map_err(lift)?;
        *out = Box::into_raw(Box::new(DmfModel { inner }));
        Ok(())
    })
}

/// Creates an untrained model with the built-in template.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dmf_model_init(seed: u64, template_init: bool, out: *mut *mut DmfModel) -> DmfStatus {
    guard(|| {
        non_null(out, "out")?;
        let spec = InitSpec {
            seed,
            template_init,
            ..InitSpec::default()
        };
        let inner = DeepMfModel::init(EcgTemplate::builtin(), spec).map_err(lift)?;
        *out = Box::into_raw(Box::new(DmfModel { inner }));
        Ok(())
    })
}

/// Releases a model; NULL is ignored.
///
/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dmf_model_free(model: *mut DmfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of convolution kernels used at inference.
///
/// # Safety
/// `model` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn dmf_model_kernel_count(model: *const DmfModel, out: *mut usize) -> DmfStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(out, "out")?;
        *out = (*model).inner.params.inference_kernel_count();
        Ok(())
    })
}

/// Scores a raw ear-ECG trace sampled at `dmf_model_fs()` Hz. `scores`
/// receives `len` values.
///
/// # Safety
/// `signal` and `scores` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dmf_infer(
    model: *const DmfModel,
    signal: *const f64,
    len: usize,
    scores: *mut f64,
) -> DmfStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(scores, "scores")?;
        let x = input(signal, len, "signal")?;
        let trace = SignalTrace::new(x.to_vec(), MODEL_FS).map_err(lift)?;
        let y = infer_stream(&trace, &(*model).inner.params).map_err(lift)?;
        std::slice::from_raw_parts_mut(scores, len).copy_from_slice(y.samples());
        Ok(())
    })
}

/// Normalised matched filter of `signal` against the built-in template.
///
/// # Safety
/// `signal` and `out` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn dmf_matched_filter(signal: *const f64, len: usize, out: *mut f64) -> DmfStatus {
    guard(|| {
        non_null(out, "out")?;
        let x = input(signal, len, "signal")?;
        let trace = SignalTrace::new(x.to_vec(), MODEL_FS).map_err(lift)?;
        let y = matched_filter(&trace, &EcgTemplate::builtin()).map_err(lift)?;
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(y.samples());
        Ok(())
    })
}

/// Peaks of a score trace with the evaluation constraints (distance 12,
/// width 25) above `min_height`. `*count` always receives the number of
/// peaks; if it exceeds `capacity` nothing is written and
/// `DMF_STATUS_BUFFER_TOO_SMALL` is returned.
///
/// # Safety
/// `scores` must hold `len` doubles, `indices` `capacity` entries.
#[no_mangle]
pub unsafe extern "C" fn dmf_find_peaks(
    scores: *const f64,
    len: usize,
    min_height: f64,
    indices: *mut usize,
    capacity: usize,
    count: *mut usize,
) -> DmfStatus {
    guard(|| {
        non_null(count, "count")?;
        let x = input(scores, len, "scores")?;
        if x.is_empty() {
            *count = 0;
            return Ok(());
        }
        let trace = SignalTrace::new(x.to_vec(), MODEL_FS).map_err(lift)?;
        let peaks = find_peaks(&trace, &detection_constraints(min_height));
        *count = peaks.len();
        if peaks.len() > capacity {
            return Err(fail(
                DmfStatus::BufferTooSmall,
                format!("{} peaks do not fit in {capacity} slots", peaks.len()),
            ));
        }
        if !peaks.is_empty() {
            non_null(indices, "indices")?;
            std::slice::from_raw_parts_mut(indices, peaks.len()).copy_from_slice(peaks.indices());
        }
        Ok(())
    })
}
