//! C ABI over the koopnet library.
//!
//! Conventions: every fallible function returns a [`KoopStatus`]; outputs go
//! through caller-provided pointers. Handles are opaque and must be released
//! with their matching `_free` function. On any non-`Ok` status the message
//! is retrievable (and owned) via [`koop_last_error_message`] /
//! [`koop_string_free`]. Handles are not synchronized; use one per thread or
//! guard them externally.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use koopnet::analysis::koopman_spectrum;
use koopnet::config::RunConfig;
use koopnet::error::Error;
use koopnet::koopman::{train, KoopmanModel};
use koopnet::nn::Tensor;
use koopnet::numerics::CounterRng;
use koopnet::pde::dataset::{read_kpd1, write_kpd1, GenerateOptions};
use koopnet::pde::{generate_dataset, Dataset};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KoopStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    IoError = 3,
    FormatError = 4,
    NumericError = 5,
    Panic = 6,
}

/// Opaque trained-model handle.
#[repr(C)]
pub struct KoopModel {
    _private: [u8; 0],
}

/// Opaque trajectory-dataset handle.
#[repr(C)]
pub struct KoopDataset {
    _private: [u8; 0],
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let cstring = CString::new(message.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("invalid error message").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(cstring));
}

fn status_of(err: &Error) -> KoopStatus {
    match err {
        Error::Io { .. } => KoopStatus::IoError,
        Error::Format(_) | Error::Checkpoint(_) => KoopStatus::FormatError,
        Error::Config(_) | Error::InvalidArgument(_) => KoopStatus::InvalidArgument,
        Error::Length(_)
        | Error::Shape(_)
        | Error::NonFinite(_)
        | Error::Convergence(_)
        | Error::Divergence(_) => KoopStatus::NumericError,
    }
}

fn fail(err: Error) -> KoopStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

fn guard(f: impl FnOnce() -> KoopStatus) -> KoopStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic".to_string());
            KoopStatus::Panic
        }
    }
}

unsafe fn model_ref<'a>(ptr: *const KoopModel) -> Option<&'a KoopmanModel> {
    unsafe { (ptr as *const KoopmanModel).as_ref() }
}

unsafe fn dataset_ref<'a>(ptr: *const KoopDataset) -> Option<&'a Dataset> {
    unsafe { (ptr as *const Dataset).as_ref() }
}

unsafe fn cstr<'a>(ptr: *const c_char) -> Option<&'a str> {
    if ptr.is_null() {
        return None;
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().ok()
}

fn null_pointer() -> KoopStatus {
    set_error("null pointer argument".to_string());
    KoopStatus::NullPointer
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn koop_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the most recent error on this thread, or NULL. The caller
/// owns the returned string and must release it with `koop_string_free`.
#[no_mangle]
pub extern "C" fn koop_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| match slot.borrow().as_ref() {
        Some(msg) => msg.clone().into_raw(),
        None => std::ptr::null_mut(),
    })
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must have been returned by a koopnet function and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn koop_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Load a KPM1 checkpoint.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn koop_model_load(
    path: *const c_char,
    out: *mut *mut KoopModel,
) -> KoopStatus {
    guard(|| {
        let (Some(path), false) = (unsafe { cstr(path) }, out.is_null()) else {
            return null_pointer();
        };
        match KoopmanModel::load(&PathBuf::from(path)) {
            Ok(model) => {
                unsafe { *out = Box::into_raw(Box::new(model)) as *mut KoopModel };
                KoopStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Write the model to a KPM1 checkpoint.
///
/// # Safety
/// `model` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn koop_model_save(
    model: *const KoopModel,
    path: *const c_char,
) -> KoopStatus {
    guard(|| {
        let (Some(model), Some(path)) = (unsafe { model_ref(model) }, unsafe { cstr(path) })
        else {
            return null_pointer();
        };
        match model.save(&PathBuf::from(path)) {
            Ok(()) => KoopStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// Release a model handle.
///
/// # Safety
/// `model` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn koop_model_free(model: *mut KoopModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model as *mut KoopmanModel) });
    }
}

/// State width n of the model.
///
/// # Safety
/// `model` live handle, `out` valid pointer.
#[no_mangle]
pub unsafe extern "C" fn koop_model_state_width(
    model: *const KoopModel,
    out: *mut usize,
) -> KoopStatus {
    guard(|| {
        let (Some(model), false) = (unsafe { model_ref(model) }, out.is_null()) else {
            return null_pointer();
        };
        unsafe { *out = model.arch().n };
        KoopStatus::Ok
    })
}

/// Latent rank r of the model.
///
/// # Safety
/// `model` live handle, `out` valid pointer.
#[no_mangle]
pub unsafe extern "C" fn koop_model_latent_rank(
    model: *const KoopModel,
    out: *mut usize,
) -> KoopStatus {
    guard(|| {
        let (Some(model), false) = (unsafe { model_ref(model) }, out.is_null()) else {
            return null_pointer();
        };
        unsafe { *out = model.arch().r };
        KoopStatus::Ok
    })
}

unsafe fn run_map(
    model: *const KoopModel,
    input: *const f64,
    input_len: usize,
    output: *mut f64,
    output_len: usize,
    f: impl Fn(&KoopmanModel, &Tensor) -> koopnet::error::Result<Tensor>,
    expect_in: impl Fn(&KoopmanModel) -> usize,
    expect_out: impl Fn(&KoopmanModel) -> usize,
) -> KoopStatus {
    let Some(model) = (unsafe { model_ref(model) }) else {
        return null_pointer();
    };
    if input.is_null() || output.is_null() {
        return null_pointer();
    }
    if input_len != expect_in(model) || output_len != expect_out(model) {
        set_error(format!(
            "buffer sizes {input_len}/{output_len} do not match model {}/{}",
            expect_in(model),
            expect_out(model)
        ));
        return KoopStatus::InvalidArgument;
    }
    let data = unsafe { std::slice::from_raw_parts(input, input_len) }.to_vec();
    let batch = match Tensor::from_vec(&[1, input_len], data) {
        Ok(t) => t,
        Err(e) => return fail(e),
    };
    match f(model, &batch) {
        Ok(result) => {
            unsafe {
                std::ptr::copy_nonoverlapping(result.data().as_ptr(), output, output_len);
            }
            KoopStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Encode one state (length n) into latent coordinates (length r).
///
/// # Safety
/// Buffers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn koop_model_encode(
    model: *const KoopModel,
    state: *const f64,
    state_len: usize,
    latent: *mut f64,
    latent_len: usize,
) -> KoopStatus {
    guard(|| unsafe {
        run_map(
            model,
            state,
            state_len,
            latent,
            latent_len,
            |m, t| m.encode(t),
            |m| m.arch().n,
            |m| m.arch().r,
        )
    })
}

/// Decode latent coordinates (length r) back to a state (length n).
///
/// # Safety
/// Buffers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn koop_model_decode(
    model: *const KoopModel,
    latent: *const f64,
    latent_len: usize,
    state: *mut f64,
    state_len: usize,
) -> KoopStatus {
    guard(|| unsafe {
        run_map(
            model,
            latent,
            latent_len,
            state,
            state_len,
            |m, t| m.decode(t),
            |m| m.arch().r,
            |m| m.arch().n,
        )
    })
}

/// Predict `steps` snapshots ahead from one initial state (both length n).
/// The latent state advances by repeated multiplication by the dynamics
/// matrix; nothing re-encodes between steps.
///
/// # Safety
/// Buffers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn koop_model_predict(
    model: *const KoopModel,
    state: *const f64,
    state_len: usize,
    steps: usize,
    out: *mut f64,
    out_len: usize,
) -> KoopStatus {
    guard(|| unsafe {
        run_map(
            model,
            state,
            state_len,
            out,
            out_len,
            |m, t| m.predict(t, steps),
            |m| m.arch().n,
            |m| m.arch().n,
        )
    })
}

/// Eigenvalues of the dynamics matrix and the transformed spectrum
/// -log|lambda| / dt, sorted ascending by the transformed value. All three
/// output buffers must hold r values.
///
/// # Safety
/// Buffers must be valid for r values each.
#[no_mangle]
pub unsafe extern "C" fn koop_model_spectrum(
    model: *const KoopModel,
    dt: f64,
    out_re: *mut f64,
    out_im: *mut f64,
    out_transformed: *mut f64,
    out_len: usize,
) -> KoopStatus {
    guard(|| {
        let Some(model) = (unsafe { model_ref(model) }) else {
            return null_pointer();
        };
        if out_re.is_null() || out_im.is_null() || out_transformed.is_null() {
            return null_pointer();
        }
        if out_len != model.arch().r {
            set_error(format!(
                "buffer holds {out_len} values, model rank is {}",
                model.arch().r
            ));
            return KoopStatus::InvalidArgument;
        }
        match koopman_spectrum(model, dt) {
            Ok(report) => {
                for (i, (l, t)) in report
                    .eigenvalues
                    .iter()
                    .zip(&report.transformed)
                    .enumerate()
                {
                    unsafe {
                        *out_re.add(i) = l.re;
                        *out_im.add(i) = l.im;
                        *out_transformed.add(i) = *t;
                    }
                }
                KoopStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Load a KPD1 dataset file.
///
/// # Safety
/// `path` NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn koop_dataset_load(
    path: *const c_char,
    out: *mut *mut KoopDataset,
) -> KoopStatus {
    guard(|| {
        let (Some(path), false) = (unsafe { cstr(path) }, out.is_null()) else {
            return null_pointer();
        };
        match read_kpd1(&PathBuf::from(path)) {
            Ok(ds) => {
                unsafe { *out = Box::into_raw(Box::new(ds)) as *mut KoopDataset };
                KoopStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Generate a dataset from configuration text (same `key = value` format as
/// the CLI config files).
///
/// # Safety
/// `config_text` NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn koop_dataset_generate(
    config_text: *const c_char,
    threads: usize,
    out: *mut *mut KoopDataset,
) -> KoopStatus {
    guard(|| {
        let (Some(text), false) = (unsafe { cstr(config_text) }, out.is_null()) else {
            return null_pointer();
        };
        let result = (|| -> koopnet::error::Result<Dataset> {
            let cfg = RunConfig::parse(text)?;
            generate_dataset(
                cfg.pde()?,
                cfg.grid_n()?,
                cfg.data_mix()?,
                cfg.data_count()?,
                cfg.data_t_steps()?,
                cfg.data_dt()?,
                cfg.data_seed()?,
                &GenerateOptions {
                    substeps: cfg.data_substeps()?,
                    ranges: cfg.ic_ranges()?,
                    threads: threads.max(1),
                    max_retries: 3,
                },
            )
        })();
        match result {
            Ok(ds) => {
                unsafe { *out = Box::into_raw(Box::new(ds)) as *mut KoopDataset };
                KoopStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Write a dataset to a KPD1 file.
///
/// # Safety
/// `dataset` live handle, `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn koop_dataset_save(
    dataset: *const KoopDataset,
    path: *const c_char,
) -> KoopStatus {
    guard(|| {
        let (Some(ds), Some(path)) = (unsafe { dataset_ref(dataset) }, unsafe { cstr(path) })
        else {
            return null_pointer();
        };
        match write_kpd1(&PathBuf::from(path), ds) {
            Ok(()) => KoopStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

/// Release a dataset handle.
///
/// # Safety
/// `dataset` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn koop_dataset_free(dataset: *mut KoopDataset) {
    if !dataset.is_null() {
        drop(unsafe { Box::from_raw(dataset as *mut Dataset) });
    }
}

/// Basic dataset geometry: grid size, snapshots per trajectory, trajectory
/// count, snapshot spacing.
///
/// # Safety
/// All pointers valid; `dataset` a live handle.
#[no_mangle]
pub unsafe extern "C" fn koop_dataset_info(
    dataset: *const KoopDataset,
    out_n: *mut usize,
    out_t_len: *mut usize,
    out_count: *mut usize,
    out_dt: *mut f64,
) -> KoopStatus {
    guard(|| {
        let Some(ds) = (unsafe { dataset_ref(dataset) }) else {
            return null_pointer();
        };
        if out_n.is_null() || out_t_len.is_null() || out_count.is_null() || out_dt.is_null() {
            return null_pointer();
        }
        unsafe {
            *out_n = ds.n();
            *out_t_len = ds.t_len();
            *out_count = ds.count();
            *out_dt = ds.dt();
        }
        KoopStatus::Ok
    })
}

/// Copy the state of trajectory `traj` at snapshot `t` into `out` (length n).
///
/// # Safety
/// `out` must hold n values.
#[no_mangle]
pub unsafe extern "C" fn koop_dataset_state(
    dataset: *const KoopDataset,
    traj: usize,
    t: usize,
    out: *mut f64,
    out_len: usize,
) -> KoopStatus {
    guard(|| {
        let Some(ds) = (unsafe { dataset_ref(dataset) }) else {
            return null_pointer();
        };
        if out.is_null() {
            return null_pointer();
        }
        if traj >= ds.count() || t >= ds.t_len() || out_len != ds.n() {
            set_error(format!(
                "indices ({traj}, {t}) or length {out_len} out of range for {}x{}x{}",
                ds.count(),
                ds.t_len(),
                ds.n()
            ));
            return KoopStatus::InvalidArgument;
        }
        let state = ds.trajectories()[traj].state(t);
        unsafe { std::ptr::copy_nonoverlapping(state.as_ptr(), out, out_len) };
        KoopStatus::Ok
    })
}

/// Train a model from configuration text on the given datasets; returns the
/// best-validation model.
///
/// # Safety
/// Handles live; `config_text` NUL-terminated; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn koop_train(
    config_text: *const c_char,
    train_data: *const KoopDataset,
    val_data: *const KoopDataset,
    threads: usize,
    out: *mut *mut KoopModel,
) -> KoopStatus {
    guard(|| {
        let (Some(text), Some(train_ds), Some(val_ds), false) = (
            unsafe { cstr(config_text) },
            unsafe { dataset_ref(train_data) },
            unsafe { dataset_ref(val_data) },
            out.is_null(),
        ) else {
            return null_pointer();
        };
        let result = (|| -> koopnet::error::Result<KoopmanModel> {
            let cfg = RunConfig::parse(text)?;
            let arch = cfg.arch()?;
            let train_cfg = cfg.train_config(threads.max(1))?;
            let mut rng = CounterRng::new(train_cfg.seed);
            let model = KoopmanModel::new(arch, &mut rng)?;
            Ok(train(model, train_ds, val_ds, &train_cfg)?.model)
        })();
        match result {
            Ok(model) => {
                unsafe { *out = Box::into_raw(Box::new(model)) as *mut KoopModel };
                KoopStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}
