//! C interface to `rca-core`.
//!
//! Every function returns an [`RcaStatus`]. On failure the message is kept
//! per thread and can be copied out with [`rca_last_error_message`]. Models
//! are opaque handles created by `rca_model_new*` and released with
//! [`rca_model_free`].
//!
//! Rotation matrices cross the boundary as `3·N` doubles, one `(x, y, z)`
//! axis per coupler. Complex matrices are row-major with interleaved real
//! and imaginary parts.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use rca_core::coupling::ImpedanceModel;
use rca_core::geometry::{is_feasible, RotationAxisMatrix, SphericalCap, UnitAxis};
use rca_core::harness::{generate_channel, scheme_rca, SystemConfig};
use rca_core::RcaError;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcaStatus {
    Ok = 0,
    NullPointer = 1,
    /// An argument lies outside the domain of the operation.
    InvalidArgument = 2,
    /// A linear solve was singular or ill-conditioned.
    Numerical = 3,
    ModelViolation = 4,
    Config = 5,
    Io = 6,
    /// The output buffer is too small; the required length was written.
    BufferTooSmall = 7,
    /// A Rust panic was caught at the boundary.
    Internal = 8,
}

/// Opaque simulation handle.
pub struct RcaModel {
    config: SystemConfig,
    impedance: Arc<ImpedanceModel>,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &RcaError) -> RcaStatus {
    match err {
        RcaError::Domain(_) => RcaStatus::InvalidArgument,
        RcaError::Numerical { .. } => RcaStatus::Numerical,
        RcaError::ModelViolation(_) => RcaStatus::ModelViolation,
        RcaError::Config(_) => RcaStatus::Config,
        RcaError::Io { .. } => RcaStatus::Io,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (RcaStatus, String)>) -> RcaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RcaStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            RcaStatus::Internal
        }
    }
}

type FfiResult<T> = Result<T, (RcaStatus, String)>;

fn lift<T>(r: rca_core::Result<T>) -> FfiResult<T> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (RcaStatus, String) {
    (RcaStatus::NullPointer, format!("{what} is null"))
}

unsafe fn model_ref<'a>(model: *const RcaModel) -> FfiResult<&'a RcaModel> {
    model.as_ref().ok_or_else(|| null("model"))
}

unsafe fn read_axes(m: &RcaModel, axes: *const f64, num_couplers: usize) -> FfiResult<RotationAxisMatrix> {
    if num_couplers != m.config.num_couplers {
        return Err((
            RcaStatus::InvalidArgument,
            format!("got {num_couplers} axes for a model with {} couplers", m.config.num_couplers),
        ));
    }
    if num_couplers == 0 {
        return Ok(RotationAxisMatrix::fixed(0));
    }
    if axes.is_null() {
        return Err(null("axes"));
    }
    let flat = std::slice::from_raw_parts(axes, 3 * num_couplers);
    let columns = flat
        .chunks_exact(3)
        .map(|c| lift(UnitAxis::new(c[0], c[1], c[2])))
        .collect::<FfiResult<Vec<_>>>()?;
    Ok(RotationAxisMatrix::new(columns))
}

fn build(config: SystemConfig) -> FfiResult<RcaModel> {
    lift(config.validate())?;
    let impedance = lift(config.impedance_model())?;
    Ok(RcaModel { config, impedance })
}

unsafe fn store(out: *mut *mut RcaModel, model: RcaModel) -> FfiResult<()> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(model));
    Ok(())
}

/// Creates a model with the default system parameters.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn rca_model_new_default(out: *mut *mut RcaModel) -> RcaStatus {
    guard(|| store(out, build(SystemConfig::default())?))
}

/// Creates a model from a NUL-terminated TOML configuration.
///
/// # Safety
/// `toml` must point to a NUL-terminated string and `out` must be valid for
/// writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn rca_model_new_from_toml(toml: *const c_char, out: *mut *mut RcaModel) -> RcaStatus {
    guard(|| {
        if toml.is_null() {
            return Err(null("toml"));
        }
        let text = CStr::from_ptr(toml)
            .to_str()
            .map_err(|e| (RcaStatus::Config, format!("configuration is not UTF-8: {e}")))?;
        store(out, build(lift(SystemConfig::from_toml_str(text))?)?)
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle from `rca_model_new*` not freed before.
#[no_mangle]
pub unsafe extern "C" fn rca_model_free(model: *mut RcaModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of couplers `N`, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rca_model_num_couplers(model: *const RcaModel) -> usize {
    model.as_ref().map_or(0, |m| m.config.num_couplers)
}

/// Self-impedance of one dipole in ohms.
///
/// # Safety
/// `model` must be a live handle; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rca_self_impedance(model: *const RcaModel, re: *mut f64, im: *mut f64) -> RcaStatus {
    guard(|| {
        let m = model_ref(model)?;
        if re.is_null() || im.is_null() {
            return Err(null("output"));
        }
        let z = m.impedance.self_impedance();
        *re = z.re;
        *im = z.im;
        Ok(())
    })
}

/// Writes `Z_TX` for the given rotation into `out` as `2·(N+1)²` doubles.
/// When `out_len` is too small the required length is stored in
/// `*required` and `BufferTooSmall` is returned.
///
/// # Safety
/// `axes` must hold `3·num_couplers` doubles, `out` must hold `out_len`
/// doubles and `required` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn rca_impedance_matrix(
    model: *const RcaModel,
    axes: *const f64,
    num_couplers: usize,
    out: *mut f64,
    out_len: usize,
    required: *mut usize,
) -> RcaStatus {
    guard(|| {
        let m = model_ref(model)?;
        let u = read_axes(m, axes, num_couplers)?;
        let dim = num_couplers + 1;
        let need = 2 * dim * dim;
        if !required.is_null() {
            *required = need;
        }
        if out_len < need {
            return Err((RcaStatus::BufferTooSmall, format!("output needs {need} doubles, got {out_len}")));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let geom = lift(m.config.geometry())?;
        let z = lift(m.impedance.assemble(&u, &geom))?;
        let dst = std::slice::from_raw_parts_mut(out, need);
        for i in 0..dim {
            for j in 0..dim {
                let v = z.matrix()[(i, j)];
                dst[2 * (i * dim + j)] = v.re;
                dst[2 * (i * dim + j) + 1] = v.im;
            }
        }
        Ok(())
    })
}

/// Whether the rotation lies in the cap and keeps every pair of wires at
/// least `2a` apart.
///
/// # Safety
/// `axes` must hold `3·num_couplers` doubles and `feasible` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn rca_is_feasible(model: *const RcaModel, axes: *const f64, num_couplers: usize, feasible: *mut bool) -> RcaStatus {
    guard(|| {
        let m = model_ref(model)?;
        let u = read_axes(m, axes, num_couplers)?;
        if feasible.is_null() {
            return Err(null("feasible"));
        }
        let cap = lift(SphericalCap::new(m.config.theta_max))?;
        *feasible = lift(is_feasible(&u, &cap, &lift(m.config.geometry())?))?;
        Ok(())
    })
}

/// Received SNR (linear) and achievable rate in bits/s/Hz for the given
/// rotation over the channel drawn from `seed`.
///
/// # Safety
/// `axes` must hold `3·num_couplers` doubles; `snr` and `rate` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn rca_evaluate(
    model: *const RcaModel,
    axes: *const f64,
    num_couplers: usize,
    seed: u64,
    snr: *mut f64,
    rate: *mut f64,
) -> RcaStatus {
    guard(|| {
        let m = model_ref(model)?;
        let u = read_axes(m, axes, num_couplers)?;
        if snr.is_null() || rate.is_null() {
            return Err(null("output"));
        }
        let channel = lift(generate_channel(&m.config, seed))?;
        let scenario = lift(m.config.scenario(&m.impedance, channel))?;
        let e = lift(scenario.evaluate(&u))?;
        *snr = e.snr;
        *rate = e.rate;
        Ok(())
    })
}

/// Optimizes the rotation for the channel drawn from `seed`. Writes the
/// `3·N` axis components, the rate and the number of refinement iterations.
///
/// # Safety
/// `axes_out` must hold `3·N` doubles; `rate` and `iterations` must be null
/// or writable.
#[no_mangle]
pub unsafe extern "C" fn rca_optimize(
    model: *const RcaModel,
    seed: u64,
    axes_out: *mut f64,
    axes_len: usize,
    rate: *mut f64,
    iterations: *mut usize,
) -> RcaStatus {
    guard(|| {
        let m = model_ref(model)?;
        let n = m.config.num_couplers;
        if axes_len < 3 * n {
            return Err((RcaStatus::BufferTooSmall, format!("axes need {} doubles, got {axes_len}", 3 * n)));
        }
        if n > 0 && axes_out.is_null() {
            return Err(null("axes_out"));
        }
        let channel = lift(generate_channel(&m.config, seed))?;
        let scenario = lift(m.config.scenario(&m.impedance, channel))?;
        let (outcome, result) = lift(scheme_rca(&scenario, &m.config, seed))?;
        if n > 0 {
            let dst = std::slice::from_raw_parts_mut(axes_out, 3 * n);
            for (chunk, u) in dst.chunks_exact_mut(3).zip(result.final_u().columns()) {
                chunk.copy_from_slice(&u.to_array());
            }
        }
        if !rate.is_null() {
            *rate = outcome.rate;
        }
        if !iterations.is_null() {
            *iterations = outcome.iterations;
        }
        Ok(())
    })
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len - 1` bytes) and returns its full length in bytes.
///
/// # Safety
/// `buf` must be null or hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn rca_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rca_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
