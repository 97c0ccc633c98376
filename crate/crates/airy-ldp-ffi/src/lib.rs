//! C ABI for the airy-ldp library.
//!
//! Conventions: fallible calls return an [`AldpStatus`] code and write
//! results through out-pointers; heap objects cross the boundary as
//! opaque handles with explicit `_free` destructors; a thread-local
//! message, readable via [`aldp_last_error`], carries the detail of the
//! most recent failure on the calling thread.

use std::cell::RefCell;
use std::os::raw::c_char;

use airy_ldp::brownian::{sample_path_stream, BrownianPath};
use airy_ldp::estimator::{estimate, EstimatorConfig, LambdaWindow, Mode};
use airy_ldp::grid::PathGrid;
use airy_ldp::rate::{phi, scaled_rate, v_star, ModelParams};
use airy_ldp::riccati::{count_hill, count_sao};

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AldpStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument failed validation; see `aldp_last_error`.
    InvalidArgument = 2,
    /// A numerical failure occurred; see `aldp_last_error`.
    NumericalFailure = 3,
    /// The computation finished but raised a reliability warning.
    ReliabilityWarning = 4,
}

/// Opaque model-parameter handle `(β, L, ζ)`.
pub struct AldpParams(ModelParams);

/// Opaque sampled-path handle.
pub struct AldpPath(BrownianPath);

/// Sampling mode for `aldp_estimate`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AldpMode {
    Plain = 0,
    Tilted = 1,
}

/// Copy the most recent error message on this thread into `buf`
/// (truncated, always NUL-terminated). Returns the full message length.
///
/// # Safety
/// `buf` must point to `cap` writable bytes, or be null (query mode).
#[no_mangle]
pub unsafe extern "C" fn aldp_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Create a parameter handle; all three values must be strictly positive.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn aldp_params_new(
    beta: f64,
    l: f64,
    zeta: f64,
    out: *mut *mut AldpParams,
) -> AldpStatus {
    if out.is_null() {
        return AldpStatus::NullPointer;
    }
    match ModelParams::new(beta, l, zeta) {
        Ok(p) => {
            *out = Box::into_raw(Box::new(AldpParams(p)));
            AldpStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            AldpStatus::InvalidArgument
        }
    }
}

/// Destroy a parameter handle (null is a no-op).
///
/// # Safety
/// `params` must be a handle from `aldp_params_new`, used at most once.
#[no_mangle]
pub unsafe extern "C" fn aldp_params_free(params: *mut AldpParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Rate function `Φ(z)`, defined for `z ≤ 0`.
///
/// # Safety
/// `out` must be a valid `double` pointer.
#[no_mangle]
pub unsafe extern "C" fn aldp_phi(z: f64, out: *mut f64) -> AldpStatus {
    if out.is_null() {
        return AldpStatus::NullPointer;
    }
    match phi(z) {
        Ok(v) => {
            *out = v;
            AldpStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            AldpStatus::InvalidArgument
        }
    }
}

/// Scaled rate `L (2L/β)⁵ Φ(-(β/2L)² ζ)`.
///
/// # Safety
/// `params` must be a live handle and `out` a valid `double` pointer.
#[no_mangle]
pub unsafe extern "C" fn aldp_scaled_rate(params: *const AldpParams, out: *mut f64) -> AldpStatus {
    if params.is_null() || out.is_null() {
        return AldpStatus::NullPointer;
    }
    *out = scaled_rate(&(*params).0);
    AldpStatus::Ok
}

/// Optimal control `v_*(x)`.
///
/// # Safety
/// `params` must be a live handle and `out` a valid `double` pointer.
#[no_mangle]
pub unsafe extern "C" fn aldp_v_star(
    params: *const AldpParams,
    x: f64,
    out: *mut f64,
) -> AldpStatus {
    if params.is_null() || out.is_null() {
        return AldpStatus::NullPointer;
    }
    *out = v_star(x, &(*params).0);
    AldpStatus::Ok
}

/// Cost function `w_t(λ) = log(1 + exp(-t^{1/3}λ))` for `t > 0`.
///
/// # Safety
/// `out` must be a valid `double` pointer.
#[no_mangle]
pub unsafe extern "C" fn aldp_w_t(lambda: f64, t: f64, out: *mut f64) -> AldpStatus {
    if out.is_null() {
        return AldpStatus::NullPointer;
    }
    if !(t > 0.0) {
        set_error(format!("t must be positive, got {t}"));
        return AldpStatus::InvalidArgument;
    }
    *out = airy_ldp::cost::w_t(lambda, t);
    AldpStatus::Ok
}

/// Derivative `w'_t(λ)`.
///
/// # Safety
/// `out` must be a valid `double` pointer.
#[no_mangle]
pub unsafe extern "C" fn aldp_w_t_deriv(lambda: f64, t: f64, out: *mut f64) -> AldpStatus {
    if out.is_null() {
        return AldpStatus::NullPointer;
    }
    if !(t > 0.0) {
        set_error(format!("t must be positive, got {t}"));
        return AldpStatus::InvalidArgument;
    }
    *out = airy_ldp::cost::w_t_deriv(lambda, t);
    AldpStatus::Ok
}

/// Sample a Brownian path on the uniform grid `(step, x_max)`,
/// deterministic in `(seed, stream)`.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn aldp_path_sample(
    step: f64,
    x_max: f64,
    seed: u64,
    stream: u64,
    out: *mut *mut AldpPath,
) -> AldpStatus {
    if out.is_null() {
        return AldpStatus::NullPointer;
    }
    match PathGrid::new(step, x_max) {
        Ok(grid) => {
            *out = Box::into_raw(Box::new(AldpPath(sample_path_stream(&grid, seed, stream))));
            AldpStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            AldpStatus::InvalidArgument
        }
    }
}

/// Destroy a path handle (null is a no-op).
///
/// # Safety
/// `path` must be a handle from `aldp_path_sample`, used at most once.
#[no_mangle]
pub unsafe extern "C" fn aldp_path_free(path: *mut AldpPath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}

/// Number of nodal values carried by the path.
///
/// # Safety
/// `path` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn aldp_path_len(path: *const AldpPath) -> usize {
    if path.is_null() {
        return 0;
    }
    (*path).0.values().len()
}

/// Copy the nodal values into `buf`; `len` must equal `aldp_path_len`.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn aldp_path_values(
    path: *const AldpPath,
    buf: *mut f64,
    len: usize,
) -> AldpStatus {
    if path.is_null() || buf.is_null() {
        return AldpStatus::NullPointer;
    }
    let values = (*path).0.values();
    if len != values.len() {
        set_error(format!("buffer length {len} != path length {}", values.len()));
        return AldpStatus::InvalidArgument;
    }
    std::ptr::copy_nonoverlapping(values.as_ptr(), buf, len);
    AldpStatus::Ok
}

/// Full-line eigenvalue count at `lambda` (explosions of the confined
/// Riccati flow). `tail_ok` reports the no-explosion certificate past the
/// domain cutoff; a tripped monitor returns `ReliabilityWarning` with the
/// count still written.
///
/// # Safety
/// `path` must be a live handle; `out_count` and `out_tail_ok` must be
/// valid pointers.
#[no_mangle]
pub unsafe extern "C" fn aldp_count_sao(
    path: *const AldpPath,
    beta: f64,
    lambda: f64,
    out_count: *mut usize,
    out_tail_ok: *mut bool,
) -> AldpStatus {
    if path.is_null() || out_count.is_null() || out_tail_ok.is_null() {
        return AldpStatus::NullPointer;
    }
    match count_sao(&(*path).0, beta, lambda) {
        Ok(c) => {
            *out_count = c.count;
            *out_tail_ok = c.tail_ok;
            if c.tail_ok {
                AldpStatus::Ok
            } else {
                set_error("tail monitor tripped past the domain cutoff");
                AldpStatus::ReliabilityWarning
            }
        }
        Err(e) => {
            set_error(e.to_string());
            AldpStatus::InvalidArgument
        }
    }
}

/// Finite-interval eigenvalue count at `lambda` on `(a, b]`.
///
/// # Safety
/// `path` must be a live handle and `out_count` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aldp_count_hill(
    path: *const AldpPath,
    beta: f64,
    lambda: f64,
    a: f64,
    b: f64,
    out_count: *mut usize,
) -> AldpStatus {
    if path.is_null() || out_count.is_null() {
        return AldpStatus::NullPointer;
    }
    match count_hill(&(*path).0, beta, lambda, (a, b)) {
        Ok(c) => {
            *out_count = c;
            AldpStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            AldpStatus::InvalidArgument
        }
    }
}

/// Monte Carlo estimate of the spectral exponential moment.
///
/// Writes `log Ĝ`, its standard error, and the effective sample size.
/// Returns `ReliabilityWarning` when the report is flagged (the outputs
/// are still written).
///
/// # Safety
/// `params` must be a live handle; the three out-pointers must be valid.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn aldp_estimate(
    params: *const AldpParams,
    t: f64,
    alpha: f64,
    mode: AldpMode,
    n_samples: usize,
    seed: u64,
    riccati_step: f64,
    out_log_estimate: *mut f64,
    out_std_error: *mut f64,
    out_ess: *mut f64,
) -> AldpStatus {
    if params.is_null()
        || out_log_estimate.is_null()
        || out_std_error.is_null()
        || out_ess.is_null()
    {
        return AldpStatus::NullPointer;
    }
    let mode = match mode {
        AldpMode::Plain => Mode::Plain,
        AldpMode::Tilted => Mode::Tilted,
    };
    let mut config = EstimatorConfig::new((*params).0, t, mode, n_samples, seed);
    config.alpha = alpha;
    config.riccati_step = riccati_step;
    config.lambda_quadrature = LambdaWindow::default();
    match estimate(&config) {
        Ok(report) => {
            *out_log_estimate = report.log_estimate;
            *out_std_error = report.std_error_log;
            *out_ess = report.ess;
            if report.reliability_warning {
                set_error("estimate carries a reliability warning");
                AldpStatus::ReliabilityWarning
            } else {
                AldpStatus::Ok
            }
        }
        Err(e) => {
            set_error(e.to_string());
            AldpStatus::NumericalFailure
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_lifecycle_and_rate() {
        unsafe {
            let mut params: *mut AldpParams = std::ptr::null_mut();
            assert_eq!(aldp_params_new(2.0, 1.0, 1.0, &mut params), AldpStatus::Ok);
            let mut rate = 0.0;
            assert_eq!(aldp_scaled_rate(params, &mut rate), AldpStatus::Ok);
            let mut phi_val = 0.0;
            assert_eq!(aldp_phi(-1.0, &mut phi_val), AldpStatus::Ok);
            assert!((rate - phi_val).abs() < 1e-15);
            let mut v0 = 0.0;
            assert_eq!(aldp_v_star(params, 0.0, &mut v0), AldpStatus::Ok);
            assert!(v0 > 0.3 && v0 < 0.4);
            aldp_params_free(params);
        }
    }

    #[test]
    fn invalid_arguments_report_errors() {
        unsafe {
            let mut params: *mut AldpParams = std::ptr::null_mut();
            assert_eq!(
                aldp_params_new(-1.0, 1.0, 1.0, &mut params),
                AldpStatus::InvalidArgument
            );
            let mut out = 0.0;
            assert_eq!(aldp_phi(0.5, &mut out), AldpStatus::InvalidArgument);
            let mut buf = [0i8; 128];
            let len = aldp_last_error(buf.as_mut_ptr(), buf.len());
            assert!(len > 0);
            assert_eq!(aldp_phi(0.5, std::ptr::null_mut()), AldpStatus::NullPointer);
        }
    }

    #[test]
    fn path_sampling_and_counting() {
        unsafe {
            let mut path: *mut AldpPath = std::ptr::null_mut();
            assert_eq!(aldp_path_sample(1e-2, 16.0, 42, 0, &mut path), AldpStatus::Ok);
            let n = aldp_path_len(path);
            assert_eq!(n, 1601);
            let mut values = vec![0.0; n];
            assert_eq!(aldp_path_values(path, values.as_mut_ptr(), n), AldpStatus::Ok);
            assert_eq!(values[0], 0.0);

            let mut count = 0usize;
            let mut tail_ok = false;
            assert_eq!(
                aldp_count_sao(path, 2.0, -10.0, &mut count, &mut tail_ok),
                AldpStatus::Ok
            );
            assert_eq!(count, 0);
            assert!(tail_ok);

            let mut hill = 0usize;
            assert_eq!(
                aldp_count_hill(path, 2.0, 100.0, 0.0, 1.0, &mut hill),
                AldpStatus::Ok
            );
            assert!(hill >= 2 && hill <= 4, "hill count {hill}");
            aldp_path_free(path);
        }
    }

    #[test]
    fn estimate_through_the_abi() {
        unsafe {
            let mut params: *mut AldpParams = std::ptr::null_mut();
            assert_eq!(aldp_params_new(2.0, 1.0, 1.0, &mut params), AldpStatus::Ok);
            let (mut log_g, mut se, mut ess) = (0.0, 0.0, 0.0);
            let status = aldp_estimate(
                params,
                1.0,
                1.0 / 6.0,
                AldpMode::Tilted,
                32,
                7,
                2e-2,
                &mut log_g,
                &mut se,
                &mut ess,
            );
            assert_eq!(status, AldpStatus::Ok);
            assert!(log_g.is_finite() && log_g < 0.0);
            assert!(se.is_finite() && se > 0.0);
            assert!(ess > 10.0);
            aldp_params_free(params);
        }
    }
}
