//! C ABI for the operator-regression laboratory.
//!
//! Conventions:
//! - Objects cross the boundary as opaque handles created by `*_new`-style
//!   constructors and released by the matching `*_free`.
//! - Every fallible call returns an [`OplabStatus`]; outputs go through
//!   pointer arguments. On any non-OK status, `oplab_last_error_message`
//!   returns a thread-local, NUL-terminated description of what went wrong.
//! - Panics never unwind across the boundary; they convert to
//!   `OPLAB_STATUS_INTERNAL`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use oplab_core::estimator::{self, HistogramEstimator, HistogramPartition, Truncation};
use oplab_core::lowerbound::FanoKnobs;
use oplab_core::measure::{CoordinateLaw, InputMeasure};
use oplab_core::noise::{Dataset, NoiseKind};
use oplab_core::rates::{self, LowerBoundInputs, UpperBoundInputs};
use oplab_core::rng::stream;
use oplab_core::spectrum::SpectrumProfile;
use oplab_core::Error;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OplabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Overflow = 3,
    Infeasible = 4,
    OutOfRange = 5,
    BufferTooSmall = 6,
    Internal = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let text = CString::new(message).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

fn status_of(err: &Error) -> OplabStatus {
    match err {
        Error::InvalidParameter(_) | Error::Config(_) => OplabStatus::InvalidArgument,
        Error::OutOfRange { .. } => OplabStatus::OutOfRange,
        Error::Overflow { .. } => OplabStatus::Overflow,
        Error::InfeasibleSelection { .. } | Error::Infeasible(_) => OplabStatus::Infeasible,
        Error::Certification(_) | Error::RetryBudget(_) => OplabStatus::InvalidArgument,
        Error::Internal(_) | Error::Io(_) => OplabStatus::Internal,
    }
}

fn fail(err: Error) -> OplabStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

fn null_pointer(what: &str) -> OplabStatus {
    set_error(format!("null pointer: {what}"));
    OplabStatus::NullPointer
}

/// Runs a closure, converting panics into `Internal`.
fn guarded(body: impl FnOnce() -> OplabStatus) -> OplabStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic".into());
            OplabStatus::Internal
        }
    }
}

/// Last error message for this thread, valid until the next failing call.
/// Null when no error has occurred yet.
#[no_mangle]
pub extern "C" fn oplab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |text| text.as_ptr())
    })
}

/// Frees a string returned by this library.
///
/// # Safety
/// `text` must have been returned by an `oplab_*` call and not freed before.
#[no_mangle]
pub unsafe extern "C" fn oplab_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(CString::from_raw(text));
    }
}

/// Opaque eigenvalue decay profile.
pub struct OplabSpectrum(SpectrumProfile);
/// Opaque input measure.
pub struct OplabMeasure(InputMeasure);
/// Opaque fitted histogram estimator.
pub struct OplabEstimator(HistogramEstimator);

unsafe fn write_out<T>(out: *mut T, value: T) -> OplabStatus {
    if out.is_null() {
        return null_pointer("out");
    }
    out.write(value);
    OplabStatus::Ok
}

fn boxed_out<T, O>(out: *mut *mut O, value: T, wrap: impl FnOnce(T) -> O) -> OplabStatus {
    if out.is_null() {
        return null_pointer("out");
    }
    unsafe { out.write(Box::into_raw(Box::new(wrap(value)))) };
    OplabStatus::Ok
}

// ---------------------------------------------------------------------------
// Spectrum
// ---------------------------------------------------------------------------

/// lambda_i = i^-alpha (alpha > 1).
#[no_mangle]
pub extern "C" fn oplab_spectrum_algebraic(alpha: f64, out: *mut *mut OplabSpectrum) -> OplabStatus {
    guarded(|| match SpectrumProfile::algebraic(alpha) {
        Ok(s) => boxed_out(out, s, OplabSpectrum),
        Err(e) => fail(e),
    })
}

/// lambda_i = exp(-alpha i^beta).
#[no_mangle]
pub extern "C" fn oplab_spectrum_exponential(
    alpha: f64,
    beta: f64,
    out: *mut *mut OplabSpectrum,
) -> OplabStatus {
    guarded(|| match SpectrumProfile::exponential(alpha, beta) {
        Ok(s) => boxed_out(out, s, OplabSpectrum),
        Err(e) => fail(e),
    })
}

/// lambda_i = exp(-exp(alpha i)).
#[no_mangle]
pub extern "C" fn oplab_spectrum_double_exponential(
    alpha: f64,
    out: *mut *mut OplabSpectrum,
) -> OplabStatus {
    guarded(|| match SpectrumProfile::double_exponential(alpha) {
        Ok(s) => boxed_out(out, s, OplabSpectrum),
        Err(e) => fail(e),
    })
}

/// Explicit nonincreasing positive eigenvalue list.
///
/// # Safety
/// `values` must point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn oplab_spectrum_explicit(
    values: *const f64,
    len: usize,
    out: *mut *mut OplabSpectrum,
) -> OplabStatus {
    guarded(|| {
        if values.is_null() {
            return null_pointer("values");
        }
        let list = unsafe { slice::from_raw_parts(values, len) }.to_vec();
        match SpectrumProfile::explicit(list) {
            Ok(s) => boxed_out(out, s, OplabSpectrum),
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `spectrum` must be a live handle from a spectrum constructor; it is
/// invalid after this call.
#[no_mangle]
pub unsafe extern "C" fn oplab_spectrum_free(spectrum: *mut OplabSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

macro_rules! deref {
    ($ptr:ident) => {
        match unsafe { $ptr.as_ref() } {
            Some(value) => value,
            None => return null_pointer(stringify!($ptr)),
        }
    };
}

/// lambda_i, 1-based.
///
/// # Safety
/// `spectrum` must be a live spectrum handle.
#[no_mangle]
pub unsafe extern "C" fn oplab_spectrum_eigenvalue(
    spectrum: *const OplabSpectrum,
    i: usize,
    out: *mut f64,
) -> OplabStatus {
    guarded(|| {
        let s = deref!(spectrum);
        match s.0.eigenvalue(i) {
            Ok(v) => unsafe { write_out(out, v) },
            Err(e) => fail(e),
        }
    })
}

/// Sum of 1/lambda_j for j <= d.
///
/// # Safety
/// `spectrum` must be a live spectrum handle.
#[no_mangle]
pub unsafe extern "C" fn oplab_spectrum_inv_sum(
    spectrum: *const OplabSpectrum,
    d: usize,
    out: *mut f64,
) -> OplabStatus {
    guarded(|| {
        let s = deref!(spectrum);
        match s.0.inv_sum(d) {
            Ok(v) => unsafe { write_out(out, v) },
            Err(e) => fail(e),
        }
    })
}

/// ln of the inverse sum (finite even when the linear value overflows).
///
/// # Safety
/// `spectrum` must be a live spectrum handle.
#[no_mangle]
pub unsafe extern "C" fn oplab_spectrum_log_inv_sum(
    spectrum: *const OplabSpectrum,
    d: usize,
    out: *mut f64,
) -> OplabStatus {
    guarded(|| {
        let s = deref!(spectrum);
        match s.0.log_inv_sum(d) {
            Ok(v) => unsafe { write_out(out, v) },
            Err(e) => fail(e),
        }
    })
}

/// Sum of lambda_j for j > d, certified to `rel_tol`.
///
/// # Safety
/// `spectrum` must be a live spectrum handle.
#[no_mangle]
pub unsafe extern "C" fn oplab_spectrum_tail_sum(
    spectrum: *const OplabSpectrum,
    d: usize,
    rel_tol: f64,
    out: *mut f64,
) -> OplabStatus {
    guarded(|| {
        let s = deref!(spectrum);
        match s.0.tail_sum(d, rel_tol) {
            Ok(v) => unsafe { write_out(out, v) },
            Err(e) => fail(e),
        }
    })
}

/// Sum of ln lambda_j for j <= d.
///
/// # Safety
/// `spectrum` must be a live spectrum handle.
#[no_mangle]
pub unsafe extern "C" fn oplab_spectrum_log_product(
    spectrum: *const OplabSpectrum,
    d: usize,
    out: *mut f64,
) -> OplabStatus {
    guarded(|| {
        let s = deref!(spectrum);
        match s.0.log_product(d) {
            Ok(v) => unsafe { write_out(out, v) },
            Err(e) => fail(e),
        }
    })
}

// ---------------------------------------------------------------------------
// Measure
// ---------------------------------------------------------------------------

fn law_of(code: c_int) -> Result<CoordinateLaw, Error> {
    match code {
        0 => Ok(CoordinateLaw::UniformUnitVariance),
        1 => Ok(CoordinateLaw::StandardGaussian),
        other => Err(Error::InvalidParameter(format!(
            "law code {other} (expected 0 = uniform, 1 = gaussian)"
        ))),
    }
}

/// Input measure over the first `sim_dim` eigencoordinates (`sim_dim = 0`
/// picks the default truncation).
///
/// # Safety
/// `spectrum` must be a live spectrum handle.
#[no_mangle]
pub unsafe extern "C" fn oplab_measure_new(
    spectrum: *const OplabSpectrum,
    law: c_int,
    sim_dim: usize,
    out: *mut *mut OplabMeasure,
) -> OplabStatus {
    guarded(|| {
        let s = deref!(spectrum);
        let law = match law_of(law) {
            Ok(law) => law,
            Err(e) => return fail(e),
        };
        let measure = if sim_dim == 0 {
            InputMeasure::with_default_sim_dim(s.0.clone(), law)
        } else {
            InputMeasure::new(s.0.clone(), law, sim_dim)
        };
        match measure {
            Ok(m) => boxed_out(out, m, OplabMeasure),
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `measure` must be a live handle; it is invalid after this call.
#[no_mangle]
pub unsafe extern "C" fn oplab_measure_free(measure: *mut OplabMeasure) {
    if !measure.is_null() {
        drop(Box::from_raw(measure));
    }
}

/// Simulation dimension of the measure.
///
/// # Safety
/// `measure` must be a live measure handle.
#[no_mangle]
pub unsafe extern "C" fn oplab_measure_sim_dim(
    measure: *const OplabMeasure,
    out: *mut usize,
) -> OplabStatus {
    guarded(|| {
        let m = deref!(measure);
        unsafe { write_out(out, m.0.sim_dim()) }
    })
}

/// Input-tail energy neglected by the truncation.
///
/// # Safety
/// `measure` must be a live measure handle.
#[no_mangle]
pub unsafe extern "C" fn oplab_measure_tail_energy(
    measure: *const OplabMeasure,
    out: *mut f64,
) -> OplabStatus {
    guarded(|| {
        let m = deref!(measure);
        unsafe { write_out(out, m.0.tail_energy_neglected()) }
    })
}

/// Draws `count` coordinate vectors into a row-major buffer of
/// `count * sim_dim` doubles. Deterministic given the seed.
///
/// # Safety
/// `measure` must be a live measure handle and `buffer` must hold
/// `buffer_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn oplab_measure_sample(
    measure: *const OplabMeasure,
    count: usize,
    seed: u64,
    buffer: *mut f64,
    buffer_len: usize,
) -> OplabStatus {
    guarded(|| {
        let m = deref!(measure);
        if buffer.is_null() {
            return null_pointer("buffer");
        }
        let dim = m.0.sim_dim();
        let needed = match count.checked_mul(dim) {
            Some(n) => n,
            None => {
                set_error("count * sim_dim overflows".into());
                return OplabStatus::InvalidArgument;
            }
        };
        if buffer_len < needed {
            set_error(format!(
                "buffer holds {buffer_len} doubles, need {needed} for {count} samples of dimension {dim}"
            ));
            return OplabStatus::BufferTooSmall;
        }
        let mut rng = stream(seed, &[]);
        let samples = match m.0.sample_inputs(count, &mut rng) {
            Ok(s) => s,
            Err(e) => return fail(e),
        };
        let out = unsafe { slice::from_raw_parts_mut(buffer, needed) };
        for (row, sample) in samples.iter().enumerate() {
            out[row * dim..(row + 1) * dim].copy_from_slice(sample);
        }
        OplabStatus::Ok
    })
}

// ---------------------------------------------------------------------------
// Histogram estimator
// ---------------------------------------------------------------------------

/// Fits the histogram estimator on a dataset given in row-major form:
/// `xs` is `m x x_dim`, `ys` is `m x coeff_dim`. `rank = 0` keeps all
/// coefficients.
///
/// # Safety
/// `spectrum`, `n_per_axis`, `xs`, `ys` must point to live data of the
/// stated lengths.
#[no_mangle]
pub unsafe extern "C" fn oplab_histogram_fit(
    spectrum: *const OplabSpectrum,
    d: usize,
    r_box: f64,
    n_per_axis: *const usize,
    xs: *const f64,
    x_dim: usize,
    ys: *const f64,
    coeff_dim: usize,
    m: usize,
    rank: usize,
    out: *mut *mut OplabEstimator,
) -> OplabStatus {
    guarded(|| {
        let s = deref!(spectrum);
        if n_per_axis.is_null() {
            return null_pointer("n_per_axis");
        }
        if xs.is_null() || ys.is_null() {
            return null_pointer("xs/ys");
        }
        let counts = unsafe { slice::from_raw_parts(n_per_axis, d) }.to_vec();
        let partition = match HistogramPartition::new(s.0.clone(), d, r_box, counts) {
            Ok(p) => p,
            Err(e) => return fail(e),
        };
        let xs = unsafe { slice::from_raw_parts(xs, m * x_dim) };
        let ys = unsafe { slice::from_raw_parts(ys, m * coeff_dim) };
        let dataset = Dataset {
            inputs: xs.chunks(x_dim).map(|c| c.to_vec()).collect(),
            outputs: ys.chunks(coeff_dim).map(|c| c.to_vec()).collect(),
            coeff_dim,
        };
        let truncation = if rank == 0 {
            Truncation::Full
        } else {
            Truncation::Rank(rank)
        };
        match estimator::fit(&dataset, partition, truncation) {
            Ok(est) => boxed_out(out, est, OplabEstimator),
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `estimator` must be a live handle; it is invalid after this call.
#[no_mangle]
pub unsafe extern "C" fn oplab_histogram_free(estimator: *mut OplabEstimator) {
    if !estimator.is_null() {
        drop(Box::from_raw(estimator));
    }
}

/// Prediction at a point: writes `coeff_dim` doubles.
///
/// # Safety
/// `estimator` must be a live handle, `x` must hold `x_len` doubles, and
/// `out` must hold `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn oplab_histogram_predict(
    estimator: *const OplabEstimator,
    x: *const f64,
    x_len: usize,
    out: *mut f64,
    out_len: usize,
) -> OplabStatus {
    guarded(|| {
        let est = deref!(estimator);
        if x.is_null() {
            return null_pointer("x");
        }
        if out.is_null() {
            return null_pointer("out");
        }
        if out_len < est.0.coeff_dim() {
            set_error(format!(
                "output buffer holds {out_len} doubles, need {}",
                est.0.coeff_dim()
            ));
            return OplabStatus::BufferTooSmall;
        }
        let point = unsafe { slice::from_raw_parts(x, x_len) };
        let pred = est.0.predict(point);
        let out = unsafe { slice::from_raw_parts_mut(out, est.0.coeff_dim()) };
        out.copy_from_slice(&pred);
        OplabStatus::Ok
    })
}

/// Number of output coefficients per prediction.
///
/// # Safety
/// `estimator` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn oplab_histogram_coeff_dim(
    estimator: *const OplabEstimator,
    out: *mut usize,
) -> OplabStatus {
    guarded(|| {
        let est = deref!(estimator);
        unsafe { write_out(out, est.0.coeff_dim()) }
    })
}

/// Serializes the estimator to JSON (round-trip safe); free the string with
/// `oplab_string_free`.
///
/// # Safety
/// `estimator` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn oplab_histogram_to_json(
    estimator: *const OplabEstimator,
    out: *mut *mut c_char,
) -> OplabStatus {
    guarded(|| {
        let est = deref!(estimator);
        if out.is_null() {
            return null_pointer("out");
        }
        match est.0.to_json() {
            Ok(text) => match CString::new(text) {
                Ok(cstr) => {
                    unsafe { out.write(cstr.into_raw()) };
                    OplabStatus::Ok
                }
                Err(_) => {
                    set_error("serialized JSON contained a NUL byte".into());
                    OplabStatus::Internal
                }
            },
            Err(e) => fail(e),
        }
    })
}

/// Parses an estimator serialized by `oplab_histogram_to_json`.
///
/// # Safety
/// `text` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn oplab_histogram_from_json(
    text: *const c_char,
    out: *mut *mut OplabEstimator,
) -> OplabStatus {
    guarded(|| {
        if text.is_null() {
            return null_pointer("text");
        }
        let text = match unsafe { std::ffi::CStr::from_ptr(text) }.to_str() {
            Ok(t) => t,
            Err(_) => {
                set_error("estimator JSON is not valid UTF-8".into());
                return OplabStatus::InvalidArgument;
            }
        };
        match HistogramEstimator::from_json(text) {
            Ok(est) => boxed_out(out, est, OplabEstimator),
            Err(e) => fail(e),
        }
    })
}

// ---------------------------------------------------------------------------
// Bound evaluation
// ---------------------------------------------------------------------------

fn noise_of(code: c_int) -> Result<NoiseKind, Error> {
    match code {
        0 => Ok(NoiseKind::Hilbert),
        1 => Ok(NoiseKind::White),
        other => Err(Error::InvalidParameter(format!(
            "noise code {other} (expected 0 = hilbert, 1 = white)"
        ))),
    }
}

/// Evaluated upper-bound display at dimension `d` (`rank = 0` means none,
/// required for white noise).
///
/// # Safety
/// `spectrum` must be a live spectrum handle.
#[no_mangle]
pub unsafe extern "C" fn oplab_upper_bound(
    spectrum: *const OplabSpectrum,
    m: f64,
    sigma: f64,
    b_bound: f64,
    lipschitz: f64,
    p: f64,
    noise: c_int,
    rank: usize,
    t: f64,
    d: usize,
    out: *mut f64,
) -> OplabStatus {
    guarded(|| {
        let s = deref!(spectrum);
        let noise = match noise_of(noise) {
            Ok(n) => n,
            Err(e) => return fail(e),
        };
        let inputs = UpperBoundInputs {
            spectrum: &s.0,
            m,
            sigma,
            b_bound,
            lipschitz,
            p,
            noise,
            rank: (rank > 0).then_some(rank),
            t,
        };
        match rates::eval_upper_bound(&inputs, d) {
            Ok(v) => unsafe { write_out(out, v) },
            Err(e) => fail(e),
        }
    })
}

/// Evaluated lower-bound display. `d = 0` scans dimensions up to `d_max`.
/// Writes the bound value, the width used, and the dimension chosen.
///
/// # Safety
/// `spectrum` must be a live spectrum handle; output pointers must be
/// writable or null.
#[no_mangle]
pub unsafe extern "C" fn oplab_lower_bound(
    spectrum: *const OplabSpectrum,
    m: f64,
    sigma: f64,
    lipschitz: f64,
    b_bound: f64,
    p: f64,
    noise: c_int,
    upsilon_top: f64,
    law: c_int,
    d: usize,
    d_max: usize,
    out_value: *mut f64,
    out_width: *mut f64,
    out_d: *mut usize,
) -> OplabStatus {
    guarded(|| {
        let s = deref!(spectrum);
        let noise = match noise_of(noise) {
            Ok(n) => n,
            Err(e) => return fail(e),
        };
        let law = match law_of(law) {
            Ok(l) => l.constants(),
            Err(e) => return fail(e),
        };
        let inputs = LowerBoundInputs {
            spectrum: &s.0,
            m,
            sigma,
            lipschitz,
            b_bound,
            p,
            noise,
            upsilon_top,
            law,
            knobs: FanoKnobs::default(),
        };
        let eval = if d == 0 {
            rates::best_lower_bound(&inputs, d_max.max(1))
        } else {
            rates::eval_lower_bound(&inputs, d)
        };
        match eval {
            Ok(eval) => {
                if !out_value.is_null() {
                    unsafe { out_value.write(eval.value) };
                }
                if !out_width.is_null() {
                    unsafe { out_width.write(eval.h_star) };
                }
                if !out_d.is_null() {
                    unsafe { out_d.write(eval.d) };
                }
                OplabStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}
