//! C API over the `stjd` crate.
//!
//! Every function returns an [`StjdStatus`]; on failure the message of the
//! most recent error on the calling thread is available through
//! [`stjd_last_error_message`]. Sequences are opaque handles created by
//! [`stjd_sequence_from_json`] and released with [`stjd_sequence_free`].
//! Output buffers are caller-allocated; a buffer that is too small yields
//! `STJD_STATUS_BUFFER_TOO_SMALL` and leaves it untouched.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ndarray::Array2;
use stjd::contrastive::bandwidths_for;
use stjd::density::{density_change_field, BandwidthVector, NormalizeOptions, SoftmaxAxis};
use stjd::prime::{detect_prime, sample_mask_plan};
use stjd::stats::paired_t_test;
use stjd::{Error, SkeletonSequence};

/// Result code of every C API call.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StjdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    ShapeMismatch = 4,
    Numeric = 5,
    BufferTooSmall = 6,
    Internal = 7,
}

/// Opaque skeleton sequence.
pub struct StjdSequence {
    inner: SkeletonSequence,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StjdTTest {
    pub t_value: f64,
    pub degrees_freedom: usize,
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> StjdStatus {
    match e {
        Error::TruncatedFile { .. } | Error::MalformedNumber { .. } | Error::Json(_) | Error::Io(_) => StjdStatus::Parse,
        Error::JointCountMismatch { .. }
        | Error::ShapeMismatch(_)
        | Error::MaskShapeMismatch { .. }
        | Error::LengthMismatch(..)
        | Error::SequenceTooShort { .. }
        | Error::UnsupportedChannelCount(_)
        | Error::MultiChannelUnsupported(_) => StjdStatus::ShapeMismatch,
        Error::NonFiniteInput(_) | Error::ZeroVariance | Error::EmptyMask | Error::EmptyBank => StjdStatus::Numeric,
        _ => StjdStatus::InvalidArgument,
    }
}

struct Failure(StjdStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), format!("{}: {e}", e.code()))
    }
}

fn fail(status: StjdStatus, msg: &str) -> Failure {
    Failure(status, msg.to_string())
}

/// Runs `f`, recording any error or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> StjdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => StjdStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            StjdStatus::Internal
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(StjdStatus::NullPointer, "null input buffer"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, needed: usize) -> Result<&'a mut [T], Failure> {
    if needed == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(fail(StjdStatus::NullPointer, "null output buffer"));
    }
    if len < needed {
        return Err(Failure(
            StjdStatus::BufferTooSmall,
            format!("output buffer holds {len} values, {needed} needed"),
        ));
    }
    Ok(std::slice::from_raw_parts_mut(p, needed))
}

unsafe fn field<'a>(p: *const f64, frames: usize, joints: usize) -> Result<Array2<f64>, Failure> {
    let values: &'a [f64] = slice(p, frames * joints)?;
    Ok(Array2::from_shape_vec((frames, joints), values.to_vec()).expect("length checked"))
}

/// Copies the calling thread's last error message, NUL-terminated, into
/// `buf`. Returns the message length in bytes excluding the terminator, so a
/// caller can size the buffer with a first call using `len = 0`.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null when `len` is 0.
#[no_mangle]
pub unsafe extern "C" fn stjd_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Parses a sequence from the JSON exchange format.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stjd_sequence_from_json(json: *const c_char, out: *mut *mut StjdSequence) -> StjdStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return Err(fail(StjdStatus::NullPointer, "null argument"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| fail(StjdStatus::Parse, "input is not valid UTF-8"))?;
        let inner = SkeletonSequence::from_json_str(text)?;
        *out = Box::into_raw(Box::new(StjdSequence { inner }));
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `seq` must come from [`stjd_sequence_from_json`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn stjd_sequence_free(seq: *mut StjdSequence) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}

/// Writes the channel, joint and frame counts.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn stjd_sequence_shape(
    seq: *const StjdSequence,
    channels: *mut usize,
    joints: *mut usize,
    frames: *mut usize,
) -> StjdStatus {
    guard(|| {
        if seq.is_null() || channels.is_null() || joints.is_null() || frames.is_null() {
            return Err(fail(StjdStatus::NullPointer, "null argument"));
        }
        let s = &(*seq).inner;
        *channels = s.channels();
        *joints = s.joints();
        *frames = s.frames();
        Ok(())
    })
}

/// Raw and normalized density change, both frames x joints row-major.
///
/// `bandwidths` may be null, in which case they are fitted to the sequence
/// (`fit_bandwidths`) or set to the rule-of-thumb value. `per_frame`
/// selects one softmax per frame instead of one over the whole field.
///
/// # Safety
/// Buffers must be valid for their stated lengths.
#[no_mangle]
pub unsafe extern "C" fn stjd_density_change(
    seq: *const StjdSequence,
    bandwidths: *const f64,
    n_bandwidths: usize,
    fit_bandwidths: bool,
    delta_t: usize,
    per_frame: bool,
    raw_out: *mut f64,
    normalized_out: *mut f64,
    out_len: usize,
) -> StjdStatus {
    guard(|| {
        if seq.is_null() {
            return Err(fail(StjdStatus::NullPointer, "null sequence"));
        }
        let s = &(*seq).inner;
        let h = if bandwidths.is_null() {
            bandwidths_for(s, fit_bandwidths)?
        } else {
            BandwidthVector::new(slice(bandwidths, n_bandwidths)?.to_vec())?
        };
        let opts = NormalizeOptions {
            axis: if per_frame { SoftmaxAxis::PerFrame } else { SoftmaxAxis::Global },
            ..NormalizeOptions::default()
        };
        let f = density_change_field(s.values(), &h, delta_t, opts)?;
        let n = f.raw.len();
        let raw = slice_mut(raw_out, out_len, n)?;
        let normalized = slice_mut(normalized_out, out_len, n)?;
        raw.iter_mut().zip(f.raw.iter()).for_each(|(o, v)| *o = *v);
        normalized.iter_mut().zip(f.normalized.iter()).for_each(|(o, v)| *o = *v);
        Ok(())
    })
}

/// Thresholds a normalized field at `beta` into `mask_out` (0/1 per entry),
/// promoting the maximum when nothing passes; `fallback_out` may be null.
///
/// # Safety
/// Buffers must hold `frames * joints` values.
#[no_mangle]
pub unsafe extern "C" fn stjd_detect_prime(
    normalized: *const f64,
    frames: usize,
    joints: usize,
    beta: f64,
    mask_out: *mut u8,
    fallback_out: *mut bool,
) -> StjdStatus {
    guard(|| {
        let f = field(normalized, frames, joints)?;
        let mask = detect_prime(&f, beta)?;
        let out = slice_mut(mask_out, frames * joints, frames * joints)?;
        out.iter_mut().zip(mask.mask.iter()).for_each(|(o, &m)| *o = m as u8);
        if !fallback_out.is_null() {
            *fallback_out = mask.fallback;
        }
        Ok(())
    })
}

/// Draws a masking plan; writes `(frame, joint)` pairs flattened into
/// `indices_out` (capacity in pairs) and their number into `count_out`.
///
/// # Safety
/// `indices_out` must hold `2 * capacity` values.
#[no_mangle]
pub unsafe extern "C" fn stjd_mask_plan(
    normalized: *const f64,
    frames: usize,
    joints: usize,
    ratio: f64,
    temperature: f64,
    seed: u64,
    indices_out: *mut usize,
    capacity: usize,
    count_out: *mut usize,
) -> StjdStatus {
    guard(|| {
        if count_out.is_null() {
            return Err(fail(StjdStatus::NullPointer, "null count"));
        }
        let f = field(normalized, frames, joints)?;
        let plan = sample_mask_plan(&f, ratio, temperature, seed)?;
        let n = plan.masked_indices.len();
        *count_out = n;
        let out = slice_mut(indices_out, 2 * capacity, 2 * n)?;
        for (pair, &(t, v)) in out.chunks_exact_mut(2).zip(&plan.masked_indices) {
            pair[0] = t;
            pair[1] = v;
        }
        Ok(())
    })
}

/// Paired two-tailed t-test of `a - b`.
///
/// # Safety
/// `a` and `b` must hold `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stjd_paired_t_test(
    a: *const f64,
    b: *const f64,
    n: usize,
    alpha: f64,
    out: *mut StjdTTest,
) -> StjdStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(StjdStatus::NullPointer, "null output"));
        }
        let r = paired_t_test(slice(a, n)?, slice(b, n)?, alpha)?;
        *out = StjdTTest {
            t_value: r.t_value,
            degrees_freedom: r.degrees_freedom,
            critical_value: r.critical_value,
            p_value: r.p_value,
            reject: r.reject,
        };
        Ok(())
    })
}
