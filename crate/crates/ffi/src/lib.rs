//! C ABI over `ehoi-core`.
//!
//! Every fallible function returns an [`EhoiStatus`] and writes results through
//! out-pointers. On failure a description is available from
//! [`ehoi_last_error_message`] on the same thread. Handles are opaque and must
//! be released with their matching `_free` function; strings returned by the
//! library are released with [`ehoi_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ehoi_core::augment::{generate_kernel, BlurKernel};
use ehoi_core::dataset::{
    parse_annotations, parse_detections, read_annotations, stats, DatasetError, DetectionOptions,
    DetectionSet, FrameSet,
};
use ehoi_core::geometry::{BBox, ImageSize};
use ehoi_core::matcher::{annotate_matches, match_dataset};
use ehoi_core::metrics::{ApConfig, EvalError, EvalReport, Evaluation, Interpolation, Metric};
use ehoi_core::model::{decode_offset, encode_offset, OffsetVector};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EhoiStatus {
    Ok = 0,
    InvalidArgument = 1,
    ParseError = 2,
    ValidationError = 3,
    IoError = 4,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub enum EhoiInterpolation {
    Coco101 = 0,
    AllPoints = 1,
}

/// Columns of the results table.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub enum EhoiMetric {
    ApHand = 0,
    MapObj = 1,
    ApHSide = 2,
    ApHState = 3,
    MapHObj = 4,
    MapAll = 5,
}

/// Axis-aligned box, top-left corner plus size.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EhoiBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EhoiOffset {
    pub vx: f64,
    pub vy: f64,
    pub m: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EhoiPoint {
    pub x: f64,
    pub y: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct EhoiStats {
    pub videos: u64,
    pub images: u64,
    pub hands: u64,
    pub hands_in_contact: u64,
    pub hands_not_in_contact: u64,
    pub left_hands: u64,
    pub right_hands: u64,
    pub object_categories: u64,
    pub objects: u64,
    pub active_objects: u64,
}

/// Validated ground-truth annotations.
pub struct EhoiAnnotations(FrameSet);
/// Validated detector output.
pub struct EhoiDetections(DetectionSet);
/// Evaluation result.
pub struct EhoiReport(EvalReport);
/// Normalized blur kernel.
pub struct EhoiKernel(BlurKernel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(EhoiStatus, String);

impl Failure {
    fn arg(msg: impl Into<String>) -> Self {
        Failure(EhoiStatus::InvalidArgument, msg.into())
    }
}

impl From<DatasetError> for Failure {
    fn from(e: DatasetError) -> Self {
        let status = match e {
            DatasetError::Io { .. } => EhoiStatus::IoError,
            DatasetError::Parse(_) => EhoiStatus::ParseError,
            DatasetError::Validation(_) => EhoiStatus::ValidationError,
        };
        Failure(status, e.to_string())
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        let status = match e {
            EvalError::BadThreshold(_) => EhoiStatus::InvalidArgument,
            EvalError::Report(_) => EhoiStatus::ParseError,
            _ => EhoiStatus::ValidationError,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> EhoiStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            EhoiStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            EhoiStatus::Panic
        }
    }
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(Failure::arg(format!("{what} is null")));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure::arg(format!("{what} is not valid UTF-8")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::arg(format!("{what} is null")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::arg(format!("{what} is null")))
}

fn to_box(b: EhoiBox) -> Result<BBox, Failure> {
    BBox::try_new(b.x, b.y, b.w, b.h).map_err(|e| Failure::arg(e.to_string()))
}

fn image_size(width: u32, height: u32) -> Result<ImageSize, Failure> {
    ImageSize::new(width, height).map_err(|e| Failure::arg(e.to_string()))
}

fn c_string(s: String) -> *mut c_char {
    CString::new(s).expect("JSON has no interior nul").into_raw()
}

/// Message for the last failed call on this thread, or null after a success.
/// Valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn ehoi_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub unsafe extern "C" fn ehoi_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

#[no_mangle]
pub unsafe extern "C" fn ehoi_iou(a: EhoiBox, b: EhoiBox, result: *mut f64) -> EhoiStatus {
    guard(|| {
        let v = to_box(a)?.iou(&to_box(b)?);
        *out(result, "result")? = v;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ehoi_intersects(a: EhoiBox, b: EhoiBox, result: *mut bool) -> EhoiStatus {
    guard(|| {
        let v = to_box(a)?.intersects(&to_box(b)?);
        *out(result, "result")? = v;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ehoi_encode_offset(
    hand: EhoiBox,
    object: EhoiBox,
    width: u32,
    height: u32,
    result: *mut EhoiOffset,
) -> EhoiStatus {
    guard(|| {
        let o = encode_offset(&to_box(hand)?, &to_box(object)?, image_size(width, height)?);
        *out(result, "result")? = EhoiOffset {
            vx: o.vx(),
            vy: o.vy(),
            m: o.magnitude(),
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ehoi_decode_offset(
    hand: EhoiBox,
    offset: EhoiOffset,
    width: u32,
    height: u32,
    result: *mut EhoiPoint,
) -> EhoiStatus {
    guard(|| {
        let off = OffsetVector::new(offset.vx, offset.vy, offset.m).map_err(|e| Failure::arg(e.to_string()))?;
        let p = decode_offset(&to_box(hand)?, &off, image_size(width, height)?);
        *out(result, "result")? = EhoiPoint { x: p.x, y: p.y };
        Ok(())
    })
}

/// Parses an annotation document from a NUL-terminated JSON string.
#[no_mangle]
pub unsafe extern "C" fn ehoi_annotations_parse(json: *const c_char, result: *mut *mut EhoiAnnotations) -> EhoiStatus {
    guard(|| {
        let slot = out(result, "result")?;
        let fs = parse_annotations(text(json, "json")?)?;
        *slot = Box::into_raw(Box::new(EhoiAnnotations(fs)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ehoi_annotations_read(path: *const c_char, result: *mut *mut EhoiAnnotations) -> EhoiStatus {
    guard(|| {
        let slot = out(result, "result")?;
        let fs = read_annotations(Path::new(text(path, "path")?))?;
        *slot = Box::into_raw(Box::new(EhoiAnnotations(fs)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ehoi_annotations_free(h: *mut EhoiAnnotations) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

#[no_mangle]
pub unsafe extern "C" fn ehoi_annotations_stats(h: *const EhoiAnnotations, result: *mut EhoiStats) -> EhoiStatus {
    guard(|| {
        let s = stats(&handle(h, "annotations")?.0);
        *out(result, "result")? = EhoiStats {
            videos: s.videos as u64,
            images: s.images as u64,
            hands: s.hands as u64,
            hands_in_contact: s.hands_in_contact as u64,
            hands_not_in_contact: s.hands_not_in_contact as u64,
            left_hands: s.left_hands as u64,
            right_hands: s.right_hands as u64,
            object_categories: s.object_categories as u64,
            objects: s.objects as u64,
            active_objects: s.active_objects as u64,
        };
        Ok(())
    })
}

/// Parses detections; `contact_threshold` applies to hands given as contact probabilities.
#[no_mangle]
pub unsafe extern "C" fn ehoi_detections_parse(
    json: *const c_char,
    contact_threshold: f64,
    result: *mut *mut EhoiDetections,
) -> EhoiStatus {
    guard(|| {
        let slot = out(result, "result")?;
        if !(0.0..=1.0).contains(&contact_threshold) {
            return Err(Failure::arg(format!("contact threshold {contact_threshold} outside [0, 1]")));
        }
        let ds = parse_detections(text(json, "json")?, &DetectionOptions { contact_threshold })?;
        *slot = Box::into_raw(Box::new(EhoiDetections(ds)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ehoi_detections_free(h: *mut EhoiDetections) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Runs the matcher and returns the annotated detections as JSON.
/// `sizes` may be null when every detection frame carries its dimensions.
#[no_mangle]
pub unsafe extern "C" fn ehoi_match(
    dets: *const EhoiDetections,
    sizes: *const EhoiAnnotations,
    result_json: *mut *mut c_char,
) -> EhoiStatus {
    guard(|| {
        let slot = out(result_json, "result_json")?;
        let ds = &handle(dets, "detections")?.0;
        let gt = sizes.as_ref().map(|a| &a.0);
        let lookup = |id| gt.and_then(|g| g.frame(id)).map(|f| f.size);
        let validation = |e: ehoi_core::matcher::MatchError| Failure(EhoiStatus::ValidationError, e.to_string());
        let matches = match_dataset(ds, &lookup).map_err(validation)?;
        let annotated = annotate_matches(ds, &matches).map_err(validation)?;
        *slot = c_string(ehoi_core::dataset::write_detections(&annotated));
        Ok(())
    })
}

/// `interpolation` is an `EhoiInterpolation` value.
#[no_mangle]
pub unsafe extern "C" fn ehoi_evaluate(
    gt: *const EhoiAnnotations,
    dets: *const EhoiDetections,
    iou_threshold: f64,
    interpolation: i32,
    result: *mut *mut EhoiReport,
) -> EhoiStatus {
    guard(|| {
        let slot = out(result, "result")?;
        let cfg = ApConfig {
            iou_threshold,
            interpolation: match interpolation {
                x if x == EhoiInterpolation::Coco101 as i32 => Interpolation::Coco101,
                x if x == EhoiInterpolation::AllPoints as i32 => Interpolation::AllPoints,
                other => return Err(Failure::arg(format!("unknown interpolation {other}"))),
            },
            ..ApConfig::default()
        };
        let report = Evaluation::new(&handle(gt, "annotations")?.0, &handle(dets, "detections")?.0, cfg)?.report();
        *slot = Box::into_raw(Box::new(EhoiReport(report)));
        Ok(())
    })
}

/// Value in percent of an `EhoiMetric`.
#[no_mangle]
pub unsafe extern "C" fn ehoi_report_metric(h: *const EhoiReport, metric: i32, result: *mut f64) -> EhoiStatus {
    guard(|| {
        let m = usize::try_from(metric)
            .ok()
            .and_then(|i| Metric::ALL.get(i).copied())
            .ok_or_else(|| Failure::arg(format!("unknown metric {metric}")))?;
        let v = handle(h, "report")?.0.value(m);
        *out(result, "result")? = v;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ehoi_report_to_json(h: *const EhoiReport, result_json: *mut *mut c_char) -> EhoiStatus {
    guard(|| {
        let slot = out(result_json, "result_json")?;
        *slot = c_string(handle(h, "report")?.0.to_json());
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ehoi_report_free(h: *mut EhoiReport) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

#[no_mangle]
pub unsafe extern "C" fn ehoi_kernel_generate(
    size: usize,
    trajectory_points: usize,
    seed: u64,
    result: *mut *mut EhoiKernel,
) -> EhoiStatus {
    guard(|| {
        let slot = out(result, "result")?;
        let k = generate_kernel(size, trajectory_points, seed).map_err(|e| Failure::arg(e.to_string()))?;
        *slot = Box::into_raw(Box::new(EhoiKernel(k)));
        Ok(())
    })
}

/// Side length of the kernel, 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn ehoi_kernel_size(h: *const EhoiKernel) -> usize {
    h.as_ref().map_or(0, |k| k.0.size())
}

/// Copies the row-major weights into `buffer`, which must hold `size * size` values.
#[no_mangle]
pub unsafe extern "C" fn ehoi_kernel_weights(h: *const EhoiKernel, buffer: *mut f64, len: usize) -> EhoiStatus {
    guard(|| {
        let w = handle(h, "kernel")?.0.weights();
        if buffer.is_null() {
            return Err(Failure::arg("buffer is null"));
        }
        if len < w.len() {
            return Err(Failure::arg(format!("buffer holds {len} values, kernel has {}", w.len())));
        }
        std::slice::from_raw_parts_mut(buffer, w.len()).copy_from_slice(w);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ehoi_kernel_free(h: *mut EhoiKernel) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}
