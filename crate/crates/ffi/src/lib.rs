//! C interface to the `dplane` library.
//!
//! Objects cross the boundary as opaque handles created by `dp_*_new` or
//! `dp_*_from_*` and released by the matching `dp_*_free`. Every fallible
//! call returns a [`DpStatus`]; on failure the message is kept per thread
//! and can be copied out with [`dp_last_error`]. Panics are caught and
//! reported as [`DpStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use dplane::beam::{metal_term_closed_form, reconstruct_artifact, synthesize_measurement, SpectralModel};
use dplane::config::RunConfig;
use dplane::grassmannian::{ChartKind, ChartSpec};
use dplane::io::{read_image, read_sinogram, write_image, write_sinogram};
use dplane::scene::Scene;
use dplane::transform::{fbp_reconstruct, forward_sinogram, ImageGrid, Sinogram};
use dplane::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Config = 3,
    Geometry = 4,
    Numerical = 5,
    Format = 6,
    Io = 7,
    Panic = 8,
}

/// Chart families, passed to [`dp_chart_new`] as plain integers.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DpChartKind {
    /// Lines in the plane.
    Line2 = 0,
    /// Lines in space.
    Line3 = 1,
    /// Planes in space.
    Plane3 = 2,
}

/// Scene of disjoint convex bodies with optional smooth background.
pub struct DpScene(Scene);

/// Sampling grid of flats.
pub struct DpChart(ChartSpec);

/// Values on a chart.
pub struct DpSinogram(Sinogram);

/// Values on a regular image grid.
pub struct DpImage(ImageGrid);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> DpStatus {
    match e {
        Error::Input(_) => DpStatus::InvalidInput,
        Error::Config(_) => DpStatus::Config,
        Error::Geometry(_) => DpStatus::Geometry,
        Error::Numerical(_) => DpStatus::Numerical,
        Error::Format(_) => DpStatus::Format,
        Error::Io(_) => DpStatus::Io,
    }
}

/// Run `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), DpStatus>) -> DpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DpStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            DpStatus::Panic
        }
    }
}

fn check<T>(r: dplane::Result<T>) -> Result<T, DpStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn null(what: &str) -> DpStatus {
    set_error(format!("{what} is null"));
    DpStatus::NullPointer
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, DpStatus> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, DpStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not UTF-8"));
        DpStatus::InvalidInput
    })
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), DpStatus> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn copy_out(values: &[f64], buf: *mut f64, len: usize) -> Result<(), DpStatus> {
    if buf.is_null() {
        return Err(null("buf"));
    }
    if len < values.len() {
        set_error(format!("buffer holds {len} values, need {}", values.len()));
        return Err(DpStatus::InvalidInput);
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    Ok(())
}

unsafe fn release<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `len > 0`). Returns the full message length
/// in bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn dp_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Build a scene from the `[scene]` table of a TOML run configuration.
/// Relative scene file references resolve against the working directory.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dp_scene_from_toml(toml: *const c_char, out: *mut *mut DpScene) -> DpStatus {
    guard(|| {
        let cfg = check(RunConfig::from_toml(text(toml, "toml")?, Path::new(".")))?;
        emit(out, DpScene(check(cfg.scene())?))
    })
}

/// # Safety
/// `scene` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn dp_scene_free(scene: *mut DpScene) {
    release(scene)
}

/// Uniform chart of [`DpChartKind`] `kind` with `directions` direction
/// samples and `offsets` samples per offset axis on `[-extent, extent]`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dp_chart_new(
    kind: i32,
    directions: usize,
    offsets: usize,
    extent: f64,
    out: *mut *mut DpChart,
) -> DpStatus {
    guard(|| {
        let kind = match kind {
            k if k == DpChartKind::Line2 as i32 => ChartKind::Line2,
            k if k == DpChartKind::Line3 as i32 => ChartKind::Line3,
            k if k == DpChartKind::Plane3 as i32 => ChartKind::Plane3,
            k => {
                set_error(format!("unknown chart kind {k}"));
                return Err(DpStatus::InvalidInput);
            }
        };
        emit(out, DpChart(check(ChartSpec::uniform(kind, directions, offsets, extent))?))
    })
}

/// # Safety
/// `chart` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn dp_chart_free(chart: *mut DpChart) {
    release(chart)
}

/// Number of flats in the chart.
///
/// # Safety
/// `chart` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn dp_chart_len(chart: *const DpChart) -> usize {
    chart.as_ref().map_or(0, |c| c.0.len())
}

/// Sinogram of the scene's metal indicator, plus its background when
/// `include_background` is set.
///
/// # Safety
/// Handles must be valid and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dp_forward(
    scene: *const DpScene,
    chart: *const DpChart,
    include_background: bool,
    out: *mut *mut DpSinogram,
) -> DpStatus {
    guard(|| {
        let (scene, chart) = (deref(scene, "scene")?, deref(chart, "chart")?);
        emit(out, DpSinogram(check(forward_sinogram(&scene.0, &chart.0, include_background))?))
    })
}

/// Polychromatic measurement and metal term of the scene.
///
/// # Safety
/// Handles must be valid and both out pointers valid.
#[no_mangle]
pub unsafe extern "C" fn dp_beam_harden(
    scene: *const DpScene,
    chart: *const DpChart,
    e0: f64,
    epsilon: f64,
    alpha: f64,
    measurement: *mut *mut DpSinogram,
    metal_term: *mut *mut DpSinogram,
) -> DpStatus {
    guard(|| {
        let (scene, chart) = (deref(scene, "scene")?, deref(chart, "chart")?);
        if measurement.is_null() || metal_term.is_null() {
            return Err(null("out"));
        }
        let model = check(SpectralModel::new(e0, epsilon, alpha))?;
        let (p_d, p_ma) = check(synthesize_measurement(&scene.0, &chart.0, &model))?;
        emit(measurement, DpSinogram(p_d))?;
        emit(metal_term, DpSinogram(p_ma))
    })
}

/// `-log(sinh t / t)`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dp_metal_term(t: f64, out: *mut f64) -> DpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = check(metal_term_closed_form(t))?;
        Ok(())
    })
}

/// # Safety
/// `sino` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn dp_sinogram_len(sino: *const DpSinogram) -> usize {
    sino.as_ref().map_or(0, |s| s.0.values.len())
}

/// Copy the values, direction-major, into `buf`.
///
/// # Safety
/// `sino` must be a valid handle and `buf` valid for `len` values.
#[no_mangle]
pub unsafe extern "C" fn dp_sinogram_values(sino: *const DpSinogram, buf: *mut f64, len: usize) -> DpStatus {
    guard(|| copy_out(&deref(sino, "sinogram")?.0.values, buf, len))
}

/// # Safety
/// `sino` must be a valid handle and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn dp_sinogram_write(sino: *const DpSinogram, path: *const c_char) -> DpStatus {
    guard(|| {
        let sino = deref(sino, "sinogram")?;
        check(write_sinogram(Path::new(text(path, "path")?), &sino.0, "ffi")).map(drop)
    })
}

/// # Safety
/// `path` must be NUL-terminated and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dp_sinogram_read(path: *const c_char, out: *mut *mut DpSinogram) -> DpStatus {
    guard(|| emit(out, DpSinogram(check(read_sinogram(Path::new(text(path, "path")?)))?)))
}

/// # Safety
/// `sino` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn dp_sinogram_free(sino: *mut DpSinogram) {
    release(sino)
}

/// Filtered back-projection onto a cube of `size` cells per axis over
/// `[-extent, extent]`.
///
/// # Safety
/// `sino` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dp_fbp(sino: *const DpSinogram, size: usize, extent: f64, out: *mut *mut DpImage) -> DpStatus {
    guard(|| {
        let sino = deref(sino, "sinogram")?;
        let grid = check(ImageGrid::centered(sino.0.chart.n(), size, extent))?;
        emit(out, DpImage(check(fbp_reconstruct(&sino.0, &grid))?))
    })
}

/// Artifact image from a metal-term sinogram, same grid convention as
/// [`dp_fbp`].
///
/// # Safety
/// `metal_term` must be a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dp_artifact(
    metal_term: *const DpSinogram,
    size: usize,
    extent: f64,
    out: *mut *mut DpImage,
) -> DpStatus {
    guard(|| {
        let p_ma = deref(metal_term, "metal_term")?;
        let grid = check(ImageGrid::centered(p_ma.0.chart.n(), size, extent))?;
        emit(out, DpImage(check(reconstruct_artifact(&p_ma.0, &grid))?))
    })
}

/// Cells per axis; unused axes report 1.
///
/// # Safety
/// `image` must be a valid handle and `shape` valid for 3 values.
#[no_mangle]
pub unsafe extern "C" fn dp_image_shape(image: *const DpImage, shape: *mut usize) -> DpStatus {
    guard(|| {
        let image = deref(image, "image")?;
        if shape.is_null() {
            return Err(null("shape"));
        }
        ptr::copy_nonoverlapping(image.0.shape.as_ptr(), shape, 3);
        Ok(())
    })
}

/// Copy the values, row-major with the last axis fastest, into `buf`.
///
/// # Safety
/// `image` must be a valid handle and `buf` valid for `len` values.
#[no_mangle]
pub unsafe extern "C" fn dp_image_values(image: *const DpImage, buf: *mut f64, len: usize) -> DpStatus {
    guard(|| copy_out(&deref(image, "image")?.0.values, buf, len))
}

/// # Safety
/// `image` must be a valid handle and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn dp_image_write(image: *const DpImage, path: *const c_char) -> DpStatus {
    guard(|| {
        let image = deref(image, "image")?;
        check(write_image(Path::new(text(path, "path")?), &image.0, "ffi")).map(drop)
    })
}

/// # Safety
/// `path` must be NUL-terminated and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dp_image_read(path: *const c_char, out: *mut *mut DpImage) -> DpStatus {
    guard(|| emit(out, DpImage(check(read_image(Path::new(text(path, "path")?)))?)))
}

/// # Safety
/// `image` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn dp_image_free(image: *mut DpImage) {
    release(image)
}
