//! C interface to `fhs-core`.
//!
//! Bodies and meshes are opaque handles created by `fhs_*` constructors and
//! released with the matching `_free` function. Every fallible call returns
//! an [`FhsStatus`]; on failure [`fhs_last_error`] describes the cause.
//! Strings returned through out-parameters must be released with
//! [`fhs_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fhs_core::field::{FieldSpec, ScalarField};
use fhs_core::fractional::{curvature_field, seminorm_p, CurvatureMethod};
use fhs_core::harness::verify_main;
use fhs_core::measure::{paper_constant, weighted_area};
use fhs_core::params::{derive_tau, FracParams};
use fhs_core::{mesh_boundary, parse_body, refine, ConvexBody, FhsError, Point, SubsetMask, SurfaceMesh};

/// Opaque convex body.
pub struct FhsBody(ConvexBody);

/// Opaque boundary mesh.
pub struct FhsMesh(SurfaceMesh);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FhsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Inadmissible = 3,
    Numerical = 4,
    Io = 5,
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &FhsError) -> FhsStatus {
    match err {
        FhsError::InadmissibleParams(_) | FhsError::NonpositiveTau(_) | FhsError::InconsistentParams(_) => {
            FhsStatus::Inadmissible
        }
        FhsError::NumericalNonconvergence { .. }
        | FhsError::NegativeCurvature { .. }
        | FhsError::DivergentSeries
        | FhsError::DegenerateMesh(..)
        | FhsError::NormalDegenerate { .. }
        | FhsError::DegenerateScaling(_) => FhsStatus::Numerical,
        FhsError::Io(_) => FhsStatus::Io,
        _ => FhsStatus::InvalidArgument,
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (FhsStatus, String)>) -> FhsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FhsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            FhsStatus::Panic
        }
    }
}

fn core<T>(r: fhs_core::Result<T>) -> Result<T, (FhsStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (FhsStatus, String) {
    (FhsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, (FhsStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), (FhsStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, (FhsStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (FhsStatus::InvalidArgument, format!("{what}: {e}")))
}

unsafe fn put_body(out: *mut *mut FhsBody, body: ConvexBody) -> Result<(), (FhsStatus, String)> {
    write(out, Box::into_raw(Box::new(FhsBody(body))), "out")
}

unsafe fn put_mesh(out: *mut *mut FhsMesh, mesh: SurfaceMesh) -> Result<(), (FhsStatus, String)> {
    write(out, Box::into_raw(Box::new(FhsMesh(mesh))), "out")
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fhs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fhs_body_ball(n: usize, radius: f64, out: *mut *mut FhsBody) -> FhsStatus {
    guard(|| put_body(out, core(ConvexBody::ball(n, radius))?))
}

/// Semi-axes beyond `n + 1` are ignored.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fhs_body_ellipsoid(n: usize, a: f64, b: f64, c: f64, out: *mut *mut FhsBody) -> FhsStatus {
    guard(|| put_body(out, core(ConvexBody::ellipsoid(n, [a, b, c]))?))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fhs_body_cylinder(
    n: usize,
    radius: f64,
    half_height: f64,
    rounding: f64,
    out: *mut *mut FhsBody,
) -> FhsStatus {
    guard(|| put_body(out, core(ConvexBody::cylinder(n, radius, half_height, rounding))?))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fhs_body_cube(n: usize, half_side: f64, out: *mut *mut FhsBody) -> FhsStatus {
    guard(|| put_body(out, core(ConvexBody::cube(n, half_side))?))
}

/// Parses a body description such as `"ball:1@0,0,-0.5"`.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fhs_body_parse(n: usize, spec: *const c_char, out: *mut *mut FhsBody) -> FhsStatus {
    guard(|| put_body(out, core(parse_body(n, text(spec, "spec")?))?))
}

/// A new body equal to `body` translated by `(x, y, z)`.
///
/// # Safety
/// `body` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fhs_body_translated(
    body: *const FhsBody,
    x: f64,
    y: f64,
    z: f64,
    out: *mut *mut FhsBody,
) -> FhsStatus {
    guard(|| {
        let b = borrow(body, "body")?;
        put_body(out, b.0.clone().translated(Point::new(x, y, z)))
    })
}

/// # Safety
/// `body` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fhs_body_free(body: *mut FhsBody) {
    if !body.is_null() {
        drop(Box::from_raw(body));
    }
}

/// # Safety
/// `body` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fhs_mesh_boundary(body: *const FhsBody, target_h: f64, out: *mut *mut FhsMesh) -> FhsStatus {
    guard(|| {
        let b = borrow(body, "body")?;
        put_mesh(out, core(mesh_boundary(&b.0, target_h))?)
    })
}

/// # Safety
/// `mesh` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fhs_mesh_refine(mesh: *const FhsMesh, out: *mut *mut FhsMesh) -> FhsStatus {
    guard(|| {
        let m = borrow(mesh, "mesh")?;
        put_mesh(out, refine(&m.0))
    })
}

/// # Safety
/// `mesh` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fhs_mesh_free(mesh: *mut FhsMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// # Safety
/// `mesh` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fhs_mesh_element_count(mesh: *const FhsMesh, out: *mut usize) -> FhsStatus {
    guard(|| write(out, borrow(mesh, "mesh")?.0.len(), "out"))
}

/// # Safety
/// `mesh` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fhs_mesh_total_area(mesh: *const FhsMesh, out: *mut f64) -> FhsStatus {
    guard(|| write(out, borrow(mesh, "mesh")?.0.total_area(), "out"))
}

/// Element centroids as `3 * count` doubles.
///
/// # Safety
/// `mesh` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fhs_mesh_centroids(mesh: *const FhsMesh, out: *mut f64, len: usize) -> FhsStatus {
    guard(|| {
        let m = &borrow(mesh, "mesh")?.0;
        if len != 3 * m.len() {
            return Err((
                FhsStatus::InvalidArgument,
                format!("need {} doubles, got {len}", 3 * m.len()),
            ));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let dst = std::slice::from_raw_parts_mut(out, len);
        for (chunk, c) in dst.chunks_exact_mut(3).zip(&m.centroids) {
            chunk.copy_from_slice(c.as_slice());
        }
        Ok(())
    })
}

/// `int |x|^{-beta}` over the whole mesh.
///
/// # Safety
/// `mesh` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fhs_weighted_area(mesh: *const FhsMesh, beta: f64, out: *mut f64) -> FhsStatus {
    guard(|| {
        let m = &borrow(mesh, "mesh")?.0;
        let r = core(weighted_area(m, &SubsetMask::full(m.len()), beta))?;
        write(out, r.value, "out")
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fhs_paper_constant(n: usize, beta: f64, epsilon: f64, out: *mut f64) -> FhsStatus {
    guard(|| write(out, core(paper_constant(n, beta, epsilon))?, "out"))
}

/// `[u]^p` for per-element values `values[0..len]`.
///
/// # Safety
/// `mesh` must be a live handle, `values` must hold `len` doubles and `out`
/// must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fhs_seminorm(
    mesh: *const FhsMesh,
    values: *const f64,
    len: usize,
    s: f64,
    p: f64,
    out: *mut f64,
) -> FhsStatus {
    guard(|| {
        let m = &borrow(mesh, "mesh")?.0;
        if values.is_null() {
            return Err(null("values"));
        }
        let u = core(ScalarField::new(std::slice::from_raw_parts(values, len).to_vec()))?;
        core(u.check_len(m))?;
        write(out, core(seminorm_p(m, &u, s, p))?, "out")
    })
}

/// Boundary-form fractional mean curvature at every element.
///
/// # Safety
/// `mesh` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fhs_curvature_boundary(
    mesh: *const FhsMesh,
    alpha: f64,
    out: *mut f64,
    len: usize,
) -> FhsStatus {
    guard(|| {
        let m = &borrow(mesh, "mesh")?.0;
        if len != m.len() {
            return Err((
                FhsStatus::InvalidArgument,
                format!("need {} doubles, got {len}", m.len()),
            ));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let h = core(curvature_field(m, alpha, CurvatureMethod::Boundary))?;
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(&h.values);
        Ok(())
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fhs_derive_tau(
    n: usize,
    s: f64,
    p: f64,
    q: f64,
    a: f64,
    gamma: f64,
    out: *mut f64,
) -> FhsStatus {
    guard(|| write(out, core(derive_tau(n, s, p, q, a, gamma))?, "out"))
}

/// Runs the end-to-end verification and returns the report as JSON.
/// `field` and `params` use the same syntax as the command line.
///
/// # Safety
/// `body` must be a live handle, `field` and `params` NUL-terminated
/// strings, and `out` valid for writes. Release the result with
/// [`fhs_string_free`].
#[no_mangle]
pub unsafe extern "C" fn fhs_verify_json(
    body: *const FhsBody,
    field: *const c_char,
    params: *const c_char,
    resolution: f64,
    refinements: usize,
    out: *mut *mut c_char,
) -> FhsStatus {
    guard(|| {
        let b = borrow(body, "body")?;
        let spec = core(FieldSpec::parse(text(field, "field")?))?;
        let params = core(FracParams::parse(text(params, "params")?))?;
        let report = core(verify_main(&b.0, &spec, &params, resolution, refinements))?;
        let json = serde_json::to_string(&report).map_err(|e| (FhsStatus::Io, e.to_string()))?;
        let c = CString::new(json).map_err(|e| (FhsStatus::Io, e.to_string()))?;
        write(out, c.into_raw(), "out")
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fhs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
