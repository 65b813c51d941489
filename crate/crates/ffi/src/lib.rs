//! C ABI over `nullmetric`.
//!
//! Objects are opaque heap handles released with the matching `*_free`.
//! Every fallible call returns an [`NmStatus`]; on failure the message is
//! kept per thread and read with [`nm_last_error_message`]. Panics never
//! cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::str::FromStr;
use std::sync::Arc;

use nullmetric::examples::{flat_slab, ExampleId, Family};
use nullmetric::geodesic::{distance_matrix, DistanceMatrix};
use nullmetric::manifold::{boundary_area, conformal_reduce, disk_mesh, volume, SpatialMesh, StaticSpacetime};
use nullmetric::nulldist::{null_distance_oracle, null_distance_static, GridParams, SpacetimeGrid, SpacetimePoint};
use nullmetric::swif::{area_factor, flat_bound, FlatBoundInputs};
use nullmetric::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotPositiveDefinite = 3,
    Disconnected = 4,
    ResourceCap = 5,
    Infeasible = 6,
    UnknownExample = 7,
    InvalidMesh = 8,
    Io = 9,
    /// A Rust panic was caught; the handle arguments are left untouched.
    Panic = 10,
}

impl From<&Error> for NmStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::NotPositiveDefinite { .. } | Error::NonPositiveLapse { .. } => NmStatus::NotPositiveDefinite,
            Error::Disconnected { .. } => NmStatus::Disconnected,
            Error::ResourceCap { .. } => NmStatus::ResourceCap,
            Error::Infeasible { .. } => NmStatus::Infeasible,
            Error::UnknownExample(_) => NmStatus::UnknownExample,
            Error::InvalidMesh(_) => NmStatus::InvalidMesh,
            Error::Io(_) | Error::Parse { .. } => NmStatus::Io,
            _ => NmStatus::InvalidArgument,
        }
    }
}

/// Spatial mesh.
pub struct NmMesh(Arc<SpatialMesh>);

/// Static slab `[t0, t1] x M`.
pub struct NmSpacetime(StaticSpacetime);

pub struct NmDistanceMatrix(DistanceMatrix);

/// Causal grid for the oracle null distance.
pub struct NmGrid(SpacetimeGrid);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

fn guard(f: impl FnOnce() -> Result<(), NmFail>) -> NmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NmStatus::Ok,
        Ok(Err(NmFail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(msg);
            NmStatus::Panic
        }
    }
}

struct NmFail(NmStatus, String);

impl From<Error> for NmFail {
    fn from(e: Error) -> Self {
        NmFail((&e).into(), e.to_string())
    }
}

fn null_arg(name: &str) -> NmFail {
    NmFail(NmStatus::NullPointer, format!("`{name}` is null"))
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, NmFail> {
    p.as_ref().ok_or_else(|| null_arg(name))
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), NmFail> {
    if out.is_null() {
        return Err(null_arg("out"));
    }
    out.write(v);
    Ok(())
}

unsafe fn boxed<T>(out: *mut *mut T, v: T) -> Result<(), NmFail> {
    if out.is_null() {
        return Err(null_arg("out"));
    }
    out.write(Box::into_raw(Box::new(v)));
    Ok(())
}

/// Uniform polar mesh of the unit disk.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nm_mesh_disk(level: u32, out: *mut *mut NmMesh) -> NmStatus {
    guard(|| boxed(out, NmMesh(Arc::new(disk_mesh(level)?))))
}

/// # Safety
/// `mesh` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn nm_mesh_vertex_count(mesh: *const NmMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.0.len())
}

/// # Safety
/// `mesh` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nm_mesh_free(mesh: *mut NmMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Flat slab `[0, 1] x mesh`.
///
/// # Safety
/// `mesh` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nm_spacetime_flat(mesh: *const NmMesh, out: *mut *mut NmSpacetime) -> NmStatus {
    guard(|| {
        let mesh = deref(mesh, "mesh")?;
        boxed(out, NmSpacetime(flat_slab(mesh.0.clone())?))
    })
}

/// The `j`-th member of an example family (`ex31-space-collapse`,
/// `ex32-time-blowup`, `ex33-bubble`, `ex34-spline`) on its own graded mesh.
///
/// # Safety
/// `id` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nm_spacetime_example(
    id: *const c_char,
    j: f64,
    level: u32,
    out: *mut *mut NmSpacetime,
) -> NmStatus {
    guard(|| {
        if id.is_null() {
            return Err(null_arg("id"));
        }
        let id = CStr::from_ptr(id)
            .to_str()
            .map_err(|_| NmFail(NmStatus::InvalidArgument, "example id is not UTF-8".into()))?;
        let family = Family::new(ExampleId::from_str(id)?, level);
        let mesh = Arc::new(family.mesh(j)?);
        boxed(out, NmSpacetime(family.spacetime(j, mesh)?))
    })
}

/// # Safety
/// `st` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn nm_spacetime_vertex_count(st: *const NmSpacetime) -> usize {
    st.as_ref().map_or(0, |s| s.0.mesh.len())
}

/// # Safety
/// `st` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nm_spacetime_free(st: *mut NmSpacetime) {
    if !st.is_null() {
        drop(Box::from_raw(st));
    }
}

/// Spatial distances of the reduced metric `sigma / h^2` between the given
/// vertices. Row and column `i` belong to `sources[i]`.
///
/// # Safety
/// `sources` must point to `count` readable indices; `st` must be live and
/// `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nm_distance_matrix(
    st: *const NmSpacetime,
    sources: *const usize,
    count: usize,
    out: *mut *mut NmDistanceMatrix,
) -> NmStatus {
    guard(|| {
        let st = deref(st, "st")?;
        if sources.is_null() && count > 0 {
            return Err(null_arg("sources"));
        }
        let src = if count == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(sources, count)
        };
        let reduced = conformal_reduce(&st.0);
        boxed(
            out,
            NmDistanceMatrix(distance_matrix(&reduced.mesh, &reduced.sigma, src)?),
        )
    })
}

/// # Safety
/// `m` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn nm_distance_matrix_size(m: *const NmDistanceMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.len())
}

/// # Safety
/// `m` must be live and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nm_distance_matrix_get(
    m: *const NmDistanceMatrix,
    i: usize,
    j: usize,
    out: *mut f64,
) -> NmStatus {
    guard(|| {
        let m = deref(m, "m")?;
        let n = m.0.len();
        if i >= n || j >= n {
            return Err(NmFail(
                NmStatus::InvalidArgument,
                format!("index ({i}, {j}) outside {n} x {n}"),
            ));
        }
        write(out, m.0.get(i, j))
    })
}

/// # Safety
/// `m` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nm_distance_matrix_free(m: *mut NmDistanceMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// `max(d(x, y), |s - t|)` with `x`, `y` indices into the matrix.
///
/// # Safety
/// `d` must be live and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nm_null_distance_static(
    d: *const NmDistanceMatrix,
    t: f64,
    x: usize,
    s: f64,
    y: usize,
    out: *mut f64,
) -> NmStatus {
    guard(|| {
        let d = deref(d, "d")?;
        let v = null_distance_static(&d.0, SpacetimePoint::new(t, x), SpacetimePoint::new(s, y))?;
        write(out, v)
    })
}

/// Riemannian volume of the spatial metric.
///
/// # Safety
/// `st` must be live and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nm_volume(st: *const NmSpacetime, out: *mut f64) -> NmStatus {
    guard(|| {
        let st = deref(st, "st")?;
        write(out, volume(&st.0.mesh, &st.0.sigma)?)
    })
}

/// Boundary area (length in two dimensions) of the spatial metric.
///
/// # Safety
/// `st` must be live and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nm_boundary_area(st: *const NmSpacetime, out: *mut f64) -> NmStatus {
    guard(|| {
        let st = deref(st, "st")?;
        write(out, boundary_area(&st.0.mesh, &st.0.sigma)?.value)
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nm_area_factor(n: u32, out: *mut f64) -> NmStatus {
    guard(|| write(out, area_factor(n)?))
}

/// Intrinsic flat upper bound for a slab of height `h` in dimension `n + 1`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nm_flat_bound(n: u32, v: f64, vp: f64, a: f64, h: f64, delta: f64, out: *mut f64) -> NmStatus {
    guard(|| write(out, flat_bound(&FlatBoundInputs { n, v, vp, a, h, delta })?))
}

/// Causal grid with time step `time_step` (dividing the slab height) and a
/// cone reach of `window` steps.
///
/// # Safety
/// `st` must be live and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nm_grid_new(
    st: *const NmSpacetime,
    time_step: f64,
    window: u32,
    out: *mut *mut NmGrid,
) -> NmStatus {
    guard(|| {
        let st = deref(st, "st")?;
        boxed(
            out,
            NmGrid(SpacetimeGrid::new(&st.0, GridParams { time_step, window })?),
        )
    })
}

/// Grid null distance between `(t, x)` and `(s, y)`; times must be grid levels.
///
/// # Safety
/// `grid` must be live and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nm_grid_null_distance(
    grid: *const NmGrid,
    t: f64,
    x: usize,
    s: f64,
    y: usize,
    out: *mut f64,
) -> NmStatus {
    guard(|| {
        let g = deref(grid, "grid")?;
        write(
            out,
            null_distance_oracle(&g.0, SpacetimePoint::new(t, x), SpacetimePoint::new(s, y))?,
        )
    })
}

/// # Safety
/// `grid` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nm_grid_free(grid: *mut NmGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}
