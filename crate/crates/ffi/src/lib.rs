//! C interface to `cmcdeform`.
//!
//! Meshes are opaque `CmcMesh` handles created by the `cmc_mesh_*`
//! constructors and released with [`cmc_mesh_free`]. Every fallible call
//! returns a [`CmcStatus`]; the message of the last failure on the calling
//! thread is available from [`cmc_last_error`]. Panics never cross the
//! boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufWriter;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cmcdeform::frames::{self, PotentialForm, PotentialSpec, SurfaceMesh, SurfaceOptions};
use cmcdeform::report::MeshReport;
use cmcdeform::weier::WeierstrassData;
use cmcdeform::{gallery, mesh_io, parse, DomainGrid, Error, Expr, GridSpec};

/// Result codes of the C interface.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmcStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Bad expressions, grid or options.
    Config = 3,
    /// Factorization, integration or masking failure.
    Numerical = 4,
    Io = 5,
    /// The output buffer is too small.
    BufferTooSmall = 6,
    /// An internal panic was caught.
    Panic = 7,
}

/// A generated surface and the Hopf differential of its data.
pub struct CmcMesh {
    mesh: SurfaceMesh,
    hopf: Expr,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(s));
}

fn status_of(e: &Error) -> CmcStatus {
    set_error(e.to_string());
    match e.exit_code() {
        1 => CmcStatus::Io,
        2 => CmcStatus::Config,
        _ => CmcStatus::Numerical,
    }
}

/// Runs `f`, mapping errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), CmcStatus>) -> CmcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CmcStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p.downcast_ref::<&str>().map(|s| s.to_string()).or_else(|| p.downcast_ref::<String>().cloned());
            set_error(format!("panic: {}", msg.unwrap_or_default()));
            CmcStatus::Panic
        }
    }
}

/// # Safety
/// `p` is null or a valid NUL-terminated string.
unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, CmcStatus> {
    if p.is_null() {
        set_error("null string argument");
        return Err(CmcStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string argument is not UTF-8");
        CmcStatus::InvalidUtf8
    })
}

fn parse_expr(src: &str) -> Result<Expr, CmcStatus> {
    parse(src).map_err(|e| status_of(&e))
}

fn build(spec: PotentialSpec, grid: GridSpec, out: *mut *mut CmcMesh) -> Result<(), CmcStatus> {
    if out.is_null() {
        set_error("null output handle");
        return Err(CmcStatus::NullPointer);
    }
    let hopf = match &spec.form {
        PotentialForm::Normalized { q, .. } => q.clone(),
        PotentialForm::Classical { mu, nu } => WeierstrassData::new(mu.clone(), nu.clone(), spec.z0).hopf(),
    };
    let grid = DomainGrid::new(grid).map_err(|e| status_of(&e))?;
    let mesh = frames::surface(&spec, &grid, &SurfaceOptions::default()).map_err(|e| status_of(&e))?;
    // SAFETY: checked non-null above; the caller owns the slot
    unsafe { *out = Box::into_raw(Box::new(CmcMesh { mesh, hopf })) };
    Ok(())
}

fn square(half: f64, n: usize) -> Result<GridSpec, CmcStatus> {
    if !(half.is_finite() && half > 0.0) || n < 2 {
        set_error(format!("bad grid: half-width {half}, {n} nodes"));
        return Err(CmcStatus::Config);
    }
    Ok(GridSpec::square(half, n))
}

/// Surface from classical data `(μ, ν)` on `[-half, half]²` with `n × n`
/// nodes, basepoint 0. `h = 0` gives the minimal surface.
///
/// # Safety
/// `mu` and `nu` are NUL-terminated strings; `out` points to writable
/// storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn cmc_mesh_classical(
    mu: *const c_char,
    nu: *const c_char,
    h: f64,
    half: f64,
    n: usize,
    out: *mut *mut CmcMesh,
) -> CmcStatus {
    guard(|| {
        let (mu, nu) = (parse_expr(read_str(mu)?)?, parse_expr(read_str(nu)?)?);
        build(PotentialSpec::classical(mu, nu, h, Default::default()), square(half, n)?, out)
    })
}

/// Surface from normalized data `(a, Q)`; otherwise as
/// [`cmc_mesh_classical`].
///
/// # Safety
/// As for [`cmc_mesh_classical`].
#[no_mangle]
pub unsafe extern "C" fn cmc_mesh_normalized(
    a: *const c_char,
    q: *const c_char,
    h: f64,
    half: f64,
    n: usize,
    out: *mut *mut CmcMesh,
) -> CmcStatus {
    guard(|| {
        let (a, q) = (parse_expr(read_str(a)?)?, parse_expr(read_str(q)?)?);
        build(PotentialSpec::normalized(a, q, h, Default::default()), square(half, n)?, out)
    })
}

/// Member `index` of a gallery family such as `"catenoid"` or `"smyth-2"`,
/// on its default grid.
///
/// # Safety
/// `name` is a NUL-terminated string; `out` points to writable storage.
#[no_mangle]
pub unsafe extern "C" fn cmc_mesh_gallery(name: *const c_char, index: usize, out: *mut *mut CmcMesh) -> CmcStatus {
    guard(|| {
        let entry = gallery::lookup(read_str(name)?).map_err(|e| status_of(&e))?;
        let Some(m) = entry.members.get(index) else {
            set_error(format!("{} has {} members", entry.name, entry.members.len()));
            return Err(CmcStatus::Config);
        };
        build(entry.spec.with_h(m.h), m.grid, out)
    })
}

/// Releases a mesh. Null is ignored.
///
/// # Safety
/// `mesh` is null or a handle from a `cmc_mesh_*` constructor that has not
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn cmc_mesh_free(mesh: *mut CmcMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Grid size in nodes along x and y.
///
/// # Safety
/// `mesh` is null or a live handle; `nx`, `ny` are null or writable.
#[no_mangle]
pub unsafe extern "C" fn cmc_mesh_dims(mesh: *const CmcMesh, nx: *mut usize, ny: *mut usize) -> CmcStatus {
    let Some(m) = mesh.as_ref() else {
        set_error("null mesh");
        return CmcStatus::NullPointer;
    };
    if !nx.is_null() {
        *nx = m.mesh.grid.nx();
    }
    if !ny.is_null() {
        *ny = m.mesh.grid.ny();
    }
    CmcStatus::Ok
}

/// Number of unmasked nodes.
///
/// # Safety
/// `mesh` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cmc_mesh_valid_count(mesh: *const CmcMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.mesh.valid_indices().count())
}

/// Copies `nx·ny` positions as `x, y, z` triples in row-major node order
/// (`i` fastest). Masked nodes are NaN. `len` counts doubles.
///
/// # Safety
/// `mesh` is a live handle and `buf` holds `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cmc_mesh_positions(mesh: *const CmcMesh, buf: *mut f64, len: usize) -> CmcStatus {
    copy_field(mesh, buf, len, |m| &m.positions)
}

/// As [`cmc_mesh_positions`] for unit normals.
///
/// # Safety
/// As for [`cmc_mesh_positions`].
#[no_mangle]
pub unsafe extern "C" fn cmc_mesh_normals(mesh: *const CmcMesh, buf: *mut f64, len: usize) -> CmcStatus {
    copy_field(mesh, buf, len, |m| &m.normals)
}

unsafe fn copy_field(
    mesh: *const CmcMesh,
    buf: *mut f64,
    len: usize,
    field: impl Fn(&SurfaceMesh) -> &Vec<frames::Vec3>,
) -> CmcStatus {
    let Some(m) = mesh.as_ref() else {
        set_error("null mesh");
        return CmcStatus::NullPointer;
    };
    if buf.is_null() {
        set_error("null buffer");
        return CmcStatus::NullPointer;
    }
    let need = 3 * m.mesh.grid.len();
    if len < need {
        set_error(format!("buffer holds {len} doubles, {need} needed"));
        return CmcStatus::BufferTooSmall;
    }
    let out = std::slice::from_raw_parts_mut(buf, need);
    for (k, v) in field(&m.mesh).iter().enumerate() {
        let v = if m.mesh.grid.mask[k] { [v.x, v.y, v.z] } else { [f64::NAN; 3] };
        out[3 * k..3 * k + 3].copy_from_slice(&v);
    }
    CmcStatus::Ok
}

/// Writes the mesh as OBJ.
///
/// # Safety
/// `mesh` is a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cmc_mesh_write_obj(mesh: *const CmcMesh, path: *const c_char) -> CmcStatus {
    guard(|| {
        let m = mesh.as_ref().ok_or_else(|| {
            set_error("null mesh");
            CmcStatus::NullPointer
        })?;
        let path = read_str(path)?;
        let file = File::create(path).map_err(|e| {
            set_error(format!("{path}: {e}"));
            CmcStatus::Io
        })?;
        mesh_io::write_obj(&m.mesh, BufWriter::new(file)).map_err(|e| {
            set_error(format!("{path}: {e}"));
            CmcStatus::Io
        })
    })
}

/// Curvature and diagnostics report as JSON. Release with
/// [`cmc_string_free`]. Null on failure.
///
/// # Safety
/// `mesh` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cmc_mesh_report_json(mesh: *const CmcMesh) -> *mut c_char {
    let Some(m) = mesh.as_ref() else {
        set_error("null mesh");
        return ptr::null_mut();
    };
    let r = catch_unwind(AssertUnwindSafe(|| {
        let report = MeshReport::from_mesh(&m.mesh, Some(&m.hopf));
        serde_json::to_string(&report).ok().and_then(|s| CString::new(s).ok())
    }));
    match r {
        Ok(Some(s)) => s.into_raw(),
        _ => {
            set_error("report serialization failed");
            ptr::null_mut()
        }
    }
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` is null or came from [`cmc_mesh_report_json`].
#[no_mangle]
pub unsafe extern "C" fn cmc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cmc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn cmc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
