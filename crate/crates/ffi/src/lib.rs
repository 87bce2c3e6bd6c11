//! C ABI over the `ksfem` solver.
//!
//! Every fallible function returns a [`KsStatus`]. On failure a description
//! is stored per thread and can be read with [`ks_last_error_message`].
//! Handles ([`KsMesh`], [`KsSimulation`]) are opaque and owned by the caller
//! once created; release them with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use ksfem::diagnostics::DiagnosticsRecord;
use ksfem::{
    assemble, check_weak_acuteness, generate_rect_mesh, load_mesh, save_mesh, Error, Field, InitialData, InvariantMode,
    Mesh, MotilityKind, MotilityModel, SchemeConfig, Simulation,
};

/// Result code of every fallible call. `KS_STATUS_OK` is zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidMesh = 3,
    Parse = 4,
    Io = 5,
    NotWeaklyAcute = 6,
    TimestepCondition = 7,
    Solver = 8,
    Invariant = 9,
    BufferTooSmall = 10,
    Finished = 11,
    Panic = 12,
    Internal = 13,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsMotilityKind {
    Power = 0,
    PowerPlusFloor = 1,
    BoundedRational = 2,
}

/// `Φ(s) = scale·s^alpha (+ floor)` or `scale·s^alpha / (1 + s^alpha)`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct KsMotility {
    pub kind: KsMotilityKind,
    pub alpha: f64,
    pub scale: f64,
    /// Must be zero unless `kind` is `PowerPlusFloor`.
    pub floor: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsFieldKind {
    Constant = 0,
    Gaussian = 1,
    Cosine = 2,
}

/// Initial field centred at `(x0, y0)`; constant fields only read `c`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct KsField {
    pub kind: KsFieldKind,
    pub c: f64,
    pub a: f64,
    pub x0: f64,
    pub y0: f64,
    pub w: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KsInvariantMode {
    Off = 0,
    Warn = 1,
    Fail = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct KsSimParams {
    pub t_final: f64,
    pub steps: usize,
    /// Relative residual tolerance of the linear solves; 0 selects the default.
    pub solver_tol: f64,
    pub invariant_mode: KsInvariantMode,
    pub enforce_k_condition: bool,
    pub skip_mesh_check: bool,
    /// Target lumped mass of `u_{0h}`; NaN keeps the projected mass.
    pub u0_mass: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct KsAcutenessReport {
    pub is_weakly_acute: bool,
    pub worst_edge: usize,
    pub worst_edge_a: usize,
    pub worst_edge_b: usize,
    pub worst_angle_sum: f64,
    pub worst_angle_limit: f64,
    pub offdiag_max: f64,
    pub tol_mat: f64,
}

/// One row of diagnostics; fields without a previous step are zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct KsDiagnostics {
    pub n: usize,
    pub t: f64,
    pub mass_u: f64,
    pub mass_v: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub min_v: f64,
    pub max_v: f64,
    pub energy_v_residual: f64,
    pub psi_h1h_sq: f64,
    pub dual_ineq_slack: f64,
    pub entropy: f64,
    pub entropy_ineq_slack: f64,
    pub grad_log_v_sq: f64,
    pub weighted_mass_flux: f64,
}

impl From<&DiagnosticsRecord> for KsDiagnostics {
    fn from(r: &DiagnosticsRecord) -> Self {
        Self {
            n: r.n,
            t: r.t,
            mass_u: r.mass_u,
            mass_v: r.mass_v,
            min_u: r.min_u,
            max_u: r.max_u,
            min_v: r.min_v,
            max_v: r.max_v,
            energy_v_residual: r.energy_v_residual,
            psi_h1h_sq: r.psi_h1h_sq,
            dual_ineq_slack: r.dual_ineq_slack,
            entropy: r.entropy,
            entropy_ineq_slack: r.entropy_ineq_slack,
            grad_log_v_sq: r.grad_log_v_sq,
            weighted_mass_flux: r.weighted_mass_flux,
        }
    }
}

/// Opaque triangulation handle.
pub struct KsMesh {
    mesh: Mesh,
}

/// Opaque simulation handle.
pub struct KsSimulation {
    sim: Simulation<MotilityModel>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(message));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> KsStatus {
    match err {
        Error::DegenerateTriangle { .. }
        | Error::NonManifoldEdge { .. }
        | Error::IndexOutOfRange { .. }
        | Error::UnreferencedVertex(_)
        | Error::Disconnected { .. }
        | Error::NonFiniteVertex(_)
        | Error::EmptyMesh => KsStatus::InvalidMesh,
        Error::Parse { .. } => KsStatus::Parse,
        Error::Io { .. } => KsStatus::Io,
        Error::Overflow(_)
        | Error::MeshMismatch { .. }
        | Error::LengthMismatch { .. }
        | Error::Domain { .. }
        | Error::NonFinite { .. }
        | Error::InvalidArgument(_)
        | Error::Config(_) => KsStatus::InvalidArgument,
        Error::NotPositiveDefinite { .. }
        | Error::SolverDiverged { .. }
        | Error::SizeCap { .. }
        | Error::Singular(_)
        | Error::Conditioning { .. } => KsStatus::Solver,
        Error::TimestepCondition { .. } => KsStatus::TimestepCondition,
        Error::NotWeaklyAcute { .. } => KsStatus::NotWeaklyAcute,
        Error::Invariant { .. } => KsStatus::Invariant,
        Error::Internal(_) => KsStatus::Internal,
    }
}

struct Failure(KsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(KsStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, translating errors and panics into a status code.
fn guard<F: FnOnce() -> Result<KsStatus, Failure>>(body: F) -> KsStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {message}"));
            KsStatus::Panic
        }
    }
}

/// # Safety
/// `p` is null or valid for reads of `T`.
unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

/// # Safety
/// `p` is null or a NUL-terminated string.
unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(KsStatus::InvalidArgument, format!("{what} is not valid UTF-8")))?;
    Ok(PathBuf::from(s))
}

/// # Safety
/// `out` is null or valid for writes of `T`.
unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// # Safety
/// `buf` is null or valid for writes of `len` doubles.
unsafe fn copy_out(values: &[f64], buf: *mut f64, len: usize) -> Result<KsStatus, Failure> {
    if buf.is_null() {
        return Err(null("buffer"));
    }
    if len < values.len() {
        return Err(Failure(KsStatus::BufferTooSmall, format!("buffer holds {len} values, {} needed", values.len())));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    Ok(KsStatus::Ok)
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn ks_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ks_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn into_handle(mesh: Mesh) -> *mut KsMesh {
    Box::into_raw(Box::new(KsMesh { mesh }))
}

/// Uniform `nx × ny` diagonal-split mesh of `[0, lx] × [0, ly]`.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn ks_mesh_generate(nx: usize, ny: usize, lx: f64, ly: f64, out: *mut *mut KsMesh) -> KsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let mesh = generate_rect_mesh(nx, ny, lx, ly)?;
        write_out(out, into_handle(mesh), "out")?;
        Ok(KsStatus::Ok)
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn ks_mesh_load(path: *const c_char, out: *mut *mut KsMesh) -> KsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let mesh = load_mesh(path_arg(path, "path")?)?;
        write_out(out, into_handle(mesh), "out")?;
        Ok(KsStatus::Ok)
    })
}

/// # Safety
/// `mesh` must come from this library; `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ks_mesh_save(mesh: *const KsMesh, path: *const c_char) -> KsStatus {
    guard(|| {
        let mesh = deref(mesh, "mesh")?;
        save_mesh(&mesh.mesh, path_arg(path, "path")?)?;
        Ok(KsStatus::Ok)
    })
}

/// # Safety
/// `mesh` is null or a live handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn ks_mesh_free(mesh: *mut KsMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// # Safety
/// `mesh` must come from this library; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ks_mesh_counts(
    mesh: *const KsMesh,
    num_vertices: *mut usize,
    num_triangles: *mut usize,
) -> KsStatus {
    guard(|| {
        let mesh = &deref(mesh, "mesh")?.mesh;
        write_out(num_vertices, mesh.num_vertices(), "num_vertices")?;
        write_out(num_triangles, mesh.num_triangles(), "num_triangles")?;
        Ok(KsStatus::Ok)
    })
}

/// Copies interleaved coordinates `x0, y0, x1, y1, …` into `xy`, which
/// must hold `2·num_vertices` doubles.
///
/// # Safety
/// `mesh` must come from this library and `xy` be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ks_mesh_vertices(mesh: *const KsMesh, xy: *mut f64, len: usize) -> KsStatus {
    guard(|| {
        let mesh = &deref(mesh, "mesh")?.mesh;
        let flat: Vec<f64> = mesh.vertices().iter().flatten().copied().collect();
        copy_out(&flat, xy, len)
    })
}

/// Copies counter-clockwise vertex triples into `tri`, which must hold
/// `3·num_triangles` entries.
///
/// # Safety
/// `mesh` must come from this library and `tri` be writable for `len` entries.
#[no_mangle]
pub unsafe extern "C" fn ks_mesh_triangles(mesh: *const KsMesh, tri: *mut usize, len: usize) -> KsStatus {
    guard(|| {
        let mesh = &deref(mesh, "mesh")?.mesh;
        if tri.is_null() {
            return Err(null("tri"));
        }
        let flat: Vec<usize> = mesh.triangles().iter().flatten().copied().collect();
        if len < flat.len() {
            return Err(Failure(
                KsStatus::BufferTooSmall,
                format!("buffer holds {len} entries, {} needed", flat.len()),
            ));
        }
        ptr::copy_nonoverlapping(flat.as_ptr(), tri, flat.len());
        Ok(KsStatus::Ok)
    })
}

/// Weak-acuteness certificate. A mesh that is not weakly acute still
/// returns `KS_STATUS_OK`; inspect `is_weakly_acute`.
///
/// # Safety
/// `mesh` must come from this library and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn ks_mesh_check_acuteness(mesh: *const KsMesh, out: *mut KsAcutenessReport) -> KsStatus {
    guard(|| {
        let mesh = &deref(mesh, "mesh")?.mesh;
        let r = check_weak_acuteness(mesh, None)?;
        let report = KsAcutenessReport {
            is_weakly_acute: r.is_weakly_acute,
            worst_edge: r.worst_edge,
            worst_edge_a: r.worst_edge_vertices[0],
            worst_edge_b: r.worst_edge_vertices[1],
            worst_angle_sum: r.worst_angle_sum,
            worst_angle_limit: r.worst_angle_limit,
            offdiag_max: r.offdiag_max,
            tol_mat: r.tol_mat,
        };
        write_out(out, report, "out")?;
        Ok(KsStatus::Ok)
    })
}

fn motility(m: &KsMotility) -> Result<MotilityModel, Failure> {
    let kind = match m.kind {
        KsMotilityKind::Power => MotilityKind::Power,
        KsMotilityKind::PowerPlusFloor => MotilityKind::PowerPlusFloor,
        KsMotilityKind::BoundedRational => MotilityKind::BoundedRational,
    };
    Ok(MotilityModel::new(kind, m.alpha, m.scale, m.floor)?)
}

fn field(f: &KsField) -> Field {
    let KsField { c, a, x0, y0, w, .. } = *f;
    match f.kind {
        KsFieldKind::Constant => Field::Constant { c },
        KsFieldKind::Gaussian => Field::Gaussian { c, a, x0, y0, w },
        KsFieldKind::Cosine => Field::Cosine { c, a, x0, y0, w },
    }
}

fn scheme_config(p: &KsSimParams) -> Result<SchemeConfig, Failure> {
    let mut cfg = SchemeConfig::new(p.t_final, p.steps);
    if p.solver_tol != 0.0 {
        cfg.solver_tol = p.solver_tol;
    }
    cfg.invariant_mode = match p.invariant_mode {
        KsInvariantMode::Off => InvariantMode::Off,
        KsInvariantMode::Warn => InvariantMode::Warn,
        KsInvariantMode::Fail => InvariantMode::Fail,
    };
    cfg.enforce_k_condition = p.enforce_k_condition;
    cfg.skip_mesh_check = p.skip_mesh_check;
    cfg.validate()?;
    Ok(cfg)
}

/// Projects the initial data onto `mesh` and prepares a simulation. The
/// mesh is only read; the simulation keeps its own copy of the operators.
///
/// # Safety
/// Every pointer must be valid; `mesh` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn ks_simulation_create(
    mesh: *const KsMesh,
    motility_params: *const KsMotility,
    u0: *const KsField,
    v0: *const KsField,
    params: *const KsSimParams,
    out: *mut *mut KsSimulation,
) -> KsStatus {
    guard(|| {
        let mesh = &deref(mesh, "mesh")?.mesh;
        let model = motility(deref(motility_params, "motility")?)?;
        let params = deref(params, "params")?;
        let cfg = scheme_config(params)?;
        let mut initial = InitialData::new(field(deref(u0, "u0")?), field(deref(v0, "v0")?))?;
        if !params.u0_mass.is_nan() {
            initial = initial.with_mass(params.u0_mass)?;
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let ops = assemble(mesh);
        if !cfg.skip_mesh_check {
            let r = check_weak_acuteness(mesh, Some(&ops))?;
            if !r.is_weakly_acute {
                let [a, b] = r.worst_edge_vertices;
                return Err(Error::NotWeaklyAcute { a, b, worst_angle_sum: r.worst_angle_sum }.into());
            }
        }
        let (u0h, v0h) = initial.project(mesh, &ops)?;
        let sim = Simulation::new(ops, model, u0h, v0h, cfg)?;
        write_out(out, Box::into_raw(Box::new(KsSimulation { sim })), "out")?;
        Ok(KsStatus::Ok)
    })
}

/// Advances one step and writes its diagnostics. Returns `KS_STATUS_FINISHED`
/// without stepping once `N` steps have been taken.
///
/// # Safety
/// `sim` must come from this library; `out` is null or writable.
#[no_mangle]
pub unsafe extern "C" fn ks_simulation_step(sim: *mut KsSimulation, out: *mut KsDiagnostics) -> KsStatus {
    guard(|| {
        let sim = &mut sim.as_mut().ok_or_else(|| null("sim"))?.sim;
        if sim.is_finished() {
            return Ok(KsStatus::Finished);
        }
        let record = KsDiagnostics::from(sim.step()?);
        if !out.is_null() {
            out.write(record);
        }
        Ok(KsStatus::Ok)
    })
}

/// Diagnostics of the most recent state (step 0 before any step).
///
/// # Safety
/// `sim` must come from this library and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn ks_simulation_diagnostics(sim: *const KsSimulation, out: *mut KsDiagnostics) -> KsStatus {
    guard(|| {
        let sim = &deref(sim, "sim")?.sim;
        let last = sim.records().last().ok_or_else(|| Failure(KsStatus::Internal, "no records".into()))?;
        write_out(out, KsDiagnostics::from(last), "out")?;
        Ok(KsStatus::Ok)
    })
}

/// Current step index and time.
///
/// # Safety
/// `sim` must come from this library; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ks_simulation_time(sim: *const KsSimulation, n: *mut usize, t: *mut f64) -> KsStatus {
    guard(|| {
        let state = deref(sim, "sim")?.sim.state();
        write_out(n, state.n, "n")?;
        write_out(t, state.t(), "t")?;
        Ok(KsStatus::Ok)
    })
}

/// Value `2k·max Φ` of the timestep condition and whether it holds.
///
/// # Safety
/// `sim` must come from this library; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ks_simulation_k_condition(
    sim: *const KsSimulation,
    value: *mut f64,
    pass: *mut bool,
) -> KsStatus {
    guard(|| {
        let kc = deref(sim, "sim")?.sim.k_condition();
        write_out(value, kc.value, "value")?;
        write_out(pass, kc.pass, "pass")?;
        Ok(KsStatus::Ok)
    })
}

/// Copies the nodal values of `u` into `buf` (`len ≥ num_vertices`).
///
/// # Safety
/// `sim` must come from this library and `buf` be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ks_simulation_get_u(sim: *const KsSimulation, buf: *mut f64, len: usize) -> KsStatus {
    guard(|| copy_out(deref(sim, "sim")?.sim.state().u.values(), buf, len))
}

/// Copies the nodal values of `v` into `buf` (`len ≥ num_vertices`).
///
/// # Safety
/// `sim` must come from this library and `buf` be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ks_simulation_get_v(sim: *const KsSimulation, buf: *mut f64, len: usize) -> KsStatus {
    guard(|| copy_out(deref(sim, "sim")?.sim.state().v.values(), buf, len))
}

/// # Safety
/// `sim` is null or a live handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn ks_simulation_free(sim: *mut KsSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Runs a config file exactly as `ksfem run` does and stores the process
/// exit code (0 ok, 1 invariant or solver failure, 2 config or I/O error,
/// 3 timestep condition) in `exit_code`. `outdir` may be null to use the
/// directory named in the config.
///
/// # Safety
/// `config` must be a NUL-terminated string, `outdir` null or one, and
/// `exit_code` writable.
#[no_mangle]
pub unsafe extern "C" fn ks_run_config(config: *const c_char, outdir: *const c_char, exit_code: *mut i32) -> KsStatus {
    guard(|| {
        let config = path_arg(config, "config")?;
        let outdir = if outdir.is_null() { None } else { Some(path_arg(outdir, "outdir")?) };
        if exit_code.is_null() {
            return Err(null("exit_code"));
        }
        let code = ksfem::cli::cmd_run(&config, &[], outdir.as_deref());
        exit_code.write(code);
        Ok(KsStatus::Ok)
    })
}
