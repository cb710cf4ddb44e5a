//! C ABI over the `sinegordon` solver.
//!
//! Simulations are opaque [`SgSimulation`] handles created by
//! [`sg_simulation_new`] and released with [`sg_simulation_free`]. Every
//! fallible call returns an [`SgStatus`]; on failure a description is
//! available from [`sg_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sinegordon::diagnostics::error_vs_exact;
use sinegordon::harness::energy_pair;
use sinegordon::{Error, Problem, SchemeKind, Simulation};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerical = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SgField {
    U = 0,
    V = 1,
    R = 2,
}

/// Opaque simulation handle.
pub struct SgSimulation {
    problem: Problem,
    sim: Simulation,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> SgStatus {
    if err.is_numerical() {
        SgStatus::Numerical
    } else {
        SgStatus::Config
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (SgStatus, String)>) -> SgStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SgStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SgStatus::Panic
        }
    }
}

fn lift(err: Error) -> (SgStatus, String) {
    (status_of(&err), err.to_string())
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (SgStatus, String)> {
    if p.is_null() {
        return Err((SgStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (SgStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn sim_ref<'a>(h: *const SgSimulation) -> Result<&'a SgSimulation, (SgStatus, String)> {
    h.as_ref().ok_or((SgStatus::NullPointer, "simulation handle is null".to_string()))
}

fn out_ptr<T>(p: *mut T, what: &str) -> Result<(), (SgStatus, String)> {
    if p.is_null() {
        Err((SgStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

/// Creates a simulation of a named problem (`"ring"`, `"double-pole-1d"`, ...)
/// with scheme `"li-leps"` or `"ep-fds"` on an `n1 x n2` mesh (`n2 = 1` in 1D).
///
/// # Safety
/// `problem` and `scheme` must be NUL-terminated strings; `out` must be a
/// valid pointer. On success `*out` owns a handle to pass to `sg_simulation_free`.
#[no_mangle]
pub unsafe extern "C" fn sg_simulation_new(
    problem: *const c_char,
    scheme: *const c_char,
    n1: usize,
    n2: usize,
    tau: f64,
    out: *mut *mut SgSimulation,
) -> SgStatus {
    guard(|| {
        out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let problem = Problem::by_name(str_arg(problem, "problem")?).map_err(lift)?;
        let scheme: SchemeKind = str_arg(scheme, "scheme")?.parse().map_err(lift)?;
        if problem.dim == 1 && n2 != 1 {
            return Err((SgStatus::InvalidArgument, "one-dimensional problems need n2 = 1".into()));
        }
        let grid = problem.grid(n1, n2).map_err(lift)?;
        let sim = Simulation::new(&problem, scheme, &grid, tau).map_err(lift)?;
        *out = Box::into_raw(Box::new(SgSimulation { problem, sim }));
        Ok(())
    })
}

/// # Safety
/// `sim` must be null or a handle from `sg_simulation_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sg_simulation_free(sim: *mut SgSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advances `steps` time levels. On a numerical failure the handle keeps the
/// last good level.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sg_simulation_step(sim: *mut SgSimulation, steps: usize) -> SgStatus {
    guard(|| {
        let h = sim.as_mut().ok_or((SgStatus::NullPointer, "simulation handle is null".to_string()))?;
        for _ in 0..steps {
            h.sim.advance().map_err(lift)?;
        }
        Ok(())
    })
}

/// # Safety
/// `sim` must be a live handle; `t` and `step` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sg_simulation_time(sim: *const SgSimulation, t: *mut f64, step: *mut usize) -> SgStatus {
    guard(|| {
        let h = sim_ref(sim)?;
        out_ptr(t, "t")?;
        out_ptr(step, "step")?;
        *t = h.sim.state.t;
        *step = h.sim.state.step;
        Ok(())
    })
}

/// Number of mesh nodes, the length of every field buffer.
///
/// # Safety
/// `sim` must be a live handle; `len` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sg_simulation_node_count(sim: *const SgSimulation, len: *mut usize) -> SgStatus {
    guard(|| {
        let h = sim_ref(sim)?;
        out_ptr(len, "len")?;
        *len = h.sim.state.u.len();
        Ok(())
    })
}

/// Copies a field into `buf` in j2-outer, j1-inner order.
///
/// # Safety
/// `sim` must be a live handle; `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sg_simulation_copy_field(
    sim: *const SgSimulation,
    field: SgField,
    buf: *mut f64,
    len: usize,
) -> SgStatus {
    guard(|| {
        let h = sim_ref(sim)?;
        out_ptr(buf, "buf")?;
        let s = &h.sim.state;
        let src = match field {
            SgField::U => s.u.values(),
            SgField::V => s.v.values(),
            SgField::R => s.r.values(),
        };
        if len < src.len() {
            return Err((SgStatus::BufferTooSmall, format!("buffer holds {len} values, need {}", src.len())));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
        Ok(())
    })
}

/// The scheme's conserved energy and the original sine-Gordon energy.
///
/// # Safety
/// `sim` must be a live handle; `conserved` and `original` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sg_simulation_energy(
    sim: *const SgSimulation,
    conserved: *mut f64,
    original: *mut f64,
) -> SgStatus {
    guard(|| {
        let h = sim_ref(sim)?;
        out_ptr(conserved, "conserved")?;
        out_ptr(original, "original")?;
        let st = h.sim.integrator.stencil();
        let (c, o) = energy_pair(st, h.sim.scheme, &h.sim.state, h.sim.tau).map_err(lift)?;
        *conserved = c;
        *original = o;
        Ok(())
    })
}

/// L2, max and H1 errors of `u` against the exact solution, for problems that have one.
///
/// # Safety
/// `sim` must be a live handle; the output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sg_simulation_errors(
    sim: *const SgSimulation,
    l2: *mut f64,
    linf: *mut f64,
    h1: *mut f64,
) -> SgStatus {
    guard(|| {
        let h = sim_ref(sim)?;
        out_ptr(l2, "l2")?;
        out_ptr(linf, "linf")?;
        out_ptr(h1, "h1")?;
        let e = error_vs_exact(&h.sim.state, &h.problem).map_err(lift)?;
        *l2 = e.l2_err;
        *linf = e.linf_err;
        *h1 = e.h1_err;
        Ok(())
    })
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn sg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
