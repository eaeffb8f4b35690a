//! C ABI for qkim.
//!
//! Objects are opaque handles created by `qkim_*_new`/`qkim_*_build` functions
//! and released with the matching `qkim_*_free`. Every fallible call returns a
//! [`QkimStatus`]; on failure the thread-local message is available through
//! [`qkim_last_error_message`]. Array outputs are written into caller buffers
//! whose length is passed in elements; a short buffer yields
//! `QKIM_STATUS_BUFFER_TOO_SMALL` and leaves the required length in `*len`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use qkim::hamiltonians::{build_h_tau, TauHamiltonian};
use qkim::linalg::eigvalsh;
use qkim::model::{Boundary, ModelParams, TauSector};
use qkim::mps::{entropy_profile, imaginary_time_ground_state, GroundState, TebdSchedule};
use qkim::quantum::{DensityMatrix, LindbladPropagator};
use qkim::rates::{check_detailed_balance, GlauberRates};
use qkim::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QkimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    TooLarge = 3,
    Unsupported = 4,
    Numerical = 5,
    Parse = 6,
    Io = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QkimBoundary {
    Periodic = 0,
    Open = 1,
}

/// Model parameters (N, boundary, γ, δ, Γ).
pub struct QkimParams(ModelParams);

/// A dense sector Hamiltonian H_τ.
pub struct QkimHamiltonian(TauHamiltonian);

/// An MPS ground state of an open-chain H_τ.
pub struct QkimGroundState(GroundState);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> QkimStatus {
    match err {
        Error::SizeMismatch { .. }
        | Error::SiteOutOfRange { .. }
        | Error::InvalidParams(_)
        | Error::NegativeTime(_)
        | Error::NegativeRate { .. } => QkimStatus::InvalidArgument,
        Error::TooLarge { .. } => QkimStatus::TooLarge,
        Error::Unsupported(_) => QkimStatus::Unsupported,
        Error::DetailedBalance { .. }
        | Error::NotSymmetric { .. }
        | Error::Numerical(_)
        | Error::NonConvergence { .. } => QkimStatus::Numerical,
        Error::Parse(_) | Error::Json(_) | Error::Csv(_) => QkimStatus::Parse,
        Error::Io(_) => QkimStatus::Io,
    }
}

enum Failure {
    Lib(Error),
    Null(&'static str),
    Short { needed: usize },
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> QkimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QkimStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            QkimStatus::NullPointer
        }
        Ok(Err(Failure::Short { needed })) => {
            set_error(format!("buffer too small: {needed} elements needed"));
            QkimStatus::BufferTooSmall
        }
        Err(_) => {
            set_error("internal panic".into());
            QkimStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

/// Copies `src` into `(buf, *len)`; `*len` becomes `src.len()` either way.
unsafe fn fill(src: &[f64], buf: *mut f64, len: *mut usize) -> Result<(), Failure> {
    let len = out(len, "len")?;
    let capacity = *len;
    *len = src.len();
    if capacity < src.len() {
        return Err(Failure::Short { needed: src.len() });
    }
    if src.is_empty() {
        return Ok(());
    }
    if buf.is_null() {
        return Err(Failure::Null("buf"));
    }
    std::ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

unsafe fn c_str<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Lib(Error::Parse(format!("{what} is not UTF-8"))))
}

/// Copies the last error message of this thread, NUL-terminated and
/// truncated to `cap` bytes. Returns the full message length in bytes.
///
/// # Safety
/// `buf` must point to `cap` writable bytes, or be null with `cap == 0`.
#[no_mangle]
pub unsafe extern "C" fn qkim_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Creates parameters with J = 1 and β = atanh(γ)/2. `boundary` is a
/// [`QkimBoundary`] value.
///
/// # Safety
/// `out_params` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qkim_params_new(
    n_sites: usize,
    gamma: f64,
    delta: f64,
    boundary: u32,
    rate_scale: f64,
    out_params: *mut *mut QkimParams,
) -> QkimStatus {
    guard(|| {
        let slot = out(out_params, "out_params")?;
        let b = match boundary {
            x if x == QkimBoundary::Periodic as u32 => Boundary::Periodic,
            x if x == QkimBoundary::Open as u32 => Boundary::Open,
            x => return Err(Error::InvalidParams(format!("unknown boundary code {x}")).into()),
        };
        let p = ModelParams::new(n_sites, gamma, delta)?.with_boundary(b).with_rate_scale(rate_scale)?;
        *slot = Box::into_raw(Box::new(QkimParams(p)));
        Ok(())
    })
}

/// # Safety
/// `params` must come from [`qkim_params_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn qkim_params_free(params: *mut QkimParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Detailed-balance check of the Glauber rates.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn qkim_dbc_check(
    params: *const QkimParams,
    holds: *mut bool,
    max_violation: *mut f64,
) -> QkimStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let rep = check_detailed_balance(&GlauberRates, &p.0)?;
        *out(holds, "holds")? = rep.holds;
        *out(max_violation, "max_violation")? = rep.max_violation;
        Ok(())
    })
}

/// Builds the dense H_τ for τ given as bits (bit i set ⇔ τ_i = −1).
///
/// # Safety
/// `params` and `out_h` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qkim_hamiltonian_build(
    params: *const QkimParams,
    tau_bits: u64,
    out_h: *mut *mut QkimHamiltonian,
) -> QkimStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let slot = out(out_h, "out_h")?;
        let tau = TauSector::from_bits(tau_bits, p.0.n_sites)?;
        *slot = Box::into_raw(Box::new(QkimHamiltonian(build_h_tau(&tau, &p.0)?)));
        Ok(())
    })
}

/// # Safety
/// `h` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn qkim_hamiltonian_dim(h: *const QkimHamiltonian, dim: *mut usize) -> QkimStatus {
    guard(|| {
        *out(dim, "dim")? = deref(h, "h")?.0.dim();
        Ok(())
    })
}

/// Row-major matrix entries (dim² values).
///
/// # Safety
/// `buf` must hold `*len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qkim_hamiltonian_matrix(
    h: *const QkimHamiltonian,
    buf: *mut f64,
    len: *mut usize,
) -> QkimStatus {
    guard(|| fill(deref(h, "h")?.0.matrix.as_slice(), buf, len))
}

/// Eigenvalues in ascending order.
///
/// # Safety
/// `buf` must hold `*len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qkim_hamiltonian_eigenvalues(
    h: *const QkimHamiltonian,
    buf: *mut f64,
    len: *mut usize,
) -> QkimStatus {
    guard(|| {
        let vals = eigvalsh(&deref(h, "h")?.0.matrix)?;
        fill(&vals, buf, len)
    })
}

/// # Safety
/// `h` must come from [`qkim_hamiltonian_build`] or be null.
#[no_mangle]
pub unsafe extern "C" fn qkim_hamiltonian_free(h: *mut QkimHamiltonian) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Imaginary-time TEBD ground state of the open-chain H_τ; `tau` is a
/// '+'/'-' string of length N. Fails with `QKIM_STATUS_NUMERICAL` when the
/// energy does not converge.
///
/// # Safety
/// `params`, `tau` (NUL-terminated) and `out_gs` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qkim_ground_state(
    params: *const QkimParams,
    tau: *const c_char,
    chi_max: usize,
    out_gs: *mut *mut QkimGroundState,
) -> QkimStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let slot = out(out_gs, "out_gs")?;
        let tau: TauSector = c_str(tau, "tau")?.parse()?;
        if tau.n_sites() != p.0.n_sites {
            return Err(Error::SizeMismatch { expected: p.0.n_sites, found: tau.n_sites() }.into());
        }
        let schedule = TebdSchedule { chi_max, ..TebdSchedule::default() };
        let gs = imaginary_time_ground_state(&tau, &p.0, &schedule)?;
        if !gs.converged {
            let last = gs.stages.last().expect("nonempty ladder");
            return Err(Error::NonConvergence { sweeps: last.sweeps, delta: last.last_change }.into());
        }
        *slot = Box::into_raw(Box::new(QkimGroundState(gs)));
        Ok(())
    })
}

/// # Safety
/// `gs` and `energy` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qkim_ground_state_energy(gs: *const QkimGroundState, energy: *mut f64) -> QkimStatus {
    guard(|| {
        *out(energy, "energy")? = deref(gs, "gs")?.0.energy;
        Ok(())
    })
}

/// Base-2 entropies S(L) for L = 1..N−1.
///
/// # Safety
/// `buf` must hold `*len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qkim_ground_state_entropy(
    gs: *mut QkimGroundState,
    buf: *mut f64,
    len: *mut usize,
) -> QkimStatus {
    guard(|| {
        let gs = out(gs, "gs")?;
        let s = entropy_profile(&mut gs.0.state)?;
        fill(&s, buf, len)
    })
}

/// # Safety
/// `gs` must come from [`qkim_ground_state`] or be null.
#[no_mangle]
pub unsafe extern "C" fn qkim_ground_state_free(gs: *mut QkimGroundState) {
    if !gs.is_null() {
        drop(Box::from_raw(gs));
    }
}

/// Evolves a named initial state ("ghz", "ghz-minus", "thermal", "uniform")
/// under the Lindbladian for time `t` and writes ρ(t) row-major as separate
/// real and imaginary parts (4^N values each; `t` may be +inf). `*len` is the
/// capacity of each buffer on input and 4^N on output.
///
/// # Safety
/// `params`, `initial` and `len` must be valid; `re` and `im` must each hold
/// `*len` doubles.
#[no_mangle]
pub unsafe extern "C" fn qkim_evolve_density(
    params: *const QkimParams,
    initial: *const c_char,
    t: f64,
    re: *mut f64,
    im: *mut f64,
    len: *mut usize,
) -> QkimStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let n = p.0.n_sites;
        let rho0 = match c_str(initial, "initial")? {
            "ghz" => DensityMatrix::ghz(n, true)?,
            "ghz-minus" => DensityMatrix::ghz(n, false)?,
            "thermal" => DensityMatrix::thermal(&p.0)?,
            "uniform" => DensityMatrix::uniform_superposition(n)?,
            other => return Err(Error::Parse(format!("unknown initial state {other:?}")).into()),
        };
        if t < 0.0 {
            return Err(Error::NegativeTime(t).into());
        }
        let rho = LindbladPropagator::new(&p.0, 1)?.evolve(&rho0, t)?;
        let real: Vec<f64> = rho.as_slice().iter().map(|z| z.re).collect();
        let imag: Vec<f64> = rho.as_slice().iter().map(|z| z.im).collect();
        let cap = *out(len, "len")?;
        fill(&real, re, len)?;
        *len = cap;
        fill(&imag, im, len)
    })
}
