//! C ABI over `anc-core`.
//!
//! Objects are opaque handles created by `anc_*_new` / `anc_*_from_*` and
//! released with the matching `anc_*_free`. Every fallible call returns an
//! [`AncStatus`]; on failure the message is available from
//! [`anc_last_error`] on the same thread until the next failing call.
//! Matrices are passed row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use anc_core::adaptive::{sdfx_lms_step, wiener_solve, AdaptiveState, FirFilter, WienerProblem};
use anc_core::error::AncError;
use anc_core::lifting::{discretize_lifted, LiftedDiscretization};
use anc_core::lti::ContinuousStateSpace;
use anc_core::nalgebra::{DMatrix, DVector};
use anc_core::sim::{run_comparison, SimConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AncStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    Unstable = 4,
    Improper = 5,
    Singular = 6,
    Config = 7,
    Io = 8,
    Panic = 9,
}

pub struct AncPlant(ContinuousStateSpace);

pub struct AncLift(LiftedDiscretization);

pub struct AncAdaptive {
    lift: LiftedDiscretization,
    state: AdaptiveState,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct AncComparisonResult {
    pub e_norm_proposed: f64,
    pub e_norm_conventional: f64,
    pub d_norm: f64,
    /// `e_norm_proposed / e_norm_conventional`
    pub ratio: f64,
    pub diverged_proposed: bool,
    pub diverged_conventional: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &AncError) -> AncStatus {
    match err {
        AncError::Dimension(_) => AncStatus::Dimension,
        AncError::Unstable(_) => AncStatus::Unstable,
        AncError::Improper(_) => AncStatus::Improper,
        AncError::InvalidArgument(_) => AncStatus::InvalidArgument,
        AncError::Singular { .. } => AncStatus::Singular,
        AncError::Config { .. } => AncStatus::Config,
        AncError::Io(_) => AncStatus::Io,
    }
}

enum Failure {
    Null(&'static str),
    Core(AncError),
}

impl From<AncError> for Failure {
    fn from(e: AncError) -> Self {
        Failure::Core(e)
    }
}

fn guard<F>(f: F) -> AncStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AncStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            AncStatus::NullPointer
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            AncStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &'static str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn handle_mut<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

fn expect_len(got: usize, want: usize, what: &str) -> Result<(), Failure> {
    if got != want {
        return Err(AncError::Dimension(format!("{what}: length {got}, expected {want}")).into());
    }
    Ok(())
}

/// Message of the last failing call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn anc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn anc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// `Π 1/(s+p_i) · Σ_k g_k ω_k² / (s² + 2ζ_k ω_k s + ω_k²)`.
///
/// # Safety
/// Array arguments must point to at least the stated number of doubles;
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn anc_plant_from_bank(
    gains: *const f64,
    dampings: *const f64,
    frequencies: *const f64,
    n_sections: usize,
    poles: *const f64,
    n_poles: usize,
    out: *mut *mut AncPlant,
) -> AncStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let g = slice(gains, n_sections, "gains")?;
        let z = slice(dampings, n_sections, "dampings")?;
        let w = slice(frequencies, n_sections, "frequencies")?;
        let p = slice(poles, n_poles, "poles")?;
        let sys = ContinuousStateSpace::from_second_order_bank(g, z, w, p)?;
        *out = Box::into_raw(Box::new(AncPlant(sys)));
        Ok(())
    })
}

/// Plant from row-major `A` (n×n), `B` (n×1), `C` (1×n) and scalar `D`.
///
/// # Safety
/// `a` must hold `n*n` doubles, `b` and `c` `n` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn anc_plant_from_state_space(
    a: *const f64,
    b: *const f64,
    c: *const f64,
    d: f64,
    n: usize,
    out: *mut *mut AncPlant,
) -> AncStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let a = DMatrix::from_row_slice(n, n, slice(a, n * n, "a")?);
        let b = DMatrix::from_row_slice(n, 1, slice(b, n, "b")?);
        let c = DMatrix::from_row_slice(1, n, slice(c, n, "c")?);
        let sys = ContinuousStateSpace::new(a, b, c, DMatrix::from_element(1, 1, d))?;
        *out = Box::into_raw(Box::new(AncPlant(sys)));
        Ok(())
    })
}

/// # Safety
/// `plant` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn anc_plant_free(plant: *mut AncPlant) {
    if !plant.is_null() {
        drop(Box::from_raw(plant));
    }
}

/// State dimension, 0 for a null handle.
///
/// # Safety
/// `plant` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn anc_plant_state_dim(plant: *const AncPlant) -> usize {
    plant.as_ref().map_or(0, |p| p.0.state_dim())
}

/// `F(jω)` of a SISO plant.
///
/// # Safety
/// `plant` must be a live handle; `re` and `im` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn anc_plant_freq_response(
    plant: *const AncPlant,
    omega: f64,
    re: *mut f64,
    im: *mut f64,
) -> AncStatus {
    guard(|| {
        let p = handle(plant, "plant")?;
        if re.is_null() || im.is_null() {
            return Err(Failure::Null("re/im"));
        }
        let v = p.0.freq_response_siso(omega)?;
        *re = v.re;
        *im = v.im;
        Ok(())
    })
}

/// Lifted discretization of `plant` with period `h` and ratio `l`.
///
/// # Safety
/// `plant` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn anc_lift_new(
    plant: *const AncPlant,
    h: f64,
    l: usize,
    out: *mut *mut AncLift,
) -> AncStatus {
    guard(|| {
        let p = handle(plant, "plant")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let lift = discretize_lifted(&p.0, h, l)?;
        *out = Box::into_raw(Box::new(AncLift(lift)));
        Ok(())
    })
}

/// # Safety
/// `lift` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn anc_lift_free(lift: *mut AncLift) {
    if !lift.is_null() {
        drop(Box::from_raw(lift));
    }
}

/// # Safety
/// `lift` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn anc_lift_state_dim(lift: *const AncLift) -> usize {
    lift.as_ref().map_or(0, |l| l.0.state_dim())
}

/// # Safety
/// `lift` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn anc_lift_ratio(lift: *const AncLift) -> usize {
    lift.as_ref().map_or(0, |l| l.0.ratio())
}

/// One step of the block filter: `η⁺ = A_h η + B_h x`, `U = C_h η + D_h x`.
/// `eta_in` and `eta_out` may alias.
///
/// # Safety
/// `eta_in`/`eta_out` must hold `eta_len` doubles and `u_out` `u_len`.
#[no_mangle]
pub unsafe extern "C" fn anc_lift_fh_step(
    lift: *const AncLift,
    eta_in: *const f64,
    eta_len: usize,
    x: f64,
    eta_out: *mut f64,
    u_out: *mut f64,
    u_len: usize,
) -> AncStatus {
    guard(|| {
        let lift = &handle(lift, "lift")?.0;
        expect_len(eta_len, lift.state_dim(), "eta")?;
        expect_len(u_len, lift.ratio(), "U")?;
        let eta = DVector::from_column_slice(slice(eta_in, eta_len, "eta_in")?);
        let (next, u) = lift.fh_step(&eta, x);
        slice_mut(eta_out, eta_len, "eta_out")?.copy_from_slice(next.as_slice());
        slice_mut(u_out, u_len, "u_out")?.copy_from_slice(u.as_slice());
        Ok(())
    })
}

/// Adaptive filter state bound to a copy of `lift`, starting from `alpha0`.
///
/// # Safety
/// `alpha0` must hold `n_taps` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn anc_adaptive_new(
    lift: *const AncLift,
    alpha0: *const f64,
    n_taps: usize,
    out: *mut *mut AncAdaptive,
) -> AncStatus {
    guard(|| {
        let lift = handle(lift, "lift")?.0.clone();
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let alpha0 = FirFilter::new(slice(alpha0, n_taps, "alpha0")?.to_vec())?;
        let state = AdaptiveState::new(&lift, alpha0);
        *out = Box::into_raw(Box::new(AncAdaptive { lift, state }));
        Ok(())
    })
}

/// # Safety
/// `state` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn anc_adaptive_free(state: *mut AncAdaptive) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// `α ← α + μ δ`, then `δ` takes in the error block (`L` samples) of the
/// period that started with noise sample `x_d`.
///
/// # Safety
/// `e_block` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn anc_adaptive_step(
    state: *mut AncAdaptive,
    mu: f64,
    e_block: *const f64,
    len: usize,
    x_d: f64,
) -> AncStatus {
    guard(|| {
        let s = handle_mut(state, "state")?;
        let e = slice(e_block, len, "e_block")?;
        sdfx_lms_step(&mut s.state, &s.lift, mu, e, x_d)?;
        Ok(())
    })
}

/// Copies the current taps into `out` (`len` must equal the tap count).
///
/// # Safety
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn anc_adaptive_taps(state: *const AncAdaptive, out: *mut f64, len: usize) -> AncStatus {
    guard(|| {
        let s = handle(state, "state")?;
        expect_len(len, s.state.taps().len(), "taps")?;
        slice_mut(out, len, "out")?.copy_from_slice(s.state.taps());
        Ok(())
    })
}

/// Solves `Φ α = β` for a row-major `n×n` symmetric `Φ`.
///
/// # Safety
/// `phi` must hold `n*n` doubles, `beta` and `alpha_out` `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn anc_wiener_solve(
    phi: *const f64,
    beta: *const f64,
    n: usize,
    alpha_out: *mut f64,
) -> AncStatus {
    guard(|| {
        if n == 0 {
            return Err(AncError::InvalidArgument("empty problem".into()).into());
        }
        let problem = WienerProblem {
            phi: DMatrix::from_row_slice(n, n, slice(phi, n * n, "phi")?),
            beta: DVector::from_column_slice(slice(beta, n, "beta")?),
            horizon: 1.0,
            d_energy: 0.0,
        };
        let alpha = wiener_solve(&problem)?;
        slice_mut(alpha_out, n, "alpha_out")?.copy_from_slice(alpha.taps());
        Ok(())
    })
}

/// Runs the proposed and conventional updates for a configuration given as
/// text (the `anc-sim` config format; empty text means the defaults).
///
/// # Safety
/// `config_text` must be a NUL-terminated UTF-8 string; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn anc_run_comparison(config_text: *const c_char, out: *mut AncComparisonResult) -> AncStatus {
    guard(|| {
        if config_text.is_null() {
            return Err(Failure::Null("config_text"));
        }
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let text = CStr::from_ptr(config_text)
            .to_str()
            .map_err(|_| AncError::config("config", "not valid UTF-8"))?;
        let cfg = SimConfig::from_str(text)?;
        let cmp = run_comparison(&cfg)?;
        *out = AncComparisonResult {
            e_norm_proposed: cmp.proposed.report.e_norm,
            e_norm_conventional: cmp.conventional.report.e_norm,
            d_norm: cmp.proposed.report.d_norm,
            ratio: cmp.ratio,
            diverged_proposed: cmp.proposed.report.diverged,
            diverged_conventional: cmp.conventional.report.diverged,
        };
        Ok(())
    })
}
