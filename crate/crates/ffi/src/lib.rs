//! C interface to the simulator and the Bell-test tools.
//!
//! Every function returns an [`LbStatus`]; results are written through out
//! pointers. On failure a message is kept per thread and can be read with
//! [`lb_last_error`]. Simulators are opaque handles created by
//! [`lb_simulator_new`] and released with [`lb_simulator_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use lattice_bell::bell::{
    chsh_value, evaluate, lhv_minimum, ClosedForm, Correlator, FullSimulation, MeasurementSettings,
    TuraCoefficients,
};
use lattice_bell::fock::sector_dimension;
use lattice_bell::optimize::{optimize_free_phases, optimize_global_phases, GaConfig, SweepGrid};
use lattice_bell::protocol::{InteractionStrength, PostSelection};
use lattice_bell::Error;

/// No selection: the parity of every outcome counts.
pub const LB_POSTSELECT_OFF: u32 = 0;
/// Expectation conditioned on one atom per well.
pub const LB_POSTSELECT_CONDITIONAL: u32 = 1;
/// Selected outcomes weighted by `p * 2^(N-1)`.
pub const LB_POSTSELECT_NOMINAL: u32 = 2;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LbStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    /// Basis or enumeration larger than allowed.
    Capacity = 3,
    /// Non-Hermitian generator, empty projection or undefined ratio.
    Numerical = 4,
    BufferTooSmall = 5,
    /// A Rust panic was caught at the boundary.
    Internal = 6,
}

/// Coefficients of the symmetric two-setting Bell expression.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LbBellCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub classical_bound: f64,
}

/// Opaque simulator handle.
pub struct LbSimulator {
    inner: FullSimulation,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(LbStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Capacity { .. } | Error::EnumerationLimit { .. } => LbStatus::Capacity,
            Error::NotHermitian { .. } | Error::DegenerateProjection | Error::UndefinedRatio => LbStatus::Numerical,
            Error::Argument(_) | Error::ModeOutOfRange { .. } | Error::Config(_) => LbStatus::InvalidArgument,
            _ => LbStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(LbStatus::InvalidArgument, message.into())
}

fn set_last_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> LbStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => LbStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal error: {message}"));
            LbStatus::Internal
        }
    }
}

fn dest<'a, T>(ptr: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    // SAFETY: callers pass either null or a valid, writable pointer.
    unsafe { ptr.as_mut() }.ok_or_else(|| Failure(LbStatus::NullPointer, format!("{name} is null")))
}

fn input<'a>(ptr: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Failure(LbStatus::NullPointer, format!("{name} is null")));
    }
    // SAFETY: the caller guarantees `len` readable values at `ptr`.
    Ok(unsafe { slice::from_raw_parts(ptr, len) })
}

fn output<'a>(ptr: *mut f64, len: usize, name: &str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(Failure(LbStatus::NullPointer, format!("{name} is null")));
    }
    // SAFETY: the caller guarantees `len` writable values at `ptr`.
    Ok(unsafe { slice::from_raw_parts_mut(ptr, len) })
}

fn postselection(mode: u32) -> Result<PostSelection, Failure> {
    match mode {
        LB_POSTSELECT_OFF => Ok(PostSelection::Off),
        LB_POSTSELECT_CONDITIONAL => Ok(PostSelection::Conditional),
        LB_POSTSELECT_NOMINAL => Ok(PostSelection::Nominal),
        other => Err(invalid(format!("unknown post-selection mode {other}"))),
    }
}

enum Evaluator<'a> {
    Simulation(&'a FullSimulation),
    Closed(ClosedForm),
}

impl Evaluator<'_> {
    fn as_ref(&self) -> &dyn Correlator {
        match self {
            Self::Simulation(s) => *s,
            Self::Closed(c) => c,
        }
    }
}

/// Simulator behind `sim`, or the closed form for `n_wells` when `sim` is null.
fn evaluator<'a>(sim: *const LbSimulator, n_wells: usize) -> Result<Evaluator<'a>, Failure> {
    // SAFETY: non-null handles come from `lb_simulator_new`.
    match unsafe { sim.as_ref() } {
        Some(s) => {
            if s.inner.n_wells() != n_wells {
                return Err(invalid(format!(
                    "simulator has {} wells, settings have {n_wells}",
                    s.inner.n_wells()
                )));
            }
            Ok(Evaluator::Simulation(&s.inner))
        }
        None => Ok(Evaluator::Closed(ClosedForm::new(n_wells)?)),
    }
}

fn settings(theta: *const f64, phi: *const f64, n_wells: usize) -> Result<MeasurementSettings, Failure> {
    let theta = input(theta, n_wells, "theta")?.to_vec();
    let phi = input(phi, n_wells, "phi")?.to_vec();
    Ok(MeasurementSettings::new(theta, phi)?)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lb_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version contains a NUL"),
    };
    VERSION.as_ptr()
}

/// Message of the last failed call on this thread, or null if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn lb_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |m| m.as_ptr()))
}

/// Dimension of the `N`-atom sector on `2N` modes.
///
/// # Safety
/// `out` must be null or point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn lb_basis_dimension(n_wells: usize, out: *mut u64) -> LbStatus {
    guard(|| {
        let dim = sector_dimension(n_wells);
        *dest(out, "out")? = u64::try_from(dim)
            .map_err(|_| Failure(LbStatus::Capacity, format!("dimension {dim} does not fit in 64 bits")))?;
        Ok(())
    })
}

/// Builds the exact simulator for `n_wells` wells. `dimension_cap` of zero
/// selects the default cap.
///
/// # Safety
/// `out` must be null or point to writable memory. The handle written there
/// must be released with [`lb_simulator_free`].
#[no_mangle]
pub unsafe extern "C" fn lb_simulator_new(
    n_wells: usize,
    chi: f64,
    postselect_mode: u32,
    dimension_cap: usize,
    out: *mut *mut LbSimulator,
) -> LbStatus {
    guard(|| {
        let slot = dest(out, "out")?;
        *slot = ptr::null_mut();
        let cap = if dimension_cap == 0 {
            lattice_bell::fock::DEFAULT_DIMENSION_CAP
        } else {
            dimension_cap
        };
        let inner = FullSimulation::build(n_wells, InteractionStrength::new(chi)?, postselection(postselect_mode)?, cap)?;
        *slot = Box::into_raw(Box::new(LbSimulator { inner }));
        Ok(())
    })
}

/// Releases a simulator. Null is accepted.
///
/// # Safety
/// `sim` must be null or a handle from [`lb_simulator_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lb_simulator_free(sim: *mut LbSimulator) {
    if !sim.is_null() {
        // SAFETY: guaranteed by the caller.
        drop(unsafe { Box::from_raw(sim) });
    }
}

fn handle<'a>(sim: *const LbSimulator) -> Result<&'a LbSimulator, Failure> {
    // SAFETY: non-null handles come from `lb_simulator_new`.
    unsafe { sim.as_ref() }.ok_or_else(|| Failure(LbStatus::NullPointer, "simulator is null".into()))
}

/// Number of basis states of the simulator.
///
/// # Safety
/// `sim` must be a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn lb_simulator_dimension(sim: *const LbSimulator, out: *mut usize) -> LbStatus {
    guard(|| {
        *dest(out, "out")? = handle(sim)?.inner.simulator().basis().len();
        Ok(())
    })
}

/// Probability of one atom per well after the first splitter; 1 when the
/// simulator does not post-select.
///
/// # Safety
/// `sim` must be a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn lb_simulator_postselect_probability(sim: *const LbSimulator, out: *mut f64) -> LbStatus {
    guard(|| {
        *dest(out, "out")? = handle(sim)?.inner.simulator().postselect_probability();
        Ok(())
    })
}

/// Parity correlator for `n_phases` phases, one per well.
///
/// # Safety
/// `sim` must be a live handle, `phases` must hold `n_phases` values and
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn lb_simulator_parity_correlator(
    sim: *const LbSimulator,
    phases: *const f64,
    n_phases: usize,
    out: *mut f64,
) -> LbStatus {
    guard(|| {
        let sim = handle(sim)?;
        let phases = input(phases, n_phases, "phases")?;
        if phases.len() != sim.inner.n_wells() {
            return Err(invalid(format!("{} phases for {} wells", phases.len(), sim.inner.n_wells())));
        }
        *dest(out, "out")? = sim.inner.correlator(phases);
        Ok(())
    })
}

/// Final state amplitudes in basis order, split into real and imaginary
/// parts. `capacity` is the length of each output array; the dimension is
/// written to `written` even when the buffers are too small.
///
/// # Safety
/// `sim` must be a live handle, `phases` must hold `n_phases` values,
/// `re` and `im` must each hold `capacity` writable values and `written`
/// must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn lb_simulator_final_state(
    sim: *const LbSimulator,
    phases: *const f64,
    n_phases: usize,
    re: *mut f64,
    im: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> LbStatus {
    guard(|| {
        let sim = handle(sim)?;
        let phases = input(phases, n_phases, "phases")?;
        let state = sim.inner.simulator().final_state(phases)?;
        let dim = state.amplitudes().len();
        if !written.is_null() {
            *dest(written, "written")? = dim;
        }
        if capacity < dim {
            return Err(Failure(
                LbStatus::BufferTooSmall,
                format!("buffers hold {capacity} values, state has {dim}"),
            ));
        }
        let re = output(re, dim, "re")?;
        let im = output(im, dim, "im")?;
        for (i, a) in state.amplitudes().iter().enumerate() {
            re[i] = a.re;
            im[i] = a.im;
        }
        Ok(())
    })
}

/// `cos(sum phases)`, the post-selected correlator without interactions.
///
/// # Safety
/// `phases` must hold `n_phases` values and `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn lb_closed_form_correlator(phases: *const f64, n_phases: usize, out: *mut f64) -> LbStatus {
    guard(|| {
        let phases = input(phases, n_phases, "phases")?;
        *dest(out, "out")? = lattice_bell::bell::closed_form_correlator(
            &lattice_bell::protocol::PhaseVector::new(phases.to_vec()),
        );
        Ok(())
    })
}

/// Bell expression coefficients for `n_parties >= 2`.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn lb_bell_coefficients(n_parties: usize, out: *mut LbBellCoefficients) -> LbStatus {
    guard(|| {
        let c = TuraCoefficients::for_parties(n_parties)?;
        *dest(out, "out")? = LbBellCoefficients {
            alpha: c.alpha,
            beta: c.beta,
            gamma: c.gamma,
            delta: c.delta,
            epsilon: c.epsilon,
            classical_bound: c.classical_bound,
        };
        Ok(())
    })
}

/// Bell value of the settings `(theta, phi)`. Uses the simulator when `sim`
/// is non-null and the closed form otherwise.
///
/// # Safety
/// `sim` must be null or a live handle, `theta` and `phi` must each hold
/// `n_wells` values and `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn lb_bell_value(
    sim: *const LbSimulator,
    theta: *const f64,
    phi: *const f64,
    n_wells: usize,
    out: *mut f64,
) -> LbStatus {
    guard(|| {
        let eval = evaluator(sim, n_wells)?;
        *dest(out, "out")? = evaluate(eval.as_ref(), &settings(theta, phi, n_wells)?)?;
        Ok(())
    })
}

/// CHSH combination for two wells. Uses the simulator when `sim` is
/// non-null and the closed form otherwise.
///
/// # Safety
/// `sim` must be null or a live two-well handle and `out` must be null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn lb_chsh_value(
    sim: *const LbSimulator,
    theta1: f64,
    theta2: f64,
    phi1: f64,
    phi2: f64,
    out: *mut f64,
) -> LbStatus {
    guard(|| {
        let eval = evaluator(sim, 2)?;
        *dest(out, "out")? = chsh_value(theta1, theta2, phi1, phi2, eval.as_ref())?;
        Ok(())
    })
}

/// Minimum of the Bell expression over deterministic local strategies.
/// Limited to small party counts.
///
/// # Safety
/// `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn lb_lhv_minimum(n_parties: usize, out: *mut f64) -> LbStatus {
    guard(|| {
        *dest(out, "out")? = lhv_minimum(&TuraCoefficients::for_parties(n_parties)?)?.minimum;
        Ok(())
    })
}

/// Minimizes the Bell value over per-well phases with the default genetic
/// algorithm settings and the given seed.
///
/// # Safety
/// `sim` must be null or a live handle, `theta_out` and `phi_out` must each
/// hold `n_wells` writable values and `value_out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn lb_optimize_free_phases(
    sim: *const LbSimulator,
    n_wells: usize,
    seed: u64,
    theta_out: *mut f64,
    phi_out: *mut f64,
    value_out: *mut f64,
) -> LbStatus {
    guard(|| {
        let eval = evaluator(sim, n_wells)?;
        let config = GaConfig {
            seed,
            ..GaConfig::default()
        };
        let best = optimize_free_phases(n_wells, &config, eval.as_ref())?;
        output(theta_out, n_wells, "theta_out")?.copy_from_slice(&best.settings.theta);
        output(phi_out, n_wells, "phi_out")?.copy_from_slice(&best.settings.phi);
        *dest(value_out, "value_out")? = best.bell_value;
        Ok(())
    })
}

/// Minimizes the Bell value over one `(theta, phi)` pair shared by all
/// wells: a `grid_steps` x `grid_steps` scan followed by local refinement.
///
/// # Safety
/// `sim` must be null or a live handle and the out pointers must be null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn lb_optimize_global_phases(
    sim: *const LbSimulator,
    n_wells: usize,
    grid_steps: usize,
    theta_out: *mut f64,
    phi_out: *mut f64,
    value_out: *mut f64,
) -> LbStatus {
    guard(|| {
        let eval = evaluator(sim, n_wells)?;
        let best = optimize_global_phases(n_wells, &SweepGrid::square(grid_steps), eval.as_ref())?;
        *dest(theta_out, "theta_out")? = best.settings.theta[0];
        *dest(phi_out, "phi_out")? = best.settings.phi[0];
        *dest(value_out, "value_out")? = best.bell_value;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn message() -> String {
        unsafe { CStr::from_ptr(lb_last_error()) }.to_string_lossy().into_owned()
    }

    #[test]
    fn panics_become_internal_errors() {
        let status = guard(|| panic!("boom"));
        assert_eq!(status, LbStatus::Internal);
        assert_eq!(message(), "internal error: boom");
    }

    #[test]
    fn core_errors_map_to_status_codes() {
        let cases = [
            (Error::Capacity { dimension: 10, cap: 1 }, LbStatus::Capacity),
            (Error::EnumerationLimit { parties: 9, limit: 7 }, LbStatus::Capacity),
            (Error::DegenerateProjection, LbStatus::Numerical),
            (Error::UndefinedRatio, LbStatus::Numerical),
            (Error::Argument("x".into()), LbStatus::InvalidArgument),
        ];
        for (error, expected) in cases {
            let text = error.to_string();
            assert_eq!(guard(|| Err(error.into())), expected);
            assert_eq!(message(), text);
        }
    }

    #[test]
    fn messages_with_nul_bytes_are_kept() {
        assert_eq!(guard(|| Err(invalid("a\0b"))), LbStatus::InvalidArgument);
        assert_eq!(message(), "a b");
    }
}
