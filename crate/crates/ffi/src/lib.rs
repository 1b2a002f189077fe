//! C ABI for the collapse-lab simulator.
//!
//! Configurations and results are opaque handles created and destroyed by
//! this library. Fallible calls return a [`ClStatus`]; on failure the
//! message is available from [`cl_last_error_message`] on the same thread.
//! No call unwinds into the caller: a Rust panic is reported as
//! `CL_STATUS_PANIC`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use collapse_lab::analysis::EntropyRecord;
use collapse_lab::ensemble::{run_ensemble_with_workers, DensityMatrix2, EnsembleConfig, MomentSeries};
use collapse_lab::noise::{FrozenDist, NoiseSpec};
use collapse_lab::{binary_entropy, entanglement_entropy, interrupt_entropy, von_neumann_entropy, Error, PairState};
use num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClStatus {
    Ok = 0,
    /// A required pointer was null or an index was out of range.
    InvalidArgument = 1,
    InvalidState = 2,
    InvalidParameter = 3,
    Integration = 4,
    InvalidDensityMatrix = 5,
    OffGrid = 6,
    Panic = 99,
}

impl From<&Error> for ClStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidState(_) => ClStatus::InvalidState,
            Error::InvalidParameter { .. } => ClStatus::InvalidParameter,
            Error::Integration { .. } => ClStatus::Integration,
            Error::Trajectory { source, .. } | Error::AtRecord { source, .. } => ClStatus::from(&**source),
            Error::InvalidDensityMatrix(_) => ClStatus::InvalidDensityMatrix,
            Error::OffGrid(_) => ClStatus::OffGrid,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: ClStatus, message: &str) -> ClStatus {
    set_last_error(message);
    status
}

fn guard(f: impl FnOnce() -> Result<(), ClStatus>) -> ClStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            ClStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(ClStatus::Panic, &msg)
        }
    }
}

fn check(result: collapse_lab::Result<()>) -> Result<(), ClStatus> {
    result.map_err(|e| fail(ClStatus::from(&e), &e.to_string()))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, ClStatus> {
    p.as_mut()
        .ok_or_else(|| fail(ClStatus::InvalidArgument, &format!("`{name}` is null")))
}

unsafe fn get<'a, T>(p: *const T, name: &str) -> Result<&'a T, ClStatus> {
    p.as_ref()
        .ok_or_else(|| fail(ClStatus::InvalidArgument, &format!("`{name}` is null")))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn cl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a NUL-terminated string with static lifetime.
#[no_mangle]
pub extern "C" fn cl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Opaque ensemble configuration. Setters store values unchecked;
/// validation happens in [`cl_run_ensemble`].
pub struct ClEnsembleConfig(EnsembleConfig);

/// Opaque per-record ensemble moments.
pub struct ClMomentSeries(MomentSeries);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClDensityMatrix {
    pub rho00: f64,
    pub rho11: f64,
    pub rho01_re: f64,
    pub rho01_im: f64,
}

impl From<DensityMatrix2> for ClDensityMatrix {
    fn from(d: DensityMatrix2) -> Self {
        Self {
            rho00: d.rho00,
            rho11: d.rho11,
            rho01_re: d.rho01.re,
            rho01_im: d.rho01.im,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ClEntropyRecord {
    /// Time in units of 1/J.
    pub t: f64,
    pub s_td: f64,
    pub s_ent_avg: f64,
    pub s_sum: f64,
    pub s_td_int: f64,
    pub weight: f64,
    pub coherence_re: f64,
    pub coherence_im: f64,
}

impl From<EntropyRecord> for ClEntropyRecord {
    fn from(r: EntropyRecord) -> Self {
        Self {
            t: r.t,
            s_td: r.s_td,
            s_ent_avg: r.s_ent_avg,
            s_sum: r.s_sum,
            s_td_int: r.s_td_int,
            weight: r.weight,
            coherence_re: r.coherence.re,
            coherence_im: r.coherence.im,
        }
    }
}

/// New configuration with the library defaults. Free with [`cl_config_free`].
#[no_mangle]
pub extern "C" fn cl_config_new() -> *mut ClEnsembleConfig {
    Box::into_raw(Box::new(ClEnsembleConfig(EnsembleConfig::default())))
}

#[no_mangle]
pub unsafe extern "C" fn cl_config_free(config: *mut ClEnsembleConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

#[no_mangle]
pub unsafe extern "C" fn cl_config_set_n_traj(config: *mut ClEnsembleConfig, n_traj: usize) -> ClStatus {
    guard(|| {
        out(config, "config")?.0.n_traj = n_traj;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cl_config_set_initial_weight(config: *mut ClEnsembleConfig, alpha0_sq: f64) -> ClStatus {
    guard(|| {
        out(config, "config")?.0.initial_alpha2 = alpha0_sq;
        Ok(())
    })
}

/// `j`, `g`, `lambda` and the step `dt`, all in absolute units.
#[no_mangle]
pub unsafe extern "C" fn cl_config_set_model(
    config: *mut ClEnsembleConfig,
    j: f64,
    g: f64,
    lambda: f64,
    dt: f64,
) -> ClStatus {
    guard(|| {
        let m = &mut out(config, "config")?.0.model;
        m.j = j;
        m.g = g;
        m.lambda = lambda;
        m.dt = dt;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cl_config_set_time_grid(
    config: *mut ClEnsembleConfig,
    t_max: f64,
    record_every: f64,
) -> ClStatus {
    guard(|| {
        let c = &mut out(config, "config")?.0;
        c.t_max = t_max;
        c.record_every = record_every;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cl_config_set_seed(config: *mut ClEnsembleConfig, seed: u64) -> ClStatus {
    guard(|| {
        out(config, "config")?.0.master_seed = seed;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cl_config_set_noise_frozen(config: *mut ClEnsembleConfig, stratified: bool) -> ClStatus {
    guard(|| {
        out(config, "config")?.0.noise = NoiseSpec::Frozen {
            dist: FrozenDist::UniformSym,
            stratified,
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cl_config_set_noise_ou(config: *mut ClEnsembleConfig, tau: f64, g0: f64) -> ClStatus {
    guard(|| {
        out(config, "config")?.0.noise = NoiseSpec::Ou { tau, g0 };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cl_config_set_noise_white(config: *mut ClEnsembleConfig) -> ClStatus {
    guard(|| {
        out(config, "config")?.0.noise = NoiseSpec::White;
        Ok(())
    })
}

/// Runs the ensemble on `workers` threads (0 picks the default) and stores
/// a new handle in `*series`, to be freed with [`cl_series_free`].
#[no_mangle]
pub unsafe extern "C" fn cl_run_ensemble(
    config: *const ClEnsembleConfig,
    workers: usize,
    series: *mut *mut ClMomentSeries,
) -> ClStatus {
    guard(|| {
        let slot = out(series, "series")?;
        *slot = ptr::null_mut();
        let config = get(config, "config")?;
        let workers = if workers == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            workers
        };
        let result =
            run_ensemble_with_workers(&config.0, workers).map_err(|e| fail(ClStatus::from(&e), &e.to_string()))?;
        *slot = Box::into_raw(Box::new(ClMomentSeries(result)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn cl_series_free(series: *mut ClMomentSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Number of recorded times; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn cl_series_len(series: *const ClMomentSeries) -> usize {
    series.as_ref().map_or(0, |s| s.0.len())
}

unsafe fn record<'a>(series: *const ClMomentSeries, index: usize) -> Result<&'a MomentSeries, ClStatus> {
    let s = &get(series, "series")?.0;
    if index >= s.len() {
        return Err(fail(
            ClStatus::InvalidArgument,
            &format!("record {index} out of range (len {})", s.len()),
        ));
    }
    Ok(s)
}

#[no_mangle]
pub unsafe extern "C" fn cl_series_entropy(
    series: *const ClMomentSeries,
    index: usize,
    record_out: *mut ClEntropyRecord,
) -> ClStatus {
    guard(|| {
        let s = record(series, index)?;
        let dst = out(record_out, "record_out")?;
        let t = s.times_j()[index];
        let r =
            EntropyRecord::from_moments(t, &s.moments(index)).map_err(|e| fail(ClStatus::from(&e), &e.to_string()))?;
        *dst = r.into();
        Ok(())
    })
}

/// Trajectories that ended in |00⟩ and |11⟩ by record `index`.
#[no_mangle]
pub unsafe extern "C" fn cl_series_outcome_counts(
    series: *const ClMomentSeries,
    index: usize,
    n_00: *mut u64,
    n_11: *mut u64,
) -> ClStatus {
    guard(|| {
        let s = record(series, index)?;
        let (a, b) = s.outcome_counts(index);
        *out(n_00, "n_00")? = a;
        *out(n_11, "n_11")? = b;
        Ok(())
    })
}

/// Ensemble density matrix at time `t` (in units of 1/J); `t` must lie on
/// the recorded grid.
#[no_mangle]
pub unsafe extern "C" fn cl_series_density_matrix_at(
    series: *const ClMomentSeries,
    t: f64,
    rho_out: *mut ClDensityMatrix,
) -> ClStatus {
    guard(|| {
        let s = &get(series, "series")?.0;
        let dst = out(rho_out, "rho_out")?;
        let tol = 1e-9 * t.abs().max(1.0);
        let index = s
            .times_j()
            .iter()
            .position(|&x| (x - t).abs() <= tol)
            .ok_or_else(|| fail(ClStatus::OffGrid, &Error::OffGrid(t).to_string()))?;
        let rho = s
            .density_matrix(index)
            .map_err(|e| fail(ClStatus::from(&e), &e.to_string()))?;
        *dst = rho.into();
        Ok(())
    })
}

/// `−p ln p − (1−p) ln(1−p)` in nats; NaN outside [0, 1].
#[no_mangle]
pub extern "C" fn cl_binary_entropy(p: f64) -> f64 {
    if (0.0..=1.0).contains(&p) {
        binary_entropy(p)
    } else {
        f64::NAN
    }
}

#[no_mangle]
pub unsafe extern "C" fn cl_von_neumann_entropy(rho: *const ClDensityMatrix, entropy: *mut f64) -> ClStatus {
    guard(|| {
        let r = get(rho, "rho")?;
        let dst = out(entropy, "entropy")?;
        let rho = DensityMatrix2::new(r.rho00, r.rho11, Complex64::new(r.rho01_re, r.rho01_im));
        let s = rho.and_then(|m| von_neumann_entropy(&m));
        check(s.map(|s| *dst = s))
    })
}

/// Entanglement entropy of `α|00⟩ + β|11⟩`; the amplitudes must be normalized.
#[no_mangle]
pub unsafe extern "C" fn cl_entanglement_entropy(
    alpha_re: f64,
    alpha_im: f64,
    beta_re: f64,
    beta_im: f64,
    entropy: *mut f64,
) -> ClStatus {
    guard(|| {
        let dst = out(entropy, "entropy")?;
        let state = PairState::new(Complex64::new(alpha_re, alpha_im), Complex64::new(beta_re, beta_im));
        check(state.map(|s| *dst = entanglement_entropy(&s)))
    })
}

/// Entropy left after projecting onto the product basis with populations `p`, `q`.
#[no_mangle]
pub unsafe extern "C" fn cl_interrupt_entropy(p: f64, q: f64, entropy: *mut f64) -> ClStatus {
    guard(|| {
        let dst = out(entropy, "entropy")?;
        check(interrupt_entropy((p, q)).map(|s| *dst = s))
    })
}
