//! Pair state and the single-step integrators for the reduction dynamics.
//!
//! The entangled pair lives in the two-dimensional subspace spanned by
//! `|00⟩` and `|11⟩`, which the nonlinear dynamics never leaves, so a state
//! is just the amplitude pair `(α, β)`. With the Hamiltonian switched off
//! the generator reduces to
//!
//! ```text
//! dα/dt = (J⟨σ⟩ + Gξ)(1 − ⟨σ⟩) α
//! dβ/dt = (J⟨σ⟩ + Gξ)(−1 − ⟨σ⟩) β
//! ```
//!
//! for a correlated driving `ξ(t)`, and to a norm-preserving CSL-type
//! unraveling with collapse rate `λ` in the white-noise limit.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{Drive, NoiseSource};

/// Largest norm deviation a caller-supplied amplitude pair may carry.
pub const NORM_TOLERANCE: f64 = 1e-6;

/// `|α|²` within this distance of 0 or 1 counts as a collapsed state.
pub const COLLAPSE_THRESHOLD: f64 = 1e-9;

/// Norm correction above which a deterministic step is considered unstable.
pub const MAX_NORM_CORRECTION: f64 = 1e-3;

/// Euler–Maruyama renormalization is O(λ dt) and random, so the white-noise
/// stepper only fails on gross blow-ups.
pub const MAX_NORM_CORRECTION_WHITE: f64 = 0.1;

/// Normalized amplitudes `(α, β)` over the basis `{|00⟩, |11⟩}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairState {
    alpha: Complex64,
    beta: Complex64,
}

impl PairState {
    /// Builds a state from amplitudes whose norm is within [`NORM_TOLERANCE`]
    /// of one. The stored pair is renormalized exactly.
    pub fn new(alpha: Complex64, beta: Complex64) -> Result<Self> {
        if !(alpha.re.is_finite() && alpha.im.is_finite() && beta.re.is_finite() && beta.im.is_finite()) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidState(format!(
                "norm {norm} deviates from 1 by more than {NORM_TOLERANCE:e}"
            )));
        }
        Ok(Self::from_unnormalized(alpha, beta).0)
    }

    /// Real, non-negative amplitudes with `|α|² = weight`.
    pub fn from_weight(weight: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::InvalidState(format!("|α|² = {weight} outside [0, 1]")));
        }
        Ok(Self {
            alpha: Complex64::new(weight.sqrt(), 0.0),
            beta: Complex64::new((1.0 - weight).sqrt(), 0.0),
        })
    }

    pub fn basis_00() -> Self {
        Self {
            alpha: Complex64::new(1.0, 0.0),
            beta: Complex64::new(0.0, 0.0),
        }
    }

    pub fn basis_11() -> Self {
        Self {
            alpha: Complex64::new(0.0, 0.0),
            beta: Complex64::new(1.0, 0.0),
        }
    }

    /// Renormalizes and reports `|‖ψ‖ − 1|`, the size of the correction.
    fn from_unnormalized(alpha: Complex64, beta: Complex64) -> (Self, f64) {
        let norm = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
        let inv = 1.0 / norm;
        (
            Self {
                alpha: alpha * inv,
                beta: beta * inv,
            },
            (norm - 1.0).abs(),
        )
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    /// `|α|²`, the weight of `|00⟩`.
    pub fn weight(&self) -> f64 {
        self.alpha.norm_sqr()
    }

    /// `αβ*`, this state's contribution to the ensemble coherence `⟨00|ρ|11⟩`.
    pub fn coherence(&self) -> Complex64 {
        self.alpha * self.beta.conj()
    }

    /// Pauli-z expectation `|α|² − |β|²`.
    pub fn sigma_expect(&self) -> f64 {
        self.alpha.norm_sqr() - self.beta.norm_sqr()
    }

    /// The basis state this one has collapsed onto, if any.
    pub fn collapsed(&self) -> Option<Outcome> {
        let w = self.weight();
        if w >= 1.0 - COLLAPSE_THRESHOLD {
            Some(Outcome::Ket00)
        } else if w <= COLLAPSE_THRESHOLD {
            Some(Outcome::Ket11)
        } else {
            None
        }
    }

    /// Projects onto the basis state for `outcome`, keeping the surviving phase.
    fn snapped(&self, outcome: Outcome) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        let unit = |z: Complex64| {
            let r = z.norm();
            if r > 0.0 {
                z / r
            } else {
                Complex64::new(1.0, 0.0)
            }
        };
        match outcome {
            Outcome::Ket00 => Self {
                alpha: unit(self.alpha),
                beta: zero,
            },
            Outcome::Ket11 => Self {
                alpha: zero,
                beta: unit(self.beta),
            },
            Outcome::Unresolved => *self,
        }
    }
}

/// Pauli-z expectation of a pair state.
pub fn sigma_expect(state: &PairState) -> f64 {
    state.sigma_expect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Nonlinear coupling `J` (1/time).
    pub j: f64,
    /// Stochastic coupling `G` (1/time).
    pub g: f64,
    /// White-noise collapse rate `λ` (1/time).
    pub lambda: f64,
    pub dt: f64,
    /// Always true: only `Ĥ = 0` is supported.
    pub hamiltonian_off: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::with_coupling(1.0)
    }
}

impl ModelParams {
    /// `J = G = λ = coupling`, `dt = 10⁻³/J`.
    pub fn with_coupling(coupling: f64) -> Self {
        Self {
            j: coupling,
            g: coupling,
            lambda: coupling,
            dt: 1e-3 / coupling,
            hamiltonian_off: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.j > 0.0 && self.j.is_finite()) {
            return Err(Error::param("j", format!("must be positive, got {}", self.j)));
        }
        if !(self.g >= 0.0 && self.g.is_finite()) {
            return Err(Error::param("g", format!("must be non-negative, got {}", self.g)));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::param(
                "lambda",
                format!("must be non-negative, got {}", self.lambda),
            ));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", format!("must be positive, got {}", self.dt)));
        }
        if !self.hamiltonian_off {
            return Err(Error::param(
                "hamiltonian_off",
                "a non-zero Hamiltonian is not supported",
            ));
        }
        Ok(())
    }
}

#[inline]
fn drift(alpha: Complex64, beta: Complex64, xi: f64, params: &ModelParams) -> (Complex64, Complex64) {
    let wa = alpha.norm_sqr();
    let wb = beta.norm_sqr();
    // Expectation taken on the normalized state keeps the flow exactly norm-preserving.
    let s = (wa - wb) / (wa + wb);
    let c = params.j * s + params.g * xi;
    (alpha * (c * (1.0 - s)), beta * (c * (-1.0 - s)))
}

/// One classical RK4 step at fixed `ξ`, followed by renormalization.
/// Returns the new state and the norm correction that was applied.
pub fn step_deterministic_checked(state: &PairState, xi: f64, params: &ModelParams) -> (PairState, f64) {
    let h = params.dt;
    let (a0, b0) = (state.alpha, state.beta);
    let (ka1, kb1) = drift(a0, b0, xi, params);
    let (ka2, kb2) = drift(a0 + ka1 * (0.5 * h), b0 + kb1 * (0.5 * h), xi, params);
    let (ka3, kb3) = drift(a0 + ka2 * (0.5 * h), b0 + kb2 * (0.5 * h), xi, params);
    let (ka4, kb4) = drift(a0 + ka3 * h, b0 + kb3 * h, xi, params);
    let a = a0 + (ka1 + ka2 * 2.0 + ka3 * 2.0 + ka4) * (h / 6.0);
    let b = b0 + (kb1 + kb2 * 2.0 + kb3 * 2.0 + kb4) * (h / 6.0);
    PairState::from_unnormalized(a, b)
}

/// Advances the state by one step of length `params.dt` with `ξ` held fixed.
pub fn step_deterministic(state: &PairState, xi: f64, params: &ModelParams) -> PairState {
    step_deterministic_checked(state, xi, params).0
}

/// One Euler–Maruyama step of
/// `dψ = [√λ(σ̂ − ⟨σ̂⟩)dW − (λ/2)(σ̂ − ⟨σ̂⟩)² dt]ψ`, then renormalization.
pub fn step_white_checked(state: &PairState, dw: f64, params: &ModelParams) -> (PairState, f64) {
    let s = state.sigma_expect();
    let sqrt_lambda = params.lambda.sqrt();
    let half_lambda_dt = 0.5 * params.lambda * params.dt;
    let up = 1.0 - s;
    let down = -1.0 - s;
    let fa = 1.0 + sqrt_lambda * up * dw - half_lambda_dt * up * up;
    let fb = 1.0 + sqrt_lambda * down * dw - half_lambda_dt * down * down;
    PairState::from_unnormalized(state.alpha * fa, state.beta * fb)
}

/// Advances the state by one white-noise step driven by the Wiener increment `dw`.
pub fn step_white(state: &PairState, dw: f64, params: &ModelParams) -> PairState {
    step_white_checked(state, dw, params).0
}

/// Terminal classification of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Ket00,
    Ket11,
    Unresolved,
}

/// Uniform integration grid with snapshots every `steps_per_record` steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    record_every: f64,
    steps_per_record: usize,
    intervals: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, record_every: f64, t_max: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        if !(record_every >= dt && record_every.is_finite()) {
            return Err(Error::param(
                "record_every",
                format!("must be at least dt = {dt}, got {record_every}"),
            ));
        }
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::param("t_max", format!("must be positive, got {t_max}")));
        }
        let steps = (record_every / dt).round();
        if ((steps * dt - record_every) / record_every).abs() > 1e-6 {
            return Err(Error::param(
                "record_every",
                format!("{record_every} is not a whole number of steps of {dt}"),
            ));
        }
        let intervals = (t_max / record_every).round();
        if intervals < 1.0 || ((intervals * record_every - t_max) / t_max).abs() > 1e-6 {
            return Err(Error::param(
                "t_max",
                format!("{t_max} is not a whole number of recording intervals of {record_every}"),
            ));
        }
        Ok(Self {
            dt,
            record_every,
            steps_per_record: steps as usize,
            intervals: intervals as usize,
        })
    }

    /// Number of snapshots, including `t = 0`.
    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps_per_record(&self) -> usize {
        self.steps_per_record
    }

    pub fn total_steps(&self) -> usize {
        self.steps_per_record * self.intervals
    }

    pub fn time(&self, record: usize) -> f64 {
        record as f64 * self.record_every
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }
}

/// Integrates one trajectory over `grid`, invoking `record` at every snapshot.
///
/// Collapsed states are snapped onto their basis state and held there.
pub(crate) fn integrate<N, F>(
    initial: PairState,
    noise: &mut N,
    params: &ModelParams,
    grid: &TimeGrid,
    mut record: F,
) -> Result<Outcome>
where
    N: NoiseSource + ?Sized,
    F: FnMut(usize, &PairState),
{
    let dt = grid.dt;
    let mut state = initial;
    let mut outcome = state.collapsed();
    if let Some(o) = outcome {
        state = state.snapped(o);
    }
    record(0, &state);

    let mut step = 0usize;
    for k in 1..grid.len() {
        if outcome.is_none() {
            for _ in 0..grid.steps_per_record {
                let t = step as f64 * dt;
                step += 1;
                let (next, correction, limit) = match noise.next_drive(t, dt) {
                    Drive::Xi(xi) => {
                        let (s, c) = step_deterministic_checked(&state, xi, params);
                        (s, c, MAX_NORM_CORRECTION)
                    }
                    Drive::Wiener(dw) => {
                        let (s, c) = step_white_checked(&state, dw, params);
                        (s, c, MAX_NORM_CORRECTION_WHITE)
                    }
                };
                if correction.is_nan() || correction > limit {
                    return Err(Error::Integration {
                        step,
                        time: t,
                        correction,
                        limit,
                    });
                }
                state = next;
                if let Some(o) = state.collapsed() {
                    state = state.snapped(o);
                    outcome = Some(o);
                    break;
                }
            }
        }
        record(k, &state);
    }
    Ok(outcome.unwrap_or(Outcome::Unresolved))
}

/// A single integrated trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Snapshot times in units of `1/J`.
    pub times_j: Vec<f64>,
    pub states: Vec<PairState>,
    /// Every noise drive consumed, in step order; empty once collapsed.
    pub noise: Vec<Drive>,
    pub outcome: Outcome,
}

impl Trajectory {
    pub fn weights(&self) -> Vec<f64> {
        self.states.iter().map(PairState::weight).collect()
    }
}

struct Recording<'a, N: ?Sized> {
    inner: &'a mut N,
    drives: Vec<Drive>,
}

impl<N: NoiseSource + ?Sized> NoiseSource for Recording<'_, N> {
    fn next_drive(&mut self, t: f64, dt: f64) -> Drive {
        let d = self.inner.next_drive(t, dt);
        self.drives.push(d);
        d
    }
}

/// Integrates `initial` to `t_max`, keeping a snapshot every `record_every`.
pub fn simulate_trajectory<N: NoiseSource + ?Sized>(
    initial: PairState,
    noise: &mut N,
    params: &ModelParams,
    t_max: f64,
    record_every: f64,
) -> Result<Trajectory> {
    params.validate()?;
    let grid = TimeGrid::new(params.dt, record_every, t_max)?;
    let mut states = Vec::with_capacity(grid.len());
    let mut recording = Recording {
        inner: noise,
        drives: Vec::new(),
    };
    let outcome = integrate(initial, &mut recording, params, &grid, |_, s| states.push(*s))?;
    Ok(Trajectory {
        times_j: grid.times().into_iter().map(|t| t * params.j).collect(),
        states,
        noise: recording.drives,
        outcome,
    })
}
