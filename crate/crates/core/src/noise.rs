//! Noise realizations in the three correlation regimes.
//!
//! Frozen noise is one draw per trajectory, the Ornstein–Uhlenbeck regime
//! integrates `dξ = −ξ dt/τ + g(ξ) dW`, and white noise is handed to the
//! stepper as raw Wiener increments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-trajectory random stream.
pub type TrajectoryRng = ChaCha8Rng;

/// Independent stream for trajectory `index` under `master_seed`.
///
/// The ChaCha key comes from the master seed and the trajectory index
/// selects the stream, so every trajectory's draws are fixed by the pair
/// alone and do not depend on scheduling.
pub fn trajectory_rng(master_seed: u64, index: u64) -> TrajectoryRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FrozenDist {
    /// Uniform on `[−1, 1]`.
    #[default]
    UniformSym,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    /// `τ → ∞`: one value per trajectory.
    Frozen {
        #[serde(default)]
        dist: FrozenDist,
        /// Place trajectory `i` of `N` in the `i`-th of `N` equal strata.
        #[serde(default)]
        stratified: bool,
    },
    /// Ornstein–Uhlenbeck with constant diffusion `g0`.
    Ou { tau: f64, g0: f64 },
    /// `τ → 0`.
    White,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec::Frozen {
            dist: FrozenDist::UniformSym,
            stratified: false,
        }
    }
}

impl NoiseSpec {
    pub fn frozen() -> Self {
        Self::default()
    }

    pub fn label(&self) -> &'static str {
        match self {
            NoiseSpec::Frozen { .. } => "frozen",
            NoiseSpec::Ou { .. } => "ou",
            NoiseSpec::White => "white",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let NoiseSpec::Ou { tau, g0 } = *self {
            if !(tau > 0.0 && tau.is_finite()) {
                return Err(Error::param("tau", format!("must be positive, got {tau}")));
            }
            if !(g0 >= 0.0 && g0.is_finite()) {
                return Err(Error::param("g0", format!("must be non-negative, got {g0}")));
            }
        }
        Ok(())
    }
}

/// What drives one integration step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Drive {
    /// Correlated noise value held over the step.
    Xi(f64),
    /// Wiener increment with variance `dt`.
    Wiener(f64),
}

pub trait NoiseSource {
    /// Drive for the step `[t, t + dt)`.
    fn next_drive(&mut self, t: f64, dt: f64) -> Drive;
}

/// Draws `ξ ~ U[−1, 1]`.
pub fn sample_frozen<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.gen_range(-1.0..=1.0)
}

/// Frozen draw from stratum `index` of `count`.
pub fn sample_frozen_stratified<R: Rng + ?Sized>(rng: &mut R, index: u64, count: u64) -> f64 {
    let u: f64 = rng.gen();
    -1.0 + 2.0 * (index as f64 + u) / count as f64
}

/// Euler–Maruyama step of the OU process with diffusion `g(ξ)`.
pub fn ou_step_with<F: Fn(f64) -> f64>(xi: f64, tau: f64, g: F, dw: f64, dt: f64) -> f64 {
    xi - xi / tau * dt + g(xi) * dw
}

/// `ξ − (ξ/τ)dt + g0·dW` for an OU spec.
pub fn ou_step(xi: f64, spec: &NoiseSpec, dw: f64, dt: f64) -> Result<f64> {
    match *spec {
        NoiseSpec::Ou { tau, g0 } => Ok(ou_step_with(xi, tau, |_| g0, dw, dt)),
        other => Err(Error::param(
            "noise",
            format!("ou_step needs an OU spec, got {}", other.label()),
        )),
    }
}

/// Stationary variance `g0²τ/2` of the constant-diffusion OU process.
pub fn ou_stationary_variance(tau: f64, g0: f64) -> f64 {
    0.5 * g0 * g0 * tau
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrozenNoise {
    xi: f64,
}

impl FrozenNoise {
    pub fn new(xi: f64) -> Self {
        Self { xi }
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }
}

impl NoiseSource for FrozenNoise {
    fn next_drive(&mut self, _t: f64, _dt: f64) -> Drive {
        Drive::Xi(self.xi)
    }
}

/// OU path integrated alongside the state; `ξ` is held over each step.
#[derive(Debug, Clone)]
pub struct OuNoise<R> {
    xi: f64,
    tau: f64,
    g0: f64,
    rng: R,
}

impl<R: Rng> OuNoise<R> {
    pub fn new(xi0: f64, tau: f64, g0: f64, rng: R) -> Self {
        Self { xi: xi0, tau, g0, rng }
    }

    /// Starts from a draw of the stationary law `N(0, g0²τ/2)`.
    pub fn stationary(tau: f64, g0: f64, mut rng: R) -> Self {
        let sd = ou_stationary_variance(tau, g0).sqrt();
        let xi0 = Normal::new(0.0, sd).map(|n| n.sample(&mut rng)).unwrap_or(0.0);
        Self::new(xi0, tau, g0, rng)
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }
}

impl<R: Rng> NoiseSource for OuNoise<R> {
    fn next_drive(&mut self, _t: f64, dt: f64) -> Drive {
        let current = self.xi;
        let z: f64 = StandardNormal.sample(&mut self.rng);
        self.xi = ou_step_with(current, self.tau, |_| self.g0, z * dt.sqrt(), dt);
        Drive::Xi(current)
    }
}

#[derive(Debug, Clone)]
pub struct WhiteNoise<R> {
    rng: R,
}

impl<R: Rng> WhiteNoise<R> {
    pub fn new(rng: R) -> Self {
        Self { rng }
    }
}

impl<R: Rng> NoiseSource for WhiteNoise<R> {
    fn next_drive(&mut self, _t: f64, dt: f64) -> Drive {
        let z: f64 = StandardNormal.sample(&mut self.rng);
        Drive::Wiener(z * dt.sqrt())
    }
}

/// Any `ξ(t)` given as a function of time.
pub struct XiFn<F>(pub F);

impl<F: FnMut(f64) -> f64> NoiseSource for XiFn<F> {
    fn next_drive(&mut self, t: f64, _dt: f64) -> Drive {
        Drive::Xi((self.0)(t))
    }
}

/// Noise source for trajectory `index` of an ensemble.
pub enum TrajectoryNoise {
    Frozen(FrozenNoise),
    Ou(OuNoise<TrajectoryRng>),
    White(WhiteNoise<TrajectoryRng>),
}

impl TrajectoryNoise {
    pub fn new(spec: &NoiseSpec, master_seed: u64, index: u64, count: u64) -> Self {
        let mut rng = trajectory_rng(master_seed, index);
        match *spec {
            NoiseSpec::Frozen { stratified, .. } => {
                let xi = if stratified {
                    sample_frozen_stratified(&mut rng, index, count)
                } else {
                    sample_frozen(&mut rng)
                };
                TrajectoryNoise::Frozen(FrozenNoise::new(xi))
            }
            NoiseSpec::Ou { tau, g0 } => TrajectoryNoise::Ou(OuNoise::stationary(tau, g0, rng)),
            NoiseSpec::White => TrajectoryNoise::White(WhiteNoise::new(rng)),
        }
    }
}

impl NoiseSource for TrajectoryNoise {
    #[inline]
    fn next_drive(&mut self, t: f64, dt: f64) -> Drive {
        match self {
            TrajectoryNoise::Frozen(n) => n.next_drive(t, dt),
            TrajectoryNoise::Ou(n) => n.next_drive(t, dt),
            TrajectoryNoise::White(n) => n.next_drive(t, dt),
        }
    }
}

/// A materialized sequence of per-step drives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisePath {
    pub values: Vec<Drive>,
    pub seed: u64,
    pub index: u64,
}

impl NoisePath {
    /// The first `steps` drives trajectory `index` would see under `spec`.
    pub fn generate(spec: &NoiseSpec, seed: u64, index: u64, count: u64, steps: usize, dt: f64) -> Self {
        let mut source = TrajectoryNoise::new(spec, seed, index, count);
        let values = (0..steps).map(|k| source.next_drive(k as f64 * dt, dt)).collect();
        Self { values, seed, index }
    }

    pub fn replay(&self) -> PathReplay<'_> {
        PathReplay { path: self, pos: 0 }
    }
}

pub struct PathReplay<'a> {
    path: &'a NoisePath,
    pos: usize,
}

impl NoiseSource for PathReplay<'_> {
    /// Panics once the path is exhausted.
    fn next_drive(&mut self, _t: f64, _dt: f64) -> Drive {
        let d = self.path.values[self.pos];
        self.pos += 1;
        d
    }
}
