//! Independent reference implementations shared by the integration tests
//! and the acceptance harness.
#![allow(dead_code)]

use collapse_lab::dynamics::{step_deterministic, step_white, ModelParams, PairState};
use collapse_lab::ensemble::DensityMatrix2;
use collapse_lab::noise::{trajectory_rng, Drive, NoiseSource, OuNoise};
use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Closed-form solution of `ds/dt = 2J(s + x)(1 − s²)` for `|x| < 1`:
/// `F(s(t)) = F(s0) + 2Jt` with `F` from partial fractions, inverted by
/// bisection (F is increasing on the basin of attraction of s = 1).
pub fn frozen_oracle(s0: f64, x: f64, jt: f64) -> f64 {
    assert!(x.abs() < 1.0 && s0 > -x);
    let f = |s: f64| {
        (s + x).abs().ln() / (1.0 - x * x) - (1.0 - s).ln() / (2.0 * (1.0 + x)) - (1.0 + s).ln() / (2.0 * (1.0 - x))
    };
    let target = f(s0) + 2.0 * jt;
    let (mut lo, mut hi) = (s0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Weight after integrating frozen `xi` from `alpha0_sq` to `t`.
pub fn rk4_weight(alpha0_sq: f64, xi: f64, params: &ModelParams, t: f64) -> f64 {
    let n = (t / params.dt).round() as usize;
    let mut s = PairState::from_weight(alpha0_sq).unwrap();
    for _ in 0..n {
        s = step_deterministic(&s, xi, params);
    }
    s.weight()
}

/// Final weights on one Brownian path at several step counts; `fine` must
/// be a multiple of every entry of `levels`.
pub fn coupled_weights(rng_index: u64, t: f64, fine: usize, levels: &[usize]) -> Vec<f64> {
    let mut rng = trajectory_rng(5, rng_index);
    let dws: Vec<f64> = (0..fine)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * (t / fine as f64).sqrt()
        })
        .collect();
    levels
        .iter()
        .map(|&n| {
            let params = ModelParams {
                dt: t / n as f64,
                ..ModelParams::default()
            };
            let r = fine / n;
            let mut s = PairState::from_weight(0.75).unwrap();
            for k in 0..n {
                s = step_white(&s, dws[k * r..(k + 1) * r].iter().sum::<f64>(), &params);
            }
            s.weight()
        })
        .collect()
}

pub fn oracle_entropy(rho: &DensityMatrix2) -> f64 {
    let m = Matrix2::new(
        Complex64::new(rho.rho00, 0.0),
        rho.rho01,
        rho.rho01.conj(),
        Complex64::new(rho.rho11, 0.0),
    );
    let eig = m.symmetric_eigen();
    eig.eigenvalues
        .iter()
        .map(|&x| {
            let x = x.clamp(0.0, 1.0);
            if x > 0.0 {
                -x * x.ln()
            } else {
                0.0
            }
        })
        .sum()
}

pub fn random_density_matrix(rng: &mut ChaCha8Rng) -> DensityMatrix2 {
    let p: f64 = rng.gen();
    // Mix in near-pure and near-diagonal matrices, where cancellation bites.
    let r: f64 = match rng.gen_range(0..4) {
        0 => 1.0 - rng.gen::<f64>() * 1e-9,
        1 => rng.gen::<f64>() * 1e-6,
        _ => rng.gen(),
    };
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    let c = Complex64::from_polar(r * (p * (1.0 - p)).sqrt(), phase);
    DensityMatrix2::new(p, 1.0 - p, c).unwrap()
}

pub fn ou_path(tau: f64, g0: f64, dt: f64, steps: usize, seed: u64) -> Vec<f64> {
    let mut noise = OuNoise::stationary(tau, g0, trajectory_rng(seed, 0));
    (0..steps)
        .map(|k| match noise.next_drive(k as f64 * dt, dt) {
            Drive::Xi(x) => x,
            Drive::Wiener(_) => unreachable!(),
        })
        .collect()
}
