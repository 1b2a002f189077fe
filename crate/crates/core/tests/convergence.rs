//! Step-size convergence of both steppers against independent references.

mod common;

use collapse_lab::dynamics::ModelParams;
use common::{coupled_weights, frozen_oracle, rk4_weight};

#[test]
fn oracle_solves_its_ode() {
    let (x, s0) = (-0.2, 0.5);
    let h = 1e-6;
    for t in [0.3, 1.0, 2.0] {
        let s = frozen_oracle(s0, x, t);
        let deriv = (frozen_oracle(s0, x, t + h) - frozen_oracle(s0, x, t - h)) / (2.0 * h);
        let rhs = 2.0 * (s + x) * (1.0 - s * s);
        assert!((deriv - rhs).abs() < 1e-6, "t = {t}: {deriv} vs {rhs}");
    }
    assert_eq!(frozen_oracle(s0, x, 0.0), s0);
}

#[test]
fn deterministic_stepper_matches_oracle() {
    for (xi, g) in [(-0.2, 1.0), (0.4, 1.0), (0.3, 0.5)] {
        let params = ModelParams {
            g,
            ..ModelParams::default()
        };
        let s = frozen_oracle(0.5, g * xi, 1.5);
        let want = 0.5 * (1.0 + s);
        let got = rk4_weight(0.75, xi, &params, 1.5);
        assert!((got - want).abs() < 1e-12, "ξ = {xi}: {got} vs {want}");
    }
}

#[test]
fn deterministic_stepper_is_fourth_order() {
    let (xi, t) = (-0.2, 2.0);
    let want = 0.5 * (1.0 + frozen_oracle(0.5, xi, t));
    let errors: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&dt| {
            let params = ModelParams {
                dt,
                ..ModelParams::default()
            };
            (rk4_weight(0.75, xi, &params, t) - want).abs()
        })
        .collect();
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((12.0..20.0).contains(&ratio), "error ratio {ratio}, errors {errors:?}");
    }
}

/// The continuous-time weight is an exact martingale, so `E|α(T)|² − |α(0)|²`
/// is pure discretization bias. Its successive differences
/// `E[p(dt) − p(dt/2)]`, estimated on shared Brownian paths, halve with the
/// step for a weakly first-order scheme.
#[test]
fn white_stepper_is_weakly_first_order() {
    let t = 1.0;
    let m = 1_000_000;
    let levels = [8usize, 16, 32, 64];
    let mut sum = vec![0.0; levels.len()];
    let mut diff = vec![(0.0, 0.0); levels.len() - 1];
    for i in 0..m {
        let p = coupled_weights(i, t, 64, &levels);
        for (acc, x) in sum.iter_mut().zip(&p) {
            *acc += x;
        }
        for (k, d) in diff.iter_mut().enumerate() {
            let x = p[k] - p[k + 1];
            d.0 += x;
            d.1 += x * x;
        }
    }
    let m = m as f64;
    let bias_coarse = sum[0] / m - 0.75;
    assert!(bias_coarse < -0.004, "bias at dt = 1/8 is {bias_coarse}");
    let est: Vec<(f64, f64)> = diff
        .iter()
        .map(|&(s, s2)| {
            let mean = s / m;
            (mean, ((s2 / m - mean * mean) / m).sqrt())
        })
        .collect();
    for w in est.windows(2) {
        let ratio = w[0].0 / w[1].0;
        assert!(
            (1.5..2.7).contains(&ratio),
            "difference ratio {ratio}, estimates {est:?}"
        );
    }
}

/// Pathwise changes on one Brownian path shrink roughly like `√dt`.
#[test]
fn white_stepper_strong_error_decreases() {
    let t = 1.0;
    let fine = 1024;
    let m = 2000;
    let levels = [16usize, 64, 256, 1024];
    let mut err = vec![0.0; levels.len()];
    for i in 0..m {
        let p = coupled_weights(i, t, fine, &levels);
        for (e, x) in err.iter_mut().zip(&p) {
            *e += (x - p[levels.len() - 1]).abs() / m as f64;
        }
    }
    err.pop();
    for w in err.windows(2) {
        let ratio = w[0] / w[1];
        // Quartering dt: ratio 2 for strong order ½.
        assert!(
            (1.5..3.0).contains(&ratio),
            "strong error ratio {ratio}, errors {err:?}"
        );
    }
}
