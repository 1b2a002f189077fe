use collapse_lab::analysis::{entropy_series, interrupt_entropy};
use collapse_lab::dynamics::{step_deterministic, step_white, ModelParams, PairState};
use collapse_lab::ensemble::{run_ensemble_with_workers, EnsembleConfig};
use collapse_lab::noise::{FrozenDist, NoiseSpec};
use collapse_lab::von_neumann_entropy;
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::LN_2;

fn state() -> impl Strategy<Value = PairState> {
    (0.0..=1.0f64, 0.0..std::f64::consts::TAU, 0.0..std::f64::consts::TAU).prop_map(|(w, pa, pb)| {
        PairState::new(
            Complex64::from_polar(w.sqrt(), pa),
            Complex64::from_polar((1.0 - w).sqrt(), pb),
        )
        .unwrap()
    })
}

fn params() -> impl Strategy<Value = ModelParams> {
    (0.1..3.0f64, 0.0..3.0f64, 0.0..3.0f64, 1e-5..1e-2f64).prop_map(|(j, g, lambda, dt)| ModelParams {
        j,
        g,
        lambda,
        dt,
        ..ModelParams::default()
    })
}

fn norm(s: &PairState) -> f64 {
    s.alpha().norm_sqr() + s.beta().norm_sqr()
}

fn noise() -> impl Strategy<Value = NoiseSpec> {
    prop_oneof![
        any::<bool>().prop_map(|stratified| NoiseSpec::Frozen {
            dist: FrozenDist::UniformSym,
            stratified
        }),
        (0.1..5.0f64, 0.0..2.0f64).prop_map(|(tau, g0)| NoiseSpec::Ou { tau, g0 }),
        Just(NoiseSpec::White),
    ]
}

proptest! {
    #[test]
    fn steppers_preserve_norm(s in state(), p in params(), xi in -2.0..2.0f64, z in -4.0..4.0f64) {
        let a = step_deterministic(&s, xi, &p);
        prop_assert!((norm(&a) - 1.0).abs() < 1e-12);
        let b = step_white(&s, z * p.dt.sqrt(), &p);
        prop_assert!((norm(&b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn basis_states_are_exact_fixed_points(p in params(), xi in -5.0..5.0f64, dw in -1.0..1.0f64) {
        for basis in [PairState::basis_00(), PairState::basis_11()] {
            prop_assert_eq!(step_deterministic(&basis, xi, &p), basis);
            prop_assert_eq!(step_white(&basis, dw, &p), basis);
        }
    }

    #[test]
    fn dephasing_never_lowers_entropy(s in state(), mix in 0.0..=1.0f64) {
        let rho = collapse_lab::DensityMatrix2::pure(&s);
        let rho = collapse_lab::DensityMatrix2::new(rho.rho00, rho.rho11, rho.rho01 * mix).unwrap();
        let spectral = von_neumann_entropy(&rho).unwrap();
        let local = interrupt_entropy((rho.rho00, rho.rho11)).unwrap();
        prop_assert!(local >= spectral - 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ensemble_records_are_valid(
        n_traj in 1usize..60,
        alpha0_sq in 0.0..=1.0f64,
        spec in noise(),
        seed in any::<u64>(),
    ) {
        let cfg = EnsembleConfig {
            n_traj,
            initial_alpha2: alpha0_sq,
            noise: spec,
            t_max: 1.0,
            record_every: 0.05,
            master_seed: seed,
            ..EnsembleConfig::default()
        };
        let series = run_ensemble_with_workers(&cfg, 2).unwrap();
        for k in 0..series.len() {
            let rho = series.density_matrix(k).unwrap();
            prop_assert!(rho.check().is_ok());
            let (n00, n11) = series.outcome_counts(k);
            prop_assert!(n00 + n11 <= n_traj as u64);
        }
        let purity = series.density_matrix(0).unwrap().purity();
        prop_assert!((purity - 1.0).abs() < 1e-10);
        for r in entropy_series(&series).unwrap() {
            prop_assert_eq!(r.s_sum, r.s_td + r.s_ent_avg);
            for s in [r.s_td, r.s_ent_avg, r.s_td_int] {
                prop_assert!((0.0..=LN_2 + 1e-12).contains(&s), "{:?}", r);
            }
        }
    }
}
