//! Entropy and entanglement observables of an ensemble.
//!
//! All entropies are in nats with `0 · ln 0 = 0`.
//!
//! * `s_td`: Von Neumann entropy of the ensemble density matrix.
//! * `s_ent_avg`: trajectory average of the reduced (one-side) entropy
//!   `−|α|² ln|α|² − |β|² ln|β|²`. This is an average of entropies, never
//!   the entropy of the averaged state.
//! * `s_td_int`: entropy left after projecting every member onto
//!   `{|00⟩, |11⟩}`, i.e. the binary entropy of `E|α|²`.
//!
//! Statistical errors come from a leave-one-block-out jackknife over the
//! ensemble blocks kept in [`MomentSeries`].

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::PairState;
use crate::ensemble::{DensityMatrix2, MomentSeries, Moments, Subset};
use crate::error::{Error, Result};

const EIGEN_TOLERANCE: f64 = 1e-10;

#[inline]
fn xlnx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// `−p ln p − (1 − p) ln(1 − p)` for `p` clamped to `[0, 1]`.
pub fn binary_entropy(p: f64) -> f64 {
    let p = p.clamp(0.0, 1.0);
    -(xlnx(p) + xlnx(1.0 - p))
}

/// `−Tr ρ ln ρ` from the closed-form eigenvalues of the 2×2 matrix.
pub fn von_neumann_entropy(rho: &DensityMatrix2) -> Result<f64> {
    let (hi, lo) = rho.eigenvalues();
    for x in [hi, lo] {
        if !(-EIGEN_TOLERANCE..=1.0 + EIGEN_TOLERANCE).contains(&x) {
            return Err(Error::InvalidDensityMatrix(format!("eigenvalue {x} outside [0, 1]")));
        }
    }
    Ok(-(xlnx(hi.clamp(0.0, 1.0)) + xlnx(lo.clamp(0.0, 1.0))))
}

/// Reduced Von Neumann entropy of one pair state.
pub fn entanglement_entropy(state: &PairState) -> f64 {
    binary_entropy(state.weight())
}

/// Mean reduced entropy over a snapshot of trajectories.
pub fn avg_entanglement(states: &[PairState]) -> Result<f64> {
    if states.is_empty() {
        return Err(Error::param("states", "snapshot is empty"));
    }
    Ok(states.iter().map(entanglement_entropy).sum::<f64>() / states.len() as f64)
}

/// Entropy after an instantaneous projective measurement, from the
/// populations `(E|α|², E|β|²)`.
pub fn interrupt_entropy(populations: (f64, f64)) -> Result<f64> {
    let (p, q) = populations;
    let band = -EIGEN_TOLERANCE..=1.0 + EIGEN_TOLERANCE;
    if !band.contains(&p) || !band.contains(&q) {
        return Err(Error::param("populations", format!("({p}, {q}) outside [0, 1]")));
    }
    if (p + q - 1.0).abs() > EIGEN_TOLERANCE {
        return Err(Error::param("populations", format!("({p}, {q}) do not sum to 1")));
    }
    Ok(-(xlnx(p.clamp(0.0, 1.0)) + xlnx(q.clamp(0.0, 1.0))))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyRecord {
    /// Time in units of `1/J`.
    pub t: f64,
    pub s_td: f64,
    pub s_ent_avg: f64,
    /// `s_td + s_ent_avg`.
    pub s_sum: f64,
    pub s_td_int: f64,
    /// `E|α|²`.
    pub weight: f64,
    /// `E[αβ*]`.
    pub coherence: Complex64,
}

impl EntropyRecord {
    pub fn from_moments(t: f64, m: &Moments) -> Result<Self> {
        let rho = m.density_matrix()?;
        let s_td = von_neumann_entropy(&rho)?;
        let s_td_int = interrupt_entropy((rho.rho00, rho.rho11))?;
        Ok(Self {
            t,
            s_td,
            s_ent_avg: m.entanglement,
            s_sum: s_td + m.entanglement,
            s_td_int,
            weight: m.weight,
            coherence: m.coherence,
        })
    }
}

/// One [`EntropyRecord`] per recorded time.
pub fn entropy_series(series: &MomentSeries) -> Result<Vec<EntropyRecord>> {
    series
        .times_j()
        .into_iter()
        .enumerate()
        .map(|(k, t)| {
            EntropyRecord::from_moments(t, &series.moments(k)).map_err(|e| Error::AtRecord {
                index: k,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Scalar observables that can be jackknifed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    STd,
    SEntAvg,
    SSum,
    STdInt,
    Weight,
    CoherenceAbs,
}

impl Observable {
    pub const ALL: [Observable; 6] = [
        Observable::STd,
        Observable::SEntAvg,
        Observable::SSum,
        Observable::STdInt,
        Observable::Weight,
        Observable::CoherenceAbs,
    ];

    pub fn evaluate(self, m: &Moments) -> Result<f64> {
        Ok(match self {
            Observable::Weight => m.weight,
            Observable::CoherenceAbs => m.coherence.norm(),
            Observable::SEntAvg => m.entanglement,
            other => {
                let r = EntropyRecord::from_moments(0.0, m)?;
                match other {
                    Observable::STd => r.s_td,
                    Observable::SSum => r.s_sum,
                    _ => r.s_td_int,
                }
            }
        })
    }
}

/// A point estimate with its jackknife standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

/// Leave-one-block-out jackknife of `f` over the blocks of `series`.
///
/// The SE is NaN when the series has fewer than two blocks.
pub fn jackknife<F>(series: &MomentSeries, f: F) -> Result<Estimate>
where
    F: Fn(Subset) -> Result<f64>,
{
    let value = f(Subset::All)?;
    let b = series.n_blocks();
    if b < 2 {
        return Ok(Estimate { value, se: f64::NAN });
    }
    let loo = (0..b).map(|i| f(Subset::LeaveOut(i))).collect::<Result<Vec<_>>>()?;
    let mean = loo.iter().sum::<f64>() / b as f64;
    let ss = loo.iter().map(|x| (x - mean).powi(2)).sum::<f64>();
    Ok(Estimate {
        value,
        se: ((b as f64 - 1.0) / b as f64 * ss).sqrt(),
    })
}

/// `obs` at `record` with its jackknife SE.
pub fn jackknife_at(series: &MomentSeries, record: usize, obs: Observable) -> Result<Estimate> {
    jackknife(series, |s| obs.evaluate(&series.moments_in(s, record)))
}

/// `obs(later) − obs(earlier)` with the jackknife SE of the difference.
pub fn jackknife_change(series: &MomentSeries, earlier: usize, later: usize, obs: Observable) -> Result<Estimate> {
    jackknife(series, |s| {
        Ok(obs.evaluate(&series.moments_in(s, later))? - obs.evaluate(&series.moments_in(s, earlier))?)
    })
}

/// Jackknife SEs for every observable at every record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyErrors {
    pub s_td: Vec<f64>,
    pub s_ent_avg: Vec<f64>,
    pub s_sum: Vec<f64>,
    pub s_td_int: Vec<f64>,
    pub weight: Vec<f64>,
    pub coherence_abs: Vec<f64>,
}

pub fn entropy_errors(series: &MomentSeries) -> Result<EntropyErrors> {
    let column = |obs: Observable| -> Result<Vec<f64>> {
        (0..series.len())
            .map(|k| jackknife_at(series, k, obs).map(|e| e.se))
            .collect()
    };
    Ok(EntropyErrors {
        s_td: column(Observable::STd)?,
        s_ent_avg: column(Observable::SEntAvg)?,
        s_sum: column(Observable::SSum)?,
        s_td_int: column(Observable::STdInt)?,
        weight: column(Observable::Weight)?,
        coherence_abs: column(Observable::CoherenceAbs)?,
    })
}

/// `obs(k) − obs(0)` for every record, with jackknife SEs.
pub fn changes_from_initial(series: &MomentSeries, obs: Observable) -> Result<Vec<Estimate>> {
    (0..series.len()).map(|k| jackknife_change(series, 0, k, obs)).collect()
}

/// `obs(k + 1) − obs(k)` for consecutive records, with jackknife SEs.
pub fn step_changes(series: &MomentSeries, obs: Observable) -> Result<Vec<Estimate>> {
    (1..series.len())
        .map(|k| jackknife_change(series, k - 1, k, obs))
        .collect()
}

/// A decrease `obs(earlier) − obs(later)` with its jackknife SE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drop {
    pub earlier: usize,
    pub later: usize,
    pub size: Estimate,
}

impl Drop {
    /// Size of the drop in standard errors.
    pub fn significance(&self) -> f64 {
        if self.size.se > 0.0 {
            self.size.value / self.size.se
        } else if self.size.value > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

/// The most significant decrease of `obs` between two recorded times.
///
/// For each later time the earlier time is the running maximum of `obs`
/// before it, so only `O(len)` jackknife evaluations are needed.
pub fn largest_drop(series: &MomentSeries, obs: Observable) -> Result<Option<Drop>> {
    let values = (0..series.len())
        .map(|k| obs.evaluate(&series.moments(k)))
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<Drop> = None;
    let mut peak = 0;
    for later in 1..values.len() {
        if values[later - 1] > values[peak] {
            peak = later - 1;
        }
        if values[peak] <= values[later] {
            continue;
        }
        let change = jackknife_change(series, later, peak, obs)?;
        let candidate = Drop {
            earlier: peak,
            later,
            size: change,
        };
        if best.map_or(true, |b| candidate.significance() > b.significance()) {
            best = Some(candidate);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayShape {
    /// `⟨env₀(t)|env₁(t)⟩ = e^{−γt}`.
    #[default]
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DephasingParams {
    /// Coherence decay rate (same time units as the grid passed in).
    pub gamma: f64,
    #[serde(default)]
    pub decay_shape: DecayShape,
}

impl DephasingParams {
    pub fn exponential(gamma: f64) -> Self {
        Self {
            gamma,
            decay_shape: DecayShape::Exponential,
        }
    }

    fn overlap(&self, t: f64) -> f64 {
        match self.decay_shape {
            DecayShape::Exponential => (-self.gamma * t).exp(),
        }
    }
}

/// Pure dephasing of `√p|00⟩ + √(1−p)|11⟩` against an environment.
///
/// Populations never move and individual states are never reduced, so
/// `s_ent_avg` and `s_td_int` stay at the initial binary entropy while the
/// coherence decays with the environment overlap.
pub fn dephasing_reference(
    alpha0_sq: f64,
    params: &DephasingParams,
    times: &[f64],
) -> Result<Vec<(DensityMatrix2, EntropyRecord)>> {
    if !(0.0..=1.0).contains(&alpha0_sq) {
        return Err(Error::param(
            "alpha0_sq",
            format!("must lie in [0, 1], got {alpha0_sq}"),
        ));
    }
    if !(params.gamma >= 0.0 && params.gamma.is_finite()) {
        return Err(Error::param(
            "gamma",
            format!("must be non-negative, got {}", params.gamma),
        ));
    }
    let amplitude = (alpha0_sq * (1.0 - alpha0_sq)).sqrt();
    let s0 = binary_entropy(alpha0_sq);
    times
        .iter()
        .map(|&t| {
            let rho = DensityMatrix2::new(
                alpha0_sq,
                1.0 - alpha0_sq,
                Complex64::new(amplitude * params.overlap(t), 0.0),
            )?;
            let s_td = von_neumann_entropy(&rho)?;
            let record = EntropyRecord {
                t,
                s_td,
                s_ent_avg: s0,
                s_sum: s_td + s0,
                s_td_int: s0,
                weight: alpha0_sq,
                coherence: rho.rho01,
            };
            Ok((rho, record))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // −(3/4)ln(3/4) − (1/4)ln(1/4)
    const H34: f64 = 0.562_335_144_618_808_5;

    #[test]
    fn frozen_constant_is_binary_entropy_of_three_quarters() {
        let direct = -(0.75f64 * 0.75f64.ln()) - 0.25 * 0.25f64.ln();
        assert!((direct - H34).abs() < 1e-15);
        assert!((H34 - 0.562335).abs() < 5e-7);
    }

    #[test]
    fn von_neumann_examples() {
        let pure = DensityMatrix2::pure(&PairState::from_weight(0.3).unwrap());
        assert!(von_neumann_entropy(&pure).unwrap().abs() < 1e-12);
        let mixed = DensityMatrix2::diagonal(0.5).unwrap();
        assert_eq!(von_neumann_entropy(&mixed).unwrap(), std::f64::consts::LN_2);
        let d = DensityMatrix2::diagonal(0.75).unwrap();
        assert!((von_neumann_entropy(&d).unwrap() - H34).abs() < 1e-15);
        assert_eq!(
            von_neumann_entropy(&DensityMatrix2::diagonal(1.0).unwrap()).unwrap(),
            0.0
        );
    }

    #[test]
    fn von_neumann_rejects_unphysical_spectrum() {
        let bad = DensityMatrix2 {
            rho00: 0.5,
            rho11: 0.5,
            rho01: Complex64::new(0.6, 0.0),
        };
        assert!(matches!(von_neumann_entropy(&bad), Err(Error::InvalidDensityMatrix(_))));
        // inside the tolerance band: clamped
        let edge = DensityMatrix2 {
            rho00: 0.5,
            rho11: 0.5,
            rho01: Complex64::new(0.5 + 1e-12, 0.0),
        };
        assert_eq!(von_neumann_entropy(&edge).unwrap(), 0.0);
    }

    #[test]
    fn entanglement_examples() {
        assert_eq!(entanglement_entropy(&PairState::basis_00()), 0.0);
        assert_eq!(entanglement_entropy(&PairState::basis_11()), 0.0);
        let bell = PairState::from_weight(0.5).unwrap();
        assert!((entanglement_entropy(&bell) - std::f64::consts::LN_2).abs() < 1e-15);
        let s = PairState::from_weight(0.75).unwrap();
        assert!((entanglement_entropy(&s) - H34).abs() < 1e-15);
    }

    #[test]
    fn averaged_entanglement_examples() {
        let s = PairState::from_weight(0.75).unwrap();
        assert!((avg_entanglement(&[s; 10]).unwrap() - H34).abs() < 1e-15);
        let mut mixed = vec![PairState::basis_00(); 3];
        mixed.extend([PairState::basis_11(); 3]);
        assert_eq!(avg_entanglement(&mixed).unwrap(), 0.0);
        assert!(avg_entanglement(&[]).is_err());
    }

    #[test]
    fn interrupt_examples() {
        assert!((interrupt_entropy((0.75, 0.25)).unwrap() - H34).abs() < 1e-15);
        assert_eq!(interrupt_entropy((1.0, 0.0)).unwrap(), 0.0);
        assert!(interrupt_entropy((1.2, -0.2)).is_err());
        assert!(interrupt_entropy((0.5, 0.6)).is_err());
    }

    #[test]
    fn basis_mixture_record() {
        let mut states = vec![PairState::basis_00(); 4];
        states.extend([PairState::basis_11(); 4]);
        let rho = DensityMatrix2::from_states(&states).unwrap();
        let m = Moments {
            weight: rho.rho00,
            coherence: rho.rho01,
            entanglement: avg_entanglement(&states).unwrap(),
        };
        let r = EntropyRecord::from_moments(0.0, &m).unwrap();
        assert_eq!(r.s_td, std::f64::consts::LN_2);
        assert_eq!(r.s_ent_avg, 0.0);
        assert_eq!(r.s_sum, r.s_td + r.s_ent_avg);
    }

    #[test]
    fn dephasing_examples() {
        let times: Vec<f64> = (0..=200).map(|k| k as f64 * 0.1).collect();
        let frozen = dephasing_reference(0.75, &DephasingParams::exponential(0.0), &times).unwrap();
        for (rho, rec) in &frozen {
            assert!((rho.purity() - 1.0).abs() < 1e-12);
            assert!(rec.s_td.abs() < 1e-12);
        }
        let decaying = dephasing_reference(0.75, &DephasingParams::exponential(2.0), &times).unwrap();
        let (_, last) = decaying.last().unwrap();
        assert!((last.s_td - H34).abs() < 1e-12);
        for (rho, rec) in &decaying {
            assert_eq!(rho.rho00, 0.75);
            assert_eq!(rec.s_td_int, binary_entropy(0.75));
            assert_eq!(rec.s_ent_avg, binary_entropy(0.75));
        }
        assert!(decaying.windows(2).all(|w| w[1].1.s_td >= w[0].1.s_td));
        assert!(dephasing_reference(1.5, &DephasingParams::exponential(1.0), &times).is_err());
    }

    fn arb_density() -> impl Strategy<Value = DensityMatrix2> {
        (0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..std::f64::consts::TAU).prop_map(|(p, frac, phase)| {
            let r = frac * (p * (1.0 - p)).sqrt();
            DensityMatrix2 {
                rho00: p,
                rho11: 1.0 - p,
                rho01: Complex64::from_polar(r, phase),
            }
        })
    }

    proptest! {
        #[test]
        fn projection_never_lowers_entropy(rho in arb_density()) {
            let before = von_neumann_entropy(&rho).unwrap();
            let after = interrupt_entropy((rho.rho00, rho.rho11)).unwrap();
            prop_assert!(after >= before - 1e-12);
            prop_assert!((after - von_neumann_entropy(&rho.dephased()).unwrap()).abs() < 1e-15);
        }

        #[test]
        fn entropies_stay_in_range(rho in arb_density()) {
            let s = von_neumann_entropy(&rho).unwrap();
            prop_assert!((0.0..=std::f64::consts::LN_2 + 1e-15).contains(&s));
        }

        #[test]
        fn reduced_matrix_entropy_equals_entanglement(p in 0.0f64..=1.0, phase in 0.0f64..std::f64::consts::TAU) {
            let s = PairState::new(
                Complex64::from_polar(p.sqrt(), phase),
                Complex64::new((1.0 - p).sqrt(), 0.0),
            ).unwrap();
            let reduced = DensityMatrix2::diagonal(s.weight()).unwrap();
            prop_assert!((von_neumann_entropy(&reduced).unwrap() - entanglement_entropy(&s)).abs() < 1e-12);
        }
    }
}
