//! Trajectory ensembles and the ensemble density matrix.
//!
//! Trajectories are split into at most [`MAX_BLOCKS`] contiguous index
//! blocks. Each block is integrated by one task and its per-record sums are
//! built by pairwise (cascade) summation in trajectory order; the totals are
//! a pairwise sum over blocks in block order. The block partition depends
//! only on `n_traj`, so results are bit-identical for any worker count, and
//! the retained block sums feed the jackknife error estimates.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::entanglement_entropy;
use crate::dynamics::{integrate, ModelParams, Outcome, PairState, TimeGrid};
use crate::error::{Error, Result};
use crate::noise::{NoiseSpec, TrajectoryNoise};

/// Number of jackknife blocks (fewer only when `n_traj` is smaller).
pub const MAX_BLOCKS: usize = 50;

const FIELDS: usize = 6;
const W: usize = 0;
const COH_RE: usize = 1;
const COH_IM: usize = 2;
const ENT: usize = 3;
const N00: usize = 4;
const N11: usize = 5;

type Row = [f64; FIELDS];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_traj: usize,
    /// `|α(0)|²`; amplitudes start real and non-negative.
    pub initial_alpha2: f64,
    pub model: ModelParams,
    pub noise: NoiseSpec,
    pub t_max: f64,
    pub record_every: f64,
    pub master_seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_traj: 100_000,
            initial_alpha2: 0.75,
            model: ModelParams::default(),
            noise: NoiseSpec::default(),
            t_max: 6.0,
            record_every: 0.01,
            master_seed: 1,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<TimeGrid> {
        if self.n_traj == 0 {
            return Err(Error::param("n_traj", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.initial_alpha2) {
            return Err(Error::param(
                "alpha0_sq",
                format!("must lie in [0, 1], got {}", self.initial_alpha2),
            ));
        }
        self.model.validate()?;
        self.noise.validate()?;
        TimeGrid::new(self.model.dt, self.record_every, self.t_max)
    }
}

/// 2×2 ensemble density matrix over `{|00⟩, |11⟩}`.
///
/// `rho01 = ⟨00|ρ|11⟩ = E[αβ*]`; the lower off-diagonal is its conjugate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix2 {
    pub rho00: f64,
    pub rho11: f64,
    pub rho01: Complex64,
}

const DM_TOLERANCE: f64 = 1e-10;

impl DensityMatrix2 {
    pub fn new(rho00: f64, rho11: f64, rho01: Complex64) -> Result<Self> {
        let rho = Self { rho00, rho11, rho01 };
        rho.check()?;
        Ok(rho)
    }

    /// Trace, population sign and positivity checks.
    pub fn check(&self) -> Result<()> {
        let finite =
            self.rho00.is_finite() && self.rho11.is_finite() && self.rho01.re.is_finite() && self.rho01.im.is_finite();
        if !finite {
            return Err(Error::InvalidDensityMatrix("non-finite entry".into()));
        }
        let trace = self.rho00 + self.rho11;
        if (trace - 1.0).abs() > DM_TOLERANCE {
            return Err(Error::InvalidDensityMatrix(format!("trace {trace} != 1")));
        }
        if self.rho00 < -DM_TOLERANCE || self.rho11 < -DM_TOLERANCE {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative population ({}, {})",
                self.rho00, self.rho11
            )));
        }
        if self.rho01.norm_sqr() > self.rho00 * self.rho11 + DM_TOLERANCE {
            return Err(Error::InvalidDensityMatrix(format!(
                "|ρ01|² = {} exceeds ρ00·ρ11 = {}",
                self.rho01.norm_sqr(),
                self.rho00 * self.rho11
            )));
        }
        Ok(())
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn pure(state: &PairState) -> Self {
        let rho00 = state.weight();
        Self {
            rho00,
            rho11: 1.0 - rho00,
            rho01: state.coherence(),
        }
    }

    /// `diag(p, 1 − p)`.
    pub fn diagonal(p: f64) -> Result<Self> {
        Self::new(p, 1.0 - p, Complex64::new(0.0, 0.0))
    }

    /// Populations from `E|α|²` and coherence `E[αβ*]`.
    pub fn from_moments(weight: f64, coherence: Complex64) -> Result<Self> {
        Self::new(weight, 1.0 - weight, coherence)
    }

    /// `(1/N) Σ |ψ_j⟩⟨ψ_j|` over a snapshot.
    pub fn from_states(states: &[PairState]) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidDensityMatrix("empty snapshot".into()));
        }
        let n = states.len() as f64;
        let weight = states.iter().map(PairState::weight).sum::<f64>() / n;
        let coh = states.iter().map(PairState::coherence).sum::<Complex64>() / n;
        Self::from_moments(weight, coh)
    }

    /// The same populations with the coherence removed.
    pub fn dephased(&self) -> Self {
        Self {
            rho01: Complex64::new(0.0, 0.0),
            ..*self
        }
    }

    /// `(x₊, x₋) = 1/2 ± (1/2)√((ρ00 − ρ11)² + 4|ρ01|²)`, unclamped.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let d = self.rho00 - self.rho11;
        let r = 0.5 * (d * d + 4.0 * self.rho01.norm_sqr()).sqrt();
        let half_trace = 0.5 * (self.rho00 + self.rho11);
        (half_trace + r, half_trace - r)
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.rho00 * self.rho00 + self.rho11 * self.rho11 + 2.0 * self.rho01.norm_sqr()
    }
}

/// Ensemble averages at one recorded time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    /// `E|α|²`.
    pub weight: f64,
    /// `E[αβ*]`.
    pub coherence: Complex64,
    /// `E[S_ent]`, averaged per trajectory.
    pub entanglement: f64,
}

impl Moments {
    fn from_row(row: &Row, n: f64) -> Self {
        Self {
            weight: row[W] / n,
            coherence: Complex64::new(row[COH_RE] / n, row[COH_IM] / n),
            entanglement: row[ENT] / n,
        }
    }

    pub fn density_matrix(&self) -> Result<DensityMatrix2> {
        DensityMatrix2::from_moments(self.weight, self.coherence)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BlockSums {
    n: usize,
    sums: Vec<Row>,
}

/// Per-record ensemble moments, kept as block sums so that jackknife
/// estimates can be formed afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSeries {
    times: Vec<f64>,
    coupling: f64,
    n_traj: usize,
    totals: Vec<Row>,
    blocks: Vec<BlockSums>,
}

/// Which trajectories a moment estimate is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subset {
    All,
    /// Every block except this one.
    LeaveOut(usize),
}

impl MomentSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_traj(&self) -> usize {
        self.n_traj
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Recorded times.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Recorded times in units of `1/J`.
    pub fn times_j(&self) -> Vec<f64> {
        self.times.iter().map(|t| t * self.coupling).collect()
    }

    pub fn moments(&self, record: usize) -> Moments {
        Moments::from_row(&self.totals[record], self.n_traj as f64)
    }

    pub fn moments_in(&self, subset: Subset, record: usize) -> Moments {
        match subset {
            Subset::All => self.moments(record),
            Subset::LeaveOut(b) => {
                let block = &self.blocks[b];
                let total = &self.totals[record];
                let part = &block.sums[record];
                let mut row = [0.0; FIELDS];
                for i in 0..FIELDS {
                    row[i] = total[i] - part[i];
                }
                Moments::from_row(&row, (self.n_traj - block.n) as f64)
            }
        }
    }

    /// Trajectories collapsed onto `|00⟩` and `|11⟩` by this record.
    pub fn outcome_counts(&self, record: usize) -> (u64, u64) {
        let row = &self.totals[record];
        (row[N00] as u64, row[N11] as u64)
    }

    pub fn density_matrix(&self, record: usize) -> Result<DensityMatrix2> {
        self.moments(record).density_matrix()
    }

    /// Index of a recorded time; anything off the grid is refused.
    pub fn record_index(&self, t: f64) -> Result<usize> {
        let tol = 1e-9 * t.abs().max(1.0);
        self.times
            .iter()
            .position(|&x| (x - t).abs() <= tol)
            .ok_or(Error::OffGrid(t))
    }
}

/// Density matrix at recorded time `t`.
pub fn density_matrix_at(series: &MomentSeries, t: f64) -> Result<DensityMatrix2> {
    series.density_matrix(series.record_index(t)?)
}

/// Cascade summation over equal-length rows: the sum tree is balanced and
/// depends only on the push order.
struct PairwiseSum {
    stack: Vec<(u32, Vec<Row>)>,
}

impl PairwiseSum {
    fn new() -> Self {
        Self { stack: Vec::new() }
    }

    fn push(&mut self, mut rows: Vec<Row>) {
        let mut level = 0;
        while let Some(&(top_level, _)) = self.stack.last() {
            if top_level != level {
                break;
            }
            let (_, top) = self.stack.pop().expect("non-empty");
            add_rows(&mut rows, &top);
            level += 1;
        }
        self.stack.push((level, rows));
    }

    fn finish(mut self, len: usize) -> Vec<Row> {
        let mut acc = match self.stack.pop() {
            Some((_, rows)) => rows,
            None => return vec![[0.0; FIELDS]; len],
        };
        while let Some((_, rows)) = self.stack.pop() {
            add_rows(&mut acc, &rows);
        }
        acc
    }
}

fn add_rows(into: &mut [Row], other: &[Row]) {
    for (a, b) in into.iter_mut().zip(other) {
        for i in 0..FIELDS {
            a[i] += b[i];
        }
    }
}

fn block_ranges(n: usize) -> Vec<std::ops::Range<usize>> {
    let blocks = n.min(MAX_BLOCKS);
    (0..blocks).map(|b| b * n / blocks..(b + 1) * n / blocks).collect()
}

fn run_block(config: &EnsembleConfig, grid: &TimeGrid, range: std::ops::Range<usize>) -> Result<BlockSums> {
    let initial = PairState::from_weight(config.initial_alpha2)?;
    let mut acc = PairwiseSum::new();
    let n = range.len();
    for index in range {
        let mut noise = TrajectoryNoise::new(&config.noise, config.master_seed, index as u64, config.n_traj as u64);
        let mut rows = vec![[0.0; FIELDS]; grid.len()];
        integrate(initial, &mut noise, &config.model, grid, |k, s| {
            let coh = s.coherence();
            let row = &mut rows[k];
            row[W] = s.weight();
            row[COH_RE] = coh.re;
            row[COH_IM] = coh.im;
            row[ENT] = entanglement_entropy(s);
            match s.collapsed() {
                Some(Outcome::Ket00) => row[N00] = 1.0,
                Some(Outcome::Ket11) => row[N11] = 1.0,
                _ => {}
            }
        })
        .map_err(|e| Error::Trajectory {
            index,
            seed: config.master_seed,
            source: Box::new(e),
        })?;
        acc.push(rows);
    }
    Ok(BlockSums {
        n,
        sums: acc.finish(grid.len()),
    })
}

fn run_blocks(config: &EnsembleConfig, grid: &TimeGrid) -> Result<MomentSeries> {
    let results: Vec<Result<BlockSums>> = block_ranges(config.n_traj)
        .into_par_iter()
        .map(|range| run_block(config, grid, range))
        .collect();
    let blocks = results.into_iter().collect::<Result<Vec<_>>>()?;

    let mut total = PairwiseSum::new();
    for b in &blocks {
        total.push(b.sums.clone());
    }
    Ok(MomentSeries {
        times: grid.times(),
        coupling: config.model.j,
        n_traj: config.n_traj,
        totals: total.finish(grid.len()),
        blocks,
    })
}

/// Integrates every trajectory of the ensemble on the current rayon pool.
pub fn run_ensemble(config: &EnsembleConfig) -> Result<MomentSeries> {
    let grid = config.validate()?;
    run_blocks(config, &grid)
}

/// As [`run_ensemble`], on a dedicated pool of `workers` threads.
pub fn run_ensemble_with_workers(config: &EnsembleConfig, workers: usize) -> Result<MomentSeries> {
    let grid = config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::param("workers", e.to_string()))?;
    pool.install(|| run_blocks(config, &grid))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(noise: NoiseSpec, n: usize) -> EnsembleConfig {
        EnsembleConfig {
            n_traj: n,
            noise,
            t_max: 1.0,
            record_every: 0.05,
            master_seed: 99,
            ..EnsembleConfig::default()
        }
    }

    #[test]
    fn single_basis_trajectory() {
        let cfg = EnsembleConfig {
            initial_alpha2: 1.0,
            ..small(NoiseSpec::White, 1)
        };
        let series = run_ensemble(&cfg).unwrap();
        for k in 0..series.len() {
            assert_eq!(series.moments(k).weight, 1.0);
            assert_eq!(series.outcome_counts(k), (1, 0));
        }
    }

    #[test]
    fn pure_snapshot_is_rank_one() {
        let s = PairState::from_weight(0.75).unwrap();
        let rho = DensityMatrix2::from_states(&[s; 8]).unwrap();
        let (hi, lo) = rho.eigenvalues();
        assert!((hi - 1.0).abs() < 1e-15 && lo.abs() < 1e-15);
    }

    #[test]
    fn half_and_half_is_maximally_mixed() {
        let mut states = vec![PairState::basis_00(); 5];
        states.extend(vec![PairState::basis_11(); 5]);
        let rho = DensityMatrix2::from_states(&states).unwrap();
        assert_eq!(rho, DensityMatrix2::diagonal(0.5).unwrap());
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix2::new(0.6, 0.5, Complex64::new(0.0, 0.0)).is_err());
        assert!(DensityMatrix2::new(1.2, -0.2, Complex64::new(0.0, 0.0)).is_err());
        assert!(DensityMatrix2::new(0.5, 0.5, Complex64::new(0.6, 0.0)).is_err());
        assert!(DensityMatrix2::new(0.5, 0.5, Complex64::new(0.3, 0.4)).is_ok());
    }

    #[test]
    fn initial_record_is_pure() {
        let series = run_ensemble(&small(NoiseSpec::frozen(), 40)).unwrap();
        let rho = series.density_matrix(0).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn off_grid_lookup_is_refused() {
        let series = run_ensemble(&small(NoiseSpec::frozen(), 4)).unwrap();
        assert!(density_matrix_at(&series, 0.5).is_ok());
        assert!(matches!(density_matrix_at(&series, 0.51), Err(Error::OffGrid(_))));
    }

    #[test]
    fn leave_one_out_matches_direct_average() {
        let series = run_ensemble(&small(NoiseSpec::White, 20)).unwrap();
        assert_eq!(series.n_blocks(), 20);
        // Blocks hold one trajectory each here; removing block 0 from the
        // total must equal the mean over the rest.
        let all = series.moments(10);
        let loo = series.moments_in(Subset::LeaveOut(0), 10);
        let first = &series.blocks[0].sums[10];
        let rebuilt = (loo.weight * 19.0 + first[W]) / 20.0;
        assert!((rebuilt - all.weight).abs() < 1e-14);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let cfg = small(NoiseSpec::Ou { tau: 0.5, g0: 1.0 }, 130);
        let one = run_ensemble_with_workers(&cfg, 1).unwrap();
        let four = run_ensemble_with_workers(&cfg, 4).unwrap();
        assert_eq!(serde_json::to_vec(&one).unwrap(), serde_json::to_vec(&four).unwrap());
    }

    #[test]
    fn block_partition_covers_all_indices() {
        for n in [1, 7, 50, 51, 1000, 100_001] {
            let r = block_ranges(n);
            assert_eq!(r.first().unwrap().start, 0);
            assert_eq!(r.last().unwrap().end, n);
            assert!(r.windows(2).all(|w| w[0].end == w[1].start));
            assert!(r.iter().all(|x| !x.is_empty()));
        }
    }

    #[test]
    fn cascade_sum_is_exact_on_integers() {
        let mut acc = PairwiseSum::new();
        for i in 0..1000 {
            acc.push(vec![[i as f64; FIELDS]; 3]);
        }
        let out = acc.finish(3);
        assert!(out.iter().all(|r| r.iter().all(|&x| x == 499_500.0)));
    }

    #[test]
    fn invalid_configs_name_the_field() {
        let mut cfg = small(NoiseSpec::White, 0);
        assert!(matches!(
            cfg.validate(),
            Err(Error::InvalidParameter { field: "n_traj", .. })
        ));
        cfg.n_traj = 5;
        cfg.initial_alpha2 = 1.5;
        assert!(matches!(
            cfg.validate(),
            Err(Error::InvalidParameter { field: "alpha0_sq", .. })
        ));
    }
}
