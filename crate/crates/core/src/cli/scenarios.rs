//! Scenario runners. Each turns a resolved configuration into data files
//! (as bytes) plus the scenario's own pass/fail checks; nothing here
//! touches the filesystem.

use serde::{Deserialize, Serialize};

use super::config::{NoiseKind, ResolvedConfig, Scenario};
use crate::analysis::{
    binary_entropy, changes_from_initial, dephasing_reference, entropy_errors, entropy_series, interrupt_entropy,
    jackknife_at, largest_drop, step_changes, von_neumann_entropy, Observable,
};
use crate::dynamics::{simulate_trajectory, PairState};
use crate::ensemble::{run_ensemble, DensityMatrix2, MomentSeries};
use crate::error::Result;
use crate::noise::{FrozenNoise, NoiseSource, TrajectoryNoise};
use crate::output::{entropy_table, format_number, Table, SCHEMA_AVERAGES, SCHEMA_INTERRUPT, SCHEMA_TRAJECTORIES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// One output file: `<scenario>_<stamp>[_<suffix>].<extension>`.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub suffix: Option<String>,
    pub extension: &'static str,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub artifacts: Vec<Artifact>,
    pub checks: Vec<Check>,
}

impl ScenarioOutput {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn run_scenario(cfg: &ResolvedConfig) -> Result<ScenarioOutput> {
    match cfg.scenario {
        Scenario::Fig1 => fig1(cfg),
        Scenario::Fig2 => fig2(cfg),
        Scenario::Interrupt => interrupt(cfg),
        Scenario::Born => born(cfg),
        Scenario::Dephasing => dephasing(cfg),
    }
}

fn label(kind: NoiseKind) -> &'static str {
    match kind {
        NoiseKind::Frozen => "frozen",
        NoiseKind::Ou => "ou",
        NoiseKind::White => "white",
    }
}

/// The configured regime followed by its white-noise counterpart.
fn regimes(cfg: &ResolvedConfig) -> Vec<(NoiseKind, u64)> {
    if cfg.noise == NoiseKind::White {
        vec![(NoiseKind::White, 1)]
    } else {
        vec![(cfg.noise, 0), (NoiseKind::White, 1)]
    }
}

fn csv(suffix: Option<&str>, table: &Table) -> Artifact {
    Artifact {
        suffix: suffix.map(str::to_string),
        extension: "csv",
        bytes: table.to_csv_bytes(),
    }
}

fn late_weight_check(name: &str, series: &MomentSeries, expected: f64) -> Result<Check> {
    let last = series.len() - 1;
    let w = jackknife_at(series, last, Observable::Weight)?;
    let tol = (4.0 * w.se).max(0.005);
    let dev = (w.value - expected).abs();
    Ok(Check::new(
        name,
        dev <= tol,
        format!(
            "E|α|²(t_max) = {:.6} ± {:.6}, expected {expected}, tolerance {tol:.6}",
            w.value, w.se
        ),
    ))
}

fn martingale_check(name: &str, series: &MomentSeries) -> Result<Check> {
    let changes = changes_from_initial(series, Observable::Weight)?;
    let worst = changes
        .iter()
        .enumerate()
        .filter(|(_, c)| c.value.abs() > 3.0 * c.se)
        .count();
    let max_z = changes
        .iter()
        .filter(|c| c.se > 0.0)
        .map(|c| c.value.abs() / c.se)
        .fold(0.0, f64::max);
    Ok(Check::new(
        name,
        worst == 0,
        format!("{worst} records beyond 3·SE, largest |ΔE|α|²|/SE = {max_z:.3}"),
    ))
}

fn fig1(cfg: &ResolvedConfig) -> Result<ScenarioOutput> {
    let model = cfg.model();
    let initial = PairState::from_weight(cfg.alpha0_sq)?;
    let mut columns = vec!["tJ[1]".to_string()];
    let mut paths: Vec<Vec<f64>> = Vec::new();
    let mut times = Vec::new();
    for (kind, stream) in regimes(cfg) {
        let ens = cfg.ensemble(kind, stream);
        for i in 0..cfg.samples {
            let (name, mut noise): (String, Box<dyn NoiseSource>) = match kind {
                NoiseKind::Frozen => {
                    let xi = if cfg.samples == 1 {
                        0.0
                    } else {
                        -1.0 + 2.0 * i as f64 / (cfg.samples - 1) as f64
                    };
                    (
                        format!("frozen_xi={}[1]", format_number(xi)),
                        Box::new(FrozenNoise::new(xi)),
                    )
                }
                _ => (
                    format!("{}_{i}[1]", label(kind)),
                    Box::new(TrajectoryNoise::new(
                        &ens.noise,
                        ens.master_seed,
                        i as u64,
                        cfg.n_traj as u64,
                    )),
                ),
            };
            let traj = simulate_trajectory(initial, noise.as_mut(), &model, cfg.t_max, cfg.record_every)?;
            columns.push(name);
            paths.push(traj.weights());
            times = traj.times_j;
        }
    }
    let mut trajectories = Table::new(SCHEMA_TRAJECTORIES, columns);
    for (k, t) in times.iter().enumerate() {
        let mut row = vec![*t];
        row.extend(paths.iter().map(|p| p[k]));
        trajectories.push(row);
    }

    let mut columns = vec!["tJ[1]".to_string()];
    let mut data: Vec<Vec<f64>> = Vec::new();
    let mut checks = Vec::new();
    let mut grid = Vec::new();
    for (kind, stream) in regimes(cfg) {
        let series = run_ensemble(&cfg.ensemble(kind, stream))?;
        let errors = entropy_errors(&series)?;
        let l = label(kind);
        columns.extend([
            format!("{l}_weight[1]"),
            format!("{l}_weight_se[1]"),
            format!("{l}_coherence_abs[1]"),
            format!("{l}_coherence_abs_se[1]"),
        ]);
        data.push((0..series.len()).map(|k| series.moments(k).weight).collect());
        data.push(errors.weight.clone());
        data.push((0..series.len()).map(|k| series.moments(k).coherence.norm()).collect());
        data.push(errors.coherence_abs.clone());
        match kind {
            NoiseKind::Frozen => checks.push(late_weight_check("frozen_born_weight", &series, cfg.alpha0_sq)?),
            NoiseKind::White => checks.push(martingale_check("white_martingale", &series)?),
            NoiseKind::Ou => {}
        }
        grid = series.times_j();
    }
    let mut averages = Table::new(SCHEMA_AVERAGES, columns);
    for (k, t) in grid.iter().enumerate() {
        let mut row = vec![*t];
        row.extend(data.iter().map(|c| c[k]));
        averages.push(row);
    }
    Ok(ScenarioOutput {
        artifacts: vec![
            csv(Some("trajectories"), &trajectories),
            csv(Some("averages"), &averages),
        ],
        checks,
    })
}

fn fig2(cfg: &ResolvedConfig) -> Result<ScenarioOutput> {
    let target = binary_entropy(cfg.alpha0_sq);
    let mut artifacts = Vec::new();
    let mut checks = Vec::new();
    for (kind, stream) in regimes(cfg) {
        let l = label(kind);
        let series = run_ensemble(&cfg.ensemble(kind, stream))?;
        let records = entropy_series(&series)?;
        let errors = entropy_errors(&series)?;
        artifacts.push(csv(Some(l), &entropy_table(&records, Some(&errors))));

        let last = series.len() - 1;
        let late = jackknife_at(&series, last, Observable::STd)?;
        let tol = (4.0 * late.se).max(0.01);
        checks.push(Check::new(
            format!("{l}_late_s_td"),
            (late.value - target).abs() <= tol,
            format!("s_td(t_max) = {:.6}, expected {target:.6} ± {tol:.4}", late.value),
        ));
        checks.extend(monotonicity_checks(l, &series)?);

        if kind == NoiseKind::White {
            let changes = changes_from_initial(&series, Observable::STdInt)?;
            let bad = changes.iter().filter(|c| c.value.abs() > 3.0 * c.se).count();
            checks.push(Check::new(
                "white_s_td_int_constant",
                bad == 0,
                format!("{bad} records beyond 3·SE of s_td_int(0)"),
            ));
        } else {
            let sums = changes_from_initial(&series, Observable::SSum)?;
            let (k, worst) = sums
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.value.abs().total_cmp(&b.1.value.abs()))
                .expect("non-empty");
            checks.push(Check::new(
                format!("{l}_sum_not_conserved"),
                worst.value.abs() > 5.0 * worst.se,
                format!(
                    "max |s_sum(t) − s_sum(0)| = {:.5} at tJ = {:.2}, SE {:.2e}",
                    worst.value.abs(),
                    records[k].t,
                    worst.se
                ),
            ));
            let drop = largest_drop(&series, Observable::STdInt)?;
            let (passed, detail) = match drop {
                Some(d) => (
                    d.size.value > 5.0 * d.size.se,
                    format!(
                        "s_td_int falls by {:.5} (SE {:.2e}) from tJ = {:.2} to tJ = {:.2}",
                        d.size.value, d.size.se, records[d.earlier].t, records[d.later].t
                    ),
                ),
                None => (false, "s_td_int never decreases".to_string()),
            };
            checks.push(Check::new(format!("{l}_s_td_int_non_monotonic"), passed, detail));
        }
    }
    Ok(ScenarioOutput { artifacts, checks })
}

fn monotonicity_checks(label: &str, series: &MomentSeries) -> Result<Vec<Check>> {
    let td = step_changes(series, Observable::STd)?;
    let td_bad = td.iter().filter(|c| c.value < -3.0 * c.se).count();
    let ent = step_changes(series, Observable::SEntAvg)?;
    let ent_bad = ent.iter().filter(|c| c.value > 3.0 * c.se).count();
    Ok(vec![
        Check::new(
            format!("{label}_s_td_non_decreasing"),
            td_bad == 0,
            format!("{td_bad} steps decrease by more than 3·SE"),
        ),
        Check::new(
            format!("{label}_s_ent_avg_non_increasing"),
            ent_bad == 0,
            format!("{ent_bad} steps increase by more than 3·SE"),
        ),
    ])
}

fn interrupt(cfg: &ResolvedConfig) -> Result<ScenarioOutput> {
    let t_last = cfg.t_interrupt.iter().copied().fold(0.0, f64::max);
    let mut ens = cfg.ensemble(cfg.noise, 0);
    // The grid needs at least one interval even when only t = 0 is asked for.
    ens.t_max = (t_last / ens.record_every).round().max(1.0) * ens.record_every;
    let series = run_ensemble(&ens)?;
    let target = binary_entropy(cfg.alpha0_sq);

    let columns = [
        "tJ[1]",
        "pre_s_td[nat]",
        "pre_s_td_se[nat]",
        "pre_s_ent_avg[nat]",
        "pre_s_ent_avg_se[nat]",
        "pre_s_td_int[nat]",
        "pre_s_td_int_se[nat]",
        "weight[1]",
        "weight_se[1]",
        "post_s_td[nat]",
        "post_s_td_se[nat]",
        "post_s_ent_avg[nat]",
    ];
    let mut table = Table::new(SCHEMA_INTERRUPT, columns.iter().map(|s| s.to_string()).collect());
    let mut consistent = true;
    let mut white_bad = 0;
    for &t in &cfg.t_interrupt {
        let k = series.record_index(t)?;
        let m = series.moments(k);
        let pre_td = jackknife_at(&series, k, Observable::STd)?;
        let pre_ent = jackknife_at(&series, k, Observable::SEntAvg)?;
        let pre_int = jackknife_at(&series, k, Observable::STdInt)?;
        let weight = jackknife_at(&series, k, Observable::Weight)?;
        // Projection keeps the populations and removes every coherence.
        let projected = DensityMatrix2::diagonal(m.weight)?;
        let post_td = von_neumann_entropy(&projected)?;
        let local = interrupt_entropy((projected.rho00, projected.rho11))?;
        consistent &= (post_td - local).abs() <= 1e-12;
        // post s_td is the same function of the populations as s_td_int
        let post_se = pre_int.se;
        if cfg.noise == NoiseKind::White && (post_td - target).abs() > 3.0 * post_se {
            white_bad += 1;
        }
        table.push(vec![
            t * cfg.j,
            pre_td.value,
            pre_td.se,
            pre_ent.value,
            pre_ent.se,
            pre_int.value,
            pre_int.se,
            weight.value,
            weight.se,
            post_td,
            post_se,
            0.0,
        ]);
    }
    let mut checks = vec![Check::new(
        "post_projection_matches_populations",
        consistent,
        "post-projection s_td equals the binary entropy of E|α|²",
    )];
    if cfg.noise == NoiseKind::White {
        checks.push(Check::new(
            "white_post_projection_constant",
            white_bad == 0,
            format!("{white_bad} interrupt times beyond 3·SE of {target:.6}"),
        ));
    }
    Ok(ScenarioOutput {
        artifacts: vec![csv(None, &table)],
        checks,
    })
}

/// Wilson score interval for `successes` out of `n` at `z` standard deviations.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    // The closed form reaches 0 or 1 only up to rounding at the extremes.
    let low = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let high = if p == 1.0 { 1.0 } else { (centre + half).min(1.0) };
    (low, high)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BornSummary {
    pub noise: NoiseKind,
    pub n_traj: usize,
    pub n_00: u64,
    pub n_11: u64,
    pub n_unresolved: u64,
    /// `n_00 / (n_00 + n_11)`; absent when nothing resolved.
    pub p_hat: Option<f64>,
    pub ci_low: f64,
    pub ci_high: f64,
    pub z: f64,
    pub expected: f64,
    pub passed: bool,
    /// `"ok"`, or `"warning"` when more than 1% of trajectories are unresolved.
    pub status: String,
}

pub const BORN_Z: f64 = 3.0;

pub fn born_summary(cfg: &ResolvedConfig, series: &MomentSeries) -> BornSummary {
    let (n_00, n_11) = series.outcome_counts(series.len() - 1);
    let resolved = n_00 + n_11;
    let n_unresolved = cfg.n_traj as u64 - resolved;
    let p_hat = (resolved > 0).then(|| n_00 as f64 / resolved as f64);
    let (ci_low, ci_high) = wilson_interval(n_00, resolved, BORN_Z);
    let passed = resolved > 0 && (ci_low..=ci_high).contains(&cfg.alpha0_sq);
    let status = if n_unresolved as f64 > 0.01 * cfg.n_traj as f64 {
        "warning"
    } else {
        "ok"
    };
    BornSummary {
        noise: cfg.noise,
        n_traj: cfg.n_traj,
        n_00,
        n_11,
        n_unresolved,
        p_hat,
        ci_low,
        ci_high,
        z: BORN_Z,
        expected: cfg.alpha0_sq,
        passed,
        status: status.into(),
    }
}

fn born(cfg: &ResolvedConfig) -> Result<ScenarioOutput> {
    let series = run_ensemble(&cfg.ensemble(cfg.noise, 0))?;
    let summary = born_summary(cfg, &series);
    let mut bytes = serde_json::to_vec_pretty(&summary).expect("summary serializes");
    bytes.push(b'\n');
    let checks = vec![Check::new(
        "born_rule",
        summary.passed,
        format!(
            "P(|00⟩) = {:.5} in [{:.5}, {:.5}], expected {}; {} unresolved ({})",
            summary.p_hat.unwrap_or(f64::NAN),
            summary.ci_low,
            summary.ci_high,
            summary.expected,
            summary.n_unresolved,
            summary.status
        ),
    )];
    Ok(ScenarioOutput {
        artifacts: vec![Artifact {
            suffix: None,
            extension: "json",
            bytes,
        }],
        checks,
    })
}

fn dephasing(cfg: &ResolvedConfig) -> Result<ScenarioOutput> {
    let series = run_ensemble(&cfg.ensemble(NoiseKind::White, 1))?;
    let records = entropy_series(&series)?;
    let errors = entropy_errors(&series)?;
    let reference = dephasing_reference(cfg.alpha0_sq, &cfg.dephasing(), &series.times_j())?;
    let reference_records: Vec<_> = reference.iter().map(|(_, r)| *r).collect();

    let populations_fixed = reference.iter().all(|(rho, _)| rho.rho00 == cfg.alpha0_sq);
    let weight_bad = changes_from_initial(&series, Observable::Weight)?
        .iter()
        .filter(|c| c.value.abs() > 3.0 * c.se)
        .count();
    let int_bad = records
        .iter()
        .zip(&reference_records)
        .zip(&errors.s_td_int)
        .filter(|((w, d), se)| (w.s_td_int - d.s_td_int).abs() > 3.0 * **se)
        .count();
    let last = records.len() - 1;
    let gap = reference_records[last].s_ent_avg - records[last].s_ent_avg;
    let needed = (0.9 * binary_entropy(cfg.alpha0_sq)).min(0.5);

    let checks = vec![
        Check::new(
            "dephasing_populations_constant",
            populations_fixed,
            format!("reference populations fixed at {}", cfg.alpha0_sq),
        ),
        Check::new(
            "white_populations_match",
            weight_bad == 0,
            format!("{weight_bad} records with E|α|² beyond 3·SE of the reference"),
        ),
        Check::new(
            "s_td_int_indistinguishable",
            int_bad == 0,
            format!("{int_bad} records with s_td_int beyond 3·SE of the reference"),
        ),
        Check::new(
            "s_ent_avg_distinguishable",
            gap > needed,
            format!("late-time s_ent_avg gap {gap:.4} (needs > {needed:.4})"),
        ),
    ];
    Ok(ScenarioOutput {
        artifacts: vec![
            csv(Some("reference"), &entropy_table(&reference_records, None)),
            csv(Some("white"), &entropy_table(&records, Some(&errors))),
        ],
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_interval_contains_estimate() {
        let (lo, hi) = wilson_interval(75_000, 100_000, 3.0);
        assert!(lo < 0.75 && 0.75 < hi);
        assert!(hi - lo < 0.01);
        assert_eq!(wilson_interval(10, 10, 3.0).1, 1.0);
        assert_eq!(wilson_interval(300, 300, 3.0).1, 1.0);
        assert_eq!(wilson_interval(0, 300, 3.0).0, 0.0);
    }
}
