//! Run configuration: scenario defaults, TOML file sections and flag overrides.
//!
//! Resolution order (later wins): built-in scenario defaults, the file's
//! `[common]` section, the file's `[<scenario>]` section, command-line flags.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::DephasingParams;
use crate::dynamics::ModelParams;
use crate::ensemble::EnsembleConfig;
use crate::error::{Error, Result};
use crate::noise::{FrozenDist, NoiseSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Fig1,
    Fig2,
    Interrupt,
    Born,
    Dephasing,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fig1 => "fig1",
            Scenario::Fig2 => "fig2",
            Scenario::Interrupt => "interrupt",
            Scenario::Born => "born",
            Scenario::Dephasing => "dephasing",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Frozen,
    Ou,
    White,
}

/// Every optional knob; used for file sections and flags alike.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub n_traj: Option<usize>,
    pub alpha0_sq: Option<f64>,
    pub j: Option<f64>,
    pub g: Option<f64>,
    pub lambda: Option<f64>,
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
    pub record_every: Option<f64>,
    pub noise: Option<NoiseKind>,
    pub tau: Option<f64>,
    pub g0: Option<f64>,
    pub stratified: Option<bool>,
    pub gamma: Option<f64>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub t_interrupt: Option<Vec<f64>>,
}

macro_rules! overlay {
    ($self:ident, $other:ident, $($field:ident),*) => {
        $( if $other.$field.is_some() { $self.$field = $other.$field.clone(); } )*
    };
}

impl Overrides {
    pub fn overlay(&mut self, other: &Overrides) {
        overlay!(
            self,
            other,
            n_traj,
            alpha0_sq,
            j,
            g,
            lambda,
            dt,
            t_max,
            record_every,
            noise,
            tau,
            g0,
            stratified,
            gamma,
            seed,
            samples,
            t_interrupt
        );
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub common: Overrides,
    #[serde(default)]
    pub fig1: Overrides,
    #[serde(default)]
    pub fig2: Overrides,
    #[serde(default)]
    pub interrupt: Overrides,
    #[serde(default)]
    pub born: Overrides,
    #[serde(default)]
    pub dephasing: Overrides,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::param("config", format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::param("config", format!("{}: {e}", path.display())))
    }

    pub fn section(&self, scenario: Scenario) -> &Overrides {
        match scenario {
            Scenario::Fig1 => &self.fig1,
            Scenario::Fig2 => &self.fig2,
            Scenario::Interrupt => &self.interrupt,
            Scenario::Born => &self.born,
            Scenario::Dephasing => &self.dephasing,
        }
    }
}

/// Fully materialized configuration, as written to every manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolvedConfig {
    pub scenario: Scenario,
    pub n_traj: usize,
    pub alpha0_sq: f64,
    pub j: f64,
    pub g: f64,
    pub lambda: f64,
    pub dt: f64,
    pub t_max: f64,
    pub record_every: f64,
    pub noise: NoiseKind,
    pub tau: f64,
    pub g0: f64,
    pub stratified: bool,
    pub gamma: f64,
    pub seed: u64,
    pub samples: usize,
    pub t_interrupt: Vec<f64>,
}

pub const DEFAULT_SEED: u64 = 20_240_917;

fn scenario_defaults(scenario: Scenario) -> Overrides {
    let mut o = Overrides {
        n_traj: Some(100_000),
        alpha0_sq: Some(0.75),
        t_max: Some(6.0),
        noise: Some(NoiseKind::Frozen),
        ..Overrides::default()
    };
    match scenario {
        Scenario::Fig1 => o.t_max = Some(10.0),
        Scenario::Fig2 => {}
        Scenario::Interrupt => o.t_interrupt = Some(vec![0.0, 0.5, 1.0, 2.0, 4.0]),
        // Long enough that trajectories starting near the unstable point resolve.
        Scenario::Born => o.t_max = Some(25.0),
        Scenario::Dephasing => {
            o.n_traj = Some(10_000);
            o.noise = Some(NoiseKind::White);
        }
    }
    o
}

impl ResolvedConfig {
    pub fn resolve(scenario: Scenario, file: Option<&ConfigFile>, flags: &Overrides) -> Result<Self> {
        let mut o = scenario_defaults(scenario);
        if let Some(file) = file {
            o.overlay(&file.common);
            o.overlay(file.section(scenario));
        }
        o.overlay(flags);

        let j = o.j.unwrap_or(1.0);
        let lambda = o.lambda.unwrap_or(j);
        let resolved = Self {
            scenario,
            n_traj: o.n_traj.expect("default"),
            alpha0_sq: o.alpha0_sq.expect("default"),
            j,
            g: o.g.unwrap_or(j),
            lambda,
            dt: o.dt.unwrap_or(1e-3 / j),
            t_max: o.t_max.expect("default"),
            record_every: o.record_every.unwrap_or(0.01 / j),
            noise: o.noise.expect("default"),
            tau: o.tau.unwrap_or(1.0 / j),
            g0: o.g0.unwrap_or(1.0),
            stratified: o.stratified.unwrap_or(false),
            // Matches the coherence decay rate 2λ of the white-noise unraveling.
            gamma: o.gamma.unwrap_or(2.0 * lambda),
            seed: o.seed.unwrap_or(DEFAULT_SEED),
            samples: o.samples.unwrap_or(7),
            t_interrupt: o.t_interrupt.unwrap_or_else(|| vec![1.0]),
        };
        resolved.validate()?;
        Ok(resolved)
    }

    pub fn validate(&self) -> Result<()> {
        self.model().validate()?;
        self.noise_spec(self.noise).validate()?;
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::param(
                "gamma",
                format!("must be non-negative, got {}", self.gamma),
            ));
        }
        if self.samples == 0 && self.scenario == Scenario::Fig1 {
            return Err(Error::param("samples", "must be at least 1"));
        }
        if self.scenario == Scenario::Interrupt {
            if self.t_interrupt.is_empty() {
                return Err(Error::param("t_interrupt", "needs at least one time"));
            }
            if let Some(t) = self.t_interrupt.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
                return Err(Error::param("t_interrupt", format!("must be non-negative, got {t}")));
            }
        }
        self.ensemble(self.noise, 0).validate()?;
        Ok(())
    }

    pub fn model(&self) -> ModelParams {
        ModelParams {
            j: self.j,
            g: self.g,
            lambda: self.lambda,
            dt: self.dt,
            hamiltonian_off: true,
        }
    }

    pub fn noise_spec(&self, kind: NoiseKind) -> NoiseSpec {
        match kind {
            NoiseKind::Frozen => NoiseSpec::Frozen {
                dist: FrozenDist::UniformSym,
                stratified: self.stratified,
            },
            NoiseKind::Ou => NoiseSpec::Ou {
                tau: self.tau,
                g0: self.g0,
            },
            NoiseKind::White => NoiseSpec::White,
        }
    }

    /// Ensemble for one noise regime; `stream` offsets the master seed so
    /// that regimes run in one scenario draw from unrelated streams.
    pub fn ensemble(&self, kind: NoiseKind, stream: u64) -> EnsembleConfig {
        EnsembleConfig {
            n_traj: self.n_traj,
            initial_alpha2: self.alpha0_sq,
            model: self.model(),
            noise: self.noise_spec(kind),
            t_max: self.t_max,
            record_every: self.record_every,
            master_seed: self.seed.wrapping_add(stream),
        }
    }

    /// Dephasing rate expressed per unit of `1/J`.
    pub fn dephasing(&self) -> DephasingParams {
        DephasingParams::exponential(self.gamma / self.j)
    }
}
