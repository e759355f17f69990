//! Run configuration: one strict JSON document per invocation.
//!
//! Frequencies and rates are read in the document's `unit`; delays are in
//! `1/κ` for `kappa_units` and in ns for `ghz_2pi`. The Monte-Carlo and bench
//! sections are always in `κ` units.

use std::path::Path;

use cqed_core::bench::BenchConfig;
use cqed_core::montecarlo::MCConfig;
use cqed_core::oracle::DriveConfig;
use cqed_core::{Emitter, IdenticalParams, SystemParams, UnitTag};
use serde::Deserialize;

use crate::CliError;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub unit: UnitTag,
    #[serde(default)]
    pub system: Option<SystemSpec>,
    #[serde(default)]
    pub omega_grid: Option<GridSpec>,
    /// Single drive frequency for `g2tau` and the delayed part of `validate`.
    #[serde(default)]
    pub omega_l: Option<f64>,
    #[serde(default)]
    pub tau_grid: Option<TauGrid>,
    /// Emitter counts for an identical-emitter sweep; one output per entry.
    #[serde(default)]
    pub n_sweep: Option<Vec<usize>>,
    #[serde(default)]
    pub drive: Option<DriveSpec>,
    #[serde(default)]
    pub mc: Option<MCConfig>,
    #[serde(default)]
    pub bench: Option<BenchConfig>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub omega_c: f64,
    pub kappa_b: f64,
    pub kappa_c: f64,
    #[serde(default)]
    pub emitters: Vec<EmitterSpec>,
    /// Shorthand for `n` copies of one emitter; excludes `emitters`.
    #[serde(default)]
    pub identical: Option<IdenticalSpec>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmitterSpec {
    pub omega: f64,
    pub gamma: f64,
    pub g: f64,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdenticalSpec {
    pub n: usize,
    pub omega: f64,
    pub gamma: f64,
    pub g: f64,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauGrid {
    pub max: f64,
    pub points: usize,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSpec {
    /// Drive strength in `κ` units.
    pub omega: f64,
    pub n_max: usize,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), CliError> {
        if let Some(g) = &self.omega_grid {
            let finite = g.min.is_finite() && g.max.is_finite();
            if g.points == 0 || !finite || g.points > 1 && g.max <= g.min {
                return Err(bad("omega_grid must be nonempty and increasing"));
            }
        }
        if let Some(t) = &self.tau_grid {
            if t.points == 0 || !t.max.is_finite() || t.max < 0.0 || t.points > 1 && t.max == 0.0 {
                return Err(bad("tau_grid must be nonempty and increasing from 0"));
            }
        }
        if let Some(s) = &self.system {
            if s.identical.is_some() && !s.emitters.is_empty() {
                return Err(bad("system: give either `emitters` or `identical`, not both"));
            }
        }
        if let Some(ns) = &self.n_sweep {
            if ns.is_empty() {
                return Err(bad("n_sweep must not be empty"));
            }
            if self.system.as_ref().is_none_or(|s| s.identical.is_none()) {
                return Err(bad("n_sweep needs an `identical` system"));
            }
        }
        Ok(())
    }

    pub fn system_spec(&self) -> Result<&SystemSpec, CliError> {
        self.system.as_ref().ok_or_else(|| bad("missing `system` section"))
    }

    /// Total `κ` in the document's unit; converts frequencies to `κ` units.
    pub fn kappa(&self) -> Result<f64, CliError> {
        let s = self.system_spec()?;
        Ok(s.kappa_b + s.kappa_c)
    }

    /// Conversion from document delays to `1/κ`.
    pub fn tau_scale(&self) -> Result<f64, CliError> {
        let k = self.kappa()?;
        Ok(match self.unit {
            UnitTag::KappaUnits => 1.0,
            UnitTag::Ghz2Pi => std::f64::consts::TAU * k,
        })
    }

    /// The configured system, optionally with `n` overriding the `identical` count.
    pub fn params(&self, n: Option<usize>, kappa_c_factor: f64) -> Result<SystemParams, CliError> {
        let s = self.system_spec()?;
        let emitters = match &s.identical {
            Some(id) => vec![Emitter { omega: id.omega, gamma: id.gamma, g: id.g }; n.unwrap_or(id.n)],
            None => s.emitters.iter().map(|e| Emitter { omega: e.omega, gamma: e.gamma, g: e.g }).collect(),
        };
        SystemParams::new(s.omega_c, s.kappa_b, s.kappa_c * kappa_c_factor, emitters, self.unit).map_err(|e| bad(e.to_string()))
    }

    pub fn identical_params(&self) -> Result<IdenticalParams, CliError> {
        let p = self.params(None, 1.0)?;
        IdenticalParams::from_system(&p).ok_or_else(|| bad("identical-limits needs an `identical` system with at least one emitter"))
    }

    /// Frequency grid in `κ` units.
    pub fn omega_grid(&self) -> Result<Vec<f64>, CliError> {
        let g = self.omega_grid.ok_or_else(|| bad("missing `omega_grid`"))?;
        let k = self.kappa()?;
        Ok(cqed_core::scattering::linspace(g.min / k, g.max / k, g.points))
    }

    pub fn omega_l(&self) -> Result<f64, CliError> {
        Ok(self.omega_l.ok_or_else(|| bad("missing `omega_l`"))? / self.kappa()?)
    }

    /// Delays in `1/κ`.
    pub fn taus(&self) -> Result<Vec<f64>, CliError> {
        let t = self.tau_grid.ok_or_else(|| bad("missing `tau_grid`"))?;
        let s = self.tau_scale()?;
        Ok(cqed_core::scattering::linspace(0.0, t.max * s, t.points))
    }

    pub fn drive(&self) -> DriveConfig {
        match self.drive {
            Some(d) => DriveConfig { omega: d.omega, n_max: d.n_max, pair_cutoff: Some(d.n_max) },
            None => DriveConfig::default(),
        }
    }
}
