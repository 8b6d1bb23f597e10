//! Experiment drivers: run configuration, single runs, ε-sweeps, the linear
//! and well-prepared checks, and snapshot tools. Every driver writes its
//! artifacts under one output directory and also returns them in memory.

mod checks;
mod simulate;
mod sweep;
mod tools;

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gpv::{
    compose_approximation, extract_gpv, extract_gpv_unchecked, limit_from_gpv, reconstruct_primitive_unchecked,
};
use crate::grid::ChannelGrid;
use crate::init::InitialData;
use crate::integrate::{stable_dt, step_eps_gpv, step_eps_primitive, step_limit, IntegratorConfig, StepLog, TimeStep};
use crate::norms::diagnostics;
use crate::snapshot::AnyState;
use crate::spectral::Channel;
use crate::state::{limit_compat_residual, DiagnosticsRecord, PrimitiveState};

pub use checks::{loglog_slope, run_linear_validation, run_wellprepared_comparison, LinearReport, QgReport};
pub use simulate::{run_simulation, RunOutcome, RunSummary};
pub use sweep::{run_eps_sweep, SweepMeta, SweepReport, SweepRow};
pub use tools::{decompose, inspect, DecomposeSummary};

/// Environment variable consulted when no output directory is configured.
pub const OUT_DIR_ENV: &str = "GQG_OUT_DIR";

/// A run aborts once `𝔈` exceeds this multiple of its initial value.
pub const BLOWUP_FACTOR: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsSpec {
    One(f64),
    Many(Vec<f64>),
}

impl EpsSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            EpsSpec::One(e) => vec![*e],
            EpsSpec::Many(v) => v.clone(),
        }
    }

    /// The single ε of a non-sweep run.
    pub fn single(&self) -> Result<f64> {
        match self.values().as_slice() {
            [e] => Ok(*e),
            v => Err(Error::Config(format!(
                "this driver takes one eps, got {} (use `sweep` for lists)",
                v.len()
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    #[default]
    Gpv,
    Primitive,
    Limit,
}

impl FromStr for Formulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gpv" => Ok(Formulation::Gpv),
            "primitive" => Ok(Formulation::Primitive),
            "limit" => Ok(Formulation::Limit),
            _ => Err(Error::Config(format!(
                "unknown formulation `{s}` (gpv, primitive or limit)"
            ))),
        }
    }
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Diagnostics row every this many steps (the final state always gets one).
    #[serde(default = "one")]
    pub diagnostics_every: usize,
    /// Snapshot every this many steps; 0 writes only the first and last.
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            diagnostics_every: 1,
            snapshot_every: 0,
            out_dir: None,
        }
    }
}

fn default_t_end() -> f64 {
    0.5
}

fn default_samples() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: ChannelGrid,
    pub eps: EpsSpec,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    pub initial_data: InitialData,
    #[serde(default)]
    pub formulation: Formulation,
    #[serde(default)]
    pub outputs: OutputConfig,
    /// Number of evenly spaced comparison times in `(0, t_end]` for sweeps.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad run configuration: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// End time after the integrator override.
    pub fn end_time(&self) -> f64 {
        self.integrator.t_end.unwrap_or(self.t_end)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let eps = self.eps.values();
        if eps.is_empty() {
            return Err(Error::Config("eps list is empty".into()));
        }
        if let Some(e) = eps.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(Error::Config(format!("eps must be positive, got {e}")));
        }
        let t = self.end_time();
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::Config(format!("t_end must be non-negative, got {t}")));
        }
        self.integrator.validate()?;
        self.initial_data.validate(&self.grid)?;
        if self.outputs.diagnostics_every == 0 {
            return Err(Error::Config("diagnostics_every must be at least 1".into()));
        }
        if self.samples == 0 {
            return Err(Error::Config("samples must be at least 1".into()));
        }
        Ok(())
    }

    /// Configured directory, else `$GQG_OUT_DIR`, else `./out`.
    pub fn out_dir(&self) -> PathBuf {
        self.outputs
            .out_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn seed(&self) -> Option<u64> {
        match self.initial_data {
            InitialData::RandomSeeded { seed, .. } => Some(seed),
            _ => None,
        }
    }
}

/// Splits `[0, t_end]` into `segments` equal pieces of `n` uniform steps
/// each, with `dt` no larger than the configured or stable step. Returns
/// `(n, dt)`.
pub fn step_plan(
    ch: &Channel,
    p0: &PrimitiveState,
    eps: Option<f64>,
    cfg: &IntegratorConfig,
    t_end: f64,
    segments: usize,
) -> Result<(usize, f64)> {
    let bound = stable_dt(ch, p0, eps, cfg)?;
    let target = match cfg.dt {
        TimeStep::Auto => bound,
        TimeStep::Fixed(dt) => {
            if dt > bound * (1.0 + 1e-12) {
                return Err(Error::UnstableStep { dt, bound });
            }
            dt
        }
    };
    if t_end == 0.0 {
        return Ok((0, target));
    }
    let seg = t_end / segments as f64;
    let n = ((seg / target) - 1e-9).ceil().max(1.0) as usize;
    Ok((n, seg / n as f64))
}

/// Initial state of the chosen formulation.
pub fn initial_state(ch: &Channel, p0: PrimitiveState, formulation: Formulation) -> Result<AnyState> {
    Ok(match formulation {
        Formulation::Primitive => AnyState::Primitive(p0),
        Formulation::Gpv => AnyState::Gpv(extract_gpv(ch, &p0)?),
        Formulation::Limit => AnyState::Limit(limit_from_gpv(&extract_gpv(ch, &p0)?)),
    })
}

pub fn advance(ch: &Channel, s: &AnyState, dt: f64, cfg: &IntegratorConfig) -> Result<(AnyState, StepLog)> {
    Ok(match s {
        AnyState::Primitive(p) => {
            let (y, log) = step_eps_primitive(ch, p, dt, cfg)?;
            (y.into(), log)
        }
        AnyState::Gpv(g) => {
            let (y, log) = step_eps_gpv(ch, g, dt, cfg)?;
            (y.into(), log)
        }
        AnyState::Limit(l) => {
            let (y, log) = step_limit(ch, l, dt, cfg)?;
            (y.into(), log)
        }
    })
}

/// Diagnostics of any state; limit states are composed with their fast
/// oscillation at `eps` first.
pub fn state_diagnostics(ch: &Channel, s: &AnyState, eps: f64) -> Result<DiagnosticsRecord> {
    Ok(match s {
        AnyState::Primitive(p) => diagnostics(ch, p, &extract_gpv_unchecked(ch, p)),
        AnyState::Gpv(g) => diagnostics(ch, &reconstruct_primitive_unchecked(ch, g), g),
        AnyState::Limit(l) => {
            let p = compose_approximation(ch, l, l.t, eps)?;
            let mut d = diagnostics(ch, &p, &extract_gpv_unchecked(ch, &p));
            d.compat_residual = limit_compat_residual(ch, l);
            d
        }
    })
}

/// `Err` when `𝔈` is non-finite or has grown past [`BLOWUP_FACTOR`].
pub(crate) fn check_blowup(d: &DiagnosticsRecord, e0: f64) -> Result<()> {
    if !d.is_finite() {
        return Err(Error::Instability {
            t: d.t,
            reason: "non-finite diagnostics".into(),
        });
    }
    if e0 > 0.0 && d.e_frak > BLOWUP_FACTOR * e0 {
        return Err(Error::Instability {
            t: d.t,
            reason: format!("energy functional grew from {e0:.6e} to {:.6e}", d.e_frak),
        });
    }
    Ok(())
}

/// Writes `rows` under a header, 17 significant digits per value.
pub(crate) fn write_csv(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> Result<()> {
    let mut text = String::from(header);
    text.push('\n');
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

pub(crate) fn fmt_row(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(",")
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests;
