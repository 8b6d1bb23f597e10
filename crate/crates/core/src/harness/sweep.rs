use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{
    advance, check_blowup, fmt_row, initial_state, state_diagnostics, step_plan, write_csv, write_json, Formulation,
    RunConfig,
};
use crate::error::{Error, Result};
use crate::gpv::{
    compose_approximation, extract_gpv, extract_gpv_unchecked, filter_profile, filter_vector, limit_from_gpv,
    reconstruct_primitive_unchecked,
};
use crate::grid::ChannelGrid;
use crate::init::{generate_initial, InitialData};
use crate::integrate::TimeStep;
use crate::norms::{diff_norm, profile_sobolev_norm, vector_sobolev_norm};
use crate::snapshot::AnyState;
use crate::spectral::Channel;
use crate::state::{DiagnosticsRecord, LimitState};

/// One ε of a sweep. Errors are measured at `t_end`; the `sup_` columns
/// are maxima over the sampled comparison times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    #[serde(rename = "err_phi_H1")]
    pub err_phi_h1: f64,
    #[serde(rename = "err_psi_H1")]
    pub err_psi_h1: f64,
    #[serde(rename = "err_z_H2")]
    pub err_z_h2: f64,
    #[serde(rename = "err_theta_H2")]
    pub err_theta_h2: f64,
    #[serde(rename = "err_v_H2")]
    pub err_v_h2: f64,
    #[serde(rename = "sup_E_frak")]
    pub sup_e_frak: f64,
    #[serde(rename = "sup_err_phi_H1")]
    pub sup_err_phi_h1: f64,
    #[serde(rename = "sup_err_psi_H1")]
    pub sup_err_psi_h1: f64,
    #[serde(rename = "sup_err_z_H2")]
    pub sup_err_z_h2: f64,
    pub dt: f64,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str = "eps,err_phi_H1,err_psi_H1,err_z_H2,err_theta_H2,err_v_H2,sup_E_frak,sup_err_phi_H1,sup_err_psi_H1,sup_err_z_H2,dt";

    fn values(&self) -> [f64; 11] {
        [
            self.eps,
            self.err_phi_h1,
            self.err_psi_h1,
            self.err_z_h2,
            self.err_theta_h2,
            self.err_v_h2,
            self.sup_e_frak,
            self.sup_err_phi_h1,
            self.sup_err_psi_h1,
            self.sup_err_z_h2,
            self.dt,
        ]
    }

    pub fn to_csv_row(&self) -> String {
        fmt_row(&self.values())
    }

    pub fn from_csv_row(row: &str) -> Result<Self> {
        let v: Vec<f64> = row
            .trim()
            .split(',')
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad CSV value {s:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        if v.len() != 11 {
            return Err(Error::Config(format!("expected 11 CSV columns, got {}", v.len())));
        }
        Ok(Self {
            eps: v[0],
            err_phi_h1: v[1],
            err_psi_h1: v[2],
            err_z_h2: v[3],
            err_theta_h2: v[4],
            err_v_h2: v[5],
            sup_e_frak: v[6],
            sup_err_phi_h1: v[7],
            sup_err_psi_h1: v[8],
            sup_err_z_h2: v[9],
            dt: v[10],
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepMeta {
    pub grid: ChannelGrid,
    pub t_end: f64,
    pub dt_policy: TimeStep,
    pub seed: Option<u64>,
    pub samples: usize,
    pub formulation: Formulation,
    pub initial_data: InitialData,
    /// `fast_filter` (envelopes from the initial data) or `zero`.
    pub limit_envelopes: String,
    pub limit_dt: f64,
    /// `max_ε sup_t 𝔈 / min_ε sup_t 𝔈`.
    pub uniform_bound_ratio: f64,
    /// Whether the ratio stays within 4.
    pub uniform_bound_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub metadata: SweepMeta,
    /// Sorted by ε, largest first.
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(SweepRow::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.to_csv_row());
            s.push('\n');
        }
        s
    }

    pub fn rows_from_csv(text: &str) -> Result<Vec<SweepRow>> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == SweepRow::CSV_HEADER => {}
            _ => return Err(Error::Config("missing sweep CSV header".into())),
        }
        lines
            .filter(|l| !l.trim().is_empty())
            .map(SweepRow::from_csv_row)
            .collect()
    }
}

const UNIFORM_BOUND: f64 = 4.0;

/// Limit trajectory sampled at `t = s·t_end/samples`, `s = 0..=samples`.
pub(crate) struct LimitSamples {
    pub states: Vec<LimitState>,
    pub dt: f64,
}

fn sample_limit(
    ch: &Channel,
    cfg: &RunConfig,
    l0: LimitState,
    p0: &crate::state::PrimitiveState,
) -> Result<LimitSamples> {
    let (n, dt) = step_plan(ch, p0, None, &cfg.integrator, cfg.end_time(), cfg.samples)?;
    let mut states = vec![l0];
    for _ in 0..cfg.samples {
        let mut s = AnyState::Limit(states.last().expect("nonempty").clone());
        for _ in 0..n {
            s = advance(ch, &s, dt, &cfg.integrator)?.0;
        }
        match s {
            AnyState::Limit(l) => states.push(l),
            _ => unreachable!("limit stepper returns limit states"),
        }
    }
    Ok(LimitSamples { states, dt })
}

/// `[Φ H¹, Ψ₊ H¹, Z₊ H², θ H², v H²]` distances between an ε-state and the
/// limit state at the same time.
fn distances(ch: &Channel, s: &AnyState, l: &LimitState, eps: f64) -> Result<[f64; 5]> {
    let (p, g) = match s {
        AnyState::Gpv(g) => (reconstruct_primitive_unchecked(ch, g), g.clone()),
        AnyState::Primitive(p) => (p.clone(), extract_gpv_unchecked(ch, p)),
        AnyState::Limit(_) => return Err(Error::Config("sweep members must be ε-formulations".into())),
    };
    let tau = g.t / eps;
    let a = compose_approximation(ch, l, g.t, eps)?;
    let psi = vector_sobolev_norm(ch, &filter_vector(&g.psi, tau).sub(&l.psi), 1)?;
    let z = profile_sobolev_norm(ch, &filter_profile(&g.z, tau).sub(&l.z), 2)?;
    let v = (diff_norm(ch, &p.v.x, &a.v.x, 2).powi(2) + diff_norm(ch, &p.v.y, &a.v.y, 2).powi(2)).sqrt();
    Ok([
        diff_norm(ch, &g.phi, &l.phi, 1),
        psi,
        z,
        diff_norm(ch, &p.theta, &a.theta, 2),
        v,
    ])
}

fn run_member(ch: &Channel, cfg: &RunConfig, eps: f64, limit: &LimitSamples, dir: &Path) -> Result<SweepRow> {
    let p0 = generate_initial(ch, &cfg.initial_data, eps)?;
    let (n, dt) = step_plan(ch, &p0, Some(eps), &cfg.integrator, cfg.end_time(), cfg.samples)?;
    let mut state = initial_state(ch, p0, cfg.formulation)?;
    let d0 = state_diagnostics(ch, &state, eps)?;
    let mut diag = vec![d0];
    let mut sup = [0.0f64; 3];
    let mut last = [0.0; 5];
    for l in &limit.states[1..] {
        for _ in 0..n {
            state = advance(ch, &state, dt, &cfg.integrator)?.0;
        }
        let d = state_diagnostics(ch, &state, eps)?;
        check_blowup(&d, d0.e_frak)?;
        diag.push(d);
        last = distances(ch, &state, l, eps)?;
        for k in 0..3 {
            sup[k] = sup[k].max(last[k]);
        }
    }
    std::fs::create_dir_all(dir)?;
    write_csv(
        &dir.join("diagnostics.csv"),
        DiagnosticsRecord::CSV_HEADER,
        diag.iter().map(DiagnosticsRecord::to_csv_row),
    )?;
    log::info!(
        "eps = {eps}: {} steps of {dt:.3e}, Φ error {:.3e}",
        n * cfg.samples,
        last[0]
    );
    Ok(SweepRow {
        eps,
        err_phi_h1: last[0],
        err_psi_h1: last[1],
        err_z_h2: last[2],
        err_theta_h2: last[3],
        err_v_h2: last[4],
        sup_e_frak: diag.iter().map(|d| d.e_frak).fold(0.0, f64::max),
        sup_err_phi_h1: sup[0],
        sup_err_psi_h1: sup[1],
        sup_err_z_h2: sup[2],
        dt,
    })
}

pub(crate) struct SweepRun {
    pub report: SweepReport,
    pub limit: LimitSamples,
}

/// Shared engine of `sweep` and `qg-compare`: one limit run, then every ε
/// member in a pool of `jobs` threads. With `zero_envelopes` the limit run
/// is classical QG.
pub(crate) fn sweep_core(cfg: &RunConfig, jobs: usize, zero_envelopes: bool, min_eps: usize) -> Result<SweepRun> {
    cfg.validate()?;
    if cfg.formulation == Formulation::Limit {
        return Err(Error::Config(
            "sweep members run the ε-system; use formulation gpv or primitive".into(),
        ));
    }
    let mut eps = cfg.eps.values();
    if eps.len() < min_eps {
        return Err(Error::Config(format!(
            "a sweep needs at least {min_eps} eps values, got {}",
            eps.len()
        )));
    }
    eps.sort_by(|a, b| b.total_cmp(a));
    if eps.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config("duplicate eps values".into()));
    }
    let ch = Channel::new(cfg.grid)?;
    let p0 = generate_initial(&ch, &cfg.initial_data, eps[0])?;
    let mut l0 = limit_from_gpv(&extract_gpv(&ch, &p0)?);
    if zero_envelopes {
        l0.psi = crate::field::CHVectorField::zeros(&cfg.grid);
        l0.z = crate::field::VProfile::zeros(&cfg.grid);
    }
    let limit = sample_limit(&ch, cfg, l0, &p0)?;

    let out = cfg.out_dir();
    std::fs::create_dir_all(&out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
    let rows: Vec<Result<SweepRow>> = pool.install(|| {
        eps.par_iter()
            .map(|&e| run_member(&ch, cfg, e, &limit, &out.join(format!("eps_{e}"))))
            .collect()
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;

    let sup: Vec<f64> = rows.iter().map(|r| r.sup_e_frak).collect();
    let (lo, hi) = sup
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    let ratio = if hi == 0.0 { 1.0 } else { hi / lo };
    let ok = ratio.is_finite() && ratio <= UNIFORM_BOUND;
    if !ok {
        log::warn!("sup 𝔈 varies by a factor {ratio:.3} across the sweep (bound {UNIFORM_BOUND})");
    }
    let report = SweepReport {
        metadata: SweepMeta {
            grid: cfg.grid,
            t_end: cfg.end_time(),
            dt_policy: cfg.integrator.dt,
            seed: cfg.seed(),
            samples: cfg.samples,
            formulation: cfg.formulation,
            initial_data: cfg.initial_data.clone(),
            limit_envelopes: if zero_envelopes { "zero" } else { "fast_filter" }.into(),
            limit_dt: limit.dt,
            uniform_bound_ratio: ratio,
            uniform_bound_ok: ok,
        },
        rows,
    };
    Ok(SweepRun { report, limit })
}

pub(crate) fn write_sweep_files(out: &Path, stem: &str, report: &SweepReport) -> Result<()> {
    std::fs::write(out.join(format!("{stem}.csv")), report.to_csv())?;
    write_json(&out.join(format!("{stem}.json")), report)?;
    let errors = ["err_phi_H1", "err_psi_H1", "err_z_H2", "err_theta_H2", "err_v_H2"];
    let mut series: Vec<_> = errors
        .iter()
        .map(|c| json!({"column": c, "role": "error", "scale": "log"}))
        .collect();
    series.push(json!({"column": "sup_E_frak", "role": "bound", "scale": "linear"}));
    let manifest = json!({
        "csv": format!("{stem}.csv"),
        "x": {"column": "eps", "scale": "log", "direction": "descending"},
        "series": series,
    });
    write_json(&out.join(format!("{stem}_plot.json")), &manifest)
}

/// Runs the ε-system for every ε of the configuration (at least three)
/// against one limit run from the projected initial data, and writes
/// `sweep.csv`, `sweep.json` and `sweep_plot.json`.
pub fn run_eps_sweep(cfg: &RunConfig, jobs: usize) -> Result<SweepReport> {
    let run = sweep_core(cfg, jobs, false, 3)?;
    write_sweep_files(&cfg.out_dir(), "sweep", &run.report)?;
    Ok(run.report)
}
