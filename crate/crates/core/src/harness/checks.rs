use serde::{Deserialize, Serialize};

use super::sweep::{sweep_core, write_sweep_files, SweepReport};
use super::{advance, initial_state, step_plan, write_json, Formulation, RunConfig};
use crate::error::{Error, Result};
use crate::gpv::{extract_gpv_unchecked, fast_filter, reconstruct_primitive};
use crate::init::{generate_initial, InitialData};
use crate::integrate::{rotation_phase, rotation_phase_profile, IntegratorConfig};
use crate::snapshot::AnyState;
use crate::spectral::Channel;
use crate::state::{GpvState, PrimitiveState};

/// Largest deviations from the closed-form linear solution over the run,
/// each relative to the sup norm of the matching initial quantity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearReport {
    pub eps: f64,
    pub formulation: Formulation,
    pub steps: usize,
    pub dt: f64,
    pub t_end: f64,
    pub phi_drift: f64,
    /// Both lid traces.
    pub h_drift: f64,
    pub psi_plus_drift: f64,
    pub z_plus_drift: f64,
    /// `(v, w, θ)` against the reconstruction of the rotated initial GPV state.
    pub primitive_error: f64,
    /// `w` against `Δ_D⁻¹ div_h Ψ_l(t)`.
    pub w_error: f64,
}

fn rel(d: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        d / scale
    } else {
        d
    }
}

fn prim_max(p: &PrimitiveState) -> f64 {
    p.v.max_abs().max(p.w.max_abs()).max(p.theta.max_abs())
}

fn prim_diff(a: &PrimitiveState, b: &PrimitiveState) -> f64 {
    a.v.max_abs_diff(&b.v)
        .max(a.w.max_abs_diff(&b.w))
        .max(a.theta.max_abs_diff(&b.theta))
}

/// Runs with every nonlinear term off and compares each step against the
/// closed-form solution: `Φ`, `H₀`, `Hₕ` frozen, `Ψ` and `Z` rotated by
/// `−t/ε`. Writes `linear_check.json`.
pub fn run_linear_validation(cfg: &RunConfig) -> Result<LinearReport> {
    let cfg = RunConfig {
        integrator: IntegratorConfig {
            nonlinear: false,
            ..cfg.integrator
        },
        ..cfg.clone()
    };
    cfg.validate()?;
    if cfg.formulation == Formulation::Limit {
        return Err(Error::Config(
            "the linear check runs the ε-system; use gpv or primitive".into(),
        ));
    }
    let eps = cfg.eps.single()?;
    let t_end = cfg.end_time();
    let ch = Channel::new(cfg.grid)?;
    let p0 = generate_initial(&ch, &cfg.initial_data, eps)?;
    let (steps, dt) = step_plan(&ch, &p0, Some(eps), &cfg.integrator, t_end, 1)?;
    let mut state = initial_state(&ch, p0, cfg.formulation)?;
    let g0 = gpv_of(&ch, &state);
    let f0 = fast_filter(&g0);
    let p_ref = reconstruct_primitive(&ch, &g0)?;
    let scale_phi = g0.phi.max_abs();
    let scale_h = g0.h0.max_abs().max(g0.hh.max_abs());
    let scale_psi = f0.psi_plus.max_abs();
    let scale_z = f0.z_plus.max_abs();
    let scale_p = prim_max(&p_ref);
    let scale_w = p_ref.w.max_abs();

    let mut r = LinearReport {
        eps,
        formulation: cfg.formulation,
        steps,
        dt,
        t_end,
        phi_drift: 0.0,
        h_drift: 0.0,
        psi_plus_drift: 0.0,
        z_plus_drift: 0.0,
        primitive_error: 0.0,
        w_error: 0.0,
    };
    for _ in 0..steps {
        state = advance(&ch, &state, dt, &cfg.integrator)?.0;
        let t = state.t();
        let g = gpv_of(&ch, &state);
        let f = fast_filter(&g);
        r.phi_drift = r.phi_drift.max(rel(g.phi.max_abs_diff(&g0.phi), scale_phi));
        r.h_drift = r
            .h_drift
            .max(rel(g.h0.max_abs_diff(&g0.h0).max(g.hh.max_abs_diff(&g0.hh)), scale_h));
        r.psi_plus_drift = r
            .psi_plus_drift
            .max(rel(f.psi_plus.max_abs_diff(&f0.psi_plus), scale_psi));
        r.z_plus_drift = r.z_plus_drift.max(rel(f.z_plus.max_abs_diff(&f0.z_plus), scale_z));

        let exact = GpvState {
            psi: rotation_phase(&g0.psi, t / eps),
            z: rotation_phase_profile(&g0.z, t / eps),
            t,
            ..g0.clone()
        };
        let p_exact = reconstruct_primitive(&ch, &exact)?;
        let p = match &state {
            AnyState::Primitive(p) => p.clone(),
            _ => reconstruct_primitive(&ch, &g)?,
        };
        r.primitive_error = r.primitive_error.max(rel(prim_diff(&p, &p_exact), scale_p));
        let w_l = ch.inv_laplace_dirichlet(&ch.div_h(&exact.psi))?;
        r.w_error = r.w_error.max(rel(p.w.max_abs_diff(&w_l), scale_w));
    }
    let out = cfg.out_dir();
    std::fs::create_dir_all(&out)?;
    write_json(&out.join("linear_check.json"), &r)?;
    Ok(r)
}

fn gpv_of(ch: &Channel, s: &AnyState) -> GpvState {
    match s {
        AnyState::Gpv(g) => g.clone(),
        AnyState::Primitive(p) => extract_gpv_unchecked(ch, p),
        AnyState::Limit(_) => unreachable!("ε-formulations only"),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QgReport {
    pub sweep: SweepReport,
    /// Least-squares slope of `log err_phi_H1` against `log ε`; absent when
    /// some error is exactly zero.
    pub phi_order: Option<f64>,
    pub phi_error_decreasing: bool,
    /// Largest fast-error entry over all rows.
    pub fast_error_max: f64,
    /// `max_t |max|Φ_p(t)| − max|Φ_p(0)|| / max|Φ_p(0)|` of the QG run.
    pub limit_phi_max_drift: f64,
}

/// Slope of the least-squares line through `(ln x, ln y)`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || x.len() != y.len() || x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Balanced data only: the ε-system for each ε against classical QG (the
/// limit system with zero envelopes). Writes `qg_compare.{csv,json}` and
/// the plot manifest.
pub fn run_wellprepared_comparison(cfg: &RunConfig, jobs: usize) -> Result<QgReport> {
    if !matches!(cfg.initial_data, InitialData::Balanced { .. }) {
        return Err(Error::Config("qg-compare needs balanced initial data".into()));
    }
    let run = sweep_core(cfg, jobs, true, 2)?;
    let rows = &run.report.rows;
    let eps: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    let phi: Vec<f64> = rows.iter().map(|r| r.err_phi_h1).collect();
    let fast_error_max = rows
        .iter()
        .map(|r| r.err_psi_h1.max(r.err_z_h2).max(r.sup_err_psi_h1).max(r.sup_err_z_h2))
        .fold(0.0, f64::max);
    let m0 = run.limit.states[0].phi.max_abs();
    let drift = run
        .limit
        .states
        .iter()
        .map(|l| (l.phi.max_abs() - m0).abs())
        .fold(0.0, f64::max);
    let report = QgReport {
        phi_order: loglog_slope(&eps, &phi),
        phi_error_decreasing: phi.windows(2).all(|w| w[1] < w[0]),
        fast_error_max,
        limit_phi_max_drift: rel(drift, m0),
        sweep: run.report,
    };
    let out = cfg.out_dir();
    write_sweep_files(&out, "qg_compare", &report.sweep)?;
    write_json(&out.join("qg_compare.json"), &report)?;
    Ok(report)
}
