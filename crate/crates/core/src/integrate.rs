//! Time stepping: integrating-factor RK4 for the ε-system in GPV form,
//! classical RK4 with divergence cleaning for the primitive form, classical
//! RK4 for the limit system, and the step-size rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Elem, HVector, VProfile};
use crate::gpv::project_constraints;
use crate::spectral::Channel;
use crate::state::{GpvState, LimitState, PrimitiveState};
use crate::tendency::{
    gpv_tendency_unchecked, limit_tendency_unchecked, primitive_tendency_unchecked, GpvTendency, LimitTendency,
    PrimitiveTendency,
};

/// Fixed step or `"auto"` (the stability bound of the initial state).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DtRepr", into = "DtRepr")]
pub enum TimeStep {
    Auto,
    Fixed(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum DtRepr {
    Num(f64),
    Text(String),
}

impl TryFrom<DtRepr> for TimeStep {
    type Error = String;

    fn try_from(r: DtRepr) -> std::result::Result<Self, String> {
        match r {
            DtRepr::Num(v) => Ok(TimeStep::Fixed(v)),
            DtRepr::Text(s) if s == "auto" => Ok(TimeStep::Auto),
            DtRepr::Text(s) => Err(format!("dt must be a number or \"auto\", got {s:?}")),
        }
    }
}

impl From<TimeStep> for DtRepr {
    fn from(t: TimeStep) -> Self {
        match t {
            TimeStep::Auto => DtRepr::Text("auto".into()),
            TimeStep::Fixed(v) => DtRepr::Num(v),
        }
    }
}

fn default_cfl() -> f64 {
    0.5
}

fn default_eps_resolution() -> f64 {
    0.5
}

fn default_dt_max() -> f64 {
    0.05
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default = "auto")]
    pub dt: TimeStep,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// `dt ≤ eps_resolution·ε` for the ε-systems.
    #[serde(default = "default_eps_resolution")]
    pub eps_resolution: f64,
    #[serde(default = "default_dt_max")]
    pub dt_max: f64,
    #[serde(default = "default_true")]
    pub constraint_projection: bool,
    /// `false` drops every nonlinear term (linear-regime runs).
    #[serde(default = "default_true")]
    pub nonlinear: bool,
    /// Overrides the run's end time when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
}

fn auto() -> TimeStep {
    TimeStep::Auto
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: TimeStep::Auto,
            cfl: default_cfl(),
            eps_resolution: default_eps_resolution(),
            dt_max: default_dt_max(),
            constraint_projection: true,
            nonlinear: true,
            t_end: None,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if let TimeStep::Fixed(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(Error::Config(format!("dt must be positive, got {dt}")));
            }
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Config(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.eps_resolution > 0.0 && self.eps_resolution.is_finite()) {
            return Err(Error::Config(format!(
                "eps_resolution must be positive, got {}",
                self.eps_resolution
            )));
        }
        if !(self.dt_max > 0.0 && self.dt_max.is_finite()) {
            return Err(Error::Config(format!("dt_max must be positive, got {}", self.dt_max)));
        }
        Ok(())
    }
}

/// Exact propagator of `∂t X + (1/ε)X^⊥ = 0` over `dt`: rotation of
/// `(X₁, X₂)` by the angle `−dt/ε`.
pub fn rotation_phase<T: Elem>(x: &HVector<T>, dt_over_eps: f64) -> HVector<T> {
    let (c, s) = (dt_over_eps.cos(), dt_over_eps.sin());
    let mut out = x.clone();
    ndarray::Zip::from(&mut out.x.data)
        .and(&mut out.y.data)
        .for_each(|a, b| {
            let (x1, x2) = (*a, *b);
            *a = x1 * c + x2 * s;
            *b = x2 * c - x1 * s;
        });
    out
}

pub fn rotation_phase_profile<T: Elem>(x: &VProfile<T>, dt_over_eps: f64) -> VProfile<T> {
    let (c, s) = (dt_over_eps.cos(), dt_over_eps.sin());
    let mut out = x.clone();
    ndarray::Zip::from(&mut out.x).and(&mut out.y).for_each(|a, b| {
        let (x1, x2) = (*a, *b);
        *a = x1 * c + x2 * s;
        *b = x2 * c - x1 * s;
    });
    out
}

/// Advective and ε bounds on the step. Horizontal CFL uses the uniform
/// spacing, vertical CFL the local Chebyshev spacing at each node.
pub fn stable_dt(ch: &Channel, p: &PrimitiveState, eps: Option<f64>, cfg: &IntegratorConfig) -> Result<f64> {
    if !(p.v.is_finite() && p.w.is_finite()) {
        return Err(Error::NonFinite("velocity"));
    }
    let g = &ch.grid;
    let z = g.z_nodes();
    let dz: Vec<f64> = (0..g.nzp())
        .map(|k| {
            let lo = if k > 0 { z[k] - z[k - 1] } else { f64::INFINITY };
            let hi = if k < g.nz { z[k + 1] - z[k] } else { f64::INFINITY };
            lo.min(hi)
        })
        .collect();
    let (dx, dy) = (1.0 / g.nx as f64, 1.0 / g.ny as f64);
    let mut rate: f64 = 0.0;
    for ((i, j, k), &w) in p.w.data.indexed_iter() {
        let r = p.v.x.data[(i, j, k)].abs() / dx + p.v.y.data[(i, j, k)].abs() / dy + w.abs() / dz[k];
        rate = rate.max(r);
    }
    let mut dt = cfg.dt_max;
    // without advection only the ε-resolution rule applies
    if rate > 0.0 && cfg.nonlinear {
        dt = dt.min(cfg.cfl / rate);
    }
    if let Some(eps) = eps {
        dt = dt.min(cfg.eps_resolution * eps);
    }
    Ok(dt)
}

/// Constraint corrections applied after a GPV step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct StepLog {
    pub mean_fix: f64,
    pub compat_fix: f64,
    /// Divergence removed by cleaning (primitive stepper).
    pub div_fix: f64,
}

fn gpv_add(y: &GpvState, h: f64, k: &GpvTendency) -> GpvState {
    GpvState {
        phi: y.phi.axpy(h, &k.dphi),
        psi: y.psi.axpy(h, &k.dpsi),
        h0: y.h0.axpy(h, &k.dh0),
        hh: y.hh.axpy(h, &k.dhh),
        z: y.z.axpy(h, &k.dz),
        t: y.t,
        eps: y.eps,
    }
}

fn gpv_rotate(y: &GpvState, a: f64) -> GpvState {
    GpvState {
        psi: rotation_phase(&y.psi, a),
        z: rotation_phase_profile(&y.z, a),
        ..y.clone()
    }
}

fn tend_rotate(k: &GpvTendency, a: f64) -> GpvTendency {
    GpvTendency {
        dpsi: rotation_phase(&k.dpsi, a),
        dz: rotation_phase_profile(&k.dz, a),
        ..k.clone()
    }
}

/// One integrating-factor RK4 step of the GPV system. The rotation of
/// `Ψ, Z` is applied exactly between stages; `Φ, H₀, Hₕ` are explicit.
pub fn step_eps_gpv(ch: &Channel, g: &GpvState, dt: f64, cfg: &IntegratorConfig) -> Result<(GpvState, StepLog)> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Config(format!("time step must be positive, got {dt}")));
    }
    let nl = cfg.nonlinear;
    let a = dt / g.eps;
    let n = |y: &GpvState| gpv_tendency_unchecked(ch, y, nl);

    let k1 = n(g);
    let k2 = n(&gpv_rotate(&gpv_add(g, dt / 2.0, &k1), a / 2.0));
    let eh = gpv_rotate(g, a / 2.0);
    let k3 = n(&gpv_add(&eh, dt / 2.0, &k2));
    let k4 = n(&gpv_add(&gpv_rotate(g, a), dt, &tend_rotate(&k3, a / 2.0)));

    let mut y = gpv_rotate(g, a);
    y = gpv_add(&y, dt / 6.0, &tend_rotate(&k1, a));
    y = gpv_add(&y, dt / 3.0, &tend_rotate(&k2, a / 2.0));
    y = gpv_add(&y, dt / 3.0, &tend_rotate(&k3, a / 2.0));
    y = gpv_add(&y, dt / 6.0, &k4);
    y.t = g.t + dt;

    let mut log = StepLog::default();
    if cfg.constraint_projection {
        let (m, c) = project_constraints(ch, &mut y);
        log.mean_fix = m;
        log.compat_fix = c;
        log::debug!("t = {:.6}: constraint projection mean {m:.3e}, compat {c:.3e}", y.t);
    }
    y.check(&ch.grid).map_err(|_| Error::Instability {
        t: y.t,
        reason: "non-finite GPV state".into(),
    })?;
    Ok((y, log))
}

fn prim_add(y: &PrimitiveState, h: f64, k: &PrimitiveTendency) -> PrimitiveState {
    PrimitiveState {
        v: y.v.axpy(h, &k.dv),
        w: y.w.axpy(h, &k.dw),
        theta: y.theta.axpy(h, &k.dtheta),
        t: y.t,
        eps: y.eps,
    }
}

/// Removes the gradient part `∇φ` of `(v, w)`, `Δφ = div u`,
/// `∂z φ = w` on the lids. Returns the L² divergence before cleaning.
pub fn clean_divergence(ch: &Channel, p: &mut PrimitiveState) -> f64 {
    let div = crate::state::divergence(ch, &p.v, &p.w);
    let before = crate::norms::l2_norm(ch, &div);
    let nz = ch.grid.nz;
    let lid = |k: usize| ch.fwd2(&crate::field::BoundaryField { data: p.w.level(k) });
    let (phi, _) = ch.s_solve_neumann(&ch.fwd(&div), &lid(0), &lid(nz));
    p.v.x = p.v.x.sub(&ch.inv(&ch.s_ddx(&phi)));
    p.v.y = p.v.y.sub(&ch.inv(&ch.s_ddy(&phi)));
    p.w = p.w.sub(&ch.inv(&ch.ddz_array(&phi)));
    before
}

fn zero_w_lids(ch: &Channel, p: &mut PrimitiveState) {
    let zero = ndarray::Array2::zeros((ch.grid.nx, ch.grid.ny));
    p.w.set_level(0, &zero);
    p.w.set_level(ch.grid.nz, &zero);
}

/// Divergence level (relative to `‖∇u‖`) above which the primitive stepper
/// projects.
pub const DIV_CLEAN_TOL: f64 = 1e-10;

/// One classical RK4 step of the primitive system followed by impermeability
/// enforcement and, if needed, divergence cleaning.
pub fn step_eps_primitive(
    ch: &Channel,
    p: &PrimitiveState,
    dt: f64,
    cfg: &IntegratorConfig,
) -> Result<(PrimitiveState, StepLog)> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Config(format!("time step must be positive, got {dt}")));
    }
    let bound = stable_dt(
        ch,
        p,
        Some(p.eps),
        &IntegratorConfig {
            dt_max: f64::INFINITY,
            ..*cfg
        },
    )?;
    if dt > bound * (1.0 + 1e-12) {
        return Err(Error::UnstableStep { dt, bound });
    }
    let nl = cfg.nonlinear;
    let n = |y: &PrimitiveState| primitive_tendency_unchecked(ch, y, nl);
    let k1 = n(p);
    let k2 = n(&prim_add(p, dt / 2.0, &k1));
    let k3 = n(&prim_add(p, dt / 2.0, &k2));
    let k4 = n(&prim_add(p, dt, &k3));
    let mut y = prim_add(p, dt / 6.0, &k1);
    y = prim_add(&y, dt / 3.0, &k2);
    y = prim_add(&y, dt / 3.0, &k3);
    y = prim_add(&y, dt / 6.0, &k4);
    y.t = p.t + dt;
    zero_w_lids(ch, &mut y);

    let mut log = StepLog::default();
    let div = crate::norms::l2_norm(ch, &crate::state::divergence(ch, &y.v, &y.w));
    let scale =
        crate::norms::sobolev_norm_sq(ch, &y.v.x, 1).sqrt() + crate::norms::sobolev_norm_sq(ch, &y.v.y, 1).sqrt();
    if div > DIV_CLEAN_TOL * scale.max(1e-300) {
        log.div_fix = clean_divergence(ch, &mut y);
        log::debug!("t = {:.6}: divergence cleaning removed {:.3e}", y.t, log.div_fix);
    }
    y.check(&ch.grid).map_err(|_| Error::Instability {
        t: y.t,
        reason: "non-finite primitive state".into(),
    })?;
    Ok((y, log))
}

fn limit_add(y: &LimitState, h: f64, k: &LimitTendency) -> LimitState {
    LimitState {
        phi: y.phi.axpy(h, &k.dphi),
        h0: y.h0.axpy(h, &k.dh0),
        hh: y.hh.axpy(h, &k.dhh),
        psi: y.psi.axpy(h, &k.dpsi),
        z: y.z.axpy(h, &k.dz),
        t: y.t,
    }
}

/// One classical RK4 step of the limit system.
pub fn step_limit(ch: &Channel, l: &LimitState, dt: f64, cfg: &IntegratorConfig) -> Result<(LimitState, StepLog)> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Config(format!("time step must be positive, got {dt}")));
    }
    let nl = cfg.nonlinear;
    let n = |y: &LimitState| limit_tendency_unchecked(ch, y, nl);
    let k1 = n(l);
    let k2 = n(&limit_add(l, dt / 2.0, &k1));
    let k3 = n(&limit_add(l, dt / 2.0, &k2));
    let k4 = n(&limit_add(l, dt, &k3));
    let mut y = limit_add(l, dt / 6.0, &k1);
    y = limit_add(&y, dt / 3.0, &k2);
    y = limit_add(&y, dt / 3.0, &k3);
    y = limit_add(&y, dt / 6.0, &k4);
    y.t = l.t + dt;
    let mut log = StepLog::default();
    if cfg.constraint_projection {
        let defect = ch.integrate(&y.phi) - (y.hh.mean() - y.h0.mean());
        let c = defect / ch.grid.h;
        y.phi.data.mapv_inplace(|v| v - c);
        log.compat_fix = c.abs();
    }
    y.check(&ch.grid).map_err(|_| Error::Instability {
        t: y.t,
        reason: "non-finite limit state".into(),
    })?;
    Ok((y, log))
}
