//! Kinematic maps between the formulations: primitive ↔ GPV, the fast-phase
//! filter, and the slow/fast reconstruction of limit states.

use ndarray::{s, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{CHVectorField, CScalarField, Elem, HVector, HVectorField, ScalarField, VProfile};
use crate::spectral::{Channel, Spectrum};
use crate::state::{
    gpv_residuals, limit_compat_residual, validate_primitive, FastComponents, FastPair, GpvState, LimitState,
    PrimitiveState,
};

/// Relative tolerance for the input checks of the kinematic maps.
pub const CONSTRAINT_TOL: f64 = 1e-8;

/// Spectra of a primitive triple.
pub(crate) struct PrimSpec {
    pub v: [Spectrum; 2],
    pub w: Spectrum,
    pub theta: Spectrum,
}

fn set_mean_profile<T: Elem>(s: &mut Spectrum, p: &ndarray::Array1<T>) {
    for (k, v) in p.iter().enumerate() {
        s[(0, 0, k)] = v.to_c();
    }
}

/// `∇_h^⊥ g = (−∂y g, ∂x g)` in spectral space.
fn perp_grad(ch: &Channel, g: &Spectrum) -> [Spectrum; 2] {
    [-ch.s_ddy(g), ch.s_ddx(g)]
}

fn grad(ch: &Channel, g: &Spectrum) -> [Spectrum; 2] {
    [ch.s_ddx(g), ch.s_ddy(g)]
}

/// `w`, `θ`, `v` from GPV spectra, in that order so the Dirichlet solves are
/// shared by the velocity formula.
pub(crate) fn reconstruct_spec(
    ch: &Channel,
    phi: &Spectrum,
    psi: [&Spectrum; 2],
    h0: &Array2<Complex64>,
    hh: &Array2<Complex64>,
    z: &VProfile<f64>,
) -> PrimSpec {
    let div = ch.s_ddx(psi[0]) + ch.s_ddy(psi[1]);
    let curl = ch.s_ddx(psi[1]) - ch.s_ddy(psi[0]);
    let w = ch.s_inv_lap_dirichlet(&div);

    // Same function as E_b + Δ_D⁻¹(… − ΔE_b); solving with the lid data
    // directly avoids resolving the non-analytic lift on the vertical grid.
    let theta = ch.s_solve_dirichlet(&(curl + ch.ddz_array(phi)), Some(h0), Some(hh));

    let dw = ch.s_inv_lap_h(&ch.ddz_array(&w));
    let rest = ch.s_inv_lap_h(&(phi - &ch.ddz_array(&theta)));
    let [gx, gy] = grad(ch, &dw);
    let [px, py] = perp_grad(ch, &rest);
    let mut vx = px - gx;
    let mut vy = py - gy;
    set_mean_profile(&mut vx, &z.x);
    set_mean_profile(&mut vy, &z.y);
    PrimSpec { v: [vx, vy], w, theta }
}

/// Inverse transform of a primitive spectrum with exact lid values.
pub(crate) fn prim_from_spec(
    ch: &Channel,
    s: &PrimSpec,
    h0: &Array2<f64>,
    hh: &Array2<f64>,
    t: f64,
    eps: f64,
) -> PrimitiveState {
    let nz = ch.grid.nz;
    let mut w: ScalarField = ch.inv(&s.w);
    let zero = Array2::zeros((ch.grid.nx, ch.grid.ny));
    w.set_level(0, &zero);
    w.set_level(nz, &zero);
    let mut theta: ScalarField = ch.inv(&s.theta);
    theta.set_level(0, h0);
    theta.set_level(nz, hh);
    PrimitiveState {
        v: HVector::new(ch.inv(&s.v[0]), ch.inv(&s.v[1])),
        w,
        theta,
        t,
        eps,
    }
}

/// `Φ = ∂zθ + curl_h v`, `Ψ = ∇_h^⊥θ + ∇_h w − ∂z v` from primitive spectra.
pub(crate) fn gpv_spec(ch: &Channel, v: [&Spectrum; 2], w: &Spectrum, theta: &Spectrum) -> (Spectrum, [Spectrum; 2]) {
    let phi = ch.ddz_array(theta) + ch.s_ddx(v[1]) - ch.s_ddy(v[0]);
    let [px, py] = perp_grad(ch, theta);
    let [gx, gy] = grad(ch, w);
    let psi_x = px + gx - ch.ddz_array(v[0]);
    let psi_y = py + gy - ch.ddz_array(v[1]);
    (phi, [psi_x, psi_y])
}

/// GPV variables of a primitive state without validating it first.
pub fn extract_gpv_unchecked(ch: &Channel, p: &PrimitiveState) -> GpvState {
    let v = [ch.fwd(&p.v.x), ch.fwd(&p.v.y)];
    let w = ch.fwd(&p.w);
    let theta = ch.fwd(&p.theta);
    let (phi, [psi_x, psi_y]) = gpv_spec(ch, [&v[0], &v[1]], &w, &theta);
    let mean = ch.horizontal_mean_vec(&p.v);
    GpvState {
        phi: ch.inv(&phi),
        psi: HVector::new(ch.inv(&psi_x), ch.inv(&psi_y)),
        h0: crate::field::BoundaryField { data: p.theta.level(0) },
        hh: crate::field::BoundaryField {
            data: p.theta.level(ch.grid.nz),
        },
        z: mean,
        t: p.t,
        eps: p.eps,
    }
}

fn primitive_scale(p: &PrimitiveState) -> f64 {
    p.v.max_abs().max(p.w.max_abs()).max(p.theta.max_abs()).max(1.0)
}

/// GPV variables of a solenoidal, impermeable primitive state.
pub fn extract_gpv(ch: &Channel, p: &PrimitiveState) -> Result<GpvState> {
    p.check(&ch.grid)?;
    // derivatives of an O(1) field are O(N); scale the tolerance accordingly
    let tol = CONSTRAINT_TOL * primitive_scale(p) * ch.grid.nx.max(ch.grid.ny).max(ch.grid.nz) as f64;
    let r = validate_primitive(ch, p, tol);
    if !r.pass {
        return Err(Error::InvalidPrimitive {
            div: r.div_residual,
            bc: r.bc_residual,
        });
    }
    Ok(extract_gpv_unchecked(ch, p))
}

fn gpv_scale(g: &GpvState) -> f64 {
    g.phi
        .max_abs()
        .max(g.psi.max_abs())
        .max(g.h0.max_abs())
        .max(g.hh.max_abs())
        .max(g.z.max_abs())
        .max(1.0)
}

/// Checks both GPV constraints against a magnitude-relative tolerance.
pub fn check_gpv_constraints(ch: &Channel, g: &GpvState) -> Result<()> {
    let (mean, compat) = gpv_residuals(ch, &g.phi, &g.psi, &g.h0, &g.hh, &g.z);
    let tol = CONSTRAINT_TOL * gpv_scale(g) * ch.grid.h.max(1.0) * ch.grid.nz as f64;
    if mean > tol || compat > tol {
        return Err(Error::InconsistentGpv { mean, compat });
    }
    Ok(())
}

/// Primitive state of a GPV state (rejects states violating the constraints).
pub fn reconstruct_primitive(ch: &Channel, g: &GpvState) -> Result<PrimitiveState> {
    g.check(&ch.grid)?;
    check_gpv_constraints(ch, g)?;
    Ok(reconstruct_primitive_unchecked(ch, g))
}

pub fn reconstruct_primitive_unchecked(ch: &Channel, g: &GpvState) -> PrimitiveState {
    let phi = ch.fwd(&g.phi);
    let psi = [ch.fwd(&g.psi.x), ch.fwd(&g.psi.y)];
    let h0 = ch.fwd2(&g.h0);
    let hh = ch.fwd2(&g.hh);
    let s = reconstruct_spec(ch, &phi, [&psi[0], &psi[1]], &h0, &hh, &g.z);
    prim_from_spec(ch, &s, &g.h0.data, &g.hh.data, g.t, g.eps)
}

/// `e^{−iτ}(X + iX^⊥)` for a real vector `(x, y)`, `X^⊥ = (−y, x)`.
#[inline]
pub fn filter_pair(x: f64, y: f64, tau: f64) -> (Complex64, Complex64) {
    let ph = Complex64::from_polar(1.0, -tau);
    (ph * Complex64::new(x, -y), ph * Complex64::new(y, x))
}

/// `Re(e^{iτ}X₊)`.
#[inline]
pub fn unfilter_pair(x: Complex64, y: Complex64, tau: f64) -> (f64, f64) {
    let ph = Complex64::from_polar(1.0, tau);
    ((ph * x).re, (ph * y).re)
}

pub fn filter_vector(psi: &HVectorField, tau: f64) -> CHVectorField {
    let mut x = CScalarField {
        data: psi.x.data.mapv(|_| Complex64::new(0.0, 0.0)),
    };
    let mut y = x.clone();
    ndarray::Zip::from(&mut x.data)
        .and(&mut y.data)
        .and(&psi.x.data)
        .and(&psi.y.data)
        .for_each(|a, b, &px, &py| {
            let (fa, fb) = filter_pair(px, py, tau);
            *a = fa;
            *b = fb;
        });
    HVector::new(x, y)
}

pub fn unfilter_vector(psi: &CHVectorField, tau: f64) -> HVectorField {
    let mut x = ScalarField {
        data: psi.x.data.mapv(|_| 0.0),
    };
    let mut y = x.clone();
    ndarray::Zip::from(&mut x.data)
        .and(&mut y.data)
        .and(&psi.x.data)
        .and(&psi.y.data)
        .for_each(|a, b, &px, &py| {
            let (fa, fb) = unfilter_pair(px, py, tau);
            *a = fa;
            *b = fb;
        });
    HVector::new(x, y)
}

pub fn filter_profile(z: &VProfile<f64>, tau: f64) -> VProfile<Complex64> {
    let (x, y): (Vec<_>, Vec<_>) = z.x.iter().zip(&z.y).map(|(&a, &b)| filter_pair(a, b, tau)).unzip();
    VProfile {
        x: x.into(),
        y: y.into(),
    }
}

pub fn unfilter_profile(z: &VProfile<Complex64>, tau: f64) -> VProfile<f64> {
    let (x, y): (Vec<_>, Vec<_>) = z.x.iter().zip(&z.y).map(|(&a, &b)| unfilter_pair(a, b, tau)).unzip();
    VProfile {
        x: x.into(),
        y: y.into(),
    }
}

/// Filtered fast variables at the state's own time.
pub fn fast_filter(g: &GpvState) -> FastPair {
    let tau = g.t / g.eps;
    FastPair {
        psi_plus: filter_vector(&g.psi, tau),
        z_plus: filter_profile(&g.z, tau),
    }
}

/// Inverse of [`fast_filter`]: `(Ψ, Z)` at time `t`.
pub fn fast_unfilter(f: &FastPair, t: f64, eps: f64) -> (HVectorField, VProfile<f64>) {
    let tau = t / eps;
    (unfilter_vector(&f.psi_plus, tau), unfilter_profile(&f.z_plus, tau))
}

/// Slow spectra `(v_p, θ_p)` from `Φ_p` and the lid traces.
pub(crate) fn slow_spec(
    ch: &Channel,
    phi: &Spectrum,
    h0: &Array2<Complex64>,
    hh: &Array2<Complex64>,
) -> ([Spectrum; 2], Spectrum) {
    let theta = ch.s_solve_dirichlet(&ch.ddz_array(phi), Some(h0), Some(hh));
    let stream = ch.s_inv_lap_h(&(phi - &ch.ddz_array(&theta)));
    (perp_grad(ch, &stream), theta)
}

/// `(v_p, θ_p)` of a limit state; `w_p = 0`.
pub fn limit_reconstruct_slow(ch: &Channel, l: &LimitState) -> Result<(HVectorField, ScalarField)> {
    l.check(&ch.grid)?;
    let compat = limit_compat_residual(ch, l);
    let scale = l.phi.max_abs().max(l.h0.max_abs()).max(l.hh.max_abs()).max(1.0);
    if compat > CONSTRAINT_TOL * scale * ch.grid.h.max(1.0) * ch.grid.nz as f64 {
        return Err(Error::InconsistentGpv { mean: 0.0, compat });
    }
    let (v, mut theta) = limit_slow_fields(ch, l);
    theta.set_level(0, &l.h0.data);
    theta.set_level(ch.grid.nz, &l.hh.data);
    Ok((v, theta))
}

pub(crate) fn limit_slow_fields(ch: &Channel, l: &LimitState) -> (HVectorField, ScalarField) {
    let (v, theta) = slow_spec(ch, &ch.fwd(&l.phi), &ch.fwd2(&l.h0), &ch.fwd2(&l.hh));
    (HVector::new(ch.inv(&v[0]), ch.inv(&v[1])), ch.inv(&theta))
}

/// Fast spectra `(V₊, W₊, Θ₊)` from envelope spectra.
pub(crate) fn fast_spec(ch: &Channel, psi: [&Spectrum; 2], z: &VProfile<Complex64>) -> PrimSpec {
    let div = ch.s_ddx(psi[0]) + ch.s_ddy(psi[1]);
    let curl = ch.s_ddx(psi[1]) - ch.s_ddy(psi[0]);
    let w = ch.s_inv_lap_dirichlet(&div) * 0.5;
    let theta = ch.s_inv_lap_dirichlet(&curl) * 0.5;
    let a = ch.s_inv_lap_h(&ch.ddz_array(&w));
    let b = ch.s_inv_lap_h(&ch.ddz_array(&theta));
    let [gx, gy] = grad(ch, &a);
    let [px, py] = perp_grad(ch, &b);
    let mut vx = -(gx + px);
    let mut vy = -(gy + py);
    set_mean_profile(&mut vx, &z.x.mapv(|c| c * 0.5));
    set_mean_profile(&mut vy, &z.y.mapv(|c| c * 0.5));
    PrimSpec { v: [vx, vy], w, theta }
}

pub(crate) fn fast_from_spec(ch: &Channel, s: &PrimSpec) -> FastComponents {
    let mut w: CScalarField = ch.inv(&s.w);
    let zero = Array2::from_elem((ch.grid.nx, ch.grid.ny), Complex64::new(0.0, 0.0));
    w.set_level(0, &zero);
    w.set_level(ch.grid.nz, &zero);
    FastComponents {
        v_plus: HVector::new(ch.inv(&s.v[0]), ch.inv(&s.v[1])),
        w_plus: w,
        theta_plus: ch.inv(&s.theta),
    }
}

pub fn limit_reconstruct_fast(ch: &Channel, l: &LimitState) -> FastComponents {
    let psi = [ch.fwd(&l.psi.x), ch.fwd(&l.psi.y)];
    fast_from_spec(ch, &fast_spec(ch, [&psi[0], &psi[1]], &l.z))
}

fn two_re(a: &CScalarField, phase: Complex64) -> ScalarField {
    a.map(|c| 2.0 * (phase * c).re)
}

/// Slow part plus `e^{it/ε}·(fast part) + c.c.`, error terms dropped.
pub fn compose_approximation(ch: &Channel, l: &LimitState, t: f64, eps: f64) -> Result<PrimitiveState> {
    let (vp, thp) = limit_reconstruct_slow(ch, l)?;
    let f = limit_reconstruct_fast(ch, l);
    let ph = Complex64::from_polar(1.0, t / eps);
    let v = HVector::new(vp.x.add(&two_re(&f.v_plus.x, ph)), vp.y.add(&two_re(&f.v_plus.y, ph)));
    let mut w = two_re(&f.w_plus, ph);
    let zero = Array2::zeros((ch.grid.nx, ch.grid.ny));
    w.set_level(0, &zero);
    w.set_level(ch.grid.nz, &zero);
    let mut theta = thp.add(&two_re(&f.theta_plus, ph));
    theta.set_level(0, &l.h0.data);
    theta.set_level(ch.grid.nz, &l.hh.data);
    Ok(PrimitiveState { v, w, theta, t, eps })
}

/// Limit initial data: `Φ_p`, traces from the GPV state, envelopes from the
/// fast filter at the state's time.
pub fn limit_from_gpv(g: &GpvState) -> LimitState {
    let f = fast_filter(g);
    LimitState {
        phi: g.phi.clone(),
        h0: g.h0.clone(),
        hh: g.hh.clone(),
        psi: f.psi_plus,
        z: f.z_plus,
        t: g.t,
    }
}

/// Removes the constraint drift of a GPV state: overwrites the horizontal
/// mean of `Ψ` by `−∂z Z` and shifts `Φ` by a constant so the compatibility
/// integral vanishes. Returns the two correction magnitudes.
pub fn project_constraints(ch: &Channel, g: &mut GpvState) -> (f64, f64) {
    let target = VProfile {
        x: ch.ddz_profile(&g.z.x).mapv(|v| -v),
        y: ch.ddz_profile(&g.z.y).mapv(|v| -v),
    };
    let mean = ch.horizontal_mean_vec(&g.psi);
    let shift = target.sub(&mean);
    let mean_fix = shift.max_abs();
    for (k, (&sx, &sy)) in shift.x.iter().zip(&shift.y).enumerate() {
        g.psi.x.data.slice_mut(s![.., .., k]).mapv_inplace(|v| v + sx);
        g.psi.y.data.slice_mut(s![.., .., k]).mapv_inplace(|v| v + sy);
    }
    let defect = ch.integrate(&g.phi) - (g.hh.mean() - g.h0.mean());
    let c = defect / ch.grid.h;
    g.phi.data.mapv_inplace(|v| v - c);
    (mean_fix, c.abs())
}
