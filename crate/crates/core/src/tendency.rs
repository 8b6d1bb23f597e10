//! Right-hand sides: the nonlinearities `N₁, N₂, N₃`, the GPV and primitive
//! tendencies (with the pressure solve), and the limit resonances
//! `N_Φ, N_ψ, N_z`.
//!
//! Products are formed pointwise on the collocation grid and the summed
//! output is truncated horizontally once. The stiff `(1/ε)Ψ^⊥`, `(1/ε)Z^⊥`
//! terms never appear here; the integrators apply them exactly.

use ndarray::{Array1, Array2, Array3, Zip};
use num_complex::Complex64;

use crate::error::Result;
use crate::field::{BoundaryField, CHVectorField, Elem, Field3, HVector, HVectorField, ScalarField, VProfile};
use crate::gpv::{self, PrimSpec};
use crate::spectral::{Channel, Spectrum};
use crate::state::{GpvState, LimitState, PrimitiveState};

/// Soft (non-stiff) part of the GPV right-hand side.
#[derive(Clone, Debug, PartialEq)]
pub struct GpvTendency {
    pub dphi: ScalarField,
    pub dpsi: HVectorField,
    pub dh0: BoundaryField,
    pub dhh: BoundaryField,
    pub dz: VProfile<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitTendency {
    pub dphi: ScalarField,
    pub dh0: BoundaryField,
    pub dhh: BoundaryField,
    pub dpsi: CHVectorField,
    pub dz: VProfile<Complex64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrimitiveTendency {
    pub dv: HVectorField,
    pub dw: ScalarField,
    pub dtheta: ScalarField,
    /// Diagnosed pressure (mean-zero gauge).
    pub p: ScalarField,
    /// Solvability defect of the horizontal-mean Neumann problem.
    pub defect: f64,
}

type A3<T> = Array3<T>;

/// Nodal values and first derivatives of a primitive triple.
pub(crate) struct Kin<T> {
    pub v: [A3<T>; 2],
    pub w: A3<T>,
    pub th: A3<T>,
    /// `dv[i][j] = ∂ⱼ vᵢ` with `j ∈ {x, y, z}`.
    pub dv: [[A3<T>; 3]; 2],
    pub dw: [A3<T>; 3],
    pub dth: [A3<T>; 3],
}

fn inv_arr<T: Elem>(ch: &Channel, s: &Spectrum) -> A3<T> {
    ch.inv::<T>(s).data
}

/// `(∂x, ∂y, ∂z)` of a field given by its spectrum and nodal values.
fn grad3<T: Elem>(ch: &Channel, s: &Spectrum, nodal: &A3<T>) -> [A3<T>; 3] {
    [
        inv_arr(ch, &ch.s_ddx(s)),
        inv_arr(ch, &ch.s_ddy(s)),
        ch.ddz_array(nodal),
    ]
}

fn zero_lids<T: Elem>(a: &mut A3<T>) {
    let nz = a.dim().2 - 1;
    a.index_axis_mut(ndarray::Axis(2), 0).fill(T::default());
    a.index_axis_mut(ndarray::Axis(2), nz).fill(T::default());
}

impl<T: Elem> Kin<T> {
    fn from_spec(ch: &Channel, s: &PrimSpec) -> Self {
        let v = [inv_arr::<T>(ch, &s.v[0]), inv_arr::<T>(ch, &s.v[1])];
        let mut w = inv_arr::<T>(ch, &s.w);
        zero_lids(&mut w);
        let th = inv_arr::<T>(ch, &s.theta);
        let dv = [grad3(ch, &s.v[0], &v[0]), grad3(ch, &s.v[1], &v[1])];
        let mut dw = grad3(ch, &s.w, &w);
        zero_lids(&mut dw[0]);
        zero_lids(&mut dw[1]);
        let dth = grad3(ch, &s.theta, &th);
        Self { v, w, th, dv, dw, dth }
    }
}

impl Kin<f64> {
    fn from_primitive(ch: &Channel, p: &PrimitiveState) -> (Self, PrimSpec) {
        let s = PrimSpec {
            v: [ch.fwd(&p.v.x), ch.fwd(&p.v.y)],
            w: ch.fwd(&p.w),
            theta: ch.fwd(&p.theta),
        };
        // keep the caller's nodal values (exact lids) instead of re-synthesised ones
        let v = [p.v.x.data.clone(), p.v.y.data.clone()];
        let dv = [grad3(ch, &s.v[0], &v[0]), grad3(ch, &s.v[1], &v[1])];
        let dw = grad3(ch, &s.w, &p.w.data);
        let dth = grad3(ch, &s.theta, &p.theta.data);
        (
            Self {
                v,
                w: p.w.data.clone(),
                th: p.theta.data.clone(),
                dv,
                dw,
                dth,
            },
            s,
        )
    }
}

/// `u·∇f` for the horizontal velocity `v`, the vertical velocity `w`, and
/// `∇f = (fx, fy, fz)`.
fn advect<T: Elem, S: Elem>(v: &[A3<T>; 2], w: Option<&A3<T>>, g: &[A3<S>; 3]) -> A3<S>
where
    S: std::ops::Mul<T, Output = S>,
{
    let mut out = A3::from_elem(g[0].dim(), S::default());
    Zip::from(&mut out)
        .and(&v[0])
        .and(&v[1])
        .and(&g[0])
        .and(&g[1])
        .for_each(|o, &a, &b, &fx, &fy| *o = fx * a + fy * b);
    if let Some(w) = w {
        Zip::from(&mut out)
            .and(w)
            .and(&g[2])
            .for_each(|o, &w, &fz| *o = *o + fz * w);
    }
    out
}

fn n1_terms<T: Elem>(k: &Kin<T>) -> A3<T> {
    let [v1, v2] = &k.dv;
    let mut out = A3::from_elem(k.w.dim(), T::default());
    // curl v·div v + ∂z v·∇^⊥w + ∂z v·∇θ + ∂z w ∂z θ
    Zip::from(&mut out)
        .and(&v1[0])
        .and(&v1[1])
        .and(&v2[0])
        .and(&v2[1])
        .for_each(|o, &v1x, &v1y, &v2x, &v2y| *o = (v2x - v1y) * (v1x + v2y));
    Zip::from(&mut out)
        .and(&v1[2])
        .and(&v2[2])
        .and(&k.dw[0])
        .and(&k.dw[1])
        .for_each(|o, &v1z, &v2z, &wx, &wy| *o = *o + v1z * (-wy) + v2z * wx);
    Zip::from(&mut out)
        .and(&v1[2])
        .and(&v2[2])
        .and(&k.dth[0])
        .and(&k.dth[1])
        .for_each(|o, &v1z, &v2z, &tx, &ty| *o = *o + v1z * tx + v2z * ty);
    Zip::from(&mut out)
        .and(&k.dw[2])
        .and(&k.dth[2])
        .for_each(|o, &wz, &tz| *o = *o + wz * tz);
    out
}

/// `N₂` from primitive kinematics.
fn n2_terms<T: Elem>(k: &Kin<T>) -> [A3<T>; 2] {
    let sl = |a: &A3<T>| a.as_slice().expect("standard layout").to_vec();
    let [v1, v2] = &k.dv;
    let (v1x, v1y, v1z) = (sl(&v1[0]), sl(&v1[1]), sl(&v1[2]));
    let (v2x, v2y, v2z) = (sl(&v2[0]), sl(&v2[1]), sl(&v2[2]));
    let (tx, ty, tz) = (sl(&k.dth[0]), sl(&k.dth[1]), sl(&k.dth[2]));
    let (wx, wy, wz) = (sl(&k.dw[0]), sl(&k.dw[1]), sl(&k.dw[2]));
    let n = v1x.len();
    let mut ox = Vec::with_capacity(n);
    let mut oy = Vec::with_capacity(n);
    for i in 0..n {
        // ((∇v)ᵀ∇θ)_j = Σᵢ ∂ⱼvᵢ ∂ᵢθ, then ⊥
        let gx = v1x[i] * tx[i] + v2x[i] * ty[i];
        let gy = v1y[i] * tx[i] + v2y[i] * ty[i];
        let mut x = -gy;
        let mut y = gx;
        // ∂zθ ∇^⊥w + ∂zw ∇w
        x = x - tz[i] * wy[i] + wz[i] * wx[i];
        y = y + tz[i] * wx[i] + wz[i] * wy[i];
        // (∇v)ᵀ∇w
        x = x + v1x[i] * wx[i] + v2x[i] * wy[i];
        y = y + v1y[i] * wx[i] + v2y[i] * wy[i];
        // − (∂z v·∇)v − ∂zw ∂z v
        x = x - (v1z[i] * v1x[i] + v2z[i] * v1y[i]) - wz[i] * v1z[i];
        y = y - (v1z[i] * v2x[i] + v2z[i] * v2y[i]) - wz[i] * v2z[i];
        ox.push(x);
        oy.push(y);
    }
    let dim = k.w.dim();
    [
        A3::from_shape_vec(dim, ox).expect("shape"),
        A3::from_shape_vec(dim, oy).expect("shape"),
    ]
}

/// Horizontal truncation (per grid flag) of a nodal array.
fn dealiased<T: Elem>(ch: &Channel, a: A3<T>) -> A3<T> {
    if !ch.grid.dealias {
        return a;
    }
    let mut s = ch.fwd(&Field3 { data: a });
    ch.s_dealias(&mut s);
    inv_arr(ch, &s)
}

fn dealiased2(ch: &Channel, a: Array2<f64>) -> Array2<f64> {
    if !ch.grid.dealias {
        return a;
    }
    let mut s = ch.fwd2(&BoundaryField { data: a });
    ch.s_dealias2(&mut s);
    ch.inv2(&s).data
}

fn mean_profile<T: Elem>(ch: &Channel, a: &A3<T>) -> Array1<T> {
    ch.horizontal_mean(&Field3 { data: a.clone() })
}

/// `∂z` of the horizontal mean of `w·v`.
fn n3_terms<T: Elem, S: Elem>(ch: &Channel, w: &A3<T>, v: &[A3<S>; 2]) -> VProfile<T>
where
    T: std::ops::Mul<S, Output = T>,
{
    let prod = |c: &A3<S>| {
        let mut out = w.clone();
        Zip::from(&mut out).and(c).for_each(|o, &c| *o = *o * c);
        ch.ddz_profile(&mean_profile(ch, &out))
    };
    VProfile {
        x: prod(&v[0]),
        y: prod(&v[1]),
    }
}

pub fn nonlinear_n1(ch: &Channel, p: &PrimitiveState) -> Result<ScalarField> {
    p.check(&ch.grid)?;
    let (k, _) = Kin::from_primitive(ch, p);
    Ok(Field3 {
        data: dealiased(ch, n1_terms(&k)),
    })
}

pub fn nonlinear_n2(ch: &Channel, p: &PrimitiveState) -> Result<HVectorField> {
    p.check(&ch.grid)?;
    let (k, _) = Kin::from_primitive(ch, p);
    let [x, y] = n2_terms(&k);
    Ok(HVector::new(
        Field3 { data: dealiased(ch, x) },
        Field3 { data: dealiased(ch, y) },
    ))
}

pub fn nonlinear_n3(ch: &Channel, p: &PrimitiveState) -> Result<VProfile<f64>> {
    p.check(&ch.grid)?;
    Ok(n3_terms(ch, &p.w.data, &[p.v.x.data.clone(), p.v.y.data.clone()]))
}

fn lid<T: Elem>(a: &A3<T>, k: usize) -> Array2<T> {
    a.index_axis(ndarray::Axis(2), k).to_owned()
}

/// GPV tendency after checking the state's constraints.
pub fn gpv_tendency(ch: &Channel, g: &GpvState, nonlinear: bool) -> Result<GpvTendency> {
    g.check(&ch.grid)?;
    gpv::check_gpv_constraints(ch, g)?;
    Ok(gpv_tendency_unchecked(ch, g, nonlinear))
}

pub(crate) fn gpv_tendency_unchecked(ch: &Channel, g: &GpvState, nonlinear: bool) -> GpvTendency {
    let grid = &ch.grid;
    if !nonlinear {
        return GpvTendency {
            dphi: ScalarField::zeros(grid),
            dpsi: HVectorField::zeros(grid),
            dh0: BoundaryField::zeros(grid),
            dhh: BoundaryField::zeros(grid),
            dz: VProfile::zeros(grid),
        };
    }
    let phi_s = ch.fwd(&g.phi);
    let psi_s = [ch.fwd(&g.psi.x), ch.fwd(&g.psi.y)];
    let spec = gpv::reconstruct_spec(
        ch,
        &phi_s,
        [&psi_s[0], &psi_s[1]],
        &ch.fwd2(&g.h0),
        &ch.fwd2(&g.hh),
        &g.z,
    );
    let k = Kin::<f64>::from_spec(ch, &spec);

    let gphi = grad3(ch, &phi_s, &g.phi.data);
    let gpx = grad3(ch, &psi_s[0], &g.psi.x.data);
    let gpy = grad3(ch, &psi_s[1], &g.psi.y.data);

    let mut dphi = advect(&k.v, Some(&k.w), &gphi);
    let n1 = n1_terms(&k);
    Zip::from(&mut dphi).and(&n1).for_each(|d, &n| *d = -(*d + n));

    let [n2x, n2y] = n2_terms(&k);
    let mut dpx = advect(&k.v, Some(&k.w), &gpx);
    let mut dpy = advect(&k.v, Some(&k.w), &gpy);
    Zip::from(&mut dpx).and(&n2x).for_each(|d, &n| *d = -(*d + n));
    Zip::from(&mut dpy).and(&n2y).for_each(|d, &n| *d = -(*d + n));

    let nz = grid.nz;
    let lid_adv = |level: usize| {
        let mut out = lid(&k.v[0], level) * lid(&k.dth[0], level) + lid(&k.v[1], level) * lid(&k.dth[1], level);
        out.mapv_inplace(|v| -v);
        BoundaryField {
            data: dealiased2(ch, out),
        }
    };
    let n3 = n3_terms(ch, &k.w, &k.v);
    GpvTendency {
        dphi: Field3 {
            data: dealiased(ch, dphi),
        },
        dpsi: HVector::new(
            Field3 {
                data: dealiased(ch, dpx),
            },
            Field3 {
                data: dealiased(ch, dpy),
            },
        ),
        dh0: lid_adv(0),
        dhh: lid_adv(nz),
        dz: n3.scale(-1.0),
    }
}

/// Pressure from `Δp = −ε div(u·∇u) + Φ` with `∂z p = θ − ε(u·∇w)` on the
/// lids. Returns the pressure spectrum, the truncated advection spectra
/// `(A_h, A_w)` (zero in the linear regime), and the mean-mode defect.
fn pressure_spec(
    ch: &Channel,
    k: &Kin<f64>,
    s: &PrimSpec,
    eps: f64,
    nonlinear: bool,
) -> (Spectrum, [Spectrum; 3], f64) {
    let dims = s.w.dim();
    let adv = |g: &[A3<f64>; 3]| {
        let mut a = ch.fwd(&Field3 {
            data: advect(&k.v, Some(&k.w), g),
        });
        ch.s_dealias(&mut a);
        a
    };
    let a = if nonlinear {
        [adv(&k.dv[0]), adv(&k.dv[1]), adv(&k.dw)]
    } else {
        [Spectrum::zeros(dims), Spectrum::zeros(dims), Spectrum::zeros(dims)]
    };
    let div_a = ch.s_ddx(&a[0]) + ch.s_ddy(&a[1]) + ch.ddz_array(&a[2]);
    let phi = ch.ddz_array(&s.theta) + ch.s_ddx(&s.v[1]) - ch.s_ddy(&s.v[0]);
    let rhs = phi - div_a * eps;
    let nz = ch.grid.nz;
    let bc = |level: usize| {
        let th = s.theta.index_axis(ndarray::Axis(2), level).to_owned();
        let aw = a[2].index_axis(ndarray::Axis(2), level).to_owned();
        th - aw * eps
    };
    let (p, defect) = ch.s_solve_neumann(&rhs, &bc(0), &bc(nz));
    if defect.norm() > 1e-8 * (1.0 + s.theta.iter().fold(0.0f64, |m, c| m.max(c.norm()))) {
        log::warn!("pressure solvability defect {:.3e}", defect.norm());
    }
    (p, a, defect.norm())
}

pub fn primitive_tendency(ch: &Channel, p: &PrimitiveState, nonlinear: bool) -> Result<PrimitiveTendency> {
    p.check(&ch.grid)?;
    Ok(primitive_tendency_unchecked(ch, p, nonlinear))
}

pub(crate) fn primitive_tendency_unchecked(ch: &Channel, p: &PrimitiveState, nonlinear: bool) -> PrimitiveTendency {
    let eps = p.eps;
    let (k, s) = Kin::from_primitive(ch, p);
    let (ps, a, defect) = pressure_spec(ch, &k, &s, eps, nonlinear);
    let inv_eps = 1.0 / eps;
    // dv = −A_h − (v^⊥ + ∇p)/ε,  v^⊥ = (−v₂, v₁)
    let dvx = -(&a[0]) - (ch.s_ddx(&ps) - &s.v[1]) * inv_eps;
    let dvy = -(&a[1]) - (ch.s_ddy(&ps) + &s.v[0]) * inv_eps;
    let dw = -(&a[2]) - (ch.ddz_array(&ps) - &s.theta) * inv_eps;
    let mut dth = if nonlinear {
        let mut t = ch.fwd(&Field3 {
            data: advect(&k.v, Some(&k.w), &k.dth),
        });
        ch.s_dealias(&mut t);
        -t
    } else {
        Spectrum::zeros(s.w.dim())
    };
    dth = dth - &s.w * inv_eps;
    PrimitiveTendency {
        dv: HVector::new(ch.inv(&dvx), ch.inv(&dvy)),
        dw: ch.inv(&dw),
        dtheta: ch.inv(&dth),
        p: ch.inv(&ps),
        defect,
    }
}

/// Slow and fast kinematics of a limit state.
struct LimitKin {
    slow: Kin<f64>,
    fast: Kin<Complex64>,
    phi_s: Spectrum,
    psi_s: [Spectrum; 2],
}

fn limit_kin(ch: &Channel, l: &LimitState) -> LimitKin {
    let phi_s = ch.fwd(&l.phi);
    let (v, theta) = gpv::slow_spec(ch, &phi_s, &ch.fwd2(&l.h0), &ch.fwd2(&l.hh));
    let dims = theta.dim();
    let slow_spec = PrimSpec {
        v,
        w: Spectrum::zeros(dims),
        theta,
    };
    let mut slow = Kin::<f64>::from_spec(ch, &slow_spec);
    // exact traces, as in the reconstruction
    slow.th.index_axis_mut(ndarray::Axis(2), 0).assign(&l.h0.data);
    slow.th.index_axis_mut(ndarray::Axis(2), ch.grid.nz).assign(&l.hh.data);
    let psi_s = [ch.fwd(&l.psi.x), ch.fwd(&l.psi.y)];
    let fast_spec = gpv::fast_spec(ch, [&psi_s[0], &psi_s[1]], &l.z);
    let fast = Kin::<Complex64>::from_spec(ch, &fast_spec);
    LimitKin {
        slow,
        fast,
        phi_s,
        psi_s,
    }
}

fn n_phi_terms(f: &Kin<Complex64>) -> A3<f64> {
    let sl = |a: &A3<Complex64>| a.as_slice().expect("standard layout").to_vec();
    let [v1, v2] = &f.dv;
    let (v1x, v1y, v1z) = (sl(&v1[0]), sl(&v1[1]), sl(&v1[2]));
    let (v2x, v2y, v2z) = (sl(&v2[0]), sl(&v2[1]), sl(&v2[2]));
    let (tx, ty, tz) = (sl(&f.dth[0]), sl(&f.dth[1]), sl(&f.dth[2]));
    let (wx, wy, wz) = (sl(&f.dw[0]), sl(&f.dw[1]), sl(&f.dw[2]));
    let out: Vec<f64> = (0..v1x.len())
        .map(|i| {
            // pairing (+,−); the (−,+) pairing is its complex conjugate
            let curl = v2x[i] - v1y[i];
            let div = (v1x[i] + v2y[i]).conj();
            let mut c = curl * div;
            c += v1z[i] * (-wy[i]).conj() + v2z[i] * wx[i].conj();
            c += v1z[i] * tx[i].conj() + v2z[i] * ty[i].conj();
            c += wz[i] * tz[i].conj();
            2.0 * c.re
        })
        .collect();
    A3::from_shape_vec(f.w.dim(), out).expect("shape")
}

/// Slow × fast₊ part of `N₂` (`w_p = 0`).
fn n_psi_terms(s: &Kin<f64>, f: &Kin<Complex64>) -> [A3<Complex64>; 2] {
    let dims = s.w.dim();
    let mut ox = A3::<Complex64>::from_elem(dims, Complex64::default());
    let mut oy = ox.clone();
    let [p1, p2] = &s.dv;
    let [f1, f2] = &f.dv;
    for idx in 0..ox.len() {
        let at = |a: &A3<f64>| a.as_slice().unwrap()[idx];
        let atc = |a: &A3<Complex64>| a.as_slice().unwrap()[idx];
        let (p1x, p1y, p1z) = (at(&p1[0]), at(&p1[1]), at(&p1[2]));
        let (p2x, p2y, p2z) = (at(&p2[0]), at(&p2[1]), at(&p2[2]));
        let (f1x, f1y, f1z) = (atc(&f1[0]), atc(&f1[1]), atc(&f1[2]));
        let (f2x, f2y, f2z) = (atc(&f2[0]), atc(&f2[1]), atc(&f2[2]));
        let (tx, ty, tz) = (at(&s.dth[0]), at(&s.dth[1]), at(&s.dth[2]));
        let (cx, cy) = (atc(&f.dth[0]), atc(&f.dth[1]));
        let (wx, wy, wz) = (atc(&f.dw[0]), atc(&f.dw[1]), atc(&f.dw[2]));
        // (∇V₊)ᵀ∇θ_p + (∇v_p)ᵀ∇Θ₊, then ⊥
        let gx = f1x * tx + f2x * ty + cx * p1x + cy * p2x;
        let gy = f1y * tx + f2y * ty + cx * p1y + cy * p2y;
        let mut nx = -gy;
        let mut ny = gx;
        // ∂zθ_p ∇^⊥W₊
        nx += -wy * tz;
        ny += wx * tz;
        // (∇v_p)ᵀ∇W₊
        nx += wx * p1x + wy * p2x;
        ny += wx * p1y + wy * p2y;
        // − (∂zV₊·∇)v_p − (∂zv_p·∇)V₊
        nx -= f1z * p1x + f2z * p1y + f1x * p1z + f1y * p2z;
        ny -= f1z * p2x + f2z * p2y + f2x * p1z + f2y * p2z;
        // − ∂zW₊ ∂z v_p
        nx -= wz * p1z;
        ny -= wz * p2z;
        ox.as_slice_mut().unwrap()[idx] = nx;
        oy.as_slice_mut().unwrap()[idx] = ny;
    }
    [ox, oy]
}

/// `N + iN^⊥` for a complex horizontal vector.
fn plus_i_perp(x: Complex64, y: Complex64) -> (Complex64, Complex64) {
    let i = Complex64::new(0.0, 1.0);
    (x - i * y, y + i * x)
}

pub fn limit_n_phi(ch: &Channel, l: &LimitState) -> Result<ScalarField> {
    l.check(&ch.grid)?;
    let k = limit_kin(ch, l);
    Ok(Field3 {
        data: dealiased(ch, n_phi_terms(&k.fast)),
    })
}

pub fn limit_n_psi(ch: &Channel, l: &LimitState) -> Result<CHVectorField> {
    l.check(&ch.grid)?;
    let k = limit_kin(ch, l);
    let [x, y] = n_psi_terms(&k.slow, &k.fast);
    Ok(HVector::new(
        Field3 { data: dealiased(ch, x) },
        Field3 { data: dealiased(ch, y) },
    ))
}

pub fn limit_n_z(ch: &Channel, l: &LimitState) -> Result<VProfile<Complex64>> {
    l.check(&ch.grid)?;
    let k = limit_kin(ch, l);
    Ok(n3_terms(ch, &k.fast.w, &k.slow.v))
}

pub fn limit_tendency(ch: &Channel, l: &LimitState, nonlinear: bool) -> Result<LimitTendency> {
    l.check(&ch.grid)?;
    Ok(limit_tendency_unchecked(ch, l, nonlinear))
}

pub(crate) fn limit_tendency_unchecked(ch: &Channel, l: &LimitState, nonlinear: bool) -> LimitTendency {
    let grid = &ch.grid;
    if !nonlinear {
        return LimitTendency {
            dphi: ScalarField::zeros(grid),
            dh0: BoundaryField::zeros(grid),
            dhh: BoundaryField::zeros(grid),
            dpsi: CHVectorField::zeros(grid),
            dz: VProfile::zeros(grid),
        };
    }
    let k = limit_kin(ch, l);
    let s = &k.slow;

    let gphi = grad3(ch, &k.phi_s, &l.phi.data);
    let mut dphi = advect(&s.v, None, &gphi);
    let nphi = n_phi_terms(&k.fast);
    Zip::from(&mut dphi).and(&nphi).for_each(|d, &n| *d = -(*d + n));

    let gpx = grad3(ch, &k.psi_s[0], &l.psi.x.data);
    let gpy = grad3(ch, &k.psi_s[1], &l.psi.y.data);
    let mut dpx = advect(&s.v, None, &gpx);
    let mut dpy = advect(&s.v, None, &gpy);
    let [nx, ny] = n_psi_terms(s, &k.fast);
    Zip::from(&mut dpx)
        .and(&mut dpy)
        .and(&nx)
        .and(&ny)
        .for_each(|a, b, &nx, &ny| {
            let (px, py) = plus_i_perp(nx, ny);
            *a = -(*a + px);
            *b = -(*b + py);
        });

    let nz = grid.nz;
    let lid_adv = |level: usize| {
        let mut out = lid(&s.v[0], level) * lid(&s.dth[0], level) + lid(&s.v[1], level) * lid(&s.dth[1], level);
        out.mapv_inplace(|v| -v);
        BoundaryField {
            data: dealiased2(ch, out),
        }
    };
    let nzv = n3_terms(ch, &k.fast.w, &s.v);
    let (zx, zy): (Vec<_>, Vec<_>) = nzv
        .x
        .iter()
        .zip(&nzv.y)
        .map(|(&a, &b)| {
            let (p, q) = plus_i_perp(a, b);
            (-p, -q)
        })
        .unzip();
    LimitTendency {
        dphi: Field3 {
            data: dealiased(ch, dphi),
        },
        dh0: lid_adv(0),
        dhh: lid_adv(nz),
        dpsi: HVector::new(
            Field3 {
                data: dealiased(ch, dpx),
            },
            Field3 {
                data: dealiased(ch, dpy),
            },
        ),
        dz: VProfile {
            x: zx.into(),
            y: zy.into(),
        },
    }
}
