//! Sobolev norms, the energy functional `𝔈`, and per-step diagnostics.
//!
//! Horizontal integrals use Parseval on the normalised Fourier coefficients,
//! vertical integrals use Clenshaw–Curtis weights on the collocation nodes.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::field::{BoundaryField, Elem, Field3, HVector, ScalarField, VProfile};
use crate::spectral::{apply_vertical, Channel};
use crate::state::{validate_gpv, validate_primitive, DiagnosticsRecord, GpvState, PrimitiveState};

/// `∫|∂z^c F_k(z)|² dz` for every mode `k` and every `c ≤ s`.
fn vertical_mode_energies<T: Elem>(ch: &Channel, f: &Field3<T>, s: usize) -> Vec<Array2<f64>> {
    let mut spec = ch.fwd(f);
    let (nx, ny, nzp) = spec.dim();
    let w = &ch.vert.weights;
    let mut out = Vec::with_capacity(s + 1);
    for c in 0..=s {
        if c > 0 {
            spec = apply_vertical(&ch.vert.d, &spec);
        }
        let mut e = Array2::zeros((nx, ny));
        for i in 0..nx {
            for j in 0..ny {
                let mut acc = 0.0;
                for k in 0..nzp {
                    acc += w[k] * spec[(i, j, k)].norm_sqr();
                }
                e[(i, j)] = acc;
            }
        }
        out.push(e);
    }
    out
}

fn check_order(s: usize) -> Result<()> {
    if s > 3 {
        return Err(Error::Config(format!("Sobolev order must be 0..=3, got {s}")));
    }
    Ok(())
}

/// `‖f‖²_{H^s}` summed over all multi-indices `|α| ≤ s`.
pub fn sobolev_norm_sq<T: Elem>(ch: &Channel, f: &Field3<T>, s: usize) -> f64 {
    let e = vertical_mode_energies(ch, f, s);
    let (nx, ny) = e[0].dim();
    let mut total = 0.0;
    for i in 0..nx {
        for j in 0..ny {
            let (kx, ky) = ch.deriv_mult(i, j);
            let (ax, ay) = (kx * kx, ky * ky);
            for (c, ec) in e.iter().enumerate() {
                // Σ_{a+b ≤ s−c} kx^{2a} ky^{2b}
                let m = s - c;
                let mut weight = 0.0;
                for a in 0..=m {
                    for b in 0..=(m - a) {
                        weight += ax.powi(a as i32) * ay.powi(b as i32);
                    }
                }
                total += weight * ec[(i, j)];
            }
        }
    }
    total
}

/// Euclidean combination of `‖f‖_{H^s}` over a list of fields.
pub fn sobolev_norm<T: Elem>(ch: &Channel, fields: &[&Field3<T>], s: usize) -> Result<f64> {
    check_order(s)?;
    let mut total = 0.0;
    for f in fields {
        f.check(&ch.grid, "field")?;
        total += sobolev_norm_sq(ch, f, s);
    }
    Ok(total.sqrt())
}

pub fn vector_sobolev_norm<T: Elem>(ch: &Channel, x: &HVector<T>, s: usize) -> Result<f64> {
    sobolev_norm(ch, &[&x.x, &x.y], s)
}

pub fn l2_norm<T: Elem>(ch: &Channel, f: &Field3<T>) -> f64 {
    sobolev_norm_sq(ch, f, 0).sqrt()
}

/// `H^s` norm of a horizontally constant vector field given by its profile.
pub fn profile_sobolev_norm<T: Elem>(ch: &Channel, p: &VProfile<T>, s: usize) -> Result<f64> {
    check_order(s)?;
    p.check(&ch.grid, "profile")?;
    let mut total = 0.0;
    for comp in [&p.x, &p.y] {
        let mut d = comp.clone();
        for c in 0..=s {
            if c > 0 {
                d = ch.ddz_profile(&d);
            }
            total += d
                .iter()
                .zip(&ch.vert.weights)
                .map(|(v, w)| w * v.abs() * v.abs())
                .sum::<f64>();
        }
    }
    Ok(total.sqrt())
}

/// Bessel-potential norm `(Σ (1 + |2πk|²)^s |B_k|²)^{1/2}` on the torus; any
/// real `s`, so the fractional trace norms are exact here.
pub fn boundary_norm(ch: &Channel, b: &BoundaryField, s: f64) -> f64 {
    let spec = ch.fwd2(b);
    let mut total = 0.0;
    for ((i, j), c) in spec.indexed_iter() {
        total += (1.0 + ch.k2(i, j)).powf(s) * c.norm_sqr();
    }
    total.sqrt()
}

/// Sup norm of the trigonometric interpolant of `b`, not just of its nodal
/// values. Local maxima are polished by Newton iteration from the largest
/// nodes, so a feature moving between nodes does not read as growth.
pub fn interpolant_sup_norm(ch: &Channel, b: &BoundaryField) -> f64 {
    let spec = ch.fwd2(b);
    let modes: Vec<(f64, f64, f64, f64)> = spec
        .indexed_iter()
        .filter(|(_, c)| c.norm_sqr() > 0.0)
        .map(|((i, j), c)| {
            let (kx, ky) = ch.wavenumbers(i, j);
            (
                2.0 * std::f64::consts::PI * kx as f64,
                2.0 * std::f64::consts::PI * ky as f64,
                c.re,
                c.im,
            )
        })
        .collect();
    // value, gradient and Hessian of Re Σ c_k e^{i k·x}
    let eval = |x: f64, y: f64| {
        let (mut f, mut g, mut h) = (0.0, [0.0; 2], [0.0; 3]);
        for &(kx, ky, cr, ci) in &modes {
            let (s, c) = (kx * x + ky * y).sin_cos();
            let re = cr * c - ci * s;
            let d = -(cr * s + ci * c);
            f += re;
            g[0] += kx * d;
            g[1] += ky * d;
            h[0] -= kx * kx * re;
            h[1] -= kx * ky * re;
            h[2] -= ky * ky * re;
        }
        (f, g, h)
    };
    let (nx, ny) = (ch.grid.nx, ch.grid.ny);
    let mut starts: Vec<(usize, usize)> = (0..nx).flat_map(|i| (0..ny).map(move |j| (i, j))).collect();
    starts.sort_by(|p, q| b_abs(b, *q).total_cmp(&b_abs(b, *p)));
    let mut best = b.max_abs();
    for &(i, j) in starts.iter().take(8) {
        let (mut x, mut y) = (ch.grid.x(i), ch.grid.y(j));
        let sign = b.data[[i, j]].signum();
        let hx = 1.0 / nx.max(ny) as f64;
        for _ in 0..30 {
            let (_, g, h) = eval(x, y);
            let (g, h) = ([sign * g[0], sign * g[1]], [sign * h[0], sign * h[1], sign * h[2]]);
            let det = h[0] * h[2] - h[1] * h[1];
            // Newton only where the surface is locally concave
            let (dx, dy) = if h[0] < 0.0 && det > 0.0 {
                (-(h[2] * g[0] - h[1] * g[1]) / det, -(h[0] * g[1] - h[1] * g[0]) / det)
            } else {
                let n = (g[0] * g[0] + g[1] * g[1]).sqrt().max(f64::MIN_POSITIVE);
                (0.25 * hx * g[0] / n, 0.25 * hx * g[1] / n)
            };
            let len = (dx * dx + dy * dy).sqrt();
            let scale = if len > hx { hx / len } else { 1.0 };
            x += dx * scale;
            y += dy * scale;
            if len < 1e-14 {
                break;
            }
        }
        best = best.max(eval(x, y).0.abs());
    }
    best
}

fn b_abs(b: &BoundaryField, (i, j): (usize, usize)) -> f64 {
    b.data[[i, j]].abs()
}

/// `[‖∂x^α f‖, ‖∂y^α f‖]` for `α = 0..=3`.
pub fn horizontal_tower<T: Elem>(ch: &Channel, f: &Field3<T>) -> [[f64; 4]; 2] {
    let e = &vertical_mode_energies(ch, f, 0)[0];
    let mut out = [[0.0; 4]; 2];
    for ((i, j), &en) in e.indexed_iter() {
        let (kx, ky) = ch.deriv_mult(i, j);
        for a in 0..4 {
            out[0][a] += kx.powi(2 * a as i32) * en;
            out[1][a] += ky.powi(2 * a as i32) * en;
        }
    }
    for row in out.iter_mut() {
        for v in row.iter_mut() {
            *v = v.sqrt();
        }
    }
    out
}

/// `𝔈` from a primitive state and its GPV image. Norms of tuples are sums
/// of the component norms, `‖A, B‖ = ‖A‖ + ‖B‖`.
pub fn energy_functional_with(ch: &Channel, p: &PrimitiveState, g: &GpvState) -> f64 {
    let phi = sobolev_norm_sq(ch, &g.phi, 2).sqrt();
    let psi = (sobolev_norm_sq(ch, &g.psi.x, 2) + sobolev_norm_sq(ch, &g.psi.y, 2)).sqrt();
    let mut e = (phi + psi).powi(2);
    let tv = [horizontal_tower(ch, &p.v.x), horizontal_tower(ch, &p.v.y)];
    let tw = horizontal_tower(ch, &p.w);
    let tt = horizontal_tower(ch, &p.theta);
    for dir in 0..2 {
        for a in 0..4 {
            let v = (tv[0][dir][a].powi(2) + tv[1][dir][a].powi(2)).sqrt();
            e += (v + tw[dir][a] + tt[dir][a]).powi(2);
        }
    }
    e
}

pub fn energy_functional(ch: &Channel, p: &PrimitiveState) -> Result<f64> {
    p.check(&ch.grid)?;
    let g = crate::gpv::extract_gpv_unchecked(ch, p);
    Ok(energy_functional_with(ch, p, &g))
}

/// `‖v, w, θ‖²_{L²}`.
pub fn l2_energy(ch: &Channel, p: &PrimitiveState) -> f64 {
    [&p.v.x, &p.v.y, &p.w, &p.theta]
        .iter()
        .map(|f| sobolev_norm_sq(ch, f, 0))
        .sum()
}

pub fn h3_norm(ch: &Channel, p: &PrimitiveState) -> f64 {
    [&p.v.x, &p.v.y, &p.w, &p.theta]
        .iter()
        .map(|f| sobolev_norm_sq(ch, f, 3))
        .sum::<f64>()
        .sqrt()
}

/// Full diagnostics row for a primitive state and its GPV image.
pub fn diagnostics(ch: &Channel, p: &PrimitiveState, g: &GpvState) -> DiagnosticsRecord {
    let pr = validate_primitive(ch, p, f64::INFINITY);
    let gr = validate_gpv(ch, g, f64::INFINITY);
    DiagnosticsRecord {
        t: p.t,
        e_frak: energy_functional_with(ch, p, g),
        l2_energy: l2_energy(ch, p),
        h3_norm: h3_norm(ch, p),
        div_residual: pr.div_residual,
        bc_residual: pr.bc_residual,
        mean_residual: gr.mean_residual,
        compat_residual: gr.compat_residual,
    }
}

/// `‖a − b‖_{H^s}` for real fields.
pub fn diff_norm(ch: &Channel, a: &ScalarField, b: &ScalarField, s: usize) -> f64 {
    sobolev_norm_sq(ch, &a.sub(b), s).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ChannelGrid;
    use std::f64::consts::PI;

    fn channel(h: f64) -> Channel {
        Channel::new(ChannelGrid::new(16, 16, 16, h).unwrap()).unwrap()
    }

    #[test]
    fn constant_field() {
        let h = 1.7;
        let ch = channel(h);
        let one = ScalarField::constant(&ch.grid, 1.0);
        let n = sobolev_norm(&ch, &[&one], 0).unwrap();
        assert!((n - h.sqrt()).abs() < 1e-14);
        let zero = ScalarField::zeros(&ch.grid);
        for s in 0..=3 {
            assert_eq!(sobolev_norm(&ch, &[&zero], s).unwrap(), 0.0);
        }
        assert!(sobolev_norm(&ch, &[&zero], 4).is_err());
    }

    #[test]
    fn single_sine_h1() {
        let h = 1.3;
        let ch = channel(h);
        let f = ScalarField::from_fn(&ch.grid, |x, _, _| (2.0 * PI * x).sin());
        let n = sobolev_norm(&ch, &[&f], 1).unwrap();
        let exact = ((0.5 + 4.0 * PI * PI / 2.0) * h).sqrt();
        assert!((n - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn norms_increase_with_order() {
        let ch = channel(1.0);
        let f = ScalarField::from_fn(&ch.grid, |x, y, z| (2.0 * PI * (x + 2.0 * y)).cos() * (z * z - 0.3) + z);
        let mut prev = 0.0;
        for s in 0..=3 {
            let n = sobolev_norm(&ch, &[&f], s).unwrap();
            assert!(n >= prev);
            prev = n;
        }
    }

    #[test]
    fn vertical_derivatives_enter() {
        // f = z on [0, h]: ‖f‖² = h³/3, ‖∂z f‖² = h
        let h = 2.0;
        let ch = channel(h);
        let f = ScalarField::from_fn(&ch.grid, |_, _, z| z);
        let n2 = sobolev_norm_sq(&ch, &f, 2);
        assert!((n2 - (h.powi(3) / 3.0 + h)).abs() < 1e-12);
    }

    #[test]
    fn profile_and_field_norms_agree() {
        let ch = channel(1.0);
        let p = VProfile::from_fn(&ch.grid, |z| ((3.0 * z).sin(), z * z));
        let b = p.broadcast(&ch.grid);
        let a = profile_sobolev_norm(&ch, &p, 2).unwrap();
        let c = vector_sobolev_norm(&ch, &b, 2).unwrap();
        assert!((a - c).abs() < 1e-12 * c);
    }

    #[test]
    fn boundary_norm_of_mode() {
        let ch = channel(1.0);
        let b = BoundaryField::from_fn(&ch.grid, |x, _| (2.0 * PI * x).cos());
        let n = boundary_norm(&ch, &b, 0.5);
        let exact = ((1.0 + 4.0 * PI * PI).sqrt() / 2.0).sqrt();
        assert!((n - exact).abs() < 1e-13);
    }

    #[test]
    fn interpolant_sup_between_nodes() {
        // peak of cos(2π(x − x₀)) sits between nodes of a 16 grid
        let ch = channel(1.0);
        let x0 = 0.37 / 16.0;
        let b = BoundaryField::from_fn(&ch.grid, |x, y| {
            2.0 * (2.0 * PI * (x - x0)).cos() + 0.5 * (4.0 * PI * y).sin()
        });
        assert!(b.max_abs() < 2.5 - 1e-3);
        let m = interpolant_sup_norm(&ch, &b);
        assert!((m - 2.5).abs() < 1e-12, "{m}");
    }
}
