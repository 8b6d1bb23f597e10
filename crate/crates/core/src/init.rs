//! Initial-data generators: seeded random solenoidal states, balanced
//! states from a pressure stream function, and single-mode states.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{HVector, ScalarField, VProfile};
use crate::spectral::Channel;
use crate::state::PrimitiveState;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trig {
    #[default]
    Sin,
    Cos,
}

impl Trig {
    fn eval(self, a: f64) -> f64 {
        match self {
            Trig::Sin => a.sin(),
            Trig::Cos => a.cos(),
        }
    }
}

/// One separable term `amplitude · X(2π kx x) · Y(2π ky y) · Z(mπz/h)` of
/// the balanced stream function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct P0Term {
    pub amplitude: f64,
    pub kx: i64,
    pub ky: i64,
    pub m: u32,
    #[serde(default)]
    pub x: Trig,
    #[serde(default)]
    pub y: Trig,
    #[serde(default)]
    pub z: Trig,
}

fn default_vertical_modes() -> u32 {
    3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    RandomSeeded {
        seed: u64,
        /// Largest horizontal wavenumber (sup norm) carried by the data.
        bandwidth: u32,
        amplitude: f64,
        #[serde(default = "default_vertical_modes")]
        vertical_modes: u32,
    },
    Balanced {
        p0: Vec<P0Term>,
    },
    SingleMode {
        k: [i64; 2],
        m: u32,
        amplitude: f64,
    },
    FromSnapshot {
        path: String,
    },
}

impl InitialData {
    /// Checks the horizontal band limit against the 2/3 rule of the grid.
    pub fn validate(&self, grid: &crate::grid::ChannelGrid) -> Result<()> {
        let limit = crate::grid::ChannelGrid::dealias_cutoff(grid.nx.min(grid.ny));
        let check = |k: i64, what: &str| {
            if k.abs() > limit {
                Err(Error::Config(format!(
                    "{what} wavenumber {k} exceeds the dealias limit {limit}"
                )))
            } else {
                Ok(())
            }
        };
        match self {
            InitialData::RandomSeeded {
                bandwidth, amplitude, ..
            } => {
                check(*bandwidth as i64, "bandwidth")?;
                if !amplitude.is_finite() {
                    return Err(Error::Config("amplitude must be finite".into()));
                }
            }
            InitialData::Balanced { p0 } => {
                for t in p0 {
                    check(t.kx, "p0")?;
                    check(t.ky, "p0")?;
                }
            }
            InitialData::SingleMode { k, m, .. } => {
                check(k[0], "mode")?;
                check(k[1], "mode")?;
                if k[0] == 0 && k[1] == 0 {
                    return Err(Error::Config(
                        "single mode needs a nonzero horizontal wavenumber".into(),
                    ));
                }
                if *m == 0 {
                    return Err(Error::Config("single mode needs a vertical index m ≥ 1".into()));
                }
            }
            InitialData::FromSnapshot { .. } => {}
        }
        Ok(())
    }
}

/// Builds the primitive initial state; snapshots of GPV or limit states are
/// reconstructed to primitive form.
pub fn generate_initial(ch: &Channel, spec: &InitialData, eps: f64) -> Result<PrimitiveState> {
    spec.validate(&ch.grid)?;
    match spec {
        InitialData::RandomSeeded {
            seed,
            bandwidth,
            amplitude,
            vertical_modes,
        } => Ok(random_seeded(ch, *seed, *bandwidth, *amplitude, *vertical_modes, eps)),
        InitialData::Balanced { p0 } => Ok(balanced(ch, p0, eps)),
        InitialData::SingleMode { k, m, amplitude } => Ok(single_mode(ch, *k, *m, *amplitude, eps)),
        InitialData::FromSnapshot { path } => {
            let (header, state) = crate::snapshot::read_snapshot(path)?;
            if header.grid.shape() != ch.grid.shape() || header.grid.h != ch.grid.h {
                return Err(Error::Config(format!(
                    "snapshot grid {:?} does not match the run grid",
                    header.grid
                )));
            }
            let mut p = state.into_primitive(ch, eps)?;
            p.eps = eps;
            Ok(p)
        }
    }
}

/// Horizontal wavenumbers of the upper half plane with sup norm `≤ k`.
fn half_plane(k: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for kx in 0..=k {
        for ky in -k..=k {
            if kx > 0 || ky > 0 {
                out.push((kx, ky));
            }
        }
    }
    out
}

/// Random sum `Σ a cos(2π k·x + φ) Z_m(z)` with spectral decay.
fn random_sum(
    ch: &Channel,
    rng: &mut ChaCha8Rng,
    modes: &[(i64, i64)],
    ms: std::ops::RangeInclusive<u32>,
    vert: Trig,
) -> ScalarField {
    let h = ch.grid.h;
    let mut terms = Vec::new();
    for &(kx, ky) in modes {
        for m in ms.clone() {
            let a: f64 = rng.random_range(-1.0..1.0);
            let phase: f64 = rng.random_range(0.0..2.0 * PI);
            let decay = 1.0 / (1.0 + (kx * kx + ky * ky) as f64 + (m * m) as f64);
            terms.push((kx as f64, ky as f64, m as f64, a * decay, phase));
        }
    }
    ScalarField::from_fn(&ch.grid, |x, y, z| {
        terms
            .iter()
            .map(|&(kx, ky, m, a, ph)| a * (2.0 * PI * (kx * x + ky * y) + ph).cos() * vert.eval(m * PI * z / h))
            .sum()
    })
}

fn normalise(f: &ScalarField) -> f64 {
    let m = f.max_abs();
    if m > 0.0 {
        1.0 / m
    } else {
        0.0
    }
}

/// Divergent horizontal velocity `−∇Δh⁻¹ ∂z w` balancing `w`.
fn divergent_part(ch: &Channel, w: &ScalarField) -> HVector<f64> {
    let s = ch.s_inv_lap_h(&ch.fwd(&ch.ddz(w)));
    HVector::new(ch.inv::<f64>(&ch.s_ddx(&s)).neg(), ch.inv::<f64>(&ch.s_ddy(&s)).neg())
}

/// `∇^⊥χ = (−∂y χ, ∂x χ)`.
fn perp_grad(ch: &Channel, chi: &ScalarField) -> HVector<f64> {
    let s = ch.fwd(chi);
    HVector::new(ch.inv::<f64>(&ch.s_ddy(&s)).neg(), ch.inv(&ch.s_ddx(&s)))
}

fn zero_lids(ch: &Channel, w: &mut ScalarField) {
    let zero = ndarray::Array2::zeros((ch.grid.nx, ch.grid.ny));
    w.set_level(0, &zero);
    w.set_level(ch.grid.nz, &zero);
}

/// Band-limited solenoidal `(v, w)` with `w = 0` on the lids and a
/// band-limited `θ`. Velocities are scaled to `max|u| = amplitude`, `θ` to
/// `max|θ| = amplitude`.
pub fn random_seeded(
    ch: &Channel,
    seed: u64,
    bandwidth: u32,
    amplitude: f64,
    vertical_modes: u32,
    eps: f64,
) -> PrimitiveState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes = half_plane(bandwidth as i64);
    let mv = vertical_modes.max(1);
    let mut w = random_sum(ch, &mut rng, &modes, 1..=mv, Trig::Sin);
    zero_lids(ch, &mut w);
    let chi = random_sum(ch, &mut rng, &modes, 0..=mv, Trig::Cos);
    let mut theta = random_sum(ch, &mut rng, &modes, 0..=mv, Trig::Cos);
    let mut mean_coef = Vec::new();
    for m in 0..=mv {
        let a: f64 = rng.random_range(-1.0..1.0);
        let b: f64 = rng.random_range(-1.0..1.0);
        mean_coef.push((m as f64, a / (1.0 + (m * m) as f64), b / (1.0 + (m * m) as f64)));
    }
    let strat: Vec<(f64, f64)> = (1..=mv)
        .map(|m| (m as f64, rng.random_range(-1.0..1.0) / (1.0 + (m * m) as f64)))
        .collect();
    let h = ch.grid.h;
    let profile = VProfile::from_fn(&ch.grid, |z| {
        mean_coef.iter().fold((0.0, 0.0), |(x, y), &(m, a, b)| {
            let c = (m * PI * z / h).cos();
            (x + a * c, y + b * c)
        })
    });
    let strat_field = ScalarField::from_fn(&ch.grid, |_, _, z| {
        strat.iter().map(|&(m, a)| a * (m * PI * z / h).cos()).sum()
    });
    theta = theta.add(&strat_field);

    let mut v = divergent_part(ch, &w)
        .add(&perp_grad(ch, &chi))
        .add(&profile.broadcast(&ch.grid));
    let mut p = PrimitiveState {
        v: v.clone(),
        w: w.clone(),
        theta: theta.clone(),
        t: 0.0,
        eps,
    };
    let su = {
        let m = p.max_speed();
        if m > 0.0 {
            amplitude / m
        } else {
            0.0
        }
    };
    v = v.scale(su);
    w = w.scale(su);
    theta = theta.scale(amplitude * normalise(&theta));
    p.v = v;
    p.w = w;
    p.theta = theta;
    p
}

/// Geostrophic state `v = ∇^⊥p⁰`, `θ = ∂z p⁰`, `w = 0`, with derivatives
/// taken by the discrete operators so that `Ψ` vanishes to round-off.
pub fn balanced(ch: &Channel, p0: &[P0Term], eps: f64) -> PrimitiveState {
    let h = ch.grid.h;
    let p = ScalarField::from_fn(&ch.grid, |x, y, z| {
        p0.iter()
            .map(|t| {
                t.amplitude
                    * t.x.eval(2.0 * PI * t.kx as f64 * x)
                    * t.y.eval(2.0 * PI * t.ky as f64 * y)
                    * t.z.eval(t.m as f64 * PI * z / h)
            })
            .sum()
    });
    PrimitiveState {
        v: perp_grad(ch, &p),
        w: ScalarField::zeros(&ch.grid),
        theta: ch.ddz(&p),
        t: 0.0,
        eps,
    }
}

/// Unbalanced state built on one horizontal wavevector `k` and vertical
/// index `m`: `w = A sin(2πk·x) sin(mπz/h)` with its divergent partner, a
/// rotational velocity and a temperature of the same shape.
pub fn single_mode(ch: &Channel, k: [i64; 2], m: u32, amplitude: f64, eps: f64) -> PrimitiveState {
    let h = ch.grid.h;
    let (kx, ky) = (k[0] as f64, k[1] as f64);
    let kn = 2.0 * PI * (kx * kx + ky * ky).sqrt();
    let mz = m as f64 * PI / h;
    let a = amplitude;
    let mut w = ScalarField::from_fn(&ch.grid, |x, y, z| {
        a * (2.0 * PI * (kx * x + ky * y)).sin() * (mz * z).sin()
    });
    zero_lids(ch, &mut w);
    let chi = ScalarField::from_fn(&ch.grid, |x, y, z| {
        a / kn * (2.0 * PI * (kx * x + ky * y)).cos() * (mz * z).cos()
    });
    let theta = ScalarField::from_fn(&ch.grid, |x, y, z| {
        a * (2.0 * PI * (kx * x + ky * y)).cos() * (mz * z).cos()
    });
    PrimitiveState {
        v: divergent_part(ch, &w).add(&perp_grad(ch, &chi)),
        w,
        theta,
        t: 0.0,
        eps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ChannelGrid;
    use crate::state::validate_primitive;

    fn channel() -> Channel {
        Channel::new(ChannelGrid::new(16, 16, 16, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn random_state_is_solenoidal() {
        let ch = channel();
        let p = random_seeded(&ch, 7, 3, 0.5, 3, 0.1);
        let r = validate_primitive(&ch, &p, 1e-10);
        assert!(r.pass, "{r:?}");
        assert!((p.max_speed() - 0.5).abs() < 1e-12);
        assert!((p.theta.max_abs() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn seeds_are_deterministic() {
        let ch = channel();
        let a = random_seeded(&ch, 11, 4, 1.0, 2, 0.1);
        let b = random_seeded(&ch, 11, 4, 1.0, 2, 0.1);
        let c = random_seeded(&ch, 12, 4, 1.0, 2, 0.1);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_amplitude() {
        let ch = channel();
        let p = random_seeded(&ch, 3, 2, 0.0, 2, 0.1);
        assert_eq!(p, PrimitiveState::zeros(&ch.grid, 0.1));
    }

    #[test]
    fn bandwidth_limit() {
        let ch = channel();
        let spec = InitialData::RandomSeeded {
            seed: 1,
            bandwidth: 6,
            amplitude: 1.0,
            vertical_modes: 2,
        };
        assert!(matches!(generate_initial(&ch, &spec, 0.1), Err(Error::Config(_))));
    }

    #[test]
    fn single_mode_is_solenoidal() {
        let ch = channel();
        let p = single_mode(&ch, [1, 1], 1, 1.0, 0.1);
        assert!(validate_primitive(&ch, &p, 1e-10).pass);
        assert!(p.v.max_abs() > 0.1);
    }

    #[test]
    fn config_round_trip() {
        let spec: InitialData =
            serde_json::from_str(r#"{"kind":"balanced","p0":[{"amplitude":1.0,"kx":1,"ky":1,"m":1}]}"#).unwrap();
        let InitialData::Balanced { p0 } = &spec else { panic!() };
        assert_eq!(p0[0].x, Trig::Sin);
        let s = serde_json::to_string(&spec).unwrap();
        assert_eq!(serde_json::from_str::<InitialData>(&s).unwrap(), spec);
    }
}
