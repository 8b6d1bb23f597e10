//! State containers for the three formulations and their constraint checks.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{BoundaryField, CHVectorField, CScalarField, HVectorField, ScalarField, VProfile};
use crate::grid::ChannelGrid;
use crate::spectral::Channel;

/// `(v, w, θ)` at time `t` for Rossby/Froude number `eps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveState {
    pub v: HVectorField,
    pub w: ScalarField,
    pub theta: ScalarField,
    pub t: f64,
    pub eps: f64,
}

impl PrimitiveState {
    pub fn zeros(grid: &ChannelGrid, eps: f64) -> Self {
        Self {
            v: HVectorField::zeros(grid),
            w: ScalarField::zeros(grid),
            theta: ScalarField::zeros(grid),
            t: 0.0,
            eps,
        }
    }

    pub fn check(&self, grid: &ChannelGrid) -> Result<()> {
        self.v.check(grid, "v")?;
        self.w.check(grid, "w")?;
        self.theta.check(grid, "theta")?;
        if !self.v.is_finite() {
            return Err(Error::NonFinite("v"));
        }
        if !self.w.is_finite() {
            return Err(Error::NonFinite("w"));
        }
        if !self.theta.is_finite() {
            return Err(Error::NonFinite("theta"));
        }
        Ok(())
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            v: self.v.scale(a),
            w: self.w.scale(a),
            theta: self.theta.scale(a),
            ..*self
        }
    }

    pub fn max_speed(&self) -> f64 {
        let mut m: f64 = 0.0;
        for ((a, b), c) in self.v.x.data.iter().zip(&self.v.y.data).zip(&self.w.data) {
            m = m.max((a * a + b * b + c * c).sqrt());
        }
        m
    }
}

/// Generalized potential vorticity `(Φ, Ψ)` with lid traces of `θ` and the
/// horizontal-mean velocity profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GpvState {
    pub phi: ScalarField,
    pub psi: HVectorField,
    pub h0: BoundaryField,
    pub hh: BoundaryField,
    pub z: VProfile<f64>,
    pub t: f64,
    pub eps: f64,
}

impl GpvState {
    pub fn zeros(grid: &ChannelGrid, eps: f64) -> Self {
        Self {
            phi: ScalarField::zeros(grid),
            psi: HVectorField::zeros(grid),
            h0: BoundaryField::zeros(grid),
            hh: BoundaryField::zeros(grid),
            z: VProfile::zeros(grid),
            t: 0.0,
            eps,
        }
    }

    pub fn check(&self, grid: &ChannelGrid) -> Result<()> {
        self.phi.check(grid, "phi")?;
        self.psi.check(grid, "psi")?;
        self.h0.check(grid, "H0")?;
        self.hh.check(grid, "Hh")?;
        self.z.check(grid, "Z")?;
        let finite = self.phi.is_finite()
            && self.psi.is_finite()
            && self.h0.is_finite()
            && self.hh.is_finite()
            && self.z.is_finite();
        if !finite {
            return Err(Error::NonFinite("GPV state"));
        }
        Ok(())
    }
}

/// Slow limit variables and the `+` fast envelopes; the `−` branch is the
/// complex conjugate and is never stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitState {
    pub phi: ScalarField,
    pub h0: BoundaryField,
    pub hh: BoundaryField,
    pub psi: CHVectorField,
    pub z: VProfile<Complex64>,
    pub t: f64,
}

impl LimitState {
    pub fn zeros(grid: &ChannelGrid) -> Self {
        Self {
            phi: ScalarField::zeros(grid),
            h0: BoundaryField::zeros(grid),
            hh: BoundaryField::zeros(grid),
            psi: CHVectorField::zeros(grid),
            z: VProfile::zeros(grid),
            t: 0.0,
        }
    }

    pub fn check(&self, grid: &ChannelGrid) -> Result<()> {
        self.phi.check(grid, "phi_p")?;
        self.h0.check(grid, "Hp0")?;
        self.hh.check(grid, "Hph")?;
        self.psi.check(grid, "psi_p")?;
        self.z.check(grid, "z_p")?;
        let finite = self.phi.is_finite()
            && self.h0.is_finite()
            && self.hh.is_finite()
            && self.psi.is_finite()
            && self.z.is_finite();
        if !finite {
            return Err(Error::NonFinite("limit state"));
        }
        Ok(())
    }

    pub fn has_fast_content(&self) -> bool {
        self.psi.max_abs() > 0.0 || self.z.max_abs() > 0.0
    }
}

/// Filtered fast variables `Ψ₊ = e^{−it/ε}(Ψ + iΨ^⊥)`, `Z₊` likewise.
#[derive(Clone, Debug, PartialEq)]
pub struct FastPair {
    pub psi_plus: CHVectorField,
    pub z_plus: VProfile<Complex64>,
}

/// Primitive fast components `(V₊, W₊, Θ₊)` of a limit state.
#[derive(Clone, Debug, PartialEq)]
pub struct FastComponents {
    pub v_plus: CHVectorField,
    pub w_plus: CScalarField,
    pub theta_plus: CScalarField,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PrimitiveReport {
    /// `‖div_h v + ∂z w‖_{L²}`.
    pub div_residual: f64,
    /// `max |w|` over both lids.
    pub bc_residual: f64,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GpvReport {
    /// `max_z |mean Ψ + ∂z Z|`.
    pub mean_residual: f64,
    /// `|∫Φ − ∫(Hh − H0)|`.
    pub compat_residual: f64,
    pub pass: bool,
}

pub fn divergence(ch: &Channel, v: &HVectorField, w: &ScalarField) -> ScalarField {
    ch.div_h(v).add(&ch.ddz(w))
}

pub fn validate_primitive(ch: &Channel, p: &PrimitiveState, tol: f64) -> PrimitiveReport {
    let div = divergence(ch, &p.v, &p.w);
    let div_residual = crate::norms::l2_norm(ch, &div);
    let nz = ch.grid.nz;
    let bc_residual =
        p.w.level(0)
            .iter()
            .chain(p.w.level(nz).iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
    PrimitiveReport {
        div_residual,
        bc_residual,
        pass: div_residual <= tol && bc_residual <= tol,
    }
}

pub fn gpv_residuals(
    ch: &Channel,
    phi: &ScalarField,
    psi: &HVectorField,
    h0: &BoundaryField,
    hh: &BoundaryField,
    z: &VProfile<f64>,
) -> (f64, f64) {
    let mean = ch.horizontal_mean_vec(psi);
    let dz = VProfile {
        x: ch.ddz_profile(&z.x),
        y: ch.ddz_profile(&z.y),
    };
    let mean_residual = mean.add(&dz).max_abs();
    let compat = ch.integrate(phi) - (hh.mean() - h0.mean());
    (mean_residual, compat.abs())
}

pub fn validate_gpv(ch: &Channel, g: &GpvState, tol: f64) -> GpvReport {
    let (mean_residual, compat_residual) = gpv_residuals(ch, &g.phi, &g.psi, &g.h0, &g.hh, &g.z);
    GpvReport {
        mean_residual,
        compat_residual,
        pass: mean_residual <= tol && compat_residual <= tol,
    }
}

/// Compatibility defect `∫Φ_p − ∫(H_{p,h} − H_{p,0})` of a limit state.
pub fn limit_compat_residual(ch: &Channel, l: &LimitState) -> f64 {
    (ch.integrate(&l.phi) - (l.hh.mean() - l.h0.mean())).abs()
}

/// One row of the diagnostics time series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub e_frak: f64,
    pub l2_energy: f64,
    pub h3_norm: f64,
    pub div_residual: f64,
    pub bc_residual: f64,
    pub mean_residual: f64,
    pub compat_residual: f64,
}

impl DiagnosticsRecord {
    pub const CSV_HEADER: &'static str =
        "t,E_frak,l2_energy,h3_norm,div_residual,bc_residual,mean_residual,compat_residual";

    fn values(&self) -> [f64; 8] {
        [
            self.t,
            self.e_frak,
            self.l2_energy,
            self.h3_norm,
            self.div_residual,
            self.bc_residual,
            self.mean_residual,
            self.compat_residual,
        ]
    }

    /// 17 significant digits, so the row parses back to identical values.
    pub fn to_csv_row(&self) -> String {
        self.values()
            .iter()
            .map(|v| format!("{v:.16e}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn from_csv_row(row: &str) -> Result<Self> {
        let vals: Vec<f64> = row
            .trim()
            .split(',')
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad CSV value {s:?}: {e}")))
            })
            .collect::<Result<_>>()?;
        if vals.len() != 8 {
            return Err(Error::Config(format!("expected 8 CSV columns, got {}", vals.len())));
        }
        Ok(Self {
            t: vals[0],
            e_frak: vals[1],
            l2_energy: vals[2],
            h3_norm: vals[3],
            div_residual: vals[4],
            bc_residual: vals[5],
            mean_residual: vals[6],
            compat_residual: vals[7],
        })
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn channel() -> Channel {
        Channel::new(ChannelGrid::new(16, 16, 16, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn manufactured_solenoidal_state_passes() {
        let ch = channel();
        let h = 1.0;
        // ∂x v₁ = −∂z w with w = sin(2πx) sin(πz/h)
        let w = ScalarField::from_fn(&ch.grid, |x, _, z| (2.0 * PI * x).sin() * (PI * z / h).sin());
        let v1 = ScalarField::from_fn(&ch.grid, |x, _, z| {
            (2.0 * PI * x).cos() * (PI * z / h).cos() / (2.0 * h)
        });
        let p = PrimitiveState {
            v: HVectorField::new(v1, ScalarField::zeros(&ch.grid)),
            w,
            theta: ScalarField::zeros(&ch.grid),
            t: 0.0,
            eps: 0.1,
        };
        let r = validate_primitive(&ch, &p, 1e-8);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn lid_violation_is_reported() {
        let ch = channel();
        let mut p = PrimitiveState::zeros(&ch.grid, 0.1);
        p.w = ScalarField::from_fn(&ch.grid, |_, _, z| z);
        let r = validate_primitive(&ch, &p, 1e-8);
        assert!(!r.pass);
        assert_eq!(r.bc_residual, 1.0);
        let r = validate_primitive(&ch, &PrimitiveState::zeros(&ch.grid, 0.1), 1e-8);
        assert!(r.pass && r.div_residual == 0.0 && r.bc_residual == 0.0);
    }

    #[test]
    fn gpv_mean_constraint() {
        let ch = channel();
        let mut g = GpvState::zeros(&ch.grid, 0.1);
        assert!(validate_gpv(&ch, &g, 1e-10).pass);
        g.psi.x = ScalarField::constant(&ch.grid, 1.0);
        let r = validate_gpv(&ch, &g, 1e-10);
        assert!(!r.pass && (r.mean_residual - 1.0).abs() < 1e-14);
    }

    #[test]
    fn csv_round_trip() {
        let r = DiagnosticsRecord {
            t: 0.1,
            e_frak: 1.0 / 3.0,
            l2_energy: PI,
            h3_norm: 1e-300,
            div_residual: 0.0,
            bc_residual: 2.5e-17,
            mean_residual: 7.0,
            compat_residual: f64::MIN_POSITIVE,
        };
        let back = DiagnosticsRecord::from_csv_row(&r.to_csv_row()).unwrap();
        assert_eq!(r, back);
        assert_eq!(DiagnosticsRecord::CSV_HEADER.split(',').count(), 8);
    }
}
