//! Discretization of the channel `T² × (0, h)`.
//!
//! Horizontally the unit torus is sampled on a uniform `nx × ny` lattice and
//! represented by its discrete Fourier modes. Vertically the interval `[0, h]`
//! carries the `nz + 1` Chebyshev–Gauss–Lobatto nodes
//! `z_j = (h/2)(1 − cos(πj/nz))`, so `z_0 = 0` and `z_nz = h` exactly.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid descriptor. Cheap to copy; all derived operators live in
/// [`crate::spectral::Channel`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelGrid {
    pub nx: usize,
    pub ny: usize,
    /// Vertical polynomial degree; there are `nz + 1` vertical nodes.
    pub nz: usize,
    pub h: f64,
    /// Apply the 2/3 truncation to horizontal products.
    #[serde(default = "default_true")]
    pub dealias: bool,
}

fn default_true() -> bool {
    true
}

impl ChannelGrid {
    pub fn new(nx: usize, ny: usize, nz: usize, h: f64) -> Result<Self> {
        let grid = Self {
            nx,
            ny,
            nz,
            h,
            dealias: true,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.nx % 2 != 0 {
            return Err(Error::Config(format!(
                "nx must be a positive even integer, got {}",
                self.nx
            )));
        }
        if self.ny < 2 || self.ny % 2 != 0 {
            return Err(Error::Config(format!(
                "ny must be a positive even integer, got {}",
                self.ny
            )));
        }
        if self.nz < 2 {
            return Err(Error::Config(format!("nz must be at least 2, got {}", self.nz)));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::Config(format!(
                "channel height must be positive, got {}",
                self.h
            )));
        }
        Ok(())
    }

    /// Number of vertical nodes, `nz + 1`.
    pub fn nzp(&self) -> usize {
        self.nz + 1
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.nx, self.ny, self.nz + 1)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * (self.nz + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 / self.nx as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 / self.ny as f64
    }

    pub fn z_nodes(&self) -> Vec<f64> {
        chebyshev_nodes(self.nz, self.h)
    }

    /// Smallest vertical spacing (next to the lids).
    pub fn dz_min(&self) -> f64 {
        let z = self.z_nodes();
        z[1] - z[0]
    }

    pub fn dx_min(&self) -> f64 {
        1.0 / self.nx.max(self.ny) as f64
    }

    /// Integer wavenumber of FFT bin `i` for a transform of length `n`,
    /// in `{−n/2+1, …, n/2}`.
    pub fn wavenumber(i: usize, n: usize) -> i64 {
        if i <= n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    /// Largest retained wavenumber under the 2/3 rule: `3K < n`, so the
    /// alias of a product of retained modes never lands on a retained mode.
    pub fn dealias_cutoff(n: usize) -> i64 {
        ((n - 1) / 3) as i64
    }
}

/// Gauss–Lobatto nodes mapped to `[0, h]`, ascending.
pub fn chebyshev_nodes(nz: usize, h: f64) -> Vec<f64> {
    (0..=nz)
        .map(|j| {
            // sin² form keeps the nodes next to z = 0 free of cancellation
            let s = (PI * j as f64 / (2 * nz) as f64).sin();
            h * s * s
        })
        .collect()
}

/// Collocation derivative matrix `d/dz` on the ascending nodes of
/// [`chebyshev_nodes`].
pub fn chebyshev_diff_matrix(nz: usize, h: f64) -> DMatrix<f64> {
    let n = nz;
    let nf = n as f64;
    let c = |i: usize| if i == 0 || i == n { 2.0 } else { 1.0 };
    let sign = |k: usize| if k % 2 == 0 { 1.0 } else { -1.0 };
    let mut d = DMatrix::<f64>::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=n {
            if i == j {
                continue;
            }
            // x_i − x_j for x_k = cos(πk/n), in product form
            let dx = 2.0 * (PI * (i + j) as f64 / (2.0 * nf)).sin() * (PI * (j as f64 - i as f64) / (2.0 * nf)).sin();
            d[(i, j)] = c(i) / c(j) * sign(i + j) / dx;
        }
    }
    for i in 0..=n {
        let s: f64 = (0..=n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    // z = (h/2)(1 − x)  ⇒  d/dz = −(2/h) d/dx
    d * (-2.0 / h)
}

/// Clenshaw–Curtis quadrature weights on the ascending nodes, integrating
/// over `[0, h]`.
pub fn clenshaw_curtis_weights(nz: usize, h: f64) -> Vec<f64> {
    let n = nz;
    let nf = n as f64;
    let mut w = vec![0.0; n + 1];
    if n == 0 {
        return w;
    }
    let mut v = vec![1.0; n.saturating_sub(1)];
    if n % 2 == 0 {
        w[0] = 1.0 / (nf * nf - 1.0);
        w[n] = w[0];
        for k in 1..n / 2 {
            for (idx, vi) in v.iter_mut().enumerate() {
                let theta = PI * (idx + 1) as f64 / nf;
                *vi -= 2.0 * (2.0 * k as f64 * theta).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
        }
        for (idx, vi) in v.iter_mut().enumerate() {
            let theta = PI * (idx + 1) as f64 / nf;
            *vi -= (nf * theta).cos() / (nf * nf - 1.0);
        }
    } else {
        w[0] = 1.0 / (nf * nf);
        w[n] = w[0];
        for k in 1..=(n - 1) / 2 {
            for (idx, vi) in v.iter_mut().enumerate() {
                let theta = PI * (idx + 1) as f64 / nf;
                *vi -= 2.0 * (2.0 * k as f64 * theta).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
        }
    }
    for (idx, vi) in v.iter().enumerate() {
        w[idx + 1] = 2.0 * vi / nf;
    }
    w.iter().map(|wi| wi * h / 2.0).collect()
}
