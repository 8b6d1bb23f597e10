//! Spectral calculus on the periodic channel.
//!
//! Fields are transformed horizontally with FFTs and kept nodal in `z`.
//! Horizontal derivatives are Fourier multipliers, `∂z` is Chebyshev
//! collocation differentiation, and the inverse Laplacians reduce to one
//! vertical boundary-value problem per horizontal mode.
//!
//! Odd-order horizontal derivatives annihilate the Nyquist modes so that real
//! fields stay real; the Laplacians keep them.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array1, Array2, Array3, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::{BoundaryField, Elem, Field3, HVector, HVectorField, ScalarField, VProfile};
use crate::grid::ChannelGrid;
use crate::helmholtz::{self, BcKind, HelmholtzFactor, HelmholtzSolution, VerticalBc, VerticalOps};

/// Horizontal Fourier coefficients at every vertical node, indexed
/// `[kx][ky][z]`.
pub type Spectrum = Array3<Complex64>;
/// Horizontal Fourier coefficients of a lid field.
pub type Spectrum2 = Array2<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiffKind {
    Ddx,
    Ddy,
    Ddz,
    GradH,
    DivH,
    CurlH,
    Perp,
    LaplaceH,
    Laplace3,
}

pub enum DiffOperand<'a> {
    Scalar(&'a ScalarField),
    Vector(&'a HVectorField),
}

#[derive(Clone, Debug)]
pub enum DiffResult {
    Scalar(ScalarField),
    Vector(HVectorField),
}

impl DiffResult {
    pub fn into_scalar(self) -> Option<ScalarField> {
        match self {
            DiffResult::Scalar(s) => Some(s),
            DiffResult::Vector(_) => None,
        }
    }

    pub fn into_vector(self) -> Option<HVectorField> {
        match self {
            DiffResult::Vector(v) => Some(v),
            DiffResult::Scalar(_) => None,
        }
    }
}

/// Smooth monotone plateau: 1 on `[0, h/4]`, 0 on `[3h/4, h]`.
pub fn plateau(z: f64, h: f64) -> f64 {
    fn sigma(s: f64) -> f64 {
        if s > 0.0 {
            (-1.0 / s).exp()
        } else {
            0.0
        }
    }
    let s = ((0.75 * h - z) / (0.5 * h)).clamp(0.0, 1.0);
    let a = sigma(s);
    let b = sigma(1.0 - s);
    a / (a + b)
}

struct Ffts {
    fx: Arc<dyn Fft<f64>>,
    ix: Arc<dyn Fft<f64>>,
    fy: Arc<dyn Fft<f64>>,
    iy: Arc<dyn Fft<f64>>,
}

/// Grid plus every precomputed operator. Build once, share by reference.
pub struct Channel {
    pub grid: ChannelGrid,
    pub vert: VerticalOps,
    ffts: Ffts,
    /// `2πk` per FFT bin, Nyquist zeroed (first-derivative multipliers).
    kx: Vec<f64>,
    ky: Vec<f64>,
    kx_int: Vec<i64>,
    ky_int: Vec<i64>,
    dirichlet: HashMap<i64, HelmholtzFactor>,
    neumann: HashMap<i64, HelmholtzFactor>,
    /// Plateau function at the vertical nodes.
    chi: Vec<f64>,
}

impl std::fmt::Debug for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Channel").field("grid", &self.grid).finish()
    }
}

impl Channel {
    pub fn new(grid: ChannelGrid) -> Result<Self> {
        grid.validate()?;
        let vert = VerticalOps::new(grid.nz, grid.h);
        let mut planner = FftPlanner::new();
        let ffts = Ffts {
            fx: planner.plan_fft_forward(grid.nx),
            ix: planner.plan_fft_inverse(grid.nx),
            fy: planner.plan_fft_forward(grid.ny),
            iy: planner.plan_fft_inverse(grid.ny),
        };
        let ints = |n: usize| (0..n).map(|i| ChannelGrid::wavenumber(i, n)).collect::<Vec<_>>();
        let kx_int = ints(grid.nx);
        let ky_int = ints(grid.ny);
        let mult = |ks: &[i64], n: usize| {
            ks.iter()
                .map(|&k| if k == (n / 2) as i64 { 0.0 } else { 2.0 * PI * k as f64 })
                .collect::<Vec<_>>()
        };
        let kx = mult(&kx_int, grid.nx);
        let ky = mult(&ky_int, grid.ny);

        let mut keys: Vec<i64> = kx_int
            .iter()
            .flat_map(|a| ky_int.iter().map(move |b| a * a + b * b))
            .collect();
        keys.sort_unstable();
        keys.dedup();
        let build = |kind: BcKind| -> Result<HashMap<i64, HelmholtzFactor>> {
            keys.par_iter()
                .map(|&n| {
                    let k2 = 4.0 * PI * PI * n as f64;
                    HelmholtzFactor::new(&vert, k2, kind).map(|f| (n, f))
                })
                .collect()
        };
        let dirichlet = build(BcKind::Dirichlet)?;
        let neumann = build(BcKind::Neumann)?;
        let chi = vert.z.iter().map(|&z| plateau(z, grid.h)).collect();
        Ok(Self {
            grid,
            vert,
            ffts,
            kx,
            ky,
            kx_int,
            ky_int,
            dirichlet,
            neumann,
            chi,
        })
    }

    pub fn nzp(&self) -> usize {
        self.grid.nzp()
    }

    fn mode_key(&self, i: usize, j: usize) -> i64 {
        let a = self.kx_int[i];
        let b = self.ky_int[j];
        a * a + b * b
    }

    /// `|2πk|²` for bin `(i, j)`.
    pub fn k2(&self, i: usize, j: usize) -> f64 {
        4.0 * PI * PI * self.mode_key(i, j) as f64
    }

    /// First-derivative multipliers `(2πk₁, 2πk₂)` of bin `(i, j)`, Nyquist
    /// zeroed.
    pub fn deriv_mult(&self, i: usize, j: usize) -> (f64, f64) {
        (self.kx[i], self.ky[j])
    }

    pub fn wavenumbers(&self, i: usize, j: usize) -> (i64, i64) {
        (self.kx_int[i], self.ky_int[j])
    }

    // ----------------------------------------------------------------
    // transforms

    fn fft_axis(&self, data: &mut Array3<Complex64>, axis: usize, inverse: bool) {
        let plan = match (axis, inverse) {
            (0, false) => &self.ffts.fx,
            (0, true) => &self.ffts.ix,
            (_, false) => &self.ffts.fy,
            (_, true) => &self.ffts.iy,
        };
        let n = data.len_of(Axis(axis));
        let mut buf = vec![ZERO; n];
        let mut scratch = vec![ZERO; plan.get_inplace_scratch_len()];
        for mut lane in data.lanes_mut(Axis(axis)) {
            for (b, v) in buf.iter_mut().zip(lane.iter()) {
                *b = *v;
            }
            plan.process_with_scratch(&mut buf, &mut scratch);
            for (v, b) in lane.iter_mut().zip(buf.iter()) {
                *v = *b;
            }
        }
    }

    /// Horizontal forward transform with `1/(nx·ny)` normalisation.
    pub fn fwd<T: Elem>(&self, f: &Field3<T>) -> Spectrum {
        let mut s = f.data.mapv(|v| v.to_c());
        self.fwd_in_place(&mut s);
        s
    }

    pub fn fwd_in_place(&self, s: &mut Spectrum) {
        self.fft_axis(s, 0, false);
        self.fft_axis(s, 1, false);
        let norm = 1.0 / (self.grid.nx * self.grid.ny) as f64;
        s.mapv_inplace(|v| v * norm);
    }

    pub fn inv<T: Elem>(&self, s: &Spectrum) -> Field3<T> {
        let mut d = s.clone();
        self.fft_axis(&mut d, 0, true);
        self.fft_axis(&mut d, 1, true);
        Field3 {
            data: d.mapv(T::from_c),
        }
    }

    pub fn fwd2(&self, b: &BoundaryField) -> Spectrum2 {
        let s = b.data.mapv(|v| Complex64::new(v, 0.0)).insert_axis(Axis(2));
        let mut s = s.as_standard_layout().to_owned();
        self.fwd_in_place(&mut s);
        s.index_axis_move(Axis(2), 0)
    }

    pub fn inv2(&self, s: &Spectrum2) -> BoundaryField {
        let mut d = s.clone().insert_axis(Axis(2)).as_standard_layout().to_owned();
        self.fft_axis(&mut d, 0, true);
        self.fft_axis(&mut d, 1, true);
        BoundaryField {
            data: d.index_axis_move(Axis(2), 0).mapv(|c| c.re),
        }
    }

    // ----------------------------------------------------------------
    // spectral-space operators

    pub fn s_ddx(&self, s: &Spectrum) -> Spectrum {
        let mut out = s.clone();
        for ((i, _, _), v) in out.indexed_iter_mut() {
            *v *= Complex64::new(0.0, self.kx[i]);
        }
        out
    }

    pub fn s_ddy(&self, s: &Spectrum) -> Spectrum {
        let mut out = s.clone();
        for ((_, j, _), v) in out.indexed_iter_mut() {
            *v *= Complex64::new(0.0, self.ky[j]);
        }
        out
    }

    pub fn s_lap_h(&self, s: &Spectrum) -> Spectrum {
        let mut out = s.clone();
        for ((i, j, _), v) in out.indexed_iter_mut() {
            *v *= -self.k2(i, j);
        }
        out
    }

    /// Horizontal inverse Laplacian with the zero-mean convention.
    pub fn s_inv_lap_h(&self, s: &Spectrum) -> Spectrum {
        let mut out = s.clone();
        for ((i, j, _), v) in out.indexed_iter_mut() {
            let k2 = self.k2(i, j);
            *v = if k2 == 0.0 { ZERO } else { *v / -k2 };
        }
        out
    }

    /// `∂z` by collocation; valid on nodal or horizontally transformed data.
    pub fn ddz_array<T: Elem>(&self, a: &Array3<T>) -> Array3<T> {
        apply_vertical(&self.vert.d, a)
    }

    pub fn d2dz2_array<T: Elem>(&self, a: &Array3<T>) -> Array3<T> {
        apply_vertical(&self.vert.d2, a)
    }

    pub fn s_lap3(&self, s: &Spectrum) -> Spectrum {
        let mut out = self.d2dz2_array(s);
        let nzp = self.nzp();
        for i in 0..self.grid.nx {
            for j in 0..self.grid.ny {
                let k2 = self.k2(i, j);
                for k in 0..nzp {
                    out[(i, j, k)] -= s[(i, j, k)] * k2;
                }
            }
        }
        out
    }

    /// Per-mode Dirichlet solve `(∂zz − |2πk|²) f = g`, `f = 0` on both lids.
    pub fn s_inv_lap_dirichlet(&self, g: &Spectrum) -> Spectrum {
        self.s_solve_dirichlet(g, None, None)
    }

    /// Per-mode Dirichlet solve with lid data given as lid spectra.
    pub fn s_solve_dirichlet(&self, g: &Spectrum, bottom: Option<&Spectrum2>, top: Option<&Spectrum2>) -> Spectrum {
        let nzp = self.nzp();
        let ny = self.grid.ny;
        let mut out = Spectrum::zeros(g.dim());
        let lanes: Vec<(usize, Vec<Complex64>)> = (0..self.grid.nx * ny)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / ny, idx % ny);
                let rhs: Vec<Complex64> = (0..nzp).map(|k| g[(i, j, k)]).collect();
                let a = bottom.map_or(ZERO, |b| b[(i, j)]);
                let b = top.map_or(ZERO, |t| t[(i, j)]);
                let factor = &self.dirichlet[&self.mode_key(i, j)];
                (idx, factor.solve(&rhs, a, b).0)
            })
            .collect();
        for (idx, f) in lanes {
            let (i, j) = (idx / ny, idx % ny);
            for (k, v) in f.into_iter().enumerate() {
                out[(i, j, k)] = v;
            }
        }
        out
    }

    /// Per-mode Neumann solve `(∂zz − |2πk|²) f = g`, `∂z f = bottom, top`.
    /// The horizontal-mean mode is normalised to zero vertical mean; its
    /// solvability defect `∫g − (top − bottom)` is returned.
    pub fn s_solve_neumann(&self, g: &Spectrum, bottom: &Spectrum2, top: &Spectrum2) -> (Spectrum, Complex64) {
        let nzp = self.nzp();
        let ny = self.grid.ny;
        let mut out = Spectrum::zeros(g.dim());
        let lanes: Vec<(usize, Vec<Complex64>, Complex64)> = (0..self.grid.nx * ny)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / ny, idx % ny);
                let rhs: Vec<Complex64> = (0..nzp).map(|k| g[(i, j, k)]).collect();
                let factor = &self.neumann[&self.mode_key(i, j)];
                let (f, lambda) = factor.solve(&rhs, bottom[(i, j)], top[(i, j)]);
                (idx, f, lambda)
            })
            .collect();
        let mut defect = ZERO;
        for (idx, f, lambda) in lanes {
            let (i, j) = (idx / ny, idx % ny);
            if i == 0 && j == 0 {
                defect = lambda * self.grid.h;
            }
            for (k, v) in f.into_iter().enumerate() {
                out[(i, j, k)] = v;
            }
        }
        (out, defect)
    }

    /// Zeroes modes with `|kᵢ| > Nᵢ/3` in place (no-op when the grid has
    /// dealiasing disabled).
    pub fn s_dealias(&self, s: &mut Spectrum) {
        if !self.grid.dealias {
            return;
        }
        self.truncate(s);
    }

    fn truncate(&self, s: &mut Spectrum) {
        let cx = ChannelGrid::dealias_cutoff(self.grid.nx);
        let cy = ChannelGrid::dealias_cutoff(self.grid.ny);
        for ((i, j, _), v) in s.indexed_iter_mut() {
            if self.kx_int[i].abs() > cx || self.ky_int[j].abs() > cy {
                *v = ZERO;
            }
        }
    }

    pub fn s_dealias2(&self, s: &mut Spectrum2) {
        if !self.grid.dealias {
            return;
        }
        let cx = ChannelGrid::dealias_cutoff(self.grid.nx);
        let cy = ChannelGrid::dealias_cutoff(self.grid.ny);
        for ((i, j), v) in s.indexed_iter_mut() {
            if self.kx_int[i].abs() > cx || self.ky_int[j].abs() > cy {
                *v = ZERO;
            }
        }
    }

    /// Horizontal-mean (k = 0) profile of a spectrum.
    pub fn s_mean(&self, s: &Spectrum) -> Array1<Complex64> {
        s.slice(ndarray::s![0, 0, ..]).to_owned()
    }

    /// Lid-to-interior lift of two lid spectra.
    pub fn s_extend_boundary(&self, a: &Spectrum2, b: &Spectrum2) -> Spectrum {
        let nzp = self.nzp();
        let h = self.grid.h;
        let mut out = Spectrum::zeros((self.grid.nx, self.grid.ny, nzp));
        for i in 0..self.grid.nx {
            for j in 0..self.grid.ny {
                let (p, q) = self.wavenumbers(i, j);
                let kabs = ((p * p + q * q) as f64).sqrt();
                for (k, &z) in self.vert.z.iter().enumerate() {
                    let chi = self.chi[k];
                    let lower = (-kabs * z).exp() * chi;
                    let upper = (-kabs * (h - z)).exp() * (1.0 - chi);
                    out[(i, j, k)] = a[(i, j)] * lower + b[(i, j)] * upper;
                }
            }
        }
        out
    }

    // ----------------------------------------------------------------
    // physical-space operators

    pub fn ddx<T: Elem>(&self, f: &Field3<T>) -> Field3<T> {
        self.inv(&self.s_ddx(&self.fwd(f)))
    }

    pub fn ddy<T: Elem>(&self, f: &Field3<T>) -> Field3<T> {
        self.inv(&self.s_ddy(&self.fwd(f)))
    }

    pub fn ddz<T: Elem>(&self, f: &Field3<T>) -> Field3<T> {
        Field3 {
            data: self.ddz_array(&f.data),
        }
    }

    pub fn grad_h<T: Elem>(&self, f: &Field3<T>) -> HVector<T> {
        let s = self.fwd(f);
        HVector::new(self.inv(&self.s_ddx(&s)), self.inv(&self.s_ddy(&s)))
    }

    pub fn div_h<T: Elem>(&self, x: &HVector<T>) -> Field3<T> {
        let s = self.s_ddx(&self.fwd(&x.x)) + self.s_ddy(&self.fwd(&x.y));
        self.inv(&s)
    }

    pub fn curl_h<T: Elem>(&self, x: &HVector<T>) -> Field3<T> {
        let s = self.s_ddx(&self.fwd(&x.y)) - self.s_ddy(&self.fwd(&x.x));
        self.inv(&s)
    }

    pub fn laplace_h<T: Elem>(&self, f: &Field3<T>) -> Field3<T> {
        self.inv(&self.s_lap_h(&self.fwd(f)))
    }

    pub fn laplace3<T: Elem>(&self, f: &Field3<T>) -> Field3<T> {
        self.inv(&self.s_lap3(&self.fwd(f)))
    }

    /// Dispatching entry point over [`DiffKind`].
    pub fn apply_diff(&self, kind: DiffKind, f: DiffOperand<'_>) -> Result<DiffResult> {
        use DiffKind::*;
        match (kind, f) {
            (Ddx, DiffOperand::Scalar(s)) => self.checked(s).map(|s| DiffResult::Scalar(self.ddx(s))),
            (Ddy, DiffOperand::Scalar(s)) => self.checked(s).map(|s| DiffResult::Scalar(self.ddy(s))),
            (Ddz, DiffOperand::Scalar(s)) => self.checked(s).map(|s| DiffResult::Scalar(self.ddz(s))),
            (LaplaceH, DiffOperand::Scalar(s)) => self.checked(s).map(|s| DiffResult::Scalar(self.laplace_h(s))),
            (Laplace3, DiffOperand::Scalar(s)) => self.checked(s).map(|s| DiffResult::Scalar(self.laplace3(s))),
            (GradH, DiffOperand::Scalar(s)) => self.checked(s).map(|s| DiffResult::Vector(self.grad_h(s))),
            (DivH, DiffOperand::Vector(v)) => self.checked_v(v).map(|v| DiffResult::Scalar(self.div_h(v))),
            (CurlH, DiffOperand::Vector(v)) => self.checked_v(v).map(|v| DiffResult::Scalar(self.curl_h(v))),
            (Perp, DiffOperand::Vector(v)) => self.checked_v(v).map(|v| DiffResult::Vector(v.perp())),
            (Ddx | Ddy | Ddz | LaplaceH | Laplace3, DiffOperand::Vector(v)) => {
                let v = self.checked_v(v)?;
                let comp = |f: &ScalarField| match kind {
                    Ddx => self.ddx(f),
                    Ddy => self.ddy(f),
                    Ddz => self.ddz(f),
                    LaplaceH => self.laplace_h(f),
                    _ => self.laplace3(f),
                };
                Ok(DiffResult::Vector(HVector::new(comp(&v.x), comp(&v.y))))
            }
            (GradH, DiffOperand::Vector(_)) => Err(Error::Arity {
                op: "grad_h",
                expected: "a scalar field",
            }),
            (DivH, DiffOperand::Scalar(_)) => Err(Error::Arity {
                op: "div_h",
                expected: "a horizontal vector field",
            }),
            (CurlH, DiffOperand::Scalar(_)) => Err(Error::Arity {
                op: "curl_h",
                expected: "a horizontal vector field",
            }),
            (Perp, DiffOperand::Scalar(_)) => Err(Error::Arity {
                op: "perp",
                expected: "a horizontal vector field",
            }),
        }
    }

    fn checked<'a, T: Elem>(&self, f: &'a Field3<T>) -> Result<&'a Field3<T>> {
        f.check(&self.grid, "operand")?;
        Ok(f)
    }

    fn checked_v<'a, T: Elem>(&self, f: &'a HVector<T>) -> Result<&'a HVector<T>> {
        f.check(&self.grid, "operand")?;
        Ok(f)
    }

    /// Inverse Laplacian with homogeneous Dirichlet data on both lids.
    pub fn inv_laplace_dirichlet<T: Elem>(&self, g: &Field3<T>) -> Result<Field3<T>> {
        g.check(&self.grid, "g")?;
        if !g.is_finite() {
            return Err(Error::NonFinite("g"));
        }
        let mut out: Field3<T> = self.inv(&self.s_inv_lap_dirichlet(&self.fwd(g)));
        // the lids are exactly zero, not round-off zero
        let zero = ndarray::Array2::from_elem((self.grid.nx, self.grid.ny), T::default());
        out.set_level(0, &zero);
        out.set_level(self.grid.nz, &zero);
        Ok(out)
    }

    /// Horizontal inverse Laplacian with zero horizontal mean at every height.
    pub fn inv_laplace_h<T: Elem>(&self, g: &Field3<T>) -> Result<Field3<T>> {
        g.check(&self.grid, "g")?;
        Ok(self.inv(&self.s_inv_lap_h(&self.fwd(g))))
    }

    pub fn inv_laplace_h_boundary(&self, g: &BoundaryField) -> Result<BoundaryField> {
        g.check(&self.grid, "g")?;
        let mut s = self.fwd2(g);
        for ((i, j), v) in s.indexed_iter_mut() {
            let k2 = self.k2(i, j);
            *v = if k2 == 0.0 { ZERO } else { *v / -k2 };
        }
        Ok(self.inv2(&s))
    }

    /// Bilinear lift `E_b(A, B)` of lid data into the channel: the trace at
    /// `z = 0` is `A`, the trace at `z = h` is `B`.
    pub fn extend_boundary(&self, a: &BoundaryField, b: &BoundaryField) -> Result<ScalarField> {
        a.check(&self.grid, "A")?;
        b.check(&self.grid, "B")?;
        let s = self.s_extend_boundary(&self.fwd2(a), &self.fwd2(b));
        let mut out: ScalarField = self.inv(&s);
        out.set_level(0, &a.data);
        out.set_level(self.grid.nz, &b.data);
        Ok(out)
    }

    /// Per-mode vertical problem with arbitrary `k²`; see
    /// [`helmholtz::helmholtz_solve_1d`].
    pub fn helmholtz_solve_1d(
        &self,
        k2: f64,
        rhs: &[Complex64],
        bc: VerticalBc<Complex64>,
    ) -> Result<HelmholtzSolution> {
        helmholtz::helmholtz_solve_1d(&self.vert, k2, rhs, bc)
    }

    /// Horizontal mean at every height (domain area is one).
    pub fn horizontal_mean<T: Elem>(&self, f: &Field3<T>) -> Array1<T> {
        let n = (self.grid.nx * self.grid.ny) as f64;
        let mut out = Array1::from_elem(self.nzp(), T::default());
        for ((_, _, k), &v) in f.data.indexed_iter() {
            out[k] = out[k] + v;
        }
        out.mapv(|v| v * (1.0 / n))
    }

    pub fn horizontal_mean_vec<T: Elem>(&self, f: &HVector<T>) -> VProfile<T> {
        VProfile {
            x: self.horizontal_mean(&f.x),
            y: self.horizontal_mean(&f.y),
        }
    }

    /// 2/3-rule truncation; always applies, independent of the grid flag.
    pub fn dealias<T: Elem>(&self, f: &Field3<T>) -> Field3<T> {
        let mut s = self.fwd(f);
        self.truncate(&mut s);
        self.inv(&s)
    }

    /// `∂z` of a vertical profile.
    pub fn ddz_profile<T: Elem>(&self, p: &Array1<T>) -> Array1<T> {
        let n = p.len();
        Array1::from_shape_fn(n, |i| {
            let mut s = T::default();
            for j in 0..n {
                s = s + p[j] * self.vert.d[(i, j)];
            }
            s
        })
    }

    /// Vertical integral over `[0, h]` of a profile.
    pub fn integrate_z<T: Elem>(&self, p: &Array1<T>) -> T {
        p.iter()
            .zip(&self.vert.weights)
            .fold(T::default(), |acc, (&v, &w)| acc + v * w)
    }

    /// `∫_Ω f dV` by trapezoid (horizontal) and Clenshaw–Curtis (vertical).
    pub fn integrate<T: Elem>(&self, f: &Field3<T>) -> T {
        self.integrate_z(&self.horizontal_mean(f))
    }
}

/// Applies a `(nz+1)²` matrix along the last (vertical) axis.
pub fn apply_vertical<T: Elem>(m: &nalgebra::DMatrix<f64>, a: &Array3<T>) -> Array3<T> {
    let (nx, ny, nz) = a.dim();
    let rows: Vec<f64> = (0..nz)
        .flat_map(|i| (0..nz).map(move |j| (i, j)))
        .map(|(i, j)| m[(i, j)])
        .collect();
    let src = a.as_standard_layout();
    let src = src.as_slice().expect("standard layout");
    let mut out = vec![T::default(); nx * ny * nz];
    out.par_chunks_mut(nz).zip(src.par_chunks(nz)).for_each(|(o, s)| {
        for i in 0..nz {
            let row = &rows[i * nz..(i + 1) * nz];
            let mut acc = T::default();
            for (&r, &v) in row.iter().zip(s) {
                acc = acc + v * r;
            }
            o[i] = acc;
        }
    });
    Array3::from_shape_vec((nx, ny, nz), out).expect("shape")
}
