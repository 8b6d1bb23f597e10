//! Nodal field containers on the channel grid.
//!
//! Every container stores values at grid nodes in row-major `[x][y][z]`
//! order. Real and complex variants share one generic implementation; the
//! complex ones carry fast-wave envelopes.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use ndarray::{Array1, Array2, Array3, Axis, Zip};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ChannelGrid;

/// Element type of a field: `f64` or `Complex64`.
pub trait Elem:
    Copy
    + Default
    + Debug
    + Send
    + Sync
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Mul<f64, Output = Self>
    + Neg<Output = Self>
    + 'static
{
    fn to_c(self) -> Complex64;
    /// Projects a complex value onto the element type (real part for `f64`).
    fn from_c(c: Complex64) -> Self;
    fn from_re(x: f64) -> Self;
    fn abs(self) -> f64;
    fn is_finite(self) -> bool;
    /// Multiplication by the imaginary unit, for the `±i X^⊥` combinations.
    /// Only meaningful for complex elements; the real version panics.
    fn times_i(self) -> Self;
}

impl Elem for f64 {
    #[inline]
    fn to_c(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
    #[inline]
    fn from_c(c: Complex64) -> Self {
        c.re
    }
    #[inline]
    fn from_re(x: f64) -> Self {
        x
    }
    #[inline]
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn times_i(self) -> Self {
        panic!("times_i on a real element")
    }
}

impl Elem for Complex64 {
    #[inline]
    fn to_c(self) -> Complex64 {
        self
    }
    #[inline]
    fn from_c(c: Complex64) -> Self {
        c
    }
    #[inline]
    fn from_re(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    #[inline]
    fn abs(self) -> f64 {
        self.norm()
    }
    #[inline]
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    #[inline]
    fn times_i(self) -> Self {
        Complex64::new(-self.im, self.re)
    }
}

/// Scalar field over the `nx × ny × (nz+1)` nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct Field3<T> {
    pub data: Array3<T>,
}

pub type ScalarField = Field3<f64>;
pub type CScalarField = Field3<Complex64>;

impl<T: Elem> Field3<T> {
    pub fn zeros(grid: &ChannelGrid) -> Self {
        Self {
            data: Array3::from_elem(grid.shape(), T::default()),
        }
    }

    pub fn constant(grid: &ChannelGrid, value: T) -> Self {
        Self {
            data: Array3::from_elem(grid.shape(), value),
        }
    }

    /// Samples `f(x, y, z)` at the grid nodes.
    pub fn from_fn(grid: &ChannelGrid, f: impl Fn(f64, f64, f64) -> T) -> Self {
        let z = grid.z_nodes();
        let data = Array3::from_shape_fn(grid.shape(), |(i, j, k)| f(grid.x(i), grid.y(j), z[k]));
        Self { data }
    }

    pub fn from_array(grid: &ChannelGrid, data: Array3<T>) -> Result<Self> {
        let field = Self { data };
        field.check(grid, "field")?;
        Ok(field)
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        self.data.dim()
    }

    pub fn check(&self, grid: &ChannelGrid, operand: &'static str) -> Result<()> {
        let (a, b, c) = grid.shape();
        if self.data.dim() != (a, b, c) {
            let (x, y, z) = self.data.dim();
            return Err(Error::Dimension {
                operand,
                expected: vec![a, b, c],
                got: vec![x, y, z],
            });
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map<U: Elem>(&self, f: impl Fn(T) -> U) -> Field3<U> {
        Field3 {
            data: self.data.mapv(f),
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|v| v * a)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            data: &self.data + &other.data,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            data: &self.data - &other.data,
        }
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        let mut data = self.data.clone();
        Zip::from(&mut data).and(&other.data).for_each(|d, &o| *d = *d + o * a);
        Self { data }
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Self {
        Self {
            data: &self.data * &other.data,
        }
    }

    pub fn neg(&self) -> Self {
        self.map(|v| -v)
    }

    /// Values on the horizontal plane `z = z_k`.
    pub fn level(&self, k: usize) -> Array2<T> {
        self.data.index_axis(Axis(2), k).to_owned()
    }

    pub fn set_level(&mut self, k: usize, plane: &Array2<T>) {
        self.data.index_axis_mut(Axis(2), k).assign(plane);
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        Zip::from(&self.data)
            .and(&other.data)
            .fold(0.0f64, |m, &a, &b| m.max((a - b).abs()))
    }
}

impl Field3<f64> {
    pub fn to_complex(&self) -> CScalarField {
        self.map(|v| Complex64::new(v, 0.0))
    }
}

impl Field3<Complex64> {
    pub fn re(&self) -> ScalarField {
        self.map(|v| v.re)
    }

    pub fn im(&self) -> ScalarField {
        self.map(|v| v.im)
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn scale_c(&self, a: Complex64) -> Self {
        self.map(|v| v * a)
    }

    pub fn times_i(&self) -> Self {
        self.map(|v| v.times_i())
    }
}

/// Horizontal vector field `(X₁, X₂)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct HVector<T> {
    pub x: Field3<T>,
    pub y: Field3<T>,
}

pub type HVectorField = HVector<f64>;
pub type CHVectorField = HVector<Complex64>;

impl<T: Elem> HVector<T> {
    pub fn new(x: Field3<T>, y: Field3<T>) -> Self {
        Self { x, y }
    }

    pub fn zeros(grid: &ChannelGrid) -> Self {
        Self::new(Field3::zeros(grid), Field3::zeros(grid))
    }

    pub fn check(&self, grid: &ChannelGrid, operand: &'static str) -> Result<()> {
        self.x.check(grid, operand)?;
        self.y.check(grid, operand)
    }

    /// `X^⊥ = (−X₂, X₁)`.
    pub fn perp(&self) -> Self {
        Self::new(self.y.neg(), self.x.clone())
    }

    pub fn scale(&self, a: f64) -> Self {
        Self::new(self.x.scale(a), self.y.scale(a))
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.x.add(&o.x), self.y.add(&o.y))
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::new(self.x.sub(&o.x), self.y.sub(&o.y))
    }

    pub fn axpy(&self, a: f64, o: &Self) -> Self {
        Self::new(self.x.axpy(a, &o.x), self.y.axpy(a, &o.y))
    }

    pub fn neg(&self) -> Self {
        Self::new(self.x.neg(), self.y.neg())
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn max_abs(&self) -> f64 {
        self.x.max_abs().max(self.y.max_abs())
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        self.x.max_abs_diff(&o.x).max(self.y.max_abs_diff(&o.y))
    }

    pub fn map<U: Elem>(&self, f: impl Fn(T) -> U + Copy) -> HVector<U> {
        HVector::new(self.x.map(f), self.y.map(f))
    }
}

impl HVector<f64> {
    pub fn to_complex(&self) -> CHVectorField {
        HVector::new(self.x.to_complex(), self.y.to_complex())
    }
}

impl HVector<Complex64> {
    pub fn re(&self) -> HVectorField {
        HVector::new(self.x.re(), self.y.re())
    }

    pub fn conj(&self) -> Self {
        Self::new(self.x.conj(), self.y.conj())
    }

    pub fn scale_c(&self, a: Complex64) -> Self {
        Self::new(self.x.scale_c(a), self.y.scale_c(a))
    }

    pub fn times_i(&self) -> Self {
        Self::new(self.x.times_i(), self.y.times_i())
    }
}

/// Field on the horizontal torus (a lid trace).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryField {
    pub data: Array2<f64>,
}

impl BoundaryField {
    pub fn zeros(grid: &ChannelGrid) -> Self {
        Self {
            data: Array2::zeros((grid.nx, grid.ny)),
        }
    }

    pub fn from_fn(grid: &ChannelGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            data: Array2::from_shape_fn((grid.nx, grid.ny), |(i, j)| f(grid.x(i), grid.y(j))),
        }
    }

    pub fn check(&self, grid: &ChannelGrid, operand: &'static str) -> Result<()> {
        if self.data.dim() != (grid.nx, grid.ny) {
            let (a, b) = self.data.dim();
            return Err(Error::Dimension {
                operand,
                expected: vec![grid.nx, grid.ny],
                got: vec![a, b],
            });
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.data.mean().unwrap_or(0.0)
    }

    pub fn scale(&self, a: f64) -> Self {
        Self { data: &self.data * a }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self {
            data: &self.data + &o.data,
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self {
            data: &self.data - &o.data,
        }
    }

    pub fn axpy(&self, a: f64, o: &Self) -> Self {
        Self {
            data: &self.data + &(&o.data * a),
        }
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        Zip::from(&self.data)
            .and(&o.data)
            .fold(0.0f64, |m, &a, &b| m.max((a - b).abs()))
    }
}

/// Vertical profile of a horizontal vector (e.g. the horizontally averaged
/// velocity).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct VProfile<T> {
    pub x: Array1<T>,
    pub y: Array1<T>,
}

impl<T: Elem> VProfile<T> {
    pub fn zeros(grid: &ChannelGrid) -> Self {
        Self {
            x: Array1::from_elem(grid.nzp(), T::default()),
            y: Array1::from_elem(grid.nzp(), T::default()),
        }
    }

    pub fn from_fn(grid: &ChannelGrid, f: impl Fn(f64) -> (T, T)) -> Self {
        let z = grid.z_nodes();
        let (x, y): (Vec<T>, Vec<T>) = z.iter().map(|&z| f(z)).unzip();
        Self {
            x: Array1::from(x),
            y: Array1::from(y),
        }
    }

    pub fn check(&self, grid: &ChannelGrid, operand: &'static str) -> Result<()> {
        if self.x.len() != grid.nzp() || self.y.len() != grid.nzp() {
            return Err(Error::Dimension {
                operand,
                expected: vec![grid.nzp(), grid.nzp()],
                got: vec![self.x.len(), self.y.len()],
            });
        }
        Ok(())
    }

    pub fn perp(&self) -> Self {
        Self {
            x: self.y.mapv(|v| -v),
            y: self.x.clone(),
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            x: self.x.mapv(|v| v * a),
            y: self.y.mapv(|v| v * a),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self {
            x: &self.x + &o.x,
            y: &self.y + &o.y,
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self {
            x: &self.x - &o.x,
            y: &self.y - &o.y,
        }
    }

    pub fn axpy(&self, a: f64, o: &Self) -> Self {
        Self {
            x: Zip::from(&self.x).and(&o.x).map_collect(|&s, &v| s + v * a),
            y: Zip::from(&self.y).and(&o.y).map_collect(|&s, &v| s + v * a),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.y.iter()).all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.x.iter().chain(self.y.iter()).fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        let a = Zip::from(&self.x)
            .and(&o.x)
            .fold(0.0f64, |m, &a, &b| m.max((a - b).abs()));
        let b = Zip::from(&self.y)
            .and(&o.y)
            .fold(0.0f64, |m, &a, &b| m.max((a - b).abs()));
        a.max(b)
    }

    /// Broadcasts the profile to a horizontally constant vector field.
    pub fn broadcast(&self, grid: &ChannelGrid) -> HVector<T> {
        let x = Array3::from_shape_fn(grid.shape(), |(_, _, k)| self.x[k]);
        let y = Array3::from_shape_fn(grid.shape(), |(_, _, k)| self.y[k]);
        HVector::new(Field3 { data: x }, Field3 { data: y })
    }
}

impl VProfile<f64> {
    pub fn to_complex(&self) -> VProfile<Complex64> {
        VProfile {
            x: self.x.mapv(|v| Complex64::new(v, 0.0)),
            y: self.y.mapv(|v| Complex64::new(v, 0.0)),
        }
    }
}

impl VProfile<Complex64> {
    pub fn re(&self) -> VProfile<f64> {
        VProfile {
            x: self.x.mapv(|v| v.re),
            y: self.y.mapv(|v| v.re),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            x: self.x.mapv(|v| v.conj()),
            y: self.y.mapv(|v| v.conj()),
        }
    }

    pub fn scale_c(&self, a: Complex64) -> Self {
        Self {
            x: self.x.mapv(|v| v * a),
            y: self.y.mapv(|v| v * a),
        }
    }

    pub fn times_i(&self) -> Self {
        Self {
            x: self.x.mapv(|v| v.times_i()),
            y: self.y.mapv(|v| v.times_i()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perp_of_unit_x_is_unit_y() {
        let g = ChannelGrid::new(4, 4, 4, 1.0).unwrap();
        let e1 = HVector::new(Field3::constant(&g, 1.0), Field3::constant(&g, 0.0));
        let p = e1.perp();
        assert_eq!(p.x.max_abs(), 0.0);
        assert!(p.y.data.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn dimension_check_names_operand() {
        let g = ChannelGrid::new(4, 4, 4, 1.0).unwrap();
        let other = ChannelGrid::new(4, 6, 4, 1.0).unwrap();
        let f = ScalarField::zeros(&other);
        match f.check(&g, "theta") {
            Err(Error::Dimension { operand, .. }) => assert_eq!(operand, "theta"),
            r => panic!("unexpected {r:?}"),
        }
    }

    #[test]
    fn complex_times_i() {
        let c = Complex64::new(1.0, 2.0);
        assert_eq!(c.times_i(), Complex64::new(-2.0, 1.0));
    }
}
