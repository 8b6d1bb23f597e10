//! One-dimensional vertical boundary-value problems `(∂zz − k²) f = r` on the
//! Gauss–Lobatto nodes, solved by collocation with the first and last rows
//! replaced by the boundary conditions.
//!
//! These are the per-horizontal-mode backends of the Dirichlet inverse
//! Laplacian and of the Neumann pressure problem.

use nalgebra::{DMatrix, LU};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{chebyshev_diff_matrix, chebyshev_nodes, clenshaw_curtis_weights};

/// Boundary data at `z = 0` (first value) and `z = h` (second value).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VerticalBc<T> {
    Dirichlet(T, T),
    Neumann(T, T),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BcKind {
    Dirichlet,
    Neumann,
}

/// Vertical collocation operators shared by every horizontal mode.
#[derive(Clone, Debug)]
pub struct VerticalOps {
    pub z: Vec<f64>,
    pub h: f64,
    pub d: DMatrix<f64>,
    pub d2: DMatrix<f64>,
    /// Clenshaw–Curtis weights on `[0, h]`.
    pub weights: Vec<f64>,
}

impl VerticalOps {
    pub fn new(nz: usize, h: f64) -> Self {
        let d = chebyshev_diff_matrix(nz, h);
        let d2 = &d * &d;
        Self {
            z: chebyshev_nodes(nz, h),
            h,
            d,
            d2,
            weights: clenshaw_curtis_weights(nz, h),
        }
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn integrate<T: Copy + std::iter::Sum + std::ops::Mul<f64, Output = T>>(&self, f: &[T]) -> T {
        f.iter().zip(&self.weights).map(|(&v, &w)| v * w).sum()
    }
}

/// Factorized collocation operator for one value of `k²` and one boundary
/// condition type.
pub struct HelmholtzFactor {
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    kind: BcKind,
    n: usize,
    bordered: bool,
}

impl HelmholtzFactor {
    pub fn new(ops: &VerticalOps, k2: f64, kind: BcKind) -> Result<Self> {
        let n = ops.n();
        let last = n - 1;
        let bordered = kind == BcKind::Neumann && k2 == 0.0;
        let size = if bordered { n + 1 } else { n };
        let mut a = DMatrix::<f64>::zeros(size, size);
        for i in 1..last {
            for j in 0..n {
                a[(i, j)] = ops.d2[(i, j)];
            }
            a[(i, i)] -= k2;
        }
        match kind {
            BcKind::Dirichlet => {
                a[(0, 0)] = 1.0;
                a[(last, last)] = 1.0;
            }
            BcKind::Neumann => {
                for j in 0..n {
                    a[(0, j)] = ops.d[(0, j)];
                    a[(last, j)] = ops.d[(last, j)];
                }
            }
        }
        if bordered {
            // Lagrange multiplier absorbs the solvability defect; the extra
            // row pins the vertical mean to zero.
            for i in 1..last {
                a[(i, n)] = 1.0;
            }
            for j in 0..n {
                a[(n, j)] = ops.weights[j];
            }
        }
        let lu = a.lu();
        if !lu.is_invertible() {
            return Err(Error::Config(format!("singular vertical operator for k² = {k2}")));
        }
        Ok(Self { lu, kind, n, bordered })
    }

    pub fn kind(&self) -> BcKind {
        self.kind
    }

    /// Solves with boundary values `(a, b)`. Returns the solution and the
    /// Lagrange multiplier of the bordered Neumann problem (zero otherwise).
    pub fn solve(&self, rhs: &[Complex64], a: Complex64, b: Complex64) -> (Vec<Complex64>, Complex64) {
        let n = self.n;
        let size = if self.bordered { n + 1 } else { n };
        let mut m = DMatrix::<f64>::zeros(size, 2);
        for i in 1..n - 1 {
            m[(i, 0)] = rhs[i].re;
            m[(i, 1)] = rhs[i].im;
        }
        m[(0, 0)] = a.re;
        m[(0, 1)] = a.im;
        m[(n - 1, 0)] = b.re;
        m[(n - 1, 1)] = b.im;
        self.lu.solve_mut(&mut m);
        let f = (0..n).map(|i| Complex64::new(m[(i, 0)], m[(i, 1)])).collect();
        let lambda = if self.bordered {
            Complex64::new(m[(n, 0)], m[(n, 1)])
        } else {
            Complex64::new(0.0, 0.0)
        };
        (f, lambda)
    }

    /// Homogeneous-boundary solve of a real right-hand side.
    pub fn solve_real_homogeneous(&self, rhs: &[f64]) -> Vec<f64> {
        let c: Vec<Complex64> = rhs.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        let zero = Complex64::new(0.0, 0.0);
        self.solve(&c, zero, zero).0.into_iter().map(|c| c.re).collect()
    }
}

/// Result of [`helmholtz_solve_1d`].
#[derive(Clone, Debug)]
pub struct HelmholtzSolution {
    pub f: Vec<Complex64>,
    /// Neumann `k² = 0` only: `∫ rhs − (b − a)`, the part of the data that
    /// was projected out to make the problem solvable.
    pub solvability_defect: Complex64,
}

/// Solves `(∂zz − k²) f = rhs` with the given boundary condition. For the
/// Neumann problem at `k² = 0` the solution is normalised to zero vertical
/// mean and the solvability defect is projected out and reported.
pub fn helmholtz_solve_1d(
    ops: &VerticalOps,
    k2: f64,
    rhs: &[Complex64],
    bc: VerticalBc<Complex64>,
) -> Result<HelmholtzSolution> {
    if rhs.len() != ops.n() {
        return Err(Error::Dimension {
            operand: "rhs",
            expected: vec![ops.n()],
            got: vec![rhs.len()],
        });
    }
    if !(k2.is_finite() && k2 >= 0.0) {
        return Err(Error::Config(format!("k² must be finite and non-negative, got {k2}")));
    }
    if rhs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(Error::NonFinite("rhs"));
    }
    let (kind, a, b) = match bc {
        VerticalBc::Dirichlet(a, b) => (BcKind::Dirichlet, a, b),
        VerticalBc::Neumann(a, b) => (BcKind::Neumann, a, b),
    };
    let factor = HelmholtzFactor::new(ops, k2, kind)?;
    let (f, lambda) = factor.solve(rhs, a, b);
    let defect = lambda * ops.h;
    let scale = rhs.iter().fold(a.norm().max(b.norm()), |m, c| m.max(c.norm())).max(1.0);
    if defect.norm() > 1e-8 * scale {
        log::warn!("Neumann solvability defect {:.3e} projected out", defect.norm());
    }
    Ok(HelmholtzSolution {
        f,
        solvability_defect: defect,
    })
}
