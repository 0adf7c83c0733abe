//! Heat/Poisson workloads on a unit-spaced grid: fixed-count Jacobi relaxation,
//! multigrid V-cycles, and the GEMM driver.
//!
//! The discrete operator is `A u = 4u - (u_n + u_s + u_e + u_w)` and the
//! problem is `A u = f` on cells where the mask is 1, with Dirichlet values
//! held on cells where it is 0.

mod gemm;
mod jacobi;
mod multigrid;
pub mod problem;

pub use gemm::{gemm_operands, gemm_run, gemm_run_with};
pub use jacobi::{jacobi_solve, jacobi_step, jacobi_to_residual, JacobiConfig, JacobiOutcome};
pub use multigrid::{
    level_shapes, multigrid_solve, vcycle, MultigridOutcome, VCycleConfig, VCycleSolver,
    DEFAULT_COARSEST_SIDE,
};

use crate::error::{Error, Result};
use crate::grid::{Grid, Mask, Precision};
use crate::ops::{self, Kernel3x3};
use crate::scalar::Scalar;

/// Zero on the outer ring, one inside; needs at least 3x3.
pub fn build_dirichlet_mask(rows: usize, cols: usize) -> Result<Mask> {
    Mask::dirichlet(rows, cols)
}

/// Fixed values on masked-out cells.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryCondition<T> {
    mask: Mask,
    values: Grid<T>,
}

impl<T: Scalar> BoundaryCondition<T> {
    /// Requires `values` to be zero wherever `mask` is 1.
    pub fn new(mask: Mask, values: Grid<T>) -> Result<Self> {
        if mask.shape() != values.shape() {
            return Err(Error::ShapeMismatch {
                left: mask.shape(),
                right: values.shape(),
            });
        }
        for (idx, (&free, &v)) in mask.data().iter().zip(values.data()).enumerate() {
            if free && v != T::zero() {
                return Err(Error::Config(format!(
                    "boundary value {v} at ({}, {}) lies on an unmasked cell",
                    idx / mask.cols(),
                    idx % mask.cols()
                )));
            }
        }
        Ok(BoundaryCondition { mask, values })
    }

    /// Dirichlet ring held at zero.
    pub fn zero(rows: usize, cols: usize, precision: Precision) -> Result<Self> {
        Ok(BoundaryCondition {
            mask: Mask::dirichlet(rows, cols)?,
            values: Grid::zeros(rows, cols, precision)?,
        })
    }

    /// Dirichlet ring with the left column held at 1 and the rest at 0.
    pub fn hot_left(rows: usize, cols: usize, precision: Precision) -> Result<Self> {
        let mask = Mask::dirichlet(rows, cols)?;
        let values = Grid::from_fn(rows, cols, precision, |_, j| {
            if j == 0 {
                T::one()
            } else {
                T::zero()
            }
        })?;
        Ok(BoundaryCondition { mask, values })
    }

    /// Dirichlet ring taking its values from the outer ring of `ring`; the
    /// interior of `ring` is ignored.
    pub fn from_ring(ring: &Grid<T>) -> Result<Self> {
        let (rows, cols) = ring.shape();
        let mask = Mask::dirichlet(rows, cols)?;
        let values = Grid::from_fn(rows, cols, ring.precision(), |i, j| {
            if mask.get(i, j) {
                T::zero()
            } else {
                ring.get(i, j)
            }
        })?;
        Ok(BoundaryCondition { mask, values })
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn values(&self) -> &Grid<T> {
        &self.values
    }

    pub fn shape(&self) -> (usize, usize) {
        self.mask.shape()
    }

    fn with_precision(&self, precision: Precision) -> Self {
        BoundaryCondition {
            mask: self.mask.clone(),
            values: self.values.with_precision(precision),
        }
    }
}

/// Initial field, right-hand side and boundary condition of one solve.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatProblem<T> {
    initial: Grid<T>,
    rhs: Grid<T>,
    bc: BoundaryCondition<T>,
}

impl<T: Scalar> HeatProblem<T> {
    /// Requires equal shapes and `initial` to hold the boundary values on masked-out cells.
    pub fn new(initial: Grid<T>, rhs: Grid<T>, bc: BoundaryCondition<T>) -> Result<Self> {
        initial.ensure_same_shape(&rhs)?;
        initial.ensure_same_shape(bc.values())?;
        let cols = initial.cols();
        for (idx, (&free, (&u, &b))) in bc
            .mask()
            .data()
            .iter()
            .zip(initial.data().iter().zip(bc.values().data()))
            .enumerate()
        {
            if !free && u != b {
                return Err(Error::Config(format!(
                    "initial value {u} at ({}, {}) differs from the boundary value {b}",
                    idx / cols,
                    idx % cols
                )));
            }
        }
        Ok(HeatProblem { initial, rhs, bc })
    }

    /// Initial field equal to the boundary values with a zero interior.
    pub fn from_boundary(bc: BoundaryCondition<T>, rhs: Option<Grid<T>>) -> Result<Self> {
        let (rows, cols) = bc.shape();
        let precision = bc.values().precision();
        let rhs = match rhs {
            Some(r) => r,
            None => Grid::zeros(rows, cols, precision)?,
        };
        Self::new(bc.values().clone(), rhs, bc)
    }

    /// Zero-source problem with the left wall at 1.
    pub fn hot_left(rows: usize, cols: usize, precision: Precision) -> Result<Self> {
        Self::from_boundary(BoundaryCondition::hot_left(rows, cols, precision)?, None)
    }

    /// Zero-boundary Poisson problem whose discrete solution is
    /// `sin(pi x) sin(pi y)` on the unit square sampled at the grid nodes:
    /// `f = A u` is computed from that field, so the exact solution of the
    /// 5-point system is the field itself (returned alongside).
    pub fn manufactured_sine(
        rows: usize,
        cols: usize,
        precision: Precision,
    ) -> Result<(Self, Grid<f64>)> {
        let bc = BoundaryCondition::<T>::zero(rows, cols, precision)?;
        let (hx, hy) = (1.0 / (rows - 1) as f64, 1.0 / (cols - 1) as f64);
        let pi = std::f64::consts::PI;
        let exact = Grid::<f64>::from_fn(rows, cols, Precision::Fp32, |i, j| {
            if bc.mask().get(i, j) {
                (pi * i as f64 * hx).sin() * (pi * j as f64 * hy).sin()
            } else {
                0.0
            }
        })?;
        let f = ops::mask_mul(
            &ops::conv3x3(&exact, &ops::Kernel3x3::laplacian()),
            bc.mask(),
        )?;
        Ok((
            Self::from_boundary(bc, Some(f.cast::<T>().with_precision(precision)))?,
            exact,
        ))
    }

    pub fn initial(&self) -> &Grid<T> {
        &self.initial
    }

    pub fn rhs(&self) -> &Grid<T> {
        &self.rhs
    }

    pub fn bc(&self) -> &BoundaryCondition<T> {
        &self.bc
    }

    pub fn shape(&self) -> (usize, usize) {
        self.initial.shape()
    }

    /// Same problem starting from `initial`, which must respect the boundary.
    pub fn with_initial(&self, initial: Grid<T>) -> Result<Self> {
        Self::new(initial, self.rhs.clone(), self.bc.clone())
    }

    /// Converts every grid to another scalar type.
    pub fn cast<U: Scalar>(&self) -> HeatProblem<U> {
        HeatProblem {
            initial: self.initial.cast(),
            rhs: self.rhs.cast(),
            bc: BoundaryCondition {
                mask: self.bc.mask.clone(),
                values: self.bc.values.cast(),
            },
        }
    }

    /// Every grid re-rounded into `precision`.
    pub fn with_precision(&self, precision: Precision) -> Self {
        HeatProblem {
            initial: self.initial.with_precision(precision),
            rhs: self.rhs.with_precision(precision),
            bc: self.bc.with_precision(precision),
        }
    }
}

/// One relaxation sweep: `mask * (f/4 + conv(u, stencil5)) + boundary`.
pub(crate) fn relax<T: Scalar>(
    u: &Grid<T>,
    rhs: &Grid<T>,
    mask: &Mask,
    boundary: &Grid<T>,
) -> Grid<T> {
    let precision = u.precision();
    let quarter = T::cast(0.25);
    let (f, m, b) = (rhs.data(), mask.data(), boundary.data());
    let mut out = vec![T::zero(); f.len()];
    ops::conv3x3_each(u, &Kernel3x3::stencil5(), |idx, acc| {
        let keep = if m[idx] { T::one() } else { T::zero() };
        out[idx] = (keep * (acc + quarter * f[idx]) + b[idx]).store(precision);
    });
    Grid::from_parts_unrounded(u.rows(), u.cols(), precision, out)
}

/// Damped sweep: masked cells move a fraction `weight` of the way to the
/// plain Jacobi value; other cells take the boundary value. `weight = 1` is
/// exactly [`relax`].
pub(crate) fn relax_weighted<T: Scalar>(
    u: &Grid<T>,
    rhs: &Grid<T>,
    mask: &Mask,
    boundary: &Grid<T>,
    weight: T,
) -> Grid<T> {
    if weight == T::one() {
        return relax(u, rhs, mask, boundary);
    }
    let precision = u.precision();
    let quarter = T::cast(0.25);
    let keep_old = T::one() - weight;
    let (old, f, m, b) = (u.data(), rhs.data(), mask.data(), boundary.data());
    let mut out = vec![T::zero(); f.len()];
    ops::conv3x3_each(u, &Kernel3x3::stencil5(), |idx, acc| {
        out[idx] = if m[idx] {
            (keep_old * old[idx] + weight * (acc + quarter * f[idx])).store(precision)
        } else {
            b[idx]
        };
    });
    Grid::from_parts_unrounded(u.rows(), u.cols(), precision, out)
}

/// `mask * (f - A u)`, with `A u` evaluated as a convolution with the Laplacian kernel.
pub(crate) fn masked_residual<T: Scalar>(u: &Grid<T>, rhs: &Grid<T>, mask: &Mask) -> Grid<T> {
    let precision = u.precision();
    let (f, m) = (rhs.data(), mask.data());
    let mut out = vec![T::zero(); f.len()];
    ops::conv3x3_each(u, &Kernel3x3::laplacian(), |idx, acc| {
        let keep = if m[idx] { T::one() } else { T::zero() };
        out[idx] = (keep * (f[idx] - acc)).store(precision);
    });
    Grid::from_parts_unrounded(u.rows(), u.cols(), precision, out)
}

fn check_problem_shape<T: Scalar>(u: &Grid<T>, p: &HeatProblem<T>) -> Result<()> {
    u.ensure_same_shape(p.rhs())
}

fn ensure_finite<T: Scalar>(g: &Grid<T>, iteration: usize) -> Result<()> {
    match g.first_non_finite() {
        Some((row, col)) => Err(Error::NonFinite {
            iteration,
            row,
            col,
        }),
        None => Ok(()),
    }
}

/// Residual `r = mask * (f - A u)`; masked-out cells are 0.
pub fn residual<T: Scalar>(u: &Grid<T>, p: &HeatProblem<T>) -> Result<Grid<T>> {
    check_problem_shape(u, p)?;
    Ok(masked_residual(u, p.rhs(), p.bc().mask()))
}

/// Max-norm of the residual of `u`.
pub fn residual_norm<T: Scalar>(u: &Grid<T>, p: &HeatProblem<T>) -> Result<T> {
    Ok(residual(u, p)?.max_abs())
}
