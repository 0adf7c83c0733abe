//! Grids, matrices and masks: dense row-major 2-D storage with a precision tag.

use std::fmt;
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fp16;
use crate::scalar::Scalar;

/// Storage precision of a grid.
///
/// `Fp32` stores values at the scalar's native width (exactly fp32 for the
/// `f32` aliases). `Fp16Storage` rounds every stored element to the nearest
/// binary16 value; arithmetic still happens in the scalar type.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum Precision {
    #[default]
    #[serde(rename = "fp32")]
    Fp32,
    #[serde(rename = "fp16")]
    Fp16Storage,
}

impl Precision {
    pub fn as_str(self) -> &'static str {
        match self {
            Precision::Fp32 => "fp32",
            Precision::Fp16Storage => "fp16",
        }
    }

    /// Bytes per stored element on the emulated device.
    pub fn bytes_per_element(self) -> usize {
        match self {
            Precision::Fp32 => 4,
            Precision::Fp16Storage => 2,
        }
    }

    /// The less precise of two storage formats.
    pub fn narrower(self, other: Precision) -> Precision {
        self.max(other)
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fp32" | "float32" | "f32" => Ok(Precision::Fp32),
            "fp16" | "float16" | "f16" | "fp16_storage" => Ok(Precision::Fp16Storage),
            other => Err(Error::Config(format!("unknown precision {other:?}"))),
        }
    }
}

/// Dense 2-D field of reals, row-major, `(row, col)` indexed.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    rows: usize,
    cols: usize,
    precision: Precision,
    data: Vec<T>,
}

/// GEMM operands share the grid layout and precision rules.
pub type Matrix<T> = Grid<T>;

fn check_dims(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension {
            rows,
            cols,
            reason: "both dimensions must be at least 1",
        });
    }
    Ok(())
}

impl<T: Scalar> Grid<T> {
    /// Builds a grid from `f(row, col)`, rounding each value per `precision`.
    pub fn from_fn(
        rows: usize,
        cols: usize,
        precision: Precision,
        mut f: impl FnMut(usize, usize) -> T,
    ) -> Result<Self> {
        check_dims(rows, cols)?;
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j).store(precision));
            }
        }
        Ok(Grid {
            rows,
            cols,
            precision,
            data,
        })
    }

    pub fn zeros(rows: usize, cols: usize, precision: Precision) -> Result<Self> {
        check_dims(rows, cols)?;
        Ok(Grid {
            rows,
            cols,
            precision,
            data: vec![T::zero(); rows * cols],
        })
    }

    pub fn filled(rows: usize, cols: usize, precision: Precision, value: T) -> Result<Self> {
        check_dims(rows, cols)?;
        Ok(Grid {
            rows,
            cols,
            precision,
            data: vec![value.store(precision); rows * cols],
        })
    }

    /// Wraps row-major `data`, rounding per `precision`.
    pub fn from_vec(
        rows: usize,
        cols: usize,
        precision: Precision,
        mut data: Vec<T>,
    ) -> Result<Self> {
        check_dims(rows, cols)?;
        if data.len() != rows * cols {
            return Err(Error::DataLength {
                rows,
                cols,
                len: data.len(),
            });
        }
        if precision != Precision::Fp32 {
            for v in &mut data {
                *v = v.store(precision);
            }
        }
        Ok(Grid {
            rows,
            cols,
            precision,
            data,
        })
    }

    /// Builds from nested rows, mostly for tests and fixtures.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R], precision: Precision) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(nrows * ncols);
        for r in rows {
            if r.as_ref().len() != ncols {
                return Err(Error::DataLength {
                    rows: nrows,
                    cols: ncols,
                    len: r.as_ref().len(),
                });
            }
            data.extend_from_slice(r.as_ref());
        }
        Self::from_vec(nrows, ncols, precision, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn precision(&self) -> Precision {
        self.precision
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[row * self.cols + col]
    }

    /// Stores `value` at `(row, col)`, rounding per the grid's precision.
    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.cols + col] = value.store(self.precision);
    }

    /// Copy re-rounded into `precision`.
    pub fn with_precision(&self, precision: Precision) -> Self {
        Grid {
            rows: self.rows,
            cols: self.cols,
            precision,
            data: self.data.iter().map(|v| v.store(precision)).collect(),
        }
    }

    /// Converts to another scalar type, keeping the precision tag.
    pub fn cast<U: Scalar>(&self) -> Grid<U> {
        Grid {
            rows: self.rows,
            cols: self.cols,
            precision: self.precision,
            data: self
                .data
                .iter()
                .map(|v| U::cast(v.widen()).store(self.precision))
                .collect(),
        }
    }

    /// Elementwise map into a new grid of the same shape and precision.
    pub fn map(&self, mut f: impl FnMut(T) -> T) -> Self {
        Grid {
            rows: self.rows,
            cols: self.cols,
            precision: self.precision,
            data: self
                .data
                .iter()
                .map(|&v| f(v).store(self.precision))
                .collect(),
        }
    }

    pub fn ensure_same_shape<U>(&self, other: &Grid<U>) -> Result<()> {
        if self.shape() != (other.rows, other.cols) {
            return Err(Error::ShapeMismatch {
                left: self.shape(),
                right: (other.rows, other.cols),
            });
        }
        Ok(())
    }

    /// Largest `|v|`; NaN if any element is NaN.
    pub fn max_abs(&self) -> T {
        let mut m = T::zero();
        for &v in &self.data {
            if v.is_nan() {
                return v;
            }
            m = m.max(v.abs());
        }
        m
    }

    pub fn mean(&self) -> T {
        let sum: T = self.data.iter().copied().sum();
        sum / T::cast(self.data.len() as f64)
    }

    /// First non-finite element in row-major order.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.data
            .iter()
            .position(|v| !v.is_finite())
            .map(|idx| (idx / self.cols, idx % self.cols))
    }

    /// Bitwise equality of shape, precision and every element.
    pub fn bit_eq(&self, other: &Self) -> bool {
        self.shape() == other.shape()
            && self.precision == other.precision
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.widen().to_bits() == b.widen().to_bits())
    }

    pub(crate) fn from_parts_unrounded(
        rows: usize,
        cols: usize,
        precision: Precision,
        data: Vec<T>,
    ) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Grid {
            rows,
            cols,
            precision,
            data,
        }
    }
}

/// `max |a - b|` over all elements; 0 for identical grids, NaN propagates.
pub fn max_abs_diff<T: Scalar>(a: &Grid<T>, b: &Grid<T>) -> Result<T> {
    a.ensure_same_shape(b)?;
    let mut m = T::zero();
    for (&x, &y) in a.data.iter().zip(&b.data) {
        let d = (x - y).abs();
        if d.is_nan() {
            return Ok(d);
        }
        m = m.max(d);
    }
    Ok(m)
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct GridRepr<T> {
    rows: usize,
    cols: usize,
    precision: Precision,
    data: Vec<T>,
}

impl<T: Scalar> Serialize for Grid<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        #[serde(bound = "T: Scalar")]
        struct Borrowed<'a, T> {
            rows: usize,
            cols: usize,
            precision: Precision,
            data: &'a [T],
        }
        Borrowed {
            rows: self.rows,
            cols: self.cols,
            precision: self.precision,
            data: &self.data,
        }
        .serialize(s)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for Grid<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = GridRepr::<T>::deserialize(d)?;
        Grid::from_vec(r.rows, r.cols, r.precision, r.data).map_err(D::Error::custom)
    }
}

/// Binary grid: `true` marks cells the update may change, `false` marks fixed cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    rows: usize,
    cols: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self> {
        check_dims(rows, cols)?;
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Ok(Mask { rows, cols, data })
    }

    pub fn ones(rows: usize, cols: usize) -> Result<Self> {
        Self::from_fn(rows, cols, |_, _| true)
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::from_fn(rows, cols, |_, _| false)
    }

    /// Zero on the outer ring, one inside. Needs at least 3x3 so the interior is non-empty.
    pub fn dirichlet(rows: usize, cols: usize) -> Result<Self> {
        if rows < 3 || cols < 3 {
            return Err(Error::Dimension {
                rows,
                cols,
                reason: "a Dirichlet mask needs at least 3x3 cells",
            });
        }
        Self::from_fn(rows, cols, |i, j| {
            i > 0 && j > 0 && i + 1 < rows && j + 1 < cols
        })
    }

    /// Validates numeric 0/1 values.
    pub fn from_values(rows: usize, cols: usize, values: &[f64]) -> Result<Self> {
        check_dims(rows, cols)?;
        if values.len() != rows * cols {
            return Err(Error::DataLength {
                rows,
                cols,
                len: values.len(),
            });
        }
        let data = values
            .iter()
            .enumerate()
            .map(|(index, &value)| match value {
                v if v == 1.0 => Ok(true),
                v if v == 0.0 => Ok(false),
                value => Err(Error::MaskValue { index, value }),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Mask { rows, cols, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// The mask as a 0/1 grid.
    pub fn to_grid<T: Scalar>(&self) -> Grid<T> {
        Grid::from_parts_unrounded(
            self.rows,
            self.cols,
            Precision::Fp32,
            self.data
                .iter()
                .map(|&b| if b { T::one() } else { T::zero() })
                .collect(),
        )
    }
}

#[derive(Serialize, Deserialize)]
struct MaskRepr {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Serialize for Mask {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MaskRepr {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|&b| if b { 1.0 } else { 0.0 })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Mask {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = MaskRepr::deserialize(d)?;
        Mask::from_values(r.rows, r.cols, &r.data).map_err(D::Error::custom)
    }
}

/// Whether every element of `g` is exactly a binary16 value.
pub fn is_fp16_exact<T: Scalar>(g: &Grid<T>) -> bool {
    g.data().iter().all(|v| fp16::is_representable(v.widen()))
}
