//! The tensor operators the solvers are composed from: single-channel 3x3
//! convolution, mask multiply, 2x2 average pooling, bilinear upsampling,
//! matrix multiply and elementwise add/sub.
//!
//! Every operator computes in the scalar type and rounds once when the result
//! is stored, so an `Fp16Storage` result equals the full-width result rounded
//! elementwise to binary16.

use crate::error::{Error, Result};
use crate::grid::{Grid, Mask, Matrix};
use crate::scalar::Scalar;

/// Row-major 3x3 kernel for single-channel cross-correlation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kernel3x3<T> {
    weights: [T; 9],
}

impl<T: Scalar> Kernel3x3<T> {
    pub fn new(weights: [T; 9]) -> Self {
        Kernel3x3 { weights }
    }

    pub fn from_rows(rows: [[T; 3]; 3]) -> Self {
        let mut weights = [T::zero(); 9];
        for (r, row) in rows.iter().enumerate() {
            weights[r * 3..r * 3 + 3].copy_from_slice(row);
        }
        Kernel3x3 { weights }
    }

    /// Four edge neighbours weighted 0.25, centre and corners 0.
    pub fn stencil5() -> Self {
        let q = T::cast(0.25);
        let z = T::zero();
        Self::from_rows([[z, q, z], [q, z, q], [z, q, z]])
    }

    /// Unit-spacing 5-point operator `A u = 4u - (sum of edge neighbours)`.
    pub fn laplacian() -> Self {
        let m = -T::one();
        let z = T::zero();
        Self::from_rows([[z, m, z], [m, T::cast(4.0), m], [z, m, z]])
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> T {
        self.weights[row * 3 + col]
    }

    pub fn weights(&self) -> &[T; 9] {
        &self.weights
    }

    pub fn sum(&self) -> T {
        self.weights.iter().copied().sum()
    }
}

/// Stencil-5 averaging kernel `[[0,.25,0],[.25,0,.25],[0,.25,0]]`.
pub fn stencil5_kernel<T: Scalar>() -> Kernel3x3<T> {
    Kernel3x3::stencil5()
}

/// Same-shape cross-correlation with zero padding of width 1.
///
/// All nine taps contribute in kernel row-major order, including zero weights,
/// so non-finite inputs propagate the way a dense convolution would.
pub fn conv3x3<T: Scalar>(g: &Grid<T>, k: &Kernel3x3<T>) -> Grid<T> {
    let out = conv3x3_raw(g, k);
    let precision = g.precision();
    Grid::from_parts_unrounded(
        g.rows(),
        g.cols(),
        precision,
        out.into_iter().map(|v| v.store(precision)).collect(),
    )
}

/// Unrounded convolution output, shared with the fused solver kernels.
pub(crate) fn conv3x3_raw<T: Scalar>(g: &Grid<T>, k: &Kernel3x3<T>) -> Vec<T> {
    let (rows, cols) = g.shape();
    let mut out = vec![T::zero(); rows * cols];
    conv3x3_each(g, k, |idx, acc| out[idx] = acc);
    out
}

/// Calls `sink(index, sum)` for every cell, in row-major order. Interior cells
/// take a branch-free path; the outer ring reads zeros outside the grid.
#[inline]
pub(crate) fn conv3x3_each<T: Scalar>(
    g: &Grid<T>,
    k: &Kernel3x3<T>,
    mut sink: impl FnMut(usize, T),
) {
    let (rows, cols) = g.shape();
    let src = g.data();
    let w = k.weights();
    let padded = |i: usize, j: usize| -> T {
        let mut acc = T::zero();
        for a in 0..3 {
            let ii = i + a;
            for b in 0..3 {
                let jj = j + b;
                // (ii, jj) is offset by one: the padded source coordinate.
                let v = if ii == 0 || jj == 0 || ii > rows || jj > cols {
                    T::zero()
                } else {
                    src[(ii - 1) * cols + (jj - 1)]
                };
                acc += w[a * 3 + b] * v;
            }
        }
        acc
    };
    for i in 0..rows {
        let interior_row = i > 0 && i + 1 < rows;
        for j in 0..cols {
            let acc = if interior_row && j > 0 && j + 1 < cols {
                let up = (i - 1) * cols + j;
                let mid = i * cols + j;
                let down = (i + 1) * cols + j;
                let mut acc = T::zero();
                acc += w[0] * src[up - 1];
                acc += w[1] * src[up];
                acc += w[2] * src[up + 1];
                acc += w[3] * src[mid - 1];
                acc += w[4] * src[mid];
                acc += w[5] * src[mid + 1];
                acc += w[6] * src[down - 1];
                acc += w[7] * src[down];
                acc += w[8] * src[down + 1];
                acc
            } else {
                padded(i, j)
            };
            sink(i * cols + j, acc);
        }
    }
}

/// Elementwise `g * m` with the mask read as 0/1.
pub fn mask_mul<T: Scalar>(g: &Grid<T>, m: &Mask) -> Result<Grid<T>> {
    if g.shape() != m.shape() {
        return Err(Error::ShapeMismatch {
            left: g.shape(),
            right: m.shape(),
        });
    }
    let data = g
        .data()
        .iter()
        .zip(m.data())
        .map(|(&v, &keep)| v * if keep { T::one() } else { T::zero() })
        .collect();
    Ok(Grid::from_parts_unrounded(
        g.rows(),
        g.cols(),
        g.precision(),
        data,
    ))
}

/// 2x2 mean pooling with stride 2. Both dimensions must be even.
pub fn avgpool2<T: Scalar>(g: &Grid<T>) -> Result<Grid<T>> {
    let (rows, cols) = g.shape();
    if rows % 2 != 0 || cols % 2 != 0 {
        return Err(Error::Dimension {
            rows,
            cols,
            reason: "average pooling needs even dimensions",
        });
    }
    let src = g.data();
    let quarter = T::cast(0.25);
    let precision = g.precision();
    Grid::from_fn(rows / 2, cols / 2, precision, |i, j| {
        let top = 2 * i * cols + 2 * j;
        let bottom = top + cols;
        (src[top] + src[top + 1] + src[bottom] + src[bottom + 1]) * quarter
    })
}

/// Per-axis source index pair and blend weight for half-pixel bilinear sampling.
fn linear_taps<T: Scalar>(in_len: usize, out_len: usize) -> Vec<(usize, usize, T)> {
    let scale = T::cast(in_len as f64) / T::cast(out_len as f64);
    let half = T::cast(0.5);
    (0..out_len)
        .map(|d| {
            let src = ((T::cast(d as f64) + half) * scale - half).max(T::zero());
            let i0 = (src.floor().widen() as usize).min(in_len - 1);
            let i1 = (i0 + 1).min(in_len - 1);
            let frac = src - T::cast(i0 as f64);
            (i0, i1, frac)
        })
        .collect()
}

/// Bilinear resize with half-pixel centres (`align_corners = false`).
///
/// Source coordinate per axis is `(d + 0.5) * in / out - 0.5`, floored at 0;
/// the upper neighbour index is clamped to the last row/column.
pub fn bilinear_upsample<T: Scalar>(
    g: &Grid<T>,
    out_rows: usize,
    out_cols: usize,
) -> Result<Grid<T>> {
    if out_rows == 0 || out_cols == 0 {
        return Err(Error::Dimension {
            rows: out_rows,
            cols: out_cols,
            reason: "output dimensions must be at least 1",
        });
    }
    let (rows, cols) = g.shape();
    let src = g.data();
    let row_taps = linear_taps::<T>(rows, out_rows);
    let col_taps = linear_taps::<T>(cols, out_cols);
    Grid::from_fn(out_rows, out_cols, g.precision(), |i, j| {
        let (r0, r1, fr) = row_taps[i];
        let (c0, c1, fc) = col_taps[j];
        let (wr0, wc0) = (T::one() - fr, T::one() - fc);
        let top = wc0 * src[r0 * cols + c0] + fc * src[r0 * cols + c1];
        let bottom = wc0 * src[r1 * cols + c0] + fc * src[r1 * cols + c1];
        wr0 * top + fr * bottom
    })
}

/// Summation strategy for [`matmul_with`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MatmulMode {
    /// Naive triple loop, k innermost, fixed order; bit-reproducible.
    #[default]
    Verification,
    /// Blocked kernel from `matrixmultiply`; reorders the summation.
    Performance,
}

/// Matrix product in verification mode.
pub fn matmul<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    matmul_with(a, b, MatmulMode::Verification)
}

pub fn matmul_with<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>, mode: MatmulMode) -> Result<Matrix<T>> {
    if a.cols() != b.rows() {
        return Err(Error::ShapeMismatch {
            left: a.shape(),
            right: b.shape(),
        });
    }
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let precision = a.precision().narrower(b.precision());
    let (ad, bd) = (a.data(), b.data());
    let mut c = vec![T::zero(); m * n];
    match mode {
        MatmulMode::Verification => {
            for i in 0..m {
                let arow = &ad[i * k..(i + 1) * k];
                for j in 0..n {
                    let mut acc = T::zero();
                    for (p, &av) in arow.iter().enumerate() {
                        acc += av * bd[p * n + j];
                    }
                    c[i * n + j] = acc;
                }
            }
        }
        MatmulMode::Performance => T::gemm(m, k, n, ad, bd, &mut c),
    }
    if precision != crate::grid::Precision::Fp32 {
        for v in &mut c {
            *v = v.store(precision);
        }
    }
    Ok(Grid::from_parts_unrounded(m, n, precision, c))
}

fn zip_with<T: Scalar>(a: &Grid<T>, b: &Grid<T>, f: impl Fn(T, T) -> T) -> Result<Grid<T>> {
    a.ensure_same_shape(b)?;
    let precision = a.precision().narrower(b.precision());
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| f(x, y).store(precision))
        .collect();
    Ok(Grid::from_parts_unrounded(
        a.rows(),
        a.cols(),
        precision,
        data,
    ))
}

pub fn add<T: Scalar>(a: &Grid<T>, b: &Grid<T>) -> Result<Grid<T>> {
    zip_with(a, b, |x, y| x + y)
}

pub fn sub<T: Scalar>(a: &Grid<T>, b: &Grid<T>) -> Result<Grid<T>> {
    zip_with(a, b, |x, y| x - y)
}

/// `alpha * a + beta * b`, used by the linearity checks.
pub fn axpby<T: Scalar>(alpha: T, a: &Grid<T>, beta: T, b: &Grid<T>) -> Result<Grid<T>> {
    zip_with(a, b, |x, y| alpha * x + beta * y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fp16::round_fp16_f32;
    use crate::grid::{max_abs_diff, Precision};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const P32: Precision = Precision::Fp32;

    fn grid(rows: &[&[f32]]) -> Grid<f32> {
        Grid::from_rows(rows, P32).unwrap()
    }

    fn random_grid(rows: usize, cols: usize, seed: u64) -> Grid<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Grid::from_fn(rows, cols, P32, |_, _| rng.random_range(-1.0..1.0)).unwrap()
    }

    /// Direct evaluation of the padded cross-correlation sum.
    fn conv_oracle(g: &Grid<f32>, k: &Kernel3x3<f32>) -> Grid<f32> {
        let (r, c) = g.shape();
        Grid::from_fn(r, c, P32, |i, j| {
            let mut s = 0.0f64;
            for a in -1i64..=1 {
                for b in -1i64..=1 {
                    let (ii, jj) = (i as i64 + a, j as i64 + b);
                    if ii >= 0 && jj >= 0 && (ii as usize) < r && (jj as usize) < c {
                        s += k.get((a + 1) as usize, (b + 1) as usize) as f64
                            * g.get(ii as usize, jj as usize) as f64;
                    }
                }
            }
            s as f32
        })
        .unwrap()
    }

    #[test]
    fn stencil5_weights() {
        let k = stencil5_kernel::<f32>();
        assert_eq!(k.get(1, 1), 0.0);
        for (r, c) in [(0, 1), (1, 0), (1, 2), (2, 1)] {
            assert_eq!(k.get(r, c), 0.25);
        }
        for (r, c) in [(0, 0), (0, 2), (2, 0), (2, 2)] {
            assert_eq!(k.get(r, c), 0.0);
        }
        assert_eq!(k.sum(), 1.0);
    }

    #[test]
    fn conv_uniform_and_impulse() {
        let g = Grid::<f32>::filled(3, 3, P32, 4.0).unwrap();
        let out = conv3x3(&g, &stencil5_kernel());
        assert_eq!(out.get(1, 1), 4.0);

        let mut imp = Grid::<f32>::zeros(3, 3, P32).unwrap();
        imp.set(1, 1, 1.0);
        let out = conv3x3(&imp, &stencil5_kernel());
        let expected = grid(&[&[0.0, 0.25, 0.0], &[0.25, 0.0, 0.25], &[0.0, 0.25, 0.0]]);
        assert_eq!(out, expected);
    }

    #[test]
    fn conv_matches_direct_sum() {
        let g = random_grid(5, 5, 11);
        for k in [Kernel3x3::stencil5(), Kernel3x3::laplacian()] {
            let diff = max_abs_diff(&conv3x3(&g, &k), &conv_oracle(&g, &k)).unwrap();
            assert!(diff <= 1e-6, "diff {diff}");
        }
    }

    #[test]
    fn conv_linearity() {
        let g1 = random_grid(16, 16, 1);
        let g2 = random_grid(16, 16, 2);
        let (alpha, beta) = (0.7f32, -1.3f32);
        for k in [Kernel3x3::stencil5(), Kernel3x3::laplacian()] {
            let lhs = conv3x3(&axpby(alpha, &g1, beta, &g2).unwrap(), &k);
            let rhs = axpby(alpha, &conv3x3(&g1, &k), beta, &conv3x3(&g2, &k)).unwrap();
            assert!(max_abs_diff(&lhs, &rhs).unwrap() <= 1e-5);
        }
    }

    #[test]
    fn mask_mul_examples() {
        let g = grid(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(mask_mul(&g, &Mask::ones(2, 2).unwrap()).unwrap(), g);
        assert_eq!(
            mask_mul(&g, &Mask::zeros(2, 2).unwrap()).unwrap(),
            Grid::zeros(2, 2, P32).unwrap()
        );
        let m = Mask::from_values(2, 2, &[1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(mask_mul(&g, &m).unwrap(), grid(&[&[1.0, 0.0], &[0.0, 4.0]]));
        assert!(mask_mul(&g, &Mask::ones(3, 2).unwrap()).is_err());
    }

    #[test]
    fn avgpool_examples() {
        let g = grid(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(avgpool2(&g).unwrap(), grid(&[&[2.5]]));
        let c = Grid::<f32>::filled(4, 4, P32, 1.75).unwrap();
        assert_eq!(
            avgpool2(&c).unwrap(),
            Grid::filled(2, 2, P32, 1.75).unwrap()
        );
        assert!(avgpool2(&Grid::<f32>::zeros(3, 4, P32).unwrap()).is_err());
    }

    #[test]
    fn avgpool_preserves_mean() {
        let g = random_grid(8, 12, 5);
        let pooled = avgpool2(&g).unwrap();
        assert!((pooled.mean() - g.mean()).abs() <= 1e-6);
    }

    /// Scalar half-pixel evaluation written out longhand, in f64.
    fn bilinear_oracle(g: &Grid<f32>, out_rows: usize, out_cols: usize) -> Vec<f64> {
        let (r, c) = g.shape();
        let coord = |d: usize, n_in: usize, n_out: usize| -> (usize, usize, f64) {
            let s =
                ((d as f64 + 0.5) * n_in as f64 / n_out as f64 - 0.5).clamp(0.0, (n_in - 1) as f64);
            let lo = s.floor() as usize;
            let hi = (lo + 1).min(n_in - 1);
            (lo, hi, s - lo as f64)
        };
        let mut out = Vec::new();
        for i in 0..out_rows {
            for j in 0..out_cols {
                let (y0, y1, fy) = coord(i, r, out_rows);
                let (x0, x1, fx) = coord(j, c, out_cols);
                let v = |y: usize, x: usize| g.get(y, x) as f64;
                out.push(
                    (1.0 - fy) * ((1.0 - fx) * v(y0, x0) + fx * v(y0, x1))
                        + fy * ((1.0 - fx) * v(y1, x0) + fx * v(y1, x1)),
                );
            }
        }
        out
    }

    #[test]
    fn bilinear_2x2_to_4x4_frozen() {
        let g = grid(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let up = bilinear_upsample(&g, 4, 4).unwrap();
        // Frozen from bilinear_oracle.
        let expected: [f32; 16] = [
            1.0, 1.25, 1.75, 2.0, 1.5, 1.75, 2.25, 2.5, 2.5, 2.75, 3.25, 3.5, 3.0, 3.25, 3.75, 4.0,
        ];
        let oracle = bilinear_oracle(&g, 4, 4);
        for ((&got, &want), &o) in up.data().iter().zip(&expected).zip(&oracle) {
            assert_eq!(want as f64, o);
            assert!((got - want).abs() <= 1e-6);
        }
    }

    #[test]
    fn bilinear_non_integer_ratio_matches_oracle() {
        let g = random_grid(5, 7, 9);
        for (r, c) in [(8, 9), (3, 4), (11, 13), (5, 14)] {
            let up = bilinear_upsample(&g, r, c).unwrap();
            for (got, want) in up.data().iter().zip(bilinear_oracle(&g, r, c)) {
                assert!((*got as f64 - want).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn bilinear_constant_and_identity() {
        let c = Grid::<f32>::filled(3, 5, P32, 2.5).unwrap();
        assert_eq!(
            bilinear_upsample(&c, 7, 4).unwrap(),
            Grid::filled(7, 4, P32, 2.5).unwrap()
        );
        let g = random_grid(6, 5, 3);
        assert!(bilinear_upsample(&g, 6, 5).unwrap().bit_eq(&g));
        assert!(bilinear_upsample(&g, 0, 5).is_err());
    }

    /// Naive triple loop in f64.
    fn matmul_oracle(a: &Grid<f32>, b: &Grid<f32>) -> Vec<f64> {
        let (m, k, n) = (a.rows(), a.cols(), b.cols());
        let mut c = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                for p in 0..k {
                    c[i * n + j] += a.get(i, p) as f64 * b.get(p, j) as f64;
                }
            }
        }
        c
    }

    #[test]
    fn matmul_examples() {
        let a = grid(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = grid(&[&[5.0, 6.0], &[7.0, 8.0]]);
        assert_eq!(
            matmul(&a, &b).unwrap(),
            grid(&[&[19.0, 22.0], &[43.0, 50.0]])
        );
        let eye = Grid::<f32>::from_fn(3, 3, P32, |i, j| if i == j { 1.0 } else { 0.0 }).unwrap();
        let r = random_grid(3, 4, 4);
        assert_eq!(matmul(&eye, &r).unwrap(), r);
        assert!(matmul(&a, &random_grid(3, 2, 1)).is_err());
    }

    #[test]
    fn matmul_modes_match_oracle() {
        let a = random_grid(64, 48, 21);
        let b = random_grid(48, 64, 22);
        let oracle = matmul_oracle(&a, &b);
        for mode in [MatmulMode::Verification, MatmulMode::Performance] {
            let c = matmul_with(&a, &b, mode).unwrap();
            for (&got, &want) in c.data().iter().zip(&oracle) {
                assert!(
                    (got as f64 - want).abs() <= 1e-4 * want.abs().max(1.0),
                    "{mode:?}"
                );
            }
        }
    }

    #[test]
    fn matmul_associativity() {
        let a = random_grid(20, 32, 31);
        let b = random_grid(32, 17, 32);
        let c = random_grid(17, 9, 33);
        let left = matmul(&matmul(&a, &b).unwrap(), &c).unwrap();
        let right = matmul(&a, &matmul(&b, &c).unwrap()).unwrap();
        let scale = left.max_abs().max(1.0);
        assert!(max_abs_diff(&left, &right).unwrap() / scale <= 1e-3);
    }

    #[test]
    fn add_sub_examples() {
        let a = grid(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = grid(&[&[4.0, 3.0], &[2.0, 1.0]]);
        let z = Grid::<f32>::zeros(2, 2, P32).unwrap();
        assert_eq!(add(&a, &z).unwrap(), a);
        assert_eq!(sub(&a, &a).unwrap(), z);
        assert_eq!(add(&a, &b).unwrap(), Grid::filled(2, 2, P32, 5.0).unwrap());
        assert!(add(&a, &random_grid(2, 3, 0)).is_err());
    }

    #[test]
    fn fp16_results_are_rounded_fp32_results() {
        let g = random_grid(8, 8, 41).with_precision(Precision::Fp16Storage);
        let g32 = g.with_precision(P32);
        let k = Kernel3x3::stencil5();
        let pairs: Vec<(Grid<f32>, Grid<f32>)> = vec![
            (conv3x3(&g, &k), conv3x3(&g32, &k)),
            (avgpool2(&g).unwrap(), avgpool2(&g32).unwrap()),
            (
                bilinear_upsample(&g, 13, 11).unwrap(),
                bilinear_upsample(&g32, 13, 11).unwrap(),
            ),
            (matmul(&g, &g).unwrap(), matmul(&g32, &g32).unwrap()),
            (add(&g, &g).unwrap(), add(&g32, &g32).unwrap()),
        ];
        for (half, full) in pairs {
            assert_eq!(half.precision(), Precision::Fp16Storage);
            for (&h, &f) in half.data().iter().zip(full.data()) {
                assert_eq!(h, round_fp16_f32(f));
            }
        }
    }

    proptest! {
        #[test]
        fn avgpool_mean_property(seed in 0u64..1000, hr in 1usize..6, hc in 1usize..6) {
            let g = random_grid(2 * hr, 2 * hc, seed);
            let pooled = avgpool2(&g).unwrap();
            prop_assert!((pooled.mean() - g.mean()).abs() <= 1e-6);
        }

        #[test]
        fn bilinear_same_shape_identity(seed in 0u64..1000, r in 1usize..9, c in 1usize..9) {
            let g = random_grid(r, c, seed);
            prop_assert!(bilinear_upsample(&g, r, c).unwrap().bit_eq(&g));
        }
    }
}
