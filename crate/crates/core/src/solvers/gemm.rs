use crate::error::{Error, Result};
use crate::grid::{Matrix, Precision};
use crate::ops::{self, MatmulMode};
use crate::scalar::Scalar;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform `[0, 1)` operands `A` (m x k) then `B` (k x n) from one seeded stream.
///
/// Each value takes the top 24 bits of a `u32` draw, so it is exact in f32.
pub fn gemm_operands<T: Scalar>(
    m: usize,
    n: usize,
    k: usize,
    precision: Precision,
    seed: u64,
) -> Result<(Matrix<T>, Matrix<T>)> {
    if m == 0 || n == 0 || k == 0 {
        return Err(Error::Dimension {
            rows: m,
            cols: n,
            reason: "gemm dimensions must be at least 1",
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = move || T::cast((rng.next_u32() >> 8) as f64 * (1.0 / (1u32 << 24) as f64));
    let a = Matrix::from_fn(m, k, precision, |_, _| draw())?;
    let b = Matrix::from_fn(k, n, precision, |_, _| draw())?;
    Ok((a, b))
}

/// Seeds operands and multiplies them in verification mode.
pub fn gemm_run<T: Scalar>(
    m: usize,
    n: usize,
    k: usize,
    precision: Precision,
    seed: u64,
) -> Result<Matrix<T>> {
    gemm_run_with(m, n, k, precision, seed, MatmulMode::Verification)
}

pub fn gemm_run_with<T: Scalar>(
    m: usize,
    n: usize,
    k: usize,
    precision: Precision,
    seed: u64,
    mode: MatmulMode,
) -> Result<Matrix<T>> {
    let (a, b) = gemm_operands::<T>(m, n, k, precision, seed)?;
    ops::matmul_with(&a, &b, mode)
}
