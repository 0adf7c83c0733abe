//! Stencil, multigrid and GEMM workloads written as compositions of
//! neural-network style tensor operators, with binary16 storage emulation,
//! FLOP and energy accounting, and report generation.
//!
//! Kernels are generic over [`Scalar`] (`f32` or `f64`). The `*32` aliases
//! below are the configuration the benchmarks use: fp32 arithmetic with
//! optional fp16 storage.

pub mod bench;
pub mod error;
pub mod fp16;
pub mod grid;
pub mod ops;
pub mod oracle;
pub mod perf;
pub mod report;
pub mod scalar;
pub mod solvers;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{max_abs_diff, Grid, Mask, Matrix, Precision};
pub use ops::{Kernel3x3, MatmulMode};
pub use scalar::Scalar;

pub type Grid32 = Grid<f32>;
pub type Grid64 = Grid<f64>;
pub type Matrix32 = Matrix<f32>;
pub type Matrix64 = Matrix<f64>;
pub type Kernel32 = Kernel3x3<f32>;
