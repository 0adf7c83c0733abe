//! FLOP counts and derived rates.
//!
//! Cross-device comparisons are ratios of rates for the same workload, so the
//! per-point constants cancel out of every speedup.

use crate::error::{Error, Result};
use crate::solvers::VCycleConfig;
use serde::{Deserialize, Serialize};

/// Per-point operation counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlopModel {
    /// Three neighbour additions, one scale, one mask multiply, one boundary add.
    pub jacobi_flops_per_point: u64,
    /// A dense 3x3 convolution (9 multiplies, 8 adds). Informational.
    pub conv_dense_flops_per_point: u64,
    pub residual_flops_per_point: u64,
    pub restrict_flops_per_point: u64,
    pub prolong_flops_per_point: u64,
}

impl Default for FlopModel {
    fn default() -> Self {
        FlopModel {
            jacobi_flops_per_point: 6,
            conv_dense_flops_per_point: 17,
            residual_flops_per_point: 5,
            restrict_flops_per_point: 4,
            prolong_flops_per_point: 8,
        }
    }
}

impl FlopModel {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("jacobi_flops_per_point", self.jacobi_flops_per_point),
            (
                "conv_dense_flops_per_point",
                self.conv_dense_flops_per_point,
            ),
            ("residual_flops_per_point", self.residual_flops_per_point),
            ("restrict_flops_per_point", self.restrict_flops_per_point),
            ("prolong_flops_per_point", self.prolong_flops_per_point),
        ];
        match counts.iter().find(|(_, v)| *v == 0) {
            Some((what, v)) => Err(Error::NonPositive {
                what,
                value: *v as f64,
            }),
            None => Ok(()),
        }
    }
}

/// Whether larger values are better (rates) or worse (times).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricDirection {
    Time,
    Rate,
}

/// `2 m n k`.
pub fn gemm_flops(m: u64, n: u64, k: u64) -> u64 {
    2 * m * n * k
}

pub fn jacobi_flops(rows: u64, cols: u64, iters: u64, model: &FlopModel) -> u64 {
    iters * rows * cols * model.jacobi_flops_per_point
}

/// Work of `cycles` V-cycles. Every level above the coarsest pays its
/// smoothing sweeps plus residual, restriction and prolongation per point; the
/// coarsest pays `coarse_iters` sweeps. With one level only the coarse sweeps
/// remain, which is plain Jacobi.
pub fn multigrid_flops(
    rows: u64,
    cols: u64,
    cfg: &VCycleConfig,
    cycles: u64,
    model: &FlopModel,
) -> u64 {
    let levels = cfg.num_levels.max(1) as u32;
    let points = |l: u32| (rows >> l) * (cols >> l);
    let sweeps = (cfg.pre_smooth + cfg.post_smooth) as u64;
    let per_point = sweeps * model.jacobi_flops_per_point
        + model.residual_flops_per_point
        + model.restrict_flops_per_point
        + model.prolong_flops_per_point;
    let descent: u64 = (0..levels - 1).map(|l| points(l) * per_point).sum();
    let coarse = cfg.coarse_iters as u64 * points(levels - 1) * model.jacobi_flops_per_point;
    cycles * (descent + coarse)
}

/// Work expressed as the number of fine-grid Jacobi sweeps costing the same.
pub fn fine_sweep_equivalents(flops: u64, rows: u64, cols: u64, model: &FlopModel) -> f64 {
    flops as f64 / (rows * cols * model.jacobi_flops_per_point) as f64
}

/// `flops / seconds / 1e9`.
pub fn gflops(flops: f64, seconds: f64) -> Result<f64> {
    if !(seconds > 0.0) {
        return Err(Error::NonPositive {
            what: "seconds",
            value: seconds,
        });
    }
    Ok(flops / seconds / 1e9)
}

/// GFLOPS per watt.
pub fn efficiency(gflops: f64, watts: f64) -> Result<f64> {
    if !(watts > 0.0) {
        return Err(Error::NonPositive {
            what: "watts",
            value: watts,
        });
    }
    Ok(gflops / watts)
}

/// `baseline / candidate` for times, `candidate / baseline` for rates.
pub fn speedup(baseline: f64, candidate: f64, kind: MetricDirection) -> Result<f64> {
    for (what, v) in [("baseline", baseline), ("candidate", candidate)] {
        if !(v > 0.0) {
            return Err(Error::NonPositive { what, value: v });
        }
    }
    Ok(match kind {
        MetricDirection::Time => baseline / candidate,
        MetricDirection::Rate => candidate / baseline,
    })
}

/// Rate speedup of two runs given as (flops, seconds) pairs. Computed as
/// `(fc / fb) * (tb / tc)`, so equal FLOP counts cancel exactly and the
/// result does not depend on the FLOP model at all.
pub fn run_speedup(
    flops_baseline: f64,
    secs_baseline: f64,
    flops_candidate: f64,
    secs_candidate: f64,
) -> Result<f64> {
    for (what, v) in [
        ("baseline flops", flops_baseline),
        ("baseline seconds", secs_baseline),
        ("candidate flops", flops_candidate),
        ("candidate seconds", secs_candidate),
    ] {
        if !(v > 0.0) {
            return Err(Error::NonPositive { what, value: v });
        }
    }
    Ok((flops_candidate / flops_baseline) * (secs_baseline / secs_candidate))
}
