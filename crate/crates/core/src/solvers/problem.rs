//! JSON problem files for one-off solves.
//!
//! ```json
//! {"rows": 33, "cols": 33, "precision": "fp32", "boundary": "hot-left",
//!  "solver": {"type": "jacobi", "params": {"iterations": 2000}}}
//! ```
//!
//! `boundary: "custom"` takes the outer ring of `boundary_values` (row-major,
//! `rows * cols` numbers); `rhs` is optional in both cases.

use super::{
    jacobi_solve, multigrid_solve, residual_norm, BoundaryCondition, HeatProblem, JacobiConfig,
    VCycleConfig,
};
use crate::error::{Error, Result};
use crate::grid::{Grid, Precision};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryKind {
    HotLeft,
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JacobiParams {
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub tolerance: Option<f64>,
}

fn default_iterations() -> usize {
    1000
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultigridParams {
    pub num_levels: Option<usize>,
    pub pre_smooth: Option<usize>,
    pub post_smooth: Option<usize>,
    pub coarse_iters: Option<usize>,
    pub residual_scale: Option<f64>,
    #[serde(default)]
    pub paper_faithful: bool,
    pub smoother_weight: Option<f64>,
    pub max_cycles: Option<usize>,
    pub tol: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "params", rename_all = "lowercase")]
pub enum SolverSpec {
    Jacobi(JacobiParams),
    Multigrid(MultigridParams),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub rows: usize,
    pub cols: usize,
    #[serde(default)]
    pub precision: Precision,
    pub boundary: BoundaryKind,
    #[serde(default)]
    pub boundary_values: Option<Vec<f64>>,
    #[serde(default)]
    pub rhs: Option<Vec<f64>>,
    pub solver: SolverSpec,
}

/// What a solve produced.
#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub solver: &'static str,
    /// Jacobi sweeps or V-cycles run.
    pub steps: usize,
    pub final_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub last_diff: Option<f64>,
    pub solution: Grid<f32>,
}

pub const DEFAULT_MAX_CYCLES: usize = 20;
pub const DEFAULT_MG_TOL: f64 = 1e-6;

impl ProblemFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn problem<T: Scalar>(&self) -> Result<HeatProblem<T>> {
        let (rows, cols, prec) = (self.rows, self.cols, self.precision);
        let grid = |v: &Vec<f64>| {
            Grid::from_vec(rows, cols, prec, v.iter().map(|&x| T::cast(x)).collect())
        };
        let bc = match (self.boundary, &self.boundary_values) {
            (BoundaryKind::HotLeft, None) => BoundaryCondition::hot_left(rows, cols, prec)?,
            (BoundaryKind::HotLeft, Some(_)) => {
                return Err(Error::Config(
                    "boundary_values given with a hot-left boundary".into(),
                ))
            }
            (BoundaryKind::Custom, Some(v)) => BoundaryCondition::from_ring(&grid(v)?)?,
            (BoundaryKind::Custom, None) => {
                return Err(Error::Config(
                    "custom boundary needs boundary_values".into(),
                ))
            }
        };
        let rhs = self.rhs.as_ref().map(grid).transpose()?;
        HeatProblem::from_boundary(bc, rhs)
    }

    pub fn vcycle_config(&self) -> Option<(VCycleConfig, usize, f64)> {
        let SolverSpec::Multigrid(m) = &self.solver else {
            return None;
        };
        let mut cfg = VCycleConfig::for_shape(self.rows, self.cols);
        cfg.precision = self.precision;
        cfg.num_levels = m.num_levels.unwrap_or(cfg.num_levels);
        cfg.pre_smooth = m.pre_smooth.unwrap_or(cfg.pre_smooth);
        cfg.post_smooth = m.post_smooth.unwrap_or(cfg.post_smooth);
        cfg.coarse_iters = m.coarse_iters.unwrap_or(cfg.coarse_iters);
        cfg.residual_scale = m.residual_scale.unwrap_or(cfg.residual_scale);
        cfg.paper_faithful = m.paper_faithful;
        cfg.smoother_weight = m.smoother_weight.unwrap_or(cfg.smoother_weight);
        Some((
            cfg,
            m.max_cycles.unwrap_or(DEFAULT_MAX_CYCLES),
            m.tol.unwrap_or(DEFAULT_MG_TOL),
        ))
    }

    /// Solves in f32 arithmetic.
    pub fn solve(&self) -> Result<SolveReport> {
        let p = self.problem::<f32>()?;
        match &self.solver {
            SolverSpec::Jacobi(j) => {
                let cfg = JacobiConfig {
                    iterations: j.iterations,
                    tolerance: j.tolerance,
                    precision: self.precision,
                };
                let out = jacobi_solve(&p, &cfg)?;
                Ok(SolveReport {
                    solver: "jacobi",
                    steps: out.iterations_run,
                    final_residual: residual_norm(&out.solution, &p)? as f64,
                    last_diff: Some(out.last_diff as f64),
                    solution: out.solution,
                })
            }
            SolverSpec::Multigrid(_) => {
                let (cfg, max_cycles, tol) = self.vcycle_config().unwrap();
                let out = multigrid_solve(&p, &cfg, max_cycles, tol)?;
                Ok(SolveReport {
                    solver: "multigrid",
                    steps: out.cycles,
                    final_residual: out.final_residual as f64,
                    last_diff: None,
                    solution: out.solution,
                })
            }
        }
    }
}
