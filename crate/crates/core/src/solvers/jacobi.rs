use super::{check_problem_shape, ensure_finite, relax, residual_norm, HeatProblem};
use crate::error::{Error, Result};
use crate::grid::{max_abs_diff, Grid, Precision};
use crate::scalar::Scalar;

/// Fixed-count Jacobi relaxation settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JacobiConfig {
    /// Number of sweeps (`nt`).
    pub iterations: usize,
    /// Optional early stop on the max change between sweeps. Off by default:
    /// the reference loop always runs `iterations` sweeps.
    pub tolerance: Option<f64>,
    pub precision: Precision,
}

impl Default for JacobiConfig {
    fn default() -> Self {
        JacobiConfig {
            iterations: 1000,
            tolerance: None,
            precision: Precision::Fp32,
        }
    }
}

impl JacobiConfig {
    pub fn fixed(iterations: usize, precision: Precision) -> Self {
        JacobiConfig {
            iterations,
            tolerance: None,
            precision,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.tolerance {
            Some(t) if !(t > 0.0) => Err(Error::Config(format!(
                "tolerance must be positive, got {t}"
            ))),
            _ => Ok(()),
        }
    }
}

/// Result of [`jacobi_solve`].
#[derive(Clone, Debug)]
pub struct JacobiOutcome<T> {
    pub solution: Grid<T>,
    pub iterations_run: usize,
    /// Max change over the last sweep; 0 when no sweep ran.
    pub last_diff: T,
}

/// One sweep `u' = mask * (f/4 + conv(u, stencil5)) + boundary`.
///
/// With `f = 0` and zero boundary values this is exactly conv-then-mask.
pub fn jacobi_step<T: Scalar>(u: &Grid<T>, p: &HeatProblem<T>) -> Result<Grid<T>> {
    check_problem_shape(u, p)?;
    let next = relax(u, p.rhs(), p.bc().mask(), p.bc().values());
    ensure_finite(&next, 1)?;
    Ok(next)
}

/// Runs `cfg.iterations` sweeps from `p.initial()`, stopping early only if a
/// tolerance is configured and the max change drops below it.
pub fn jacobi_solve<T: Scalar>(p: &HeatProblem<T>, cfg: &JacobiConfig) -> Result<JacobiOutcome<T>> {
    cfg.validate()?;
    let p = p.with_precision(cfg.precision);
    let (rhs, mask, boundary) = (p.rhs(), p.bc().mask(), p.bc().values());
    let mut u = p.initial().clone();
    let mut last_diff = T::zero();
    let mut iterations_run = 0;
    while iterations_run < cfg.iterations {
        let next = relax(&u, rhs, mask, boundary);
        iterations_run += 1;
        ensure_finite(&next, iterations_run)?;
        last_diff = max_abs_diff(&next, &u)?;
        u = next;
        if let Some(tol) = cfg.tolerance {
            if last_diff.widen() < tol {
                break;
            }
        }
    }
    Ok(JacobiOutcome {
        solution: u,
        iterations_run,
        last_diff,
    })
}

/// Sweeps from `p.initial()` until the residual max-norm is below `tol`.
/// Returns the iterate and the number of sweeps, or `Ok(None)` if
/// `max_iterations` sweeps were not enough.
pub fn jacobi_to_residual<T: Scalar>(
    p: &HeatProblem<T>,
    tol: f64,
    max_iterations: usize,
) -> Result<Option<(Grid<T>, usize)>> {
    let (rhs, mask, boundary) = (p.rhs(), p.bc().mask(), p.bc().values());
    let mut u = p.initial().clone();
    for n in 0..=max_iterations {
        if residual_norm(&u, p)?.widen() < tol {
            return Ok(Some((u, n)));
        }
        if n == max_iterations {
            break;
        }
        u = relax(&u, rhs, mask, boundary);
        ensure_finite(&u, n + 1)?;
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Mask;
    use crate::ops::{self, Kernel3x3};
    use crate::oracle;
    use crate::solvers::BoundaryCondition;

    const P32: Precision = Precision::Fp32;

    #[test]
    fn zero_iterations_returns_initial() {
        let p = HeatProblem::<f32>::hot_left(6, 6, P32).unwrap();
        let out = jacobi_solve(&p, &JacobiConfig::fixed(0, P32)).unwrap();
        assert_eq!(&out.solution, p.initial());
        assert_eq!(out.iterations_run, 0);
        assert_eq!(out.last_diff, 0.0);
    }

    #[test]
    fn one_iteration_is_one_step() {
        let p = HeatProblem::<f32>::hot_left(7, 9, P32).unwrap();
        let out = jacobi_solve(&p, &JacobiConfig::fixed(1, P32)).unwrap();
        assert_eq!(out.solution, jacobi_step(p.initial(), &p).unwrap());
    }

    #[test]
    fn zero_problem_stays_zero() {
        let bc = BoundaryCondition::<f32>::zero(5, 5, P32).unwrap();
        let p = HeatProblem::from_boundary(bc, None).unwrap();
        let z = Grid::zeros(5, 5, P32).unwrap();
        assert_eq!(jacobi_step(&z, &p).unwrap(), z);
    }

    #[test]
    fn impulse_matches_conv_then_mask() {
        let bc = BoundaryCondition::<f32>::zero(5, 5, P32).unwrap();
        let mut u = Grid::zeros(5, 5, P32).unwrap();
        u.set(2, 2, 1.0);
        let p = HeatProblem::new(u.clone(), Grid::zeros(5, 5, P32).unwrap(), bc).unwrap();
        let expected = ops::mask_mul(
            &ops::conv3x3(&u, &Kernel3x3::stencil5()),
            &Mask::dirichlet(5, 5).unwrap(),
        )
        .unwrap();
        assert_eq!(jacobi_step(&u, &p).unwrap(), expected);
    }

    #[test]
    fn laplace_steady_state_is_fixed_point() {
        // Linear in j is discrete-harmonic; hold it on the ring.
        let ring = Grid::<f32>::from_fn(6, 8, P32, |_, j| j as f32 * 0.5).unwrap();
        let bc = BoundaryCondition::from_ring(&ring).unwrap();
        let p = HeatProblem::from_boundary(bc, None).unwrap();
        let next = jacobi_step(&ring, &p).unwrap();
        assert!(max_abs_diff(&next, &ring).unwrap() <= 1e-6);
    }

    #[test]
    fn tolerance_stops_early() {
        let p = HeatProblem::<f32>::hot_left(9, 9, P32).unwrap();
        let cfg = JacobiConfig {
            iterations: 100_000,
            tolerance: Some(1e-4),
            precision: P32,
        };
        let out = jacobi_solve(&p, &cfg).unwrap();
        assert!(out.iterations_run < 100_000);
        assert!(out.last_diff < 1e-4);
        assert!(jacobi_solve(
            &p,
            &JacobiConfig {
                tolerance: Some(0.0),
                ..cfg
            }
        )
        .is_err());
    }

    #[test]
    fn non_finite_reports_iteration() {
        let bc = BoundaryCondition::<f32>::zero(5, 5, P32).unwrap();
        let mut f = Grid::zeros(5, 5, P32).unwrap();
        f.set(1, 1, f32::INFINITY);
        let p = HeatProblem::from_boundary(bc, Some(f)).unwrap();
        let err = jacobi_solve(&p, &JacobiConfig::fixed(10, P32)).unwrap_err();
        assert!(
            matches!(err, Error::NonFinite { iteration: 1, .. }),
            "{err}"
        );
    }

    #[test]
    fn converges_to_direct_solve_17() {
        let p = HeatProblem::<f32>::hot_left(17, 17, P32).unwrap();
        let out = jacobi_solve(&p, &JacobiConfig::fixed(5000, P32)).unwrap();
        let exact = oracle::direct_solve(&p.cast::<f64>()).unwrap();
        let err = max_abs_diff(&out.solution.cast::<f64>(), &exact).unwrap();
        assert!(err <= 1e-3, "err {err}");
    }

    #[test]
    fn to_residual_counts_sweeps() {
        let (p, _) = HeatProblem::<f64>::manufactured_sine(17, 17, P32).unwrap();
        let (u, n) = jacobi_to_residual(&p, 1e-6, 10_000).unwrap().unwrap();
        assert!(crate::solvers::residual_norm(&u, &p).unwrap() < 1e-6);
        let (_, m) = jacobi_to_residual(&p.with_initial(u).unwrap(), 1e-6, 10)
            .unwrap()
            .unwrap();
        assert_eq!(m, 0);
        assert!(n > 10);
        assert!(jacobi_to_residual(&p, 1e-6, 10).unwrap().is_none());
    }

    #[test]
    fn fp16_storage_tracks_fp32_for_100_sweeps() {
        let p32 = HeatProblem::<f32>::hot_left(17, 17, P32).unwrap();
        let p16 = p32.with_precision(Precision::Fp16Storage);
        let (mut a, mut b) = (p32.initial().clone(), p16.initial().clone());
        for k in 1..=100 {
            a = jacobi_step(&a, &p32).unwrap();
            b = jacobi_step(&b, &p16).unwrap();
            let d = max_abs_diff(&a, &b).unwrap();
            assert!(d <= 5e-3, "iteration {k}: {d}");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn ring_problem(
            rows: usize,
            cols: usize,
            ring: &[f64],
            interior: &[f64],
        ) -> HeatProblem<f64> {
            let mut k = 0;
            let g = Grid::<f64>::from_fn(rows, cols, P32, |i, j| {
                k += 1;
                if i == 0 || j == 0 || i + 1 == rows || j + 1 == cols {
                    ring[k % ring.len()]
                } else {
                    0.0
                }
            })
            .unwrap();
            let bc = BoundaryCondition::from_ring(&g).unwrap();
            let mut k = 0;
            let init = Grid::from_fn(rows, cols, P32, |i, j| {
                k += 1;
                if bc.mask().get(i, j) {
                    interior[k % interior.len()]
                } else {
                    g.get(i, j)
                }
            })
            .unwrap();
            HeatProblem::new(init, Grid::zeros(rows, cols, P32).unwrap(), bc).unwrap()
        }

        fn case() -> impl Strategy<Value = (usize, usize, Vec<f64>, Vec<f64>)> {
            (
                3usize..12,
                3usize..12,
                prop::collection::vec(-10.0f64..10.0, 1..40),
                prop::collection::vec(-10.0f64..10.0, 1..40),
            )
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn boundary_cells_never_change((rows, cols, ring, interior) in case()) {
                let p = ring_problem(rows, cols, &ring, &interior).cast::<f32>();
                let mut u = p.initial().clone();
                for _ in 0..30 {
                    u = jacobi_step(&u, &p).unwrap();
                    for i in 0..rows {
                        for j in 0..cols {
                            if !p.bc().mask().get(i, j) {
                                prop_assert_eq!(u.get(i, j).to_bits(), p.bc().values().get(i, j).to_bits());
                            }
                        }
                    }
                }
            }

            #[test]
            fn diff_is_monotone_after_ten_sweeps((rows, cols, ring, interior) in case()) {
                let p = ring_problem(rows, cols, &ring, &interior);
                let mut u = p.initial().clone();
                let mut prev = f64::INFINITY;
                for k in 1..=80 {
                    let next = jacobi_step(&u, &p).unwrap();
                    let d = max_abs_diff(&next, &u).unwrap();
                    if k > 10 {
                        prop_assert!(d <= prev + 1e-9, "sweep {}: {} after {}", k, d, prev);
                    }
                    prev = d;
                    u = next;
                }
            }

            #[test]
            fn maximum_principle((rows, cols, ring, interior) in case()) {
                let p = ring_problem(rows, cols, &ring, &interior);
                let lo = p.initial().data().iter().copied().fold(f64::INFINITY, f64::min);
                let hi = p.initial().data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut u = p.initial().clone();
                for _ in 0..50 {
                    u = jacobi_step(&u, &p).unwrap();
                    for &v in u.data() {
                        prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12, "{} outside [{}, {}]", v, lo, hi);
                    }
                }
            }
        }
    }
}
