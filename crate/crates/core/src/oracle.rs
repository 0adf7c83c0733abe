//! Direct linear solves of the 5-point system, used as reference answers for
//! the iterative solvers.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::solvers::HeatProblem;

/// Unknowns are the mask-1 cells in row-major order.
struct System {
    index: Vec<Option<usize>>,
    cells: Vec<usize>,
}

impl System {
    fn new(p: &HeatProblem<f64>) -> Self {
        let mut index = vec![None; p.bc().mask().data().len()];
        let mut cells = Vec::new();
        for (idx, &free) in p.bc().mask().data().iter().enumerate() {
            if free {
                index[idx] = Some(cells.len());
                cells.push(idx);
            }
        }
        System { index, cells }
    }

    /// Calls `coef(col, value)` for each matrix entry of `row` and returns its right-hand side.
    fn row(&self, p: &HeatProblem<f64>, row: usize, mut coef: impl FnMut(usize, f64)) -> f64 {
        let (rows, cols) = p.shape();
        let idx = self.cells[row];
        let (i, j) = (idx / cols, idx % cols);
        let mut rhs = p.rhs().data()[idx];
        coef(row, 4.0);
        let neighbours = [
            (i > 0).then(|| idx - cols),
            (i + 1 < rows).then(|| idx + cols),
            (j > 0).then(|| idx - 1),
            (j + 1 < cols).then(|| idx + 1),
        ];
        for n in neighbours.into_iter().flatten() {
            match self.index[n] {
                Some(col) => coef(col, -1.0),
                None => rhs += p.bc().values().data()[n],
            }
        }
        rhs
    }

    fn assemble(&self, p: &HeatProblem<f64>, x: &[f64]) -> Result<Grid<f64>> {
        let mut data = p.bc().values().data().to_vec();
        for (&idx, &v) in self.cells.iter().zip(x) {
            data[idx] = v;
        }
        let (rows, cols) = p.shape();
        Grid::from_vec(rows, cols, p.initial().precision(), data)
    }
}

/// Solves `A u = f` on the masked cells exactly (banded Gaussian elimination).
///
/// The operator is diagonally dominant, so no pivoting is needed. Cost is
/// `O(n w^2)` with bandwidth `w` about one grid row.
pub fn direct_solve(p: &HeatProblem<f64>) -> Result<Grid<f64>> {
    let sys = System::new(p);
    let n = sys.cells.len();
    if n == 0 {
        return sys.assemble(p, &[]);
    }
    let mut w = 0;
    for r in 0..n {
        sys.row(p, r, |c, _| w = w.max(r.abs_diff(c)));
    }
    // Row r stores columns r-w ..= r+w at offsets 0 ..= 2w.
    let width = 2 * w + 1;
    let mut band = vec![0.0; n * width];
    let mut b = vec![0.0; n];
    for r in 0..n {
        b[r] = sys.row(p, r, |c, v| band[r * width + c + w - r] += v);
    }
    for k in 0..n {
        let pivot = band[k * width + w];
        if pivot.abs() < 1e-300 {
            return Err(Error::Config("singular system in direct solve".into()));
        }
        for r in k + 1..(k + w + 1).min(n) {
            let factor = band[r * width + k + w - r] / pivot;
            if factor == 0.0 {
                continue;
            }
            for c in k..(k + w + 1).min(n) {
                band[r * width + c + w - r] -= factor * band[k * width + c + w - k];
            }
            b[r] -= factor * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = b[k];
        for c in k + 1..(k + w + 1).min(n) {
            s -= band[k * width + c + w - k] * x[c];
        }
        x[k] = s / band[k * width + w];
    }
    sys.assemble(p, &x)
}

/// Dense Gaussian elimination with partial pivoting. Cubic in the number of
/// unknowns; meant for small cross-checks.
pub fn dense_solve(p: &HeatProblem<f64>) -> Result<Grid<f64>> {
    let sys = System::new(p);
    let n = sys.cells.len();
    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n];
    for r in 0..n {
        b[r] = sys.row(p, r, |c, v| a[r * n + c] += v);
    }
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&x, &y| a[x * n + k].abs().total_cmp(&a[y * n + k].abs()))
            .unwrap();
        if a[piv * n + k].abs() < 1e-300 {
            return Err(Error::Config("singular system in dense solve".into()));
        }
        if piv != k {
            for c in 0..n {
                a.swap(k * n + c, piv * n + c);
            }
            b.swap(k, piv);
        }
        for r in k + 1..n {
            let factor = a[r * n + k] / a[k * n + k];
            for c in k..n {
                a[r * n + c] -= factor * a[k * n + c];
            }
            b[r] -= factor * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|c| a[k * n + c] * x[c]).sum();
        x[k] = (b[k] - s) / a[k * n + k];
    }
    sys.assemble(p, &x)
}
