//! Golden operator fixtures plus built-in oracle and invariant checks.

use crate::bench::{integrate_energy, PowerTrace};
use crate::error::{Error, Result};
use crate::fp16;
use crate::grid::{max_abs_diff, Grid, Mask, Precision};
use crate::ops::{self, Kernel3x3, MatmulMode};
use crate::oracle::direct_solve;
use crate::scalar::Scalar;
use crate::solvers::{jacobi_solve, multigrid_solve, HeatProblem, JacobiConfig, VCycleConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Environment variable naming the fixtures directory.
pub const FIXTURES_ENV: &str = "SGB_FIXTURES";

/// `explicit`, else `$SGB_FIXTURES`, else `./fixtures`.
pub fn resolve_fixtures_dir(explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(FIXTURES_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("fixtures"))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<[[f64; 3]; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_cols: Option<usize>,
}

/// One golden case, stored as `<dir>/<op>/<case>.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixture {
    /// Free-form record of the generating framework and seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<serde_json::Value>,
    pub op: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    pub inputs: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub params: FixtureParams,
    pub expected: Grid<f64>,
    pub tolerance: f64,
}

impl Fixture {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Fixture {
            name: path.display().to_string(),
            message: e.to_string(),
        })
    }

    fn fail(&self, message: impl Into<String>) -> Error {
        Error::Fixture {
            name: format!("{}/{}", self.op, self.case.as_deref().unwrap_or("?")),
            message: message.into(),
        }
    }

    fn grid<T: Scalar>(&self, name: &str, precision: Precision) -> Result<Grid<T>> {
        let v = self
            .inputs
            .get(name)
            .ok_or_else(|| self.fail(format!("missing input {name:?}")))?;
        let g: Grid<f64> = serde_json::from_value(v.clone())
            .map_err(|e| self.fail(format!("input {name}: {e}")))?;
        Ok(g.cast::<T>().with_precision(precision))
    }

    fn mask(&self) -> Result<Mask> {
        let v = self
            .inputs
            .get("mask")
            .ok_or_else(|| self.fail("missing input \"mask\""))?;
        serde_json::from_value(v.clone()).map_err(|e| self.fail(format!("input mask: {e}")))
    }

    /// Runs the operator on the inputs stored at `precision`.
    pub fn evaluate<T: Scalar>(&self, precision: Precision) -> Result<Grid<T>> {
        match self.op.as_str() {
            "conv3x3" => {
                let k = self
                    .params
                    .kernel
                    .ok_or_else(|| self.fail("missing kernel"))?;
                let k = Kernel3x3::from_rows(k.map(|r| r.map(T::cast)));
                Ok(ops::conv3x3(&self.grid::<T>("g", precision)?, &k))
            }
            "mask_mul" => ops::mask_mul(&self.grid::<T>("g", precision)?, &self.mask()?),
            "avgpool2" => ops::avgpool2(&self.grid::<T>("g", precision)?),
            "bilinear_upsample" => {
                let (Some(r), Some(c)) = (self.params.out_rows, self.params.out_cols) else {
                    return Err(self.fail("missing out_rows/out_cols"));
                };
                ops::bilinear_upsample(&self.grid::<T>("g", precision)?, r, c)
            }
            "matmul" => ops::matmul(
                &self.grid::<T>("a", precision)?,
                &self.grid::<T>("b", precision)?,
            ),
            "add" => ops::add(
                &self.grid::<T>("a", precision)?,
                &self.grid::<T>("b", precision)?,
            ),
            "sub" => ops::sub(
                &self.grid::<T>("a", precision)?,
                &self.grid::<T>("b", precision)?,
            ),
            other => Err(self.fail(format!("unknown op {other:?}"))),
        }
    }

    /// fp32 result against `expected` within `tolerance`.
    pub fn check_fp32(&self) -> std::result::Result<String, String> {
        if let Some((r, c)) = self.expected.first_non_finite() {
            return Err(format!("expected value at ({r},{c}) is not finite"));
        }
        let got = self
            .evaluate::<f32>(Precision::Fp32)
            .map_err(|e| e.to_string())?;
        let want = self.expected.cast::<f32>();
        if got.shape() != want.shape() {
            return Err(format!(
                "shape {:?}, expected {:?}",
                got.shape(),
                want.shape()
            ));
        }
        let (mut worst, mut at) = (0.0f64, (0, 0));
        for i in 0..got.rows() {
            for j in 0..got.cols() {
                let d = (got.get(i, j) as f64 - want.get(i, j) as f64).abs();
                if !(d <= worst) {
                    worst = d;
                    at = (i, j);
                }
            }
        }
        if worst <= self.tolerance {
            Ok(format!("max |diff| {worst:.2e}"))
        } else {
            Err(format!(
                "|diff| {worst:.3e} > {:.1e} at {at:?}: got {}, expected {}",
                self.tolerance,
                got.get(at.0, at.1),
                want.get(at.0, at.1)
            ))
        }
    }

    /// fp16-storage result against the fp32 result on the same stored
    /// inputs, rounded to binary16, within 1 ULP.
    pub fn check_fp16(&self) -> std::result::Result<String, String> {
        let half = self
            .evaluate::<f32>(Precision::Fp16Storage)
            .map_err(|e| e.to_string())?;
        let inputs_as_stored = Fixture {
            inputs: self
                .inputs
                .iter()
                .map(|(k, v)| {
                    let rounded = match serde_json::from_value::<Grid<f64>>(v.clone()) {
                        Ok(g) => serde_json::to_value(
                            g.with_precision(Precision::Fp16Storage)
                                .with_precision(Precision::Fp32),
                        )
                        .unwrap_or(v.clone()),
                        Err(_) => v.clone(),
                    };
                    (k.clone(), rounded)
                })
                .collect(),
            ..self.clone()
        };
        let full = inputs_as_stored
            .evaluate::<f32>(Precision::Fp32)
            .map_err(|e| e.to_string())?;
        let mut worst = 0;
        for (&h, &f) in half.data().iter().zip(full.data()) {
            worst = worst.max(fp16::ulp_distance(h as f64, fp16::round_fp16(f as f64)));
        }
        if worst <= 1 {
            Ok(format!("max {worst} ulp"))
        } else {
            Err(format!("{worst} ulp from the rounded fp32 result"))
        }
    }
}

/// Every `*.json` under `dir/<op>/`, sorted by path.
pub fn fixture_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::Fixture {
            name: dir.display().to_string(),
            message: "fixtures directory not found".into(),
        });
    }
    let mut out = Vec::new();
    for op in std::fs::read_dir(dir)? {
        let op = op?.path();
        if !op.is_dir() {
            continue;
        }
        for f in std::fs::read_dir(&op)? {
            let f = f?.path();
            if f.extension().is_some_and(|e| e == "json") {
                out.push(f);
            }
        }
    }
    out.sort();
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    /// Operator or check family; `--filter` matches this.
    pub group: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn summary(&self) -> String {
        let failed = self.failures().count();
        format!(
            "{} checks, {} passed, {} failed",
            self.checks.len(),
            self.checks.len() - failed,
            failed
        )
    }

    fn record(
        &mut self,
        group: &str,
        name: String,
        f: impl FnOnce() -> std::result::Result<String, String>,
    ) {
        let start = Instant::now();
        let (passed, detail) = match f() {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        self.checks.push(CheckOutcome {
            group: group.to_owned(),
            name,
            passed,
            detail,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
}

type Check = fn() -> std::result::Result<String, String>;

/// Built-in checks as `(group, name, check)`.
pub fn builtin_checks() -> Vec<(&'static str, &'static str, Check)> {
    vec![
        (
            "fp16",
            "fp16/exhaustive-round-trip",
            check_fp16_round_trip as Check,
        ),
        ("fp16", "fp16/rounding-examples", check_fp16_examples),
        ("jacobi", "jacobi/direct-oracle", check_jacobi_oracle),
        (
            "multigrid",
            "multigrid/direct-oracle",
            check_multigrid_oracle,
        ),
        ("matmul", "matmul/performance-mode", check_matmul_modes),
        ("energy", "energy/trapezoid", check_energy),
        (
            "invariants",
            "invariants/conv3x3-linearity",
            check_conv_linearity,
        ),
        ("invariants", "invariants/avgpool2-mean", check_avgpool_mean),
        (
            "invariants",
            "invariants/bilinear-identity",
            check_bilinear_identity,
        ),
    ]
}

/// Runs fixtures from `dir` and the built-in checks whose group equals
/// `filter`, or everything when `filter` is `None`.
pub fn run_verify(dir: &Path, filter: Option<&str>) -> Result<VerifyReport> {
    let keep = |group: &str| filter.is_none_or(|f| f == group);
    let mut report = VerifyReport::default();
    for path in fixture_paths(dir)? {
        let rel = path.strip_prefix(dir).unwrap_or(&path).with_extension("");
        let name = rel.to_string_lossy().replace('\\', "/");
        let group = rel
            .parent()
            .map(|p| p.to_string_lossy().into_owned())
            .unwrap_or_default();
        if !keep(&group) {
            continue;
        }
        match Fixture::load(&path) {
            Ok(fx) => {
                report.record(&group, name.clone(), || fx.check_fp32());
                report.record(&group, format!("{name}@fp16"), || fx.check_fp16());
            }
            Err(e) => report.record(&group, name, || Err(e.to_string())),
        }
    }
    for (group, name, check) in builtin_checks() {
        if keep(group) {
            report.record(group, name.to_owned(), check);
        }
    }
    Ok(report)
}

fn check_fp16_round_trip() -> std::result::Result<String, String> {
    for h in 0..=u16::MAX {
        let v = fp16::decode(h);
        let back = fp16::encode(v);
        let want = if v.is_nan() { fp16::CANONICAL_NAN } else { h };
        if back != want {
            return Err(format!("pattern {h:#06x} re-encodes to {back:#06x}"));
        }
    }
    Ok("65536 patterns".into())
}

fn check_fp16_examples() -> std::result::Result<String, String> {
    let cases = [
        (1.0, 0x3c00u16),
        (65504.0, 0x7bff),
        (65520.0, 0x7c00),
        (1.0 + 2f64.powi(-11), 0x3c00),
        (1.0 + 3.0 * 2f64.powi(-11), 0x3c02),
        (2f64.powi(-24), 0x0001),
        (2f64.powi(-25), 0x0000),
        (-0.0, 0x8000),
        (f64::NAN, fp16::CANONICAL_NAN),
    ];
    for (x, want) in cases {
        let got = fp16::encode(x);
        if got != want {
            return Err(format!("encode({x}) = {got:#06x}, expected {want:#06x}"));
        }
    }
    Ok(format!("{} cases", cases.len()))
}

fn check_jacobi_oracle() -> std::result::Result<String, String> {
    let p = HeatProblem::<f64>::hot_left(17, 17, Precision::Fp32).map_err(|e| e.to_string())?;
    let exact = direct_solve(&p).map_err(|e| e.to_string())?;
    let cfg = JacobiConfig {
        iterations: 5000,
        tolerance: Some(1e-12),
        precision: Precision::Fp32,
    };
    let out = jacobi_solve(&p.cast::<f32>(), &cfg).map_err(|e| e.to_string())?;
    let err = max_abs_diff(&out.solution.cast::<f64>(), &exact).map_err(|e| e.to_string())?;
    if err < 1e-5 {
        Ok(format!(
            "17x17 max error {err:.2e} after {} sweeps",
            out.iterations_run
        ))
    } else {
        Err(format!("17x17 max error {err:.3e} >= 1e-5"))
    }
}

fn check_multigrid_oracle() -> std::result::Result<String, String> {
    let p = HeatProblem::<f64>::hot_left(32, 32, Precision::Fp32).map_err(|e| e.to_string())?;
    let exact = direct_solve(&p).map_err(|e| e.to_string())?;
    let cfg = VCycleConfig {
        smoother_weight: 0.8,
        ..VCycleConfig::for_shape(32, 32)
    };
    let out = multigrid_solve(&p, &cfg, 60, 1e-9).map_err(|e| e.to_string())?;
    let err = max_abs_diff(&out.solution, &exact).map_err(|e| e.to_string())?;
    if err < 1e-5 {
        Ok(format!(
            "32x32 max error {err:.2e} after {} cycles",
            out.cycles
        ))
    } else {
        Err(format!(
            "32x32 max error {err:.3e} >= 1e-5 after {} cycles",
            out.cycles
        ))
    }
}

fn random_grid(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Grid<f32> {
    Grid::from_fn(rows, cols, Precision::Fp32, |_, _| {
        rng.random_range(-1.0f32..1.0)
    })
    .expect("non-empty shape")
}

fn check_matmul_modes() -> std::result::Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let a = random_grid(&mut rng, 64, 64);
    let b = random_grid(&mut rng, 64, 64);
    let naive = ops::matmul_with(&a, &b, MatmulMode::Verification).map_err(|e| e.to_string())?;
    let fast = ops::matmul_with(&a, &b, MatmulMode::Performance).map_err(|e| e.to_string())?;
    let diff = max_abs_diff(&naive, &fast).map_err(|e| e.to_string())? as f64;
    let rel = diff / (naive.max_abs() as f64).max(f64::MIN_POSITIVE);
    if rel <= 1e-4 {
        Ok(format!("64x64 relative difference {rel:.2e}"))
    } else {
        Err(format!("64x64 relative difference {rel:.3e} > 1e-4"))
    }
}

fn check_energy() -> std::result::Result<String, String> {
    let constant = PowerTrace::sampled(0.0, 1000.0, 10.0, |_| 2000.0).map_err(|e| e.to_string())?;
    let (j, w) = integrate_energy(&constant, 0.0, 1000.0).map_err(|e| e.to_string())?;
    if (j - 2.0).abs() > 1e-9 || (w - 2.0).abs() > 1e-9 {
        return Err(format!("constant 2 W over 1 s gave {j} J, {w} W"));
    }
    let ramp = PowerTrace::sampled(0.0, 1000.0, 1.0, |t| t).map_err(|e| e.to_string())?;
    let (j, _) = integrate_energy(&ramp, 0.0, 1000.0).map_err(|e| e.to_string())?;
    if (j - 0.5).abs() > 1e-9 {
        return Err(format!("ramp 0 to 1 W over 1 s gave {j} J"));
    }
    Ok("constant and ramp traces".into())
}

fn check_conv_linearity() -> std::result::Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (g1, g2) = (random_grid(&mut rng, 16, 16), random_grid(&mut rng, 16, 16));
    let (alpha, beta) = (0.75f32, -1.5f32);
    let k = Kernel3x3::laplacian();
    let combo = Grid::from_fn(16, 16, Precision::Fp32, |i, j| {
        alpha * g1.get(i, j) + beta * g2.get(i, j)
    })
    .map_err(|e| e.to_string())?;
    let lhs = ops::conv3x3(&combo, &k);
    let (c1, c2) = (ops::conv3x3(&g1, &k), ops::conv3x3(&g2, &k));
    let rhs = Grid::from_fn(16, 16, Precision::Fp32, |i, j| {
        alpha * c1.get(i, j) + beta * c2.get(i, j)
    })
    .map_err(|e| e.to_string())?;
    let d = max_abs_diff(&lhs, &rhs).map_err(|e| e.to_string())?;
    if d <= 1e-5 {
        Ok(format!("max |diff| {d:.2e}"))
    } else {
        Err(format!("max |diff| {d:.3e} > 1e-5"))
    }
}

fn check_avgpool_mean() -> std::result::Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let g = random_grid(&mut rng, 12, 20);
    let p = ops::avgpool2(&g).map_err(|e| e.to_string())?;
    let mean =
        |g: &Grid<f32>| g.data().iter().map(|&v| v as f64).sum::<f64>() / g.data().len() as f64;
    let d = (mean(&g) - mean(&p)).abs();
    if d <= 1e-6 {
        Ok(format!("|mean diff| {d:.2e}"))
    } else {
        Err(format!("|mean diff| {d:.3e} > 1e-6"))
    }
}

fn check_bilinear_identity() -> std::result::Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let g = random_grid(&mut rng, 9, 13);
    let same = ops::bilinear_upsample(&g, 9, 13).map_err(|e| e.to_string())?;
    if same.bit_eq(&g) {
        Ok("9x13 bit-identical".into())
    } else {
        Err("same-shape upsample changed values".into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn committed() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
    }

    #[test]
    fn committed_fixtures_pass() {
        let r = run_verify(&committed(), None).unwrap();
        let failures: Vec<_> = r
            .failures()
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect();
        assert!(failures.is_empty(), "{failures:#?}");
        for op in [
            "conv3x3",
            "mask_mul",
            "avgpool2",
            "bilinear_upsample",
            "matmul",
        ] {
            let n = r
                .checks
                .iter()
                .filter(|c| c.group == op && !c.name.ends_with("@fp16"))
                .count();
            assert!(n >= 5, "{op}: {n} fixtures");
        }
    }

    #[test]
    fn filter_selects_one_group() {
        let r = run_verify(&committed(), Some("conv3x3")).unwrap();
        assert!(!r.checks.is_empty());
        assert!(r.checks.iter().all(|c| c.group == "conv3x3"));
    }

    #[test]
    fn missing_directory_is_an_error() {
        let err = run_verify(Path::new("/nonexistent/fixtures"), None).unwrap_err();
        assert!(matches!(err, Error::Fixture { .. }));
    }

    #[test]
    fn corrupted_value_is_a_named_failure() {
        let dir = tempfile::tempdir().unwrap();
        let src = committed().join("avgpool2/block_2x2.json");
        std::fs::create_dir(dir.path().join("avgpool2")).unwrap();
        let mut fx = Fixture::load(&src).unwrap();
        assert_eq!(fx.expected.data(), &[2.5]);
        fx.expected = Grid::from_vec(1, 1, Precision::Fp32, vec![2.6]).unwrap();
        std::fs::write(
            dir.path().join("avgpool2/block_2x2.json"),
            serde_json::to_vec(&fx).unwrap(),
        )
        .unwrap();
        std::fs::write(dir.path().join("avgpool2/broken.json"), "{").unwrap();
        let r = run_verify(dir.path(), Some("avgpool2")).unwrap();
        assert!(!r.passed());
        let names: Vec<_> = r.failures().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["avgpool2/block_2x2", "avgpool2/broken"]);
    }

    #[test]
    fn explicit_dir_wins() {
        assert_eq!(
            resolve_fixtures_dir(Some(Path::new("x"))),
            PathBuf::from("x")
        );
    }

    #[test]
    fn builtins_pass() {
        for (_, name, check) in builtin_checks() {
            assert!(check().is_ok(), "{name}: {:?}", check());
        }
    }
}
