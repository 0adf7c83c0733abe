//! Warmup/repetition timing with concurrent power sampling and a capacity gate.

mod power;

pub use power::{
    integrate_energy, CommandSampler, NullSampler, PowerSample, PowerSampler, PowerTrace,
    SamplerSpec, TraceReplaySampler,
};

use crate::error::{Error, Result};
use crate::grid::Precision;
use crate::ops::{self, MatmulMode};
use crate::perf::{self, FlopModel};
use crate::solvers::{
    gemm_operands, jacobi_solve, HeatProblem, JacobiConfig, VCycleConfig, VCycleSolver,
};
use serde::{Deserialize, Serialize};
use std::hint::black_box;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

/// Repetition protocol.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub warmup: usize,
    pub reps: usize,
    pub sample_period_ms: u64,
    /// Largest single tensor allowed, in bytes at the workload's precision.
    pub capacity_bytes: Option<u64>,
    pub precision: Precision,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            warmup: 2,
            reps: 10,
            sample_period_ms: 100,
            capacity_bytes: None,
            precision: Precision::Fp32,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Config("reps must be at least 1".into()));
        }
        if self.sample_period_ms == 0 {
            return Err(Error::Config("sample_period_ms must be at least 1".into()));
        }
        Ok(())
    }
}

/// `rows * cols * bytes_per_element`.
pub fn tensor_bytes(rows: u64, cols: u64, precision: Precision) -> u64 {
    rows * cols * precision.bytes_per_element() as u64
}

/// What to run on a square `size x size` problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Workload {
    /// `size^3` matrix product of seeded uniform operands (performance mode).
    Gemm,
    /// Fixed-count Jacobi sweeps on the hot-left problem.
    Jacobi { iters: usize },
    /// Fixed number of V-cycles on the hot-left problem.
    Multigrid {
        /// Defaults to coarsening until the smaller side is at most 16.
        levels: Option<usize>,
        pre_smooth: usize,
        post_smooth: usize,
        coarse_iters: usize,
        cycles: usize,
    },
}

pub const GEMM_SIZES: &[usize] = &[256, 512, 1024, 2048, 4096, 8192, 12288, 14336, 16384];
pub const JACOBI_SIZES: &[usize] = &[
    256, 512, 1024, 2048, 4096, 6144, 8192, 10240, 12288, 16384, 32768,
];
pub const MULTIGRID_SIZES: &[usize] = &[512, 1024, 2048, 4096, 8192, 10240, 12288, 16384, 32768];

impl Workload {
    pub fn multigrid_default() -> Self {
        Workload::Multigrid {
            levels: None,
            pre_smooth: 1,
            post_smooth: 1,
            coarse_iters: 50,
            cycles: 1,
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Workload::Gemm => "gemm",
            Workload::Jacobi { .. } => "jacobi",
            Workload::Multigrid { .. } => "multigrid",
        }
    }

    /// Problem sizes swept when none is given.
    pub fn default_sizes(&self) -> &'static [usize] {
        match self {
            Workload::Gemm => GEMM_SIZES,
            Workload::Jacobi { .. } => JACOBI_SIZES,
            Workload::Multigrid { .. } => MULTIGRID_SIZES,
        }
    }

    /// Named device tensors of one run, with their sizes in bytes.
    pub fn tensors(&self, size: usize, precision: Precision) -> Vec<(&'static str, u64)> {
        let n = size as u64;
        let full = tensor_bytes(n, n, precision);
        let names: &[&'static str] = match self {
            Workload::Gemm => &["a", "b", "c"],
            Workload::Jacobi { .. } => &["u", "u_next", "rhs", "mask", "boundary"],
            Workload::Multigrid { .. } => {
                &["u", "rhs", "residual", "mask", "boundary", "correction"]
            }
        };
        names.iter().map(|&name| (name, full)).collect()
    }

    /// Approximate host memory needed, in bytes. Grids are held in 32-bit
    /// floats whatever the storage precision.
    pub fn host_footprint_bytes(&self, size: usize) -> u64 {
        let per = tensor_bytes(size as u64, size as u64, Precision::Fp32);
        let count = self.tensors(size, Precision::Fp32).len() as u64;
        match self {
            // Coarse levels add about a third.
            Workload::Multigrid { .. } => per * count * 4 / 3,
            _ => per * count,
        }
    }

    pub fn vcycle_config(&self, size: usize, precision: Precision) -> Option<VCycleConfig> {
        let Workload::Multigrid {
            levels,
            pre_smooth,
            post_smooth,
            coarse_iters,
            ..
        } = *self
        else {
            return None;
        };
        let base = VCycleConfig::for_shape(size, size);
        Some(VCycleConfig {
            num_levels: levels.unwrap_or(base.num_levels),
            pre_smooth,
            post_smooth,
            coarse_iters,
            precision,
            ..base
        })
    }

    /// Work of one timed repetition.
    pub fn flops(&self, size: usize, model: &FlopModel) -> u64 {
        let n = size as u64;
        match *self {
            Workload::Gemm => perf::gemm_flops(n, n, n),
            Workload::Jacobi { iters } => perf::jacobi_flops(n, n, iters as u64, model),
            Workload::Multigrid { cycles, .. } => {
                let cfg = self.vcycle_config(size, Precision::Fp32).unwrap();
                perf::multigrid_flops(n, n, &cfg, cycles as u64, model)
            }
        }
    }

    pub fn validate(&self, size: usize) -> Result<()> {
        if size < 3 {
            return Err(Error::Dimension {
                rows: size,
                cols: size,
                reason: "benchmark size must be at least 3",
            });
        }
        match self {
            Workload::Gemm | Workload::Jacobi { .. } => Ok(()),
            Workload::Multigrid { cycles, .. } => {
                if *cycles == 0 {
                    return Err(Error::Config("cycles must be at least 1".into()));
                }
                self.vcycle_config(size, Precision::Fp32)
                    .unwrap()
                    .validate(size, size)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    CapacityExceeded,
    Error,
}

/// One benchmark execution. Timing fields are absent unless `status` is `ok`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub workload: String,
    pub size: usize,
    pub precision: Precision,
    pub times_s: Vec<f64>,
    pub mean_s: Option<f64>,
    /// Sample standard deviation; 0 for a single repetition.
    pub std_s: Option<f64>,
    pub min_s: Option<f64>,
    /// Work of one repetition.
    pub flops: u64,
    pub gflops_mean: Option<f64>,
    /// Mean energy of one repetition.
    pub energy_j: Option<f64>,
    /// Mean power over the timed window.
    pub power_w_mean: Option<f64>,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl BenchResult {
    fn empty(
        workload: &Workload,
        size: usize,
        precision: Precision,
        flops: u64,
        status: Status,
    ) -> Self {
        BenchResult {
            workload: workload.id().into(),
            size,
            precision,
            times_s: Vec::new(),
            mean_s: None,
            std_s: None,
            min_s: None,
            flops,
            gflops_mean: None,
            energy_j: None,
            power_w_mean: None,
            status,
            message: None,
        }
    }
}

/// Milliseconds since the Unix epoch.
pub trait Clock {
    fn now_ms(&self) -> f64;
}

/// Wall-clock epoch at construction plus a monotonic offset.
pub struct SystemClock {
    epoch_ms: f64,
    start: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        let epoch_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64() * 1e3)
            .unwrap_or(0.0);
        SystemClock {
            epoch_ms,
            start: Instant::now(),
        }
    }
}

impl Clock for SystemClock {
    fn now_ms(&self) -> f64 {
        self.epoch_ms + self.start.elapsed().as_secs_f64() * 1e3
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BenchEvent {
    SetupStarted,
    SetupFinished,
    WindowOpened,
    WindowClosed,
    Allocated { tensor: &'static str, bytes: u64 },
}

/// Receives harness events stamped with the clock time.
pub trait BenchObserver {
    fn on_event(&mut self, at_ms: f64, event: BenchEvent);
}

impl BenchObserver for () {
    fn on_event(&mut self, _at_ms: f64, _event: BenchEvent) {}
}

impl BenchObserver for Vec<(f64, BenchEvent)> {
    fn on_event(&mut self, at_ms: f64, event: BenchEvent) {
        self.push((at_ms, event));
    }
}

/// Raw output of [`measure`].
#[derive(Clone, Debug)]
pub struct Measurement {
    pub times_s: Vec<f64>,
    pub window_ms: (f64, f64),
    pub trace: Option<PowerTrace>,
    /// Why no trace is available when sampling failed.
    pub sampler_error: Option<String>,
}

/// Runs `setup` once, `warmup` untimed calls of `run`, then `reps` timed calls
/// inside one sampling window.
pub fn measure<S>(
    cfg: &BenchConfig,
    clock: &dyn Clock,
    observer: &mut dyn BenchObserver,
    sampler: &mut dyn PowerSampler,
    setup: impl FnOnce(&mut dyn BenchObserver) -> Result<S>,
    mut run: impl FnMut(&mut S) -> Result<()>,
) -> Result<Measurement> {
    cfg.validate()?;
    observer.on_event(clock.now_ms(), BenchEvent::SetupStarted);
    let mut state = setup(observer)?;
    observer.on_event(clock.now_ms(), BenchEvent::SetupFinished);
    for _ in 0..cfg.warmup {
        run(&mut state)?;
    }
    let mut sampler_error = sampler
        .start(cfg.sample_period_ms)
        .err()
        .map(|e| e.to_string());
    let t0 = clock.now_ms();
    observer.on_event(t0, BenchEvent::WindowOpened);
    let mut times_s = Vec::with_capacity(cfg.reps);
    for _ in 0..cfg.reps {
        let a = clock.now_ms();
        run(&mut state)?;
        let b = clock.now_ms();
        times_s.push((b - a) * 1e-3);
    }
    let t1 = clock.now_ms();
    observer.on_event(t1, BenchEvent::WindowClosed);
    drop(state);
    let trace = if sampler_error.is_none() {
        match sampler.finish(t0, t1) {
            Ok(t) => t,
            Err(e) => {
                sampler_error = Some(e.to_string());
                None
            }
        }
    } else {
        None
    };
    Ok(Measurement {
        times_s,
        window_ms: (t0, t1),
        trace,
        sampler_error,
    })
}

/// Mean, sample standard deviation and minimum.
pub fn summarize(times: &[f64]) -> Option<(f64, f64, f64)> {
    if times.is_empty() {
        return None;
    }
    let n = times.len() as f64;
    let mean = times.iter().sum::<f64>() / n;
    let std = if times.len() > 1 {
        (times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let min = times.iter().copied().fold(f64::INFINITY, f64::min);
    Some((mean, std, min))
}

/// [`run_bench_with`] on the system clock with the default FLOP model.
pub fn run_bench(
    workload: &Workload,
    size: usize,
    cfg: &BenchConfig,
    sampler: &mut dyn PowerSampler,
) -> BenchResult {
    run_bench_with(
        workload,
        size,
        cfg,
        sampler,
        &SystemClock::default(),
        &mut (),
        &FlopModel::default(),
    )
}

enum Prepared {
    Gemm(crate::Matrix<f32>, crate::Matrix<f32>),
    Jacobi(HeatProblem<f32>, JacobiConfig),
    Multigrid(VCycleSolver<f32>, usize),
}

impl Prepared {
    fn new(workload: &Workload, size: usize, precision: Precision) -> Result<Self> {
        Ok(match *workload {
            Workload::Gemm => {
                let (a, b) = gemm_operands(size, size, size, precision, 0)?;
                Prepared::Gemm(a, b)
            }
            Workload::Jacobi { iters } => Prepared::Jacobi(
                HeatProblem::hot_left(size, size, precision)?,
                JacobiConfig::fixed(iters, precision),
            ),
            Workload::Multigrid { cycles, .. } => {
                let cfg = workload.vcycle_config(size, precision).unwrap();
                let p = HeatProblem::hot_left(size, size, precision)?;
                Prepared::Multigrid(VCycleSolver::new(&p, &cfg)?, cycles)
            }
        })
    }

    fn run(&self) -> Result<()> {
        match self {
            Prepared::Gemm(a, b) => {
                black_box(ops::matmul_with(a, b, MatmulMode::Performance)?);
            }
            Prepared::Jacobi(p, cfg) => {
                black_box(jacobi_solve(p, cfg)?);
            }
            Prepared::Multigrid(solver, cycles) => {
                let mut u = solver.initial().clone();
                for _ in 0..*cycles {
                    u = solver.cycle(u)?;
                }
                black_box(u);
            }
        }
        Ok(())
    }
}

/// Runs one benchmark. Failures are reported through `status`, never panics.
pub fn run_bench_with(
    workload: &Workload,
    size: usize,
    cfg: &BenchConfig,
    sampler: &mut dyn PowerSampler,
    clock: &dyn Clock,
    observer: &mut dyn BenchObserver,
    model: &FlopModel,
) -> BenchResult {
    let flops = workload.flops(size.max(1), model);
    let mut result = BenchResult::empty(workload, size, cfg.precision, flops, Status::Ok);
    if let Err(e) = cfg.validate().and_then(|_| workload.validate(size)) {
        result.status = Status::Error;
        result.message = Some(e.to_string());
        return result;
    }
    let tensors = workload.tensors(size, cfg.precision);
    if let Some(cap) = cfg.capacity_bytes {
        if let Some(&(name, bytes)) = tensors.iter().find(|(_, b)| *b > cap) {
            result.status = Status::CapacityExceeded;
            result.message = Some(format!(
                "tensor {name} needs {bytes} bytes, capacity is {cap}"
            ));
            return result;
        }
    }
    let setup = |obs: &mut dyn BenchObserver| {
        let prepared = Prepared::new(workload, size, cfg.precision)?;
        for &(tensor, bytes) in &tensors {
            obs.on_event(clock.now_ms(), BenchEvent::Allocated { tensor, bytes });
        }
        Ok(prepared)
    };
    let m = match measure(cfg, clock, observer, sampler, setup, |p| p.run()) {
        Ok(m) => m,
        Err(e) => {
            result.status = Status::Error;
            result.message = Some(e.to_string());
            return result;
        }
    };
    fill_timing(&mut result, &m, cfg.reps);
    result
}

fn fill_timing(result: &mut BenchResult, m: &Measurement, reps: usize) {
    if let Some((mean, std, min)) = summarize(&m.times_s) {
        result.mean_s = Some(mean);
        result.std_s = Some(std);
        result.min_s = Some(min);
        result.gflops_mean = perf::gflops(result.flops as f64, mean).ok();
    }
    result.times_s = m.times_s.clone();
    let (t0, t1) = m.window_ms;
    match (&m.trace, &m.sampler_error) {
        (Some(trace), _) => match integrate_energy(trace, t0, t1) {
            Ok((joules, watts)) => {
                result.energy_j = Some(joules / reps as f64);
                result.power_w_mean = Some(watts);
            }
            Err(e) => result.message = Some(format!("energy unavailable: {e}")),
        },
        (None, Some(e)) => result.message = Some(format!("energy unavailable: {e}")),
        (None, None) => {}
    }
}

/// Reads a JSON array of results; a missing or empty file is an empty list.
pub fn read_results(path: &Path) -> Result<Vec<BenchResult>> {
    match std::fs::read_to_string(path) {
        Ok(text) if text.trim().is_empty() => Ok(Vec::new()),
        Ok(text) => Ok(serde_json::from_str(&text)?),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(e.into()),
    }
}

/// Appends to the JSON array stored at `path`, creating it if needed.
pub fn append_results(path: &Path, new: &[BenchResult]) -> Result<()> {
    let mut all = read_results(path)?;
    all.extend_from_slice(new);
    let mut text = serde_json::to_string_pretty(&all)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::Cell;

    /// Advances by a fixed step on every reading.
    struct StepClock {
        t: Cell<f64>,
        step: f64,
    }

    impl StepClock {
        fn new(start: f64, step: f64) -> Self {
            StepClock {
                t: Cell::new(start),
                step,
            }
        }
    }

    impl Clock for StepClock {
        fn now_ms(&self) -> f64 {
            let t = self.t.get();
            self.t.set(t + self.step);
            t
        }
    }

    fn cfg(reps: usize) -> BenchConfig {
        BenchConfig {
            warmup: 1,
            reps,
            ..Default::default()
        }
    }

    #[test]
    fn tensor_bytes_examples() {
        assert_eq!(tensor_bytes(4096, 4096, Precision::Fp16Storage), 33_554_432);
        assert_eq!(tensor_bytes(1, 1, Precision::Fp32), 4);
        assert_eq!(
            tensor_bytes(32768, 32768, Precision::Fp16Storage),
            2_147_483_648
        );
    }

    #[test]
    fn small_gemm_null_sampler() {
        let r = run_bench(&Workload::Gemm, 8, &cfg(3), &mut NullSampler);
        assert_eq!(r.status, Status::Ok, "{:?}", r.message);
        assert_eq!(r.times_s.len(), 3);
        assert_eq!(r.flops, 1024);
        assert!(r.energy_j.is_none() && r.power_w_mean.is_none());
        let (mean, min, std) = (r.mean_s.unwrap(), r.min_s.unwrap(), r.std_s.unwrap());
        assert!(mean >= min && std >= 0.0);
    }

    #[test]
    fn gflops_consistent_with_perf_model() {
        let clock = StepClock::new(0.0, 1.0);
        let r = run_bench_with(
            &Workload::Jacobi { iters: 3 },
            16,
            &cfg(4),
            &mut NullSampler,
            &clock,
            &mut (),
            &FlopModel::default(),
        );
        assert_eq!(
            r.flops,
            perf::jacobi_flops(16, 16, 3, &FlopModel::default())
        );
        assert_eq!(
            r.gflops_mean,
            Some(perf::gflops(r.flops as f64, r.mean_s.unwrap()).unwrap())
        );
        // Each rep reads the clock twice, one step apart.
        assert!(r.times_s.iter().all(|&t| (t - 1e-3).abs() < 1e-15));
    }

    #[test]
    fn setup_outside_window() {
        let clock = StepClock::new(1e12, 1.0);
        let mut events = Vec::new();
        let r = run_bench_with(
            &Workload::multigrid_default(),
            32,
            &cfg(2),
            &mut NullSampler,
            &clock,
            &mut events,
            &FlopModel::default(),
        );
        assert_eq!(r.status, Status::Ok);
        let at = |e: &BenchEvent| events.iter().find(|(_, x)| x == e).unwrap().0;
        let (open, close) = (at(&BenchEvent::WindowOpened), at(&BenchEvent::WindowClosed));
        assert!(open < close);
        for (t, e) in &events {
            if !matches!(e, BenchEvent::WindowOpened | BenchEvent::WindowClosed) {
                assert!(*t < open, "{e:?} at {t} inside window {open}..{close}");
            }
        }
        assert!(events
            .iter()
            .any(|(_, e)| matches!(e, BenchEvent::Allocated { .. })));
    }

    #[test]
    fn capacity_gate_allocates_nothing() {
        let c = BenchConfig {
            capacity_bytes: Some(30_000_000),
            precision: Precision::Fp16Storage,
            ..cfg(1)
        };
        for w in [
            Workload::Gemm,
            Workload::Jacobi { iters: 1 },
            Workload::multigrid_default(),
        ] {
            let mut events = Vec::new();
            let r = run_bench_with(
                &w,
                4096,
                &c,
                &mut NullSampler,
                &SystemClock::default(),
                &mut events,
                &FlopModel::default(),
            );
            assert_eq!(r.status, Status::CapacityExceeded);
            assert!(r.times_s.is_empty() && r.mean_s.is_none());
            assert!(events.is_empty());
            assert!(r.message.unwrap().contains("33554432"));
        }
        let ok = run_bench(&Workload::Jacobi { iters: 1 }, 64, &c, &mut NullSampler);
        assert_eq!(ok.status, Status::Ok);
    }

    /// Returns scripted readings, then repeats the last one.
    struct ScriptClock {
        readings: std::cell::RefCell<Vec<f64>>,
    }

    impl Clock for ScriptClock {
        fn now_ms(&self) -> f64 {
            let mut r = self.readings.borrow_mut();
            if r.len() > 1 {
                r.remove(0)
            } else {
                r[0]
            }
        }
    }

    #[test]
    fn constant_replay_energy() {
        // Five setup stamps (start, three tensors, finish), then window
        // open, one 2 s rep, window close.
        let clock = ScriptClock {
            readings: vec![0.0, 0.0, 0.0, 0.0, 0.0, 1000.0, 1000.0, 3000.0, 3000.0].into(),
        };
        let trace = PowerTrace::sampled(0.0, 10_000.0, 100.0, |_| 5000.0).unwrap();
        let c = BenchConfig {
            warmup: 0,
            ..cfg(1)
        };
        let r = run_bench_with(
            &Workload::Gemm,
            4,
            &c,
            &mut TraceReplaySampler::new(trace),
            &clock,
            &mut (),
            &FlopModel::default(),
        );
        assert_eq!(r.times_s, vec![2.0]);
        assert!(
            (r.energy_j.unwrap() - 10.0).abs() < 1e-9,
            "{:?}",
            r.energy_j
        );
        assert!((r.power_w_mean.unwrap() - 5.0).abs() < 1e-12);
    }

    struct FailingSampler;

    impl PowerSampler for FailingSampler {
        fn start(&mut self, _: u64) -> Result<()> {
            Err(Error::Trace("meter offline".into()))
        }
        fn finish(&mut self, _: f64, _: f64) -> Result<Option<PowerTrace>> {
            unreachable!()
        }
    }

    #[test]
    fn sampler_failure_keeps_run() {
        let r = run_bench(&Workload::Gemm, 4, &cfg(2), &mut FailingSampler);
        assert_eq!(r.status, Status::Ok);
        assert!(r.energy_j.is_none());
        assert!(r.message.unwrap().contains("meter offline"));
    }

    #[test]
    fn invalid_workload_is_error_status() {
        let w = Workload::Multigrid {
            levels: Some(6),
            pre_smooth: 1,
            post_smooth: 1,
            coarse_iters: 5,
            cycles: 1,
        };
        let r = run_bench(&w, 48, &cfg(1), &mut NullSampler);
        assert_eq!(r.status, Status::Error);
        assert!(r.message.is_some());
        let r = run_bench(
            &Workload::Gemm,
            4,
            &BenchConfig { reps: 0, ..cfg(1) },
            &mut NullSampler,
        );
        assert_eq!(r.status, Status::Error);
    }

    #[test]
    fn results_file_appends() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let r = run_bench(&Workload::Gemm, 4, &cfg(1), &mut NullSampler);
        append_results(&path, &[r.clone()]).unwrap();
        append_results(&path, &[r.clone()]).unwrap();
        let back = read_results(&path).unwrap();
        assert_eq!(back, vec![r.clone(), r]);
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        let obj = v[0].as_object().unwrap();
        for key in [
            "workload",
            "size",
            "precision",
            "times_s",
            "mean_s",
            "std_s",
            "min_s",
            "flops",
            "gflops_mean",
            "energy_j",
            "power_w_mean",
            "status",
        ] {
            assert!(obj.contains_key(key), "{key}");
        }
    }

    #[test]
    fn summary_statistics() {
        let (mean, std, min) = summarize(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((mean, std, min), (2.0, 1.0, 1.0));
        assert_eq!(summarize(&[4.0]), Some((4.0, 0.0, 4.0)));
        assert_eq!(summarize(&[]), None);
    }
}
