use anyhow::{anyhow, Context};
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use sgb_core::bench::{
    append_results, run_bench, BenchConfig, BenchResult, SamplerSpec, Status, Workload,
};
use sgb_core::report::{
    efficiency_table, emit_records, emit_table, load_results, speedup_table, DeviceKey, Emitted,
    Format, Metric, TableKind, EMBEDDED,
};
use sgb_core::solvers::problem::ProblemFile;
use sgb_core::verify::{resolve_fixtures_dir, run_verify};
use sgb_core::Precision;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_USAGE: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_VERIFY: u8 = 3;

/// Host memory above which `bench` warns before running a size.
const FOOTPRINT_WARN_BYTES: u64 = 4 << 30;

#[derive(Parser, Debug)]
#[command(
    name = "sgb",
    version,
    about = "Stencil, multigrid and GEMM benchmarks built from tensor operators",
    after_help = "Exit codes: 0 success or capacity-gated, 1 usage error, 2 runtime error, 3 verification failure."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Time a workload and append a result record.
    Bench(BenchArgs),
    /// Run golden fixtures, solver oracles and invariant checks.
    Verify(VerifyArgs),
    /// Build speedup, efficiency or raw tables from results.
    Report(ReportArgs),
    /// Solve a problem definition file and print the result as JSON.
    Solve(SolveArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum WorkloadKind {
    Gemm,
    Jacobi,
    Multigrid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Dtype {
    Fp16,
    Fp32,
}

impl From<Dtype> for Precision {
    fn from(d: Dtype) -> Self {
        match d {
            Dtype::Fp16 => Precision::Fp16Storage,
            Dtype::Fp32 => Precision::Fp32,
        }
    }
}

#[derive(Args, Debug)]
struct BenchArgs {
    workload: WorkloadKind,
    /// Square problem size; repeat for several. [default: the workload's size table]
    #[arg(long = "size", value_name = "N")]
    sizes: Vec<usize>,
    #[arg(long, value_enum, default_value = "fp32")]
    dtype: Dtype,
    /// Jacobi sweeps per repetition (jacobi only). [default: 1000]
    #[arg(long, value_name = "K")]
    iters: Option<usize>,
    /// V-cycle depth (multigrid only). [default: halve until the side is at most 16]
    #[arg(long, value_name = "L")]
    levels: Option<usize>,
    /// Pre-smoothing sweeps per level (multigrid only). [default: 1]
    #[arg(long = "pre", value_name = "P")]
    pre_smooth: Option<usize>,
    /// Post-smoothing sweeps per level (multigrid only). [default: 1]
    #[arg(long = "post", value_name = "Q")]
    post_smooth: Option<usize>,
    /// Sweeps on the coarsest level (multigrid only). [default: 50]
    #[arg(long, value_name = "C")]
    coarse_iters: Option<usize>,
    /// V-cycles per repetition (multigrid only). [default: 1]
    #[arg(long)]
    cycles: Option<usize>,
    #[arg(long, value_name = "R", default_value_t = 10)]
    reps: usize,
    #[arg(long, value_name = "W", default_value_t = 2)]
    warmup: usize,
    /// Largest single tensor allowed; bigger sizes are recorded as capacity_exceeded. [default: unlimited]
    #[arg(long, value_name = "BYTES")]
    capacity: Option<u64>,
    /// Power source: null, trace:<path> or cmd:<argv>.
    #[arg(long, default_value = "null")]
    sampler: String,
    /// Power sampling period in milliseconds.
    #[arg(long, value_name = "MS", default_value_t = 100)]
    sample_period_ms: u64,
    /// Append results to this JSON array file. [default: print only]
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Fixtures directory. [default: $SGB_FIXTURES, else ./fixtures]
    #[arg(long, value_name = "DIR")]
    fixtures: Option<PathBuf>,
    /// Only run checks of this operator or check family. [default: all]
    #[arg(long, value_name = "OP")]
    filter: Option<String>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Results JSON or CSV, or paper:embedded for the published figures.
    #[arg(long, default_value = EMBEDDED)]
    input: String,
    /// speedup, efficiency or raw.
    #[arg(long, default_value = "speedup")]
    kind: String,
    /// Baseline column as "device,precision".
    #[arg(long, default_value = "CPU M1,fp16")]
    baseline: String,
    /// Compare this metric instead of the automatic choice (speedup only). [default: time_s, else gflops]
    #[arg(long)]
    metric: Option<String>,
    /// csv, json, markdown or plot-data.
    #[arg(long, default_value = "markdown")]
    format: String,
    /// Output file, or directory for plot-data. [default: stdout; plot-data needs a directory]
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Problem definition JSON.
    problem: PathBuf,
    /// Write the full report, including the solution grid, here. [default: summary on stdout only]
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
    Verify,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<sgb_core::Error> for Failure {
    fn from(e: sgb_core::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Bench(a) => bench(a),
        Command::Verify(a) => verify(a),
        Command::Report(a) => report(a),
        Command::Solve(a) => solve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n");
            let name = std::env::args().nth(1).unwrap_or_default();
            let mut cmd = Cli::command();
            let usage = cmd
                .find_subcommand_mut(&name)
                .map(|c| c.clone().bin_name(format!("sgb {name}")).render_usage())
                .unwrap_or_else(|| Cli::command().render_usage());
            eprintln!("{usage}\n\nFor more information, try '--help'.");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
        Err(Failure::Verify) => ExitCode::from(EXIT_VERIFY),
    }
}

fn workload_from(a: &BenchArgs) -> Result<Workload, Failure> {
    let mg_flags = [
        ("--levels", a.levels.is_some()),
        ("--pre", a.pre_smooth.is_some()),
        ("--post", a.post_smooth.is_some()),
        ("--coarse-iters", a.coarse_iters.is_some()),
        ("--cycles", a.cycles.is_some()),
    ];
    let reject = |flags: &[(&str, bool)], name: &str| -> Result<(), Failure> {
        match flags.iter().find(|(_, set)| *set) {
            Some((flag, _)) => Err(Failure::Usage(format!("{flag} does not apply to {name}"))),
            None => Ok(()),
        }
    };
    Ok(match a.workload {
        WorkloadKind::Gemm => {
            reject(&mg_flags, "gemm")?;
            reject(&[("--iters", a.iters.is_some())], "gemm")?;
            Workload::Gemm
        }
        WorkloadKind::Jacobi => {
            reject(&mg_flags, "jacobi")?;
            Workload::Jacobi {
                iters: a.iters.unwrap_or(1000),
            }
        }
        WorkloadKind::Multigrid => {
            reject(&[("--iters", a.iters.is_some())], "multigrid")?;
            let Workload::Multigrid {
                pre_smooth,
                post_smooth,
                coarse_iters,
                cycles,
                ..
            } = Workload::multigrid_default()
            else {
                unreachable!()
            };
            Workload::Multigrid {
                levels: a.levels,
                pre_smooth: a.pre_smooth.unwrap_or(pre_smooth),
                post_smooth: a.post_smooth.unwrap_or(post_smooth),
                coarse_iters: a.coarse_iters.unwrap_or(coarse_iters),
                cycles: a.cycles.unwrap_or(cycles),
            }
        }
    })
}

fn bench(a: BenchArgs) -> Result<(), Failure> {
    let workload = workload_from(&a)?;
    let cfg = BenchConfig {
        warmup: a.warmup,
        reps: a.reps,
        sample_period_ms: a.sample_period_ms,
        capacity_bytes: a.capacity,
        precision: a.dtype.into(),
    };
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let sampler_spec: SamplerSpec = a
        .sampler
        .parse()
        .map_err(|e: sgb_core::Error| Failure::Usage(e.to_string()))?;
    let sizes = if a.sizes.is_empty() {
        workload.default_sizes().to_vec()
    } else {
        a.sizes.clone()
    };
    for &size in &sizes {
        workload
            .validate(size)
            .map_err(|e| Failure::Usage(format!("size {size}: {e}")))?;
    }
    let mut sampler = sampler_spec.build()?;
    let mut results: Vec<BenchResult> = Vec::new();
    let mut failed = false;
    for &size in &sizes {
        let footprint = workload.host_footprint_bytes(size);
        if footprint > FOOTPRINT_WARN_BYTES {
            eprintln!(
                "warning: {} size {size} needs about {:.1} GiB of host memory",
                workload.id(),
                footprint as f64 / (1u64 << 30) as f64
            );
        }
        let r = run_bench(&workload, size, &cfg, sampler.as_mut());
        println!(
            "{}",
            serde_json::to_string(&r).context("serializing result")?
        );
        if r.status == Status::Error {
            eprintln!(
                "error: {} size {size}: {}",
                workload.id(),
                r.message.as_deref().unwrap_or("failed")
            );
            failed = true;
        }
        results.push(r);
    }
    if let Some(path) = &a.out {
        append_results(path, &results)
            .with_context(|| format!("appending to {}", path.display()))?;
    }
    if failed {
        return Err(Failure::Runtime(anyhow!(
            "one or more benchmark runs failed"
        )));
    }
    Ok(())
}

fn verify(a: VerifyArgs) -> Result<(), Failure> {
    let dir = resolve_fixtures_dir(a.fixtures.as_deref());
    let report = run_verify(&dir, a.filter.as_deref())?;
    if report.checks.is_empty() {
        return Err(Failure::Usage(format!(
            "no checks match filter {:?}",
            a.filter.as_deref().unwrap_or("")
        )));
    }
    let mut out = std::io::stdout().lock();
    for c in &report.checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        writeln!(out, "{tag} {} ({})", c.name, c.detail).map_err(anyhow::Error::from)?;
    }
    writeln!(out, "{}", report.summary()).map_err(anyhow::Error::from)?;
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}

fn report(a: ReportArgs) -> Result<(), Failure> {
    let usage = |e: sgb_core::Error| Failure::Usage(e.to_string());
    let kind: TableKind = a.kind.parse().map_err(usage)?;
    let format: Format = a.format.parse().map_err(usage)?;
    let baseline: DeviceKey = a.baseline.parse().map_err(usage)?;
    let metric: Option<Metric> = a
        .metric
        .as_deref()
        .map(str::parse)
        .transpose()
        .map_err(usage)?;
    if metric.is_some() && kind != TableKind::Speedup {
        return Err(Failure::Usage(
            "--metric applies to speedup reports only".into(),
        ));
    }
    if format == Format::PlotData && a.out.is_none() {
        return Err(Failure::Usage("plot-data needs --out DIR".into()));
    }
    let rs = load_results(&a.input).with_context(|| format!("loading {}", a.input))?;
    let emitted = match kind {
        TableKind::Raw => emit_records(&rs, format)?,
        TableKind::Speedup => {
            emit_table(&speedup_table(&rs, &baseline, None, None, metric)?, format)?
        }
        TableKind::Efficiency => {
            emit_table(&efficiency_table(&rs, &baseline, None, None)?, format)?
        }
    };
    write_emitted(emitted, a.out.as_deref())?;
    Ok(())
}

fn write_emitted(emitted: Emitted, out: Option<&Path>) -> anyhow::Result<()> {
    match (emitted, out) {
        (Emitted::Document(bytes), None) => std::io::stdout().lock().write_all(&bytes)?,
        (Emitted::Document(bytes), Some(p)) => {
            std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display()))?
        }
        (Emitted::Files(files), Some(dir)) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            for (name, bytes) in files {
                let p = dir.join(name);
                std::fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))?;
            }
        }
        (Emitted::Files(_), None) => anyhow::bail!("plot-data needs an output directory"),
    }
    Ok(())
}

fn solve(a: SolveArgs) -> Result<(), Failure> {
    let problem = ProblemFile::load(&a.problem)
        .with_context(|| format!("loading {}", a.problem.display()))?;
    let report = problem.solve()?;
    let summary = serde_json::json!({
        "solver": report.solver,
        "steps": report.steps,
        "final_residual": report.final_residual,
        "last_diff": report.last_diff,
    });
    println!("{summary}");
    if let Some(p) = &a.out {
        let mut bytes = serde_json::to_vec_pretty(&report).context("serializing solution")?;
        bytes.push(b'\n');
        std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}
