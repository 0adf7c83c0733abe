//! Power traces, energy integration and samplers.

use crate::error::{Error, Result};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

/// One power reading.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerSample {
    pub t_ms: f64,
    pub power_mw: f64,
}

/// Samples with strictly increasing timestamps and non-negative power.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PowerTrace {
    samples: Vec<PowerSample>,
}

impl PowerTrace {
    pub fn new(samples: Vec<PowerSample>) -> Result<Self> {
        for (i, s) in samples.iter().enumerate() {
            if !s.t_ms.is_finite() || !s.power_mw.is_finite() || s.power_mw < 0.0 {
                return Err(Error::Trace(format!(
                    "sample {i}: invalid reading {} {}",
                    s.t_ms, s.power_mw
                )));
            }
            if i > 0 && s.t_ms <= samples[i - 1].t_ms {
                return Err(Error::Trace(format!(
                    "sample {i}: timestamp {} is not increasing",
                    s.t_ms
                )));
            }
        }
        Ok(PowerTrace { samples })
    }

    /// Builds a trace by sampling `f(t_ms)` every `period_ms` from `t0` to `t1` inclusive.
    pub fn sampled(
        t0: f64,
        t1: f64,
        period_ms: f64,
        mut f: impl FnMut(f64) -> f64,
    ) -> Result<Self> {
        if !(period_ms > 0.0) || !(t1 >= t0) {
            return Err(Error::Trace(format!(
                "bad sampling grid {t0}..{t1} step {period_ms}"
            )));
        }
        let n = ((t1 - t0) / period_ms).round() as usize;
        let samples = (0..=n)
            .map(|i| {
                let t = t0 + i as f64 * period_ms;
                PowerSample {
                    t_ms: t,
                    power_mw: f(t),
                }
            })
            .collect();
        Self::new(samples)
    }

    /// Parses `<epoch_ms> <power_mw>` lines. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut samples = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if let Some(s) = parse_line(line).map_err(|message| Error::Parse {
                line: n as u64 + 1,
                message,
            })? {
                samples.push(s);
            }
        }
        Self::new(samples)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn samples(&self) -> &[PowerSample] {
        &self.samples
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Same trace moved so that its first sample sits at `t0`.
    pub fn rebased(&self, t0: f64) -> Self {
        let shift = self.samples.first().map_or(0.0, |s| t0 - s.t_ms);
        PowerTrace {
            samples: self
                .samples
                .iter()
                .map(|s| PowerSample {
                    t_ms: s.t_ms + shift,
                    power_mw: s.power_mw,
                })
                .collect(),
        }
    }

    /// Piecewise-linear power at `t`, held constant beyond the first and last samples.
    fn power_at(&self, t: f64) -> f64 {
        let s = &self.samples;
        let k = s.partition_point(|p| p.t_ms <= t);
        if k == 0 {
            return s[0].power_mw;
        }
        if k == s.len() {
            return s[k - 1].power_mw;
        }
        let (a, b) = (s[k - 1], s[k]);
        a.power_mw + (b.power_mw - a.power_mw) * (t - a.t_ms) / (b.t_ms - a.t_ms)
    }
}

fn parse_line(line: &str) -> std::result::Result<Option<PowerSample>, String> {
    let line = line.trim();
    if line.is_empty() || line.starts_with('#') {
        return Ok(None);
    }
    let mut parts = line.split_whitespace();
    let (Some(t), Some(p), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(format!("expected `<epoch_ms> <power_mw>`, got {line:?}"));
    };
    let t = t
        .parse::<f64>()
        .map_err(|e| format!("timestamp {t:?}: {e}"))?;
    let p = p.parse::<f64>().map_err(|e| format!("power {p:?}: {e}"))?;
    Ok(Some(PowerSample {
        t_ms: t,
        power_mw: p,
    }))
}

/// Energy over `[t0, t1]` (milliseconds) by the trapezoidal rule on the
/// piecewise-linear trace, clamped to the window. Returns joules and mean watts.
///
/// The trace must overlap the window; inside it, the first and last readings
/// are held constant out to the window edges.
pub fn integrate_energy(trace: &PowerTrace, t0: f64, t1: f64) -> Result<(f64, f64)> {
    if !(t1 > t0) {
        return Err(Error::NonPositive {
            what: "window length",
            value: t1 - t0,
        });
    }
    let s = trace.samples();
    let no_coverage = || Error::NoCoverage {
        t0_ms: t0,
        t1_ms: t1,
    };
    let (first, last) = match (s.first(), s.last()) {
        (Some(f), Some(l)) => (f.t_ms, l.t_ms),
        _ => return Err(no_coverage()),
    };
    if first > t1 || last < t0 {
        return Err(no_coverage());
    }
    let lo = s.partition_point(|p| p.t_ms <= t0);
    let hi = s.partition_point(|p| p.t_ms < t1);
    let mut mw_ms = 0.0;
    let (mut ta, mut pa) = (t0, trace.power_at(t0));
    for p in &s[lo..hi] {
        mw_ms += 0.5 * (pa + p.power_mw) * (p.t_ms - ta);
        ta = p.t_ms;
        pa = p.power_mw;
    }
    mw_ms += 0.5 * (pa + trace.power_at(t1)) * (t1 - ta);
    let joules = mw_ms * 1e-6;
    Ok((joules, joules / ((t1 - t0) * 1e-3)))
}

/// Collects power readings around a measured window.
pub trait PowerSampler {
    /// Called just before the timed window opens.
    fn start(&mut self, period_ms: u64) -> Result<()>;
    /// Called after the window `[t0_ms, t1_ms]` closes. `None` means no data.
    fn finish(&mut self, t0_ms: f64, t1_ms: f64) -> Result<Option<PowerTrace>>;
}

/// Produces no readings.
#[derive(Clone, Copy, Debug, Default)]
pub struct NullSampler;

impl PowerSampler for NullSampler {
    fn start(&mut self, _period_ms: u64) -> Result<()> {
        Ok(())
    }

    fn finish(&mut self, _t0_ms: f64, _t1_ms: f64) -> Result<Option<PowerTrace>> {
        Ok(None)
    }
}

/// Replays a recorded trace, shifted so its first sample lands on the window start.
#[derive(Clone, Debug)]
pub struct TraceReplaySampler {
    trace: PowerTrace,
}

impl TraceReplaySampler {
    pub fn new(trace: PowerTrace) -> Self {
        TraceReplaySampler { trace }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Ok(Self::new(PowerTrace::load(path)?))
    }
}

impl PowerSampler for TraceReplaySampler {
    fn start(&mut self, _period_ms: u64) -> Result<()> {
        Ok(())
    }

    fn finish(&mut self, t0_ms: f64, _t1_ms: f64) -> Result<Option<PowerTrace>> {
        Ok(Some(self.trace.rebased(t0_ms)))
    }
}

/// Runs an external program that prints `<epoch_ms> <power_mw>` lines.
///
/// The program is started before the window and killed once it has reported a
/// sample at or after the window end, or after a grace period.
pub struct CommandSampler {
    argv: Vec<String>,
    grace: Duration,
    running: Option<Running>,
}

struct Running {
    child: Child,
    reader: JoinHandle<()>,
    shared: Arc<Mutex<Shared>>,
}

#[derive(Default)]
struct Shared {
    samples: Vec<PowerSample>,
    error: Option<String>,
    eof: bool,
}

impl CommandSampler {
    pub fn new(argv: Vec<String>) -> Result<Self> {
        if argv.is_empty() {
            return Err(Error::Config("sampler command is empty".into()));
        }
        Ok(CommandSampler {
            argv,
            grace: Duration::from_secs(2),
            running: None,
        })
    }

    /// Splits a command line on whitespace.
    pub fn from_command_line(cmd: &str) -> Result<Self> {
        Self::new(cmd.split_whitespace().map(str::to_owned).collect())
    }

    pub fn with_grace(mut self, grace: Duration) -> Self {
        self.grace = grace;
        self
    }

    fn stop(run: Running) -> Result<Vec<PowerSample>> {
        let Running {
            mut child,
            reader,
            shared,
        } = run;
        let _ = child.kill();
        let _ = child.wait();
        let _ = reader.join();
        let mut g = shared.lock().unwrap();
        if let Some(e) = g.error.take() {
            return Err(Error::Trace(e));
        }
        Ok(std::mem::take(&mut g.samples))
    }
}

impl PowerSampler for CommandSampler {
    fn start(&mut self, _period_ms: u64) -> Result<()> {
        if let Some(run) = self.running.take() {
            let _ = Self::stop(run);
        }
        let mut child = Command::new(&self.argv[0])
            .args(&self.argv[1..])
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()?;
        let stdout = child.stdout.take().expect("piped stdout");
        let shared = Arc::new(Mutex::new(Shared::default()));
        let sink = Arc::clone(&shared);
        let reader = std::thread::spawn(move || {
            for (n, line) in BufReader::new(stdout).lines().enumerate() {
                let Ok(line) = line else { break };
                let mut g = sink.lock().unwrap();
                match parse_line(&line) {
                    Ok(Some(s)) => g.samples.push(s),
                    Ok(None) => {}
                    Err(e) => {
                        g.error
                            .get_or_insert(format!("sampler line {}: {e}", n + 1));
                    }
                }
            }
            sink.lock().unwrap().eof = true;
        });
        self.running = Some(Running {
            child,
            reader,
            shared,
        });
        Ok(())
    }

    fn finish(&mut self, _t0_ms: f64, t1_ms: f64) -> Result<Option<PowerTrace>> {
        let Some(run) = self.running.take() else {
            return Ok(None);
        };
        let deadline = Instant::now() + self.grace;
        loop {
            {
                let g = run.shared.lock().unwrap();
                let reached = g.samples.last().is_some_and(|s| s.t_ms >= t1_ms);
                if reached || g.eof || g.error.is_some() {
                    break;
                }
            }
            if Instant::now() >= deadline {
                break;
            }
            std::thread::sleep(Duration::from_millis(5));
        }
        let samples = Self::stop(run)?;
        if samples.is_empty() {
            return Ok(None);
        }
        PowerTrace::new(samples).map(Some)
    }
}

impl Drop for CommandSampler {
    fn drop(&mut self) {
        if let Some(run) = self.running.take() {
            let _ = Self::stop(run);
        }
    }
}

/// Sampler choice as written on the command line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SamplerSpec {
    Null,
    Trace(PathBuf),
    Command(String),
}

impl std::str::FromStr for SamplerSpec {
    type Err = Error;

    /// `null`, `trace:<path>` or `cmd:<argv>`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "null" {
            Ok(SamplerSpec::Null)
        } else if let Some(p) = s.strip_prefix("trace:").filter(|p| !p.is_empty()) {
            Ok(SamplerSpec::Trace(PathBuf::from(p)))
        } else if let Some(c) = s.strip_prefix("cmd:").filter(|c| !c.trim().is_empty()) {
            Ok(SamplerSpec::Command(c.to_owned()))
        } else {
            Err(Error::Config(format!(
                "unknown sampler {s:?}; expected null, trace:<path> or cmd:<argv>"
            )))
        }
    }
}

impl SamplerSpec {
    pub fn build(&self) -> Result<Box<dyn PowerSampler>> {
        Ok(match self {
            SamplerSpec::Null => Box::new(NullSampler),
            SamplerSpec::Trace(p) => Box::new(TraceReplaySampler::from_file(p)?),
            SamplerSpec::Command(c) => Box::new(CommandSampler::from_command_line(c)?),
        })
    }
}
