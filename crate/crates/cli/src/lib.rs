//! Experiment harness: seeded success-rate sweeps over the oversampling
//! ratio, per-iteration convergence traces, and CSV emission.
//!
//! Trials fan out over a rayon pool; results are collected in trial order
//! regardless of completion order, so a sweep is deterministic for a given
//! `(spec, base_seed)` up to the wall-time columns.

use std::fmt;

use qpr::baselines::{multichannel_recover, ChannelLayout, ChannelMode, RealAlgo};
use qpr::measurement::{derive_seed, observe, sample_ensemble, sample_signal, SignalKind, SignalSpec};
use qpr::solvers::{
    pqtaf_run, pqtwf_run, pqwf_run, qtaf_run, qtwf_run, qwf_run, RunTrace, SolverConfig,
};
use rayon::prelude::*;

pub mod image;
pub mod moments;
pub mod selftest;

/// Harness-level error, mapped onto process exit codes by the binary.
#[derive(Debug)]
pub enum HarnessError {
    /// Invalid flags or spec (exit code 2).
    Config(String),
    /// Solver failure, notably divergence (exit code 3).
    Solver(qpr::Error),
    /// Filesystem trouble (exit code 1).
    Io(std::io::Error),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Config(m) => write!(f, "configuration error: {m}"),
            HarnessError::Solver(e) => write!(f, "solver error: {e}"),
            HarnessError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<qpr::Error> for HarnessError {
    fn from(e: qpr::Error) -> Self {
        match e {
            qpr::Error::Config(m) => HarnessError::Config(m),
            other => HarnessError::Solver(other),
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e)
    }
}

/// Solver selector for the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algo {
    Qwf,
    Pqwf,
    Qtwf,
    Qtaf,
    Pqtwf,
    Pqtaf,
    Wf,
    Twf,
    Taf,
}

impl Algo {
    pub fn parse(s: &str) -> Result<Algo, HarnessError> {
        Ok(match s {
            "qwf" => Algo::Qwf,
            "pqwf" => Algo::Pqwf,
            "qtwf" => Algo::Qtwf,
            "qtaf" => Algo::Qtaf,
            "pqtwf" => Algo::Pqtwf,
            "pqtaf" => Algo::Pqtaf,
            "wf" => Algo::Wf,
            "twf" => Algo::Twf,
            "taf" => Algo::Taf,
            other => {
                return Err(HarnessError::Config(format!("unknown algorithm `{other}`")))
            }
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Algo::Qwf => "qwf",
            Algo::Pqwf => "pqwf",
            Algo::Qtwf => "qtwf",
            Algo::Qtaf => "qtaf",
            Algo::Pqtwf => "pqtwf",
            Algo::Pqtaf => "pqtaf",
            Algo::Wf => "wf",
            Algo::Twf => "twf",
            Algo::Taf => "taf",
        }
    }

    pub fn is_quaternion(self) -> bool {
        !matches!(self, Algo::Wf | Algo::Twf | Algo::Taf)
    }

    /// Pure-quaternion wrapped variants (and real baselines, which also
    /// target pure signals).
    pub fn targets_pure_signal(self) -> bool {
        !matches!(self, Algo::Qwf | Algo::Qtwf | Algo::Qtaf)
    }

    pub fn real_algo(self) -> Option<RealAlgo> {
        match self {
            Algo::Wf => Some(RealAlgo::Wf),
            Algo::Twf => Some(RealAlgo::Twf),
            Algo::Taf => Some(RealAlgo::Taf),
            _ => None,
        }
    }

    /// Tuned defaults for this solver.
    pub fn default_config(self) -> SolverConfig {
        match self {
            Algo::Qwf | Algo::Wf => SolverConfig::qwf(),
            Algo::Pqwf => SolverConfig::pqwf(),
            Algo::Qtwf | Algo::Twf => SolverConfig::qtwf(),
            Algo::Qtaf | Algo::Taf => SolverConfig::qtaf(),
            Algo::Pqtwf => SolverConfig::pqtwf(),
            Algo::Pqtaf => SolverConfig::pqtaf(),
        }
    }
}

/// Measurement model for the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    Quaternion,
    Mono,
    Concat,
}

impl Model {
    pub fn parse(s: &str) -> Result<Model, HarnessError> {
        Ok(match s {
            "quaternion" => Model::Quaternion,
            "mono" => Model::Mono,
            "concat" => Model::Concat,
            other => return Err(HarnessError::Config(format!("unknown model `{other}`"))),
        })
    }
}

/// Validates the (algo, model) pairing: quaternion algorithms run on the
/// quaternion model, real algorithms on a multichannel model.
pub fn check_pairing(algo: Algo, model: Model) -> Result<(), HarnessError> {
    match (algo.is_quaternion(), model) {
        (true, Model::Quaternion) | (false, Model::Mono) | (false, Model::Concat) => Ok(()),
        (true, _) => Err(HarnessError::Config(format!(
            "algorithm `{}` requires --model quaternion",
            algo.name()
        ))),
        (false, Model::Quaternion) => Err(HarnessError::Config(format!(
            "real algorithm `{}` requires --model mono or concat",
            algo.name()
        ))),
    }
}

/// Sweep specification: success rate of `algo` under `model` at dimension
/// `d` over an ascending grid of oversampling ratios.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub d: usize,
    pub ratios: Vec<f64>,
    pub trials: usize,
    pub algo: Algo,
    pub model: Model,
    pub cfg: SolverConfig,
    pub base_seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), HarnessError> {
        check_pairing(self.algo, self.model)?;
        if self.trials < 1 {
            return Err(HarnessError::Config("trials must be at least 1".into()));
        }
        if self.ratios.is_empty() {
            return Err(HarnessError::Config("empty ratio grid".into()));
        }
        if self.ratios.iter().any(|r| *r <= 0.0) {
            return Err(HarnessError::Config("ratios must be positive".into()));
        }
        if self.ratios.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HarnessError::Config("ratios must be ascending".into()));
        }
        self.cfg.validate().map_err(HarnessError::from)
    }
}

/// One trial's outcome.
#[derive(Debug, Clone, Copy)]
pub struct TrialOutcome {
    pub final_error: f64,
    pub wall_ms: f64,
    pub diverged: bool,
}

/// Runs a single seeded trial: draw the signal and measurements, solve,
/// and report the algorithm family's error metric. Divergence counts as a
/// failed trial rather than aborting the sweep.
pub fn run_trial(
    algo: Algo,
    model: Model,
    d: usize,
    n: usize,
    cfg: &SolverConfig,
    seed: u64,
) -> Result<TrialOutcome, HarnessError> {
    let clock = std::time::Instant::now();
    let kind = if algo.targets_pure_signal() {
        SignalKind::Pure
    } else {
        SignalKind::General
    };
    let x = sample_signal(&SignalSpec {
        d,
        kind,
        seed: derive_seed(seed, &[1]),
    });

    let run: Result<f64, qpr::Error> = if let Some(real) = algo.real_algo() {
        let mode = match model {
            Model::Mono => ChannelMode::Monochromatic,
            Model::Concat => ChannelMode::Concatenation,
            Model::Quaternion => unreachable!("pairing checked by caller"),
        };
        multichannel_recover(
            &x,
            ChannelLayout { mode, d },
            real,
            n,
            cfg,
            derive_seed(seed, &[0]),
            false,
        )
        .map(|o| o.error)
    } else {
        let e = sample_ensemble(n, d, derive_seed(seed, &[0]));
        let obs = observe(&e, &x)?;
        let trace: Result<RunTrace, qpr::Error> = match algo {
            Algo::Qwf => qwf_run(&e, &obs, cfg, Some(&x)),
            Algo::Pqwf => pqwf_run(&e, &obs, cfg, Some(&x)),
            Algo::Qtwf => qtwf_run(&e, &obs, cfg, Some(&x)),
            Algo::Qtaf => qtaf_run(&e, &obs, cfg, Some(&x)),
            Algo::Pqtwf => pqtwf_run(&e, &obs, cfg, Some(&x)),
            Algo::Pqtaf => pqtaf_run(&e, &obs, cfg, Some(&x)),
            _ => unreachable!(),
        };
        trace.map(|t| t.final_error())
    };

    match run {
        Ok(err) => Ok(TrialOutcome {
            final_error: err,
            wall_ms: clock.elapsed().as_secs_f64() * 1e3,
            diverged: false,
        }),
        Err(qpr::Error::Diverged { .. }) => Ok(TrialOutcome {
            final_error: f64::INFINITY,
            wall_ms: clock.elapsed().as_secs_f64() * 1e3,
            diverged: true,
        }),
        Err(e) => Err(e.into()),
    }
}

/// One sweep row: aggregate over `trials` seeded runs at a ratio.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub ratio: f64,
    pub n: usize,
    pub successes: usize,
    pub trials: usize,
    pub rate: f64,
    pub mean_final_error: f64,
    pub mean_wall_ms: f64,
}

/// Runs the sweep. Trial `t` at ratio index `i` is seeded with
/// `(base_seed, i, t)`, so rows are reproducible independently of the
/// thread count.
pub fn success_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, HarnessError> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = (0..spec.ratios.len())
        .flat_map(|i| (0..spec.trials).map(move |t| (i, t)))
        .collect();
    let outcomes: Vec<Result<TrialOutcome, HarnessError>> = jobs
        .par_iter()
        .map(|&(i, t)| {
            let n = (spec.ratios[i] * spec.d as f64).round() as usize;
            let seed = derive_seed(spec.base_seed, &[i as u64, t as u64]);
            run_trial(spec.algo, spec.model, spec.d, n, &spec.cfg, seed)
        })
        .collect();

    let mut rows = Vec::with_capacity(spec.ratios.len());
    for (i, &ratio) in spec.ratios.iter().enumerate() {
        let n = (ratio * spec.d as f64).round() as usize;
        let mut successes = 0;
        let mut err_sum = 0.0;
        let mut ms_sum = 0.0;
        for t in 0..spec.trials {
            let outcome = outcomes[i * spec.trials + t].as_ref().map_err(|e| match e {
                HarnessError::Config(m) => HarnessError::Config(m.clone()),
                HarnessError::Solver(s) => HarnessError::Solver(s.clone()),
                HarnessError::Io(_) => HarnessError::Config("io error in trial".into()),
            })?;
            if outcome.final_error < spec.cfg.success_tol {
                successes += 1;
            }
            err_sum += outcome.final_error;
            ms_sum += outcome.wall_ms;
        }
        rows.push(SweepRow {
            ratio,
            n,
            successes,
            trials: spec.trials,
            rate: successes as f64 / spec.trials as f64,
            mean_final_error: err_sum / spec.trials as f64,
            mean_wall_ms: ms_sum / spec.trials as f64,
        });
    }
    Ok(rows)
}

/// CSV for sweep rows. Everything left of `mean_wall_ms` is deterministic
/// for a fixed spec and platform.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("ratio,n,successes,trials,rate,mean_final_error,mean_wall_ms\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.ratio, r.n, r.successes, r.trials, r.rate, r.mean_final_error, r.mean_wall_ms
        ));
    }
    s
}

/// One convergence-trace point.
#[derive(Debug, Clone, Copy)]
pub struct TracePoint {
    pub iter: usize,
    pub log10_error: f64,
    pub elapsed_ns: u64,
}

/// Runs a single seeded trial of a quaternion algorithm and returns the
/// per-point log10 error curve (per iteration for plain solvers, per
/// purification round for wrapped ones).
pub fn convergence_trace(
    d: usize,
    ratio: f64,
    algo: Algo,
    cfg: &SolverConfig,
    seed: u64,
) -> Result<Vec<TracePoint>, HarnessError> {
    if !algo.is_quaternion() {
        return Err(HarnessError::Config(
            "trace supports the quaternion algorithms only".into(),
        ));
    }
    let n = (ratio * d as f64).round() as usize;
    let kind = if algo.targets_pure_signal() {
        SignalKind::Pure
    } else {
        SignalKind::General
    };
    let x = sample_signal(&SignalSpec {
        d,
        kind,
        seed: derive_seed(seed, &[1]),
    });
    let e = sample_ensemble(n, d, derive_seed(seed, &[0]));
    let obs = observe(&e, &x).map_err(HarnessError::from)?;
    let trace = match algo {
        Algo::Qwf => qwf_run(&e, &obs, cfg, Some(&x)),
        Algo::Pqwf => pqwf_run(&e, &obs, cfg, Some(&x)),
        Algo::Qtwf => qtwf_run(&e, &obs, cfg, Some(&x)),
        Algo::Qtaf => qtaf_run(&e, &obs, cfg, Some(&x)),
        Algo::Pqtwf => pqtwf_run(&e, &obs, cfg, Some(&x)),
        Algo::Pqtaf => pqtaf_run(&e, &obs, cfg, Some(&x)),
        _ => unreachable!(),
    }
    .map_err(HarnessError::from)?;

    Ok(trace
        .errors
        .iter()
        .zip(&trace.elapsed_ns)
        .enumerate()
        .map(|(i, (e, ns))| TracePoint {
            iter: i,
            log10_error: e.log10(),
            elapsed_ns: *ns,
        })
        .collect())
}

pub fn trace_csv(points: &[TracePoint]) -> String {
    let mut s = String::from("iter,log10_error,elapsed_ns\n");
    for p in points {
        s.push_str(&format!("{},{},{}\n", p.iter, p.log10_error, p.elapsed_ns));
    }
    s
}

/// Parses a ratio grid: either a MATLAB-style `start:step:end` range
/// (inclusive) or a comma-separated list.
pub fn parse_ratios(s: &str) -> Result<Vec<f64>, HarnessError> {
    let bad = |m: &str| HarnessError::Config(format!("invalid ratio grid `{s}`: {m}"));
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:step:end"));
        }
        let start: f64 = parts[0].parse().map_err(|_| bad("bad start"))?;
        let step: f64 = parts[1].parse().map_err(|_| bad("bad step"))?;
        let end: f64 = parts[2].parse().map_err(|_| bad("bad end"))?;
        if step <= 0.0 || end < start {
            return Err(bad("need step > 0 and end >= start"));
        }
        let mut out = Vec::new();
        let mut k = 0u32;
        loop {
            let v = start + step * f64::from(k);
            if v > end + 1e-9 {
                break;
            }
            out.push(v);
            k += 1;
        }
        Ok(out)
    } else {
        let mut out = Vec::new();
        for tok in s.split(',') {
            out.push(tok.trim().parse::<f64>().map_err(|_| bad("bad entry"))?);
        }
        Ok(out)
    }
}

/// Least-squares line fit of `y` against `0..len`, returning
/// `(slope, intercept, r_squared)`. Used to check log-linear convergence.
pub fn linear_fit(y: &[f64]) -> (f64, f64, f64) {
    let n = y.len() as f64;
    if y.len() < 2 {
        return (0.0, y.first().copied().unwrap_or(0.0), 0.0);
    }
    let xs_mean = (n - 1.0) / 2.0;
    let y_mean = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (i, v) in y.iter().enumerate() {
        let dx = i as f64 - xs_mean;
        let dy = v - y_mean;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * xs_mean;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, intercept, r2)
}
