use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qpr_cli::image::{image_experiment, read_ppm, write_ppm, ImageJob};
use qpr_cli::{
    check_pairing, convergence_trace, moments, parse_ratios, selftest, success_sweep, sweep_csv,
    trace_csv, Algo, HarnessError, Model, SweepSpec,
};

/// Quaternion phase-retrieval experiment runner.
///
/// Emits CSV; plotting is left to external tools. Exit codes: 0 success,
/// 2 configuration error, 3 solver divergence.
#[derive(Parser)]
#[command(name = "qpr", version, about)]
struct Cli {
    /// Worker threads for trial/block fan-out (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SolverFlags {
    /// Algorithm: qwf, pqwf, qtwf, qtaf, pqtwf, pqtaf, wf, twf, taf.
    #[arg(long, default_value = "qwf")]
    algo: String,

    /// Measurement model: quaternion, mono, concat.
    #[arg(long, default_value = "quaternion")]
    model: String,

    /// Step-size numerator (adaptive step for qwf/pqwf, bare step for the
    /// truncated variants). Defaults to the algorithm's tuned value.
    #[arg(long)]
    eta1: Option<f64>,

    /// Purification period for the pure variants.
    #[arg(long)]
    tp: Option<usize>,

    /// Gradient-update budget (wrapped variants run iters/tp rounds).
    #[arg(long)]
    iters: Option<usize>,

    /// Base seed for the experiment.
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

impl SolverFlags {
    fn resolve(&self) -> Result<(Algo, Model, qpr::solvers::SolverConfig), HarnessError> {
        let algo = Algo::parse(&self.algo)?;
        let model = Model::parse(&self.model)?;
        check_pairing(algo, model)?;
        let mut cfg = algo.default_config();
        if let Some(eta1) = self.eta1 {
            cfg.eta1 = eta1;
        }
        if let Some(tp) = self.tp {
            cfg.tp = tp;
        }
        if let Some(iters) = self.iters {
            // The budget counts gradient updates; wrapped variants spend it
            // in rounds of tp.
            cfg.iters = if algo.is_quaternion() && algo.targets_pure_signal() {
                (iters / cfg.tp.max(1)).max(1)
            } else {
                iters
            };
        }
        cfg.validate()?;
        Ok((algo, model, cfg))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Success-rate sweep over the oversampling grid n/d.
    Sweep {
        #[command(flatten)]
        solver: SolverFlags,

        /// Signal dimension.
        #[arg(long, default_value_t = 50)]
        d: usize,

        /// Ratio grid, `start:step:end` or comma list.
        #[arg(long, default_value = "3:0.5:13")]
        ratios: String,

        /// Independent trials per ratio.
        #[arg(long, default_value_t = 50)]
        trials: usize,

        /// Full-scale protocol (d=100, 100 trials) unless overridden.
        #[arg(long, default_value_t = false)]
        full: bool,

        /// Output CSV path (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convergence trace of a single seeded run.
    Trace {
        #[command(flatten)]
        solver: SolverFlags,

        /// Signal dimension.
        #[arg(long, default_value_t = 50)]
        d: usize,

        /// Single oversampling ratio n/d.
        #[arg(long, default_value = "10")]
        ratios: String,

        /// Output CSV path (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Block-wise recovery of a PPM (P6) color image.
    Image {
        #[command(flatten)]
        solver: SolverFlags,

        /// Input image, binary PPM, dimensions divisible by 16.
        #[arg(long)]
        input: PathBuf,

        /// Reconstructed image output path.
        #[arg(long)]
        out: PathBuf,

        /// Per-block CSV report path.
        #[arg(long)]
        blocks_csv: Option<PathBuf>,

        /// Measurements per block = round(oversampling * 256).
        #[arg(long, default_value_t = 7.5)]
        oversampling: f64,
    },
    /// Monte-Carlo moment identities of the measurement ensemble.
    Moments {
        /// Sample count.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,

        /// Vector dimension.
        #[arg(long, default_value_t = 8)]
        d: usize,

        /// Base seed.
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Oracle and property self-checks.
    Selftest,
}

fn emit(path: Option<&PathBuf>, content: &str) -> Result<(), HarnessError> {
    match path {
        Some(p) => std::fs::write(p, content).map_err(HarnessError::from),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(HarnessError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    }

    match cli.command {
        Command::Sweep {
            solver,
            d,
            ratios,
            trials,
            full,
            out,
        } => {
            let (algo, model, cfg) = solver.resolve()?;
            let (d, trials) = if full { (100, 100) } else { (d, trials) };
            let spec = SweepSpec {
                d,
                ratios: parse_ratios(&ratios)?,
                trials,
                algo,
                model,
                cfg,
                base_seed: solver.seed,
            };
            let rows = success_sweep(&spec)?;
            emit(out.as_ref(), &sweep_csv(&rows))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Trace {
            solver,
            d,
            ratios,
            out,
        } => {
            let (algo, _, cfg) = solver.resolve()?;
            let grid = parse_ratios(&ratios)?;
            if grid.len() != 1 {
                return Err(HarnessError::Config(
                    "trace takes exactly one ratio".into(),
                ));
            }
            let points = convergence_trace(d, grid[0], algo, &cfg, solver.seed)?;
            emit(out.as_ref(), &trace_csv(&points))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Image {
            solver,
            input,
            out,
            blocks_csv,
            oversampling,
        } => {
            let (algo, model, cfg) = solver.resolve()?;
            let img = read_ppm(&input)?;
            let job = ImageJob {
                algo,
                model,
                oversampling,
                cfg,
                base_seed: solver.seed,
                exact: false,
            };
            let outcome = image_experiment(&img, &job)?;
            write_ppm(&out, &outcome.raster)?;
            if let Some(p) = blocks_csv {
                std::fs::write(&p, qpr_cli::image::blocks_csv(&outcome.blocks))?;
            }
            let exact = outcome.blocks.iter().filter(|b| b.success).count();
            println!(
                "psnr_db={} blocks={} exact_blocks={exact}",
                outcome.psnr,
                outcome.blocks.len()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Moments { samples, d, seed } => {
            let rows = moments::run_moments(samples, d, seed);
            print!("{}", moments::render(&rows));
            if rows.iter().all(|r| r.pass) {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Selftest => {
            let results = selftest::run_selftest();
            print!("{}", selftest::render(&results));
            if results.iter().all(|r| r.pass) {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::FAILURE)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                HarnessError::Config(_) => ExitCode::from(2),
                HarnessError::Solver(qpr::Error::Diverged { .. }) => ExitCode::from(3),
                HarnessError::Solver(_) => ExitCode::FAILURE,
                HarnessError::Io(_) => ExitCode::FAILURE,
            }
        }
    }
}
