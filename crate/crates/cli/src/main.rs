use std::fs;
use std::io::Write;
use std::panic;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use momentlab::tensor::{SolverChoice, AUTO_DENSE_LIMIT};
use momentlab::verify::{self, CommandKind, Decompose, Exit, OutputFormat, Profile, Report, RunConfig};
use momentlab::walk::WalkKind;

#[derive(Parser)]
#[command(name = "momentlab", version, about = "Moment-operator gaps, coupling estimates and bound arithmetic")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral gap of a walk's moment operator, checked against its proven bound.
    Gap(GapArgs),
    /// Monte Carlo contraction of the coupled auxiliary walk.
    Coupling(CouplingArgs),
    /// Closed-form bound sheet and arithmetic checks.
    Bounds(BoundsArgs),
    /// Runs the acceptance criteria and prints a pass/fail matrix.
    VerifyAll(VerifyArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Largest dimension the automatic solver choice treats densely.
    #[arg(long, default_value_t = AUTO_DENSE_LIMIT)]
    dense_cap: usize,
    #[arg(long, value_enum, default_value_t = Solver::Auto)]
    solver: Solver,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Output file; defaults to `$MOMENTLAB_OUT_DIR/<command>.<ext>` or stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, env = "MOMENTLAB_OUT_DIR")]
    out_dir: Option<PathBuf>,
    /// Recorded in the report; kernels are single-threaded, so every run is reference mode.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Force assertion rows whose id contains this string to fail.
    #[arg(long = "inject-fault")]
    inject_fault: Vec<String>,
}

#[derive(Args)]
struct GapArgs {
    #[arg(long, value_enum, default_value_t = Walk::Local)]
    walk: Walk,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    t: usize,
    /// Also check k-step convolution and design quality.
    #[arg(long)]
    k: Option<usize>,
    /// Sigma walk with this many Clifford-brickwork steps in place of global Cliffords.
    #[arg(long)]
    inner_k: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CouplingArgs {
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Moment order used for the decay constants and the rate check.
    #[arg(long, default_value_t = 2)]
    t: usize,
    /// Step count for the reported decay constants.
    #[arg(long)]
    k: Option<usize>,
    /// Perturbation size; 0 runs the X = Y smoke test.
    #[arg(long, default_value_t = 1e-4)]
    eps: f64,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    t: usize,
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    /// Sweep the reduction inequality up to this t.
    #[arg(long)]
    t_max: Option<u64>,
    #[arg(long, value_enum)]
    decompose: Option<Which>,
    /// Include design depths.
    #[arg(long)]
    depth: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = ProfileArg::Quick)]
    profile: ProfileArg,
    /// Criterion number, key or tag; repeatable.
    #[arg(long)]
    only: Vec<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum Walk {
    Local,
    Brickwork,
    CliffordBrickwork,
    Sigma,
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Auto,
    Dense,
    Krylov,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Old,
    New,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Quick,
    Full,
}

impl Common {
    fn apply(&self, cfg: &mut RunConfig) {
        cfg.seed = self.seed;
        cfg.dense_cap = self.dense_cap;
        cfg.solver = match self.solver {
            Solver::Auto => SolverChoice::Auto,
            Solver::Dense => SolverChoice::Dense,
            Solver::Krylov => SolverChoice::Krylov,
        };
        cfg.format = match self.format {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
        };
        cfg.output = self.output.clone().or_else(|| {
            self.out_dir.as_ref().map(|d| d.join(format!("{}.{}", cfg.command.as_str(), cfg.format.extension())))
        });
        cfg.threads = self.threads;
        cfg.inject_fault = self.inject_fault.clone();
    }
}

fn config(cli: Cli) -> RunConfig {
    match cli.command {
        Command::Gap(a) => {
            let mut cfg = RunConfig::new(CommandKind::Gap);
            cfg.walk = match a.walk {
                Walk::Local => WalkKind::Local,
                Walk::Brickwork => WalkKind::Brickwork,
                Walk::CliffordBrickwork => WalkKind::CliffordBrickwork,
                Walk::Sigma => WalkKind::Sigma,
            };
            (cfg.n, cfg.t, cfg.k, cfg.inner_k, cfg.epsilon) = (a.n, a.t, a.k, a.inner_k, a.eps);
            a.common.apply(&mut cfg);
            cfg
        }
        Command::Coupling(a) => {
            let mut cfg = RunConfig::new(CommandKind::Coupling);
            (cfg.n, cfg.t, cfg.k, cfg.epsilon, cfg.samples) = (a.n, a.t, a.k, a.eps, a.samples);
            a.common.apply(&mut cfg);
            cfg
        }
        Command::Bounds(a) => {
            let mut cfg = RunConfig::new(CommandKind::Bounds);
            (cfg.n, cfg.t, cfg.epsilon) = (a.n, a.t, a.eps);
            cfg.bounds.t_max = a.t_max;
            cfg.bounds.depth = a.depth;
            cfg.bounds.decompose = a.decompose.map(|w| match w {
                Which::Old => Decompose::Old,
                Which::New => Decompose::New,
            });
            a.common.apply(&mut cfg);
            cfg
        }
        Command::VerifyAll(a) => {
            let mut cfg = RunConfig::new(CommandKind::VerifyAll);
            cfg.profile = match a.profile {
                ProfileArg::Quick => Profile::Quick,
                ProfileArg::Full => Profile::Full,
            };
            cfg.only = a.only;
            a.common.apply(&mut cfg);
            cfg
        }
    }
}

fn emit(report: &Report) -> momentlab::Result<()> {
    let text = report.render()?;
    match &report.config.output {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| momentlab::Error::Serialization(e.to_string()))?;
            }
            fs::write(path, text).map_err(|e| momentlab::Error::Serialization(e.to_string()))?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| momentlab::Error::Serialization(e.to_string()))?;
        }
    }
    Ok(())
}

fn summarize(report: &Report) {
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    for a in report.failing() {
        let note = if a.fault_injected { " (injected)" } else { "" };
        eprintln!("FAIL {}: value {} vs limit {}{note}", a.id, a.value, a.limit);
    }
    let failed = report.failing().count();
    eprintln!("{}: {} of {} assertions passed", if failed == 0 { "PASS" } else { "FAIL" }, report.assertions.len() - failed, report.assertions.len());
}

fn main() -> ExitCode {
    let cfg = config(Cli::parse());
    let outcome = panic::catch_unwind(|| verify::run(&cfg));
    let exit = match outcome {
        Err(_) => Exit::Internal,
        Ok(Err(e)) => {
            let exit = Exit::for_error(&e);
            eprintln!("error: {e}");
            if exit == Exit::Infeasible {
                eprintln!("hint: walks need 4^(n t) <= 2^20; dense solves need --dense-cap (at most 2^20) or --solver krylov");
            }
            exit
        }
        Ok(Ok(report)) => match emit(&report) {
            Ok(()) => {
                summarize(&report);
                report.exit()
            }
            Err(e) => {
                eprintln!("error: {e}");
                Exit::Internal
            }
        },
    };
    ExitCode::from(exit.code() as u8)
}
