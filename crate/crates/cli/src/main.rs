//! `mec`: greedy minimum-entropy couplings with their entropy certificates.
//!
//! Exit status: 0 when every check passes, 1 for input or usage errors,
//! 2 when a mathematical check fails (or the oracle hits a search cap).

mod commands;
mod error;
mod input;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mec_core::oracle::DEFAULT_NODE_CAP;
use mec_core::{NumericMode, Tolerance};

use commands::{Context, VerifyArgs};
use error::CliError;
use input::Loaded;
use report::Report;

#[derive(Parser)]
#[command(
    name = "mec",
    version,
    about = "Greedy minimum-entropy coupling with entropy certificates"
)]
struct Cli {
    #[command(flatten)]
    global: Global,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Tolerance for mass sums and float comparisons
    #[arg(long, global = true, env = "MEC_TOL", default_value_t = 1e-9)]
    tol: f64,

    /// Use exact rational arithmetic
    #[arg(long, global = true)]
    exact: bool,

    /// Unmaterialized mass allowed in split and G' sequences (decimal or a/b)
    #[arg(long, global = true, env = "MEC_TAIL", default_value = "1e-12")]
    tail: String,

    /// Print one JSON document instead of text
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Args)]
struct Source {
    /// Instance document
    file: Option<PathBuf>,

    /// Inline distribution, e.g. "0.5,0.25,1/4"
    #[arg(long, conflicts_with = "file")]
    dist: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Float64,
    ExactRational,
}

#[derive(Subcommand)]
enum Command {
    /// Greedy coupling, its entropy gap to the meet and every certificate
    Couple {
        file: PathBuf,
        /// Values of z for the split-based upper bounds
        #[arg(long, value_delimiter = ',', default_values_t = commands::default_zs())]
        z: Vec<u64>,
    },
    /// Meet (greatest lower bound under majorization) of the marginals
    Meet { file: PathBuf },
    /// Closed-form G' sequence of the meet (or of --dist)
    Gprime {
        #[command(flatten)]
        source: Source,
    },
    /// Geometric split of the meet (or of --dist)
    Split {
        #[command(flatten)]
        source: Source,
        /// Geometric parameter in (0, 1)
        #[arg(long, default_value = "1/2")]
        gamma: String,
    },
    /// Exhaustive minimum-entropy search, compared against greedy
    Oracle {
        file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
        max_nodes: u64,
        #[arg(long)]
        time_limit_ms: Option<u64>,
    },
    /// Greedy-versus-meet gap for the uniform majorizing set
    Uniform {
        #[arg(long, default_value_t = 2)]
        n_min: u64,
        #[arg(long, default_value_t = 10)]
        n_max: u64,
    },
    /// Checks every bound on seeded random instances
    Verify {
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        /// Marginals per instance
        #[arg(long, default_value_t = 2)]
        m: usize,
        /// States per marginal
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_delimiter = ',', default_values_t = commands::default_zs())]
        z: Vec<u64>,
        /// Arithmetic for the checks (--exact implies exact-rational)
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long, default_value_t = DEFAULT_NODE_CAP)]
        max_nodes: u64,
        #[arg(long)]
        time_limit_ms: Option<u64>,
    },
}

macro_rules! dispatch {
    ($loaded:expr, |$inst:ident| $body:expr) => {
        match $loaded {
            Loaded::Float($inst) => $body,
            Loaded::Exact($inst) => $body,
        }
    };
}

fn load(source: Source, g: &Global, tol: Tolerance) -> Result<Loaded, CliError> {
    match (source.file, source.dist) {
        (Some(path), None) => input::load_file(&path, g.exact, tol),
        (None, Some(text)) => input::parse_inline(&text, g.exact, tol),
        _ => Err(CliError::Input("give an instance file or --dist".into())),
    }
}

fn run(cli: Cli) -> Result<Report, CliError> {
    let g = cli.global;
    if !(g.tol.is_finite() && g.tol >= 0.0) {
        return Err(CliError::Input(format!(
            "--tol: {} must be finite and nonnegative",
            g.tol
        )));
    }
    let tol = Tolerance::uniform(g.tol);
    let ctx = Context {
        tol,
        tail: g.tail.clone(),
    };
    match cli.command {
        Command::Couple { file, z } => {
            dispatch!(
                input::load_file(&file, g.exact, tol)?,
                |i| commands::couple(&i, &z, &ctx)
            )
        }
        Command::Meet { file } => {
            dispatch!(input::load_file(&file, g.exact, tol)?, |i| {
                commands::meet_cmd(&i, &ctx)
            })
        }
        Command::Gprime { source } => {
            dispatch!(load(source, &g, tol)?, |i| commands::gprime_cmd(&i, &ctx))
        }
        Command::Split { source, gamma } => {
            dispatch!(load(source, &g, tol)?, |i| commands::split_cmd(
                &i, &gamma, &ctx
            ))
        }
        Command::Oracle {
            file,
            max_nodes,
            time_limit_ms,
        } => {
            let caps = commands::caps(max_nodes, time_limit_ms);
            dispatch!(input::load_file(&file, g.exact, tol)?, |i| {
                commands::oracle_cmd(&i, caps, &ctx)
            })
        }
        Command::Uniform { n_min, n_max } => commands::uniform_cmd(n_min, n_max),
        Command::Verify {
            trials,
            m,
            n,
            seed,
            z,
            mode,
            max_nodes,
            time_limit_ms,
        } => {
            let mode = match mode {
                Some(ModeArg::ExactRational) => NumericMode::ExactRational,
                Some(ModeArg::Float64) if g.exact => {
                    return Err(CliError::Input(
                        "--exact conflicts with --mode float64".into(),
                    ))
                }
                _ if g.exact => NumericMode::ExactRational,
                _ => NumericMode::Float64,
            };
            let args = VerifyArgs {
                trials,
                m,
                n,
                seed,
                zs: z,
                mode,
                caps: commands::caps(max_nodes, time_limit_ms),
            };
            commands::verify_cmd(args, &ctx)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // help and version are successful exits; usage errors are input errors
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let json = cli.global.json;
    match run(cli) {
        Ok(report) => {
            let mut out = std::io::stdout().lock();
            let _ = out.write_all(report.render(json).as_bytes());
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
