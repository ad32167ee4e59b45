//! `homog-nd`: cell problems, single ε solves, rate sweeps and mesh studies.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "homog-nd", version, about = "Periodic homogenization of nondivergence-form problems on the unit square")]
struct Cli {
    /// Output directory; the HOMOG_ND_OUT environment variable sets it when the flag is absent.
    #[arg(long, global = true, env = "HOMOG_ND_OUT", default_value = "out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve every cell problem of a coefficient and write the torus fields.
    Cell {
        /// Builtin name, `constant:a11,a12,a22`, or a torus field file.
        #[arg(long)]
        coef: String,
        /// Torus resolution.
        #[arg(long, default_value_t = 128)]
        n: usize,
    },
    /// Solve the oscillatory problem once.
    Solve(SolveArgs),
    /// Run an ε sweep and fit convergence rates.
    Rates(SweepArgs),
    /// Re-run one ε on refined grids to check that functionals are resolved.
    MeshStudy {
        #[command(flatten)]
        sweep: SweepArgs,
        /// The ε to refine at.
        #[arg(long, default_value = "1/10")]
        at: String,
        /// Refinement factors applied to the cells per period.
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        factors: Vec<usize>,
    },
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, default_value = "cbad")]
    coef: String,
    #[arg(long, default_value = "sinsin")]
    rhs: String,
    /// ε as `1/k` or an exact decimal reciprocal.
    #[arg(long)]
    eps: String,
    /// Cells per side; defaults to 16/ε.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value = "fd-nondiv")]
    backend: String,
    #[arg(long, default_value = "cordes-fft")]
    preconditioner: String,
    /// Also write the nodal difference to the homogenized solution.
    #[arg(long)]
    diff: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// A preset name (`figure-1` … `figure-5`, `boundary-corrector`).
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// A flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    coef: Option<String>,
    #[arg(long)]
    rhs: Option<String>,
    #[arg(long)]
    backend: Option<String>,
    /// Comma-separated ε list.
    #[arg(long)]
    eps: Option<String>,
    /// Comma-separated exponents p.
    #[arg(long)]
    ps: Option<String>,
    #[arg(long)]
    m_rule: Option<String>,
    /// Any config key, as `key=value`; repeatable and applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Maximum number of concurrent ε jobs; defaults to the processor count.
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Cell { coef, n } => commands::cell(&cli.out, &coef, n),
        Command::Solve(a) => commands::solve(&cli.out, &a),
        Command::Rates(a) => commands::rates(&cli.out, &a),
        Command::MeshStudy { sweep, at, factors } => commands::mesh_study(&cli.out, &sweep, &at, &factors),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}
