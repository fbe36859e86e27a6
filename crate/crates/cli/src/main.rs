//! `expoly`: normalizing constants, fitting, order selection, chamber
//! analysis, verification and Monte Carlo experiments for
//! exponential-polynomial models.
//!
//! Exit codes: 0 success, 1 verification failure, 2 input error,
//! 3 non-convergence or numerical failure.

mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use expoly::inference::Mode;

#[derive(Parser)]
#[command(name = "expoly", version, about = "Holonomic gradient methods for exponential-polynomial models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Halfline,
    Realline,
    Bivariate,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Halfline => Mode::HalfLine,
            ModeArg::Realline => Mode::RealLine,
            ModeArg::Bivariate => Mode::Bivariate,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StatisticArg {
    Standardized,
    Score,
}

#[derive(Args)]
struct ThetaArgs {
    /// Comma-separated coefficients (bivariate: θ10,θ01,θ20,θ11,θ02,…).
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<String>,
    /// JSON file {"d":…,"coeffs":[…]} or, bivariate, {"d":…,"coeffs":{"ij":…}}.
    #[arg(long)]
    theta_file: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Normalizing constant A(θ) and its derivatives.
    Normconst {
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[command(flatten)]
        theta: ThetaArgs,
        /// Degree (required for bivariate lists).
        #[arg(long)]
        d: Option<usize>,
        /// Highest derivative order reported (default: the model order).
        #[arg(long)]
        order: Option<usize>,
        /// Also evaluate A by adaptive quadrature.
        #[arg(long)]
        verify: bool,
        /// Relative tolerance of the adaptive ODE solver.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Maximum-likelihood fit of a sample (headerless CSV).
    Fit {
        /// Headerless CSV: one column (univariate) or two (bivariate)
        input: PathBuf,
        #[arg(long, value_enum)]
        mode: ModeArg,
        /// Model order (univariate) or total degree (bivariate)
        #[arg(long)]
        d: usize,
        /// Relative tolerance of the adaptive ODE solver
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Forward order selection by score tests.
    Order {
        /// Headerless CSV sample
        input: PathBuf,
        #[arg(long, value_enum, default_value = "halfline")]
        mode: ModeArg,
        /// Level of each score test
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Highest order considered
        #[arg(long, default_value_t = 4)]
        dmax: usize,
        /// Relative tolerance of the adaptive ODE solver
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Monte Carlo experiment: sample from θ*, refit, summarize.
    Simulate {
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[command(flatten)]
        theta: ThetaArgs,
        /// Sample size per replication
        #[arg(long, default_value_t = 1000)]
        n: usize,
        /// Number of replications
        #[arg(long, default_value_t = 200)]
        reps: usize,
        /// Base seed; replication r uses its own stream derived from it
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Level of the score test
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Defaults to the score test when θ* ends in 0.
        #[arg(long, value_enum)]
        statistic: Option<StatisticArg>,
        /// Directory for replications.csv and summary.json.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Relative tolerance of the adaptive ODE solver
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Chamber classification of top-degree forms.
    Chambers {
        /// Degree of the top form
        #[arg(long, default_value_t = 3)]
        d: usize,
        /// (θ12,θ21) on the slice θ30 = θ03 = -1 (d = 3); repeatable.
        #[arg(long, allow_hyphen_values = true)]
        point: Vec<String>,
        /// Full top coefficients θd0,…,θ0d; repeatable.
        #[arg(long, allow_hyphen_values = true)]
        top: Vec<String>,
        /// Sweep lo,hi,step over (θ12,θ21) and write chambers_grid.csv (d = 3).
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        /// Output directory (required with --grid)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the property suites.
    Verify {
        /// Run one suite: domain, polyalg, chambers, closed_form, oracle, holo_uni, detp, holo_bi, bivariate_transport, inference, sampler
        #[arg(long)]
        suite: Option<String>,
        /// Degree override for suites that take one
        #[arg(long)]
        d: Option<usize>,
        /// RNG seed for the randomized checks
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Normconst {
            mode,
            theta,
            d,
            order,
            verify,
            tol,
        } => commands::normconst(
            mode.into(),
            theta.theta.as_deref(),
            theta.theta_file.as_deref(),
            d,
            order,
            verify,
            tol,
        ),
        Command::Fit { input, mode, d, tol } => commands::fit(&input, mode.into(), d, tol),
        Command::Order {
            input,
            mode,
            alpha,
            dmax,
            tol,
        } => commands::order(&input, mode.into(), alpha, dmax, tol),
        Command::Simulate {
            mode,
            theta,
            n,
            reps,
            seed,
            alpha,
            statistic,
            out,
            tol,
        } => commands::simulate(commands::SimulateArgs {
            mode: mode.into(),
            theta: theta.theta.as_deref(),
            theta_file: theta.theta_file.as_deref(),
            n,
            reps,
            seed,
            alpha,
            statistic: statistic.map(|s| match s {
                StatisticArg::Standardized => expoly::experiment::Statistic::Standardized,
                StatisticArg::Score => expoly::experiment::Statistic::ScoreTest,
            }),
            out: out.as_deref(),
            tol,
        }),
        Command::Chambers {
            d,
            point,
            top,
            grid,
            out,
        } => commands::chambers(d, &point, &top, grid.as_deref(), out.as_deref()),
        Command::Verify { suite, d, seed } => commands::verify(suite.as_deref(), d, seed),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
