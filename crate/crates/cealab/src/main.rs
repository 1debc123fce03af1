//! Experiment command line: seeded, replayable batches with CSV output.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};

use cealab::experiments::{
    self, EstimatePijCmd, NkGenCmd, OptimalBetaCmd, OptimalBetaCompute, OptimizeCmd, OracleCmd,
    ProblemKind, TakeoverCmd,
};
use cealab::nk::NkModel;
use cealab::pem::PijPooling;
use cealab::takeover::SeedPlacement;

#[derive(Parser)]
#[command(
    name = "cealab",
    version,
    about = "Cellular evolutionary algorithm laboratory with tunable centric selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Selection-only takeover experiments over a list of beta values.
    Takeover(TakeoverArgs),
    /// Beta-sweep optimization runs on a QAP or NK instance.
    Optimize(OptimizeArgs),
    /// Estimate per-mating-type success probabilities from full runs.
    EstimatePij(EstimatePijArgs),
    /// Optimal beta per estimation window from a sigma profile and P_ij.
    OptimalBeta(OptimalBetaArgs),
    /// Generate and serialize an NK landscape instance.
    NkGen(NkGenArgs),
    /// Brute-force optima for small instances.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Base seed; replicate r runs with seed + r.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Thread count for replicate batches (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory for CSV files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Echo the resolved parameters into <out>/config.txt.
    #[arg(long, default_value_t = true, action = ArgAction::Set, value_name = "BOOL")]
    dump_config: bool,
}

#[derive(Args)]
struct TakeoverArgs {
    /// Square grid side length.
    #[arg(long)]
    side: usize,
    /// Comma-separated beta values.
    #[arg(long, value_delimiter = ',', required = true)]
    beta: Vec<f64>,
    /// Replicates per beta.
    #[arg(long, default_value_t = 100)]
    runs: u64,
    /// Generation cap (default 100 * side); capped runs report `undefined`.
    #[arg(long)]
    max_generations: Option<u64>,
    /// Fix the averaged growth/mating series length (for sigma profiles).
    #[arg(long)]
    horizon: Option<usize>,
    /// Placement of the initial best solution.
    #[arg(long, default_value = "random")]
    seed_cell: SeedPlacement,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Problem backend: qap or nk.
    #[arg(long)]
    problem: ProblemKind,
    /// Instance file (QAPLIB text for qap, .nk for nk).
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 20)]
    width: usize,
    #[arg(long, default_value_t = 20)]
    height: usize,
    /// Comma-separated beta values to sweep.
    #[arg(long, value_delimiter = ',', required = true)]
    beta: Vec<f64>,
    #[arg(long, default_value_t = 1500)]
    generations: u64,
    /// Independent runs per beta.
    #[arg(long, default_value_t = 200)]
    runs: u64,
    /// Also write the per-generation best series (series.csv).
    #[arg(long, default_value_t = true, action = ArgAction::Set, value_name = "BOOL")]
    series: bool,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct EstimatePijArgs {
    #[arg(long)]
    problem: ProblemKind,
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 20)]
    width: usize,
    #[arg(long, default_value_t = 20)]
    height: usize,
    /// Selection parameter of the estimation runs.
    #[arg(long, default_value_t = 0.2)]
    beta: f64,
    #[arg(long, default_value_t = 500)]
    runs: u64,
    #[arg(long, default_value_t = 1500)]
    generations: u64,
    /// Generations per estimation bin.
    #[arg(long, default_value_t = 50)]
    window: u64,
    /// Outcome pooling per window: windowed or cumulative.
    #[arg(long, default_value = "windowed")]
    pooling: PijPooling,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct OptimalBetaArgs {
    /// matings.csv from the takeover command (sigma profile).
    #[arg(long)]
    matings: Option<PathBuf>,
    /// pij.csv from the estimate-pij command.
    #[arg(long)]
    pij: Option<PathBuf>,
    /// Horizon T for the cumulated mating counts.
    #[arg(long, default_value_t = 100)]
    horizon: usize,
    /// Cumulate sigma up to each window's end instead of reusing sigma(T).
    #[arg(long, default_value_t = false)]
    per_window_sigma: bool,

    /// Compute inputs in-process: problem backend (qap or nk).
    #[arg(long)]
    problem: Option<ProblemKind>,
    /// Compute inputs in-process: instance file.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Square grid side for the in-process experiments.
    #[arg(long, default_value_t = 20)]
    side: usize,
    /// Sigma-profile beta grid (default 0.0,0.05,...,1.0).
    #[arg(long, value_delimiter = ',')]
    beta_grid: Option<Vec<f64>>,
    /// Selection-only replicates per grid beta.
    #[arg(long, default_value_t = 1000)]
    sigma_runs: u64,
    /// Selection parameter of the estimation runs.
    #[arg(long, default_value_t = 0.2)]
    pij_beta: f64,
    /// Estimation runs.
    #[arg(long, default_value_t = 500)]
    pij_runs: u64,
    #[arg(long, default_value_t = 1500)]
    generations: u64,
    #[arg(long, default_value_t = 50)]
    window: u64,
    /// Outcome pooling per window: windowed or cumulative.
    #[arg(long, default_value = "windowed")]
    pooling: PijPooling,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct NkGenArgs {
    /// Bit-string length.
    #[arg(long)]
    n: usize,
    /// Epistasis level (0 <= K <= N-1).
    #[arg(long)]
    k: usize,
    /// Link layout: adjacent or random.
    #[arg(long, default_value = "random")]
    model: NkModel,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output instance file.
    #[arg(long)]
    out_file: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    /// NK instance (N <= 24).
    #[arg(long)]
    nk: Option<PathBuf>,
    /// QAP instance (n <= 4).
    #[arg(long)]
    qap: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Echo the resolved parameters into <out>/config.txt.
    #[arg(long, default_value_t = true, action = ArgAction::Set, value_name = "BOOL")]
    dump_config: bool,
}

fn dispatch(cli: Cli) -> Result<(), experiments::ExperimentError> {
    match cli.command {
        Command::Takeover(args) => experiments::cmd_takeover(&TakeoverCmd {
            side: args.side,
            betas: args.beta,
            runs: args.runs,
            max_generations: args.max_generations,
            horizon: args.horizon,
            seed_cell: args.seed_cell,
            seed: args.common.seed,
            jobs: args.common.jobs,
            out: args.common.out,
            dump_config: args.common.dump_config,
        }),
        Command::Optimize(args) => experiments::cmd_optimize(&OptimizeCmd {
            problem: args.problem,
            instance: args.instance,
            width: args.width,
            height: args.height,
            betas: args.beta,
            generations: args.generations,
            runs: args.runs,
            seed: args.common.seed,
            jobs: args.common.jobs,
            out: args.common.out,
            dump_config: args.common.dump_config,
            write_series: args.series,
        }),
        Command::EstimatePij(args) => experiments::cmd_estimate_pij(&EstimatePijCmd {
            problem: args.problem,
            instance: args.instance,
            width: args.width,
            height: args.height,
            beta: args.beta,
            runs: args.runs,
            generations: args.generations,
            window: args.window,
            pooling: args.pooling,
            seed: args.common.seed,
            jobs: args.common.jobs,
            out: args.common.out,
            dump_config: args.common.dump_config,
        }),
        Command::OptimalBeta(args) => {
            let compute = match (&args.problem, &args.instance) {
                (Some(problem), Some(instance)) => Some(OptimalBetaCompute {
                    problem: *problem,
                    instance: instance.clone(),
                    side: args.side,
                    betas: args
                        .beta_grid
                        .clone()
                        .unwrap_or_else(experiments::default_beta_grid),
                    sigma_runs: args.sigma_runs,
                    pij_beta: args.pij_beta,
                    pij_runs: args.pij_runs,
                    generations: args.generations,
                    window: args.window,
                    pooling: args.pooling,
                    seed: args.common.seed,
                }),
                _ => None,
            };
            experiments::cmd_optimal_beta(&OptimalBetaCmd {
                matings: args.matings,
                pij: args.pij,
                compute,
                horizon: args.horizon,
                per_window_sigma: args.per_window_sigma,
                jobs: args.common.jobs,
                out: args.common.out,
                dump_config: args.common.dump_config,
            })
        }
        Command::NkGen(args) => experiments::cmd_nk_gen(&NkGenCmd {
            n: args.n,
            k: args.k,
            model: args.model,
            seed: args.seed,
            out_file: args.out_file,
        }),
        Command::Oracle(args) => experiments::cmd_oracle(&OracleCmd {
            nk: args.nk,
            qap: args.qap,
            out: args.out,
            dump_config: args.dump_config,
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::FAILURE
        }
    }
}
