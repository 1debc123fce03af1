//! Batch experiment drivers behind the command-line tool.
//!
//! Every command takes a flat request struct, validates it, runs seeded
//! replicate batches (optionally on a bounded thread pool) and writes CSV
//! files plus a `config.txt` provenance echo into the output directory.
//! Replicate `r` always runs with seed `base_seed + r`, and output rows are
//! emitted in a fixed order, so reruns with the same seed produce
//! byte-identical files regardless of `--jobs`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{self, RunLog};
use crate::grid::{GridConfig, Orientation};
use crate::nk::{NkLandscape, NkModel, NkParseError};
use crate::pem::{
    self, optimal_beta, optimal_beta_trajectory, PijPooling, PijSeries, SigmaHorizon,
    SigmaProfile,
};
use crate::problem::Problem;
use crate::qap::{self, QapInstance, QapParseError};
use crate::stats::mean_std;
use crate::takeover::{takeover_stats, MeanCounts, SeedPlacement, TakeoverStats};
use crate::{replicate_seed, RunRng};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid --{key}: {message}")]
    InvalidConfig { key: &'static str, message: String },
    #[error("missing required inputs: {0}")]
    MissingInputs(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    QapParse {
        path: PathBuf,
        source: QapParseError,
    },
    #[error("{path}: {source}")]
    NkParse { path: PathBuf, source: NkParseError },
    #[error("{path} line {line}: {message}")]
    CsvParse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Refused(String),
}

fn invalid(key: &'static str, message: impl Into<String>) -> ExperimentError {
    ExperimentError::InvalidConfig {
        key,
        message: message.into(),
    }
}

fn io_err(path: &Path, source: std::io::Error) -> ExperimentError {
    ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Problem backend selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Qap,
    Nk,
}

impl FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "qap" => Ok(ProblemKind::Qap),
            "nk" => Ok(ProblemKind::Nk),
            other => Err(format!("unknown problem {other:?} (qap|nk)")),
        }
    }
}

impl std::fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProblemKind::Qap => "qap",
            ProblemKind::Nk => "nk",
        })
    }
}

fn validate_betas(betas: &[f64]) -> Result<(), ExperimentError> {
    if betas.is_empty() {
        return Err(invalid("beta", "at least one value required"));
    }
    for &beta in betas {
        if !(0.0..=1.0).contains(&beta) {
            return Err(invalid("beta", format!("{beta} outside [0, 1]")));
        }
    }
    Ok(())
}

/// Run `body` on a dedicated pool of `jobs` threads when given.
fn with_pool<T: Send>(jobs: Option<usize>, body: impl FnOnce() -> T + Send) -> T {
    match jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .expect("thread pool")
            .install(body),
        None => body(),
    }
}

fn ensure_out_dir(out: &Path) -> Result<(), ExperimentError> {
    std::fs::create_dir_all(out).map_err(|e| io_err(out, e))
}

fn write_file(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    std::fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn dump_config(out: &Path, command: &str, entries: &[(&str, String)]) -> Result<(), ExperimentError> {
    let mut text = format!("command = {command}\n");
    for (key, value) in entries {
        let _ = writeln!(text, "{key} = {value}");
    }
    write_file(&out.join("config.txt"), &text)
}

fn join_floats(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

// ---------------------------------------------------------------------------
// takeover
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct TakeoverCmd {
    pub side: usize,
    pub betas: Vec<f64>,
    pub runs: u64,
    /// Generation cap; defaults to `100 * side`.
    pub max_generations: Option<u64>,
    /// Pad or truncate the averaged series to exactly this many
    /// generations (at most the cap), so downstream sigma profiles cover a
    /// fixed horizon.
    pub horizon: Option<usize>,
    pub seed_cell: SeedPlacement,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub out: PathBuf,
    pub dump_config: bool,
}

/// Write `takeover.csv`, `growth.csv` and `matings.csv` for every requested
/// `beta`.
pub fn cmd_takeover(cmd: &TakeoverCmd) -> Result<(), ExperimentError> {
    if cmd.side < 1 {
        return Err(invalid("side", "must be >= 1"));
    }
    validate_betas(&cmd.betas)?;
    if cmd.runs < 1 {
        return Err(invalid("runs", "must be >= 1"));
    }
    let max_generations = cmd
        .max_generations
        .unwrap_or_else(|| crate::takeover::default_takeover_cap(cmd.side));
    if max_generations < 1 {
        return Err(invalid("max-generations", "must be >= 1"));
    }
    if let Some(horizon) = cmd.horizon {
        if horizon < 1 || horizon as u64 > max_generations {
            return Err(invalid(
                "horizon",
                format!("must lie in 1..={max_generations}"),
            ));
        }
    }
    ensure_out_dir(&cmd.out)?;

    let all_stats: Vec<TakeoverStats> = with_pool(cmd.jobs, || {
        cmd.betas
            .iter()
            .map(|&beta| {
                takeover_stats(
                    cmd.side,
                    beta,
                    cmd.runs,
                    cmd.seed,
                    max_generations,
                    cmd.horizon,
                    cmd.seed_cell,
                )
            })
            .collect()
    });

    let mut takeover_csv = String::from("beta,replicate,takeover_time\n");
    let mut growth_csv = String::from("beta,t,mean_N,mean_dN\n");
    let mut matings_csv = String::from("beta,t,mean_n00,mean_n01,mean_n11\n");
    for stats in &all_stats {
        for (replicate, record) in stats.records.iter().enumerate() {
            let time = match record.takeover_time {
                Some(t) => t.to_string(),
                None => "undefined".to_string(),
            };
            let _ = writeln!(takeover_csv, "{},{replicate},{time}", stats.beta);
        }
        let rates = stats.mean_growth_rate();
        for (t, &mean_n) in stats.mean_n.iter().enumerate() {
            let dn = if t == 0 { 0.0 } else { rates[t - 1] };
            let _ = writeln!(growth_csv, "{},{t},{mean_n},{dn}", stats.beta);
        }
        for (t0, counts) in stats.mean_counts.iter().enumerate() {
            let _ = writeln!(
                matings_csv,
                "{},{},{},{},{}",
                stats.beta,
                t0 + 1,
                counts.n00,
                counts.n01,
                counts.n11
            );
        }
    }
    write_file(&cmd.out.join("takeover.csv"), &takeover_csv)?;
    write_file(&cmd.out.join("growth.csv"), &growth_csv)?;
    write_file(&cmd.out.join("matings.csv"), &matings_csv)?;

    if cmd.dump_config {
        dump_config(
            &cmd.out,
            "takeover",
            &[
                ("side", cmd.side.to_string()),
                ("beta", join_floats(&cmd.betas)),
                ("runs", cmd.runs.to_string()),
                ("max_generations", max_generations.to_string()),
                (
                    "horizon",
                    cmd.horizon.map_or("natural".into(), |h| h.to_string()),
                ),
                (
                    "seed_cell",
                    match cmd.seed_cell {
                        SeedPlacement::Random => "random".into(),
                        SeedPlacement::Center => "center".into(),
                    },
                ),
                ("seed", cmd.seed.to_string()),
            ],
        )?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// optimize
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct OptimizeCmd {
    pub problem: ProblemKind,
    pub instance: PathBuf,
    pub width: usize,
    pub height: usize,
    pub betas: Vec<f64>,
    pub generations: u64,
    pub runs: u64,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub out: PathBuf,
    pub dump_config: bool,
    /// Also write the per-generation best series (`series.csv`).
    pub write_series: bool,
}

/// Load the configured instance and hand it to `body`.
fn with_problem<T>(
    kind: ProblemKind,
    instance: &Path,
    body: impl FnOnce(&dyn ErasedProblem) -> T,
) -> Result<T, ExperimentError> {
    match kind {
        ProblemKind::Qap => {
            let problem = qap::load_qaplib(instance).map_err(|source| match source {
                QapParseError::Io(e) => io_err(instance, e),
                other => ExperimentError::QapParse {
                    path: instance.to_path_buf(),
                    source: other,
                },
            })?;
            Ok(body(&QapErased(problem)))
        }
        ProblemKind::Nk => {
            let problem = NkLandscape::load(instance).map_err(|source| match source {
                NkParseError::Io(e) => io_err(instance, e),
                other => ExperimentError::NkParse {
                    path: instance.to_path_buf(),
                    source: other,
                },
            })?;
            Ok(body(&NkErased(problem)))
        }
    }
}

/// Object-safe view of a problem backend: enough for batched runs.
trait ErasedProblem: Sync {
    fn orientation(&self) -> Orientation;
    fn run(&self, config: &GridConfig, generations: u64, seed: u64) -> RunLog;
    fn estimate_pij(
        &self,
        config: &GridConfig,
        runs: u64,
        generations: u64,
        window: u64,
        base_seed: u64,
        pooling: PijPooling,
    ) -> PijSeries;
}

struct QapErased(QapInstance);
struct NkErased(NkLandscape);

impl ErasedProblem for QapErased {
    fn orientation(&self) -> Orientation {
        Problem::orientation(&self.0)
    }

    fn run(&self, config: &GridConfig, generations: u64, seed: u64) -> RunLog {
        engine::run(&self.0, config, generations, seed)
    }

    fn estimate_pij(
        &self,
        config: &GridConfig,
        runs: u64,
        generations: u64,
        window: u64,
        base_seed: u64,
        pooling: PijPooling,
    ) -> PijSeries {
        pem::estimate_pij(&self.0, config, runs, generations, window, base_seed, pooling)
    }
}

impl ErasedProblem for NkErased {
    fn orientation(&self) -> Orientation {
        Problem::orientation(&self.0)
    }

    fn run(&self, config: &GridConfig, generations: u64, seed: u64) -> RunLog {
        engine::run(&self.0, config, generations, seed)
    }

    fn estimate_pij(
        &self,
        config: &GridConfig,
        runs: u64,
        generations: u64,
        window: u64,
        base_seed: u64,
        pooling: PijPooling,
    ) -> PijSeries {
        pem::estimate_pij(&self.0, config, runs, generations, window, base_seed, pooling)
    }
}

/// Per-beta seeded batches; write `summary.csv`, `runs.csv` and optionally
/// `series.csv`.
pub fn cmd_optimize(cmd: &OptimizeCmd) -> Result<(), ExperimentError> {
    if cmd.width < 1 || cmd.height < 1 {
        return Err(invalid("width", "grid dimensions must be >= 1"));
    }
    validate_betas(&cmd.betas)?;
    if cmd.generations < 1 {
        return Err(invalid("generations", "must be >= 1"));
    }
    if cmd.runs < 1 {
        return Err(invalid("runs", "must be >= 1"));
    }
    ensure_out_dir(&cmd.out)?;

    with_problem(cmd.problem, &cmd.instance, |problem| {
        let sweeps: Vec<(f64, Vec<RunLog>)> = with_pool(cmd.jobs, || {
            cmd.betas
                .iter()
                .map(|&beta| {
                    let config =
                        GridConfig::new(cmd.width, cmd.height, beta, problem.orientation());
                    let logs: Vec<RunLog> = (0..cmd.runs)
                        .into_par_iter()
                        .map(|r| {
                            problem.run(&config, cmd.generations, replicate_seed(cmd.seed, r))
                        })
                        .collect();
                    (beta, logs)
                })
                .collect()
        });

        let mut summary_csv = String::from("beta,mean_best,std_best\n");
        let mut runs_csv = String::from("beta,run,best\n");
        let mut series_csv = String::from("beta,run,t,best_fitness\n");
        for (beta, logs) in &sweeps {
            let bests: Vec<f64> = logs.iter().map(|log| log.final_best()).collect();
            let (mean, std) = mean_std(&bests);
            let _ = writeln!(summary_csv, "{beta},{mean},{std}");
            for (run, log) in logs.iter().enumerate() {
                let _ = writeln!(runs_csv, "{beta},{run},{}", log.final_best());
                if cmd.write_series {
                    for (t, best) in log.best_fitness_series.iter().enumerate() {
                        let _ = writeln!(series_csv, "{beta},{run},{t},{best}");
                    }
                }
            }
        }
        write_file(&cmd.out.join("summary.csv"), &summary_csv)?;
        write_file(&cmd.out.join("runs.csv"), &runs_csv)?;
        if cmd.write_series {
            write_file(&cmd.out.join("series.csv"), &series_csv)?;
        }

        if cmd.dump_config {
            dump_config(
                &cmd.out,
                "optimize",
                &[
                    ("problem", cmd.problem.to_string()),
                    ("instance", cmd.instance.display().to_string()),
                    ("width", cmd.width.to_string()),
                    ("height", cmd.height.to_string()),
                    ("beta", join_floats(&cmd.betas)),
                    ("generations", cmd.generations.to_string()),
                    ("runs", cmd.runs.to_string()),
                    ("seed", cmd.seed.to_string()),
                ],
            )?;
        }
        Ok(())
    })?
}

// ---------------------------------------------------------------------------
// estimate-pij
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct EstimatePijCmd {
    pub problem: ProblemKind,
    pub instance: PathBuf,
    pub width: usize,
    pub height: usize,
    pub beta: f64,
    pub runs: u64,
    pub generations: u64,
    pub window: u64,
    pub pooling: PijPooling,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub out: PathBuf,
    pub dump_config: bool,
}

fn pij_csv(series: &PijSeries) -> String {
    let mut csv = String::from(
        "window_start,p00,p01,p11,trials_00,trials_01,trials_11,low_confidence\n",
    );
    for window in &series.windows {
        let mut flags: Vec<&str> = Vec::new();
        for (i, label) in ["00", "01", "11"].iter().enumerate() {
            if window.low_confidence[i] {
                flags.push(label);
            }
        }
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            window.window_start,
            window.probs.p00,
            window.probs.p01,
            window.probs.p11,
            window.trials[0],
            window.trials[1],
            window.trials[2],
            flags.join(" ")
        );
    }
    csv
}

/// Estimate the per-type success probabilities and write `pij.csv`.
pub fn cmd_estimate_pij(cmd: &EstimatePijCmd) -> Result<(), ExperimentError> {
    if cmd.width < 1 || cmd.height < 1 {
        return Err(invalid("width", "grid dimensions must be >= 1"));
    }
    validate_betas(std::slice::from_ref(&cmd.beta))?;
    if cmd.runs < 1 {
        return Err(invalid("runs", "must be >= 1"));
    }
    if cmd.generations < 1 {
        return Err(invalid("generations", "must be >= 1"));
    }
    if cmd.window < 1 {
        return Err(invalid("window", "must be >= 1"));
    }
    ensure_out_dir(&cmd.out)?;

    with_problem(cmd.problem, &cmd.instance, |problem| {
        let config = GridConfig::new(cmd.width, cmd.height, cmd.beta, problem.orientation());
        let series = with_pool(cmd.jobs, || {
            problem.estimate_pij(
                &config,
                cmd.runs,
                cmd.generations,
                cmd.window,
                cmd.seed,
                cmd.pooling,
            )
        });
        write_file(&cmd.out.join("pij.csv"), &pij_csv(&series))?;
        if cmd.dump_config {
            dump_config(
                &cmd.out,
                "estimate-pij",
                &[
                    ("problem", cmd.problem.to_string()),
                    ("instance", cmd.instance.display().to_string()),
                    ("width", cmd.width.to_string()),
                    ("height", cmd.height.to_string()),
                    ("beta", cmd.beta.to_string()),
                    ("runs", cmd.runs.to_string()),
                    ("generations", cmd.generations.to_string()),
                    ("window", cmd.window.to_string()),
                    ("pooling", format!("{:?}", cmd.pooling).to_lowercase()),
                    ("seed", cmd.seed.to_string()),
                ],
            )?;
        }
        Ok(())
    })?
}

// ---------------------------------------------------------------------------
// optimal-beta
// ---------------------------------------------------------------------------

/// In-process computation parameters for `optimal-beta` when no input files
/// are given.
#[derive(Debug, Clone)]
pub struct OptimalBetaCompute {
    pub problem: ProblemKind,
    pub instance: PathBuf,
    /// Square grid side for both the sigma experiments and the estimation
    /// runs.
    pub side: usize,
    /// Sigma-profile beta grid.
    pub betas: Vec<f64>,
    pub sigma_runs: u64,
    pub pij_beta: f64,
    pub pij_runs: u64,
    pub generations: u64,
    pub window: u64,
    pub pooling: PijPooling,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct OptimalBetaCmd {
    /// `matings.csv` produced by the takeover command (sigma profile).
    pub matings: Option<PathBuf>,
    /// `pij.csv` produced by the estimation command.
    pub pij: Option<PathBuf>,
    pub compute: Option<OptimalBetaCompute>,
    /// Horizon `T` for the cumulated counts.
    pub horizon: usize,
    /// Recompute `sigma` up to each window's end instead of reusing
    /// `sigma(T)` everywhere.
    pub per_window_sigma: bool,
    pub jobs: Option<usize>,
    pub out: PathBuf,
    pub dump_config: bool,
}

fn read_lines(path: &Path) -> Result<Vec<String>, ExperimentError> {
    Ok(std::fs::read_to_string(path)
        .map_err(|e| io_err(path, e))?
        .lines()
        .map(String::from)
        .collect())
}

fn csv_parse(path: &Path, line: usize, message: impl Into<String>) -> ExperimentError {
    ExperimentError::CsvParse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Rebuild a sigma profile from `matings.csv`
/// (`beta,t,mean_n00,mean_n01,mean_n11`).
pub fn read_matings_csv(path: &Path) -> Result<SigmaProfile, ExperimentError> {
    let lines = read_lines(path)?;
    if lines.first().map(String::as_str) != Some("beta,t,mean_n00,mean_n01,mean_n11") {
        return Err(csv_parse(path, 1, "expected matings.csv header"));
    }
    let mut groups: Vec<(f64, Vec<MeanCounts>)> = Vec::new();
    for (i, line) in lines.iter().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(csv_parse(path, i + 1, "expected 5 fields"));
        }
        let mut numbers = [0.0f64; 5];
        for (j, field) in fields.iter().enumerate() {
            numbers[j] = field
                .parse()
                .map_err(|_| csv_parse(path, i + 1, format!("bad number {field:?}")))?;
        }
        let beta = numbers[0];
        let counts = MeanCounts {
            n00: numbers[2],
            n01: numbers[3],
            n11: numbers[4],
        };
        match groups.last_mut() {
            Some((last_beta, series)) if *last_beta == beta => series.push(counts),
            _ => groups.push((beta, vec![counts])),
        }
    }
    if groups.is_empty() {
        return Err(csv_parse(path, 1, "no data rows"));
    }
    groups.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite betas"));
    let lambda_estimate = groups[0].1[0].n00 + groups[0].1[0].n01 + groups[0].1[0].n11;
    let betas: Vec<f64> = groups.iter().map(|(b, _)| *b).collect();
    let mean_counts: Vec<Vec<MeanCounts>> = groups.into_iter().map(|(_, s)| s).collect();
    Ok(SigmaProfile::from_mean_counts(
        lambda_estimate.round() as u64,
        betas,
        mean_counts,
    ))
}

/// Rebuild per-window estimates from `pij.csv`. Window lengths are inferred
/// from consecutive `window_start` values.
pub fn read_pij_csv(path: &Path) -> Result<PijSeries, ExperimentError> {
    let lines = read_lines(path)?;
    let header = "window_start,p00,p01,p11,trials_00,trials_01,trials_11,low_confidence";
    if lines.first().map(String::as_str) != Some(header) {
        return Err(csv_parse(path, 1, "expected pij.csv header"));
    }
    struct Row {
        start: u64,
        probs: [f64; 3],
        trials: [u64; 3],
    }
    let mut rows: Vec<Row> = Vec::new();
    for (i, line) in lines.iter().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(csv_parse(path, i + 1, "expected 8 fields"));
        }
        let parse_f = |s: &str| -> Result<f64, ExperimentError> {
            s.parse()
                .map_err(|_| csv_parse(path, i + 1, format!("bad number {s:?}")))
        };
        let parse_u = |s: &str| -> Result<u64, ExperimentError> {
            s.parse()
                .map_err(|_| csv_parse(path, i + 1, format!("bad count {s:?}")))
        };
        rows.push(Row {
            start: parse_u(fields[0])?,
            probs: [parse_f(fields[1])?, parse_f(fields[2])?, parse_f(fields[3])?],
            trials: [parse_u(fields[4])?, parse_u(fields[5])?, parse_u(fields[6])?],
        });
    }
    if rows.is_empty() {
        return Err(csv_parse(path, 1, "no data rows"));
    }
    let window = if rows.len() >= 2 {
        rows[1].start - rows[0].start
    } else {
        rows[0].start.max(1)
    };
    let windows = rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let window_len = if i + 1 < rows.len() {
                rows[i + 1].start - row.start
            } else {
                window
            };
            pem::WindowEstimate {
                window_start: row.start,
                window_len,
                probs: pem::PemProbabilities::new(row.probs[0], row.probs[1], row.probs[2]),
                sd: [0.0; 3],
                trials: row.trials,
                successes: [0; 3],
                low_confidence: [
                    row.trials[0] == 0,
                    row.trials[1] == 0,
                    row.trials[2] == 0,
                ],
            }
        })
        .collect();
    Ok(PijSeries { window, windows })
}

/// Optimal `beta` per window plus the final-window `P(beta)` curve; writes
/// `optimal_beta.csv` and `p_curve.csv`.
pub fn cmd_optimal_beta(cmd: &OptimalBetaCmd) -> Result<(), ExperimentError> {
    if cmd.horizon < 1 {
        return Err(invalid("horizon", "must be >= 1"));
    }
    ensure_out_dir(&cmd.out)?;

    let (profile, pij) = match (&cmd.matings, &cmd.pij, &cmd.compute) {
        (Some(matings), Some(pij), _) => (read_matings_csv(matings)?, read_pij_csv(pij)?),
        (None, None, Some(compute)) => compute_profile_and_pij(cmd, compute)?,
        (matings, pij, _) => {
            let mut missing = Vec::new();
            if matings.is_none() {
                missing.push("--matings <matings.csv>");
            }
            if pij.is_none() {
                missing.push("--pij <pij.csv>");
            }
            return Err(ExperimentError::MissingInputs(format!(
                "{} (or the in-process flags --problem/--instance/--side)",
                missing.join(", ")
            )));
        }
    };

    let needed = if cmd.per_window_sigma {
        pij.windows
            .last()
            .map(|w| (w.window_start + w.window_len) as usize)
            .unwrap_or(cmd.horizon)
            .max(cmd.horizon)
    } else {
        cmd.horizon
    };
    if profile.horizon_len() < needed {
        return Err(ExperimentError::Refused(format!(
            "sigma profile covers only {} generations, need {needed}",
            profile.horizon_len()
        )));
    }

    let horizon_mode = if cmd.per_window_sigma {
        SigmaHorizon::WindowEnd
    } else {
        SigmaHorizon::Fixed(cmd.horizon)
    };
    let trajectory = optimal_beta_trajectory(&profile, horizon_mode, &pij);

    let mut optimal_csv = String::from("window_start,beta_star,P_at_star\n");
    for point in &trajectory {
        let _ = writeln!(
            optimal_csv,
            "{},{},{}",
            point.window_start, point.beta_star, point.p_at_star
        );
    }
    write_file(&cmd.out.join("optimal_beta.csv"), &optimal_csv)?;

    let final_probs = &pij.windows.last().expect("non-empty series").probs;
    let final_curve = optimal_beta(&profile, cmd.horizon, final_probs);
    let mut curve_csv = String::from("beta,P\n");
    for (beta, p) in &final_curve.curve {
        let _ = writeln!(curve_csv, "{beta},{p}");
    }
    write_file(&cmd.out.join("p_curve.csv"), &curve_csv)?;

    if cmd.dump_config {
        let mut entries = vec![
            ("horizon", cmd.horizon.to_string()),
            ("per_window_sigma", cmd.per_window_sigma.to_string()),
        ];
        if let Some(matings) = &cmd.matings {
            entries.push(("matings", matings.display().to_string()));
        }
        if let Some(pij_path) = &cmd.pij {
            entries.push(("pij", pij_path.display().to_string()));
        }
        if let Some(compute) = &cmd.compute {
            entries.push(("problem", compute.problem.to_string()));
            entries.push(("instance", compute.instance.display().to_string()));
            entries.push(("side", compute.side.to_string()));
            entries.push(("beta_grid", join_floats(&compute.betas)));
            entries.push(("sigma_runs", compute.sigma_runs.to_string()));
            entries.push(("pij_beta", compute.pij_beta.to_string()));
            entries.push(("pij_runs", compute.pij_runs.to_string()));
            entries.push(("generations", compute.generations.to_string()));
            entries.push(("window", compute.window.to_string()));
            entries.push(("pooling", format!("{:?}", compute.pooling).to_lowercase()));
            entries.push(("seed", compute.seed.to_string()));
        }
        dump_config(&cmd.out, "optimal-beta", &entries)?;
    }
    Ok(())
}

/// Default sigma-grid: `0.0, 0.05, ..., 1.0`.
pub fn default_beta_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 * 0.05).collect()
}

fn compute_profile_and_pij(
    cmd: &OptimalBetaCmd,
    compute: &OptimalBetaCompute,
) -> Result<(SigmaProfile, PijSeries), ExperimentError> {
    if compute.side < 1 {
        return Err(invalid("side", "must be >= 1"));
    }
    validate_betas(&compute.betas)?;
    validate_betas(std::slice::from_ref(&compute.pij_beta))?;
    if compute.sigma_runs < 1 || compute.pij_runs < 1 {
        return Err(invalid("runs", "sigma-runs and pij-runs must be >= 1"));
    }
    let sigma_horizon = if cmd.per_window_sigma {
        (compute.generations as usize).max(cmd.horizon)
    } else {
        cmd.horizon
    };

    with_problem(compute.problem, &compute.instance, |problem| {
        with_pool(cmd.jobs, || {
            let stats: Vec<TakeoverStats> = compute
                .betas
                .iter()
                .map(|&beta| {
                    takeover_stats(
                        compute.side,
                        beta,
                        compute.sigma_runs,
                        compute.seed,
                        sigma_horizon as u64,
                        Some(sigma_horizon),
                        SeedPlacement::Random,
                    )
                })
                .collect();
            let profile = SigmaProfile::from_stats(&stats);
            let config = GridConfig::square(compute.side, compute.pij_beta, problem.orientation());
            let pij = problem.estimate_pij(
                &config,
                compute.pij_runs,
                compute.generations,
                compute.window,
                compute.seed,
                compute.pooling,
            );
            Ok((profile, pij))
        })
    })?
}

// ---------------------------------------------------------------------------
// nk-gen and oracle
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct NkGenCmd {
    pub n: usize,
    pub k: usize,
    pub model: NkModel,
    pub seed: u64,
    pub out_file: PathBuf,
}

/// Generate an NK instance and serialize it to `out_file`.
pub fn cmd_nk_gen(cmd: &NkGenCmd) -> Result<(), ExperimentError> {
    if cmd.n < 1 {
        return Err(invalid("n", "must be >= 1"));
    }
    if cmd.k >= cmd.n {
        return Err(invalid("k", format!("must satisfy K <= N-1, got {}", cmd.k)));
    }
    use rand::SeedableRng;
    let mut rng = RunRng::seed_from_u64(cmd.seed);
    let landscape = NkLandscape::generate(cmd.n, cmd.k, cmd.model, &mut rng);
    if let Some(parent) = cmd.out_file.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
    }
    write_file(&cmd.out_file, &landscape.serialize())
}

#[derive(Debug, Clone)]
pub struct OracleCmd {
    pub nk: Option<PathBuf>,
    pub qap: Option<PathBuf>,
    pub out: PathBuf,
    pub dump_config: bool,
}

/// Brute-force optima for small instances; writes `oracle.csv`.
pub fn cmd_oracle(cmd: &OracleCmd) -> Result<(), ExperimentError> {
    if cmd.nk.is_none() && cmd.qap.is_none() {
        return Err(ExperimentError::MissingInputs(
            "--nk <file.nk> and/or --qap <file.dat>".into(),
        ));
    }
    ensure_out_dir(&cmd.out)?;
    let mut csv = String::from("instance,optimum_value,optimum_solution\n");
    if let Some(path) = &cmd.qap {
        let instance = qap::load_qaplib(path).map_err(|source| match source {
            QapParseError::Io(e) => io_err(path, e),
            other => ExperimentError::QapParse {
                path: path.to_path_buf(),
                source: other,
            },
        })?;
        let (best, value) = instance
            .exhaustive_minimum()
            .map_err(|e| ExperimentError::Refused(e.to_string()))?;
        let _ = writeln!(csv, "{},{},{}", instance.name(), value, best);
    }
    if let Some(path) = &cmd.nk {
        let landscape = NkLandscape::load(path).map_err(|source| match source {
            NkParseError::Io(e) => io_err(path, e),
            other => ExperimentError::NkParse {
                path: path.to_path_buf(),
                source: other,
            },
        })?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "nk".into());
        let (best, value) = landscape
            .global_optimum_bruteforce()
            .map_err(|e| ExperimentError::Refused(e.to_string()))?;
        let _ = writeln!(csv, "{name},{value},{best}");
    }
    write_file(&cmd.out.join("oracle.csv"), &csv)?;
    if cmd.dump_config {
        let mut entries = Vec::new();
        if let Some(path) = &cmd.qap {
            entries.push(("qap", path.display().to_string()));
        }
        if let Some(path) = &cmd.nk {
            entries.push(("nk", path.display().to_string()));
        }
        dump_config(&cmd.out, "oracle", &entries)?;
    }
    Ok(())
}
