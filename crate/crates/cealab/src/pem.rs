//! Punctuated-equilibria machinery.
//!
//! Between improvements, the population evolves under selection alone; an
//! improvement is found by a mating of type 00, 01 or 11 (zero, one or two
//! parents that are copies of the current best) with problem-dependent
//! probabilities `P00`, `P01`, `P11`. The probability of finding a new best
//! solution at a generation with mating counts `n_ij` is
//!
//! ```text
//! p = 1 - (1 - P00)^n00 * (1 - P01)^n01 * (1 - P11)^n11
//! ```
//!
//! and over a horizon of `T` generations, with `sigma_ij` the cumulated
//! counts,
//!
//! ```text
//! P = 1 - (1 - P00)^sigma00 * (1 - P01)^sigma01 * (1 - P11)^sigma11.
//! ```
//!
//! The cumulated counts depend on the selection parameter `beta`; the value
//! maximizing `P` is the best exploration/exploitation trade-off for the
//! given per-type probabilities, and it satisfies
//!
//! ```text
//! sum_ij log(1 - P_ij) * d(sigma_ij)/d(beta) = 0.
//! ```
//!
//! This module provides the closed forms, Beta-posterior estimation of the
//! `P_ij` from instrumented optimization runs, empirical `sigma` profiles
//! from selection-only experiments, the optimal-`beta` search and the
//! stationarity residual.

use rayon::prelude::*;

use crate::engine::{self, MatingType, RunLog};
use crate::grid::GridConfig;
use crate::problem::Problem;
use crate::replicate_seed;
use crate::takeover::{MeanCounts, TakeoverStats};

/// Per-mating-type success probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PemProbabilities {
    pub p00: f64,
    pub p01: f64,
    pub p11: f64,
}

impl PemProbabilities {
    pub fn new(p00: f64, p01: f64, p11: f64) -> Self {
        for p in [p00, p01, p11] {
            assert!((0.0..=1.0).contains(&p), "probability {p} outside [0, 1]");
        }
        PemProbabilities { p00, p01, p11 }
    }

    pub fn uniform(p: f64) -> Self {
        PemProbabilities::new(p, p, p)
    }

    fn as_array(&self) -> [f64; 3] {
        [self.p00, self.p01, self.p11]
    }
}

/// `sum_ij count_ij * ln(1 - P_ij)`, skipping zero counts so that a sure
/// success (`P = 1`) with a zero count contributes nothing.
fn log_survival(counts: [f64; 3], probs: &PemProbabilities) -> f64 {
    let mut total = 0.0;
    for (count, p) in counts.into_iter().zip(probs.as_array()) {
        if count > 0.0 {
            if p >= 1.0 {
                return f64::NEG_INFINITY;
            }
            total += count * (-p).ln_1p();
        }
    }
    total
}

/// Probability that a generation with the given mating counts produces a
/// new best solution; computed in log space.
pub fn p_improve(n00: u64, n01: u64, n11: u64, probs: &PemProbabilities) -> f64 {
    let log = log_survival([n00 as f64, n01 as f64, n11 as f64], probs);
    (1.0 - log.exp()).clamp(0.0, 1.0)
}

/// Probability of improving the best solution within a horizon whose
/// cumulated mating counts are `sigma = [sigma00, sigma01, sigma11]`.
///
/// Equals `1 - prod_t (1 - p(t))` whenever `sigma` is the prefix sum of the
/// per-generation counts.
pub fn prob_horizon(sigma: [f64; 3], probs: &PemProbabilities) -> f64 {
    assert!(sigma.iter().all(|&s| s >= 0.0), "negative cumulated count");
    (1.0 - log_survival(sigma, probs).exp()).clamp(0.0, 1.0)
}

/// Which reading of the expected-improvement-time sum to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeInterpretation {
    /// The sum `E = sum_t t * p(t)` taken verbatim over the series.
    Literal,
    /// `p(t)` read as a per-generation hazard: the expectation of the first
    /// success time, `sum_t t * p(t) * prod_{s<t} (1 - p(s))`, truncated at
    /// the series end.
    FirstSuccess,
}

/// Truncated expected improvement time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedTime {
    pub value: f64,
    /// Probability that no success occurred within the series (first-success
    /// mode; 0 in literal mode). The untruncated first-success expectation
    /// exceeds `value` by at least `tail_probability * (len + 1)`.
    pub tail_probability: f64,
}

/// Expected time to find a new best solution from a per-generation
/// improvement-probability series (`p_series[0]` is generation 1).
pub fn expected_time(p_series: &[f64], interpretation: TimeInterpretation) -> ExpectedTime {
    assert!(
        p_series.iter().all(|p| (0.0..=1.0).contains(p)),
        "probabilities must lie in [0, 1]"
    );
    match interpretation {
        TimeInterpretation::Literal => ExpectedTime {
            value: p_series
                .iter()
                .enumerate()
                .map(|(t, p)| (t + 1) as f64 * p)
                .sum(),
            tail_probability: 0.0,
        },
        TimeInterpretation::FirstSuccess => {
            let mut survival = 1.0;
            let mut value = 0.0;
            for (t, &p) in p_series.iter().enumerate() {
                value += (t + 1) as f64 * p * survival;
                survival *= 1.0 - p;
            }
            ExpectedTime {
                value,
                tail_probability: survival,
            }
        }
    }
}

/// Beta(1, 1)-prior posterior over one Bernoulli success probability.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BetaPosterior {
    pub successes: u64,
    pub trials: u64,
}

impl BetaPosterior {
    pub fn update(&mut self, success: bool) {
        self.trials += 1;
        if success {
            self.successes += 1;
        }
    }

    pub fn observe(&mut self, successes: u64, trials: u64) {
        assert!(successes <= trials);
        self.successes += successes;
        self.trials += trials;
    }

    /// Posterior mean `(s + 1) / (m + 2)`.
    pub fn mean(&self) -> f64 {
        (self.successes + 1) as f64 / (self.trials + 2) as f64
    }

    /// Posterior standard deviation.
    pub fn sd(&self) -> f64 {
        let a = (self.successes + 1) as f64;
        let b = (self.trials - self.successes + 1) as f64;
        (a * b / ((a + b) * (a + b) * (a + b + 1.0))).sqrt()
    }
}

/// Posterior state for the three mating types.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PemPosterior {
    by_type: [BetaPosterior; 3],
}

impl PemPosterior {
    pub fn update(&mut self, mating: MatingType, success: bool) {
        self.by_type[mating.index()].update(success);
    }

    pub fn of(&self, mating: MatingType) -> &BetaPosterior {
        &self.by_type[mating.index()]
    }

    pub fn means(&self) -> PemProbabilities {
        PemProbabilities::new(
            self.by_type[0].mean(),
            self.by_type[1].mean(),
            self.by_type[2].mean(),
        )
    }
}

/// Pooled posterior estimate over one window of generations.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowEstimate {
    /// Generations covered: `window_start + 1 ..= window_start + window_len`.
    pub window_start: u64,
    pub window_len: u64,
    pub probs: PemProbabilities,
    pub sd: [f64; 3],
    pub trials: [u64; 3],
    pub successes: [u64; 3],
    /// Per type, true when the window saw no mating of that type at all and
    /// the reported value is just the prior mean.
    pub low_confidence: [bool; 3],
}

/// Per-window estimates of the mating success probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct PijSeries {
    pub window: u64,
    pub windows: Vec<WindowEstimate>,
}

/// How mating outcomes are pooled into the per-window estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PijPooling {
    /// Each window bins only its own generations.
    #[default]
    Windowed,
    /// Running posterior: window `w` pools every generation up to its end,
    /// like a Bayesian state updated during the runs and sampled every
    /// `window` generations.
    Cumulative,
}

impl std::str::FromStr for PijPooling {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "windowed" => Ok(PijPooling::Windowed),
            "cumulative" => Ok(PijPooling::Cumulative),
            other => Err(format!("unknown pooling {other:?} (windowed|cumulative)")),
        }
    }
}

/// Estimate the `P_ij` by pooling mating outcomes of full optimization runs
/// per `(type, window)` bin.
pub fn estimate_pij<P: Problem>(
    problem: &P,
    config: &GridConfig,
    runs: u64,
    generations: u64,
    window: u64,
    base_seed: u64,
    pooling: PijPooling,
) -> PijSeries {
    assert!(runs >= 1, "need at least one run");
    let logs: Vec<RunLog> = (0..runs)
        .into_par_iter()
        .map(|r| engine::run(problem, config, generations, replicate_seed(base_seed, r)))
        .collect();
    pij_from_logs(&logs, generations, window, pooling)
}

/// Pool already-recorded run logs into per-window posterior estimates.
pub fn pij_from_logs(
    logs: &[RunLog],
    generations: u64,
    window: u64,
    pooling: PijPooling,
) -> PijSeries {
    assert!(window >= 1, "window must be >= 1");
    assert!(!logs.is_empty(), "no run logs to pool");
    let bins = generations.div_ceil(window) as usize;
    let mut trials = vec![[0u64; 3]; bins];
    let mut successes = vec![[0u64; 3]; bins];

    for log in logs {
        assert_eq!(log.generations_run, generations, "run length mismatch");
        for (t0, counts) in log.mating_counts.iter().enumerate() {
            let bin = t0 / window as usize;
            for mating in MatingType::ALL {
                trials[bin][mating.index()] += counts.get(mating);
            }
        }
        for event in &log.improvement_events {
            let bin = (event.generation - 1) / window;
            successes[bin as usize][event.mating.index()] += 1;
        }
    }

    if pooling == PijPooling::Cumulative {
        for w in 1..bins {
            for i in 0..3 {
                trials[w][i] += trials[w - 1][i];
                successes[w][i] += successes[w - 1][i];
            }
        }
    }

    let windows = (0..bins)
        .map(|w| {
            let window_start = w as u64 * window;
            let window_len = window.min(generations - window_start);
            let mut posterior = [BetaPosterior::default(); 3];
            for i in 0..3 {
                posterior[i].observe(successes[w][i], trials[w][i]);
            }
            WindowEstimate {
                window_start,
                window_len,
                probs: PemProbabilities::new(
                    posterior[0].mean(),
                    posterior[1].mean(),
                    posterior[2].mean(),
                ),
                sd: [posterior[0].sd(), posterior[1].sd(), posterior[2].sd()],
                trials: trials[w],
                successes: successes[w],
                low_confidence: [trials[w][0] == 0, trials[w][1] == 0, trials[w][2] == 0],
            }
        })
        .collect();
    PijSeries { window, windows }
}

/// Empirical cumulated-mating-count profile over a grid of `beta` values,
/// built from selection-only takeover experiments.
#[derive(Debug, Clone)]
pub struct SigmaProfile {
    pub lambda: u64,
    /// Ascending `beta` grid.
    pub betas: Vec<f64>,
    /// Per beta, per generation (starting at 1) replicate-averaged counts.
    pub mean_counts: Vec<Vec<MeanCounts>>,
}

impl SigmaProfile {
    pub fn from_stats(stats: &[TakeoverStats]) -> Self {
        assert!(!stats.is_empty(), "empty profile");
        let lambda = stats[0].lambda;
        assert!(stats.iter().all(|s| s.lambda == lambda));
        SigmaProfile::from_mean_counts(
            lambda,
            stats.iter().map(|s| s.beta).collect(),
            stats.iter().map(|s| s.mean_counts.clone()).collect(),
        )
    }

    pub fn from_mean_counts(
        lambda: u64,
        betas: Vec<f64>,
        mean_counts: Vec<Vec<MeanCounts>>,
    ) -> Self {
        assert_eq!(betas.len(), mean_counts.len());
        assert!(!betas.is_empty(), "empty profile");
        for pair in betas.windows(2) {
            assert!(pair[0] < pair[1], "betas must be ascending");
        }
        SigmaProfile {
            lambda,
            betas,
            mean_counts,
        }
    }

    /// Generations available at every grid point.
    pub fn horizon_len(&self) -> usize {
        self.mean_counts.iter().map(|c| c.len()).min().unwrap_or(0)
    }

    /// `[sigma00, sigma01, sigma11]` after `t_horizon` generations at grid
    /// point `beta_index`.
    pub fn sigma_at(&self, beta_index: usize, t_horizon: usize) -> [f64; 3] {
        let counts = &self.mean_counts[beta_index];
        assert!(
            t_horizon <= counts.len(),
            "horizon {t_horizon} exceeds recorded length {}",
            counts.len()
        );
        let mut sigma = [0.0; 3];
        for c in &counts[..t_horizon] {
            sigma[0] += c.n00;
            sigma[1] += c.n01;
            sigma[2] += c.n11;
        }
        sigma
    }

    /// Index of a grid value, matched within 1e-9.
    pub fn beta_index(&self, beta: f64) -> Option<usize> {
        self.betas.iter().position(|&b| (b - beta).abs() < 1e-9)
    }
}

/// `P(beta)` over a profile grid, with the maximizer.
#[derive(Debug, Clone)]
pub struct OptimalBeta {
    pub beta_star: f64,
    pub index: usize,
    pub p_at_star: f64,
    /// `(beta, P)` for every grid point.
    pub curve: Vec<(f64, f64)>,
}

/// Evaluate `P` at every grid `beta` for the given horizon and
/// probabilities; ties go to the smallest `beta`.
pub fn optimal_beta(
    profile: &SigmaProfile,
    t_horizon: usize,
    probs: &PemProbabilities,
) -> OptimalBeta {
    assert!(!profile.betas.is_empty(), "empty beta grid");
    let curve: Vec<(f64, f64)> = profile
        .betas
        .iter()
        .enumerate()
        .map(|(i, &beta)| (beta, prob_horizon(profile.sigma_at(i, t_horizon), probs)))
        .collect();
    let mut index = 0;
    for (i, &(_, p)) in curve.iter().enumerate() {
        if p > curve[index].1 {
            index = i;
        }
    }
    OptimalBeta {
        beta_star: curve[index].0,
        index,
        p_at_star: curve[index].1,
        curve,
    }
}

/// Which cumulated counts each window of a trajectory uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaHorizon {
    /// The same `sigma(T)` for every window.
    Fixed(usize),
    /// `sigma` cumulated up to each window's last generation.
    WindowEnd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub window_start: u64,
    pub beta_star: f64,
    pub p_at_star: f64,
}

/// Optimal `beta` per estimation window.
pub fn optimal_beta_trajectory(
    profile: &SigmaProfile,
    horizon: SigmaHorizon,
    pij: &PijSeries,
) -> Vec<TrajectoryPoint> {
    pij.windows
        .iter()
        .map(|window| {
            let t_horizon = match horizon {
                SigmaHorizon::Fixed(t) => t,
                SigmaHorizon::WindowEnd => (window.window_start + window.window_len) as usize,
            };
            let best = optimal_beta(profile, t_horizon, &window.probs);
            TrajectoryPoint {
                window_start: window.window_start,
                beta_star: best.beta_star,
                p_at_star: best.p_at_star,
            }
        })
        .collect()
}

/// Left-hand side of the optimality condition at a grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationarityResidual {
    pub value: f64,
    /// True when the point sits on the grid boundary and a one-sided
    /// difference replaced the central one.
    pub one_sided: bool,
}

/// Estimate `sum_ij log(1 - P_ij) * d(sigma_ij)/d(beta)` at `beta` by
/// finite differences on the empirical profile.
pub fn stationarity_residual(
    profile: &SigmaProfile,
    t_horizon: usize,
    probs: &PemProbabilities,
    beta: f64,
) -> StationarityResidual {
    let index = profile
        .beta_index(beta)
        .unwrap_or_else(|| panic!("beta {beta} is not a grid point of the profile"));
    stationarity_residual_at(profile, t_horizon, probs, index)
}

/// As [`stationarity_residual`], addressing the grid point by index.
pub fn stationarity_residual_at(
    profile: &SigmaProfile,
    t_horizon: usize,
    probs: &PemProbabilities,
    index: usize,
) -> StationarityResidual {
    let len = profile.betas.len();
    assert!(len >= 2, "need at least two grid points for differences");
    assert!(index < len);
    let (lo, hi, one_sided) = if index == 0 {
        (0, 1, true)
    } else if index == len - 1 {
        (len - 2, len - 1, true)
    } else {
        (index - 1, index + 1, false)
    };
    let sigma_lo = profile.sigma_at(lo, t_horizon);
    let sigma_hi = profile.sigma_at(hi, t_horizon);
    let dbeta = profile.betas[hi] - profile.betas[lo];
    let mut value = 0.0;
    for (j, p) in probs.as_array().into_iter().enumerate() {
        let dsigma = (sigma_hi[j] - sigma_lo[j]) / dbeta;
        if p >= 1.0 {
            assert!(
                dsigma == 0.0,
                "survival log diverges at P = 1 with a moving sigma"
            );
            continue;
        }
        value += (-p).ln_1p() * dsigma;
    }
    StationarityResidual { value, one_sided }
}
