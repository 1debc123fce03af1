//! Selection-only takeover experiments.
//!
//! The population holds one solution of good fitness and `lambda - 1` null
//! solutions; with crossover and mutation replaced by identity, every cell
//! becomes the best of itself and its two tournament winners, and the good
//! solution colonizes the grid. The takeover time is the first generation at
//! which it fills the population; the per-generation copy counts `N(t)` and
//! mating tallies measure the selective pressure of a given `beta`.

use rand::Rng;
use rand::SeedableRng;
use rayon::prelude::*;

use crate::engine::{step_generation, MatingCounts, Population};
use crate::grid::{GridConfig, Orientation};
use crate::problem::Problem;
use crate::{replicate_seed, RunRng};

/// Two-level abstract problem: a cell either carries the best solution
/// (fitness 1) or a null one (fitness 0). Variation operators are identity,
/// leaving selection as the only active force.
pub struct TwoLevelProblem;

impl Problem for TwoLevelProblem {
    type Genotype = bool;

    fn orientation(&self) -> Orientation {
        Orientation::Maximize
    }

    fn random_solution(&self, _rng: &mut RunRng) -> bool {
        false
    }

    fn evaluate(&self, genotype: &bool) -> f64 {
        if *genotype {
            1.0
        } else {
            0.0
        }
    }

    fn crossover(&self, a: &bool, b: &bool, _rng: &mut RunRng) -> (bool, bool) {
        (*a, *b)
    }

    fn mutate(&self, _genotype: &mut bool, _rng: &mut RunRng) {}
}

/// Where the single initial best solution is placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedPlacement {
    /// Uniformly random cell.
    Random,
    /// The central cell (rounded down on even sides).
    Center,
}

impl std::str::FromStr for SeedPlacement {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(SeedPlacement::Random),
            "center" => Ok(SeedPlacement::Center),
            other => Err(format!("unknown seed-cell {other:?} (random|center)")),
        }
    }
}

/// Two-level population with one best cell and `lambda - 1` null cells.
pub fn init_takeover_grid(
    side: usize,
    rng: &mut RunRng,
    placement: SeedPlacement,
) -> Population<bool> {
    assert!(side >= 1);
    let lambda = side * side;
    let seed_cell = match placement {
        SeedPlacement::Random => rng.random_range(0..lambda),
        SeedPlacement::Center => (side / 2) * side + side / 2,
    };
    let mut cells = vec![false; lambda];
    cells[seed_cell] = true;
    Population::from_cells(cells, &TwoLevelProblem)
}

/// One takeover experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct TakeoverRecord {
    pub beta: f64,
    pub side: usize,
    /// `N(t)` for `t = 0..=generations_run`.
    pub n_series: Vec<u64>,
    /// First `t` with `N(t) = lambda`; `None` when the run hit its
    /// generation cap without converging (always the case at `beta = 1` on
    /// grids larger than one cell).
    pub takeover_time: Option<u64>,
    /// Mating tallies for `t = 1..=generations_run`.
    pub mating_counts: Vec<MatingCounts>,
    /// First `t` at which the colony spans a full grid axis (occupies every
    /// row or every column); from then on the growth regime changes.
    pub boundary_hit: Option<u64>,
    pub seed: u64,
}

fn count_best(population: &Population<bool>) -> u64 {
    population.fitnesses().iter().filter(|&&f| f == 1.0).count() as u64
}

fn spans_axis(population: &Population<bool>, side: usize) -> bool {
    let mut rows = vec![false; side];
    let mut cols = vec![false; side];
    for (i, &f) in population.fitnesses().iter().enumerate() {
        if f == 1.0 {
            rows[i / side] = true;
            cols[i % side] = true;
        }
    }
    rows.iter().all(|&r| r) || cols.iter().all(|&c| c)
}

/// Run selection-only dynamics until takeover or `max_generations`.
pub fn takeover_run(
    side: usize,
    beta: f64,
    max_generations: u64,
    seed: u64,
    placement: SeedPlacement,
) -> TakeoverRecord {
    assert!(max_generations >= 1);
    let config = GridConfig::square(side, beta, Orientation::Maximize);
    let problem = TwoLevelProblem;
    let lambda = config.lambda() as u64;

    let mut rng = RunRng::seed_from_u64(seed);
    let mut population = init_takeover_grid(side, &mut rng, placement);

    let mut record = TakeoverRecord {
        beta,
        side,
        n_series: vec![count_best(&population)],
        takeover_time: None,
        mating_counts: Vec::new(),
        boundary_hit: None,
        seed,
    };
    if spans_axis(&population, side) {
        record.boundary_hit = Some(0);
    }
    if record.n_series[0] == lambda {
        record.takeover_time = Some(0);
        return record;
    }

    for t in 1..=max_generations {
        let (next, stats) = step_generation(&population, &problem, &config, &mut rng);
        population = next;
        let n = count_best(&population);
        record.n_series.push(n);
        record.mating_counts.push(stats.counts);
        if record.boundary_hit.is_none() && spans_axis(&population, side) {
            record.boundary_hit = Some(t);
        }
        if n == lambda {
            record.takeover_time = Some(t);
            break;
        }
    }
    record
}

/// Default generation cap for takeover runs.
pub fn default_takeover_cap(side: usize) -> u64 {
    100 * side as u64
}

/// Per-generation mating averages across replicates.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanCounts {
    pub n00: f64,
    pub n01: f64,
    pub n11: f64,
}

/// Replicate-averaged takeover statistics.
///
/// Replicates that converge early are padded with a fully converged grid
/// (`N = lambda`, all matings of type 11), so every averaged series is
/// defined at every generation up to the requested horizon.
#[derive(Debug, Clone)]
pub struct TakeoverStats {
    pub beta: f64,
    pub side: usize,
    pub lambda: u64,
    pub records: Vec<TakeoverRecord>,
    /// Mean and sample std of takeover time over converged replicates.
    pub mean_takeover: Option<f64>,
    pub std_takeover: Option<f64>,
    pub undefined_runs: usize,
    /// Mean `N(t)` for `t = 0..=horizon`.
    pub mean_n: Vec<f64>,
    /// Mean mating counts for `t = 1..=horizon`.
    pub mean_counts: Vec<MeanCounts>,
    pub mean_boundary_hit: Option<f64>,
}

impl TakeoverStats {
    /// Cumulative mating counts `[sigma00, sigma01, sigma11]` over the
    /// first `t_horizon` generations of the averaged series.
    pub fn sigma_at(&self, t_horizon: usize) -> [f64; 3] {
        assert!(
            t_horizon <= self.mean_counts.len(),
            "horizon {t_horizon} exceeds recorded length {}",
            self.mean_counts.len()
        );
        let mut sigma = [0.0; 3];
        for counts in &self.mean_counts[..t_horizon] {
            sigma[0] += counts.n00;
            sigma[1] += counts.n01;
            sigma[2] += counts.n11;
        }
        sigma
    }

    /// Growth rate of the averaged `N(t)` curve.
    pub fn mean_growth_rate(&self) -> Vec<f64> {
        growth_rate(&self.mean_n)
    }
}

/// Per-generation differences of a growth curve.
pub fn growth_rate(n_series: &[f64]) -> Vec<f64> {
    assert!(!n_series.is_empty(), "empty growth series");
    n_series.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Run `replicates` independent takeover experiments (seeds
/// `base_seed + r`) and average them.
///
/// `horizon` fixes the length of the averaged series; it defaults to the
/// longest replicate and must not exceed `max_generations`.
pub fn takeover_stats(
    side: usize,
    beta: f64,
    replicates: u64,
    base_seed: u64,
    max_generations: u64,
    horizon: Option<usize>,
    placement: SeedPlacement,
) -> TakeoverStats {
    assert!(replicates >= 1);
    if let Some(h) = horizon {
        assert!(
            h as u64 <= max_generations,
            "horizon {h} exceeds the generation cap {max_generations}"
        );
    }
    let records: Vec<TakeoverRecord> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            takeover_run(
                side,
                beta,
                max_generations,
                replicate_seed(base_seed, r),
                placement,
            )
        })
        .collect();

    let lambda = (side * side) as u64;
    let horizon = horizon.unwrap_or_else(|| {
        records
            .iter()
            .map(|r| r.n_series.len() - 1)
            .max()
            .unwrap_or(0)
    });

    let mut mean_n = vec![0.0; horizon + 1];
    let mut mean_counts = vec![MeanCounts::default(); horizon];
    for record in &records {
        for (t, slot) in mean_n.iter_mut().enumerate() {
            *slot += record.n_series.get(t).copied().unwrap_or(lambda) as f64;
        }
        for (t, slot) in mean_counts.iter_mut().enumerate() {
            let counts = record
                .mating_counts
                .get(t)
                .copied()
                .unwrap_or(MatingCounts {
                    n00: 0,
                    n01: 0,
                    n11: lambda,
                });
            slot.n00 += counts.n00 as f64;
            slot.n01 += counts.n01 as f64;
            slot.n11 += counts.n11 as f64;
        }
    }
    let scale = 1.0 / replicates as f64;
    for slot in &mut mean_n {
        *slot *= scale;
    }
    for slot in &mut mean_counts {
        slot.n00 *= scale;
        slot.n01 *= scale;
        slot.n11 *= scale;
    }

    let defined: Vec<f64> = records
        .iter()
        .filter_map(|r| r.takeover_time.map(|t| t as f64))
        .collect();
    let (mean_takeover, std_takeover) = if defined.is_empty() {
        (None, None)
    } else {
        let (m, s) = crate::stats::mean_std(&defined);
        (Some(m), Some(s))
    };
    let hits: Vec<f64> = records
        .iter()
        .filter_map(|r| r.boundary_hit.map(|t| t as f64))
        .collect();
    let mean_boundary_hit = if hits.is_empty() {
        None
    } else {
        Some(hits.iter().sum::<f64>() / hits.len() as f64)
    };

    TakeoverStats {
        beta,
        side,
        lambda,
        undefined_runs: records.len() - defined.len(),
        records,
        mean_takeover,
        std_takeover,
        mean_n,
        mean_counts,
        mean_boundary_hit,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{chi_square_statistic, chi_square_threshold};

    #[test]
    fn single_cell_grid_is_taken_over_at_birth() {
        let record = takeover_run(1, 0.5, 10, 3, SeedPlacement::Random);
        assert_eq!(record.takeover_time, Some(0));
        assert_eq!(record.n_series, vec![1]);
        assert_eq!(record.boundary_hit, Some(0));
    }

    #[test]
    fn initial_population_has_one_best_copy() {
        let mut rng = RunRng::seed_from_u64(10);
        let population = init_takeover_grid(64, &mut rng, SeedPlacement::Random);
        assert_eq!(population.len(), 4096);
        assert_eq!(count_best(&population), 1);
    }

    #[test]
    fn seed_cell_is_uniform_over_the_grid() {
        let side = 8;
        let lambda = side * side;
        let draws = 10_000;
        let mut rng = RunRng::seed_from_u64(11);
        let mut counts = vec![0u64; lambda];
        for _ in 0..draws {
            let population = init_takeover_grid(side, &mut rng, SeedPlacement::Random);
            let seed_cell = population
                .fitnesses()
                .iter()
                .position(|&f| f == 1.0)
                .unwrap();
            counts[seed_cell] += 1;
        }
        let expected = vec![draws as f64 / lambda as f64; lambda];
        let statistic = chi_square_statistic(&counts, &expected);
        assert!(
            statistic < chi_square_threshold(lambda - 1),
            "chi-square {statistic}"
        );
    }

    #[test]
    fn center_placement_targets_the_middle_cell() {
        let mut rng = RunRng::seed_from_u64(12);
        let population = init_takeover_grid(5, &mut rng, SeedPlacement::Center);
        assert_eq!(population.fitness(12), 1.0);
    }

    #[test]
    fn beta_one_never_takes_over() {
        let record = takeover_run(4, 1.0, 60, 5, SeedPlacement::Random);
        assert_eq!(record.takeover_time, None);
        assert!(record.n_series.iter().all(|&n| n == 1));
        assert_eq!(record.n_series.len(), 61);
        // The lone best cell mates with itself each generation.
        for counts in &record.mating_counts {
            assert_eq!((counts.n00, counts.n01, counts.n11), (15, 0, 1));
        }
    }

    #[test]
    fn copy_count_is_nondecreasing_and_counts_sum_to_lambda() {
        let record = takeover_run(8, 0.3, 2000, 6, SeedPlacement::Random);
        assert!(record.takeover_time.is_some());
        for pair in record.n_series.windows(2) {
            assert!(pair[1] >= pair[0]);
        }
        for counts in &record.mating_counts {
            assert_eq!(counts.total(), 64);
        }
        assert!(record.boundary_hit.unwrap() <= record.takeover_time.unwrap());
    }

    #[test]
    fn stats_of_one_replicate_equal_the_run() {
        let stats = takeover_stats(6, 0.4, 1, 77, 3600, None, SeedPlacement::Random);
        let record = takeover_run(6, 0.4, 3600, 77, SeedPlacement::Random);
        assert_eq!(stats.records[0], record);
        assert_eq!(stats.mean_takeover, record.takeover_time.map(|t| t as f64));
        assert_eq!(stats.std_takeover, Some(0.0));
        for (mean, &n) in stats.mean_n.iter().zip(&record.n_series) {
            assert_eq!(*mean, n as f64);
        }
    }

    #[test]
    fn padded_averages_conserve_lambda_and_saturate() {
        let stats = takeover_stats(5, 0.2, 8, 21, 2500, Some(200), SeedPlacement::Random);
        assert_eq!(stats.mean_counts.len(), 200);
        assert_eq!(stats.mean_n.len(), 201);
        for counts in &stats.mean_counts {
            let total = counts.n00 + counts.n01 + counts.n11;
            assert!((total - 25.0).abs() < 1e-9);
        }
        // All replicates converge long before generation 200.
        let last = stats.mean_counts.last().unwrap();
        assert_eq!((last.n00, last.n01, last.n11), (0.0, 0.0, 25.0));
        assert_eq!(*stats.mean_n.last().unwrap(), 25.0);
        // Sigma conservation at arbitrary horizons.
        for t in [1usize, 50, 200] {
            let sigma = stats.sigma_at(t);
            assert!((sigma.iter().sum::<f64>() - 25.0 * t as f64).abs() < 1e-6);
        }
    }

    #[test]
    fn takeover_slows_down_as_beta_grows_smoke() {
        let mut previous = 0.0;
        for beta in [0.2, 0.5, 0.8] {
            let stats = takeover_stats(12, beta, 30, 500, 1200, None, SeedPlacement::Random);
            assert_eq!(stats.undefined_runs, 0);
            let mean = stats.mean_takeover.unwrap();
            assert!(
                mean > previous,
                "beta {beta}: mean {mean} not above {previous}"
            );
            previous = mean;
        }
    }

    #[test]
    fn growth_rate_differences() {
        assert_eq!(growth_rate(&[1.0, 5.0, 13.0]), vec![4.0, 8.0]);
        assert_eq!(growth_rate(&[3.0, 3.0, 3.0]), vec![0.0, 0.0]);
        assert!(growth_rate(&[2.0]).is_empty());
    }

    #[test]
    fn colonization_is_isotropic_from_a_centered_seed() {
        // Mean colonization frequencies at a fixed generation must be
        // symmetric under quarter turns of the torus.
        let side = 9;
        let center = (side / 2) * side + side / 2;
        let at_generation = 3;
        let replicates = 3000u64;
        let mut occupied = vec![0u64; side * side];
        for r in 0..replicates {
            let config = GridConfig::square(side, 0.2, Orientation::Maximize);
            let mut rng = RunRng::seed_from_u64(replicate_seed(9000, r));
            let mut population = init_takeover_grid(side, &mut rng, SeedPlacement::Center);
            for _ in 0..at_generation {
                population = step_generation(&population, &TwoLevelProblem, &config, &mut rng).0;
            }
            for (i, &f) in population.fitnesses().iter().enumerate() {
                if f == 1.0 {
                    occupied[i] += 1;
                }
            }
        }
        let rotate = |i: usize| {
            let (row, col) = (i / side, i % side);
            // Quarter turn about the center cell.
            let (r, c) = (row as i64 - 4, col as i64 - 4);
            let (nr, nc) = (c, -r);
            ((nr + 4) as usize) * side + (nc + 4) as usize
        };
        let mut visited = vec![false; side * side];
        let mut observed = Vec::new();
        let mut expected = Vec::new();
        let mut df = 0usize;
        for start in 0..side * side {
            if visited[start] || start == center {
                continue;
            }
            let mut orbit = vec![start];
            let mut next = rotate(start);
            while next != start {
                orbit.push(next);
                next = rotate(next);
            }
            orbit.iter().for_each(|&i| visited[i] = true);
            let total: u64 = orbit.iter().map(|&i| occupied[i]).sum();
            let mean = total as f64 / orbit.len() as f64;
            if mean >= 5.0 {
                for &i in &orbit {
                    observed.push(occupied[i]);
                    expected.push(mean);
                }
                df += orbit.len() - 1;
            }
        }
        let statistic = chi_square_statistic(&observed, &expected);
        assert!(
            statistic < chi_square_threshold(df),
            "chi-square {statistic} over {df} df"
        );
    }
}
