//! Synchronous elitist cellular engine with centric selection.
//!
//! Every generation, each cell draws two parents from its Von Neumann
//! neighborhood by centric selection, recombines and mutates them, and keeps
//! the best of incumbent and children in a temporary grid; all cells switch
//! to the temporary grid at once. The engine records, per cell, the mating
//! type (how many selected parents were copies of the current global best)
//! and whether the mating produced a solution strictly better than the
//! pre-generation global best.

use rand::Rng;
use rand::SeedableRng;

use crate::grid::{neighborhood, GridConfig, Orientation};
use crate::problem::Problem;
use crate::RunRng;

/// Grid population plus its fitness cache.
///
/// `fitnesses[i]` always equals the problem fitness of `cells[i]`; every
/// constructor and every replacement path re-evaluates.
#[derive(Debug, Clone)]
pub struct Population<G> {
    cells: Vec<G>,
    fitnesses: Vec<f64>,
}

impl<G> Population<G> {
    pub fn from_cells<P>(cells: Vec<G>, problem: &P) -> Self
    where
        P: Problem<Genotype = G>,
    {
        let fitnesses = cells.iter().map(|c| problem.evaluate(c)).collect();
        Population { cells, fitnesses }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cell(&self, index: usize) -> &G {
        &self.cells[index]
    }

    pub fn fitness(&self, index: usize) -> f64 {
        self.fitnesses[index]
    }

    pub fn fitnesses(&self) -> &[f64] {
        &self.fitnesses
    }

    /// Best fitness in the population under the given orientation.
    pub fn best_fitness(&self, orientation: Orientation) -> f64 {
        let mut best = self.fitnesses[0];
        for &f in &self.fitnesses[1..] {
            if orientation.better(f, best) {
                best = f;
            }
        }
        best
    }
}

/// One candidate draw of the centric selection: the center of `neighbors`
/// with probability `beta`, each compass neighbor with `(1 - beta) / 4`.
#[inline]
pub fn draw_candidate(neighbors: &[usize; 5], beta: f64, rng: &mut RunRng) -> usize {
    if rng.random::<f64>() < beta {
        neighbors[0]
    } else {
        neighbors[1 + rng.random_range(0..4usize)]
    }
}

/// Deterministic tournament between two cells; exact fitness ties are
/// resolved uniformly at random to avoid positional bias.
#[inline]
pub fn tournament_winner<G>(
    a: usize,
    b: usize,
    population: &Population<G>,
    orientation: Orientation,
    rng: &mut RunRng,
) -> usize {
    let (fa, fb) = (population.fitness(a), population.fitness(b));
    if orientation.better(fa, fb) {
        a
    } else if orientation.better(fb, fa) {
        b
    } else if rng.random::<bool>() {
        a
    } else {
        b
    }
}

/// Centric selection around `index`: two candidate draws, then a
/// deterministic tournament. With `beta = 1` this always returns `index`.
pub fn centric_select<G>(
    population: &Population<G>,
    index: usize,
    config: &GridConfig,
    rng: &mut RunRng,
) -> usize {
    let neighbors = neighborhood(index, config);
    let first = draw_candidate(&neighbors, config.beta, rng);
    let second = draw_candidate(&neighbors, config.beta, rng);
    tournament_winner(first, second, population, config.orientation, rng)
}

/// Mating classification by the number of selected parents whose fitness
/// equals the current (pre-generation) global best fitness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatingType {
    /// Neither parent is a copy of the best ("00").
    NeitherBest,
    /// Exactly one parent is a copy of the best ("01").
    OneBest,
    /// Both parents are copies of the best ("11").
    BothBest,
}

impl MatingType {
    pub fn classify(first_is_best: bool, second_is_best: bool) -> Self {
        match (first_is_best, second_is_best) {
            (false, false) => MatingType::NeitherBest,
            (true, true) => MatingType::BothBest,
            _ => MatingType::OneBest,
        }
    }

    /// Index into `[n00, n01, n11]`-shaped arrays.
    pub fn index(self) -> usize {
        match self {
            MatingType::NeitherBest => 0,
            MatingType::OneBest => 1,
            MatingType::BothBest => 2,
        }
    }

    pub const ALL: [MatingType; 3] = [
        MatingType::NeitherBest,
        MatingType::OneBest,
        MatingType::BothBest,
    ];

    /// Two-digit label used in reports: "00", "01" or "11".
    pub fn label(self) -> &'static str {
        match self {
            MatingType::NeitherBest => "00",
            MatingType::OneBest => "01",
            MatingType::BothBest => "11",
        }
    }
}

/// Per-generation mating counts; `n00 + n01 + n11` equals the population
/// size (one recorded mating per cell per generation).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MatingCounts {
    pub n00: u64,
    pub n01: u64,
    pub n11: u64,
}

impl MatingCounts {
    pub fn add(&mut self, mating: MatingType) {
        match mating {
            MatingType::NeitherBest => self.n00 += 1,
            MatingType::OneBest => self.n01 += 1,
            MatingType::BothBest => self.n11 += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.n00 + self.n01 + self.n11
    }

    pub fn get(&self, mating: MatingType) -> u64 {
        match mating {
            MatingType::NeitherBest => self.n00,
            MatingType::OneBest => self.n01,
            MatingType::BothBest => self.n11,
        }
    }
}

/// What one generation recorded: the mating-type tally and, per improving
/// mating, the type and the fitness of its best improving child.
#[derive(Debug, Clone, Default)]
pub struct GenerationStats {
    pub counts: MatingCounts,
    pub improvements: Vec<(MatingType, f64)>,
}

/// A mating that produced a solution strictly better than the global best
/// seen before its generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImprovementEvent {
    pub generation: u64,
    pub mating: MatingType,
    pub new_best_fitness: f64,
}

/// Full record of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    /// Best population fitness after each generation; entry 0 is the initial
    /// population. Monotone non-worsening because replacement is elitist.
    pub best_fitness_series: Vec<f64>,
    pub improvement_events: Vec<ImprovementEvent>,
    pub mating_counts: Vec<MatingCounts>,
    pub seed: u64,
    pub generations_run: u64,
}

impl RunLog {
    pub fn final_best(&self) -> f64 {
        *self
            .best_fitness_series
            .last()
            .expect("series holds at least the initial best")
    }
}

/// One synchronous generation. Reads only the pre-generation population, so
/// the outcome is independent of the cell processing order.
pub fn step_generation<P: Problem>(
    population: &Population<P::Genotype>,
    problem: &P,
    config: &GridConfig,
    rng: &mut RunRng,
) -> (Population<P::Genotype>, GenerationStats) {
    let lambda = config.lambda();
    assert_eq!(population.len(), lambda, "population size mismatch");
    let orientation = config.orientation;
    let pre_best = population.best_fitness(orientation);

    let mut cells = Vec::with_capacity(lambda);
    let mut fitnesses = Vec::with_capacity(lambda);
    let mut stats = GenerationStats::default();

    for i in 0..lambda {
        let first = centric_select(population, i, config, rng);
        let second = centric_select(population, i, config, rng);
        let mating = MatingType::classify(
            population.fitness(first) == pre_best,
            population.fitness(second) == pre_best,
        );
        stats.counts.add(mating);

        let (mut child_a, mut child_b) =
            problem.crossover(population.cell(first), population.cell(second), rng);
        problem.mutate(&mut child_a, rng);
        problem.mutate(&mut child_b, rng);
        let fit_a = problem.evaluate(&child_a);
        let fit_b = problem.evaluate(&child_b);

        if orientation.better(fit_a, pre_best) || orientation.better(fit_b, pre_best) {
            stats
                .improvements
                .push((mating, orientation.best(fit_a, fit_b)));
        }

        // Best child first (exact ties between the children break uniformly
        // at random), then strict-improvement elitism against the incumbent.
        let (best_child, best_child_fit) = if orientation.better(fit_a, fit_b) {
            (child_a, fit_a)
        } else if orientation.better(fit_b, fit_a) {
            (child_b, fit_b)
        } else if rng.random::<bool>() {
            (child_a, fit_a)
        } else {
            (child_b, fit_b)
        };
        if orientation.better(best_child_fit, population.fitness(i)) {
            cells.push(best_child);
            fitnesses.push(best_child_fit);
        } else {
            cells.push(population.cell(i).clone());
            fitnesses.push(population.fitness(i));
        }
    }

    (Population { cells, fitnesses }, stats)
}

/// Run the engine for a fixed generation budget.
///
/// Deterministic given `(seed, config, problem instance)`.
pub fn run<P: Problem>(
    problem: &P,
    config: &GridConfig,
    generations: u64,
    seed: u64,
) -> RunLog {
    run_with_population(problem, config, generations, seed).0
}

/// As [`run`], additionally returning the final population.
pub fn run_with_population<P: Problem>(
    problem: &P,
    config: &GridConfig,
    generations: u64,
    seed: u64,
) -> (RunLog, Population<P::Genotype>) {
    assert!(generations >= 1, "generation budget must be >= 1");
    assert_eq!(
        config.orientation,
        problem.orientation(),
        "config orientation must match the problem backend"
    );
    let mut rng = RunRng::seed_from_u64(seed);
    let cells = (0..config.lambda())
        .map(|_| problem.random_solution(&mut rng))
        .collect();
    let mut population = Population::from_cells(cells, problem);

    let mut log = RunLog {
        best_fitness_series: vec![population.best_fitness(config.orientation)],
        improvement_events: Vec::new(),
        mating_counts: Vec::with_capacity(generations as usize),
        seed,
        generations_run: 0,
    };

    for generation in 1..=generations {
        let (next, stats) = step_generation(&population, problem, config, &mut rng);
        population = next;
        log.best_fitness_series
            .push(population.best_fitness(config.orientation));
        log.mating_counts.push(stats.counts);
        for (mating, fitness) in stats.improvements {
            log.improvement_events.push(ImprovementEvent {
                generation,
                mating,
                new_best_fitness: fitness,
            });
        }
        log.generations_run = generation;
    }

    (log, population)
}
