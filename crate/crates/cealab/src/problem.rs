//! Problem backend abstraction consumed by the engine.

use crate::grid::Orientation;
use crate::RunRng;

/// An optimization problem pluggable into the cellular engine.
///
/// Implementations must be freely shareable for concurrent reads: batches of
/// replicate runs evaluate the same instance from several threads.
pub trait Problem: Sync {
    type Genotype: Clone + Send;

    fn orientation(&self) -> Orientation;

    /// Uniformly random solution for population initialization.
    fn random_solution(&self, rng: &mut RunRng) -> Self::Genotype;

    fn evaluate(&self, genotype: &Self::Genotype) -> f64;

    /// Recombine two parents into two children.
    fn crossover(
        &self,
        a: &Self::Genotype,
        b: &Self::Genotype,
        rng: &mut RunRng,
    ) -> (Self::Genotype, Self::Genotype);

    /// Mutate a child in place. Called exactly once per child.
    fn mutate(&self, genotype: &mut Self::Genotype, rng: &mut RunRng);
}
