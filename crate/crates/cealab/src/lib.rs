//! Cellular evolutionary algorithm laboratory.
//!
//! The population lives on a toroidal grid; every cell mates with parents
//! drawn from its Von Neumann neighborhood through *centric selection*, a
//! two-candidate deterministic tournament whose single parameter `beta`
//! controls the probability of drawing the center cell and therefore the
//! selective pressure on the population.
//!
//! The crate bundles:
//!
//! * the synchronous elitist engine ([`engine`]) with mating-type and
//!   improvement bookkeeping,
//! * two problem backends: the quadratic assignment problem ([`qap`]) and
//!   NK fitness landscapes ([`nk`]),
//! * selection-only takeover experiments measuring selective pressure
//!   ([`takeover`]),
//! * the punctuated-equilibria machinery relating mating counts and
//!   per-mating-type success probabilities to the probability of finding a
//!   new best solution ([`pem`]),
//! * batch experiment drivers with CSV output ([`experiments`]) behind the
//!   `cealab` command-line tool.

pub mod engine;
pub mod experiments;
pub mod grid;
pub mod nk;
pub mod pem;
pub mod problem;
pub mod qap;
pub mod stats;
pub mod takeover;

/// Deterministic random stream used by every run.
///
/// One stream per run, seeded from the run seed; replicate `r` of a batch
/// uses `base_seed + r` (see [`replicate_seed`]). ChaCha keeps the stream
/// identical across platforms and invocations.
pub type RunRng = rand_chacha::ChaCha12Rng;

/// Seed of the `replicate`-th run of a batch with the given base seed.
pub fn replicate_seed(base_seed: u64, replicate: u64) -> u64 {
    base_seed.wrapping_add(replicate)
}

/// Fresh run stream for a seed.
pub fn run_rng(seed: u64) -> RunRng {
    use rand::SeedableRng;
    RunRng::seed_from_u64(seed)
}
