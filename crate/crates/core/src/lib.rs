//! Exact ground states of planar Ising spin glasses through minimum-weight
//! perfect matching, plus the instance generators, stochastic baselines and
//! time-to-solution tooling used to benchmark them against each other.
//!
//! Module map:
//!
//! * [`ising`]: instances, spin configurations, energies, the text format and
//!   an exhaustive oracle for small systems.
//! * [`topology`]: Chimera, logical square lattice and anticluster builders.
//! * [`fcl`]: frustrated-cluster-loop instances with planted ground states.
//! * [`matching`]: exact minimum-weight perfect matching (blossom algorithm).
//! * [`planarity`]: LR planarity test, combinatorial embeddings and
//!   Kuratowski witnesses.
//! * [`ground_state`]: the matching-based exact solver for planar instances.
//! * [`heuristics`]: simulated annealing and parallel tempering with
//!   isoenergetic cluster moves.
//! * [`tts`] and [`bench`]: time-to-solution metrics, scaling fits and
//!   scaling experiments.

pub mod bench;
mod blossom;
pub mod fcl;
pub mod ground_state;
pub mod heuristics;
pub mod ising;
pub mod matching;
pub mod planarity;
pub mod topology;
pub mod tts;

pub use ising::{IsingInstance, SpinConfiguration, TopologyTag};

/// Identifier recorded in metadata for every seeded random stream.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng (rand_chacha 0.3, seed_from_u64 + set_stream)";
