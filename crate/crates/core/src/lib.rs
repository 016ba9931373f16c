//! Island-model evolutionary algorithm simulator with exact (1+1) EA oracles.
//!
//! * [`fitness`]: OneMax, LeadingOnes, Fork, masks and k-block composites.
//! * [`ea`]: the (1+1) EA with standard bit mutation.
//! * [`topology`] and [`islands`]: λ lockstep EAs exchanging their best
//!   individuals over a complete, ring or empty migration graph.
//! * [`analytic`]: exact hitting times and probabilities on the full
//!   `2^n`-state chain plus closed-form runtimes.
//! * [`harness`]: scenarios, sweeps, exponent fits, CSV output and the
//!   acceptance suite.

pub mod analytic;
pub mod bitstring;
pub mod ea;
pub mod error;
pub mod fitness;
pub mod harness;
pub mod islands;
pub mod rng;
pub mod stats;
pub mod topology;

pub use bitstring::BitString;
pub use error::{Error, Result};
pub use fitness::{FitnessSpec, FitnessValue, OptimumWitness};
pub use islands::{IslandRunConfig, RunRecord, Tau, Termination};
pub use topology::{Topology, TopologyKind};
