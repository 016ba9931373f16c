//! Exact references: Markov-chain hitting times and probabilities of the
//! (1+1) EA, closed-form runtimes and bounds, and the black-box Fork search.

mod black_box;
mod chain;
mod closed_form;

pub use black_box::{black_box_fork, black_box_fork_with_stream, for_each_subset, BlackBoxOutcome};
pub use chain::{
    build_chain, expected_hitting_time, hitting_probability, solve_dense, ExactChain, Start,
    MAX_CHAIN_BITS, MEMORY_NOTICE_BYTES,
};
pub use closed_form::{
    choose_sum_div, exact_lo_runtime, geometric_min_bounds, lo_block_runtime, GeometricBoundCheck,
};
