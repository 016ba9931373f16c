//! Constructive black-box upper bound for Fork: climb to `1^n` (or one of the
//! two special points) with the (1+1) EA, then query every string at Hamming
//! distance `r` from `1^n` in a fixed order.

use serde::Serialize;

use crate::bitstring::BitString;
use crate::ea::{ea_run_with_stream, MutationParams};
use crate::error::Result;
use crate::fitness::FitnessSpec;
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BlackBoxOutcome {
    /// Evaluations of the climbing phase, including the initial one.
    pub climb_evaluations: u64,
    pub enumeration_evaluations: u64,
}

impl BlackBoxOutcome {
    pub fn total(&self) -> u64 {
        self.climb_evaluations + self.enumeration_evaluations
    }
}

/// Calls `visit` on each `r`-subset of `0..n` in lexicographic order until it
/// returns `true`. Returns the number of subsets visited.
pub fn for_each_subset(n: usize, r: usize, mut visit: impl FnMut(&[usize]) -> bool) -> u64 {
    if r > n {
        return 0;
    }
    let mut idx: Vec<usize> = (0..r).collect();
    let mut count = 0;
    loop {
        count += 1;
        if visit(&idx) {
            return count;
        }
        // advance to the next combination
        let Some(i) = (0..r).rev().find(|&i| idx[i] != i + n - r) else {
            return count;
        };
        idx[i] += 1;
        for j in i + 1..r {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

pub fn black_box_fork(n: usize, r: usize, seed: u64) -> Result<BlackBoxOutcome> {
    let spec = FitnessSpec::fork(n, r)?;
    let mut rng = RngStream::new(seed);
    black_box_fork_with_stream(&spec, &mut rng)
}

pub fn black_box_fork_with_stream(spec: &FitnessSpec, rng: &mut RngStream) -> Result<BlackBoxOutcome> {
    let n = spec.n();
    let r = spec.fork_r().expect("black-box search runs on Fork");
    let top = n as u64;
    let params = MutationParams::new(n)?;
    // Fitness >= n holds exactly at 1^n, the valley and the optimum.
    let (state, _) = ea_run_with_stream(spec, params, rng, |s| s.current_fitness >= top, u64::MAX)?;
    let climb_evaluations = 1 + state.evaluations;
    if state.current_fitness == spec.optimum_value() {
        return Ok(BlackBoxOutcome {
            climb_evaluations,
            enumeration_evaluations: 0,
        });
    }
    let ones = BitString::ones(n);
    let best = spec.optimum_value();
    let enumeration_evaluations = for_each_subset(n, r, |flips| {
        let mut y = ones.clone();
        for &i in flips {
            y.flip(i);
        }
        spec.evaluate(&y) == best
    });
    Ok(BlackBoxOutcome {
        climb_evaluations,
        enumeration_evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsets_in_lexicographic_order() {
        let mut seen = Vec::new();
        let count = for_each_subset(4, 2, |s| {
            seen.push(s.to_vec());
            false
        });
        assert_eq!(count, 6);
        assert_eq!(
            seen,
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        assert_eq!(for_each_subset(6, 2, |s| s == [1, 2]), 6);
    }

    #[test]
    fn enumeration_bounded_by_binomial() {
        for seed in 0..200 {
            let out = black_box_fork(6, 2, seed).unwrap();
            assert!(out.enumeration_evaluations <= 15);
            assert!(out.climb_evaluations >= 1);
        }
    }

    #[test]
    fn optimal_start_skips_enumeration() {
        let spec = FitnessSpec::fork(6, 2).unwrap();
        // Find a seed whose first draw is the optimum (probability 1/64).
        let seed = (0..10_000u64)
            .find(|&s| {
                let mut rng = RngStream::new(s);
                BitString::random(6, &mut rng) == spec.optimum().optimum
            })
            .unwrap();
        let out = black_box_fork(6, 2, seed).unwrap();
        assert_eq!(out.enumeration_evaluations, 0);
        assert_eq!(out.climb_evaluations, 1);
    }
}
