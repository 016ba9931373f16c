//! The (1+1) EA: standard bit mutation and accept-if-not-worse selection.

use crate::bitstring::BitString;
use crate::error::{Error, Result};
use crate::fitness::{FitnessSpec, FitnessValue};
use crate::rng::RngStream;

/// Flip probability is `1 / n_mut`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MutationParams {
    pub n_mut: usize,
}

impl MutationParams {
    pub fn new(n_mut: usize) -> Result<Self> {
        if n_mut == 0 {
            return Err(Error::Config("n_mut must be at least 1".into()));
        }
        Ok(Self { n_mut })
    }

    pub fn flip_probability(&self) -> f64 {
        1.0 / self.n_mut as f64
    }
}

/// Standard bit mutation for a fixed string length.
///
/// Samples the number of flipped bits `K ~ Bin(len, 1/n_mut)` by inversion of
/// a precomputed CDF, then a uniformly random `K`-subset of positions (Floyd's
/// algorithm). Given `K` every subset is equally likely, so the joint law of
/// the flip pattern is that of `len` independent Bernoulli(1/n_mut) flips.
#[derive(Clone, Debug)]
pub struct Mutator {
    len: usize,
    params: MutationParams,
    cdf: Vec<f64>,
    positions: Vec<usize>,
}

impl Mutator {
    pub fn new(len: usize, params: MutationParams) -> Self {
        let p = params.flip_probability();
        let mut cdf = Vec::with_capacity(len + 1);
        if p >= 1.0 {
            cdf.resize(len, 0.0);
            cdf.push(1.0);
        } else {
            // pmf(k + 1) = pmf(k) * (len - k) / (k + 1) * p / (1 - p)
            let ratio = p / (1.0 - p);
            let mut pmf = (len as f64 * (1.0 - p).ln()).exp();
            let mut acc = 0.0;
            for k in 0..=len {
                acc += pmf;
                cdf.push(acc.min(1.0));
                pmf *= (len - k) as f64 / (k + 1) as f64 * ratio;
            }
            *cdf.last_mut().unwrap() = 1.0;
        }
        Self {
            len,
            params,
            cdf,
            positions: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn params(&self) -> MutationParams {
        self.params
    }

    /// Number of bits to flip in the next offspring.
    #[inline]
    pub fn sample_count(&self, rng: &mut RngStream) -> usize {
        let u = rng.unit();
        let mut k = 0;
        while u >= self.cdf[k] {
            k += 1;
        }
        k
    }

    /// Draws a flip pattern and applies it to `x` in place. The flipped
    /// positions stay available through [`Mutator::last_flips`] so the caller
    /// can undo a rejected offspring.
    #[inline]
    pub fn mutate_in_place(&mut self, x: &mut BitString, rng: &mut RngStream) -> usize {
        debug_assert_eq!(x.len(), self.len);
        let k = self.sample_count(rng);
        self.positions.clear();
        if k == self.len {
            self.positions.extend(0..self.len);
        } else {
            for j in self.len - k..self.len {
                let t = rng.below(j + 1);
                let pick = if self.positions.contains(&t) { j } else { t };
                self.positions.push(pick);
            }
        }
        for &i in &self.positions {
            x.flip(i);
        }
        k
    }

    #[inline]
    pub fn last_flips(&self) -> &[usize] {
        &self.positions
    }

    #[inline]
    pub(crate) fn undo(&self, x: &mut BitString) {
        for &i in &self.positions {
            x.flip(i);
        }
    }
}

/// Returns an offspring of `x`; `x` itself is left untouched.
pub fn standard_bit_mutation(x: &BitString, params: MutationParams, rng: &mut RngStream) -> BitString {
    let mut y = x.clone();
    Mutator::new(x.len(), params).mutate_in_place(&mut y, rng);
    y
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EaState {
    pub current: BitString,
    pub current_fitness: FitnessValue,
    /// Loop iterations so far; the initial evaluation is not counted.
    pub evaluations: u64,
}

impl EaState {
    pub fn new(current: BitString, spec: &FitnessSpec) -> Self {
        let current_fitness = spec.evaluate(&current);
        Self {
            current,
            current_fitness,
            evaluations: 0,
        }
    }

    pub fn random(spec: &FitnessSpec, rng: &mut RngStream) -> Self {
        Self::new(BitString::random(spec.n(), rng), spec)
    }
}

/// Outcome of one mutation-selection step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    /// The offspring differed from the parent and was accepted.
    Moved,
    /// The offspring was identical to the parent (no bit flipped).
    Unchanged,
    Rejected,
}

/// One iteration of the (1+1) EA: mutate, evaluate, keep the offspring if it
/// is not worse. Ties go to the offspring.
#[inline]
pub fn ea_step(
    state: &mut EaState,
    spec: &FitnessSpec,
    mutator: &mut Mutator,
    rng: &mut RngStream,
) -> StepOutcome {
    state.evaluations += 1;
    if mutator.mutate_in_place(&mut state.current, rng) == 0 {
        return StepOutcome::Unchanged;
    }
    let f = spec.evaluate(&state.current);
    if f >= state.current_fitness {
        state.current_fitness = f;
        StepOutcome::Moved
    } else {
        mutator.undo(&mut state.current);
        StepOutcome::Rejected
    }
}

/// Runs the (1+1) EA from a uniformly random start drawn from `rng` until
/// `stop` fires or `cap` iterations have been made. Returns the final state
/// and whether `stop` fired.
pub fn ea_run_with_stream<F>(
    spec: &FitnessSpec,
    params: MutationParams,
    rng: &mut RngStream,
    mut stop: F,
    cap: u64,
) -> Result<(EaState, bool)>
where
    F: FnMut(&EaState) -> bool,
{
    if cap == 0 {
        return Err(Error::Config("iteration cap must be positive".into()));
    }
    let mut mutator = Mutator::new(spec.n(), params);
    let mut state = EaState::random(spec, rng);
    while !stop(&state) {
        if state.evaluations >= cap {
            return Ok((state, false));
        }
        let before = state.current_fitness;
        ea_step(&mut state, spec, &mut mutator, rng);
        debug_assert!(state.current_fitness >= before);
    }
    Ok((state, true))
}

pub fn ea_run<F>(
    spec: &FitnessSpec,
    params: MutationParams,
    seed: u64,
    stop: F,
    cap: u64,
) -> Result<(EaState, bool)>
where
    F: FnMut(&EaState) -> bool,
{
    ea_run_with_stream(spec, params, &mut RngStream::new(seed), stop, cap)
}

/// Termination predicate: the incumbent has the spec's optimum value.
pub fn at_optimum(spec: &FitnessSpec) -> impl Fn(&EaState) -> bool + '_ {
    let best = spec.optimum_value();
    move |s: &EaState| s.current_fitness == best
}
