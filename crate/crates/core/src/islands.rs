//! Island model: λ lockstep (1+1) EAs with a global migration coin.
//!
//! Each round every island performs one mutation-selection step. With
//! probability 1/τ (one coin per round, shared by all islands) the round ends
//! with a migration: every island's post-selection incumbent is snapshotted,
//! then each island draws uniformly among its neighbors' best snapshots and
//! adopts the draw if it is not worse than its own incumbent. Migrants carry
//! their fitness, so migration costs no evaluations.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitstring::BitString;
use crate::ea::{ea_step, EaState, MutationParams, Mutator};
use crate::error::{Error, Result};
use crate::fitness::{FitnessSpec, FitnessValue, Variant};
use crate::rng::{mix, tag, RngStream};
use crate::stats::Summary;
use crate::topology::Topology;

/// Migration happens with probability `1/tau` per round; `Infinite` never migrates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tau {
    Finite(u64),
    Infinite,
}

impl Tau {
    pub fn new(tau: u64) -> Result<Self> {
        if tau == 0 {
            return Err(Error::Config("tau must be at least 1".into()));
        }
        Ok(Tau::Finite(tau))
    }
}

impl fmt::Display for Tau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tau::Finite(t) => write!(f, "{t}"),
            Tau::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    AnyOptimal,
    AllOptimal,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::AnyOptimal => "any_optimal",
            Termination::AllOptimal => "all_optimal",
        })
    }
}

impl FromStr for Termination {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "any_optimal" => Ok(Self::AnyOptimal),
            "all_optimal" => Ok(Self::AllOptimal),
            other => Err(Error::Config(format!("unknown termination {other:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct IslandRunConfig {
    pub lambda: usize,
    pub tau: Tau,
    pub topology: Topology,
    pub spec: FitnessSpec,
    pub termination: Termination,
    /// Maximum number of rounds.
    pub cap: u64,
    pub seed: u64,
}

impl IslandRunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.topology.lambda() != self.lambda {
            return Err(Error::Config(format!(
                "topology has {} islands but lambda = {}",
                self.topology.lambda(),
                self.lambda
            )));
        }
        if self.tau == Tau::Finite(0) {
            return Err(Error::Config("tau must be at least 1".into()));
        }
        if self.cap == 0 {
            return Err(Error::Config("round cap must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of one island-model execution.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunRecord {
    pub rounds: u64,
    /// `lambda * rounds`; initial evaluations are reported separately.
    pub evaluations: u64,
    pub initial_evaluations: u64,
    pub satisfied: bool,
    pub hit_rounds: Vec<Option<u64>>,
    pub migration_rounds: Vec<u64>,
    pub peak_valleys: usize,
    /// Largest valley count seen at the end of a round with migration.
    pub migration_peak_valleys: usize,
    /// Per island: `Some(true)` if the valley became incumbent before the
    /// optimum, `Some(false)` if the optimum came first.
    pub valley_first: Vec<Option<bool>>,
    pub trapped: bool,
}

/// Mutable state of a running island model.
#[derive(Clone, Debug)]
pub struct IslandState {
    pub islands: Vec<EaState>,
    pub round: u64,
    pub hit_rounds: Vec<Option<u64>>,
    pub migration_rounds: Vec<u64>,
    pub valley_count: usize,
    pub peak_valleys: usize,
    pub migration_peak_valleys: usize,
    pub valley_visited: Vec<bool>,
    pub valley_first: Vec<Option<bool>>,
    optimal: usize,
}

/// Random streams of one run: one per island plus the global migration coin.
#[derive(Clone, Debug)]
pub struct Streams {
    pub islands: Vec<RngStream>,
    pub coin: RngStream,
}

impl Streams {
    pub fn from_seed(seed: u64, lambda: usize) -> Self {
        Self {
            islands: (0..lambda)
                .map(|j| RngStream::derived(seed, &[tag::ISLAND, j as u64]))
                .collect(),
            coin: RngStream::derived(seed, &[tag::COIN]),
        }
    }
}

/// The island model runtime: config, state, streams and scratch buffers.
pub struct IslandModel<'a> {
    cfg: &'a IslandRunConfig,
    pub state: IslandState,
    pub streams: Streams,
    mutators: Vec<Mutator>,
    optimum_value: FitnessValue,
    valley: Option<(BitString, FitnessValue)>,
    snapshot: Vec<BitString>,
    snapshot_fitness: Vec<FitnessValue>,
    sources: Vec<Option<usize>>,
    escape: Option<ValleyEscape>,
    /// Round in which a valley island jumps to the optimum, once drawn.
    wake: Vec<Option<u64>>,
}

/// From the Fork valley the only accepted offspring other than the valley
/// itself is the optimum, reached with probability `q = p^d (1-p)^(n-d)` per
/// round (`d` the valley-optimum distance). The number of rounds until the
/// jump is therefore geometric and is drawn in one go.
#[derive(Clone, Debug)]
struct ValleyEscape {
    valley_value: FitnessValue,
    optimum: BitString,
    /// `ln(1 - q)`.
    ln_stay: f64,
}

impl ValleyEscape {
    fn for_spec(spec: &FitnessSpec) -> Option<Self> {
        let fork_like = match spec.variant() {
            Variant::Fork { .. } => true,
            Variant::Masked { inner, .. } => matches!(inner.variant(), Variant::Fork { .. }),
            _ => false,
        };
        let (valley, valley_value) = spec.valley()?.clone();
        if !fork_like {
            return None;
        }
        let optimum = spec.optimum().optimum.clone();
        let n = spec.n() as f64;
        let d = valley.hamming(&optimum) as f64;
        let p = 1.0 / n;
        let ln_q = d * p.ln() + (n - d) * (-p).ln_1p();
        Some(Self {
            valley_value,
            optimum,
            ln_stay: (-ln_q.exp()).ln_1p(),
        })
    }

    /// Rounds until the jump, counting the jumping round (at least 1).
    fn draw(&self, rng: &mut RngStream) -> u64 {
        let u = 1.0 - rng.unit();
        let g = (u.ln() / self.ln_stay).ceil();
        if g >= u64::MAX as f64 {
            u64::MAX
        } else {
            (g as u64).max(1)
        }
    }
}

impl<'a> IslandModel<'a> {
    /// Draws every island's initial string independently from its own stream.
    pub fn new(cfg: &'a IslandRunConfig) -> Result<Self> {
        cfg.validate()?;
        let mut streams = Streams::from_seed(cfg.seed, cfg.lambda);
        let islands: Vec<EaState> = streams
            .islands
            .iter_mut()
            .map(|rng| EaState::random(&cfg.spec, rng))
            .collect();
        Ok(Self::from_parts(cfg, islands, streams))
    }

    /// Starts from explicit incumbents. Used by tests and hand traces.
    pub fn with_islands(cfg: &'a IslandRunConfig, islands: Vec<BitString>) -> Result<Self> {
        cfg.validate()?;
        if islands.len() != cfg.lambda {
            return Err(Error::Config("one incumbent per island required".into()));
        }
        let islands = islands
            .into_iter()
            .map(|x| EaState::new(x, &cfg.spec))
            .collect();
        Ok(Self::from_parts(cfg, islands, Streams::from_seed(cfg.seed, cfg.lambda)))
    }

    fn from_parts(cfg: &'a IslandRunConfig, islands: Vec<EaState>, streams: Streams) -> Self {
        let lambda = cfg.lambda;
        let n = cfg.spec.n();
        let params = MutationParams { n_mut: n };
        let mut model = Self {
            cfg,
            state: IslandState {
                islands,
                round: 0,
                hit_rounds: vec![None; lambda],
                migration_rounds: Vec::new(),
                valley_count: 0,
                peak_valleys: 0,
                migration_peak_valleys: 0,
                valley_visited: vec![false; lambda],
                valley_first: vec![None; lambda],
                optimal: 0,
            },
            streams,
            mutators: (0..lambda).map(|_| Mutator::new(n, params)).collect(),
            optimum_value: cfg.spec.optimum_value(),
            valley: cfg.spec.valley().cloned(),
            snapshot: vec![BitString::zeros(n); lambda],
            snapshot_fitness: vec![0; lambda],
            sources: vec![None; lambda],
            escape: ValleyEscape::for_spec(&cfg.spec),
            wake: vec![None; lambda],
        };
        model.observe();
        model
    }

    pub fn config(&self) -> &IslandRunConfig {
        self.cfg
    }

    /// Simulates valley islands step by step instead of drawing their
    /// geometric escape time. Same distribution, different stream usage.
    pub fn stepwise(mut self) -> Self {
        self.escape = None;
        self
    }

    pub fn terminated(&self) -> bool {
        match self.cfg.termination {
            Termination::AnyOptimal => self.state.optimal > 0,
            Termination::AllOptimal => self.state.optimal == self.cfg.lambda,
        }
    }

    /// Recomputes the per-round observables after the incumbents changed.
    fn observe(&mut self) {
        let st = &mut self.state;
        let mut valleys = 0;
        let mut optimal = 0;
        for (j, isl) in st.islands.iter().enumerate() {
            if isl.current_fitness == self.optimum_value {
                optimal += 1;
                if st.hit_rounds[j].is_none() {
                    st.hit_rounds[j] = Some(st.round);
                }
                if st.valley_first[j].is_none() {
                    st.valley_first[j] = Some(false);
                }
            } else if let Some((v, value)) = &self.valley {
                if isl.current_fitness == *value && isl.current == *v {
                    valleys += 1;
                    st.valley_visited[j] = true;
                    if st.valley_first[j].is_none() {
                        st.valley_first[j] = Some(true);
                    }
                }
            }
        }
        st.optimal = optimal;
        st.valley_count = valleys;
        st.peak_valleys = st.peak_valleys.max(valleys);
    }

    /// One synchronous round: coin, per-island step, optional migration.
    pub fn round(&mut self) {
        self.state.round += 1;
        let migrate = match self.cfg.tau {
            Tau::Finite(tau) => self.streams.coin.below(tau as usize) == 0,
            Tau::Infinite => false,
        };
        self.mutation_phase();
        if migrate {
            let order: Vec<usize> = (0..self.cfg.lambda).collect();
            self.migration_phase(&order);
        }
        self.observe();
        if migrate {
            let st = &mut self.state;
            st.migration_peak_valleys = st.migration_peak_valleys.max(st.valley_count);
        }
    }

    fn mutation_phase(&mut self) {
        let spec = &self.cfg.spec;
        let round = self.state.round;
        for (j, ((isl, m), rng)) in self
            .state
            .islands
            .iter_mut()
            .zip(&mut self.mutators)
            .zip(&mut self.streams.islands)
            .enumerate()
        {
            if isl.current_fitness == self.optimum_value {
                // The unique optimum accepts only identical offspring.
                isl.evaluations += 1;
                continue;
            }
            if let Some(esc) = &self.escape {
                if isl.current_fitness == esc.valley_value {
                    let wake = *self.wake[j].get_or_insert_with(|| round.saturating_add(esc.draw(rng) - 1));
                    if wake == round {
                        isl.current.copy_from(&esc.optimum);
                        isl.current_fitness = self.optimum_value;
                        self.wake[j] = None;
                    }
                    isl.evaluations += 1;
                    continue;
                }
            }
            let before = isl.current_fitness;
            ea_step(isl, spec, m, rng);
            debug_assert!(isl.current_fitness >= before);
        }
    }

    /// Without migration, rounds in which every unfinished island waits in
    /// the valley change nothing; jump to the last of them.
    fn skip_idle_rounds(&mut self) {
        if self.escape.is_none() || self.cfg.tau != Tau::Infinite {
            return;
        }
        let mut next = u64::MAX;
        for (isl, wake) in self.state.islands.iter().zip(&self.wake) {
            if isl.current_fitness == self.optimum_value {
                continue;
            }
            match wake {
                Some(w) => next = next.min(*w),
                None => return,
            }
        }
        let target = next.min(self.cfg.cap);
        if target > self.state.round + 1 {
            let skip = target - 1 - self.state.round;
            self.state.round += skip;
            for isl in &mut self.state.islands {
                isl.evaluations += skip;
            }
        }
    }

    /// Snapshot, then per-island adoption. Decisions depend only on the
    /// snapshot and each island's own stream, so `order` cannot change the
    /// outcome.
    pub(crate) fn migration_phase(&mut self, order: &[usize]) {
        let topo = &self.cfg.topology;
        self.state.migration_rounds.push(self.state.round);
        for (j, isl) in self.state.islands.iter().enumerate() {
            self.snapshot[j].copy_from(&isl.current);
            self.snapshot_fitness[j] = isl.current_fitness;
        }
        let mut candidates: Vec<usize> = Vec::with_capacity(topo.degree());
        for &j in order {
            candidates.clear();
            let mut best = 0;
            topo.for_each_neighbor(j, |i| {
                let f = self.snapshot_fitness[i];
                if candidates.is_empty() || f > best {
                    best = f;
                    candidates.clear();
                    candidates.push(i);
                } else if f == best {
                    candidates.push(i);
                }
            });
            self.sources[j] = match candidates.len() {
                0 => None,
                1 => Some(candidates[0]),
                len => Some(candidates[self.streams.islands[j].below(len)]),
            }
            .filter(|&i| self.snapshot_fitness[i] >= self.snapshot_fitness[j]);
        }
        for &j in order {
            if let Some(i) = self.sources[j].take() {
                self.wake[j] = None;
                let isl = &mut self.state.islands[j];
                isl.current.copy_from(&self.snapshot[i]);
                isl.current_fitness = self.snapshot_fitness[i];
            }
        }
    }

    /// Runs rounds until termination or the cap.
    pub fn run(mut self) -> RunRecord {
        while !self.terminated() && self.state.round < self.cfg.cap {
            self.skip_idle_rounds();
            self.round();
        }
        self.into_record()
    }

    pub fn into_record(self) -> RunRecord {
        let satisfied = self.terminated();
        let lambda = self.cfg.lambda as u64;
        RunRecord {
            rounds: self.state.round,
            evaluations: lambda * self.state.round,
            initial_evaluations: lambda,
            satisfied,
            hit_rounds: self.state.hit_rounds,
            migration_rounds: self.state.migration_rounds,
            peak_valleys: self.state.peak_valleys,
            migration_peak_valleys: self.state.migration_peak_valleys,
            valley_first: self.state.valley_first,
            trapped: !satisfied,
        }
    }
}

pub fn island_run(cfg: &IslandRunConfig) -> Result<RunRecord> {
    Ok(IslandModel::new(cfg)?.run())
}

/// Replicate `i` of a cell uses seed `mix(master_seed, [REPLICATE, i])`.
pub fn replicate_seed(master_seed: u64, replicate: usize) -> u64 {
    mix(master_seed, &[tag::REPLICATE, replicate as u64])
}

/// Aggregate statistics over independent replicates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloSummary {
    pub replicates: usize,
    pub completed: usize,
    pub trapped: usize,
    pub rounds: Summary,
    pub evaluations: Summary,
    pub mean_migrations: f64,
    pub mean_peak_valleys: f64,
}

/// Runs `replicates` independent island runs on the current rayon pool.
/// Trapped replicates are counted but excluded from every statistic.
pub fn monte_carlo_runtime(
    cfg: &IslandRunConfig,
    replicates: usize,
    master_seed: u64,
) -> Result<MonteCarloSummary> {
    let records = monte_carlo_records(cfg, replicates, master_seed)?;
    summarize(&records)
}

pub fn monte_carlo_records(
    cfg: &IslandRunConfig,
    replicates: usize,
    master_seed: u64,
) -> Result<Vec<RunRecord>> {
    if replicates == 0 {
        return Err(Error::Config("at least one replicate required".into()));
    }
    cfg.validate()?;
    (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut c = cfg.clone();
            c.seed = replicate_seed(master_seed, i);
            island_run(&c)
        })
        .collect()
}

pub fn summarize(records: &[RunRecord]) -> Result<MonteCarloSummary> {
    let done: Vec<&RunRecord> = records.iter().filter(|r| !r.trapped).collect();
    if done.is_empty() {
        return Err(Error::AllTrapped(records.len()));
    }
    let rounds: Vec<f64> = done.iter().map(|r| r.rounds as f64).collect();
    let evals: Vec<f64> = done.iter().map(|r| r.evaluations as f64).collect();
    let k = done.len() as f64;
    Ok(MonteCarloSummary {
        replicates: records.len(),
        completed: done.len(),
        trapped: records.len() - done.len(),
        rounds: Summary::of(&rounds),
        evaluations: Summary::of(&evals),
        mean_migrations: done.iter().map(|r| r.migration_rounds.len() as f64).sum::<f64>() / k,
        mean_peak_valleys: done.iter().map(|r| r.peak_valleys as f64).sum::<f64>() / k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{build_chain, expected_hitting_time, Start};
    use crate::ea::{at_optimum, ea_run_with_stream};

    fn bits(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn config(spec: FitnessSpec, topology: Topology, tau: Tau, termination: Termination) -> IslandRunConfig {
        IslandRunConfig {
            lambda: topology.lambda(),
            tau,
            topology,
            spec,
            termination,
            cap: 10_000_000,
            seed: 1234,
        }
    }

    #[test]
    fn complete_hand_trace() {
        // Fitnesses (1, 2, 2) on LeadingOnes(4) with two distinct 2-strings.
        let spec = FitnessSpec::leading_ones(4).unwrap();
        let cfg = config(spec, Topology::complete(3).unwrap(), Tau::Finite(1), Termination::AllOptimal);
        let mut tied = [0usize; 2];
        for seed in 0..400 {
            let mut c = cfg.clone();
            c.seed = seed;
            let mut m = IslandModel::with_islands(&c, vec![bits("1000"), bits("1100"), bits("1101")]).unwrap();
            m.migration_phase(&[0, 1, 2]);
            let f: Vec<u64> = m.state.islands.iter().map(|s| s.current_fitness).collect();
            assert_eq!(f, vec![2, 2, 2]);
            // islands 1 and 2 each adopt the other's individual (tie goes to the migrant)
            assert_eq!(m.state.islands[1].current, bits("1101"));
            assert_eq!(m.state.islands[2].current, bits("1100"));
            if m.state.islands[0].current == bits("1100") {
                tied[0] += 1;
            } else {
                assert_eq!(m.state.islands[0].current, bits("1101"));
                tied[1] += 1;
            }
        }
        assert!(tied[0] > 150 && tied[1] > 150, "{tied:?}");
    }

    #[test]
    fn isolated_migration_is_noop() {
        let spec = FitnessSpec::one_max(6).unwrap();
        let cfg = config(spec, Topology::isolated(3).unwrap(), Tau::Finite(1), Termination::AllOptimal);
        let start = vec![bits("100000"), bits("111000"), bits("111111")];
        let mut m = IslandModel::with_islands(&cfg, start.clone()).unwrap();
        m.migration_phase(&[0, 1, 2]);
        let now: Vec<BitString> = m.state.islands.iter().map(|s| s.current.clone()).collect();
        assert_eq!(now, start);
    }

    #[test]
    fn migration_order_independent() {
        let spec = FitnessSpec::leading_ones(6).unwrap();
        for topo in [Topology::complete(5).unwrap(), Topology::ring(5).unwrap()] {
            let cfg = config(spec.clone(), topo, Tau::Finite(1), Termination::AllOptimal);
            let start = vec![bits("110000"), bits("111000"), bits("110100"), bits("111010"), bits("100000")];
            let mut a = IslandModel::with_islands(&cfg, start.clone()).unwrap();
            let mut b = IslandModel::with_islands(&cfg, start).unwrap();
            a.migration_phase(&[0, 1, 2, 3, 4]);
            b.migration_phase(&[4, 2, 0, 3, 1]);
            let sa: Vec<_> = a.state.islands.iter().map(|s| s.current.clone()).collect();
            let sb: Vec<_> = b.state.islands.iter().map(|s| s.current.clone()).collect();
            assert_eq!(sa, sb);
        }
    }

    #[test]
    fn complete_migration_equalizes_to_global_max() {
        let spec = FitnessSpec::one_max(12).unwrap();
        let cfg = config(spec, Topology::complete(6).unwrap(), Tau::Finite(7), Termination::AllOptimal);
        let mut m = IslandModel::new(&cfg).unwrap();
        for _ in 0..300 {
            if m.terminated() {
                break;
            }
            let before: Vec<u64> = m.state.islands.iter().map(|s| s.current_fitness).collect();
            let migrations = m.state.migration_rounds.len();
            m.round();
            let after: Vec<u64> = m.state.islands.iter().map(|s| s.current_fitness).collect();
            for (b, a) in before.iter().zip(&after) {
                assert!(a >= b);
            }
            if m.state.migration_rounds.len() > migrations {
                let max = *after.iter().max().unwrap();
                assert!(after.iter().all(|&f| f == max));
            }
        }
    }

    #[test]
    fn no_migration_equals_independent_runs() {
        let spec = FitnessSpec::leading_ones(10).unwrap();
        for (topo, tau) in [
            (Topology::complete(4).unwrap(), Tau::Infinite),
            (Topology::isolated(4).unwrap(), Tau::Finite(3)),
        ] {
            let cfg = config(spec.clone(), topo, tau, Termination::AllOptimal);
            let rec = island_run(&cfg).unwrap();
            for j in 0..4 {
                let mut rng = RngStream::derived(cfg.seed, &[tag::ISLAND, j as u64]);
                let params = MutationParams::new(10).unwrap();
                let (s, hit) = ea_run_with_stream(&spec, params, &mut rng, at_optimum(&spec), u64::MAX).unwrap();
                assert!(hit);
                assert_eq!(rec.hit_rounds[j], Some(s.evaluations), "{topo:?} island {j}");
            }
            assert_eq!(rec.rounds, rec.hit_rounds.iter().map(|h| h.unwrap()).max().unwrap());
        }
    }

    #[test]
    fn single_island_matches_exact_chain() {
        let spec = FitnessSpec::one_max(6).unwrap();
        let chain = build_chain(&spec, 6).unwrap();
        let exact = expected_hitting_time(&chain, &[chain.index_of(&spec.optimum().optimum)], &Start::Uniform).unwrap();
        let cfg = config(spec, Topology::complete(1).unwrap(), Tau::Finite(2), Termination::AnyOptimal);
        let s = monte_carlo_runtime(&cfg, 20_000, 77).unwrap();
        assert!((s.rounds.mean - exact).abs() < 3.0 * s.rounds.stderr, "{} vs {exact}", s.rounds.mean);
    }

    #[test]
    fn complete_spreads_optimum_in_one_event() {
        let spec = FitnessSpec::fork(8, 2).unwrap();
        let cfg = config(spec.clone(), Topology::complete(5).unwrap(), Tau::Finite(1), Termination::AllOptimal);
        let opt = spec.optimum().optimum.clone();
        let mut start = vec![bits("10101010"); 5];
        start[3] = opt;
        let rec = IslandModel::with_islands(&cfg, start).unwrap().run();
        assert!(rec.satisfied);
        assert_eq!(rec.rounds, 1);
    }

    #[test]
    fn ring_spreads_at_most_two_islands_per_event() {
        let spec = FitnessSpec::fork(16, 2).unwrap();
        let lambda = 9;
        let cfg = config(spec.clone(), Topology::ring(lambda).unwrap(), Tau::Finite(1), Termination::AllOptimal);
        let opt = spec.optimum().optimum.clone();
        let valley = spec.valley().unwrap().0.clone();
        // Everyone else sits in the valley, which only the optimum improves on,
        // and a direct valley-to-optimum jump has probability below 2e-5.
        let mut start = vec![valley; lambda];
        start[0] = opt;
        let mut m = IslandModel::with_islands(&cfg, start).unwrap();
        let mut reached = 1;
        while !m.terminated() {
            m.round();
            let now = m.state.islands.iter().filter(|s| s.current_fitness == 18).count();
            assert!(now <= reached + 2);
            reached = now;
        }
        assert!(m.state.migration_rounds.len() >= (lambda - 2).div_ceil(2));
    }

    #[test]
    fn record_accounting() {
        let spec = FitnessSpec::one_max(16).unwrap();
        let cfg = config(spec, Topology::ring(5).unwrap(), Tau::Finite(10), Termination::AllOptimal);
        let rec = island_run(&cfg).unwrap();
        assert_eq!(rec.evaluations, 5 * rec.rounds);
        assert_eq!(rec.initial_evaluations, 5);
        assert!(rec.satisfied && !rec.trapped);
        assert_eq!(rec, island_run(&cfg).unwrap());
    }

    #[test]
    fn cap_sets_trapped() {
        let spec = FitnessSpec::fork(20, 2).unwrap();
        let mut cfg = config(spec, Topology::isolated(3).unwrap(), Tau::Infinite, Termination::AllOptimal);
        cfg.cap = 5;
        let rec = island_run(&cfg).unwrap();
        assert!(rec.trapped);
        assert_eq!(rec.rounds, 5);
        assert!(matches!(monte_carlo_runtime(&cfg, 4, 1), Err(Error::AllTrapped(4))));
    }

    #[test]
    fn config_validation() {
        let spec = FitnessSpec::one_max(4).unwrap();
        let mut cfg = config(spec, Topology::ring(5).unwrap(), Tau::Finite(2), Termination::AnyOptimal);
        cfg.lambda = 4;
        assert!(island_run(&cfg).is_err());
        assert!(Tau::new(0).is_err());
    }

    #[test]
    fn monte_carlo_deterministic() {
        let spec = FitnessSpec::leading_ones(12).unwrap();
        let cfg = config(spec, Topology::ring(4).unwrap(), Tau::Finite(5), Termination::AllOptimal);
        let a = monte_carlo_runtime(&cfg, 50, 9).unwrap();
        let b = monte_carlo_runtime(&cfg, 50, 9).unwrap();
        assert_eq!(a, b);
        let c = monte_carlo_runtime(&cfg, 50, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn isolated_equals_matched_separate_runs() {
        let spec = FitnessSpec::one_max(12).unwrap();
        let cfg = config(spec.clone(), Topology::isolated(4).unwrap(), Tau::Finite(4), Termination::AllOptimal);
        let recs = monte_carlo_records(&cfg, 20, 5).unwrap();
        for (i, rec) in recs.iter().enumerate() {
            let seed = replicate_seed(5, i);
            for j in 0..4 {
                let mut rng = RngStream::derived(seed, &[tag::ISLAND, j as u64]);
                let (s, _) = ea_run_with_stream(&spec, MutationParams::new(12).unwrap(), &mut rng, at_optimum(&spec), u64::MAX).unwrap();
                assert_eq!(rec.hit_rounds[j], Some(s.evaluations));
            }
        }
    }

    #[test]
    fn valley_first_fraction_near_half() {
        let spec = FitnessSpec::fork(8, 2).unwrap();
        let cfg = config(spec, Topology::complete(1).unwrap(), Tau::Infinite, Termination::AnyOptimal);
        let recs = monte_carlo_records(&cfg, 4000, 3).unwrap();
        let valley = recs.iter().filter(|r| r.valley_first[0] == Some(true)).count();
        let frac = valley as f64 / 4000.0;
        assert!((frac - 0.5).abs() < 0.04, "{frac}");
    }

    #[test]
    fn valley_escape_matches_exact_chain() {
        let spec = FitnessSpec::fork(8, 2).unwrap();
        let chain = build_chain(&spec, 8).unwrap();
        let exact = expected_hitting_time(&chain, &[chain.index_of(&spec.optimum().optimum)], &Start::Uniform).unwrap();
        let cfg = config(spec, Topology::isolated(1).unwrap(), Tau::Infinite, Termination::AllOptimal);
        let s = monte_carlo_runtime(&cfg, 40_000, 21).unwrap();
        assert!((s.rounds.mean - exact).abs() < 4.0 * s.rounds.stderr, "{} vs {exact}", s.rounds.mean);
    }

    #[test]
    fn valley_escape_matches_stepwise() {
        let spec = FitnessSpec::fork(8, 2).unwrap();
        for (topo, tau) in [
            (Topology::isolated(3).unwrap(), Tau::Infinite),
            (Topology::ring(4).unwrap(), Tau::Finite(20)),
        ] {
            let cfg = config(spec.clone(), topo, tau, Termination::AllOptimal);
            let run = |fast: bool| -> Vec<f64> {
                (0..3000)
                    .map(|i| {
                        let mut c = cfg.clone();
                        c.seed = replicate_seed(99, i);
                        let m = IslandModel::new(&c).unwrap();
                        let m = if fast { m } else { m.stepwise() };
                        m.run().rounds as f64
                    })
                    .collect()
            };
            let fast = Summary::of(&run(true));
            let slow = Summary::of(&run(false));
            let se = (fast.stderr.powi(2) + slow.stderr.powi(2)).sqrt();
            assert!((fast.mean - slow.mean).abs() < 4.0 * se, "{topo:?}: {} vs {}", fast.mean, slow.mean);
        }
    }

    #[test]
    fn masked_fork_escapes_to_masked_optimum() {
        let spec = FitnessSpec::masked_fork(8, 2).unwrap();
        let cfg = config(spec.clone(), Topology::isolated(2).unwrap(), Tau::Infinite, Termination::AllOptimal);
        let valley = spec.valley().unwrap().0.clone();
        let rec = IslandModel::with_islands(&cfg, vec![valley.clone(), valley]).unwrap().run();
        assert!(rec.satisfied);
        assert_eq!(rec.valley_first, vec![Some(true), Some(true)]);
    }
}
