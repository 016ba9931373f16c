//! The acceptance suite: every primary criterion as a self-contained check
//! with a machine-readable result.

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{
    black_box_fork_with_stream, build_chain, choose_sum_div, exact_lo_runtime, expected_hitting_time,
    geometric_min_bounds, lo_block_runtime, Start,
};
use crate::error::{Error, Result};
use crate::fitness::{FitnessSpec, SpecConfig, VariantConfig};
use crate::harness::analysis::{exact_valley_first, fit_exponent, fit_means, valley_first_test, Field};
use crate::harness::run::{csv_bytes, run_all, run_cell};
use crate::harness::scenario::{parse_config, Algorithm, CapRule, Rule, Scenario};
use crate::islands::{monte_carlo_records, replicate_seed, IslandRunConfig, RunRecord, Tau, Termination};
use crate::topology::{Topology, TopologyKind};
use crate::rng::{mix, RngStream};
use crate::stats::{mann_whitney, Summary};

/// Config of the topology-separation sweep, also shipped for `simulate`.
pub const TOPOLOGY_CONFIG: &str = include_str!("../../configs/topology_separation.json");

pub const REPORT_SCHEMA: &str = "island-evo-verify/1";

/// Tolerances, grids and replicate counts of the suite. Every field has the
/// documented default; a JSON file may override any subset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub seed: u64,
    pub lo_n: Vec<usize>,
    pub lo_rel_tol: f64,
    pub block_rel_tol: f64,
    pub valley_exact_n: Vec<usize>,
    pub valley_exact_tol: f64,
    pub valley_mc_replicates: usize,
    pub consistency_replicates: usize,
    pub consistency_sigmas: f64,
    pub fork_ea_n: Vec<usize>,
    pub fork_ea_replicates: usize,
    pub fork_ea_slope: f64,
    pub fork_ea_slope_tol: f64,
    pub black_box_n: Vec<usize>,
    pub black_box_replicates: usize,
    pub black_box_slope: f64,
    pub black_box_slope_tol: f64,
    pub topology_replicates: usize,
    pub topology_alpha: f64,
    pub geometric_jumps: Vec<f64>,
    pub geometric_max_agents: usize,
    pub choose_sum_max_n: usize,
    pub choose_sum_range: (f64, f64),
    pub choose_sum_tight_from: usize,
    pub choose_sum_tight_range: (f64, f64),
    pub determinism_threads: (usize, usize),
    pub determinism_replicates: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            seed: 20240607,
            lo_n: (2..=10).collect(),
            lo_rel_tol: 1e-9,
            block_rel_tol: 1e-6,
            valley_exact_n: vec![4, 6, 8],
            valley_exact_tol: 1e-9,
            valley_mc_replicates: 100_000,
            consistency_replicates: 100_000,
            consistency_sigmas: 3.0,
            fork_ea_n: vec![8, 12, 16, 20, 24],
            fork_ea_replicates: 200,
            fork_ea_slope: 4.0,
            fork_ea_slope_tol: 0.6,
            black_box_n: vec![16, 24, 32, 48],
            black_box_replicates: 2000,
            black_box_slope: 2.0,
            black_box_slope_tol: 0.4,
            topology_replicates: 300,
            topology_alpha: 0.01,
            geometric_jumps: vec![2.0, 10.0, 100.0, 1e4],
            geometric_max_agents: 64,
            choose_sum_max_n: 200,
            choose_sum_range: (0.4, 2.5),
            choose_sum_tight_from: 60,
            choose_sum_tight_range: (1.9, 2.1),
            determinism_threads: (1, 4),
            determinism_replicates: 40,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub measured: f64,
    pub bound: String,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} {} {}: measured {} (bound {}) [{:.1}s] {}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            short(self.measured),
            self.bound,
            self.seconds,
            self.detail
        )
    }
}

fn short(x: f64) -> String {
    if x != 0.0 && x.is_finite() && (x.abs() < 1e-3 || x.abs() >= 1e6) {
        format!("{x:.3e}")
    } else {
        format!("{x:.4}")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub criteria: Vec<CriterionResult>,
    pub passed: usize,
    pub failed: usize,
    pub all_pass: bool,
}

/// Identifier and short name of every criterion, in run order.
pub const CRITERIA: [(u32, &str); 10] = [
    (1, "leadingones exact runtime"),
    (2, "block composition exact runtime"),
    (3, "valley before optimum"),
    (4, "oracle and simulation agree"),
    (5, "single EA exponent on Fork"),
    (6, "black-box exponent on Fork"),
    (7, "topology separation"),
    (8, "geometric minimum sandwich"),
    (9, "choose-sum boundedness"),
    (10, "thread-count determinism"),
];

/// Partial outcome before timing and naming are attached.
struct Outcome {
    measured: f64,
    bound: String,
    pass: bool,
    detail: String,
}

pub fn run_criterion(id: u32, th: &Thresholds) -> CriterionResult {
    let name = CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .map(|c| c.1.to_string())
        .unwrap_or_else(|| format!("unknown criterion {id}"));
    let start = Instant::now();
    let outcome = match id {
        1 => leadingones_exact(th),
        2 => block_exact(th),
        3 => valley_before_optimum(th),
        4 => oracle_consistency(th),
        5 => single_ea_exponent(th),
        6 => black_box_exponent(th),
        7 => topology_separation(th),
        8 => geometric_sandwich(th),
        9 => choose_sum_bounded(th),
        10 => thread_determinism(th),
        _ => Err(Error::Config(format!("no criterion {id}"))),
    };
    let outcome = outcome.unwrap_or_else(|e| Outcome {
        measured: f64::NAN,
        bound: "-".into(),
        pass: false,
        detail: format!("error: {e}"),
    });
    CriterionResult {
        id,
        name,
        measured: outcome.measured,
        bound: outcome.bound,
        pass: outcome.pass,
        detail: outcome.detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Runs the selected criteria (all when `only` is `None`), reporting each
/// result to `progress` as soon as it is known. Failures never stop the run.
pub fn verify_all(th: &Thresholds, only: Option<&[u32]>, mut progress: impl FnMut(&CriterionResult)) -> Report {
    let mut criteria = Vec::new();
    for &(id, _) in &CRITERIA {
        if only.is_some_and(|ids| !ids.contains(&id)) {
            continue;
        }
        let res = run_criterion(id, th);
        progress(&res);
        criteria.push(res);
    }
    let passed = criteria.iter().filter(|c| c.pass).count();
    let failed = criteria.len() - passed;
    Report {
        schema: REPORT_SCHEMA.into(),
        criteria,
        passed,
        failed,
        all_pass: failed == 0,
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn optimum_time(spec: &FitnessSpec, n_mut: usize) -> Result<f64> {
    let chain = build_chain(spec, n_mut)?;
    let target = chain.index_of(&spec.optimum().optimum);
    expected_hitting_time(&chain, &[target], &Start::Uniform)
}

fn leadingones_exact(th: &Thresholds) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for &n in &th.lo_n {
        let chain_time = optimum_time(&FitnessSpec::leading_ones(n)?, n)?;
        let formula = exact_lo_runtime(n)?;
        let e = rel_err(chain_time, formula);
        worst = worst.max(e);
        detail.push(format!("n={n}: {chain_time:.6}"));
    }
    Ok(Outcome {
        measured: worst,
        bound: format!("max rel err <= {:e}", th.lo_rel_tol),
        pass: worst <= th.lo_rel_tol,
        detail: detail.join(", "),
    })
}

fn block_exact(th: &Thresholds) -> Result<Outcome> {
    let (n, k) = (12, 6);
    let inner = FitnessSpec::masked_fork(k, 2)?;
    let inner_time = optimum_time(&inner, n)?;
    let full = FitnessSpec::lo_block(n, inner)?;
    let full_time = optimum_time(&full, n)?;
    let formula = lo_block_runtime(n, k, inner_time)?;
    let e = rel_err(full_time, formula);
    Ok(Outcome {
        measured: e,
        bound: format!("rel err <= {:e}", th.block_rel_tol),
        pass: e <= th.block_rel_tol,
        detail: format!("inner {inner_time:.6}, chain {full_time:.6}, formula {formula:.6}"),
    })
}

fn valley_before_optimum(th: &Thresholds) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for &n in &th.valley_exact_n {
        let p = exact_valley_first(n, 2)?;
        worst = worst.max((p - 0.5).abs());
        detail.push(format!("n={n}: {p:.12}"));
    }
    let mc = valley_first_test(8, 2, th.valley_mc_replicates, mix(th.seed, &[3]))?;
    detail.push(format!(
        "MC n=8: {:.5} in [{:.5}, {:.5}]",
        mc.fraction, mc.interval.0, mc.interval.1
    ));
    Ok(Outcome {
        measured: worst,
        bound: format!("|p - 1/2| <= {:e} and 1/2 in 99% Wilson interval", th.valley_exact_tol),
        pass: worst <= th.valley_exact_tol && mc.pass,
        detail: detail.join(", "),
    })
}

fn single_ea_rounds(spec: &FitnessSpec, replicates: usize, seed: u64) -> Result<Vec<RunRecord>> {
    let cfg = IslandRunConfig {
        lambda: 1,
        tau: Tau::Infinite,
        topology: Topology::isolated(1)?,
        spec: spec.clone(),
        termination: Termination::AllOptimal,
        cap: u64::MAX,
        seed,
    };
    monte_carlo_records(&cfg, replicates, seed)
}

fn oracle_consistency(th: &Thresholds) -> Result<Outcome> {
    let specs = [
        FitnessSpec::one_max(10)?,
        FitnessSpec::leading_ones(10)?,
        FitnessSpec::fork(8, 2)?,
    ];
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        let exact = optimum_time(spec, spec.n())?;
        let recs = single_ea_rounds(spec, th.consistency_replicates, mix(th.seed, &[4, i as u64]))?;
        let rounds: Vec<f64> = recs.iter().map(|r| r.rounds as f64).collect();
        let s = Summary::of(&rounds);
        let z = (s.mean - exact).abs() / s.stderr;
        worst = worst.max(z);
        detail.push(format!("{}({}): {:.4} vs {exact:.4} ({z:.2} SE)", spec.label(), spec.n(), s.mean));
    }
    Ok(Outcome {
        measured: worst,
        bound: format!("|mean - exact| <= {} SE", th.consistency_sigmas),
        pass: worst <= th.consistency_sigmas,
        detail: detail.join(", "),
    })
}

fn fork_scenario(name: &str, algorithm: Algorithm, n_grid: Vec<usize>, replicates: usize, seed: u64) -> Scenario {
    Scenario {
        name: name.into(),
        algorithm,
        spec: SpecConfig {
            variant: VariantConfig::Fork { r: 2, masked: false },
            n: None,
        },
        topology: None,
        n_grid,
        lambda_rule: Rule::Constant(1),
        tau_rule: Rule::Infinity,
        replicates,
        termination: Termination::AllOptimal,
        master_seed: seed,
        cap_rule: CapRule::Default,
    }
}

fn single_ea_exponent(th: &Thresholds) -> Result<Outcome> {
    let s = fork_scenario(
        "fork_single_ea",
        Algorithm::SingleEa,
        th.fork_ea_n.clone(),
        th.fork_ea_replicates,
        mix(th.seed, &[5]),
    );
    let rows = run_all(&[s])?;
    let trapped: usize = rows.iter().map(|r| r.trapped).sum();
    let fit = fit_exponent(&rows, Field::Rounds)?;
    let means: Vec<String> = rows
        .iter()
        .map(|r| format!("n={}: {:.0}", r.n, r.mean_rounds.unwrap_or(f64::NAN)))
        .collect();
    Ok(Outcome {
        measured: fit.slope,
        bound: format!("{} +- {}", th.fork_ea_slope, th.fork_ea_slope_tol),
        pass: (fit.slope - th.fork_ea_slope).abs() <= th.fork_ea_slope_tol && trapped == 0,
        detail: format!(
            "slope se {:.3}, R^2 {:.4}, trapped {trapped}, {}",
            fit.slope_stderr,
            fit.r_squared,
            means.join(", ")
        ),
    })
}

fn black_box_exponent(th: &Thresholds) -> Result<Outcome> {
    let mut points = Vec::new();
    for &n in &th.black_box_n {
        let spec = FitnessSpec::fork(n, 2)?;
        let seed = mix(th.seed, &[6, n as u64]);
        let totals: Vec<f64> = (0..th.black_box_replicates)
            .into_par_iter()
            .map(|i| {
                let mut rng = RngStream::new(replicate_seed(seed, i));
                black_box_fork_with_stream(&spec, &mut rng).map(|o| o.total() as f64)
            })
            .collect::<Result<_>>()?;
        points.push((n, Summary::of(&totals).mean));
    }
    let fit = fit_means(&points)?;
    let means: Vec<String> = points.iter().map(|(n, m)| format!("n={n}: {m:.1}")).collect();
    Ok(Outcome {
        measured: fit.slope,
        bound: format!("{} +- {}", th.black_box_slope, th.black_box_slope_tol),
        pass: (fit.slope - th.black_box_slope).abs() <= th.black_box_slope_tol,
        detail: format!("slope se {:.3}, {}", fit.slope_stderr, means.join(", ")),
    })
}

fn topology_separation(th: &Thresholds) -> Result<Outcome> {
    let mut scenarios = parse_config(TOPOLOGY_CONFIG)?;
    for s in &mut scenarios {
        s.replicates = th.topology_replicates;
    }
    let find = |name: &str| {
        scenarios
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::Config(format!("topology config lacks scenario {name:?}")))
    };
    let (ring, complete, isolated) = (find("ring")?, find("complete")?, find("isolated")?);
    let mut worst_p: f64 = 0.0;
    let mut pass = true;
    let mut detail = Vec::new();
    for &n in &ring.n_grid {
        let mut evals = Vec::new();
        let mut peaks = Vec::new();
        let mut takeover = Vec::new();
        for s in [ring, complete, isolated] {
            let cell = s.cell(n)?;
            let (row, recs) = run_cell(&cell)?;
            if row.trapped > 0 {
                pass = false;
                detail.push(format!("{} n={n}: {} trapped", s.name, row.trapped));
            }
            let done: Vec<&RunRecord> = recs.iter().filter(|r| !r.trapped).collect();
            evals.push(done.iter().map(|r| r.evaluations as f64).collect::<Vec<_>>());
            peaks.push(row.mean_peak_valleys.unwrap_or(f64::NAN));
            let full = done.iter().filter(|r| r.peak_valleys == cell.config.lambda).count();
            takeover.push(full as f64 / done.len().max(1) as f64);
        }
        let means: Vec<f64> = evals.iter().map(|e| Summary::of(e).mean).collect();
        let rc = mann_whitney(&evals[0], &evals[1]);
        let ci = mann_whitney(&evals[1], &evals[2]);
        worst_p = worst_p.max(rc.p_two_sided).max(ci.p_two_sided);
        let ordered = means[0] < means[1] && means[1] < means[2];
        let significant = rc.p_two_sided < th.topology_alpha && ci.p_two_sided < th.topology_alpha;
        let trap = peaks[1] > peaks[0];
        pass &= ordered && significant && trap;
        detail.push(format!(
            "n={n}: evals ring {:.0} < complete {:.0} < isolated {:.0} [{}] p {:.1e}/{:.1e}; \
             peak valleys complete {:.2} vs ring {:.2} [{}]; full takeover complete {:.2} ring {:.2}",
            means[0],
            means[1],
            means[2],
            if ordered && significant { "ok" } else { "FAIL" },
            rc.p_two_sided,
            ci.p_two_sided,
            peaks[1],
            peaks[0],
            if trap { "ok" } else { "FAIL" },
            takeover[1],
            takeover[0],
        ));
    }
    Ok(Outcome {
        measured: worst_p,
        bound: format!(
            "ring < complete < isolated with rank-test p < {}, complete peak valleys > ring",
            th.topology_alpha
        ),
        pass,
        detail: detail.join("; "),
    })
}

fn geometric_sandwich(th: &Thresholds) -> Result<Outcome> {
    let mut violations = 0;
    let mut checked = 0;
    let mut tightest = f64::INFINITY;
    for &e in &th.geometric_jumps {
        for m in 1..=th.geometric_max_agents {
            let g = geometric_min_bounds(e, m)?;
            checked += 1;
            if !g.holds() {
                violations += 1;
            }
            tightest = tightest.min(g.exact - g.lower).min(g.upper - g.exact);
        }
    }
    Ok(Outcome {
        measured: violations as f64,
        bound: "0 violations".into(),
        pass: violations == 0,
        detail: format!("{checked} grid points, smallest margin {tightest:.3e}"),
    })
}

fn choose_sum_bounded(th: &Thresholds) -> Result<Outcome> {
    let (lo, hi) = th.choose_sum_range;
    let (tlo, thi) = th.choose_sum_tight_range;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut tmin = f64::INFINITY;
    let mut tmax = f64::NEG_INFINITY;
    for n in 1..=th.choose_sum_max_n {
        let v = choose_sum_div(n)?;
        min = min.min(v);
        max = max.max(v);
        if n >= th.choose_sum_tight_from {
            tmin = tmin.min(v);
            tmax = tmax.max(v);
        }
    }
    Ok(Outcome {
        measured: max,
        bound: format!(
            "[{lo}, {hi}] for n <= {}, [{tlo}, {thi}] from n = {}",
            th.choose_sum_max_n, th.choose_sum_tight_from
        ),
        pass: lo <= min && max <= hi && tlo <= tmin && tmax <= thi,
        detail: format!("range [{min:.6}, {max:.6}], tail range [{tmin:.6}, {tmax:.6}]"),
    })
}

/// Config used by the determinism check: two island sweeps with migration.
fn determinism_scenarios(th: &Thresholds) -> Result<Vec<Scenario>> {
    let mut scenarios = parse_config(TOPOLOGY_CONFIG)?;
    for s in &mut scenarios {
        s.replicates = th.determinism_replicates;
        s.n_grid = vec![10, 16];
    }
    let mut lo = fork_scenario("lo_ring", Algorithm::Island, vec![8, 12], th.determinism_replicates, th.seed);
    lo.spec.variant = VariantConfig::Leadingones;
    lo.topology = Some(TopologyKind::Ring);
    lo.lambda_rule = Rule::Constant(5);
    lo.tau_rule = Rule::Constant(3);
    scenarios.push(lo);
    Ok(scenarios)
}

pub fn csv_with_threads(scenarios: &[Scenario], threads: usize) -> Result<Vec<u8>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| csv_bytes(&run_all(scenarios)?))
}

fn thread_determinism(th: &Thresholds) -> Result<Outcome> {
    let scenarios = determinism_scenarios(th)?;
    let (a, b) = th.determinism_threads;
    let first = csv_with_threads(&scenarios, a)?;
    let second = csv_with_threads(&scenarios, b)?;
    let same = first == second;
    Ok(Outcome {
        measured: if same { 0.0 } else { 1.0 },
        bound: "identical bytes".into(),
        pass: same,
        detail: format!("{} bytes with {a} vs {b} threads", first.len()),
    })
}
