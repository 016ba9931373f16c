//! Scaling-exponent fits and the valley-before-optimum test.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{build_chain, hitting_probability, Start};
use crate::ea::{ea_run_with_stream, MutationParams};
use crate::error::{Error, Result};
use crate::fitness::FitnessSpec;
use crate::harness::run::ResultRow;
use crate::islands::replicate_seed;
use crate::rng::RngStream;
use crate::stats::{ols, wilson_interval};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    Rounds,
    Evaluations,
}

impl FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rounds" => Ok(Field::Rounds),
            "evaluations" | "evals" => Ok(Field::Evaluations),
            other => Err(Error::Config(format!("unknown field {other:?} (rounds|evaluations)"))),
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Field::Rounds => "rounds",
            Field::Evaluations => "evaluations",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
    pub points: usize,
    /// `n` values left out because their mean was missing or not positive.
    pub excluded: Vec<usize>,
}

/// OLS slope of `ln(mean field)` against `ln(n)`.
pub fn fit_exponent(rows: &[ResultRow], field: Field) -> Result<ExponentFit> {
    let mut excluded = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for row in rows {
        let mean = match field {
            Field::Rounds => row.mean_rounds,
            Field::Evaluations => row.mean_evals,
        };
        match mean {
            Some(m) if m > 0.0 && m.is_finite() => {
                xs.push((row.n as f64).ln());
                ys.push(m.ln());
            }
            _ => excluded.push(row.n),
        }
    }
    fit_points(&xs, &ys, excluded)
}

/// Same fit on raw `(n, mean)` pairs.
pub fn fit_means(points: &[(usize, f64)]) -> Result<ExponentFit> {
    let mut excluded = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(n, m) in points {
        if m > 0.0 && m.is_finite() {
            xs.push((n as f64).ln());
            ys.push(m.ln());
        } else {
            excluded.push(n);
        }
    }
    fit_points(&xs, &ys, excluded)
}

fn fit_points(xs: &[f64], ys: &[f64], excluded: Vec<usize>) -> Result<ExponentFit> {
    let fit = ols(xs, ys).map_err(|e| match e {
        Error::Domain(msg) => Error::Domain(format!("exponent fit: {msg}")),
        other => other,
    })?;
    Ok(ExponentFit {
        slope: fit.slope,
        intercept: fit.intercept,
        slope_stderr: fit.slope_stderr,
        r_squared: fit.r_squared,
        points: fit.points,
        excluded,
    })
}

/// Smallest replicate count accepted by [`valley_first_test`].
pub const VALLEY_TEST_MIN_REPLICATES: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValleyFirstReport {
    pub n: usize,
    pub r: usize,
    pub replicates: usize,
    pub valley_first: usize,
    pub fraction: f64,
    /// 99% Wilson interval of the fraction.
    pub interval: (f64, f64),
    pub pass: bool,
}

/// Single (1+1) EA runs on Fork(n, r) from uniform starts, each stopped when
/// the valley or the optimum becomes incumbent. Passes iff 1/2 lies in the
/// 99% Wilson interval of the valley-first fraction.
pub fn valley_first_test(n: usize, r: usize, replicates: usize, seed: u64) -> Result<ValleyFirstReport> {
    if replicates < VALLEY_TEST_MIN_REPLICATES {
        return Err(Error::Domain(format!(
            "valley test needs at least {VALLEY_TEST_MIN_REPLICATES} replicates, got {replicates}"
        )));
    }
    let spec = FitnessSpec::fork(n, r)?;
    let params = MutationParams::new(n)?;
    let valley_value = spec.optimum_value() - 1;
    let outcomes: Vec<bool> = (0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(replicate_seed(seed, i));
            let (state, _) =
                ea_run_with_stream(&spec, params, &mut rng, |s| s.current_fitness >= valley_value, u64::MAX)?;
            Ok(state.current_fitness == valley_value)
        })
        .collect::<Result<_>>()?;
    let valley_first = outcomes.iter().filter(|&&v| v).count();
    let interval = wilson_interval(valley_first, replicates, 0.99);
    Ok(ValleyFirstReport {
        n,
        r,
        replicates,
        valley_first,
        fraction: valley_first as f64 / replicates as f64,
        interval,
        pass: interval.0 <= 0.5 && 0.5 <= interval.1,
    })
}

/// Exact probability that the valley is entered before the optimum from a
/// uniform start, with flip probability `1/n`.
pub fn exact_valley_first(n: usize, r: usize) -> Result<f64> {
    let spec = FitnessSpec::fork(n, r)?;
    let chain = build_chain(&spec, n)?;
    let w = spec.optimum();
    let (valley, _) = w.valley.as_ref().expect("Fork has a valley");
    let a = chain.index_of(valley);
    let b = chain.index_of(&w.optimum);
    hitting_probability(&chain, a, b, &Start::Uniform)
}
