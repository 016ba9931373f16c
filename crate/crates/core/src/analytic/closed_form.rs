use serde::Serialize;

use crate::error::{Error, Result};

/// Exact expected (1+1) EA runtime on LeadingOnes from a uniform start:
/// `((n/(n-1))^(n-1) + 1/n - 1) / 2 * n^2`.
pub fn exact_lo_runtime(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("LeadingOnes runtime formula needs n >= 2, got {n}")));
    }
    let nf = n as f64;
    let q = nf / (nf - 1.0);
    Ok((q.powi(n as i32 - 1) + 1.0 / nf - 1.0) / 2.0 * nf * nf)
}

/// Runtime on LeadingOnes with k-block `f`, given the expected time
/// `inner_expected` to optimize one k-bit block under flip probability 1/n:
/// `inner_expected * ((n/(n-1))^n - 1) / ((n/(n-1))^k - 1)`.
pub fn lo_block_runtime(n: usize, k: usize, inner_expected: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("block runtime formula needs n >= 2, got {n}")));
    }
    if k == 0 || !n.is_multiple_of(k) {
        return Err(Error::Domain(format!("k = {k} must divide n = {n}")));
    }
    if !(inner_expected >= 0.0) {
        return Err(Error::Domain("inner expected time must be non-negative".into()));
    }
    let nf = n as f64;
    let ln_q = (nf / (nf - 1.0)).ln();
    let factor = (nf * ln_q).exp_m1() / (k as f64 * ln_q).exp_m1();
    Ok(inner_expected * factor)
}

/// Lower bound, exact value and upper bound for the time until the first of
/// `m` independent agents succeeds, each with success probability `1/E_j`
/// per step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeometricBoundCheck {
    pub expected_jump: f64,
    pub agents: usize,
    pub lower: f64,
    pub exact: f64,
    pub upper: f64,
}

impl GeometricBoundCheck {
    pub fn holds(&self) -> bool {
        self.lower <= self.exact && self.exact <= self.upper
    }
}

pub fn geometric_min_bounds(expected_jump: f64, agents: usize) -> Result<GeometricBoundCheck> {
    if !(expected_jump >= 1.0) || agents == 0 {
        return Err(Error::Domain("need E_j >= 1 and m >= 1".into()));
    }
    let m = agents as f64;
    let p = 1.0 / expected_jump;
    // 1 - (1 - p)^m, computed without cancellation
    let success = -(m * (-p).ln_1p()).exp_m1();
    Ok(GeometricBoundCheck {
        expected_jump,
        agents,
        lower: expected_jump / (2.0 * m),
        exact: 1.0 / success,
        upper: expected_jump / m + 1.0,
    })
}

/// `2^-n * sum_{k=1}^{n} C(n, k) * n / k`, summed in log space.
pub fn choose_sum_div(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("choose_sum_div needs n >= 1".into()));
    }
    let nf = n as f64;
    let ln2n = nf * std::f64::consts::LN_2;
    let mut ln_choose = 0.0;
    let mut total = 0.0;
    for k in 1..=n {
        ln_choose += ((n - k + 1) as f64).ln() - (k as f64).ln();
        total += (ln_choose - ln2n + (nf / k as f64).ln()).exp();
    }
    Ok(total)
}
