//! Exact (1+1) EA Markov chain over all `2^n` states.
//!
//! State `i` is the bit string whose bit `j` is bit `j` of `i`. Rows of the
//! transition matrix are generated on demand:
//!
//! ```text
//! P(x -> y) = p^d (1 - p)^(n - d)          if y != x and f(y) >= f(x)
//! P(x -> x) = (1 - p)^n + sum of rejected offspring mass
//! ```
//!
//! with `d` the Hamming distance and `p = 1 / n_mut`.

use crate::bitstring::BitString;
use crate::error::{Error, Result};
use crate::fitness::{FitnessSpec, FitnessValue};

/// Largest supported string length (4096 states).
pub const MAX_CHAIN_BITS: usize = 12;

/// Dense solves at least this large print their memory estimate to stderr.
pub const MEMORY_NOTICE_BYTES: usize = 32 << 20;

#[derive(Clone, Debug)]
pub struct ExactChain {
    n: usize,
    n_mut: usize,
    spec: FitnessSpec,
    fitness: Vec<FitnessValue>,
    /// `p^d (1-p)^(n-d)` indexed by Hamming distance `d`.
    flip_mass: Vec<f64>,
    /// Self-loop probability per state.
    stay: Vec<f64>,
}

/// Initial distribution for hitting-time and hitting-probability queries.
#[derive(Clone, Debug, PartialEq)]
pub enum Start {
    Uniform,
    Point(usize),
    Distribution(Vec<f64>),
}

impl Start {
    fn weights(&self, states: usize) -> Result<Vec<f64>> {
        match self {
            Start::Uniform => Ok(vec![1.0 / states as f64; states]),
            &Start::Point(i) => {
                if i >= states {
                    return Err(Error::Domain(format!("start state {i} out of range")));
                }
                let mut w = vec![0.0; states];
                w[i] = 1.0;
                Ok(w)
            }
            Start::Distribution(w) => {
                if w.len() != states {
                    return Err(Error::Domain(format!(
                        "start distribution has {} entries, chain has {states} states",
                        w.len()
                    )));
                }
                let total: f64 = w.iter().sum();
                if (total - 1.0).abs() > 1e-9 || w.iter().any(|&p| p < 0.0) {
                    return Err(Error::Domain("start distribution is not a probability vector".into()));
                }
                Ok(w.clone())
            }
        }
    }
}

pub fn build_chain(spec: &FitnessSpec, n_mut: usize) -> Result<ExactChain> {
    let n = spec.n();
    if n > MAX_CHAIN_BITS {
        return Err(Error::ChainTooLarge {
            n,
            limit: MAX_CHAIN_BITS,
        });
    }
    if n_mut == 0 {
        return Err(Error::Config("n_mut must be at least 1".into()));
    }
    let states = 1usize << n;
    let p = 1.0 / n_mut as f64;
    let flip_mass: Vec<f64> = (0..=n)
        .map(|d| p.powi(d as i32) * (1.0 - p).powi((n - d) as i32))
        .collect();
    let fitness: Vec<FitnessValue> = (0..states)
        .map(|i| spec.evaluate(&BitString::from_index(n, i)))
        .collect();
    let stay = (0..states)
        .map(|x| {
            flip_mass[0]
                + (0..states)
                    .filter(|&y| y != x && fitness[y] < fitness[x])
                    .map(|y| flip_mass[(x ^ y).count_ones() as usize])
                    .sum::<f64>()
        })
        .collect();
    Ok(ExactChain {
        n,
        n_mut,
        spec: spec.clone(),
        fitness,
        flip_mass,
        stay,
    })
}

impl ExactChain {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_mut(&self) -> usize {
        self.n_mut
    }

    pub fn spec(&self) -> &FitnessSpec {
        &self.spec
    }

    pub fn states(&self) -> usize {
        1 << self.n
    }

    pub fn fitness(&self, state: usize) -> FitnessValue {
        self.fitness[state]
    }

    pub fn index_of(&self, x: &BitString) -> usize {
        assert_eq!(x.len(), self.n);
        x.to_index()
    }

    #[inline]
    pub fn transition(&self, x: usize, y: usize) -> f64 {
        if x == y {
            self.stay[x]
        } else if self.fitness[y] >= self.fitness[x] {
            self.flip_mass[(x ^ y).count_ones() as usize]
        } else {
            0.0
        }
    }

    pub fn row(&self, x: usize) -> Vec<f64> {
        (0..self.states()).map(|y| self.transition(x, y)).collect()
    }

    /// Bytes needed by the dense solve over `unknowns` transient states.
    pub fn solve_memory_bytes(unknowns: usize) -> usize {
        unknowns * unknowns * std::mem::size_of::<f64>()
    }

    /// States from which some state in `targets` is reachable.
    fn can_reach(&self, targets: &[bool]) -> Vec<bool> {
        let states = self.states();
        let mut reach = targets.to_vec();
        let mut frontier: Vec<usize> = (0..states).filter(|&s| targets[s]).collect();
        while let Some(y) = frontier.pop() {
            for x in 0..states {
                if !reach[x] && x != y && self.transition(x, y) > 0.0 {
                    reach[x] = true;
                    frontier.push(x);
                }
            }
        }
        reach
    }

    /// Solves `(I - Q) v = rhs` over the states not in `absorbing`, where `Q`
    /// is the transition matrix restricted to those states. States that cannot
    /// reach `absorbing` must carry no start weight.
    fn solve_transient<F>(
        &self,
        absorbing: &[bool],
        start: &[f64],
        rhs: F,
    ) -> Result<Vec<Option<f64>>>
    where
        F: Fn(usize) -> f64,
    {
        let states = self.states();
        let reach = self.can_reach(absorbing);
        if let Some(s) = (0..states).find(|&s| !reach[s] && start[s] > 0.0) {
            return Err(Error::Singular(format!(
                "target set is unreachable from start state {}",
                BitString::from_index(self.n, s)
            )));
        }
        // Unknowns sorted by fitness so that the matrix is block upper
        // triangular and elimination only touches same-level rows.
        let mut unknowns: Vec<usize> = (0..states).filter(|&s| !absorbing[s] && reach[s]).collect();
        unknowns.sort_by_key(|&s| (self.fitness[s], s));
        let m = unknowns.len();
        let bytes = Self::solve_memory_bytes(m);
        if bytes >= MEMORY_NOTICE_BYTES {
            eprintln!(
                "warning: dense solve over {m} transient states needs about {:.0} MiB",
                bytes as f64 / (1024.0 * 1024.0)
            );
        }
        let mut a = vec![0.0f64; m * m];
        let mut b = vec![0.0f64; m];
        for (i, &x) in unknowns.iter().enumerate() {
            let row = &mut a[i * m..(i + 1) * m];
            for (j, &y) in unknowns.iter().enumerate() {
                row[j] = -self.transition(x, y);
            }
            row[i] += 1.0;
            b[i] = rhs(x);
        }
        let v = solve_dense(&mut a, &mut b, m)?;
        let mut out = vec![None; states];
        for (k, &s) in unknowns.iter().enumerate() {
            out[s] = Some(v[k]);
        }
        Ok(out)
    }
}

/// Gaussian elimination with partial pivoting on a row-major `m x m` matrix.
/// Zero multipliers are skipped, which makes block-triangular systems cheap.
pub fn solve_dense(a: &mut [f64], b: &mut [f64], m: usize) -> Result<Vec<f64>> {
    assert_eq!(a.len(), m * m);
    assert_eq!(b.len(), m);
    for k in 0..m {
        let (pivot_row, pivot_abs) = (k..m)
            .map(|i| (i, a[i * m + k].abs()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot_abs < 1e-300 {
            return Err(Error::Singular(format!("zero pivot in column {k}")));
        }
        if pivot_row != k {
            for j in 0..m {
                a.swap(k * m + j, pivot_row * m + j);
            }
            b.swap(k, pivot_row);
        }
        let (head, tail) = a.split_at_mut((k + 1) * m);
        let pivot = &head[k * m..];
        let pk = pivot[k];
        for (r, row) in tail.chunks_exact_mut(m).enumerate() {
            let factor = row[k] / pk;
            if factor == 0.0 {
                continue;
            }
            row[k] = 0.0;
            for (x, &p) in row[k + 1..].iter_mut().zip(&pivot[k + 1..]) {
                *x -= factor * p;
            }
            b[k + 1 + r] -= factor * b[k];
        }
    }
    let mut x = vec![0.0; m];
    for k in (0..m).rev() {
        let row = &a[k * m..(k + 1) * m];
        let s: f64 = row[k + 1..].iter().zip(&x[k + 1..]).map(|(a, x)| a * x).sum();
        x[k] = (b[k] - s) / row[k];
    }
    Ok(x)
}

/// Expected number of steps until the chain first enters `targets`,
/// averaged over `start`. Start mass on a target contributes zero.
pub fn expected_hitting_time(chain: &ExactChain, targets: &[usize], start: &Start) -> Result<f64> {
    let states = chain.states();
    if targets.is_empty() {
        return Err(Error::Domain("empty target set".into()));
    }
    let mut absorbing = vec![false; states];
    for &t in targets {
        if t >= states {
            return Err(Error::Domain(format!("target state {t} out of range")));
        }
        absorbing[t] = true;
    }
    let w = start.weights(states)?;
    let times = chain.solve_transient(&absorbing, &w, |_| 1.0)?;
    Ok((0..states)
        .filter(|&s| w[s] > 0.0 && !absorbing[s])
        .map(|s| w[s] * times[s].expect("reachable start state"))
        .sum())
}

/// Probability that state `a` is entered before state `b`, averaged over
/// `start`. Starting in `a` counts as 1, starting in `b` as 0.
pub fn hitting_probability(chain: &ExactChain, a: usize, b: usize, start: &Start) -> Result<f64> {
    let states = chain.states();
    if a == b || a >= states || b >= states {
        return Err(Error::Domain("need two distinct in-range states".into()));
    }
    let mut absorbing = vec![false; states];
    absorbing[a] = true;
    absorbing[b] = true;
    let w = start.weights(states)?;
    let h = chain.solve_transient(&absorbing, &w, |x| chain.transition(x, a))?;
    Ok((0..states)
        .filter(|&s| w[s] > 0.0)
        .map(|s| {
            let v = if s == a {
                1.0
            } else if s == b {
                0.0
            } else {
                h[s].expect("reachable start state")
            };
            w[s] * v
        })
        .sum())
}
