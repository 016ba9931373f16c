//! Declarative experiment scenarios and their per-`n` resolution.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitness::{FitnessSpec, SpecConfig, Variant};
use crate::islands::{IslandRunConfig, Tau, Termination};
use crate::rng::{mix, name_hash};
use crate::topology::{Topology, TopologyKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// One (1+1) EA; λ = 1, no migration.
    SingleEa,
    /// λ (1+1) EAs without any migration.
    IndependentRuns,
    /// λ islands migrating over `topology` with probability 1/τ.
    Island,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::SingleEa => "single_ea",
            Algorithm::IndependentRuns => "independent_runs",
            Algorithm::Island => "island",
        })
    }
}

/// A parameter schedule over `n`.
///
/// `Scaled` evaluates `max(min, ceil(c * n^a * log2(n)^b))`; the named JSON
/// forms `log2`, `power` and `n_log2n` are special cases of it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RuleRepr", into = "RuleRepr")]
pub enum Rule {
    Constant(u64),
    Infinity,
    Scaled { c: f64, a: f64, b: f64, min: u64 },
}

impl Rule {
    pub fn log2(c: f64, min: u64) -> Self {
        Rule::Scaled { c, a: 0.0, b: 1.0, min }
    }

    pub fn power(c: f64, a: f64, min: u64) -> Self {
        Rule::Scaled { c, a, b: 0.0, min }
    }

    pub fn n_log2n(c: f64, min: u64) -> Self {
        Rule::Scaled { c, a: 1.0, b: 1.0, min }
    }

    /// `None` stands for infinity.
    pub fn eval(&self, n: usize) -> Option<u64> {
        match *self {
            Rule::Constant(v) => Some(v),
            Rule::Infinity => None,
            Rule::Scaled { c, a, b, min } => {
                let nf = n as f64;
                let v = c * nf.powf(a) * nf.log2().powf(b);
                // absorb rounding noise so that exact integers do not round up
                let v = (v - 1e-9 * v.abs().max(1.0)).ceil();
                Some((v.max(0.0) as u64).max(min))
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RuleRepr {
    Number(u64),
    Word(String),
    Tagged(TaggedRule),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum TaggedRule {
    Constant {
        value: u64,
    },
    Infinity,
    Log2 {
        c: f64,
        #[serde(default)]
        min: u64,
    },
    Power {
        c: f64,
        a: f64,
        #[serde(default)]
        min: u64,
    },
    NLog2n {
        #[serde(default = "one")]
        c: f64,
        #[serde(default)]
        min: u64,
    },
    Formula {
        c: f64,
        a: f64,
        b: f64,
        #[serde(default)]
        min: u64,
    },
}

fn one() -> f64 {
    1.0
}

impl TryFrom<RuleRepr> for Rule {
    type Error = String;

    fn try_from(r: RuleRepr) -> std::result::Result<Self, String> {
        Ok(match r {
            RuleRepr::Number(v) => Rule::Constant(v),
            RuleRepr::Word(w) => match w.as_str() {
                "inf" | "infinity" => Rule::Infinity,
                other => return Err(format!("unknown rule {other:?}")),
            },
            RuleRepr::Tagged(t) => match t {
                TaggedRule::Constant { value } => Rule::Constant(value),
                TaggedRule::Infinity => Rule::Infinity,
                TaggedRule::Log2 { c, min } => Rule::log2(c, min),
                TaggedRule::Power { c, a, min } => Rule::power(c, a, min),
                TaggedRule::NLog2n { c, min } => Rule::n_log2n(c, min),
                TaggedRule::Formula { c, a, b, min } => Rule::Scaled { c, a, b, min },
            },
        })
    }
}

impl From<Rule> for RuleRepr {
    fn from(r: Rule) -> Self {
        match r {
            Rule::Constant(v) => RuleRepr::Number(v),
            Rule::Infinity => RuleRepr::Word("inf".into()),
            Rule::Scaled { c, a, b, min } => RuleRepr::Tagged(TaggedRule::Formula { c, a, b, min }),
        }
    }
}

/// Round cap per run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CapRepr", into = "CapRepr")]
pub enum CapRule {
    /// `50 * (n^(2r) / λ + n^(2r))` with `r` the Fork parameter (1 otherwise).
    #[default]
    Default,
    Constant(u64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CapRepr {
    Number(u64),
    Word(String),
}

impl TryFrom<CapRepr> for CapRule {
    type Error = String;

    fn try_from(c: CapRepr) -> std::result::Result<Self, String> {
        match c {
            CapRepr::Number(0) => Err("cap must be positive".into()),
            CapRepr::Number(v) => Ok(CapRule::Constant(v)),
            CapRepr::Word(w) if w == "default" => Ok(CapRule::Default),
            CapRepr::Word(w) => Err(format!("unknown cap rule {w:?}")),
        }
    }
}

impl From<CapRule> for CapRepr {
    fn from(c: CapRule) -> Self {
        match c {
            CapRule::Default => CapRepr::Word("default".into()),
            CapRule::Constant(v) => CapRepr::Number(v),
        }
    }
}

impl CapRule {
    pub fn eval(&self, spec: &FitnessSpec, lambda: usize) -> u64 {
        match *self {
            CapRule::Constant(v) => v,
            CapRule::Default => {
                let r = fork_parameter(spec).unwrap_or(1) as f64;
                let base = (spec.n() as f64).powf(2.0 * r);
                let cap = 50.0 * (base / lambda as f64 + base);
                if cap >= u64::MAX as f64 {
                    u64::MAX
                } else {
                    (cap.ceil() as u64).max(1)
                }
            }
        }
    }
}

/// Fork parameter of the spec or of the Fork nested inside it.
fn fork_parameter(spec: &FitnessSpec) -> Option<usize> {
    match spec.variant() {
        Variant::Fork { r } => Some(*r),
        Variant::Masked { inner, .. } | Variant::LoBlock { inner, .. } | Variant::OmBlock { inner, .. } => {
            fork_parameter(inner)
        }
        _ => None,
    }
}

fn default_lambda() -> Rule {
    Rule::Constant(1)
}

fn default_tau() -> Rule {
    Rule::Infinity
}

fn default_termination() -> Termination {
    Termination::AllOptimal
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub algorithm: Algorithm,
    /// Fitness template; its length comes from `n_grid`.
    pub spec: SpecConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<TopologyKind>,
    pub n_grid: Vec<usize>,
    #[serde(default = "default_lambda")]
    pub lambda_rule: Rule,
    #[serde(default = "default_tau")]
    pub tau_rule: Rule,
    pub replicates: usize,
    #[serde(default = "default_termination")]
    pub termination: Termination,
    pub master_seed: u64,
    #[serde(default)]
    pub cap_rule: CapRule,
}

/// One `(scenario, n)` point with every parameter fixed.
#[derive(Clone, Debug)]
pub struct Cell {
    pub scenario: String,
    pub algorithm: Algorithm,
    pub n: usize,
    pub replicates: usize,
    pub master_seed: u64,
    /// Seed from which the replicate seeds of this cell are derived.
    pub cell_seed: u64,
    pub config: IslandRunConfig,
}

/// `mix(master_seed, [hash(name), n])`.
pub fn cell_seed(master_seed: u64, scenario: &str, n: usize) -> u64 {
    mix(master_seed, &[name_hash(scenario), n as u64])
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::Config(format!("scenario {:?}: {msg}", self.name)));
        if self.name.is_empty() {
            return Err(Error::Config("scenario name must not be empty".into()));
        }
        if self.n_grid.is_empty() {
            return err("n_grid is empty".into());
        }
        if self.replicates == 0 {
            return err("replicates must be positive".into());
        }
        match (self.algorithm, self.topology) {
            (Algorithm::Island, None) => return err("island scenarios need a topology".into()),
            (Algorithm::SingleEa, Some(t)) | (Algorithm::IndependentRuns, Some(t))
                if t != TopologyKind::Isolated =>
            {
                return err(format!("{} runs without migration, topology {t} given", self.algorithm))
            }
            _ => {}
        }
        for &n in &self.n_grid {
            self.cell(n)?;
        }
        Ok(())
    }

    pub fn cells(&self) -> Result<Vec<Cell>> {
        self.n_grid.iter().map(|&n| self.cell(n)).collect()
    }

    pub fn cell(&self, n: usize) -> Result<Cell> {
        let err = |msg: String| Error::Config(format!("scenario {:?}, n = {n}: {msg}", self.name));
        let spec = self.spec.build(Some(n)).map_err(|e| err(e.to_string()))?;
        let lambda = self
            .lambda_rule
            .eval(n)
            .ok_or_else(|| err("lambda cannot be infinite".into()))?;
        if lambda == 0 {
            return Err(err("lambda must be at least 1".into()));
        }
        let lambda = lambda as usize;
        let tau = match self.tau_rule.eval(n) {
            Some(0) => return Err(err("tau must be at least 1".into())),
            Some(t) => Tau::Finite(t),
            None => Tau::Infinite,
        };
        let (topology, tau) = match self.algorithm {
            Algorithm::SingleEa => {
                if lambda != 1 {
                    return Err(err(format!("single_ea needs lambda = 1, rule gives {lambda}")));
                }
                (Topology::isolated(1)?, Tau::Infinite)
            }
            Algorithm::IndependentRuns => (Topology::isolated(lambda)?, Tau::Infinite),
            Algorithm::Island => {
                let kind = self.topology.ok_or_else(|| err("missing topology".into()))?;
                (Topology::new(kind, lambda).map_err(|e| err(e.to_string()))?, tau)
            }
        };
        let cap = self.cap_rule.eval(&spec, lambda);
        let seed = cell_seed(self.master_seed, &self.name, n);
        Ok(Cell {
            scenario: self.name.clone(),
            algorithm: self.algorithm,
            n,
            replicates: self.replicates,
            master_seed: self.master_seed,
            cell_seed: seed,
            config: IslandRunConfig {
                lambda,
                tau,
                topology,
                spec,
                termination: self.termination,
                cap,
                seed,
            },
        })
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ConfigDoc {
    List(Vec<Scenario>),
    Wrapped { scenarios: Vec<Scenario> },
}

/// Parses a config document: a JSON list of scenarios (an object with a
/// `scenarios` list is accepted too). Every scenario is validated.
pub fn parse_config(text: &str) -> Result<Vec<Scenario>> {
    let doc: ConfigDoc = serde_json::from_str(text).map_err(|e| match e.classify() {
        serde_json::error::Category::Data => Error::Config(format!(
            "config is not a list of valid scenarios: {e} (parse a single scenario for details)"
        )),
        _ => Error::Json(e),
    })?;
    let scenarios = match doc {
        ConfigDoc::List(s) | ConfigDoc::Wrapped { scenarios: s } => s,
    };
    let mut names = std::collections::HashSet::new();
    for s in &scenarios {
        s.validate()?;
        if !names.insert(s.name.as_str()) {
            return Err(Error::Config(format!("duplicate scenario name {:?}", s.name)));
        }
    }
    Ok(scenarios)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fork_island(topology: &str) -> String {
        format!(
            r#"{{"name":"t","algorithm":"island","spec":{{"variant":"fork","r":2}},
            "topology":"{topology}","n_grid":[16,24,32],
            "lambda_rule":{{"kind":"log2","c":3,"min":4}},
            "tau_rule":{{"kind":"n_log2n"}},"replicates":5,
            "termination":"all_optimal","master_seed":1}}"#
        )
    }

    #[test]
    fn rule_values() {
        let lam = Rule::log2(3.0, 4);
        assert_eq!(lam.eval(16), Some(12));
        assert_eq!(lam.eval(24), Some(14));
        assert_eq!(lam.eval(32), Some(15));
        assert_eq!(lam.eval(2), Some(4));
        let tau = Rule::n_log2n(1.0, 1);
        assert_eq!(tau.eval(16), Some(64));
        assert_eq!(tau.eval(24), Some(111));
        assert_eq!(tau.eval(32), Some(160));
        assert_eq!(Rule::power(2.0, 1.5, 0).eval(4), Some(16));
        assert_eq!(Rule::Infinity.eval(8), None);
        assert_eq!(Rule::Constant(7).eval(100), Some(7));
    }

    #[test]
    fn rule_json_forms() {
        let parse = |s: &str| serde_json::from_str::<Rule>(s);
        assert_eq!(parse("4").unwrap(), Rule::Constant(4));
        assert_eq!(parse(r#""inf""#).unwrap(), Rule::Infinity);
        assert_eq!(parse(r#"{"kind":"infinity"}"#).unwrap(), Rule::Infinity);
        assert_eq!(parse(r#"{"kind":"log2","c":3,"min":4}"#).unwrap(), Rule::log2(3.0, 4));
        assert_eq!(parse(r#"{"kind":"power","c":1,"a":2}"#).unwrap(), Rule::power(1.0, 2.0, 0));
        assert!(parse(r#""sometimes""#).is_err());
        assert!(parse(r#"{"kind":"log2","c":3,"base":10}"#).is_err());
        for rule in [Rule::Constant(3), Rule::Infinity, Rule::n_log2n(2.0, 5)] {
            let text = serde_json::to_string(&rule).unwrap();
            assert_eq!(parse(&text).unwrap(), rule);
        }
    }

    #[test]
    fn default_cap() {
        let spec = FitnessSpec::fork(10, 2).unwrap();
        assert_eq!(CapRule::Default.eval(&spec, 1), 50 * 20_000);
        let om = FitnessSpec::one_max(10).unwrap();
        assert_eq!(CapRule::Default.eval(&om, 4), 50 * 125);
        assert_eq!(CapRule::Constant(9).eval(&om, 4), 9);
        let block = FitnessSpec::lo_block(12, FitnessSpec::masked_fork(6, 2).unwrap()).unwrap();
        assert_eq!(fork_parameter(&block), Some(2));
    }

    #[test]
    fn resolves_cells() {
        let s: Scenario = serde_json::from_str(&fork_island("ring")).unwrap();
        let cells = s.cells().unwrap();
        assert_eq!(cells.len(), 3);
        let c = &cells[2];
        assert_eq!((c.n, c.config.lambda, c.config.tau), (32, 15, Tau::Finite(160)));
        assert_eq!(c.config.topology.kind(), TopologyKind::Ring);
        assert_eq!(c.cell_seed, cell_seed(1, "t", 32));
        assert_ne!(cells[0].cell_seed, cells[1].cell_seed);
    }

    #[test]
    fn independent_runs_never_migrate() {
        let text = r#"[{"name":"iso","algorithm":"independent_runs","spec":{"variant":"onemax"},
            "n_grid":[8],"lambda_rule":4,"tau_rule":10,"replicates":3,"master_seed":0}]"#;
        let s = parse_config(text).unwrap();
        let c = s[0].cell(8).unwrap();
        assert_eq!(c.config.tau, Tau::Infinite);
        assert_eq!(c.config.topology.kind(), TopologyKind::Isolated);
        assert_eq!(c.config.lambda, 4);
    }

    #[test]
    fn rejects_bad_scenarios() {
        // Fork needs n >= 2r
        let bad = fork_island("ring").replace("[16,24,32]", "[3]");
        assert!(parse_config(&format!("[{bad}]")).is_err());
        let no_topology = r#"[{"name":"x","algorithm":"island","spec":{"variant":"onemax"},
            "n_grid":[8],"replicates":1,"master_seed":0}]"#;
        assert!(parse_config(no_topology).is_err());
        let single_lambda = r#"[{"name":"x","algorithm":"single_ea","spec":{"variant":"onemax"},
            "n_grid":[8],"lambda_rule":3,"replicates":1,"master_seed":0}]"#;
        assert!(parse_config(single_lambda).is_err());
        let typo = fork_island("ring").replace("replicates", "replicate");
        assert!(parse_config(&format!("[{typo}]")).is_err());
        let ring_too_small = fork_island("ring").replace(r#""min":4"#, r#""min":0"#).replace("\"c\":3", "\"c\":0.1");
        assert!(parse_config(&format!("[{ring_too_small}]")).is_err());
        let dup = format!("[{}, {}]", fork_island("ring"), fork_island("complete"));
        assert!(parse_config(&dup).is_err());
    }

    #[test]
    fn wrapped_document() {
        let doc = format!(r#"{{"scenarios": [{}]}}"#, fork_island("complete"));
        assert_eq!(parse_config(&doc).unwrap().len(), 1);
    }
}
