//! Migration graphs on λ islands.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    Complete,
    Ring,
    Isolated,
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TopologyKind::Complete => "complete",
            TopologyKind::Ring => "ring",
            TopologyKind::Isolated => "isolated",
        })
    }
}

impl FromStr for TopologyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complete" => Ok(Self::Complete),
            "ring" => Ok(Self::Ring),
            "isolated" => Ok(Self::Isolated),
            other => Err(Error::Config(format!("unknown topology {other:?}"))),
        }
    }
}

/// Undirected simple graph on `lambda` islands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Topology {
    kind: TopologyKind,
    lambda: usize,
}

impl Topology {
    pub fn new(kind: TopologyKind, lambda: usize) -> Result<Self> {
        if lambda == 0 {
            return Err(Error::Config("topology needs at least one island".into()));
        }
        if kind == TopologyKind::Ring && lambda < 3 {
            return Err(Error::Config(format!(
                "ring requires at least 3 islands (got {lambda}); use complete or isolated"
            )));
        }
        Ok(Self { kind, lambda })
    }

    pub fn complete(lambda: usize) -> Result<Self> {
        Self::new(TopologyKind::Complete, lambda)
    }

    pub fn ring(lambda: usize) -> Result<Self> {
        Self::new(TopologyKind::Ring, lambda)
    }

    pub fn isolated(lambda: usize) -> Result<Self> {
        Self::new(TopologyKind::Isolated, lambda)
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    /// Neighbors of island `j` in ascending index order.
    pub fn neighbors(&self, j: usize) -> Result<Vec<usize>> {
        if j >= self.lambda {
            return Err(Error::IndexOutOfRange {
                index: j,
                lambda: self.lambda,
            });
        }
        let mut out = Vec::with_capacity(self.degree());
        self.for_each_neighbor(j, |i| out.push(i));
        Ok(out)
    }

    /// Visits the neighbors of `j` in ascending index order without allocating.
    #[inline]
    pub(crate) fn for_each_neighbor(&self, j: usize, mut f: impl FnMut(usize)) {
        match self.kind {
            TopologyKind::Complete => (0..self.lambda).filter(|&i| i != j).for_each(f),
            TopologyKind::Ring => {
                let prev = (j + self.lambda - 1) % self.lambda;
                let next = (j + 1) % self.lambda;
                f(prev.min(next));
                f(prev.max(next));
            }
            TopologyKind::Isolated => {}
        }
    }

    pub fn degree(&self) -> usize {
        match self.kind {
            TopologyKind::Complete => self.lambda - 1,
            TopologyKind::Ring => 2,
            TopologyKind::Isolated => 0,
        }
    }

    pub fn diameter(&self) -> Result<usize> {
        match self.kind {
            TopologyKind::Complete if self.lambda == 1 => Ok(0),
            TopologyKind::Complete => Ok(1),
            TopologyKind::Ring => Ok(self.lambda / 2),
            TopologyKind::Isolated => Err(Error::Unsupported(
                "diameter of a disconnected topology".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neighbor_examples() {
        assert_eq!(Topology::ring(5).unwrap().neighbors(0).unwrap(), vec![1, 4]);
        assert_eq!(Topology::complete(4).unwrap().neighbors(2).unwrap(), vec![0, 1, 3]);
        assert!(Topology::isolated(3).unwrap().neighbors(1).unwrap().is_empty());
        assert!(matches!(
            Topology::ring(5).unwrap().neighbors(5),
            Err(Error::IndexOutOfRange { index: 5, lambda: 5 })
        ));
    }

    #[test]
    fn diameter_examples() {
        assert_eq!(Topology::complete(10).unwrap().diameter().unwrap(), 1);
        assert_eq!(Topology::ring(6).unwrap().diameter().unwrap(), 3);
        assert_eq!(Topology::ring(7).unwrap().diameter().unwrap(), 3);
        assert!(Topology::isolated(4).unwrap().diameter().is_err());
    }

    #[test]
    fn small_rings_rejected() {
        assert!(Topology::ring(2).is_err());
        assert!(Topology::ring(1).is_err());
        assert!(Topology::complete(0).is_err());
        assert!(Topology::complete(2).is_ok());
    }

    #[test]
    fn symmetric_irreflexive_regular_exhaustive() {
        for lambda in 1..=64 {
            for kind in [TopologyKind::Complete, TopologyKind::Ring, TopologyKind::Isolated] {
                let Ok(g) = Topology::new(kind, lambda) else {
                    continue;
                };
                let lists: Vec<Vec<usize>> = (0..lambda).map(|j| g.neighbors(j).unwrap()).collect();
                for (j, nb) in lists.iter().enumerate() {
                    assert!(!nb.contains(&j), "{kind} {lambda}: self loop at {j}");
                    assert_eq!(nb.len(), g.degree());
                    assert!(nb.windows(2).all(|w| w[0] < w[1]));
                    for &i in nb {
                        assert!(lists[i].contains(&j), "{kind} {lambda}: {i}-{j} asymmetric");
                    }
                }
            }
        }
    }

    #[test]
    fn kind_tokens() {
        for kind in [TopologyKind::Complete, TopologyKind::Ring, TopologyKind::Isolated] {
            assert_eq!(kind.to_string().parse::<TopologyKind>().unwrap(), kind);
            let json = serde_json::to_string(&kind).unwrap();
            assert_eq!(json, format!("\"{kind}\""));
        }
        assert!("torus".parse::<TopologyKind>().is_err());
    }
}
