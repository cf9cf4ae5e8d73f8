use serde::{Deserialize, Serialize};

use crate::headscore::PairAtomTable;
use crate::{Error, Result};

/// Which atom supplies the edge weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    /// syn→syn
    Abstract,
    /// red→red
    Memory,
}

impl GraphKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GraphKind::Abstract => "abstract",
            GraphKind::Memory => "memory",
        }
    }
}

impl std::str::FromStr for GraphKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "abstract" => Ok(GraphKind::Abstract),
            "memory" => Ok(GraphKind::Memory),
            other => Err(format!("unknown graph kind {other:?} (expected abstract or memory)")),
        }
    }
}

/// Dense symmetric weights with a zero diagonal and no negative entries.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadGraph {
    n: usize,
    weights: Vec<f64>,
    kind: GraphKind,
}

impl HeadGraph {
    /// Row-major `n × n` weights; negatives are clamped to 0.
    pub fn from_matrix(n: usize, mut weights: Vec<f64>, kind: GraphKind) -> Result<Self> {
        if weights.len() != n * n {
            return Err(Error::validation(format!(
                "{} weights for {n} nodes",
                weights.len()
            )));
        }
        for i in 0..n {
            if weights[i * n + i] != 0.0 {
                return Err(Error::validation(format!("self-loop on node {i}")));
            }
            for j in i + 1..n {
                let (a, b) = (weights[i * n + j], weights[j * n + i]);
                if !a.is_finite() || a != b {
                    return Err(Error::validation(format!(
                        "weight ({i}, {j}) is not finite and symmetric"
                    )));
                }
            }
        }
        for w in &mut weights {
            *w = w.max(0.0);
        }
        Ok(Self { n, weights, kind })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.n..(i + 1) * self.n]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn degree(&self, i: usize) -> f64 {
        self.row(i).iter().sum()
    }

    /// `2m`, the sum of all matrix entries.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.iter().all(|&w| w == 0.0)
    }

    /// Same topology with every weight multiplied by `s`.
    pub fn scaled(&self, s: f64) -> HeadGraph {
        HeadGraph {
            n: self.n,
            weights: self.weights.iter().map(|w| w * s).collect(),
            kind: self.kind,
        }
    }
}

/// `w_ij = max(0, atom_ij)`; pairs absent from the table get weight 0.
pub fn build_graph(table: &PairAtomTable, kind: GraphKind) -> HeadGraph {
    let n = table.heads();
    let mut weights = vec![0.0; n * n];
    for p in table.pairs() {
        let w = match kind {
            GraphKind::Abstract => p.atoms.syn_syn(),
            GraphKind::Memory => p.atoms.red_red(),
        }
        .max(0.0);
        weights[p.i * n + p.j] = w;
        weights[p.j * n + p.i] = w;
    }
    let g = HeadGraph { n, weights, kind };
    if g.is_empty() {
        log::warn!("{} graph has no positive edges", kind.as_str());
    }
    g
}
