use serde::{Deserialize, Serialize};

use super::graph::HeadGraph;
use crate::par::compensated_sum;
use crate::{Error, Result};

/// Community id per node, contiguous from 0 in order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    ids: Vec<usize>,
    count: usize,
}

impl Partition {
    /// Relabels arbitrary ids to contiguous ones.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let ids = labels
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Self {
            ids,
            count: map.len(),
        }
    }

    pub fn singletons(n: usize) -> Self {
        Self {
            ids: (0..n).collect(),
            count: n,
        }
    }

    pub fn single(n: usize) -> Self {
        Self {
            ids: vec![0; n],
            count: usize::from(n > 0),
        }
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn community(&self, node: usize) -> usize {
        self.ids[node]
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Members of each community in node order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.count];
        for (node, &c) in self.ids.iter().enumerate() {
            out[c].push(node);
        }
        out
    }
}

/// Newman modularity of a weighted undirected graph.
pub fn modularity(g: &HeadGraph, p: &Partition) -> Result<f64> {
    let n = g.n();
    if p.len() != n {
        return Err(Error::validation(format!(
            "partition covers {} nodes, graph has {n}",
            p.len()
        )));
    }
    let two_m = g.total_weight();
    if two_m <= 0.0 {
        return Err(Error::numerical("modularity is undefined for a graph with no weight"));
    }
    let mut internal = vec![Vec::new(); p.count()];
    let mut strength = vec![0.0; p.count()];
    for i in 0..n {
        let c = p.community(i);
        strength[c] += g.degree(i);
        for j in 0..n {
            if p.community(j) == c {
                internal[c].push(g.weight(i, j));
            }
        }
    }
    let q = compensated_sum(internal.iter().zip(&strength).map(|(w, &d)| {
        compensated_sum(w.iter().copied()) / two_m - (d / two_m).powi(2)
    }));
    Ok(q)
}
