use std::io::Write;

use serde::{Deserialize, Serialize};

use super::pairs::{compute_pair_atoms, PairAtomTable, PairOptions};
use crate::infodyn::Unit;
use crate::par::compensated_sum;
use crate::traces::TraceTensor;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadScore {
    pub head: usize,
    pub layer: usize,
    pub head_index: usize,
    /// Mean syn→syn atom over the pairs containing this head.
    #[serde(rename = "abstract")]
    pub abstract_score: f64,
    /// Mean red→red atom over the pairs containing this head.
    pub memory: f64,
    pub diff: f64,
    /// 1 for the largest diff; ties go to the lower head id.
    pub rank: usize,
    pub pairs: usize,
}

/// Per-head scores indexed by head id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadScoreTable {
    heads_per_layer: usize,
    rows: Vec<HeadScore>,
}

impl HeadScoreTable {
    /// Build from `(abstract, memory, pair_count)` per head; ranks are derived.
    pub fn from_scores(heads_per_layer: usize, scores: &[(f64, f64, usize)]) -> Result<Self> {
        let n = scores.len();
        if n < 2 {
            return Err(Error::validation("need at least two heads"));
        }
        if heads_per_layer == 0 || n % heads_per_layer != 0 {
            return Err(Error::validation(format!(
                "{n} heads do not split into layers of {heads_per_layer}"
            )));
        }
        if scores.iter().any(|s| !s.0.is_finite() || !s.1.is_finite()) {
            return Err(Error::numerical("non-finite head score"));
        }
        let mut rows: Vec<HeadScore> = scores
            .iter()
            .enumerate()
            .map(|(h, &(a, m, pairs))| HeadScore {
                head: h,
                layer: h / heads_per_layer,
                head_index: h % heads_per_layer,
                abstract_score: a,
                memory: m,
                diff: a - m,
                rank: 0,
                pairs,
            })
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| rows[y].diff.total_cmp(&rows[x].diff).then(x.cmp(&y)));
        for (r, &h) in order.iter().enumerate() {
            rows[h].rank = r + 1;
        }
        Ok(Self {
            heads_per_layer,
            rows,
        })
    }

    pub fn heads(&self) -> usize {
        self.rows.len()
    }

    pub fn heads_per_layer(&self) -> usize {
        self.heads_per_layer
    }

    pub fn layers(&self) -> usize {
        self.rows.len() / self.heads_per_layer
    }

    pub fn rows(&self) -> &[HeadScore] {
        &self.rows
    }

    pub fn diffs(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.diff).collect()
    }

    /// Head ids from rank 1 downwards.
    pub fn ranked(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = (0..self.rows.len()).collect();
        ids.sort_by_key(|&h| self.rows[h].rank);
        ids
    }

    pub fn same_heads(&self, other: &HeadScoreTable) -> bool {
        self.heads_per_layer == other.heads_per_layer && self.rows.len() == other.rows.len()
    }
}

/// Average the pairwise atoms onto heads.
pub fn scores_from_pairs(table: &PairAtomTable) -> Result<HeadScoreTable> {
    let n = table.heads();
    let mut syn: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut red: Vec<Vec<f64>> = vec![Vec::new(); n];
    for p in table.pairs() {
        for h in [p.i, p.j] {
            syn[h].push(p.atoms.syn_syn());
            red[h].push(p.atoms.red_red());
        }
    }
    let mut scores = Vec::with_capacity(n);
    for h in 0..n {
        let c = syn[h].len();
        if c == 0 {
            return Err(Error::validation(format!("head {h} appears in no pair")));
        }
        scores.push((
            compensated_sum(syn[h].iter().copied()) / c as f64,
            compensated_sum(red[h].iter().copied()) / c as f64,
            c,
        ));
    }
    HeadScoreTable::from_scores(table.heads_per_layer(), &scores)
}

/// Pairwise ΦID followed by per-head averaging.
pub fn score_heads(trace: &TraceTensor, opts: &PairOptions) -> Result<HeadScoreTable> {
    scores_from_pairs(&compute_pair_atoms(trace, opts)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeadClass {
    Abstract,
    Memory,
}

/// Where abstract heads end and memory heads begin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Boundary {
    /// `diff > 0` is abstract.
    Sign,
    /// The top `fraction` of heads by rank are abstract.
    Quantile { fraction: f64 },
}

pub fn classify(table: &HeadScoreTable, boundary: Boundary) -> Result<Vec<HeadClass>> {
    match boundary {
        Boundary::Sign => Ok(table
            .rows
            .iter()
            .map(|r| {
                if r.diff > 0.0 {
                    HeadClass::Abstract
                } else {
                    HeadClass::Memory
                }
            })
            .collect()),
        Boundary::Quantile { fraction } => {
            if !(0.0..=1.0).contains(&fraction) {
                return Err(Error::validation(format!(
                    "quantile fraction {fraction} outside [0, 1]"
                )));
            }
            let top = (fraction * table.heads() as f64).round() as usize;
            Ok(table
                .rows
                .iter()
                .map(|r| {
                    if r.rank <= top {
                        HeadClass::Abstract
                    } else {
                        HeadClass::Memory
                    }
                })
                .collect())
        }
    }
}

/// Columns `head_id, layer, head_index, abstract, memory, diff, rank`.
pub fn write_scores_csv<W: Write>(out: W, table: &HeadScoreTable, unit: Unit) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::numerical(format!("CSV write failed: {e}"));
    w.write_record(["head_id", "layer", "head_index", "abstract", "memory", "diff", "rank"])
        .map_err(csv_err)?;
    for r in &table.rows {
        w.write_record([
            r.head.to_string(),
            r.layer.to_string(),
            r.head_index.to_string(),
            unit.from_nats(r.abstract_score).to_string(),
            unit.from_nats(r.memory).to_string(),
            unit.from_nats(r.diff).to_string(),
            r.rank.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| Error::numerical(format!("CSV flush failed: {e}")))?;
    Ok(())
}
