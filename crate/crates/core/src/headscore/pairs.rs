use std::collections::BTreeSet;
use std::io::{Read, Write};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ParseError;
use crate::infodyn::{
    phiid_from_series, EstimateStatus, Estimator, PairSeries, PhiAtoms, Unit,
};
use crate::traces::TraceTensor;
use crate::{par, Error, Result};

/// Above this many heads the default strategy samples partners.
pub const ALL_PAIRS_LIMIT: usize = 512;
pub const DEFAULT_SAMPLED_PARTNERS: usize = 64;
pub const DEFAULT_SAMPLING_SEED: u64 = 0x5eed;

/// Which head pairs enter the per-head averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PairStrategy {
    AllPairs,
    /// `k` partners drawn per head without replacement; pairs are unioned.
    Sampled { k: usize, seed: u64 },
}

impl PairStrategy {
    /// All pairs up to [`ALL_PAIRS_LIMIT`] heads, sampled beyond.
    pub fn default_for(heads: usize) -> Self {
        if heads <= ALL_PAIRS_LIMIT {
            PairStrategy::AllPairs
        } else {
            PairStrategy::Sampled {
                k: DEFAULT_SAMPLED_PARTNERS,
                seed: DEFAULT_SAMPLING_SEED,
            }
        }
    }

    /// Unordered pairs `(i, j)` with `i < j`, sorted.
    pub fn pairs(&self, heads: usize) -> Vec<(usize, usize)> {
        match *self {
            PairStrategy::AllPairs => (0..heads)
                .flat_map(|i| (i + 1..heads).map(move |j| (i, j)))
                .collect(),
            PairStrategy::Sampled { k, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut set = BTreeSet::new();
                let k = k.min(heads.saturating_sub(1));
                for i in 0..heads {
                    for idx in sample(&mut rng, heads - 1, k).into_iter() {
                        let j = if idx >= i { idx + 1 } else { idx };
                        set.insert((i.min(j), i.max(j)));
                    }
                }
                set.into_iter().collect()
            }
        }
    }
}

impl std::str::FromStr for PairStrategy {
    type Err = String;

    /// `all` or `sampled:<k>` (seeded with [`DEFAULT_SAMPLING_SEED`]).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "all" {
            return Ok(PairStrategy::AllPairs);
        }
        if let Some(k) = s.strip_prefix("sampled:") {
            let k: usize = k.parse().map_err(|_| format!("bad partner count in {s:?}"))?;
            if k == 0 {
                return Err("sampled:k needs k ≥ 1".into());
            }
            return Ok(PairStrategy::Sampled {
                k,
                seed: DEFAULT_SAMPLING_SEED,
            });
        }
        Err(format!("unknown pair strategy {s:?} (expected all or sampled:<k>)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairOptions {
    pub strategy: PairStrategy,
    pub estimator: Estimator,
    pub lag: usize,
}

impl PairOptions {
    pub fn for_heads(heads: usize) -> Self {
        Self {
            strategy: PairStrategy::default_for(heads),
            estimator: Estimator::default(),
            lag: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub i: usize,
    pub j: usize,
    pub atoms: PhiAtoms,
}

/// ΦID atoms for a set of head pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PairAtomTable {
    heads: usize,
    heads_per_layer: usize,
    pairs: Vec<PairRecord>,
}

impl PairAtomTable {
    pub fn new(heads: usize, heads_per_layer: usize, pairs: Vec<PairRecord>) -> Result<Self> {
        if heads < 2 {
            return Err(Error::validation("need at least two heads"));
        }
        if heads_per_layer == 0 || heads % heads_per_layer != 0 {
            return Err(Error::validation(format!(
                "{heads} heads do not split into layers of {heads_per_layer}"
            )));
        }
        if let Some(p) = pairs.iter().find(|p| p.i == p.j || p.i >= heads || p.j >= heads) {
            return Err(Error::validation(format!("invalid pair ({}, {})", p.i, p.j)));
        }
        Ok(Self {
            heads,
            heads_per_layer,
            pairs,
        })
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    pub fn heads_per_layer(&self) -> usize {
        self.heads_per_layer
    }

    pub fn layers(&self) -> usize {
        self.heads / self.heads_per_layer
    }

    pub fn pairs(&self) -> &[PairRecord] {
        &self.pairs
    }

    pub fn degenerate_pairs(&self) -> usize {
        self.pairs
            .iter()
            .filter(|p| p.atoms.status == EstimateStatus::Degenerate)
            .count()
    }
}

/// Pairwise ΦID over the head signals of a trace.
pub fn compute_pair_atoms(trace: &TraceTensor, opts: &PairOptions) -> Result<PairAtomTable> {
    trace.ensure_analyzable()?;
    let n = trace.heads();
    let series: Vec<Vec<f64>> = (0..n).map(|h| trace.head_series(h)).collect();
    let pairs = opts.strategy.pairs(n);
    let records = par::map(&pairs, |&(i, j)| -> Result<PairRecord> {
        let s = PairSeries::from_signals(&series[i], &series[j], opts.lag, trace.boundaries())?;
        Ok(PairRecord {
            i,
            j,
            atoms: phiid_from_series(&s, &opts.estimator)?,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let table = PairAtomTable::new(n, trace.heads_per_layer(), records)?;
    let degenerate = table.degenerate_pairs();
    if degenerate > 0 {
        log::warn!("{degenerate} head pairs involve a constant signal; their atoms are 0");
    }
    Ok(table)
}

const FIXED_COLUMNS: [&str; 6] = ["head_i", "head_j", "layer_i", "layer_j", "status", "tdmi"];

/// One CSV row per pair: ids, layers, status, TDMI and the 16 atoms in `unit`.
pub fn write_atoms_csv<W: Write>(out: W, table: &PairAtomTable, unit: Unit) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(PhiAtoms::labels());
    let csv_err = |e: csv::Error| Error::numerical(format!("CSV write failed: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    let hpl = table.heads_per_layer;
    for p in &table.pairs {
        let a = p.atoms.in_unit(unit);
        let mut row = vec![
            p.i.to_string(),
            p.j.to_string(),
            (p.i / hpl).to_string(),
            (p.j / hpl).to_string(),
            match a.status {
                EstimateStatus::Ok => "ok".to_string(),
                EstimateStatus::Degenerate => "degenerate".to_string(),
            },
            a.tdmi.to_string(),
        ];
        row.extend(a.flat().iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| Error::numerical(format!("CSV flush failed: {e}")))?;
    Ok(())
}

/// Parse a CSV written by [`write_atoms_csv`]; lines starting with `#` are
/// skipped. Values are taken to be in `unit` and converted back to nats.
pub fn read_atoms_csv<R: Read>(input: R, unit: Unit) -> Result<PairAtomTable> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(input);
    let bad = |msg: String| Error::from(ParseError::Csv(msg));
    let headers = r.headers().map_err(|e| bad(e.to_string()))?.clone();
    let mut expected: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    expected.extend(PhiAtoms::labels());
    if headers.iter().ne(expected.iter().map(String::as_str)) {
        return Err(bad(format!("unexpected columns {headers:?}")));
    }
    let to_nats = match unit {
        Unit::Nats => 1.0,
        Unit::Bits => std::f64::consts::LN_2,
    };
    let mut pairs = Vec::new();
    let mut heads = 0;
    let mut layer_of = std::collections::BTreeMap::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let int = |k: usize| -> Result<usize> {
            rec[k]
                .parse()
                .map_err(|_| bad(format!("row {}: bad integer {:?}", line + 1, &rec[k])))
        };
        let float = |k: usize| -> Result<f64> {
            rec[k]
                .parse::<f64>()
                .map(|v| v * to_nats)
                .map_err(|_| bad(format!("row {}: bad number {:?}", line + 1, &rec[k])))
        };
        let (i, j) = (int(0)?, int(1)?);
        layer_of.insert(i, int(2)?);
        layer_of.insert(j, int(3)?);
        let status = match &rec[4] {
            "ok" => EstimateStatus::Ok,
            "degenerate" => EstimateStatus::Degenerate,
            other => return Err(bad(format!("row {}: bad status {other:?}", line + 1))),
        };
        let mut atoms = [[0.0; 4]; 4];
        for k in 0..16 {
            atoms[k / 4][k % 4] = float(6 + k)?;
        }
        heads = heads.max(i + 1).max(j + 1);
        pairs.push(PairRecord {
            i,
            j,
            atoms: PhiAtoms {
                atoms,
                tdmi: float(5)?,
                unit: Unit::Nats,
                status,
            },
        });
    }
    let layers = layer_of.values().max().map_or(1, |l| l + 1);
    if heads % layers != 0 {
        return Err(bad(format!("{heads} heads do not split over {layers} layers")));
    }
    PairAtomTable::new(heads, heads / layers, pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_pairs_count() {
        assert_eq!(PairStrategy::AllPairs.pairs(4).len(), 6);
    }

    #[test]
    fn sampled_pairs_are_deterministic_and_cover_every_head() {
        let s = PairStrategy::Sampled { k: 3, seed: 7 };
        let a = s.pairs(40);
        assert_eq!(a, s.pairs(40));
        for h in 0..40 {
            assert!(a.iter().filter(|p| p.0 == h || p.1 == h).count() >= 3);
        }
        assert!(a.iter().all(|p| p.0 < p.1));
    }

    #[test]
    fn parse_strategy() {
        assert_eq!("all".parse::<PairStrategy>().unwrap(), PairStrategy::AllPairs);
        assert!(matches!(
            "sampled:8".parse::<PairStrategy>().unwrap(),
            PairStrategy::Sampled { k: 8, .. }
        ));
        assert!("sampled:x".parse::<PairStrategy>().is_err());
        assert_eq!(PairStrategy::default_for(1152), PairStrategy::Sampled { k: 64, seed: DEFAULT_SAMPLING_SEED });
    }
}
