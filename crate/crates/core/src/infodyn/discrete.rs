//! Plug-in estimators over explicit probability mass functions.

use serde::{Deserialize, Serialize};

use super::lattice::Source;
use super::phiid::BaseMi;
use super::Unit;
use crate::{Error, Result};

const NORMALIZATION_TOL: f64 = 1e-12;

fn validate_pmf(pmf: &[f64], expected_len: usize) -> Result<()> {
    if pmf.len() != expected_len {
        return Err(Error::validation(format!(
            "pmf has {} entries, expected {expected_len}",
            pmf.len()
        )));
    }
    if let Some((i, p)) = pmf
        .iter()
        .enumerate()
        .find(|(_, p)| !p.is_finite() || **p < 0.0)
    {
        return Err(Error::validation(format!("pmf entry {i} is {p}")));
    }
    let total: f64 = pmf.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::validation(format!(
            "pmf sums to {total}, not 1 within {NORMALIZATION_TOL:e}"
        )));
    }
    Ok(())
}

/// Shannon entropy in nats.
pub fn entropy(pmf: &[f64]) -> f64 {
    -pmf.iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

/// Plug-in I(X;Y) in nats from a row-major `nx × ny` joint pmf.
pub fn mutual_information_discrete(pmf: &[f64], nx: usize, ny: usize) -> Result<f64> {
    validate_pmf(pmf, nx * ny)?;
    Ok(mi_unchecked(pmf, nx, ny))
}

fn mi_unchecked(pmf: &[f64], nx: usize, ny: usize) -> f64 {
    let mut px = vec![0.0; nx];
    let mut py = vec![0.0; ny];
    for x in 0..nx {
        for y in 0..ny {
            let p = pmf[x * ny + y];
            px[x] += p;
            py[y] += p;
        }
    }
    let mut mi = 0.0;
    for x in 0..nx {
        for y in 0..ny {
            let p = pmf[x * ny + y];
            if p > 0.0 {
                mi += p * (p / (px[x] * py[y])).ln();
            }
        }
    }
    mi.max(0.0)
}

/// The four PID atoms of I(Y; {X₁, X₂}).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidAtoms {
    pub red: f64,
    pub unq1: f64,
    pub unq2: f64,
    pub syn: f64,
    pub unit: Unit,
}

impl PidAtoms {
    pub fn total(&self) -> f64 {
        self.red + self.unq1 + self.unq2 + self.syn
    }

    pub fn in_unit(&self, unit: Unit) -> PidAtoms {
        debug_assert_eq!(self.unit, Unit::Nats);
        PidAtoms {
            red: unit.from_nats(self.red),
            unq1: unit.from_nats(self.unq1),
            unq2: unit.from_nats(self.unq2),
            syn: unit.from_nats(self.syn),
            unit,
        }
    }
}

/// Joint pmf over (X₁, X₂, Y), indexed `(x1 * n2 + x2) * ny + y`.
#[derive(Debug, Clone, PartialEq)]
pub struct PidDistribution {
    pmf: Vec<f64>,
    sizes: [usize; 3],
}

impl PidDistribution {
    pub fn new(pmf: Vec<f64>, n1: usize, n2: usize, ny: usize) -> Result<Self> {
        validate_pmf(&pmf, n1 * n2 * ny)?;
        Ok(Self {
            pmf,
            sizes: [n1, n2, ny],
        })
    }

    /// Build from a probability function over outcomes.
    pub fn from_fn(n1: usize, n2: usize, ny: usize, f: impl Fn(usize, usize, usize) -> f64) -> Result<Self> {
        let mut pmf = Vec::with_capacity(n1 * n2 * ny);
        for x1 in 0..n1 {
            for x2 in 0..n2 {
                for y in 0..ny {
                    pmf.push(f(x1, x2, y));
                }
            }
        }
        Self::new(pmf, n1, n2, ny)
    }

    fn mi_with(&self, project: impl Fn(usize, usize) -> usize, nsrc: usize) -> f64 {
        let [n1, n2, ny] = self.sizes;
        let mut joint = vec![0.0; nsrc * ny];
        for x1 in 0..n1 {
            for x2 in 0..n2 {
                for y in 0..ny {
                    joint[project(x1, x2) * ny + y] += self.pmf[(x1 * n2 + x2) * ny + y];
                }
            }
        }
        mi_unchecked(&joint, nsrc, ny)
    }

    pub fn mi_first(&self) -> f64 {
        self.mi_with(|x1, _| x1, self.sizes[0])
    }

    pub fn mi_second(&self) -> f64 {
        self.mi_with(|_, x2| x2, self.sizes[1])
    }

    pub fn mi_joint(&self) -> f64 {
        let n2 = self.sizes[1];
        self.mi_with(|x1, x2| x1 * n2 + x2, self.sizes[0] * n2)
    }
}

/// PID with minimum-mutual-information redundancy.
pub fn pid_mmi(p: &PidDistribution) -> PidAtoms {
    let i1 = p.mi_first();
    let i2 = p.mi_second();
    let i12 = p.mi_joint();
    let red = i1.min(i2);
    let unq1 = i1 - red;
    let unq2 = i2 - red;
    PidAtoms {
        red,
        unq1,
        unq2,
        syn: i12 - red - unq1 - unq2,
        unit: Unit::Nats,
    }
}

/// Joint pmf over (X¹_t, X²_t, X¹_{t+1}, X²_{t+1}).
///
/// Indexed `((x1 * a2 + x2) * a1 + y1) * a2 + y2` where `a1`, `a2` are the
/// alphabet sizes of the two variables (shared by both time points).
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    pmf: Vec<f64>,
    a1: usize,
    a2: usize,
}

impl JointDistribution {
    pub fn new(pmf: Vec<f64>, a1: usize, a2: usize) -> Result<Self> {
        if a1 == 0 || a2 == 0 {
            return Err(Error::validation("alphabet sizes must be positive"));
        }
        validate_pmf(&pmf, a1 * a2 * a1 * a2)?;
        Ok(Self { pmf, a1, a2 })
    }

    pub fn from_fn(
        a1: usize,
        a2: usize,
        f: impl Fn(usize, usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut pmf = Vec::with_capacity(a1 * a2 * a1 * a2);
        for x1 in 0..a1 {
            for x2 in 0..a2 {
                for y1 in 0..a1 {
                    for y2 in 0..a2 {
                        pmf.push(f(x1, x2, y1, y2));
                    }
                }
            }
        }
        Self::new(pmf, a1, a2)
    }

    /// Empirical pmf of symbol quadruples `(x1_t, x2_t, x1_{t+1}, x2_{t+1})`.
    pub fn from_symbols(samples: &[[usize; 4]], a1: usize, a2: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::validation("no samples"));
        }
        let mut counts = vec![0u64; a1 * a2 * a1 * a2];
        for s in samples {
            if s[0] >= a1 || s[2] >= a1 || s[1] >= a2 || s[3] >= a2 {
                return Err(Error::validation(format!("symbol out of range in {s:?}")));
            }
            counts[((s[0] * a2 + s[1]) * a1 + s[2]) * a2 + s[3]] += 1;
        }
        let n = samples.len() as f64;
        let pmf: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
        Self::new(pmf, a1, a2)
    }

    pub fn alphabet_sizes(&self) -> (usize, usize) {
        (self.a1, self.a2)
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    fn source_code(&self, s: Source, v1: usize, v2: usize) -> usize {
        match s {
            Source::One => v1,
            Source::Two => v2,
            Source::Both => v1 * self.a2 + v2,
        }
    }

    fn source_size(&self, s: Source) -> usize {
        match s {
            Source::One => self.a1,
            Source::Two => self.a2,
            Source::Both => self.a1 * self.a2,
        }
    }

    /// Marginal pmf of (X^src_t, X^tgt_{t+1}) as a row-major matrix.
    pub fn marginal(&self, src: Source, tgt: Source) -> (Vec<f64>, usize, usize) {
        let (a1, a2) = (self.a1, self.a2);
        let nx = self.source_size(src);
        let ny = self.source_size(tgt);
        let mut out = vec![0.0; nx * ny];
        for x1 in 0..a1 {
            for x2 in 0..a2 {
                let sx = self.source_code(src, x1, x2);
                for y1 in 0..a1 {
                    for y2 in 0..a2 {
                        let p = self.pmf[((x1 * a2 + x2) * a1 + y1) * a2 + y2];
                        out[sx * ny + self.source_code(tgt, y1, y2)] += p;
                    }
                }
            }
        }
        (out, nx, ny)
    }

    /// The nine source/target mutual informations I(X^A_t; X^B_{t+1}).
    pub fn base_mi(&self) -> BaseMi {
        let mut values = [[0.0; 3]; 3];
        for &a in &Source::ALL {
            for &b in &Source::ALL {
                let (m, nx, ny) = self.marginal(a, b);
                values[a.index()][b.index()] = mi_unchecked(&m, nx, ny);
            }
        }
        BaseMi::new(values)
    }

    /// TDMI computed directly from the full joint.
    pub fn tdmi(&self) -> f64 {
        let n = self.a1 * self.a2;
        mi_unchecked(&self.pmf, n, n)
    }
}
