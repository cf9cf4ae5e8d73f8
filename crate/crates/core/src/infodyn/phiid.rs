//! The 16-atom ΦID with minimum-mutual-information double redundancy.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::discrete::JointDistribution;
use super::gaussian::{copula_normal_scores, covariance_matrix, gaussian_mi_from_covariance, zscore};
use super::lattice::{Antichain, Source};
use super::Unit;
use crate::{Error, Result};

/// Minimum number of (t, t+lag) sample pairs accepted for estimation.
pub const MIN_PAIRS: usize = 8;

/// The nine mutual informations I(X^A_t; X^B_{t+1}) for A, B ∈ {{1},{2},{1,2}}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseMi {
    values: [[f64; 3]; 3],
}

impl BaseMi {
    /// `values[src][tgt]` indexed by [`Source::index`].
    pub fn new(values: [[f64; 3]; 3]) -> Self {
        Self { values }
    }

    pub fn get(&self, src: Source, tgt: Source) -> f64 {
        self.values[src.index()][tgt.index()]
    }

    /// Time-delayed mutual information of the whole system.
    pub fn tdmi(&self) -> f64 {
        self.get(Source::Both, Source::Both)
    }

    /// Relabel variables 1 ↔ 2.
    pub fn swapped(&self) -> BaseMi {
        let mut values = [[0.0; 3]; 3];
        for &a in &Source::ALL {
            for &b in &Source::ALL {
                values[a.swapped().index()][b.swapped().index()] = self.get(a, b);
            }
        }
        BaseMi { values }
    }

    pub fn values(&self) -> [[f64; 3]; 3] {
        self.values
    }
}

/// I∩(α→β) = min over A ∈ α, B ∈ β of I(X^A_t; X^B_{t+1}).
pub fn double_redundancy(alpha: Antichain, beta: Antichain, base: &BaseMi) -> f64 {
    let mut best = f64::INFINITY;
    for &a in alpha.members() {
        for &b in beta.members() {
            best = best.min(base.get(a, b));
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimateStatus {
    #[default]
    Ok,
    /// At least one input series was constant; all atoms are reported as 0.
    Degenerate,
}

/// The sixteen ΦID atoms `atoms[α][β]` together with the TDMI they decompose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhiAtoms {
    pub atoms: [[f64; 4]; 4],
    pub tdmi: f64,
    pub unit: Unit,
    pub status: EstimateStatus,
}

impl PhiAtoms {
    pub fn zero(status: EstimateStatus) -> Self {
        Self {
            atoms: [[0.0; 4]; 4],
            tdmi: 0.0,
            unit: Unit::Nats,
            status,
        }
    }

    pub fn get(&self, alpha: Antichain, beta: Antichain) -> f64 {
        self.atoms[alpha.index()][beta.index()]
    }

    /// The synergy → synergy atom ("abstract").
    pub fn syn_syn(&self) -> f64 {
        self.get(Antichain::Syn, Antichain::Syn)
    }

    /// The redundancy → redundancy atom ("memory").
    pub fn red_red(&self) -> f64 {
        self.get(Antichain::Red, Antichain::Red)
    }

    /// Sum of all sixteen atoms; equals [`PhiAtoms::tdmi`] up to round-off.
    pub fn sum(&self) -> f64 {
        self.atoms.iter().flatten().sum()
    }

    /// Sum of the atoms in the down-set of (α, β), which reconstructs I∩(α→β).
    pub fn cumulative(&self, alpha: Antichain, beta: Antichain) -> f64 {
        let mut total = 0.0;
        for &a in &Antichain::ALL {
            for &b in &Antichain::ALL {
                if a.le(alpha) && b.le(beta) {
                    total += self.get(a, b);
                }
            }
        }
        total
    }

    pub fn in_unit(&self, unit: Unit) -> PhiAtoms {
        let to_nats = match self.unit {
            Unit::Nats => 1.0,
            Unit::Bits => std::f64::consts::LN_2,
        };
        let scale = |v: f64| unit.from_nats(v * to_nats);
        let mut atoms = self.atoms;
        for v in atoms.iter_mut().flatten() {
            *v = scale(*v);
        }
        PhiAtoms {
            atoms,
            tdmi: scale(self.tdmi),
            unit,
            status: self.status,
        }
    }

    /// Column labels `red_red, red_unq1, …, syn_syn` in storage order.
    pub fn labels() -> Vec<String> {
        let mut out = Vec::with_capacity(16);
        for &a in &Antichain::ALL {
            for &b in &Antichain::ALL {
                out.push(format!("{}_{}", a.label(), b.label()));
            }
        }
        out
    }

    /// Atoms flattened in [`PhiAtoms::labels`] order.
    pub fn flat(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        for (i, v) in self.atoms.iter().flatten().enumerate() {
            out[i] = *v;
        }
        out
    }
}

/// Möbius inversion of the double-redundancy lattice into the 16 atoms.
pub fn phiid_atoms(base: &BaseMi) -> PhiAtoms {
    let mut cum = [[0.0; 4]; 4];
    for &a in &Antichain::ALL {
        for &b in &Antichain::ALL {
            cum[a.index()][b.index()] = double_redundancy(a, b, base);
        }
    }
    let mut atoms = [[0.0; 4]; 4];
    for &a in &Antichain::ALL {
        for &b in &Antichain::ALL {
            let mut v = 0.0;
            for &a2 in &Antichain::ALL {
                let mu_a = Antichain::mobius(a2, a);
                if mu_a == 0 {
                    continue;
                }
                for &b2 in &Antichain::ALL {
                    let mu_b = Antichain::mobius(b2, b);
                    if mu_b != 0 {
                        v += f64::from(mu_a * mu_b) * cum[a2.index()][b2.index()];
                    }
                }
            }
            atoms[a.index()][b.index()] = v;
        }
    }
    PhiAtoms {
        atoms,
        tdmi: base.tdmi(),
        unit: Unit::Nats,
        status: EstimateStatus::Ok,
    }
}

/// ΦID of an explicit joint distribution.
pub fn phiid_from_distribution(p: &JointDistribution) -> PhiAtoms {
    phiid_atoms(&p.base_mi())
}

/// Paired observations (x¹_t, x²_t, x¹_{t+lag}, x²_{t+lag}).
#[derive(Debug, Clone, PartialEq)]
pub struct PairSeries {
    samples: Vec<[f64; 4]>,
}

impl PairSeries {
    pub fn from_samples(samples: Vec<[f64; 4]>) -> Result<Self> {
        if samples.len() < MIN_PAIRS {
            return Err(Error::validation(format!(
                "{} sample pairs, need at least {MIN_PAIRS}",
                samples.len()
            )));
        }
        if samples.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::validation("non-finite sample"));
        }
        Ok(Self { samples })
    }

    /// Pair two signals at the given lag without crossing segment
    /// boundaries. `segment_starts` lists the first step of each segment
    /// (an empty list means one segment).
    pub fn from_signals(x1: &[f64], x2: &[f64], lag: usize, segment_starts: &[usize]) -> Result<Self> {
        if x1.len() != x2.len() {
            return Err(Error::validation("signals differ in length"));
        }
        if lag == 0 {
            return Err(Error::validation("lag must be at least 1"));
        }
        let n = x1.len();
        let mut starts: Vec<usize> = segment_starts.iter().copied().filter(|&s| s < n).collect();
        if starts.first() != Some(&0) {
            starts.insert(0, 0);
        }
        starts.dedup();
        let mut samples = Vec::with_capacity(n.saturating_sub(lag));
        for (k, &start) in starts.iter().enumerate() {
            let end = starts.get(k + 1).copied().unwrap_or(n);
            for t in start..end.saturating_sub(lag) {
                samples.push([x1[t], x2[t], x1[t + lag], x2[t + lag]]);
            }
        }
        Self::from_samples(samples)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[[f64; 4]] {
        &self.samples
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s[c]).collect()
    }

    /// Relabel variables 1 ↔ 2.
    pub fn swapped(&self) -> PairSeries {
        PairSeries {
            samples: self.samples.iter().map(|s| [s[1], s[0], s[3], s[2]]).collect(),
        }
    }

    /// Map each variable's distinct values to dense symbols.
    ///
    /// Returns the symbol quadruples and the alphabet sizes of variables 1
    /// and 2. Values of a variable at t and t+lag share one alphabet.
    pub fn symbols(&self) -> (Vec<[usize; 4]>, usize, usize) {
        let alphabet = |cols: [usize; 2]| {
            let mut vals: Vec<f64> = self
                .samples
                .iter()
                .flat_map(|s| [s[cols[0]], s[cols[1]]])
                .collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            vals
        };
        let v1 = alphabet([0, 2]);
        let v2 = alphabet([1, 3]);
        let code = |vals: &[f64], x: f64| vals.binary_search_by(|v| v.total_cmp(&x)).unwrap_or(0);
        let symbols = self
            .samples
            .iter()
            .map(|s| [code(&v1, s[0]), code(&v2, s[1]), code(&v1, s[2]), code(&v2, s[3])])
            .collect();
        (symbols, v1.len(), v2.len())
    }
}

/// How the nine base mutual informations are estimated from samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Estimator {
    /// Joint-Gaussian MI of z-scored columns, optionally after a
    /// rank-to-normal-scores copula transform.
    Gaussian { copula: bool, ridge: f64 },
    /// Plug-in MI treating each distinct value as a symbol.
    Discrete,
}

impl Default for Estimator {
    fn default() -> Self {
        Estimator::Gaussian {
            copula: true,
            ridge: super::gaussian::DEFAULT_RIDGE,
        }
    }
}

fn gaussian_base_mi(series: &PairSeries, copula: bool, ridge: f64) -> Result<Option<BaseMi>> {
    let mut cols = Vec::with_capacity(4);
    for c in 0..4 {
        let raw = series.column(c);
        let Some(z_raw) = zscore(&raw) else {
            return Ok(None);
        };
        let z = if copula {
            match zscore(&copula_normal_scores(&raw)) {
                Some(z) => z,
                None => return Ok(None),
            }
        } else {
            z_raw
        };
        cols.push(z);
    }
    let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
    let mut cov = covariance_matrix(&refs)?;
    for i in 0..4 {
        cov[(i, i)] += ridge;
    }
    let src_idx = |s: Source| -> &'static [usize] {
        match s {
            Source::One => &[0],
            Source::Two => &[1],
            Source::Both => &[0, 1],
        }
    };
    let tgt_idx = |s: Source| -> &'static [usize] {
        match s {
            Source::One => &[2],
            Source::Two => &[3],
            Source::Both => &[2, 3],
        }
    };
    let mut values = [[0.0; 3]; 3];
    for &a in &Source::ALL {
        for &b in &Source::ALL {
            values[a.index()][b.index()] = gaussian_mi_from_covariance(&cov, src_idx(a), tgt_idx(b))?;
        }
    }
    Ok(Some(BaseMi::new(values)))
}

/// Plug-in MIs counted directly from the symbol samples, without building the
/// four-variable joint.
fn discrete_base_mi(series: &PairSeries) -> BaseMi {
    let (symbols, _a1, a2) = series.symbols();
    let n = symbols.len() as f64;
    let code = |s: Source, v1: usize, v2: usize| match s {
        Source::One => v1,
        Source::Two => v2,
        Source::Both => v1 * a2 + v2,
    };
    let mut values = [[0.0; 3]; 3];
    for &a in &Source::ALL {
        for &b in &Source::ALL {
            let mut joint: HashMap<(usize, usize), u64> = HashMap::new();
            let mut cx: HashMap<usize, u64> = HashMap::new();
            let mut cy: HashMap<usize, u64> = HashMap::new();
            for s in &symbols {
                let x = code(a, s[0], s[1]);
                let y = code(b, s[2], s[3]);
                *joint.entry((x, y)).or_default() += 1;
                *cx.entry(x).or_default() += 1;
                *cy.entry(y).or_default() += 1;
            }
            let mut keys: Vec<_> = joint.into_iter().collect();
            keys.sort_unstable();
            let mi: f64 = keys
                .iter()
                .map(|&((x, y), c)| {
                    let c = c as f64;
                    (c / n) * (c * n / (cx[&x] as f64 * cy[&y] as f64)).ln()
                })
                .sum();
            values[a.index()][b.index()] = mi.max(0.0);
        }
    }
    BaseMi::new(values)
}

/// ΦID of two sampled signals.
///
/// A constant input yields all-zero atoms with [`EstimateStatus::Degenerate`].
pub fn phiid_from_series(series: &PairSeries, estimator: &Estimator) -> Result<PhiAtoms> {
    match *estimator {
        Estimator::Gaussian { copula, ridge } => match gaussian_base_mi(series, copula, ridge)? {
            Some(base) => Ok(phiid_atoms(&base)),
            None => Ok(PhiAtoms::zero(EstimateStatus::Degenerate)),
        },
        Estimator::Discrete => Ok(phiid_atoms(&discrete_base_mi(series))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use std::f64::consts::LN_2;
    use Antichain::*;

    /// Atoms by solving the zeta system Σ_{α'⪯α,β'⪯β} ∂ = I∩ directly.
    fn zeta_solve(base: &BaseMi) -> [[f64; 4]; 4] {
        let mut z = DMatrix::zeros(16, 16);
        let mut rhs = DVector::zeros(16);
        for &a in &Antichain::ALL {
            for &b in &Antichain::ALL {
                let row = a.index() * 4 + b.index();
                rhs[row] = double_redundancy(a, b, base);
                for &a2 in &Antichain::ALL {
                    for &b2 in &Antichain::ALL {
                        if a2.le(a) && b2.le(b) {
                            z[(row, a2.index() * 4 + b2.index())] = 1.0;
                        }
                    }
                }
            }
        }
        let x = z.lu().solve(&rhs).unwrap();
        let mut out = [[0.0; 4]; 4];
        for i in 0..16 {
            out[i / 4][i % 4] = x[i];
        }
        out
    }

    fn bits(f: impl Fn(usize, usize, usize) -> (usize, usize)) -> JointDistribution {
        let mut pmf = vec![0.0; 16];
        for x1 in 0..2 {
            for x2 in 0..2 {
                for r in 0..2 {
                    let (y1, y2) = f(x1, x2, r);
                    pmf[((x1 * 2 + x2) * 2 + y1) * 2 + y2] += 0.125;
                }
            }
        }
        JointDistribution::new(pmf, 2, 2).unwrap()
    }

    fn assert_atoms(got: &PhiAtoms, expected_in_ln2: [[f64; 4]; 4]) {
        for &a in &Antichain::ALL {
            for &b in &Antichain::ALL {
                let e = expected_in_ln2[a.index()][b.index()] * LN_2;
                assert!(
                    (got.get(a, b) - e).abs() < 1e-12,
                    "{a:?}->{b:?}: {} vs {e}",
                    got.get(a, b)
                );
            }
        }
    }

    #[test]
    fn independent_copy_channels() {
        let p = bits(|a, b, _| (a, b));
        let atoms = phiid_from_distribution(&p);
        assert!((atoms.get(Unq1, Unq1) - LN_2).abs() < 1e-12);
        assert!((atoms.get(Unq2, Unq2) - LN_2).abs() < 1e-12);
        assert!(atoms.red_red().abs() < 1e-12);
        assert!((atoms.sum() - 2.0 * LN_2).abs() < 1e-12);
        // Frozen from the enumeration + zeta-solve oracle (MMI puts ln 2 on
        // red→syn and syn→red, balanced by negative unique→syn terms).
        assert_atoms(
            &atoms,
            [
                [0.0, 0.0, 0.0, 1.0],
                [0.0, 1.0, 0.0, -1.0],
                [0.0, 0.0, 1.0, -1.0],
                [1.0, -1.0, -1.0, 2.0],
            ],
        );
    }

    #[test]
    fn duplicated_copied_bit_is_red_to_red() {
        let mut pmf = vec![0.0; 16];
        pmf[0] = 0.5;
        pmf[15] = 0.5;
        let atoms = phiid_from_distribution(&JointDistribution::new(pmf, 2, 2).unwrap());
        let mut expected = [[0.0; 4]; 4];
        expected[0][0] = 1.0;
        assert_atoms(&atoms, expected);
        assert!((atoms.sum() - LN_2).abs() < 1e-12);
    }

    #[test]
    fn xor_into_first_variable_is_syn_to_unq1() {
        let p = bits(|a, b, r| (a ^ b, r));
        let atoms = phiid_from_distribution(&p);
        let mut expected = [[0.0; 4]; 4];
        expected[Syn.index()][Unq1.index()] = 1.0;
        assert_atoms(&atoms, expected);
        let max = atoms.flat().iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(max, atoms.get(Syn, Unq1));
    }

    #[test]
    fn double_redundancy_readings() {
        let p = bits(|a, b, _| (a, b));
        let base = p.base_mi();
        assert_eq!(double_redundancy(Red, Red, &base), 0.0);
        assert_eq!(double_redundancy(Syn, Syn, &base), base.tdmi());
        assert!((base.tdmi() - p.tdmi()).abs() < 1e-15);
        let singles = [
            base.get(Source::One, Source::One),
            base.get(Source::One, Source::Two),
            base.get(Source::Two, Source::One),
            base.get(Source::Two, Source::Two),
        ];
        let min = singles.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(double_redundancy(Red, Red, &base), min);
    }

    #[test]
    fn mobius_inversion_matches_zeta_solve() {
        let base = BaseMi::new([[0.3, 0.1, 0.5], [0.05, 0.4, 0.45], [0.6, 0.7, 1.2]]);
        let atoms = phiid_atoms(&base);
        let oracle = zeta_solve(&base);
        for i in 0..4 {
            for j in 0..4 {
                assert!((atoms.atoms[i][j] - oracle[i][j]).abs() < 1e-12);
            }
        }
        for &a in &Antichain::ALL {
            for &b in &Antichain::ALL {
                assert!((atoms.cumulative(a, b) - double_redundancy(a, b, &base)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unit_conversion_round_trips() {
        let atoms = phiid_from_distribution(&bits(|a, b, _| (a, b)));
        let in_bits = atoms.in_unit(Unit::Bits);
        assert!((in_bits.get(Unq1, Unq1) - 1.0).abs() < 1e-12);
        assert!((in_bits.tdmi - 2.0).abs() < 1e-12);
        let back = in_bits.in_unit(Unit::Nats);
        assert!((back.syn_syn() - atoms.syn_syn()).abs() < 1e-12);
    }

    #[test]
    fn series_pairing_respects_segments() {
        let x: Vec<f64> = (0..12).map(f64::from).collect();
        let s = PairSeries::from_signals(&x, &x, 1, &[0, 6]).unwrap();
        assert_eq!(s.len(), 10);
        assert!(s.samples().iter().all(|p| p[2] - p[0] == 1.0));
        assert!(!s.samples().iter().any(|p| p[0] == 5.0));
        assert!(PairSeries::from_signals(&x[..5], &x[..5], 1, &[]).is_err());
    }

    #[test]
    fn constant_series_is_degenerate() {
        let c = vec![3.0; 40];
        let x: Vec<f64> = (0..40).map(|i| (i as f64).sin()).collect();
        let s = PairSeries::from_signals(&c, &x, 1, &[]).unwrap();
        let atoms = phiid_from_series(&s, &Estimator::default()).unwrap();
        assert_eq!(atoms.status, EstimateStatus::Degenerate);
        assert!(atoms.flat().iter().all(|&v| v == 0.0));
        assert_eq!(atoms.tdmi, 0.0);
    }
}
