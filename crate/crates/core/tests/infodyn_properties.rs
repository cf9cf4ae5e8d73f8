//! Lattice identities and estimator checks for the ΦID pipeline.

use std::f64::consts::LN_2;

use phid_core::infodyn::{
    double_redundancy, phiid_atoms, phiid_from_distribution, phiid_from_series, pid_mmi, Antichain,
    BaseMi, Estimator, JointDistribution, PairSeries, PidDistribution, DEFAULT_RIDGE,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn random_joint(seed: u64, a1: usize, a2: usize, sparse: bool) -> JointDistribution {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = a1 * a2 * a1 * a2;
    let mut w: Vec<f64> = (0..n)
        .map(|_| {
            let v: f64 = rng.random();
            if sparse && rng.random_bool(0.5) {
                0.0
            } else {
                v
            }
        })
        .collect();
    if w.iter().all(|&v| v == 0.0) {
        w[0] = 1.0;
    }
    let total: f64 = w.iter().sum();
    JointDistribution::new(w.iter().map(|v| v / total).collect(), a1, a2).unwrap()
}

fn ar1(phi: f64, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x = Vec::with_capacity(n);
    let mut prev: f64 = StandardNormal.sample(rng);
    let innov = (1.0 - phi * phi).sqrt();
    for _ in 0..n {
        let e: f64 = StandardNormal.sample(rng);
        prev = phi * prev + innov * e;
        x.push(prev);
    }
    x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn discrete_atoms_conserve_tdmi(seed in any::<u64>(), a1 in 2usize..=4, a2 in 2usize..=4, sparse in any::<bool>()) {
        let p = random_joint(seed, a1, a2, sparse);
        let atoms = phiid_from_distribution(&p);
        prop_assert!((atoms.sum() - atoms.tdmi).abs() <= 1e-10);
        prop_assert!((atoms.tdmi - p.tdmi()).abs() <= 1e-10);
        let base = p.base_mi();
        for &a in &Antichain::ALL {
            for &b in &Antichain::ALL {
                prop_assert!((atoms.cumulative(a, b) - double_redundancy(a, b, &base)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn double_redundancy_is_monotone(seed in any::<u64>(), a1 in 2usize..=3, a2 in 2usize..=3) {
        let base = random_joint(seed, a1, a2, false).base_mi();
        for &a in &Antichain::ALL {
            for &a2_ in &Antichain::ALL {
                for &b in &Antichain::ALL {
                    for &b2 in &Antichain::ALL {
                        if a.le(a2_) && b.le(b2) {
                            prop_assert!(double_redundancy(a, b, &base) <= double_redundancy(a2_, b2, &base) + 1e-15);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn swapping_labels_swaps_unique_atoms(values in prop::array::uniform9(0.0f64..2.0)) {
        let base = BaseMi::new([
            [values[0], values[1], values[2]],
            [values[3], values[4], values[5]],
            [values[6], values[7], values[8]],
        ]);
        let atoms = phiid_atoms(&base);
        let swapped = phiid_atoms(&base.swapped());
        for &a in &Antichain::ALL {
            for &b in &Antichain::ALL {
                prop_assert!((atoms.get(a, b) - swapped.get(a.swapped(), b.swapped())).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mmi_redundancy_is_exact_minimum(seed in any::<u64>(), n1 in 2usize..=4, n2 in 2usize..=4, ny in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<f64> = (0..n1 * n2 * ny).map(|_| rng.random::<f64>()).collect();
        let total: f64 = w.iter().sum();
        let p = PidDistribution::new(w.iter().map(|v| v / total).collect(), n1, n2, ny).unwrap();
        let atoms = pid_mmi(&p);
        prop_assert_eq!(atoms.red, p.mi_first().min(p.mi_second()));
        prop_assert!((atoms.total() - p.mi_joint()).abs() < 1e-12);
        prop_assert!((atoms.red + atoms.unq1 - p.mi_first()).abs() < 1e-15);
        prop_assert!((atoms.red + atoms.unq2 - p.mi_second()).abs() < 1e-15);
    }

    #[test]
    fn gaussian_atoms_conserve_tdmi(seed in any::<u64>(), coupling in -0.9f64..0.9, copula in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x1 = ar1(0.6, 400, &mut rng);
        let noise = ar1(0.3, 400, &mut rng);
        let x2: Vec<f64> = x1.iter().zip(&noise).map(|(a, b)| coupling * a + b).collect();
        let s = PairSeries::from_signals(&x1, &x2, 1, &[]).unwrap();
        let atoms = phiid_from_series(&s, &Estimator::Gaussian { copula, ridge: DEFAULT_RIDGE }).unwrap();
        prop_assert!((atoms.sum() - atoms.tdmi).abs() <= 1e-6);
    }
}

#[test]
fn independent_ar1_streams_are_unique_not_redundant() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x1 = ar1(0.8, 10_000, &mut rng);
    let x2 = ar1(0.8, 10_000, &mut rng);
    let s = PairSeries::from_signals(&x1, &x2, 1, &[]).unwrap();
    let closed_form = -0.5 * (1.0 - 0.8_f64 * 0.8).ln();
    for copula in [false, true] {
        let atoms = phiid_from_series(&s, &Estimator::Gaussian { copula, ridge: DEFAULT_RIDGE }).unwrap();
        assert!(atoms.red_red().abs() <= 0.02, "red_red {}", atoms.red_red());
        let u1 = atoms.get(Antichain::Unq1, Antichain::Unq1);
        assert!(u1 > 0.0 && (u1 - closed_form).abs() < 0.05, "unq1 {u1} vs {closed_form}");
    }
}

#[test]
fn identical_ar1_streams_are_redundant() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let x = ar1(0.8, 10_000, &mut rng);
    let s = PairSeries::from_signals(&x, &x, 1, &[]).unwrap();
    let closed_form = -0.5 * (1.0 - 0.8_f64 * 0.8).ln();
    let atoms = phiid_from_series(&s, &Estimator::default()).unwrap();
    assert!(atoms.red_red() > 0.0 && (atoms.red_red() - closed_form).abs() < 0.05);
    assert!(atoms.get(Antichain::Unq1, Antichain::Unq1).abs() <= 0.02);
    assert!(atoms.red_red() > atoms.syn_syn());
}

#[test]
fn discrete_series_route_matches_distribution_route() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 20_000;
    let mut x1 = vec![0.0; n];
    let mut x2 = vec![0.0; n];
    for t in 1..n {
        let flip: f64 = rng.random();
        x1[t] = ((x1[t - 1] as usize + x2[t - 1] as usize + usize::from(flip < 0.1)) % 3) as f64;
        x2[t] = f64::from(rng.random_range(0..2u8));
    }
    let s = PairSeries::from_signals(&x1, &x2, 1, &[]).unwrap();
    let by_series = phiid_from_series(&s, &Estimator::Discrete).unwrap();
    let (symbols, a1, a2) = s.symbols();
    let by_pmf = phiid_from_distribution(&JointDistribution::from_symbols(&symbols, a1, a2).unwrap());
    for (x, y) in by_series.flat().iter().zip(by_pmf.flat()) {
        assert!((x - y).abs() < 1e-9, "{x} vs {y}");
    }
    assert!(by_series.get(Antichain::Syn, Antichain::Unq1) > 0.1);
}

#[test]
fn gaussian_error_shrinks_like_inverse_sqrt_t() {
    // |Î − I| for x2 = ρ·x1 + noise, averaged over seeds, at T = 1e3, 1e4, 1e5.
    let rho: f64 = 0.6;
    let truth = -0.5 * (1.0 - rho * rho).ln();
    let err_at = |t: usize| {
        let seeds = 8;
        (0..seeds)
            .map(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
                let x: Vec<f64> = (0..t).map(|_| StandardNormal.sample(&mut rng)).collect();
                let y: Vec<f64> = x
                    .iter()
                    .map(|a| {
                        let e: f64 = StandardNormal.sample(&mut rng);
                        rho * a + (1.0 - rho * rho).sqrt() * e
                    })
                    .collect();
                let mi = phid_core::infodyn::mutual_information_gaussian(&[&x], &[&y], DEFAULT_RIDGE).unwrap();
                (mi - truth).abs()
            })
            .sum::<f64>()
            / seeds as f64
    };
    let errs = [err_at(1_000), err_at(10_000), err_at(100_000)];
    // √10 ≈ 3.16 per decade; allow generous slack for 8-seed averages.
    assert!(errs[0] / errs[1] > 1.5 && errs[1] / errs[2] > 1.5, "{errs:?}");
    assert!(errs[2] < 0.01);
}

#[test]
fn bit_examples_in_bits() {
    let p = PidDistribution::from_fn(2, 2, 2, |a, b, y| if a ^ b == y { 0.25 } else { 0.0 }).unwrap();
    let atoms = pid_mmi(&p);
    assert!((atoms.syn - LN_2).abs() < 1e-12);
}
