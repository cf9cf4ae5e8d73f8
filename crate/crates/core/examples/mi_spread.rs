//! Sampling spread of the Gaussian MI estimator on bivariate normals.
//!
//! Prints, for each ρ, the mean and standard deviation of the relative error
//! over 200 seeds at T = 10⁴, and the means of consecutive 20-seed blocks.

use phid_core::infodyn::{mutual_information_gaussian, DEFAULT_RIDGE};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const SEEDS: u64 = 200;
const BLOCK: usize = 20;
const T: usize = 10_000;

fn relative_error(rho: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..T).map(|_| StandardNormal.sample(&mut rng)).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|a| {
            let e: f64 = StandardNormal.sample(&mut rng);
            rho * a + (1.0 - rho * rho).sqrt() * e
        })
        .collect();
    let truth = -0.5 * (1.0 - rho * rho).ln();
    let mi = mutual_information_gaussian(&[&x], &[&y], DEFAULT_RIDGE).unwrap();
    (mi - truth) / truth
}

fn main() {
    for rho in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let errs: Vec<f64> = (0..SEEDS).map(|s| relative_error(rho, s)).collect();
        let n = errs.len() as f64;
        let mean = errs.iter().sum::<f64>() / n;
        let sd = (errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let blocks: Vec<String> = errs
            .chunks(BLOCK)
            .map(|c| format!("{:+.3}", c.iter().sum::<f64>() / c.len() as f64))
            .collect();
        println!("rho {rho}: mean {mean:+.4} sd {sd:.4} block means [{}]", blocks.join(", "));
    }
}
