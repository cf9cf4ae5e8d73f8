use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::graph::HeadGraph;
use super::modularity::Partition;
use crate::{Error, Result};

/// A move must raise modularity by more than this.
const MIN_GAIN: f64 = 1e-9;

/// Single-level greedy modularity maximisation.
///
/// Starting from singletons, nodes are visited in a seeded order and moved
/// to the neighbouring community with the largest modularity gain, repeated
/// until a full pass makes no move. Equal gains go to the lower community id.
pub fn detect_communities(g: &HeadGraph, seed: u64) -> Result<Partition> {
    let n = g.n();
    let two_m = g.total_weight();
    if two_m <= 0.0 {
        return Err(Error::numerical(
            "community detection is undefined for a graph with no weight",
        ));
    }
    let deg: Vec<f64> = (0..n).map(|i| g.degree(i)).collect();
    let mut comm: Vec<usize> = (0..n).collect();
    let mut tot = deg.clone();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    loop {
        let mut moved = false;
        for &i in &order {
            let own = comm[i];
            tot[own] -= deg[i];
            let mut links: BTreeMap<usize, f64> = BTreeMap::new();
            links.insert(own, 0.0);
            for (j, &w) in g.row(i).iter().enumerate() {
                if w > 0.0 {
                    *links.entry(comm[j]).or_insert(0.0) += w;
                }
            }
            // Proportional to the modularity change of inserting i into c.
            let gain = |c: usize, k: f64| k - deg[i] * tot[c] / two_m;
            let own_gain = gain(own, links[&own]);
            let (mut best, mut best_gain) = (own, own_gain);
            for (&c, &k) in &links {
                let v = gain(c, k);
                if v > best_gain {
                    best = c;
                    best_gain = v;
                }
            }
            if best != own && 2.0 * (best_gain - own_gain) / two_m <= MIN_GAIN {
                best = own;
            }
            tot[best] += deg[i];
            if best != own {
                comm[i] = best;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    Ok(Partition::from_labels(&comm))
}
