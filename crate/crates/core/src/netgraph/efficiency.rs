use super::graph::HeadGraph;
use crate::{par, Error, Result};

/// All-pairs shortest path lengths, edge length `1/w`, `∞` when unreachable.
pub fn shortest_path_lengths(g: &HeadGraph) -> Vec<f64> {
    let n = g.n();
    par::map_range(n, |s| dijkstra(g, s)).concat()
}

fn dijkstra(g: &HeadGraph, source: usize) -> Vec<f64> {
    let n = g.n();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[source] = 0.0;
    for _ in 0..n {
        let mut u = usize::MAX;
        for v in 0..n {
            if !done[v] && dist[v].is_finite() && (u == usize::MAX || dist[v] < dist[u]) {
                u = v;
            }
        }
        if u == usize::MAX {
            break;
        }
        done[u] = true;
        for (v, &w) in g.row(u).iter().enumerate() {
            if w > 0.0 && !done[v] {
                let alt = dist[u] + 1.0 / w;
                if alt < dist[v] {
                    dist[v] = alt;
                }
            }
        }
    }
    dist
}

/// Mean of `1/l_ij` over ordered pairs `i ≠ j`; unreachable pairs add 0.
pub fn global_efficiency(g: &HeadGraph) -> Result<f64> {
    let n = g.n();
    if n < 2 {
        return Err(Error::validation("global efficiency needs at least 2 nodes"));
    }
    let d = shortest_path_lengths(g);
    let terms = (0..n).flat_map(|i| {
        let d = &d;
        (0..n).filter(move |&j| j != i).map(move |j| 1.0 / d[i * n + j])
    });
    Ok(par::compensated_sum(terms) / (n * (n - 1)) as f64)
}
