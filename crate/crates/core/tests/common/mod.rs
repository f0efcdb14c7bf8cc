#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ripple_core::cis::Cis;
use ripple_core::graph::Graph;
use ripple_core::oracle::Hon;
use ripple_core::reservoir::ReservoirMatrix;
use ripple_core::stratify::Stratification;

pub fn complete(n: u32) -> Graph {
    let edges: Vec<_> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .collect();
    Graph::from_edges(n as usize, &edges)
}

pub fn path(n: u32) -> Graph {
    let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    Graph::from_edges(n as usize, &edges)
}

/// Center 0 with `leaves` leaves.
pub fn star(leaves: u32) -> Graph {
    let edges: Vec<_> = (1..=leaves).map(|i| (0, i)).collect();
    Graph::from_edges(leaves as usize + 1, &edges)
}

pub fn petersen() -> Graph {
    let mut edges = Vec::new();
    for i in 0..5 {
        edges.push((i, (i + 1) % 5));
        edges.push((i, i + 5));
        edges.push((5 + i, 5 + (i + 2) % 5));
    }
    Graph::from_edges(10, &edges)
}

pub fn erdos_renyi(n: u32, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(p) {
                edges.push((a, b));
            }
        }
    }
    Graph::from_edges(n as usize, &edges)
}

pub const ER_SEEDS: [u64; 3] = [101, 202, 303];

pub fn er_suite() -> Vec<(String, Graph)> {
    ER_SEEDS
        .iter()
        .map(|&s| (format!("er50-{s}"), erdos_renyi(50, 0.15, s)))
        .collect()
}

/// Graphs with at most 8 vertices.
pub fn small_suite() -> Vec<(String, Graph)> {
    vec![
        ("K3".into(), complete(3)),
        ("K4".into(), complete(4)),
        ("P4".into(), path(4)),
        ("S4".into(), star(4)),
    ]
}

pub fn full_suite() -> Vec<(String, Graph)> {
    let mut out = small_suite();
    out.push(("Petersen".into(), petersen()));
    out.extend(er_suite());
    out
}

pub fn cis(v: &[u32]) -> Cis {
    Cis::new(v).unwrap()
}

/// Reservoir matrix holding every crossing edge of the explicit network, so
/// the supernode degree and entry law of each stratum are exact.
pub fn exact_matrix(g: &Graph, strat: &Stratification, hon: &Hon) -> ReservoirMatrix {
    let rho: Vec<u32> = hon.states.iter().map(|s| strat.rho(g, s)).collect();
    let capacity = 2 * hon.graph.edge_count() + 1;
    let mut m = ReservoirMatrix::new(strat.r_max(), capacity);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for (a, b) in hon.edges() {
        let (lo, hi) = if rho[a as usize] <= rho[b as usize] {
            (a, b)
        } else {
            (b, a)
        };
        let (q, t) = (rho[lo as usize], rho[hi as usize]);
        if q < t {
            m.offer(q, t, hon.states[hi as usize], &mut rng);
            m.add_beta(q, t, 1.0);
        }
    }
    m
}

/// Edges of the walk graph of stratum `r`: the supernode edges into `I_r`
/// plus every edge with one endpoint in `I_r` and the other at stratum `>= r`.
pub fn stratum_edges(g: &Graph, strat: &Stratification, hon: &Hon, r: u32) -> (u64, u64) {
    let rho: Vec<u32> = hon.states.iter().map(|s| strat.rho(g, s)).collect();
    let (mut deg, mut inner) = (0u64, 0u64);
    for (a, b) in hon.edges() {
        let (x, y) = (
            rho[a as usize].min(rho[b as usize]),
            rho[a as usize].max(rho[b as usize]),
        );
        if y == r && x < r {
            deg += 1;
        } else if x == r {
            inner += 1;
        }
    }
    (deg, inner)
}
