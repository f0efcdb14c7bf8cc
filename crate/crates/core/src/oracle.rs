//! Exact ground truth for graphs small enough to enumerate.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::canon::PatternKey;
use crate::cis::{induce, Cis, SmallGraph, MAX_K};
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};
use crate::hon::hon_neighbors;

pub const DEFAULT_CIS_CAP: usize = 10_000_000;
pub const DEFAULT_HON_CAP: usize = 1_000_000;

/// Calls `visit` once for every connected induced subgraph on `k` vertices,
/// using ESU extension sets (only vertices above the root, exclusive
/// neighborhoods), so each set is produced exactly once.
pub fn for_each_cis(g: &Graph, k: usize, cap: usize, mut visit: impl FnMut(&Cis)) -> Result<usize> {
    if k == 0 || k > MAX_K {
        return Err(Error::OrderTooLarge {
            order: k,
            max: MAX_K,
        });
    }
    let mut count = 0usize;
    let mut sub = Vec::with_capacity(k);
    for root in 0..g.n() as VertexId {
        sub.clear();
        sub.push(root);
        let ext: Vec<VertexId> = g
            .neighbors(root)
            .iter()
            .copied()
            .filter(|&u| u > root)
            .collect();
        extend(g, k, root, &mut sub, ext, cap, &mut count, &mut visit)?;
    }
    Ok(count)
}

#[allow(clippy::too_many_arguments)]
fn extend(
    g: &Graph,
    k: usize,
    root: VertexId,
    sub: &mut Vec<VertexId>,
    mut ext: Vec<VertexId>,
    cap: usize,
    count: &mut usize,
    visit: &mut impl FnMut(&Cis),
) -> Result<()> {
    if sub.len() == k {
        *count += 1;
        if *count > cap {
            return Err(Error::CapExceeded {
                what: "subgraph enumeration",
                cap,
            });
        }
        let mut sorted = sub.clone();
        sorted.sort_unstable();
        visit(&Cis::from_sorted(&sorted));
        return Ok(());
    }
    while let Some(w) = ext.pop() {
        let mut next = ext.clone();
        for &u in g.neighbors(w) {
            if u <= root || sub.contains(&u) || next.contains(&u) {
                continue;
            }
            // exclusive: not adjacent to the current subgraph
            if sub.iter().any(|&x| g.has_edge(x, u)) {
                continue;
            }
            next.push(u);
        }
        sub.push(w);
        extend(g, k, root, sub, next, cap, count, visit)?;
        sub.pop();
    }
    Ok(())
}

pub fn enumerate_cis(g: &Graph, k: usize, cap: usize) -> Result<Vec<Cis>> {
    let mut out = Vec::new();
    for_each_cis(g, k, cap, |c| out.push(*c))?;
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactCounts {
    pub counts: BTreeMap<PatternKey, u64>,
    pub total: u64,
}

impl ExactCounts {
    pub fn as_estimates(&self) -> BTreeMap<PatternKey, f64> {
        self.counts
            .iter()
            .map(|(k, &v)| (k.clone(), v as f64))
            .collect()
    }
}

pub fn exact_count_vector(g: &Graph, k: usize, cap: usize) -> Result<ExactCounts> {
    let mut cache: HashMap<SmallGraph, PatternKey> = HashMap::new();
    let mut out = ExactCounts::default();
    for_each_cis(g, k, cap, |c| {
        let sg = induce(g, c.vertices());
        let key = cache
            .entry(sg)
            .or_insert_with(|| PatternKey::canonical(&sg))
            .clone();
        *out.counts.entry(key).or_default() += 1;
        out.total += 1;
    })?;
    Ok(out)
}

/// Explicit higher-order network over all connected `m`-vertex states.
#[derive(Clone, Debug)]
pub struct Hon {
    pub states: Vec<Cis>,
    pub index: HashMap<Cis, u32>,
    pub graph: Graph,
}

impl Hon {
    pub fn id(&self, s: &Cis) -> Option<u32> {
        self.index.get(s).copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.graph.n() as u32).flat_map(move |a| {
            self.graph
                .neighbors(a)
                .iter()
                .filter(move |&&b| a < b)
                .map(move |&b| (a, b))
        })
    }
}

pub fn build_hon(g: &Graph, m: usize, cap: usize) -> Result<Hon> {
    let states = enumerate_cis(g, m, cap).map_err(|e| match e {
        Error::CapExceeded { .. } => Error::CapExceeded {
            what: "HON vertices",
            cap,
        },
        other => other,
    })?;
    let index: HashMap<Cis, u32> = states
        .iter()
        .enumerate()
        .map(|(i, s)| (*s, i as u32))
        .collect();
    let mut edges = Vec::new();
    for (i, s) in states.iter().enumerate() {
        for t in hon_neighbors(g, s)? {
            let j = index[&t];
            if (i as u32) < j {
                edges.push((i as u32, j));
            }
        }
    }
    let graph = Graph::from_edges(states.len(), &edges);
    Ok(Hon {
        states,
        index,
        graph,
    })
}

/// Number of pairs of connected `k - 1` subsets of `vset` that overlap in
/// `k - 2` vertices and together cover `vset`.
pub fn gamma_bruteforce(g: &Graph, vset: &[VertexId]) -> Result<u64> {
    let sg = induce(g, vset);
    if !sg.is_connected() {
        return Err(Error::Disconnected);
    }
    let k = vset.len();
    if k < 2 {
        return Err(Error::OrderTooSmall(k));
    }
    let full: u32 = (1 << k) - 1;
    let subsets: Vec<u32> = (0..=full)
        .filter(|m| m.count_ones() as usize == k - 1)
        .filter(|&m| {
            let verts: Vec<VertexId> = (0..k)
                .filter(|&i| m >> i & 1 == 1)
                .map(|i| vset[i])
                .collect();
            induce(g, &verts).is_connected()
        })
        .collect();
    let mut pairs = 0;
    for (i, &a) in subsets.iter().enumerate() {
        for &b in &subsets[i + 1..] {
            if (a & b).count_ones() as usize == k - 2 && a | b == full {
                pairs += 1;
            }
        }
    }
    Ok(pairs)
}

/// Sum of `indicator(pattern) / gamma` over every edge of an explicit HON;
/// equals the exact count vector of `(m + 1)`-vertex subgraphs.
pub fn hon_edge_sum(g: &Graph, hon: &Hon) -> Result<BTreeMap<PatternKey, f64>> {
    let mut out = BTreeMap::new();
    for (a, b) in hon.edges() {
        let merged = hon.states[a as usize].union(&hon.states[b as usize])?;
        let sg = induce(g, merged.vertices());
        *out.entry(PatternKey::canonical(&sg)).or_insert(0.0) += 1.0 / sg.gamma()? as f64;
    }
    Ok(out)
}
