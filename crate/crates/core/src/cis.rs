//! Connected induced subgraphs and the small dense graphs they induce.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};

/// Largest subgraph order handled anywhere in the crate.
pub const MAX_K: usize = 12;

/// A set of at most [`MAX_K`] vertices, kept sorted. Walk states are sets of
/// `k - 1` vertices inducing a connected subgraph of the input graph.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cis {
    len: u8,
    verts: [VertexId; MAX_K],
}

impl Cis {
    /// Builds a vertex set from arbitrary ids; they are sorted and must be
    /// distinct.
    pub fn new(vertices: &[VertexId]) -> Result<Self> {
        if vertices.len() > MAX_K {
            return Err(Error::OrderTooLarge {
                order: vertices.len(),
                max: MAX_K,
            });
        }
        let mut verts = [0; MAX_K];
        verts[..vertices.len()].copy_from_slice(vertices);
        let slice = &mut verts[..vertices.len()];
        slice.sort_unstable();
        if slice.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate vertex in {vertices:?}")));
        }
        Ok(Cis {
            len: vertices.len() as u8,
            verts,
        })
    }

    /// Builds from a slice that is already strictly increasing.
    pub(crate) fn from_sorted(vertices: &[VertexId]) -> Self {
        debug_assert!(vertices.windows(2).all(|w| w[0] < w[1]));
        let mut verts = [0; MAX_K];
        verts[..vertices.len()].copy_from_slice(vertices);
        Cis {
            len: vertices.len() as u8,
            verts,
        }
    }

    #[inline]
    pub fn vertices(&self) -> &[VertexId] {
        &self.verts[..self.len as usize]
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn contains(&self, v: VertexId) -> bool {
        self.vertices().binary_search(&v).is_ok()
    }

    /// The set with `out` removed and `add` inserted.
    pub fn replace(&self, out: VertexId, add: VertexId) -> Cis {
        let mut verts = [0; MAX_K];
        let mut n = 0;
        let mut pending = Some(add);
        for &x in self.vertices() {
            if x == out {
                continue;
            }
            if let Some(a) = pending {
                if a < x {
                    verts[n] = a;
                    n += 1;
                    pending = None;
                }
            }
            verts[n] = x;
            n += 1;
        }
        if let Some(a) = pending {
            verts[n] = a;
            n += 1;
        }
        Cis {
            len: n as u8,
            verts,
        }
    }

    /// Sorted union of two vertex sets.
    pub fn union(&self, other: &Cis) -> Result<Cis> {
        let (a, b) = (self.vertices(), other.vertices());
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some(&x), Some(&y)) if x == y => {
                    i += 1;
                    j += 1;
                    x
                }
                (Some(&x), Some(&y)) if x < y => {
                    i += 1;
                    x
                }
                (Some(_), Some(&y)) => {
                    j += 1;
                    y
                }
                (Some(&x), None) => {
                    i += 1;
                    x
                }
                (None, Some(&y)) => {
                    j += 1;
                    y
                }
                (None, None) => unreachable!(),
            };
            out.push(next);
        }
        if out.len() > MAX_K {
            return Err(Error::OrderTooLarge {
                order: out.len(),
                max: MAX_K,
            });
        }
        Ok(Cis::from_sorted(&out))
    }

    pub fn intersection_size(&self, other: &Cis) -> usize {
        self.vertices()
            .iter()
            .filter(|&&v| other.contains(v))
            .count()
    }
}

impl Ord for Cis {
    fn cmp(&self, other: &Self) -> Ordering {
        self.vertices().cmp(other.vertices())
    }
}

impl PartialOrd for Cis {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Cis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.vertices()).finish()
    }
}

impl Serialize for Cis {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.vertices().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Cis {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<VertexId>::deserialize(d)?;
        Cis::new(&v).map_err(serde::de::Error::custom)
    }
}

/// Dense graph on at most [`MAX_K`] vertices. Row `i` of `adj` is a bitmask
/// of the neighbors of vertex `i`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SmallGraph {
    order: u8,
    adj: [u16; MAX_K],
    labels: [u32; MAX_K],
}

impl SmallGraph {
    pub fn new(order: usize) -> Self {
        assert!(order <= MAX_K, "order {order} exceeds {MAX_K}");
        SmallGraph {
            order: order as u8,
            adj: [0; MAX_K],
            labels: [0; MAX_K],
        }
    }

    pub fn from_edges(order: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = SmallGraph::new(order);
        for &(a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        assert!(a != b && a < self.order() && b < self.order());
        self.adj[a] |= 1 << b;
        self.adj[b] |= 1 << a;
    }

    /// Overwrites the adjacency row of `v`; the caller keeps rows symmetric.
    pub(crate) fn set_row(&mut self, v: usize, row: u16) {
        self.adj[v] = row;
    }

    pub fn set_label(&mut self, v: usize, label: u32) {
        self.labels[v] = label;
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order as usize
    }

    #[inline]
    pub fn row(&self, v: usize) -> u16 {
        self.adj[v]
    }

    #[inline]
    pub fn label(&self, v: usize) -> u32 {
        self.labels[v]
    }

    #[inline]
    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a] >> b & 1 == 1
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].count_ones() as usize
    }

    pub fn edge_count(&self) -> usize {
        self.adj[..self.order()]
            .iter()
            .map(|r| r.count_ones() as usize)
            .sum::<usize>()
            / 2
    }

    fn full_mask(&self) -> u16 {
        ((1u32 << self.order) - 1) as u16
    }

    /// Vertices reachable from the lowest vertex of `mask` using only vertices
    /// inside `mask`.
    fn reach(&self, mask: u16) -> u16 {
        if mask == 0 {
            return 0;
        }
        let mut seen = mask & mask.wrapping_neg();
        let mut frontier = seen;
        while frontier != 0 {
            let v = frontier.trailing_zeros() as usize;
            frontier &= frontier - 1;
            let fresh = self.adj[v] & mask & !seen;
            seen |= fresh;
            frontier |= fresh;
        }
        seen
    }

    /// Whether the vertices in `mask` induce a connected subgraph.
    pub fn is_connected_within(&self, mask: u16) -> bool {
        self.reach(mask) == mask
    }

    pub fn is_connected(&self) -> bool {
        self.is_connected_within(self.full_mask())
    }

    /// Cut vertices, as a bitmask. Small orders test each removal directly;
    /// larger ones use a lowpoint DFS.
    pub fn articulation_points(&self) -> Result<u16> {
        if self.order() == 0 || !self.is_connected() {
            return Err(Error::Disconnected);
        }
        if self.order() <= 6 {
            let full = self.full_mask();
            return Ok((0..self.order())
                .filter(|&v| !self.is_connected_within(full & !(1 << v)))
                .fold(0, |cut, v| cut | 1 << v));
        }
        self.articulation_points_dfs()
    }

    fn articulation_points_dfs(&self) -> Result<u16> {
        let mut disc = [u8::MAX; MAX_K];
        let mut low = [0u8; MAX_K];
        let mut parent = [u8::MAX; MAX_K];
        // iterative DFS: (vertex, remaining neighbor mask)
        let mut stack = [(0usize, 0u16); MAX_K];
        let mut depth = 1;
        let mut cut = 0u16;
        let mut time = 0u8;
        let mut root_children = 0;
        disc[0] = 0;
        low[0] = 0;
        time += 1;
        stack[0] = (0, self.adj[0]);
        while depth > 0 {
            let top = &mut stack[depth - 1];
            let v = top.0;
            if top.1 != 0 {
                let w = top.1.trailing_zeros() as usize;
                top.1 &= top.1 - 1;
                if disc[w] == u8::MAX {
                    parent[w] = v as u8;
                    disc[w] = time;
                    low[w] = time;
                    time += 1;
                    if v == 0 {
                        root_children += 1;
                    }
                    stack[depth] = (w, self.adj[w]);
                    depth += 1;
                } else if parent[v] as usize != w {
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                depth -= 1;
                if depth > 0 {
                    let p = stack[depth - 1].0;
                    low[p] = low[p].min(low[v]);
                    if p != 0 && low[v] >= disc[p] {
                        cut |= 1 << p;
                    }
                }
            }
        }
        if root_children > 1 {
            cut |= 1;
        }
        Ok(cut)
    }

    /// Number of higher-order edges that represent this subgraph: the count
    /// of pairs of its connected `order - 1` vertex subsets, `C(order - |cut|, 2)`.
    pub fn gamma(&self) -> Result<u64> {
        if self.order() < 2 {
            return Err(Error::OrderTooSmall(self.order()));
        }
        let free = (self.order() - self.articulation_points()?.count_ones() as usize) as u64;
        Ok(free * (free - 1) / 2)
    }
}

impl fmt::Debug for SmallGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut edges = Vec::new();
        for a in 0..self.order() {
            for b in a + 1..self.order() {
                if self.has_edge(a, b) {
                    edges.push((a, b));
                }
            }
        }
        f.debug_struct("SmallGraph")
            .field("order", &self.order)
            .field("edges", &edges)
            .field("labels", &&self.labels[..self.order()])
            .finish()
    }
}

/// Subgraph of `g` induced by the sorted vertex list `vset`, with vertex `i`
/// of the result standing for `vset[i]`.
pub fn induce(g: &Graph, vset: &[VertexId]) -> SmallGraph {
    let mut sg = SmallGraph::new(vset.len());
    for (i, &u) in vset.iter().enumerate() {
        sg.labels[i] = g.label(u);
        for (j, &v) in vset.iter().enumerate().skip(i + 1) {
            if g.has_edge(u, v) {
                sg.adj[i] |= 1 << j;
                sg.adj[j] |= 1 << i;
            }
        }
    }
    sg
}

/// The `k`-vertex subgraph induced by a pair of adjacent `k - 1` states.
pub fn merge_edge_subgraph(g: &Graph, u: &Cis, v: &Cis) -> Result<SmallGraph> {
    let expected = u.len().saturating_sub(1);
    let found = u.intersection_size(v);
    if u.len() != v.len() || found != expected {
        return Err(Error::Overlap { expected, found });
    }
    let merged = u.union(v)?;
    Ok(induce(g, merged.vertices()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn k3() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)])
    }
    fn p4() -> Graph {
        Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)])
    }
    fn s3() -> Graph {
        Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)])
    }

    /// Cut vertices by deleting each vertex and testing connectivity.
    fn cut_vertices_by_removal(sg: &SmallGraph) -> u16 {
        let full = sg.full_mask();
        (0..sg.order())
            .filter(|&v| !sg.is_connected_within(full & !(1 << v)))
            .fold(0, |m, v| m | 1 << v)
    }

    #[test]
    fn cis_is_sorted_and_rejects_duplicates() {
        let c = Cis::new(&[5, 1, 3]).unwrap();
        assert_eq!(c.vertices(), &[1, 3, 5]);
        assert!(Cis::new(&[1, 1]).is_err());
        assert_eq!(c.replace(3, 0).vertices(), &[0, 1, 5]);
        assert_eq!(c.replace(1, 9).vertices(), &[3, 5, 9]);
        assert_eq!(c.replace(5, 4).vertices(), &[1, 3, 4]);
    }

    #[test]
    fn cis_json_is_a_vertex_list() {
        let c = Cis::new(&[2, 0]).unwrap();
        assert_eq!(serde_json::to_string(&c).unwrap(), "[0,2]");
        let back: Cis = serde_json::from_str("[2,0]").unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn induce_examples() {
        let e = induce(&k3(), &[0, 1]);
        assert_eq!((e.order(), e.edge_count()), (2, 1));
        assert_eq!((e.label(0), e.label(1)), (0, 0));
        let iso = induce(&p4(), &[0, 2]);
        assert_eq!(iso.edge_count(), 0);
        assert!(!iso.is_connected());
        let path = induce(&p4(), &[1, 2, 3]);
        assert_eq!(path.edge_count(), 2);
        assert!(path.has_edge(0, 1) && path.has_edge(1, 2) && !path.has_edge(0, 2));
    }

    #[test]
    fn connectivity() {
        assert!(SmallGraph::from_edges(2, &[(0, 1)]).is_connected());
        assert!(!SmallGraph::new(2).is_connected());
        assert!(SmallGraph::new(1).is_connected());
    }

    #[test]
    fn articulation_examples() {
        let tri = SmallGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(tri.articulation_points().unwrap(), 0);
        let p3 = SmallGraph::from_edges(3, &[(0, 1), (1, 2)]);
        assert_eq!(p3.articulation_points().unwrap(), 0b010);
        let diamond = SmallGraph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]);
        assert_eq!(
            diamond.articulation_points().unwrap(),
            cut_vertices_by_removal(&diamond)
        );
        assert_eq!(diamond.articulation_points().unwrap(), 0);
        assert!(matches!(
            SmallGraph::new(2).articulation_points(),
            Err(Error::Disconnected)
        ));
    }

    #[test]
    fn articulation_matches_removal_on_all_connected_5_graphs() {
        let pairs: Vec<(usize, usize)> = (0..5)
            .flat_map(|a| (a + 1..5).map(move |b| (a, b)))
            .collect();
        for bits in 0u32..1 << pairs.len() {
            let edges: Vec<_> = pairs
                .iter()
                .enumerate()
                .filter(|(i, _)| bits >> i & 1 == 1)
                .map(|(_, &e)| e)
                .collect();
            let sg = SmallGraph::from_edges(5, &edges);
            if sg.is_connected() {
                assert_eq!(
                    sg.articulation_points_dfs().unwrap(),
                    cut_vertices_by_removal(&sg),
                    "{sg:?}"
                );
            }
        }
    }

    proptest! {
        #[test]
        fn lowpoint_dfs_matches_removal(order in 7usize..=12, bits in proptest::collection::vec(0.0f64..1.0, 66), p in 0.1f64..0.6) {
            let mut sg = SmallGraph::new(order);
            let mut i = 0;
            for a in 0..order {
                for b in a + 1..order {
                    // a path keeps the graph connected
                    if b == a + 1 || bits[i] < p {
                        sg.add_edge(a, b);
                    }
                    i += 1;
                }
            }
            prop_assert_eq!(sg.articulation_points().unwrap(), cut_vertices_by_removal(&sg));
        }
    }

    #[test]
    fn gamma_examples() {
        let tri = SmallGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(tri.gamma().unwrap(), 3);
        let p3 = SmallGraph::from_edges(3, &[(0, 1), (1, 2)]);
        assert_eq!(p3.gamma().unwrap(), 1);
        // P4: only {0,1,2} and {1,2,3} are connected 3-subsets, so one HON edge.
        let p4 = SmallGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]);
        assert_eq!(p4.gamma().unwrap(), 1);
        assert!(matches!(
            SmallGraph::new(1).gamma(),
            Err(Error::OrderTooSmall(1))
        ));
    }

    #[test]
    fn merge_examples() {
        let c = |v: &[u32]| Cis::new(v).unwrap();
        let tri = merge_edge_subgraph(&k3(), &c(&[0, 1]), &c(&[0, 2])).unwrap();
        assert_eq!(tri.edge_count(), 3);
        let p3 = merge_edge_subgraph(&p4(), &c(&[0, 1]), &c(&[1, 2])).unwrap();
        assert_eq!((p3.order(), p3.edge_count()), (3, 2));
        let star = merge_edge_subgraph(&s3(), &c(&[0, 1]), &c(&[0, 2])).unwrap();
        assert_eq!(star.edge_count(), 2);
        assert_eq!(star.degree(0), 2);
        assert!(matches!(
            merge_edge_subgraph(&p4(), &c(&[0, 1]), &c(&[2, 3])),
            Err(Error::Overlap {
                expected: 1,
                found: 0
            })
        ));
    }
}
