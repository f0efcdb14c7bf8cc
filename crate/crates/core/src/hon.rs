//! The higher-order network over connected induced subgraphs: two states of
//! size `m` are adjacent when they share `m - 1` vertices and their union is
//! connected.

use rand::Rng;

use crate::cis::{induce, Cis, SmallGraph, MAX_K};
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId};

/// Proposal budget for one neighbor draw from a state of size `m`.
pub fn default_attempt_cap(m: usize) -> usize {
    10_000 * m * m
}

/// A state with the data the neighbor sampler reuses across draws.
#[derive(Clone, Debug)]
pub struct StateView {
    cis: Cis,
    small: SmallGraph,
    cut: u16,
    degrees: [u64; MAX_K],
    degree_sum: u64,
}

/// One accepted move `s -> s - removed + added`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Move {
    pub next: Cis,
    pub removed: VertexId,
    pub added: VertexId,
    /// Adjacency of `added` to the positions of the current state.
    pub added_mask: u16,
}

impl StateView {
    pub fn new(g: &Graph, s: &Cis) -> Result<Self> {
        let small = induce(g, s.vertices());
        let cut = small.articulation_points()?;
        let mut degrees = [0u64; MAX_K];
        for (i, &u) in s.vertices().iter().enumerate() {
            degrees[i] = g.degree(u) as u64;
        }
        let degree_sum = degrees.iter().sum();
        Ok(StateView {
            cis: *s,
            small,
            cut,
            degrees,
            degree_sum,
        })
    }

    /// The view of `mv.next`, built from this one without touching the
    /// adjacency of `g` again.
    pub fn after(&self, g: &Graph, mv: &Move) -> Result<Self> {
        let old = self.cis.vertices();
        let m = old.len();
        let out = old
            .iter()
            .position(|&x| x == mv.removed)
            .expect("removed vertex belongs to the state");
        let at = mv
            .next
            .vertices()
            .iter()
            .position(|&x| x == mv.added)
            .expect("added vertex belongs to the move");
        // old position mask -> new position mask: drop `out`, open a gap at `at`
        let relabel = |x: u16| {
            let x = (x & ((1 << out) - 1)) | ((x >> (out + 1)) << out);
            (x & ((1 << at) - 1)) | ((x >> at) << (at + 1))
        };
        let mut small = SmallGraph::new(m);
        let mut degrees = [0u64; MAX_K];
        let added_row = relabel(mv.added_mask);
        for i in (0..m).filter(|&i| i != out) {
            let j = relabel(1 << i).trailing_zeros() as usize;
            let mut row = relabel(self.small.row(i));
            if mv.added_mask >> i & 1 == 1 {
                row |= 1 << at;
            }
            small.set_row(j, row);
            small.set_label(j, self.small.label(i));
            degrees[j] = self.degrees[i];
        }
        small.set_row(at, added_row);
        small.set_label(at, g.label(mv.added));
        degrees[at] = g.degree(mv.added) as u64;
        let cut = small.articulation_points()?;
        let degree_sum = degrees.iter().sum();
        Ok(StateView {
            cis: mv.next,
            small,
            cut,
            degrees,
            degree_sum,
        })
    }

    pub fn cis(&self) -> &Cis {
        &self.cis
    }

    pub fn small(&self) -> &SmallGraph {
        &self.small
    }

    /// Articulation points, as a mask over positions in the state.
    pub fn cut_mask(&self) -> u16 {
        self.cut
    }

    fn adjacency_mask(&self, g: &Graph, v: VertexId) -> u16 {
        let mut mask = 0u16;
        for (i, &x) in self.cis.vertices().iter().enumerate() {
            if g.has_edge(v, x) {
                mask |= 1 << i;
            }
        }
        mask
    }

    /// Whether dropping position `out` and adding a vertex adjacent to the
    /// positions in `mask` leaves a connected set.
    fn stays_connected(&self, out: usize, mask: u16) -> bool {
        let m = self.cis.len();
        let mut rest = (((1u32 << m) - 1) as u16) & !(1 << out);
        let mask = mask & rest;
        // every component of the remainder must touch the new vertex
        while rest != 0 {
            let seed = rest & rest.wrapping_neg();
            let mut comp = seed;
            let mut frontier = seed;
            while frontier != 0 {
                let v = frontier.trailing_zeros() as usize;
                frontier &= frontier - 1;
                let fresh = self.small.row(v) & rest & !comp;
                comp |= fresh;
                frontier |= fresh;
            }
            if comp & mask == 0 {
                return false;
            }
            rest &= !comp;
        }
        true
    }

    /// All HON neighbors, in ascending order.
    pub fn neighbors(&self, g: &Graph) -> Vec<Cis> {
        let verts = self.cis.vertices();
        let mut candidates: Vec<VertexId> = verts
            .iter()
            .flat_map(|&x| g.neighbors(x).iter().copied())
            .filter(|&v| !self.cis.contains(v))
            .collect();
        candidates.sort_unstable();
        candidates.dedup();
        let mut out = Vec::new();
        for &v in &candidates {
            let mask = self.adjacency_mask(g, v);
            for (pos, &u) in verts.iter().enumerate() {
                if mask & !(1 << pos) == 0 {
                    continue;
                }
                if self.cut >> pos & 1 == 0 || self.stays_connected(pos, mask) {
                    out.push(self.cis.replace(u, v));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Uniform draw from the HON neighborhood by rejection: remove `u` with
    /// weight `deg_s - deg(u)`, pick an anchor `a != u` with weight
    /// `deg(a)`, add a uniform neighbor `v` of `a`, then accept with
    /// probability `1 / |N(v) ∩ (s - u)|` when the swap yields a connected
    /// set of the same size.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        g: &Graph,
        rng: &mut R,
        max_attempts: usize,
    ) -> Result<Move> {
        let verts = self.cis.vertices();
        let m = verts.len();
        if m < 2 || self.degree_sum == 0 {
            return Err(Error::AttemptBudget(0));
        }
        let remove_total = (m as u64 - 1) * self.degree_sum;
        for _ in 0..max_attempts {
            let mut x = rng.random_range(0..remove_total);
            let mut out = 0;
            while x >= self.degree_sum - self.degrees[out] {
                x -= self.degree_sum - self.degrees[out];
                out += 1;
            }
            let anchor_total = self.degree_sum - self.degrees[out];
            if anchor_total == 0 {
                continue;
            }
            let mut y = rng.random_range(0..anchor_total);
            let mut anchor = 0;
            loop {
                if anchor != out {
                    if y < self.degrees[anchor] {
                        break;
                    }
                    y -= self.degrees[anchor];
                }
                anchor += 1;
            }
            let around = g.neighbors(verts[anchor]);
            let v = around[rng.random_range(0..around.len())];
            let mask = self.adjacency_mask(g, v);
            let bias = (mask & !(1 << out)).count_ones();
            debug_assert!(bias >= 1);
            if rng.random_range(0..bias) != 0 {
                continue;
            }
            if self.cis.contains(v) {
                continue;
            }
            if self.cut >> out & 1 == 1 && !self.stays_connected(out, mask) {
                continue;
            }
            return Ok(Move {
                next: self.cis.replace(verts[out], v),
                removed: verts[out],
                added: v,
                added_mask: mask,
            });
        }
        Err(Error::AttemptBudget(max_attempts))
    }

    /// The `m + 1` vertex subgraph spanned by this state and a move out of
    /// it: positions `0..m` are the state's vertices, position `m` is the
    /// added vertex.
    pub fn merged(&self, g: &Graph, mv: &Move) -> SmallGraph {
        let m = self.cis.len();
        let mut sg = SmallGraph::new(m + 1);
        for a in 0..m {
            sg.set_label(a, self.small.label(a));
            let mut row = self.small.row(a);
            while row != 0 {
                let b = row.trailing_zeros() as usize;
                row &= row - 1;
                if a < b {
                    sg.add_edge(a, b);
                }
            }
        }
        sg.set_label(m, g.label(mv.added));
        let mut mask = mv.added_mask;
        while mask != 0 {
            let b = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            sg.add_edge(m, b);
        }
        sg
    }
}

/// Exact HON neighborhood of `s`.
pub fn hon_neighbors(g: &Graph, s: &Cis) -> Result<Vec<Cis>> {
    Ok(StateView::new(g, s)?.neighbors(g))
}

/// One uniform draw from the HON neighborhood of `s`, with the default
/// proposal budget.
pub fn sample_hon_neighbor<R: Rng + ?Sized>(g: &Graph, s: &Cis, rng: &mut R) -> Result<Cis> {
    let view = StateView::new(g, s)?;
    Ok(view.sample(g, rng, default_attempt_cap(s.len()))?.next)
}
