//! Seed placement and the stratification function over walk states.
//!
//! A state's stratum is `1 + sum over its vertices of (dist + [seed vertex
//! outside the core])`, where `dist` is the hop distance to the nearest seed
//! vertex and the core is the largest connected part of the state lying in a
//! single seed. Seeds are exactly the states of stratum 1.

use std::collections::VecDeque;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cis::{induce, Cis, SmallGraph};
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexId, UNREACHABLE};

/// Seeds beyond this many are placed at random instead of farthest-first.
pub const FARTHEST_POINT_LIMIT: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSet {
    pub seeds: Vec<Cis>,
    #[serde(skip)]
    pub warnings: Vec<String>,
}

impl SeedSet {
    pub fn from_seeds(seeds: Vec<Cis>) -> Self {
        SeedSet {
            seeds,
            warnings: Vec::new(),
        }
    }

    /// Seeds as a JSON list of vertex-id lists.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.seeds)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let seeds: Vec<Cis> = serde_json::from_str(text)?;
        Ok(SeedSet::from_seeds(seeds))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Per-vertex index of the seed containing it; fails on overlapping or
    /// out-of-range seeds.
    pub fn membership(&self, n: usize) -> Result<Vec<Option<u32>>> {
        let mut seed_of = vec![None; n];
        for (i, s) in self.seeds.iter().enumerate() {
            for &v in s.vertices() {
                let slot = seed_of
                    .get_mut(v as usize)
                    .ok_or_else(|| Error::Config(format!("seed vertex {v} out of range")))?;
                if slot.is_some() {
                    return Err(Error::Config(format!("seeds overlap at vertex {v}")));
                }
                *slot = Some(i as u32);
            }
        }
        Ok(seed_of)
    }
}

/// Grows a connected set of `size` unclaimed vertices by BFS from `start`.
fn grow_seed(g: &Graph, start: VertexId, size: usize, claimed: &[bool]) -> Option<Cis> {
    if claimed[start as usize] {
        return None;
    }
    let mut picked = vec![start];
    let mut queue = VecDeque::from([start]);
    let mut seen = std::collections::HashSet::from([start]);
    while picked.len() < size {
        let u = queue.pop_front()?;
        for &v in g.neighbors(u) {
            if picked.len() == size {
                break;
            }
            if !claimed[v as usize] && seen.insert(v) {
                picked.push(v);
                queue.push_back(v);
            }
        }
    }
    picked.sort_unstable();
    Some(Cis::from_sorted(&picked))
}

/// Places up to `n1` pairwise disjoint seed states of `k - 1` vertices: one
/// per component large enough to hold one, then farthest-first from the
/// vertices already claimed.
pub fn select_seeds<R: Rng + ?Sized>(
    g: &Graph,
    n1: usize,
    k: usize,
    rng: &mut R,
) -> Result<SeedSet> {
    if k < 2 {
        return Err(Error::Config(format!("k must be at least 2, got {k}")));
    }
    let size = k - 1;
    let comp = g.connected_components();
    let n_comp = comp.iter().copied().max().map_or(0, |c| c + 1);
    let mut members: Vec<Vec<VertexId>> = vec![Vec::new(); n_comp];
    for (v, &c) in comp.iter().enumerate() {
        members[c].push(v as VertexId);
    }

    let mut claimed = vec![false; g.n()];
    let mut seeds = Vec::new();
    let mut warnings = Vec::new();
    let eligible = members.iter().filter(|m| m.len() >= size).count();
    if eligible > n1 {
        warnings.push(format!(
            "{eligible} components need a seed but n1 = {n1}; seeding every component"
        ));
    }

    let mut skipped = 0;
    for verts in &members {
        if verts.len() < size {
            skipped += 1;
            continue;
        }
        let start = verts[rng.random_range(0..verts.len())];
        let seed = grow_seed(g, start, size, &claimed).expect("component is large enough");
        claim(&mut claimed, &seed);
        seeds.push(seed);
    }

    if skipped > 0 {
        warnings.push(format!(
            "{skipped} components have fewer than {size} vertices and were skipped"
        ));
    }

    while seeds.len() < n1 && seeds.len() < FARTHEST_POINT_LIMIT {
        let sources: Vec<VertexId> = (0..g.n() as VertexId)
            .filter(|&v| claimed[v as usize])
            .collect();
        if sources.is_empty() {
            break;
        }
        let dist = g.multi_source_bfs_dist(&sources)?;
        let mut order: Vec<VertexId> = (0..g.n() as VertexId)
            .filter(|&v| dist[v as usize] != UNREACHABLE && dist[v as usize] > 0)
            .collect();
        order.sort_by_key(|&v| (std::cmp::Reverse(dist[v as usize]), v));
        match order.iter().find_map(|&v| grow_seed(g, v, size, &claimed)) {
            Some(seed) => {
                claim(&mut claimed, &seed);
                seeds.push(seed);
            }
            None => break,
        }
    }

    if seeds.len() < n1 {
        let mut pool: Vec<VertexId> = (0..g.n() as VertexId)
            .filter(|&v| !claimed[v as usize])
            .collect();
        pool.shuffle(rng);
        for v in pool {
            if seeds.len() >= n1 {
                break;
            }
            if let Some(seed) = grow_seed(g, v, size, &claimed) {
                claim(&mut claimed, &seed);
                seeds.push(seed);
            }
        }
    }

    if seeds.len() < n1 {
        warnings.push(format!(
            "only {} disjoint seeds fit, {} requested",
            seeds.len(),
            n1
        ));
    }
    Ok(SeedSet { seeds, warnings })
}

fn claim(claimed: &mut [bool], seed: &Cis) {
    for &v in seed.vertices() {
        claimed[v as usize] = true;
    }
}

/// Distances and seed membership backing the stratum function.
#[derive(Clone, Debug)]
pub struct Stratification {
    dist: Vec<u32>,
    seed_of: Vec<Option<u32>>,
    seeds: Vec<Cis>,
    r_max: u32,
    state_size: usize,
}

impl Stratification {
    pub fn new(g: &Graph, seeds: &SeedSet) -> Result<Self> {
        let seed_of = seeds.membership(g.n())?;
        let mut state_size = None;
        for s in &seeds.seeds {
            if *state_size.get_or_insert(s.len()) != s.len() {
                return Err(Error::Config("seeds differ in size".into()));
            }
            if !crate::cis::induce(g, s.vertices()).is_connected() {
                return Err(Error::Config(format!("seed {s:?} is not connected")));
            }
        }
        let state_size = state_size.unwrap_or(0);
        let sources: Vec<VertexId> = (0..g.n() as VertexId)
            .filter(|&v| seed_of[v as usize].is_some())
            .collect();
        let dist = if sources.is_empty() {
            vec![UNREACHABLE; g.n()]
        } else {
            g.multi_source_bfs_dist(&sources)?
        };
        let max_dist = dist
            .iter()
            .copied()
            .filter(|&d| d != UNREACHABLE)
            .max()
            .unwrap_or(0);
        let r_max = 1 + state_size as u32 * (max_dist + 1);
        Ok(Stratification {
            dist,
            seed_of,
            seeds: seeds.seeds.clone(),
            r_max,
            state_size,
        })
    }

    pub fn dist(&self, v: VertexId) -> u32 {
        self.dist[v as usize]
    }

    pub fn distances(&self) -> &[u32] {
        &self.dist
    }

    pub fn seed_of(&self, v: VertexId) -> Option<u32> {
        self.seed_of[v as usize]
    }

    pub fn seeds(&self) -> &[Cis] {
        &self.seeds
    }

    /// Upper bound on any stratum index, `1 + (k - 1) * (max dist + 1)`.
    pub fn r_max(&self) -> u32 {
        self.r_max
    }

    pub fn state_size(&self) -> usize {
        self.state_size
    }

    /// Largest connected part of `s` inside a single seed; ties go to the
    /// lexicographically smallest vertex list.
    pub fn core(&self, g: &Graph, s: &Cis) -> Vec<VertexId> {
        let mask = self.core_mask(s, &induce(g, s.vertices()));
        s.vertices()
            .iter()
            .enumerate()
            .filter(|&(i, _)| mask >> i & 1 == 1)
            .map(|(_, &v)| v)
            .collect()
    }

    /// [`Stratification::core`] as a mask over positions of `s`, with `small`
    /// the subgraph induced by `s`.
    pub fn core_mask(&self, s: &Cis, small: &SmallGraph) -> u16 {
        // positions grouped by the seed they belong to
        let mut groups = [(0u32, 0u16); crate::cis::MAX_K];
        let mut n_groups = 0;
        for (i, &v) in s.vertices().iter().enumerate() {
            let Some(seed) = self.seed_of(v) else {
                continue;
            };
            match groups[..n_groups].iter_mut().find(|(id, _)| *id == seed) {
                Some((_, mask)) => *mask |= 1 << i,
                None => {
                    groups[n_groups] = (seed, 1 << i);
                    n_groups += 1;
                }
            }
        }
        let mut best = 0u16;
        for &(_, same) in &groups[..n_groups] {
            let mut rest = same;
            while rest != 0 {
                let mut comp = rest & rest.wrapping_neg();
                let mut frontier = comp;
                while frontier != 0 {
                    let a = frontier.trailing_zeros() as usize;
                    frontier &= frontier - 1;
                    let fresh = small.row(a) & same & !comp;
                    comp |= fresh;
                    frontier |= fresh;
                }
                rest &= !comp;
                let (len, best_len) = (comp.count_ones(), best.count_ones());
                // with equal sizes, the list holding the lowest differing position is smaller
                let first_diff = (comp ^ best).trailing_zeros();
                if len > best_len
                    || (len == best_len && comp != best && comp >> first_diff & 1 == 1)
                {
                    best = comp;
                }
            }
        }
        best
    }

    /// Stratum of a walk state; saturates at `u32::MAX` for states no seed
    /// can reach.
    pub fn rho(&self, g: &Graph, s: &Cis) -> u32 {
        self.rho_with(s, || induce(g, s.vertices()))
    }

    /// [`Stratification::rho`] given the subgraph induced by `s`.
    pub fn rho_small(&self, s: &Cis, small: &SmallGraph) -> u32 {
        self.rho_with(s, || *small)
    }

    fn rho_with(&self, s: &Cis, small: impl FnOnce() -> SmallGraph) -> u32 {
        let mut total: u64 = 1;
        let mut in_seed = 0u64;
        for &v in s.vertices() {
            let d = self.dist(v);
            if d == UNREACHABLE {
                return u32::MAX;
            }
            total += d as u64;
            if self.seed_of(v).is_some() {
                in_seed += 1;
            }
        }
        // a single seeded vertex is its own core
        if in_seed > 1 {
            total += in_seed - self.core_mask(s, &small()).count_ones() as u64;
        }
        total.min(u32::MAX as u64) as u32
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StratumCheck {
    pub r: u32,
    pub states: usize,
    /// Edges with both ends at stratum `>= r` and one end at `r`.
    pub edges: usize,
    pub supernode_degree: usize,
    /// States of later strata adjacent to this one.
    pub frontier: usize,
    pub connected: bool,
    /// Every state of the stratum has a neighbor in an earlier stratum.
    pub all_step_down: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EpsViolation {
    /// A component of the input graph has states but none in stratum 1.
    UnseededComponent {
        component: usize,
        example: Cis,
    },
    /// A state no seed can reach.
    Unreachable {
        state: Cis,
    },
    /// A non-seed state with no neighbor at its own stratum or below.
    NoLowerOrEqualNeighbor {
        state: Cis,
        rho: u32,
    },
    /// A state with no neighbor in a strictly earlier stratum.
    NoStepDown {
        state: Cis,
        rho: u32,
    },
    DisconnectedStratum {
        r: u32,
    },
    NoEdgeToEarlier {
        r: u32,
    },
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct EpsReport {
    pub state_count: usize,
    pub strata: Vec<StratumCheck>,
    pub violations: Vec<EpsViolation>,
}

impl EpsReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Builds every graph stratum explicitly and checks that the stratification
/// keeps each per-stratum walk irreducible. Exhaustive, so only for graphs
/// whose `k - 1` states can be enumerated within `cap`.
pub fn validate_eps(g: &Graph, strat: &Stratification, k: usize, cap: usize) -> Result<EpsReport> {
    if !strat.seeds().is_empty() && strat.state_size() != k - 1 {
        return Err(Error::Config(format!(
            "seeds have {} vertices, expected {}",
            strat.state_size(),
            k - 1
        )));
    }
    let hon = crate::oracle::build_hon(g, k - 1, cap)?;
    let rho: Vec<u32> = hon.states.iter().map(|s| strat.rho(g, s)).collect();
    let mut report = EpsReport {
        state_count: hon.states.len(),
        ..Default::default()
    };

    let comp = g.connected_components();
    let mut seeded = std::collections::BTreeMap::<usize, (bool, Cis)>::new();
    for (i, s) in hon.states.iter().enumerate() {
        let entry = seeded
            .entry(comp[s.vertices()[0] as usize])
            .or_insert((false, *s));
        entry.0 |= rho[i] == 1;
    }
    for (component, (ok, example)) in seeded {
        if !ok {
            report
                .violations
                .push(EpsViolation::UnseededComponent { component, example });
        }
    }

    for (i, s) in hon.states.iter().enumerate() {
        let r = rho[i];
        if r == u32::MAX {
            report
                .violations
                .push(EpsViolation::Unreachable { state: *s });
            continue;
        }
        if r == 1 {
            continue;
        }
        let lowest = hon
            .graph
            .neighbors(i as u32)
            .iter()
            .map(|&j| rho[j as usize])
            .min()
            .unwrap_or(u32::MAX);
        if lowest > r {
            report
                .violations
                .push(EpsViolation::NoLowerOrEqualNeighbor { state: *s, rho: r });
        }
        if lowest >= r {
            report
                .violations
                .push(EpsViolation::NoStepDown { state: *s, rho: r });
        }
    }

    let mut by_stratum = std::collections::BTreeMap::<u32, Vec<u32>>::new();
    for (i, &r) in rho.iter().enumerate() {
        if r > 1 && r != u32::MAX {
            by_stratum.entry(r).or_default().push(i as u32);
        }
    }
    for (&r, members) in &by_stratum {
        // node 0 is the supernode; the rest are HON ids mapped on demand
        let mut node_of = std::collections::HashMap::<u32, usize>::new();
        let mut parent = vec![0usize];
        let mut node = |id: u32, parent: &mut Vec<usize>| {
            *node_of.entry(id).or_insert_with(|| {
                parent.push(parent.len());
                parent.len() - 1
            })
        };
        let mut check = StratumCheck {
            r,
            states: members.len(),
            edges: 0,
            supernode_degree: 0,
            frontier: 0,
            connected: true,
            all_step_down: true,
        };
        let mut frontier = std::collections::HashSet::new();
        for &s in members {
            let a = node(s, &mut parent);
            let mut steps_down = false;
            for &t in hon.graph.neighbors(s) {
                let rt = rho[t as usize];
                if rt < r {
                    check.supernode_degree += 1;
                    steps_down = true;
                    union(&mut parent, a, 0);
                } else {
                    if rt > r {
                        frontier.insert(t);
                        check.edges += 1;
                    } else if s < t {
                        check.edges += 1;
                    }
                    let b = node(t, &mut parent);
                    union(&mut parent, a, b);
                }
            }
            check.all_step_down &= steps_down;
        }
        check.frontier = frontier.len();
        let root = find(&mut parent, 0);
        check.connected = (0..parent.len()).all(|x| find(&mut parent, x) == root);
        if !check.connected {
            report
                .violations
                .push(EpsViolation::DisconnectedStratum { r });
        }
        if check.supernode_degree == 0 {
            report.violations.push(EpsViolation::NoEdgeToEarlier { r });
        }
        report.strata.push(check);
    }
    Ok(report)
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        parent[ra.max(rb)] = ra.min(rb);
    }
}
