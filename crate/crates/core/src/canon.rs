//! Canonical keys for isomorphism classes of small labeled graphs.
//!
//! A key is the lexicographically smallest row encoding over all vertex
//! orders that respect a color refinement of the graph (label, degree, then
//! iterated neighbor color multisets). Row `i` of an encoding is the label of
//! the `i`-th vertex followed by its adjacency to the vertices placed before
//! it, so prefixes can be compared while the order is still being built.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cis::{SmallGraph, MAX_K};
use crate::error::{Error, Result};

const ROW_BYTES: usize = 6;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PatternKey(Vec<u8>);

/// Canonical key of `sg`, refusing graphs larger than `max_order`.
pub fn pattern_key(sg: &SmallGraph, max_order: usize) -> Result<PatternKey> {
    let max = max_order.min(MAX_K);
    if sg.order() > max {
        return Err(Error::OrderTooLarge {
            order: sg.order(),
            max,
        });
    }
    Ok(PatternKey::canonical(sg))
}

impl PatternKey {
    pub fn canonical(sg: &SmallGraph) -> Self {
        let n = sg.order();
        let colors = refine(sg);
        // Positions are handed out cell by cell in ascending color order.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&v| colors[v]);
        let cell_of_position: Vec<u32> = order.iter().map(|&v| colors[v]).collect();

        let mut search = Search {
            sg,
            colors: &colors,
            cell_of_position: &cell_of_position,
            perm: Vec::with_capacity(n),
            used: 0,
            rows: Vec::with_capacity(n),
            best: Vec::new(),
        };
        search.descend();

        let mut bytes = Vec::with_capacity(1 + n * ROW_BYTES);
        bytes.push(n as u8);
        for &(label, mask) in &search.best {
            bytes.extend_from_slice(&label.to_be_bytes());
            bytes.extend_from_slice(&mask.to_be_bytes());
        }
        PatternKey(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let bytes = hex::decode(s).map_err(|e| Error::Config(format!("bad pattern hex: {e}")))?;
        let valid = !bytes.is_empty()
            && (bytes[0] as usize) <= MAX_K
            && bytes.len() == 1 + bytes[0] as usize * ROW_BYTES;
        if !valid {
            return Err(Error::Config(format!("malformed pattern key {s:?}")));
        }
        Ok(PatternKey(bytes))
    }

    pub fn order(&self) -> usize {
        self.0[0] as usize
    }

    /// The canonical representative graph of this class.
    pub fn to_graph(&self) -> SmallGraph {
        let n = self.order();
        let mut sg = SmallGraph::new(n);
        for i in 0..n {
            let row = &self.0[1 + i * ROW_BYTES..1 + (i + 1) * ROW_BYTES];
            sg.set_label(i, u32::from_be_bytes([row[0], row[1], row[2], row[3]]));
            let mask = u16::from_be_bytes([row[4], row[5]]);
            for j in 0..i {
                if mask >> j & 1 == 1 {
                    sg.add_edge(i, j);
                }
            }
        }
        sg
    }

    pub fn edge_count(&self) -> usize {
        (0..self.order())
            .map(|i| {
                let at = 1 + i * ROW_BYTES + 4;
                u16::from_be_bytes([self.0[at], self.0[at + 1]]).count_ones() as usize
            })
            .sum()
    }

    pub fn density(&self) -> f64 {
        let n = self.order();
        if n < 2 {
            return 0.0;
        }
        self.edge_count() as f64 / (n * (n - 1) / 2) as f64
    }

    /// A tree with one vertex adjacent to all the others.
    pub fn is_star(&self) -> bool {
        let n = self.order();
        if n < 2 || self.edge_count() != n - 1 {
            return false;
        }
        let sg = self.to_graph();
        (0..n).any(|v| sg.degree(v) == n - 1)
    }

    pub fn density_bucket(&self) -> DensityBucket {
        DensityBucket::of(self.density())
    }
}

impl fmt::Debug for PatternKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PatternKey({})", self.to_hex())
    }
}

impl fmt::Display for PatternKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for PatternKey {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for PatternKey {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        PatternKey::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Coarse density classes; `Sparse` is density in `(0, 0.25]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityBucket {
    Empty,
    Sparse,
    Moderate,
    Dense,
    NearComplete,
}

impl DensityBucket {
    pub fn of(density: f64) -> Self {
        match density {
            d if d <= 0.0 => DensityBucket::Empty,
            d if d <= 0.25 => DensityBucket::Sparse,
            d if d <= 0.5 => DensityBucket::Moderate,
            d if d <= 0.75 => DensityBucket::Dense,
            _ => DensityBucket::NearComplete,
        }
    }
}

/// Accumulated estimates keyed by pattern.
pub type CountVector = std::collections::BTreeMap<PatternKey, f64>;

/// Memo from raw induced subgraphs to a dense pattern index and `1 / gamma`.
/// Indices are assigned in first-seen order.
#[derive(Default)]
pub struct PatternCache {
    memo: rustc_hash::FxHashMap<SmallGraph, (u32, f64)>,
    keys: Vec<PatternKey>,
}

impl PatternCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn lookup(&mut self, sg: &SmallGraph) -> Result<(u32, f64)> {
        if let Some(&hit) = self.memo.get(sg) {
            return Ok(hit);
        }
        let key = PatternKey::canonical(sg);
        let idx = match self.keys.iter().position(|k| *k == key) {
            Some(i) => i as u32,
            None => {
                self.keys.push(key);
                self.keys.len() as u32 - 1
            }
        };
        let entry = (idx, 1.0 / sg.gamma()? as f64);
        self.memo.insert(*sg, entry);
        Ok(entry)
    }

    pub fn key(&self, idx: u32) -> &PatternKey {
        &self.keys[idx as usize]
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Adds a dense per-index vector into a keyed count vector.
    pub fn fold_into(&self, dense: &[f64], scale: f64, out: &mut CountVector) {
        for (i, &v) in dense.iter().enumerate() {
            if v != 0.0 {
                *out.entry(self.keys[i].clone()).or_insert(0.0) += v * scale;
            }
        }
    }
}

/// Stable coloring from iterated neighbor-multiset refinement. Colors are
/// ranks of isomorphism-invariant signatures, so they are canonical.
fn refine(sg: &SmallGraph) -> Vec<u32> {
    let n = sg.order();
    let initial: Vec<(u32, usize)> = (0..n).map(|v| (sg.label(v), sg.degree(v))).collect();
    let mut colors = rank(&initial);
    loop {
        let signatures: Vec<(u32, Vec<u32>)> = (0..n)
            .map(|v| {
                let mut around: Vec<u32> = (0..n)
                    .filter(|&w| sg.has_edge(v, w))
                    .map(|w| colors[w])
                    .collect();
                around.sort_unstable();
                (colors[v], around)
            })
            .collect();
        let next = rank(&signatures);
        let before = distinct(&colors);
        colors = next;
        if distinct(&colors) == before {
            return colors;
        }
    }
}

fn rank<T: Ord + Clone>(items: &[T]) -> Vec<u32> {
    let mut sorted: Vec<T> = items.to_vec();
    sorted.sort();
    sorted.dedup();
    items
        .iter()
        .map(|x| sorted.binary_search(x).expect("present") as u32)
        .collect()
}

fn distinct(colors: &[u32]) -> usize {
    let mut c = colors.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

struct Search<'a> {
    sg: &'a SmallGraph,
    colors: &'a [u32],
    cell_of_position: &'a [u32],
    perm: Vec<usize>,
    used: u16,
    rows: Vec<(u32, u16)>,
    best: Vec<(u32, u16)>,
}

impl Search<'_> {
    fn descend(&mut self) {
        let depth = self.perm.len();
        let n = self.sg.order();
        if depth == n {
            if self.best.is_empty() || self.rows < self.best {
                self.best.clone_from(&self.rows);
            }
            return;
        }
        let cell = self.cell_of_position[depth];
        for v in 0..n {
            if self.used >> v & 1 == 1 || self.colors[v] != cell {
                continue;
            }
            let mut mask = 0u16;
            for (j, &w) in self.perm.iter().enumerate() {
                if self.sg.has_edge(v, w) {
                    mask |= 1 << j;
                }
            }
            let row = (self.sg.label(v), mask);
            self.rows.push(row);
            // a prefix already above the best encoding cannot lead to a smaller one
            if !self.best.is_empty() && self.rows[..] > self.best[..=depth] {
                self.rows.pop();
                continue;
            }
            self.rows.pop();
            self.perm.push(v);
            self.used |= 1 << v;
            self.rows.push(row);
            self.descend();
            self.rows.pop();
            self.used &= !(1 << v);
            self.perm.pop();
        }
    }
}
