//! Immutable simple graphs in compressed adjacency form.
//!
//! Edge lists follow the SNAP convention: one whitespace separated `u v` pair
//! per line, with `#` and `%` lines treated as comments. Vertex ids in the
//! file may be sparse; they are remapped densely, in ascending order, to
//! `0..n`.

use std::collections::{BTreeSet, VecDeque};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub type VertexId = u32;

/// Distance value for vertices that no source can reach.
pub const UNREACHABLE: u32 = u32::MAX;

/// Graphs up to this many vertices also keep an adjacency bit matrix.
pub const DENSE_LIMIT: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<VertexId>,
    labels: Vec<u32>,
    original_ids: Vec<u64>,
    dense: Option<Vec<u64>>,
}

impl Graph {
    /// Builds a graph on `n` vertices from an undirected edge list. Self-loops
    /// and duplicates are dropped and every edge is symmetrized.
    pub fn from_edges(n: usize, edges: &[(VertexId, VertexId)]) -> Self {
        let mut lists: Vec<Vec<VertexId>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            assert!(
                (u as usize) < n && (v as usize) < n,
                "edge ({u}, {v}) out of range"
            );
            if u != v {
                lists[u as usize].push(v);
                lists[v as usize].push(u);
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for list in &mut lists {
            list.sort_unstable();
            list.dedup();
            targets.extend_from_slice(list);
            offsets.push(targets.len());
        }
        let dense = (n <= DENSE_LIMIT).then(|| {
            let words = n.div_ceil(64);
            let mut bits = vec![0u64; n * words];
            for u in 0..n {
                for &v in &targets[offsets[u]..offsets[u + 1]] {
                    bits[u * words + v as usize / 64] |= 1 << (v % 64);
                }
            }
            bits
        });
        Graph {
            offsets,
            targets,
            labels: vec![0; n],
            original_ids: (0..n as u64).collect(),
            dense,
        }
    }

    pub fn with_labels(mut self, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::LabelCount {
                expected: self.n(),
                found: labels.len(),
            });
        }
        self.labels = labels;
        Ok(self)
    }

    /// Reads a SNAP style edge list, with an optional label file holding one
    /// integer per line for each remapped vertex.
    pub fn load_edge_list(path: impl AsRef<Path>, labels_path: Option<&Path>) -> Result<Self> {
        let graph = Self::read_edge_list(BufReader::new(File::open(path)?))?;
        match labels_path {
            Some(p) => {
                let labels = read_labels(BufReader::new(File::open(p)?))?;
                graph.with_labels(labels)
            }
            None => Ok(graph),
        }
    }

    pub fn read_edge_list(reader: impl BufRead) -> Result<Self> {
        let mut raw = Vec::new();
        let mut ids = BTreeSet::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
                continue;
            }
            let mut tokens = trimmed.split_whitespace();
            let mut next = || -> Result<u64> {
                let tok = tokens.next().ok_or_else(|| Error::Parse {
                    line: idx + 1,
                    message: "expected two vertex ids".into(),
                })?;
                tok.parse::<u64>().map_err(|e| Error::Parse {
                    line: idx + 1,
                    message: format!("bad vertex id {tok:?}: {e}"),
                })
            };
            let u = next()?;
            let v = next()?;
            ids.insert(u);
            ids.insert(v);
            raw.push((u, v));
        }
        let original_ids: Vec<u64> = ids.into_iter().collect();
        if original_ids.len() > VertexId::MAX as usize {
            return Err(Error::CapExceeded {
                what: "vertex count",
                cap: VertexId::MAX as usize,
            });
        }
        let dense =
            |id: u64| original_ids.binary_search(&id).expect("id was collected") as VertexId;
        let edges: Vec<_> = raw.iter().map(|&(u, v)| (dense(u), dense(v))).collect();
        let mut graph = Graph::from_edges(original_ids.len(), &edges);
        graph.original_ids = original_ids;
        Ok(graph)
    }

    /// Writes the graph back out as an edge list over dense ids. Isolated
    /// vertices are written as self-loops so that they survive a reload.
    pub fn write_edge_list(&self, writer: impl Write) -> Result<()> {
        let mut w = BufWriter::new(writer);
        for u in 0..self.n() as VertexId {
            if self.degree(u) == 0 {
                writeln!(w, "{u} {u}")?;
            }
            for &v in self.neighbors(u) {
                if u < v {
                    writeln!(w, "{u} {v}")?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, u: VertexId) -> &[VertexId] {
        let u = u as usize;
        &self.targets[self.offsets[u]..self.offsets[u + 1]]
    }

    #[inline]
    pub fn degree(&self, u: VertexId) -> usize {
        let u = u as usize;
        self.offsets[u + 1] - self.offsets[u]
    }

    #[inline]
    pub fn label(&self, u: VertexId) -> u32 {
        self.labels[u as usize]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn is_labeled(&self) -> bool {
        self.labels.iter().any(|&l| l != 0)
    }

    /// Id of `u` in the file the graph was read from.
    pub fn original_id(&self, u: VertexId) -> u64 {
        self.original_ids[u as usize]
    }

    #[inline]
    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        if let Some(bits) = &self.dense {
            let words = self.n().div_ceil(64);
            return bits[u as usize * words + v as usize / 64] >> (v % 64) & 1 == 1;
        }
        let (a, b) = if self.degree(u) <= self.degree(v) {
            (u, v)
        } else {
            (v, u)
        };
        self.neighbors(a).binary_search(&b).is_ok()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n() as VertexId)
            .map(|u| self.degree(u))
            .max()
            .unwrap_or(0)
    }

    /// Hop distance from every vertex to the nearest source.
    pub fn multi_source_bfs_dist(&self, sources: &[VertexId]) -> Result<Vec<u32>> {
        if sources.is_empty() {
            return Err(Error::EmptySources);
        }
        let mut dist = vec![UNREACHABLE; self.n()];
        let mut queue = VecDeque::new();
        for &s in sources {
            if dist[s as usize] != 0 {
                dist[s as usize] = 0;
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            let next = dist[u as usize] + 1;
            for &v in self.neighbors(u) {
                if dist[v as usize] == UNREACHABLE {
                    dist[v as usize] = next;
                    queue.push_back(v);
                }
            }
        }
        Ok(dist)
    }

    /// Component id per vertex, numbered in order of the smallest member.
    pub fn connected_components(&self) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.n()];
        let mut next = 0;
        let mut stack = Vec::new();
        for root in 0..self.n() {
            if comp[root] != usize::MAX {
                continue;
            }
            comp[root] = next;
            stack.push(root as VertexId);
            while let Some(u) = stack.pop() {
                for &v in self.neighbors(u) {
                    if comp[v as usize] == usize::MAX {
                        comp[v as usize] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }
}

fn read_labels(reader: impl BufRead) -> Result<Vec<u32>> {
    let mut labels = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let label = trimmed.parse::<u32>().map_err(|e| Error::Parse {
            line: idx + 1,
            message: format!("bad label {trimmed:?}: {e}"),
        })?;
        labels.push(label);
    }
    Ok(labels)
}
