//! Fixed-capacity uniform samples (Algorithm R) that tolerate concurrent
//! insertion, and the upper-triangular matrix of them indexed by
//! (source stratum, target stratum).
//!
//! Each offer takes a ticket from an atomic counter. Ticket `n` lands in
//! slot `n - 1` while the reservoir fills, afterwards in a uniform slot
//! `j < n` if `j < M`. When two writers race for one slot the larger ticket
//! wins, which is the order a sequential Algorithm R would have applied.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Mutex, OnceLock};

use rand::Rng;
use serde::Serialize;

use crate::cis::Cis;
use crate::error::{Error, Result};

const CHUNK: usize = 1024;

#[derive(Default)]
struct Slot {
    ticket: u64,
    item: Option<Cis>,
}

type Chunk = Box<[Mutex<Slot>]>;

pub struct Reservoir {
    capacity: usize,
    seen: AtomicU64,
    chunks: Box<[OnceLock<Chunk>]>,
}

impl Reservoir {
    pub fn new(capacity: usize) -> Self {
        let n_chunks = capacity.div_ceil(CHUNK);
        Reservoir {
            capacity,
            seen: AtomicU64::new(0),
            chunks: (0..n_chunks).map(|_| OnceLock::new()).collect(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn seen(&self) -> u64 {
        self.seen.load(Ordering::Acquire)
    }

    /// Number of retained items, `min(seen, M)`.
    pub fn len(&self) -> usize {
        (self.seen() as usize).min(self.capacity)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn slot(&self, idx: usize) -> &Mutex<Slot> {
        let chunk = self.chunks[idx / CHUNK].get_or_init(|| {
            let len = CHUNK.min(self.capacity - idx / CHUNK * CHUNK);
            (0..len).map(|_| Mutex::new(Slot::default())).collect()
        });
        &chunk[idx % CHUNK]
    }

    pub fn offer<R: Rng + ?Sized>(&self, item: Cis, rng: &mut R) {
        let ticket = self.seen.fetch_add(1, Ordering::AcqRel) + 1;
        if self.capacity == 0 {
            return;
        }
        let idx = if ticket as usize <= self.capacity {
            ticket as usize - 1
        } else {
            let j = rng.random_range(0..ticket);
            if j as usize >= self.capacity {
                return;
            }
            j as usize
        };
        let mut slot = self.slot(idx).lock().expect("reservoir slot poisoned");
        if ticket > slot.ticket {
            slot.ticket = ticket;
            slot.item = Some(item);
        }
    }

    /// Uniform draw from the retained items. Must not race with offers.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Cis> {
        let len = self.len();
        if len == 0 {
            return Err(Error::EmptyReservoir);
        }
        let idx = rng.random_range(0..len);
        let slot = self.slot(idx).lock().expect("reservoir slot poisoned");
        slot.item.ok_or(Error::EmptyReservoir)
    }

    pub fn items(&self) -> Vec<Cis> {
        (0..self.len())
            .filter_map(|i| self.slot(i).lock().expect("reservoir slot poisoned").item)
            .collect()
    }
}

impl std::fmt::Debug for Reservoir {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Reservoir")
            .field("capacity", &self.capacity)
            .field("seen", &self.seen())
            .finish()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellDiagnostics {
    pub from: u32,
    pub to: u32,
    pub seen: u64,
    pub retained: usize,
    pub capacity: usize,
    pub beta: f64,
}

/// Reservoirs and crossing estimates for every stratum pair `q < t`, with
/// strata numbered from 1.
pub struct ReservoirMatrix {
    r_max: u32,
    capacity: usize,
    cells: Vec<OnceLock<Reservoir>>,
    beta: Vec<f64>,
}

impl ReservoirMatrix {
    pub fn new(r_max: u32, capacity: usize) -> Self {
        let n = (r_max as usize) * (r_max as usize);
        ReservoirMatrix {
            r_max,
            capacity,
            cells: (0..n).map(|_| OnceLock::new()).collect(),
            beta: vec![0.0; n],
        }
    }

    pub fn r_max(&self) -> u32 {
        self.r_max
    }

    fn index(&self, q: u32, t: u32) -> usize {
        assert!(
            1 <= q && q < t && t <= self.r_max,
            "cell ({q}, {t}) outside 1 <= q < t <= {}",
            self.r_max
        );
        (q as usize - 1) * self.r_max as usize + (t as usize - 1)
    }

    pub fn cell(&self, q: u32, t: u32) -> &Reservoir {
        self.cells[self.index(q, t)].get_or_init(|| Reservoir::new(self.capacity))
    }

    /// Cell `(q, t)` only if something was offered to it.
    pub fn cell_if_used(&self, q: u32, t: u32) -> Option<&Reservoir> {
        self.cells[self.index(q, t)].get().filter(|r| r.seen() > 0)
    }

    pub fn offer<R: Rng + ?Sized>(&self, q: u32, t: u32, item: Cis, rng: &mut R) {
        self.cell(q, t).offer(item, rng);
    }

    pub fn beta(&self, q: u32, t: u32) -> f64 {
        self.beta[self.index(q, t)]
    }

    pub fn set_beta(&mut self, q: u32, t: u32, value: f64) {
        let i = self.index(q, t);
        self.beta[i] = value;
    }

    pub fn add_beta(&mut self, q: u32, t: u32, value: f64) {
        let i = self.index(q, t);
        self.beta[i] += value;
    }

    /// Estimated supernode degree of stratum `t`: the sum of column `t`.
    pub fn inbound(&self, t: u32) -> f64 {
        (1..t).map(|q| self.beta(q, t)).sum()
    }

    pub fn diagnostics(&self) -> Vec<CellDiagnostics> {
        let mut out = Vec::new();
        for q in 1..=self.r_max {
            for t in q + 1..=self.r_max {
                if let Some(cell) = self.cell_if_used(q, t) {
                    out.push(CellDiagnostics {
                        from: q,
                        to: t,
                        seen: cell.seen(),
                        retained: cell.len(),
                        capacity: cell.capacity(),
                        beta: self.beta(q, t),
                    });
                }
            }
        }
        out
    }
}
