//! Stratified regenerative estimation of connected induced subgraph counts.
//!
//! The pipeline runs in stratum order. Stratum 1 (the seeds) is handled
//! exactly: every higher-order edge touching a seed is summed directly and
//! its far endpoint is recorded as an entry point into a later stratum. Each
//! later stratum `r` is estimated with random walk tours that start from the
//! collapsed earlier strata (a supernode), walk the edges of stratum `r`,
//! and stop on the first return below `r`. The supernode's degree and its
//! transition law are themselves estimates from earlier strata: crossing
//! counts `beta(q, r)` and reservoir samples of the states entered.

use rustc_hash::FxHashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::canon::{CountVector, PatternCache};
use crate::cis::{induce, Cis, MAX_K};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::hon::{default_attempt_cap, Move, StateView};
use crate::reservoir::ReservoirMatrix;
use crate::stratify::{select_seeds, SeedSet, Stratification};

/// Rejections allowed while forcing a step back into the current stratum.
pub const RESTRICTED_REJECTION_CAP: u64 = 100_000;
/// Later-stratum states per worker whose way back into the current stratum
/// is remembered; past this, steps back fall back to rejection.
pub const RETURN_CACHE_CAP: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub k: usize,
    pub epsilon: f64,
    pub n1: usize,
    pub reservoir_capacity: usize,
    pub min_tours: u64,
    pub max_tours: u64,
    pub max_steps: u64,
    pub workers: usize,
    pub rng_seed: u64,
    /// Tours between stopping-rule checks; `None` means `64 * workers`.
    pub batch: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            k: 5,
            epsilon: 0.01,
            n1: 16,
            reservoir_capacity: 100_000,
            min_tours: 256,
            max_tours: 10_000_000,
            max_steps: 1_000_000,
            workers: 1,
            rng_seed: 0,
            batch: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.k < 3 || self.k > MAX_K {
            return fail(format!("k must be in 3..={MAX_K}, got {}", self.k));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return fail(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.reservoir_capacity == 0 {
            return fail("reservoir capacity must be at least 1".into());
        }
        if self.min_tours < 2 {
            return fail(format!(
                "min_tours must be at least 2, got {}",
                self.min_tours
            ));
        }
        if self.max_tours < self.min_tours {
            return fail(format!(
                "max_tours {} is below min_tours {}",
                self.max_tours, self.min_tours
            ));
        }
        if self.workers == 0 {
            return fail("workers must be at least 1".into());
        }
        if self.max_steps < 2 {
            return fail("max_steps must be at least 2".into());
        }
        if self.batch == Some(0) {
            return fail("batch must be at least 1".into());
        }
        Ok(())
    }

    pub fn batch_size(&self) -> u64 {
        self.batch.unwrap_or(64 * self.workers as u64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StratumResult {
    pub r: u32,
    pub deg_hat: f64,
    pub tours: u64,
    /// Sum of per-step rewards over all tours, before scaling.
    pub reward_sum: CountVector,
    /// Scaled contribution `deg_hat / (2 m) * reward_sum` summed over patterns.
    pub contribution: f64,
    /// Estimated number of higher-order edges in this stratum.
    pub edge_estimate: f64,
    /// Empirical variance of the per-tour edge estimates.
    pub edge_variance: f64,
    pub mean_tour_len: f64,
    pub max_tour_len: u64,
    pub aborted_tours: u64,
    /// Largest `seen / M` among the reservoirs this stratum wrote.
    pub reservoir_pressure: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RippleResult {
    pub counts: CountVector,
    pub total: f64,
    /// Exact contribution of the edges touching stratum 1.
    pub first_stratum: FirstStratum,
    pub seeds: usize,
    pub r_max: u32,
    pub strata_used: u32,
    pub per_stratum: Vec<StratumResult>,
    pub config: RunConfig,
    pub warnings: Vec<String>,
    pub wall_time_secs: f64,
}

/// Per-tour outcome. Rewards and crossings are only committed when the tour
/// returns to the supernode.
#[derive(Clone, Debug, Default)]
pub struct TourOutcome {
    /// `(pattern index, 1 / gamma)` for every edge walked inside the stratum.
    pub reward: Vec<(u32, f64)>,
    /// States of later strata visited, with their stratum.
    pub crossings: Vec<(u32, Cis)>,
    /// Transitions taken, counting the entry from and exit to the supernode.
    pub steps: u64,
}

impl TourOutcome {
    /// Edges of the stratum walked; the `f = 1` reward.
    pub fn edges(&self) -> u64 {
        self.reward.len() as u64
    }
}

#[derive(Clone, Debug)]
pub enum TourStatus {
    Complete(TourOutcome),
    /// Exceeded `max_steps`.
    TooLong,
    /// Could not step back into the stratum within the rejection cap.
    Rejected,
}

/// Private state of one tour-sampling worker.
pub struct Worker {
    pub rng: ChaCha8Rng,
    pub patterns: PatternCache,
    /// Neighbors in the current stratum of later-stratum states, with the
    /// pattern reward of the connecting edge. Valid for the sampler whose id
    /// is `returns_owner` only.
    returns: FxHashMap<Cis, Vec<(Cis, u32, f64)>>,
    returns_owner: u64,
}

impl Worker {
    pub fn new(seed: u64) -> Self {
        Worker {
            rng: ChaCha8Rng::seed_from_u64(seed),
            patterns: PatternCache::new(),
            returns: FxHashMap::default(),
            returns_owner: 0,
        }
    }

    /// Starts a new stratum: fresh random stream, forgotten return moves.
    fn reset(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.returns.clear();
    }
}

/// Everything needed to draw tours in one stratum.
pub struct StratumSampler<'a> {
    g: &'a Graph,
    strat: &'a Stratification,
    rmat: &'a ReservoirMatrix,
    r: u32,
    sources: Vec<u32>,
    source_law: WeightedIndex<f64>,
    deg_hat: f64,
    max_steps: u64,
    attempt_cap: usize,
    id: u64,
}

static NEXT_SAMPLER_ID: AtomicU64 = AtomicU64::new(1);

impl<'a> StratumSampler<'a> {
    /// Returns `None` for an empty stratum (no inbound crossings).
    pub fn new(
        g: &'a Graph,
        strat: &'a Stratification,
        rmat: &'a ReservoirMatrix,
        r: u32,
        max_steps: u64,
    ) -> Result<Option<Self>> {
        let deg_hat = rmat.inbound(r);
        if deg_hat <= 0.0 {
            return Ok(None);
        }
        let (sources, weights): (Vec<u32>, Vec<f64>) = (1..r)
            .filter(|&q| {
                rmat.beta(q, r) > 0.0 && rmat.cell_if_used(q, r).is_some_and(|c| !c.is_empty())
            })
            .map(|q| (q, rmat.beta(q, r)))
            .unzip();
        if sources.is_empty() {
            return Err(Error::NoStartStates(r));
        }
        let source_law = WeightedIndex::new(&weights).map_err(|e| Error::Config(e.to_string()))?;
        Ok(Some(StratumSampler {
            g,
            strat,
            rmat,
            r,
            sources,
            source_law,
            deg_hat,
            max_steps,
            attempt_cap: default_attempt_cap(strat.state_size()),
            id: NEXT_SAMPLER_ID.fetch_add(1, Ordering::Relaxed),
        }))
    }

    pub fn deg_hat(&self) -> f64 {
        self.deg_hat
    }

    /// Draws a state entered from the supernode: a source stratum `q` with
    /// weight `beta(q, r)`, then a uniform reservoir entry of cell `(q, r)`.
    pub fn start_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Cis> {
        let q = self.sources[self.source_law.sample(rng)];
        self.rmat.cell(q, self.r).sample_uniform(rng)
    }

    /// One tour from the supernode. Steps from a state of this stratum are
    /// unrestricted; steps from a later-stratum state are redrawn until they
    /// land back in this stratum. The tour ends on entering an earlier
    /// stratum, and that final edge earns no reward.
    pub fn sample_tour(&self, worker: &mut Worker) -> Result<TourStatus> {
        self.sample_tour_visiting(worker, |_, _| {})
    }

    /// As `sample_tour`, also reporting each state the tour occupies outside
    /// the supernode, with its stratum.
    pub fn sample_tour_visiting(
        &self,
        worker: &mut Worker,
        mut visit: impl FnMut(&Cis, u32),
    ) -> Result<TourStatus> {
        let (g, r) = (self.g, self.r);
        let mut out = TourOutcome {
            steps: 1,
            ..Default::default()
        };
        let mut current = StateView::new(g, &self.start_state(&mut worker.rng)?)?;
        let mut current_rho = r;
        visit(current.cis(), r);
        loop {
            let (next, next_rho, reward) = if current_rho == r {
                let mv = current.sample(g, &mut worker.rng, self.attempt_cap)?;
                let next = current.after(g, &mv)?;
                let rho = self.strat.rho_small(&mv.next, next.small());
                (next, rho, Reward::Move(mv))
            } else {
                match self.step_back(worker, &current)? {
                    Some((next, idx, w)) => (next, r, Reward::Known(idx, w)),
                    None => return Ok(TourStatus::Rejected),
                }
            };
            out.steps += 1;
            if next_rho < r {
                return Ok(TourStatus::Complete(out));
            }
            if out.steps > self.max_steps {
                return Ok(TourStatus::TooLong);
            }
            out.reward.push(match reward {
                Reward::Move(mv) => worker.patterns.lookup(&current.merged(g, &mv))?,
                Reward::Known(idx, w) => (idx, w),
            });
            if next_rho > r {
                out.crossings.push((next_rho, *next.cis()));
            }
            visit(next.cis(), next_rho);
            current = next;
            current_rho = next_rho;
        }
    }

    /// Uniform move from a later-stratum state to one of its neighbors in
    /// this stratum. Neighborhoods are enumerated once per state and kept;
    /// once the cache is full, moves are drawn by rejection instead.
    fn step_back(
        &self,
        worker: &mut Worker,
        current: &StateView,
    ) -> Result<Option<(StateView, u32, f64)>> {
        let g = self.g;
        if worker.returns_owner != self.id {
            worker.returns.clear();
            worker.returns_owner = self.id;
        }
        if !worker.returns.contains_key(current.cis()) && worker.returns.len() >= RETURN_CACHE_CAP {
            for _ in 0..RESTRICTED_REJECTION_CAP {
                let mv = current.sample(g, &mut worker.rng, self.attempt_cap)?;
                let next = current.after(g, &mv)?;
                if self.strat.rho_small(&mv.next, next.small()) == self.r {
                    let (idx, w) = worker.patterns.lookup(&current.merged(g, &mv))?;
                    return Ok(Some((next, idx, w)));
                }
            }
            return Ok(None);
        }
        if !worker.returns.contains_key(current.cis()) {
            let mut options = Vec::new();
            for v in current.neighbors(g) {
                if self.strat.rho(g, &v) == self.r {
                    let (idx, w) = worker
                        .patterns
                        .lookup(&induce(g, current.cis().union(&v)?.vertices()))?;
                    options.push((v, idx, w));
                }
            }
            worker.returns.insert(*current.cis(), options);
        }
        let options = &worker.returns[current.cis()];
        if options.is_empty() {
            return Ok(None);
        }
        let (v, idx, w) = options[worker.rng.random_range(0..options.len())];
        Ok(Some((StateView::new(g, &v)?, idx, w)))
    }
}

enum Reward {
    Move(Move),
    Known(u32, f64),
}

/// Tallies from a batch of tours drawn by one worker.
#[derive(Default)]
struct BatchTally {
    edges: Vec<u64>,
    steps: Vec<u64>,
    reward: Vec<f64>,
    crossings: std::collections::BTreeMap<u32, u64>,
    aborted: u64,
}

fn run_batch(sampler: &StratumSampler<'_>, worker: &mut Worker, tours: u64) -> Result<BatchTally> {
    let mut tally = BatchTally::default();
    let mut done = 0;
    while done < tours {
        match sampler.sample_tour(worker)? {
            TourStatus::Complete(tour) => {
                for &(idx, w) in &tour.reward {
                    let idx = idx as usize;
                    if tally.reward.len() <= idx {
                        tally.reward.resize(idx + 1, 0.0);
                    }
                    tally.reward[idx] += w;
                }
                for &(t, state) in &tour.crossings {
                    sampler.rmat.offer(sampler.r, t, state, &mut worker.rng);
                    *tally.crossings.entry(t).or_default() += 1;
                }
                tally.edges.push(tour.edges());
                tally.steps.push(tour.steps);
                done += 1;
            }
            TourStatus::TooLong | TourStatus::Rejected => {
                tally.aborted += 1;
                // a stratum that only aborts would otherwise spin forever
                if tally.aborted > 16 * (tours + 1) && done == 0 {
                    return Err(Error::Config(format!(
                        "stratum {}: every tour exceeded the step or rejection cap",
                        sampler.r
                    )));
                }
            }
        }
    }
    Ok(tally)
}

fn worker_seed(base: u64, worker: usize, stratum: u32) -> u64 {
    base ^ (worker as u64)
        .wrapping_add(1)
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (stratum as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
}

/// Exact sums over the higher-order edges incident on the seeds.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FirstStratum {
    /// Edges joining two seeds.
    pub within: CountVector,
    /// Edges from a seed to a state of a later stratum.
    pub outgoing: CountVector,
}

impl FirstStratum {
    pub fn total(&self) -> f64 {
        self.within.values().chain(self.outgoing.values()).sum()
    }
}

/// Exact pass over the seeds: sums every higher-order edge with an endpoint
/// in stratum 1 (edges between two seeds once), records crossing counts
/// `beta(1, t)` and offers each entered state to reservoir `(1, t)`.
pub fn first_stratum_pass<R: Rng + ?Sized>(
    g: &Graph,
    seeds: &SeedSet,
    strat: &Stratification,
    rmat: &mut ReservoirMatrix,
    patterns: &mut PatternCache,
    rng: &mut R,
) -> Result<FirstStratum> {
    let mut within: Vec<f64> = Vec::new();
    let mut outgoing: Vec<f64> = Vec::new();
    let mut crossings = std::collections::BTreeMap::<u32, u64>::new();
    for u in &seeds.seeds {
        let view = StateView::new(g, u)?;
        for v in view.neighbors(g) {
            let rho = strat.rho(g, &v);
            if rho == 1 && v < *u {
                continue;
            }
            let (idx, w) = patterns.lookup(&induce(g, u.union(&v)?.vertices()))?;
            let dense = if rho == 1 { &mut within } else { &mut outgoing };
            if dense.len() <= idx as usize {
                dense.resize(idx as usize + 1, 0.0);
            }
            dense[idx as usize] += w;
            if rho > 1 {
                *crossings.entry(rho).or_default() += 1;
                rmat.offer(1, rho, v, rng);
            }
        }
    }
    for (t, c) in crossings {
        rmat.set_beta(1, t, c as f64);
    }
    let mut out = FirstStratum::default();
    patterns.fold_into(&within, 1.0, &mut out.within);
    patterns.fold_into(&outgoing, 1.0, &mut out.outgoing);
    Ok(out)
}

/// Draws tours in stratum `r` until the edge-count estimate has relative
/// standard error at most `epsilon` (or `max_tours` is reached), adds the
/// stratum's contribution to `counts`, and rescales the crossing counts of
/// row `r` into edge estimates.
pub fn run_stratum(
    g: &Graph,
    strat: &Stratification,
    r: u32,
    rmat: &mut ReservoirMatrix,
    workers: &mut [Worker],
    cfg: &RunConfig,
    counts: &mut CountVector,
) -> Result<Option<StratumResult>> {
    let Some(sampler) = StratumSampler::new(g, strat, rmat, r, cfg.max_steps)? else {
        return Ok(None);
    };
    let deg_hat = sampler.deg_hat();
    for (i, w) in workers.iter_mut().enumerate() {
        w.reset(worker_seed(cfg.rng_seed, i, r));
    }

    let batch = cfg.batch_size();
    let mut m: u64 = 0;
    let mut edge_sum = 0.0f64;
    let mut edge_sq = 0.0f64;
    let mut step_sum = 0u64;
    let mut max_len = 0u64;
    let mut aborted = 0u64;
    let mut reward_sum = CountVector::new();
    let mut crossings = std::collections::BTreeMap::<u32, u64>::new();

    loop {
        let want = batch.min(cfg.max_tours - m);
        let n_workers = workers.len() as u64;
        let shares: Vec<u64> = (0..n_workers)
            .map(|i| want / n_workers + u64::from(i < want % n_workers))
            .collect();
        let tallies: Vec<Result<BatchTally>> = if workers.len() == 1 {
            vec![run_batch(&sampler, &mut workers[0], want)]
        } else {
            std::thread::scope(|scope| {
                let handles: Vec<_> = workers
                    .iter_mut()
                    .zip(&shares)
                    .map(|(w, &n)| {
                        let sampler = &sampler;
                        scope.spawn(move || run_batch(sampler, w, n))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("worker panicked"))
                    .collect()
            })
        };
        for (tally, worker) in tallies.into_iter().zip(workers.iter()) {
            let tally = tally?;
            for (&e, &s) in tally.edges.iter().zip(&tally.steps) {
                m += 1;
                edge_sum += e as f64;
                edge_sq += (e as f64) * (e as f64);
                step_sum += s;
                max_len = max_len.max(s);
            }
            aborted += tally.aborted;
            worker
                .patterns
                .fold_into(&tally.reward, 1.0, &mut reward_sum);
            for (t, c) in tally.crossings {
                *crossings.entry(t).or_default() += c;
            }
        }

        let (estimate, variance) = edge_statistics(deg_hat, m, edge_sum, edge_sq);
        let enough =
            m >= cfg.min_tours && variance.sqrt() / (m as f64).sqrt() <= cfg.epsilon * estimate;
        if enough || m >= cfg.max_tours {
            break;
        }
    }
    drop(sampler);

    let scale = deg_hat / (2.0 * m as f64);
    let mut contribution = 0.0;
    for (key, v) in &reward_sum {
        *counts.entry(key.clone()).or_insert(0.0) += v * scale;
        contribution += v * scale;
    }
    let mut pressure = 0.0f64;
    for (&t, &c) in &crossings {
        rmat.set_beta(r, t, c as f64 * deg_hat / m as f64);
        if let Some(cell) = rmat.cell_if_used(r, t) {
            pressure = pressure.max(cell.seen() as f64 / cell.capacity() as f64);
        }
    }
    let (edge_estimate, edge_variance) = edge_statistics(deg_hat, m, edge_sum, edge_sq);
    Ok(Some(StratumResult {
        r,
        deg_hat,
        tours: m,
        reward_sum,
        contribution,
        edge_estimate,
        edge_variance,
        mean_tour_len: step_sum as f64 / m as f64,
        max_tour_len: max_len,
        aborted_tours: aborted,
        reservoir_pressure: pressure,
    }))
}

/// Mean and sample variance of the per-tour estimates `deg_hat / 2 * edges`.
fn edge_statistics(deg_hat: f64, m: u64, sum: f64, sq: f64) -> (f64, f64) {
    if m == 0 {
        return (0.0, 0.0);
    }
    let half = deg_hat / 2.0;
    let mean = sum / m as f64;
    let var = if m > 1 {
        ((sq - m as f64 * mean * mean) / (m as f64 - 1.0)).max(0.0)
    } else {
        0.0
    };
    (half * mean, half * half * var)
}

/// Full pipeline with seeds chosen by [`select_seeds`].
pub fn run(g: &Graph, cfg: &RunConfig) -> Result<RippleResult> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let seeds = select_seeds(g, cfg.n1, cfg.k, &mut rng)?;
    run_with_seeds(g, cfg, &seeds)
}

pub fn run_with_seeds(g: &Graph, cfg: &RunConfig, seeds: &SeedSet) -> Result<RippleResult> {
    cfg.validate()?;
    let started = Instant::now();
    if let Some(s) = seeds.seeds.first() {
        if s.len() != cfg.k - 1 {
            return Err(Error::Config(format!(
                "seeds have {} vertices, expected {}",
                s.len(),
                cfg.k - 1
            )));
        }
    }
    let strat = Stratification::new(g, seeds)?;
    let mut rmat = ReservoirMatrix::new(strat.r_max(), cfg.reservoir_capacity);
    let mut workers: Vec<Worker> = (0..cfg.workers)
        .map(|i| Worker::new(worker_seed(cfg.rng_seed, i, 0)))
        .collect();
    let mut pass_rng = ChaCha8Rng::seed_from_u64(worker_seed(cfg.rng_seed, usize::MAX, 1));
    let first = first_stratum_pass(
        g,
        seeds,
        &strat,
        &mut rmat,
        &mut workers[0].patterns,
        &mut pass_rng,
    )?;

    let mut counts = first.within.clone();
    for (key, v) in &first.outgoing {
        *counts.entry(key.clone()).or_insert(0.0) += v;
    }
    let mut per_stratum = Vec::new();
    let mut warnings = seeds.warnings.clone();
    for r in 2..=strat.r_max() {
        if let Some(result) = run_stratum(g, &strat, r, &mut rmat, &mut workers, cfg, &mut counts)?
        {
            if result.aborted_tours > 0 {
                warnings.push(format!(
                    "stratum {r}: {} tours aborted",
                    result.aborted_tours
                ));
            }
            per_stratum.push(result);
        }
    }
    let total = counts.values().sum();
    Ok(RippleResult {
        counts,
        total,
        first_stratum: first,
        seeds: seeds.seeds.len(),
        r_max: strat.r_max(),
        strata_used: 1 + per_stratum.len() as u32,
        per_stratum,
        config: cfg.clone(),
        warnings,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}

/// Normal-approximation interval `mean ± z * sd / sqrt(m)`.
pub fn confidence_interval(samples: &[f64], level: f64) -> Result<(f64, f64)> {
    let m = samples.len();
    if m < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: m });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!(
            "confidence level must be in (0, 1), got {level}"
        )));
    }
    let mean = samples.iter().sum::<f64>() / m as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m as f64 - 1.0);
    let z = Normal::standard().inverse_cdf(0.5 + level / 2.0);
    let half = z * var.sqrt() / (m as f64).sqrt();
    Ok((mean - half, mean + half))
}
