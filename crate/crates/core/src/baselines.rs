//! Reference estimators built on the plain higher-order walk: a ratio
//! estimate from one long run, and tours that regenerate at a supernode
//! formed from the seeds with its neighborhood enumerated exactly.

use std::collections::HashSet;

use rand::Rng;
use serde::Serialize;

use crate::canon::{CountVector, PatternCache};
use crate::cis::{induce, Cis};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::hon::{default_attempt_cap, StateView};
use crate::stratify::SeedSet;

/// Limit on enumerated supernode edges.
pub const SEED_NEIGHBOR_CAP: usize = 10_000_000;
/// Limit on the length of one supernode tour.
pub const TOUR_STEP_CAP: u64 = 100_000_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BaselineResult {
    /// Pattern-summed estimate.
    pub estimate: f64,
    pub counts: CountVector,
    /// Walk steps (ratio walk) or tours (supernode).
    pub steps_or_tours: u64,
    /// Sample variance of the per-step or per-tour terms behind `estimate`.
    pub variance: f64,
    /// Estimated number of higher-order edges covered by the walk.
    pub edge_estimate: f64,
    pub edge_variance: f64,
}

/// Runs `steps` transitions of the simple walk from `start` and averages
/// `indicator(pattern) / gamma` over traversed edges. The result estimates
/// `C[k] / |E|` per pattern, a distribution rather than a count; the edge
/// estimate is the average of the constant 1.
pub fn mcmc_ratio_estimate<R: Rng + ?Sized>(
    g: &Graph,
    k: usize,
    start: &Cis,
    steps: u64,
    rng: &mut R,
) -> Result<BaselineResult> {
    check_state(g, k, start)?;
    if steps < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: steps as usize,
        });
    }
    let cap = default_attempt_cap(k - 1);
    let mut patterns = PatternCache::new();
    let mut dense: Vec<f64> = Vec::new();
    let (mut sum, mut sq) = (0.0f64, 0.0f64);
    let mut view = StateView::new(g, start)?;
    for _ in 0..steps {
        let mv = view.sample(g, rng, cap).map_err(stuck)?;
        let (idx, w) = patterns.lookup(&view.merged(g, &mv))?;
        add(&mut dense, idx, w);
        sum += w;
        sq += w * w;
        view = StateView::new(g, &mv.next)?;
    }
    let n = steps as f64;
    let mut counts = CountVector::new();
    patterns.fold_into(&dense, 1.0 / n, &mut counts);
    Ok(BaselineResult {
        estimate: sum / n,
        counts,
        steps_or_tours: steps,
        variance: ((sq - sum * sum / n) / (n - 1.0)).max(0.0),
        edge_estimate: 1.0,
        edge_variance: 0.0,
    })
}

/// Tours regenerating at the supernode formed by collapsing the seed states.
/// Edges among the seeds are summed exactly; the remainder is
/// `deg / (2 m) * sum over tours of sum f`, where every traversed edge counts,
/// including those into and out of the supernode.
pub fn supernode_tour_estimate<R: Rng + ?Sized>(
    g: &Graph,
    k: usize,
    seeds: &SeedSet,
    m_tours: u64,
    rng: &mut R,
) -> Result<BaselineResult> {
    supernode_tours(g, k, seeds, Budget::Tours(m_tours), rng)
}

/// Same estimator, drawing whole tours until `steps` transitions are spent.
pub fn supernode_step_budget<R: Rng + ?Sized>(
    g: &Graph,
    k: usize,
    seeds: &SeedSet,
    steps: u64,
    rng: &mut R,
) -> Result<BaselineResult> {
    supernode_tours(g, k, seeds, Budget::Steps(steps), rng)
}

enum Budget {
    Tours(u64),
    Steps(u64),
}

fn supernode_tours<R: Rng + ?Sized>(
    g: &Graph,
    k: usize,
    seeds: &SeedSet,
    budget: Budget,
    rng: &mut R,
) -> Result<BaselineResult> {
    if seeds.seeds.is_empty() {
        return Err(Error::EmptySources);
    }
    for s in &seeds.seeds {
        check_state(g, k, s)?;
    }
    let inside: HashSet<Cis> = seeds.seeds.iter().copied().collect();
    let mut patterns = PatternCache::new();
    let mut exact_dense = Vec::new();
    let mut exits: Vec<(Cis, Cis)> = Vec::new();
    for u in &seeds.seeds {
        for v in StateView::new(g, u)?.neighbors(g) {
            if inside.contains(&v) {
                if v > *u {
                    let (idx, w) = patterns.lookup(&induce(g, u.union(&v)?.vertices()))?;
                    add(&mut exact_dense, idx, w);
                }
                continue;
            }
            exits.push((*u, v));
            if exits.len() > SEED_NEIGHBOR_CAP {
                return Err(Error::CapExceeded {
                    what: "supernode neighborhood",
                    cap: SEED_NEIGHBOR_CAP,
                });
            }
        }
    }
    let mut counts = CountVector::new();
    patterns.fold_into(&exact_dense, 1.0, &mut counts);
    let exact: f64 = counts.values().sum();
    let deg = exits.len() as f64;

    let cap = default_attempt_cap(k - 1);
    let mut dense = Vec::new();
    let (mut tours, mut steps) = (0u64, 0u64);
    let (mut f_sum, mut f_sq, mut e_sum, mut e_sq) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let more = |tours: u64, steps: u64| match budget {
        Budget::Tours(m) => tours < m,
        Budget::Steps(s) => steps < s,
    };
    while !exits.is_empty() && more(tours, steps) {
        let (from, to) = exits[rng.random_range(0..exits.len())];
        let (idx, w) = patterns.lookup(&induce(g, from.union(&to)?.vertices()))?;
        add(&mut dense, idx, w);
        let (mut f, mut e) = (w, 1u64);
        let mut view = StateView::new(g, &to)?;
        loop {
            let mv = view.sample(g, rng, cap).map_err(stuck)?;
            let (idx, w) = patterns.lookup(&view.merged(g, &mv))?;
            add(&mut dense, idx, w);
            f += w;
            e += 1;
            if inside.contains(&mv.next) {
                break;
            }
            if e > TOUR_STEP_CAP {
                return Err(Error::CapExceeded {
                    what: "tour length",
                    cap: TOUR_STEP_CAP as usize,
                });
            }
            view = StateView::new(g, &mv.next)?;
        }
        let (fi, ei) = (deg / 2.0 * f, deg / 2.0 * e as f64);
        f_sum += fi;
        f_sq += fi * fi;
        e_sum += ei;
        e_sq += ei * ei;
        tours += 1;
        steps += e;
    }
    let steps_or_tours = match budget {
        Budget::Tours(m) => m,
        Budget::Steps(_) => tours,
    };
    if tours == 0 {
        return Ok(BaselineResult {
            estimate: exact,
            counts,
            steps_or_tours,
            variance: 0.0,
            edge_estimate: 0.0,
            edge_variance: 0.0,
        });
    }
    let n = tours as f64;
    patterns.fold_into(&dense, deg / (2.0 * n), &mut counts);
    let var = |sum: f64, sq: f64| {
        if tours > 1 {
            ((sq - sum * sum / n) / (n - 1.0)).max(0.0)
        } else {
            0.0
        }
    };
    Ok(BaselineResult {
        estimate: exact + f_sum / n,
        counts,
        steps_or_tours,
        variance: var(f_sum, f_sq),
        edge_estimate: e_sum / n,
        edge_variance: var(e_sum, e_sq),
    })
}

fn check_state(g: &Graph, k: usize, s: &Cis) -> Result<()> {
    if k < 3 {
        return Err(Error::OrderTooSmall(k));
    }
    if s.len() != k - 1 {
        return Err(Error::Config(format!(
            "state has {} vertices, expected {}",
            s.len(),
            k - 1
        )));
    }
    if s.vertices().iter().any(|&v| v as usize >= g.n()) || !induce(g, s.vertices()).is_connected()
    {
        return Err(Error::Disconnected);
    }
    Ok(())
}

fn stuck(e: Error) -> Error {
    match e {
        Error::AttemptBudget(_) => Error::Stuck,
        other => other,
    }
}

fn add(dense: &mut Vec<f64>, idx: u32, w: f64) {
    let i = idx as usize;
    if dense.len() <= i {
        dense.resize(i + 1, 0.0);
    }
    dense[i] += w;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{build_hon, exact_count_vector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn k3() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)])
    }

    fn cis(v: &[u32]) -> Cis {
        Cis::new(v).unwrap()
    }

    #[test]
    fn ratio_walk_on_triangle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = mcmc_ratio_estimate(&k3(), 3, &cis(&[0, 1]), 1000, &mut rng).unwrap();
        assert!((r.estimate - 1.0 / 3.0).abs() < 1e-12);
        assert!(r.variance < 1e-12);
        assert_eq!(r.edge_estimate, 1.0);
    }

    #[test]
    fn ratio_walk_matches_edge_sum() {
        // triangle with a pendant path: triangles and paths both present
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (0, 2), (2, 3), (3, 4)]);
        let hon = build_hon(&g, 2, 1000).unwrap();
        let exact = exact_count_vector(&g, 3, 1000).unwrap();
        let truth = exact.total as f64 / hon.graph.edge_count() as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = mcmc_ratio_estimate(&g, 3, &cis(&[0, 1]), 1_000_000, &mut rng).unwrap();
        assert!(
            (r.estimate - truth).abs() / truth < 0.02,
            "{} vs {truth}",
            r.estimate
        );
        let summed: f64 = r.counts.values().sum();
        assert!((summed - r.estimate).abs() < 1e-9);
    }

    #[test]
    fn ratio_walk_rejects_short_runs_and_stuck_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(mcmc_ratio_estimate(&k3(), 3, &cis(&[0, 1]), 1, &mut rng).is_err());
        let edge = Graph::from_edges(2, &[(0, 1)]);
        assert!(matches!(
            mcmc_ratio_estimate(&edge, 3, &cis(&[0, 1]), 10, &mut rng),
            Err(Error::Stuck)
        ));
    }

    #[test]
    fn supernode_on_triangle_is_unbiased() {
        let seeds = SeedSet::from_seeds(vec![cis(&[0, 1])]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = supernode_tour_estimate(&k3(), 3, &seeds, 20_000, &mut rng).unwrap();
        let se = (r.variance / 20_000.0).sqrt();
        assert!(
            (r.estimate - 1.0).abs() < 3.0 * se + 1e-9,
            "{} se {se}",
            r.estimate
        );
        // all three edges lie outside the seeds
        let se = (r.edge_variance / 20_000.0).sqrt();
        assert!((r.edge_estimate - 3.0).abs() < 3.0 * se + 1e-9);
    }

    #[test]
    fn supernode_covering_everything_is_exact() {
        let seeds = SeedSet::from_seeds(vec![cis(&[0, 1]), cis(&[0, 2]), cis(&[1, 2])]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = supernode_tour_estimate(&k3(), 3, &seeds, 10, &mut rng).unwrap();
        assert!((r.estimate - 1.0).abs() < 1e-12);
        assert_eq!(r.edge_estimate, 0.0);
    }
}
