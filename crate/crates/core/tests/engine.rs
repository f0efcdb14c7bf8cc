mod common;

use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ripple_core::canon::PatternCache;
use ripple_core::engine::{first_stratum_pass, StratumSampler, TourStatus, Worker};
use ripple_core::oracle::{build_hon, exact_count_vector};
use ripple_core::reservoir::ReservoirMatrix;
use ripple_core::*;

fn quick(k: usize, seed: u64) -> RunConfig {
    RunConfig {
        k,
        epsilon: 0.01,
        rng_seed: seed,
        ..Default::default()
    }
}

#[test]
fn first_pass_on_triangle() {
    let g = complete(3);
    let seeds = SeedSet::from_seeds(vec![cis(&[0, 1])]);
    let strat = Stratification::new(&g, &seeds).unwrap();
    let mut rmat = ReservoirMatrix::new(strat.r_max(), 16);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let first = first_stratum_pass(
        &g,
        &seeds,
        &strat,
        &mut rmat,
        &mut PatternCache::new(),
        &mut rng,
    )
    .unwrap();
    assert_eq!(rmat.beta(1, 2), 2.0);
    assert!(first.within.values().all(|&v| v == 0.0));
    // both seed edges carry a third of the triangle
    assert!((first.total() - 2.0 / 3.0).abs() < 1e-12);
    let mut entered = rmat.cell(1, 2).items();
    entered.sort();
    assert_eq!(entered, vec![cis(&[0, 2]), cis(&[1, 2])]);
}

#[test]
fn first_pass_on_path() {
    let g = path(4);
    let seeds = SeedSet::from_seeds(vec![cis(&[0, 1])]);
    let strat = Stratification::new(&g, &seeds).unwrap();
    let mut rmat = ReservoirMatrix::new(strat.r_max(), 16);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    first_stratum_pass(
        &g,
        &seeds,
        &strat,
        &mut rmat,
        &mut PatternCache::new(),
        &mut rng,
    )
    .unwrap();
    assert_eq!(rmat.beta(1, 2), 1.0);
    assert_eq!(rmat.inbound(3) + rmat.inbound(4), 0.0);
}

#[test]
fn triangle_and_k4_totals() {
    let r = run(&complete(3), &quick(3, 7)).unwrap();
    assert!((r.total - 1.0).abs() < 0.05, "{}", r.total);
    assert_eq!(r.counts.len(), 1);
    let r = run(&complete(4), &quick(3, 7)).unwrap();
    assert!((r.total - 4.0).abs() < 0.2, "{}", r.total);
    let tri = PatternKey::canonical(&SmallGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]));
    assert_eq!(r.counts.keys().collect::<Vec<_>>(), vec![&tri]);
}

#[test]
fn dead_end_stratum_stops_at_min_tours() {
    // on P4 with seed {0,1}, the state {2,3} only leads back down
    let g = path(4);
    let seeds = SeedSet::from_seeds(vec![cis(&[0, 1])]);
    let cfg = RunConfig {
        k: 3,
        min_tours: 100,
        batch: Some(64),
        ..Default::default()
    };
    let r = run_with_seeds(&g, &cfg, &seeds).unwrap();
    let last = r
        .per_stratum
        .iter()
        .find(|s| s.r == 4)
        .expect("stratum 4 sampled");
    assert_eq!(last.tours, 128);
    assert_eq!(last.mean_tour_len, 2.0);
    assert_eq!(last.contribution, 0.0);
    assert!((r.total - 2.0).abs() < 0.2, "{}", r.total);
}

#[test]
fn halving_epsilon_quadruples_tours() {
    let g = petersen();
    let tours = |epsilon: f64| -> f64 {
        (0..5)
            .map(|seed| {
                let cfg = RunConfig {
                    k: 3,
                    epsilon,
                    n1: 1,
                    min_tours: 2,
                    batch: Some(8),
                    rng_seed: seed,
                    ..Default::default()
                };
                let r = run(&g, &cfg).unwrap();
                r.per_stratum.iter().find(|s| s.r == 2).unwrap().tours as f64
            })
            .sum()
    };
    let ratio = tours(0.01) / tours(0.02);
    assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn same_seed_same_result() {
    let g = erdos_renyi(30, 0.2, 4);
    let cfg = RunConfig {
        k: 4,
        epsilon: 0.05,
        rng_seed: 99,
        ..Default::default()
    };
    let a = run(&g, &cfg).unwrap();
    let b = run(&g, &cfg).unwrap();
    assert_eq!(
        Report::from_estimate(&a, false).to_json().unwrap(),
        Report::from_estimate(&b, false).to_json().unwrap()
    );
    assert_eq!(a.total.to_bits(), b.total.to_bits());
    let c = run(
        &g,
        &RunConfig {
            rng_seed: 100,
            ..cfg
        },
    )
    .unwrap();
    assert_ne!(a.total.to_bits(), c.total.to_bits());
}

#[test]
fn total_is_sum_of_patterns() {
    let g = erdos_renyi(30, 0.2, 5);
    let r = run(
        &g,
        &RunConfig {
            k: 4,
            epsilon: 0.05,
            ..Default::default()
        },
    )
    .unwrap();
    let summed: f64 = r.counts.values().sum();
    assert_eq!(summed.to_bits(), r.total.to_bits());
}

#[test]
fn estimates_track_exact_counts() {
    let g = erdos_renyi(30, 0.2, 6);
    let exact = exact_count_vector(&g, 4, 1 << 24).unwrap();
    let r = run(
        &g,
        &RunConfig {
            k: 4,
            epsilon: 0.01,
            ..Default::default()
        },
    )
    .unwrap();
    assert!((r.total - exact.total as f64).abs() / (exact.total as f64) < 0.05);
    for (key, &c) in &exact.counts {
        let got = r.counts.get(key).copied().unwrap_or(0.0);
        assert!(
            (got - c as f64).abs() / (c as f64) < 0.25,
            "{key}: {got} vs {c}"
        );
    }
}

#[test]
fn workers_share_reservoirs() {
    let g = erdos_renyi(30, 0.2, 7);
    let exact = exact_count_vector(&g, 4, 1 << 24).unwrap().total as f64;
    let r = run(
        &g,
        &RunConfig {
            k: 4,
            epsilon: 0.01,
            workers: 3,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(
        (r.total - exact).abs() / exact < 0.05,
        "{} vs {exact}",
        r.total
    );
}

#[test]
fn triangle_tours_have_kac_length() {
    let g = complete(3);
    let seeds = SeedSet::from_seeds(vec![cis(&[0, 1])]);
    let strat = Stratification::new(&g, &seeds).unwrap();
    let hon = build_hon(&g, 2, 100).unwrap();
    let rmat = exact_matrix(&g, &strat, &hon);
    let sampler = StratumSampler::new(&g, &strat, &rmat, 2, 1_000_000)
        .unwrap()
        .unwrap();
    let mut worker = Worker::new(3);
    let n = 100_000;
    let mut steps = 0u64;
    let mut rewards = 0.0;
    for _ in 0..n {
        let TourStatus::Complete(t) = sampler.sample_tour(&mut worker).unwrap() else {
            panic!("aborted")
        };
        steps += t.steps;
        rewards += t.reward.iter().map(|r| r.1).sum::<f64>();
    }
    assert!((steps as f64 / n as f64 - 3.0).abs() < 0.03);
    // the one internal edge carries a third of the triangle
    assert!((sampler.deg_hat() / (2.0 * n as f64) * rewards - 1.0 / 3.0).abs() < 0.01);
}

#[test]
fn single_stratum_estimate_is_unbiased() {
    // star with 4 leaves and seed {0,1}: every other state is in stratum 2
    let g = star(4);
    let seeds = SeedSet::from_seeds(vec![cis(&[0, 1])]);
    let runs = 1000;
    let totals: Vec<f64> = (0..runs)
        .map(|seed| {
            let cfg = RunConfig {
                k: 3,
                min_tours: 8,
                batch: Some(8),
                epsilon: 10.0,
                rng_seed: seed,
                ..Default::default()
            };
            run_with_seeds(&g, &cfg, &seeds).unwrap().total
        })
        .collect();
    let mean = totals.iter().sum::<f64>() / runs as f64;
    let var = totals.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (runs as f64 - 1.0);
    let se = (var / runs as f64).sqrt();
    assert!((mean - 6.0).abs() < 3.0 * se, "mean {mean} se {se}");
}

#[test]
fn interval_examples() {
    assert_eq!(confidence_interval(&[3.0; 10], 0.95).unwrap(), (3.0, 3.0));
    let (lo, hi) = confidence_interval(&[0.0, 2.0], 0.95).unwrap();
    let half = 1.959963984540054 * 2f64.sqrt() / 2f64.sqrt();
    assert!((lo - (1.0 - half)).abs() < 1e-9 && (hi - (1.0 + half)).abs() < 1e-9);
    assert!(matches!(
        confidence_interval(&[1.0], 0.95),
        Err(Error::TooFewSamples { .. })
    ));
}

#[test]
fn interval_coverage() {
    // per-tour edge estimates of the triangle's stratum have mean 1
    let g = complete(3);
    let seeds = SeedSet::from_seeds(vec![cis(&[0, 1])]);
    let strat = Stratification::new(&g, &seeds).unwrap();
    let rmat = exact_matrix(&g, &strat, &build_hon(&g, 2, 100).unwrap());
    let sampler = StratumSampler::new(&g, &strat, &rmat, 2, 1_000)
        .unwrap()
        .unwrap();
    let mut worker = Worker::new(8);
    let reps = 1000;
    let mut covered = 0;
    for _ in 0..reps {
        let samples: Vec<f64> = (0..200)
            .map(|_| match sampler.sample_tour(&mut worker).unwrap() {
                TourStatus::Complete(t) => sampler.deg_hat() / 2.0 * t.edges() as f64,
                _ => panic!("aborted"),
            })
            .collect();
        let (lo, hi) = confidence_interval(&samples, 0.95).unwrap();
        covered += usize::from(lo <= 1.0 && 1.0 <= hi);
    }
    let rate = covered as f64 / reps as f64;
    assert!((0.92..=0.98).contains(&rate), "coverage {rate}");
}

#[test]
fn config_validation() {
    let bad = [
        RunConfig {
            k: 2,
            ..Default::default()
        },
        RunConfig {
            epsilon: 0.0,
            ..Default::default()
        },
        RunConfig {
            reservoir_capacity: 0,
            ..Default::default()
        },
        RunConfig {
            min_tours: 1,
            ..Default::default()
        },
        RunConfig {
            workers: 0,
            ..Default::default()
        },
    ];
    for cfg in bad {
        assert!(
            matches!(run(&complete(3), &cfg), Err(Error::Config(_))),
            "{cfg:?}"
        );
    }
    let json = r#"{"k": 3, "epsilon": 0.1}"#;
    let cfg: RunConfig = serde_json::from_str(json).unwrap();
    assert_eq!((cfg.k, cfg.min_tours), (3, 256));
    assert!(serde_json::from_str::<RunConfig>(r#"{"kk": 3}"#).is_err());
}

#[test]
fn graphs_too_small_for_k_give_zero() {
    let r = run(&complete(3), &quick(5, 0)).unwrap();
    assert_eq!(r.total, 0.0);
    assert!(!r.warnings.is_empty());
}

#[test]
fn worker_reused_across_strata() {
    let g = petersen();
    let k = 5;
    let seeds = select_seeds(&g, 16, k, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
    let strat = Stratification::new(&g, &seeds).unwrap();
    let hon = build_hon(&g, k - 1, 1 << 20).unwrap();
    let rmat = exact_matrix(&g, &strat, &hon);
    let mut worker = Worker::new(1);
    let n = 20_000;
    for r in 2..=strat.r_max() {
        let Some(sampler) = StratumSampler::new(&g, &strat, &rmat, r, 1 << 30).unwrap() else {
            continue;
        };
        let (deg, inner) = stratum_edges(&g, &strat, &hon, r);
        let mut steps = 0;
        for _ in 0..n {
            let TourStatus::Complete(t) = sampler.sample_tour(&mut worker).unwrap() else {
                panic!("aborted")
            };
            steps += t.steps;
        }
        let kac = 2.0 * (deg + inner) as f64 / deg as f64;
        let mean = steps as f64 / n as f64;
        assert!((mean - kac).abs() / kac < 0.03, "r={r}: {mean} vs {kac}");
    }
}

#[test]
fn concatenated_tours_visit_states_by_degree() {
    // the stitched walk on one stratum has stationary law proportional to degree
    let g = petersen();
    let k = 4;
    let seeds = select_seeds(&g, 2, k, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    let strat = Stratification::new(&g, &seeds).unwrap();
    let hon = build_hon(&g, k - 1, 1 << 20).unwrap();
    let rmat = exact_matrix(&g, &strat, &hon);
    let rho: Vec<u32> = hon.states.iter().map(|s| strat.rho(&g, s)).collect();
    let r = 2;
    let (deg, inner) = stratum_edges(&g, &strat, &hon, r);
    let mut weight = std::collections::HashMap::new();
    for (a, b) in hon.edges() {
        for (x, y) in [(a, b), (b, a)] {
            let (rx, ry) = (rho[x as usize], rho[y as usize]);
            if rx == r || (rx > r && ry == r) {
                *weight.entry(hon.states[x as usize]).or_insert(0u64) += 1;
            }
        }
    }
    let total = 2 * (deg + inner);
    let sampler = StratumSampler::new(&g, &strat, &rmat, r, 1 << 30)
        .unwrap()
        .unwrap();
    let mut worker = Worker::new(6);
    let mut visits = std::collections::HashMap::new();
    let (mut steps, mut tours) = (0u64, 0u64);
    while steps < 100_000 {
        let status = sampler
            .sample_tour_visiting(&mut worker, |s, _| *visits.entry(*s).or_insert(0u64) += 1)
            .unwrap();
        let TourStatus::Complete(t) = status else {
            panic!("aborted")
        };
        steps += t.steps;
        tours += 1;
    }
    let n = steps as f64;
    let mut tv = (tours as f64 / n - deg as f64 / total as f64).abs();
    for (s, &w) in &weight {
        let seen = visits.get(s).copied().unwrap_or(0);
        tv += (seen as f64 / n - w as f64 / total as f64).abs();
    }
    assert!(visits.keys().all(|s| weight.contains_key(s)));
    assert!(tv / 2.0 < 0.02, "tv {}", tv / 2.0);
}

#[test]
fn error_shrinks_with_epsilon() {
    let g = petersen();
    let exact = exact_count_vector(&g, 4, 1 << 20).unwrap().total as f64;
    let mean_error = |epsilon: f64| -> f64 {
        (0..10)
            .map(|seed| {
                let r = run(
                    &g,
                    &RunConfig {
                        k: 4,
                        epsilon,
                        rng_seed: seed,
                        ..Default::default()
                    },
                )
                .unwrap();
                (r.total - exact).abs() / exact
            })
            .sum::<f64>()
            / 10.0
    };
    let errors: Vec<f64> = [0.3, 0.03, 0.003].iter().map(|&e| mean_error(e)).collect();
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
}
