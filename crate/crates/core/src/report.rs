//! Machine-readable output shared by estimates, exact counts and baselines.

use std::io::Write;

use serde::Serialize;

use crate::canon::{CountVector, PatternKey};
use crate::engine::{RippleResult, RunConfig, StratumResult};
use crate::error::Result;
use crate::oracle::ExactCounts;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PatternRow {
    pub pattern_hex: String,
    pub order: usize,
    pub edges: usize,
    pub density: f64,
    pub is_star: bool,
    pub estimate: f64,
}

impl PatternRow {
    pub fn new(key: &PatternKey, estimate: f64) -> Self {
        PatternRow {
            pattern_hex: key.to_hex(),
            order: key.order(),
            edges: key.edge_count(),
            density: key.density(),
            is_star: key.is_star(),
            estimate,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
    pub total: f64,
    pub counts: Vec<PatternRow>,
    pub strata: Vec<StratumSummary>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
}

/// Per-stratum diagnostics without the per-pattern reward vector.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StratumSummary {
    pub r: u32,
    pub deg_hat: f64,
    pub tours: u64,
    pub contribution: f64,
    pub edge_estimate: f64,
    pub edge_variance: f64,
    pub mean_tour_len: f64,
    pub max_tour_len: u64,
    pub aborted_tours: u64,
    pub reservoir_pressure: f64,
}

impl From<&StratumResult> for StratumSummary {
    fn from(s: &StratumResult) -> Self {
        StratumSummary {
            r: s.r,
            deg_hat: s.deg_hat,
            tours: s.tours,
            contribution: s.contribution,
            edge_estimate: s.edge_estimate,
            edge_variance: s.edge_variance,
            mean_tour_len: s.mean_tour_len,
            max_tour_len: s.max_tour_len,
            aborted_tours: s.aborted_tours,
            reservoir_pressure: s.reservoir_pressure,
        }
    }
}

fn rows(counts: &CountVector) -> Vec<PatternRow> {
    counts.iter().map(|(k, &v)| PatternRow::new(k, v)).collect()
}

impl Report {
    /// Wall time is left out unless asked for, so that repeated runs with the
    /// same seed serialize identically.
    pub fn from_estimate(result: &RippleResult, with_wall_time: bool) -> Self {
        Report {
            config: Some(result.config.clone()),
            total: result.total,
            counts: rows(&result.counts),
            strata: result
                .per_stratum
                .iter()
                .map(StratumSummary::from)
                .collect(),
            warnings: result.warnings.clone(),
            wall_time_secs: with_wall_time.then_some(result.wall_time_secs),
        }
    }

    pub fn from_exact(exact: &ExactCounts) -> Self {
        Report {
            config: None,
            total: exact.total as f64,
            counts: rows(&exact.as_estimates()),
            strata: Vec::new(),
            warnings: Vec::new(),
            wall_time_secs: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "pattern_hex,order,edges,density,is_star,estimate")?;
        for r in &self.counts {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.pattern_hex, r.order, r.edges, r.density, r.is_star, r.estimate
            )?;
        }
        Ok(())
    }
}

/// Euclidean and maximum absolute differences between two count vectors,
/// over the union of their patterns.
pub fn distances(estimate: &CountVector, exact: &CountVector) -> (f64, f64) {
    let mut l2 = 0.0f64;
    let mut linf = 0.0f64;
    let keys: std::collections::BTreeSet<&PatternKey> =
        estimate.keys().chain(exact.keys()).collect();
    for k in keys {
        let d = estimate.get(k).copied().unwrap_or(0.0) - exact.get(k).copied().unwrap_or(0.0);
        l2 += d * d;
        linf = linf.max(d.abs());
    }
    (l2.sqrt(), linf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cis::SmallGraph;
    use crate::graph::Graph;
    use crate::oracle::exact_count_vector;

    #[test]
    fn exact_report_rows() {
        let g = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        let report = Report::from_exact(&exact_count_vector(&g, 3, 100).unwrap());
        assert_eq!(report.total, 4.0);
        assert_eq!(report.counts.len(), 1);
        let row = &report.counts[0];
        assert_eq!(
            (row.order, row.edges, row.is_star, row.estimate),
            (3, 3, false, 4.0)
        );
        let json = report.to_json().unwrap();
        assert!(!json.contains("wall_time"));
        assert!(!json.contains("config"));
        let mut csv = Vec::new();
        report.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("pattern_hex,"));
    }

    #[test]
    fn distance_over_union() {
        let tri = PatternKey::canonical(&SmallGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]));
        let path = PatternKey::canonical(&SmallGraph::from_edges(3, &[(0, 1), (1, 2)]));
        let a: CountVector = [(tri.clone(), 3.0)].into_iter().collect();
        let b: CountVector = [(tri, 1.0), (path, 4.0)].into_iter().collect();
        let (l2, linf) = distances(&a, &b);
        assert!((l2 - 20f64.sqrt()).abs() < 1e-12);
        assert_eq!(linf, 4.0);
    }
}
