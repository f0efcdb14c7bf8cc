//! Configuration sweeps. The sweep file is a JSON list of entries, each naming
//! a graph and a run configuration to repeat `n_rep` times with consecutive
//! seeds starting at `config.rng_seed`.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ripple_core::report::distances;
use ripple_core::{exact_count_vector, run, CountVector, Error, Graph, RunConfig};
use serde::Deserialize;

pub const HEADER: &str =
    "entry,graph,run,k,epsilon,n1,reservoir_capacity,workers,rng_seed,total,l2,linf,wall_time_secs,tours_per_stratum,error";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    /// Relative paths resolve against the sweep file's directory.
    graph: PathBuf,
    #[serde(default)]
    labels: Option<PathBuf>,
    #[serde(default = "one")]
    n_rep: u64,
    #[serde(default)]
    config: RunConfig,
}

fn one() -> u64 {
    1
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

struct Runner {
    oracle_cap: usize,
    graphs: HashMap<(PathBuf, Option<PathBuf>), Result<Graph, String>>,
    exact: HashMap<(PathBuf, usize), Option<CountVector>>,
}

impl Runner {
    fn graph(&mut self, path: &Path, labels: Option<&Path>) -> Result<&Graph, String> {
        let key = (path.to_path_buf(), labels.map(Path::to_path_buf));
        self.graphs
            .entry(key)
            .or_insert_with(|| {
                Graph::load_edge_list(path, labels).map_err(|e| format!("{}: {e}", path.display()))
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    fn exact(&mut self, path: &Path, labels: Option<&Path>, k: usize) -> Option<CountVector> {
        if let Some(hit) = self.exact.get(&(path.to_path_buf(), k)) {
            return hit.clone();
        }
        let cap = self.oracle_cap;
        let counts = match self.graph(path, labels) {
            Ok(g) => match exact_count_vector(g, k, cap) {
                Ok(e) => Some(e.as_estimates()),
                Err(e) => {
                    log::warn!("no exact reference for {} at k={k}: {e}", path.display());
                    None
                }
            },
            Err(_) => None,
        };
        self.exact.insert((path.to_path_buf(), k), counts.clone());
        counts
    }
}

pub fn cmd_bench(sweep: &Path, oracle_cap: usize, output: Option<&Path>) -> Result<u8, Error> {
    let entries: Vec<Entry> = serde_json::from_str(&std::fs::read_to_string(sweep)?)?;
    let base = sweep.parent().unwrap_or(Path::new("."));
    let mut w = crate::sink(output)?;
    writeln!(w, "{HEADER}")?;
    let mut runner = Runner {
        oracle_cap,
        graphs: HashMap::new(),
        exact: HashMap::new(),
    };
    let mut failed = false;
    for (idx, entry) in entries.iter().enumerate() {
        let path = base.join(&entry.graph);
        let labels = entry.labels.as_ref().map(|l| base.join(l));
        let exact = runner.exact(&path, labels.as_deref(), entry.config.k);
        for rep in 0..entry.n_rep {
            let cfg = RunConfig {
                rng_seed: entry.config.rng_seed.wrapping_add(rep),
                ..entry.config.clone()
            };
            let prefix = format!(
                "{idx},{},{rep},{},{},{},{},{},{}",
                csv_field(&entry.graph.display().to_string()),
                cfg.k,
                cfg.epsilon,
                cfg.n1,
                cfg.reservoir_capacity,
                cfg.workers,
                cfg.rng_seed
            );
            let started = Instant::now();
            let outcome = runner
                .graph(&path, labels.as_deref())
                .and_then(|g| run(g, &cfg).map_err(|e| e.to_string()));
            match outcome {
                Ok(r) => {
                    let (l2, linf) = match &exact {
                        Some(e) => {
                            let (a, b) = distances(&r.counts, e);
                            (a.to_string(), b.to_string())
                        }
                        None => (String::new(), String::new()),
                    };
                    let tours: Vec<String> = r
                        .per_stratum
                        .iter()
                        .map(|s| format!("{}:{}", s.r, s.tours))
                        .collect();
                    writeln!(
                        w,
                        "{prefix},{},{l2},{linf},{},{},",
                        r.total,
                        started.elapsed().as_secs_f64(),
                        tours.join(";")
                    )?;
                }
                Err(msg) => {
                    failed = true;
                    writeln!(w, "{prefix},,,,,,{}", csv_field(&msg))?;
                }
            }
        }
    }
    w.flush()?;
    Ok(u8::from(failed))
}
