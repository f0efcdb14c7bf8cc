//! Estimation of connected induced subgraph counts with stratified
//! regenerative random-walk tours over the higher-order network whose states
//! are connected `(k - 1)`-vertex subgraphs.

pub mod baselines;
pub mod canon;
pub mod cis;
pub mod engine;
pub mod error;
pub mod graph;
pub mod hon;
pub mod oracle;
pub mod report;
pub mod reservoir;
pub mod stratify;

pub use canon::{CountVector, DensityBucket, PatternKey};
pub use cis::{Cis, SmallGraph, MAX_K};
pub use engine::{
    confidence_interval, run, run_with_seeds, RippleResult, RunConfig, StratumResult,
};
pub use error::{Error, Result};
pub use graph::{Graph, VertexId};
pub use oracle::{exact_count_vector, ExactCounts};
pub use report::Report;
pub use stratify::{select_seeds, validate_eps, EpsReport, SeedSet, Stratification};
