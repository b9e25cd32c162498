//! Dataset loading, the end-to-end pipeline, metrics, threshold search and traces.

mod config;
mod dataset;
mod evaluate;
mod metrics;
mod pipeline;
mod trace;
mod tune;

pub use config::{ExtractorSettings, PipelineConfig, RetrievalSettings, ScorerSettings, USchemaSettings};
pub use dataset::{load_fever_jsonl, parse_line};
pub use evaluate::{evaluate, run_claim, Evaluation};
pub use metrics::{compute_metrics, ClaimFailure, ClassMetrics, MetricsReport, Outcome};
pub use pipeline::{
    gold_evidence, random_evidence, resolve_provider, CandidateVerdict, ClaimScores, ClaimTrace, EvidenceInput,
    EvidenceRegime, Pipeline, TripleScores, TripleTrace, USchemaRuntime,
};
pub use trace::{format_trace, read_traces, write_traces};
pub use tune::{best_point, grid_search_thresholds, naive_grid_search, surface_csv, GridPoint, GridSearch, ThresholdGrid};
