//! End-to-end orchestration: corpus loading, strategy selection, budget
//! checks, generation with a fallback ladder, evaluation and reporting.

mod config;
mod corpus;
mod policy;
mod report;
mod run;
mod synth;

use thiserror::Error;

use crate::gateway::GatewayError;
use crate::metrics::MetricsError;
use crate::sql::SqlError;
use crate::strategies::StrategyError;

pub use config::{BackendChoice, PipelineConfig};
pub use corpus::{load_corpus, parse_corpus, write_corpus, MigrationCase};
pub use policy::{
    enforce_budget, fallback_ladder, select_strategy, BudgetConfig, BudgetExceeded, MigrationContext,
    Objective, StructuralProfile, LONG_IDENTIFIER_CHARS,
};
pub use report::{emit_report, render_deltas, render_reports, ReportFormat};
pub use run::{
    prepare, run_case, run_experiment, strip_fences, CaseOutcome, ExperimentResult, QualityGates, RunSettings,
};
pub use synth::{generate_synthetic_corpus, rewrite_to_postgres, CorpusDials};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: malformed record: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("line {line}: duplicate case id '{id}'")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: reference does not parse as PostgreSQL: {message}")]
    InvalidReference { line: usize, message: String },
    #[error("case {case_id}: generation failed: {source}")]
    GenerationFailed { case_id: String, source: GatewayError },
    #[error("case {case_id}: even the unoptimized input exceeds the budget by {overshoot} tokens")]
    BudgetUnsatisfiable { case_id: String, overshoot: usize },
    /// Replay keys with no recorded response, sorted.
    #[error("{} request(s) missing from the replay cache", keys.len())]
    CacheMisses { keys: Vec<String> },
    #[error("invalid budget: {0}")]
    InvalidBudget(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Sql(#[from] SqlError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

impl PipelineError {
    pub(crate) fn io(path: impl std::fmt::Display, e: impl std::fmt::Display) -> Self {
        PipelineError::Io {
            path: path.to_string(),
            message: e.to_string(),
        }
    }
}
