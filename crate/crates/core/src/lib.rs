//! Token-optimization strategies, evaluation metrics and an evaluation
//! pipeline for LLM-driven Oracle to PostgreSQL migration.

pub mod sql;
pub mod strategies;
pub mod metrics;
pub mod gateway;
pub mod pipeline;
