//! TOML run configuration.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::gateway::HttpConfig;
use crate::metrics::{CodeBleuWeights, TokenSimilarityAdjudicator};
use crate::sql::HeuristicCounter;
use crate::strategies::{StrategyConfig, SubstitutionDictionary, DEFAULT_SYSTEM_PROMPT};

use super::policy::{BudgetConfig, MigrationContext, Objective};
use super::run::{QualityGates, RunSettings};
use super::PipelineError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendChoice {
    #[default]
    Replay,
    Mock,
    Http,
}

impl FromStr for BackendChoice {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "replay" => Ok(BackendChoice::Replay),
            "mock" => Ok(BackendChoice::Mock),
            "http" => Ok(BackendChoice::Http),
            other => Err(PipelineError::Config(format!("unknown backend '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BudgetSection {
    pub max_total_tokens: Option<usize>,
    pub output_reserve: Option<usize>,
}

/// File-level settings. Every key is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub model: String,
    pub temperature: f64,
    pub system_prompt: String,
    pub backend: BackendChoice,
    pub cache: Option<PathBuf>,
    pub objective: Objective,
    pub alias_prefix: String,
    /// `[keyword phrase, replacement]` pairs; absent means the default set.
    pub dictionary: Option<SubstitutionDictionary>,
    pub weights: CodeBleuWeights,
    pub gates: QualityGates,
    pub budget: BudgetSection,
    pub context: MigrationContext,
    pub http: HttpConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            model: "gpt-4o".to_string(),
            temperature: 0.0,
            system_prompt: DEFAULT_SYSTEM_PROMPT.to_string(),
            backend: BackendChoice::default(),
            cache: None,
            objective: Objective::default(),
            alias_prefix: "X".to_string(),
            dictionary: None,
            weights: CodeBleuWeights::default(),
            gates: QualityGates::default(),
            budget: BudgetSection::default(),
            context: MigrationContext::default(),
            http: HttpConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, PipelineError> {
        let config: Self = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path.display(), e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let w = self.weights;
        if !(0.0..=1.0).contains(&w.alpha) || !(0.0..=1.0).contains(&w.beta) || (w.alpha + w.beta - 1.0).abs() > 1e-9 {
            return Err(PipelineError::Config("weights alpha and beta must lie in [0, 1] and sum to 1".into()));
        }
        if !(0.0..=1.0).contains(&self.gates.min_semantic_match) {
            return Err(PipelineError::Config("gates.min_semantic_match must lie in [0, 1]".into()));
        }
        if self.alias_prefix.is_empty() || !self.alias_prefix.chars().all(|c| c.is_ascii_alphabetic()) {
            return Err(PipelineError::Config("alias_prefix must be non-empty ASCII letters".into()));
        }
        if let (Some(max), Some(reserve)) = (self.budget.max_total_tokens, self.budget.output_reserve) {
            BudgetConfig::new(max, reserve)?;
        }
        if self.budget.max_total_tokens == Some(0) {
            return Err(PipelineError::InvalidBudget("max_total_tokens must be positive".into()));
        }
        Ok(())
    }

    pub fn run_settings(&self) -> RunSettings {
        RunSettings {
            strategy_config: StrategyConfig {
                dictionary: self.dictionary.clone().unwrap_or_default(),
                alias_prefix: self.alias_prefix.clone(),
                counter: Arc::new(HeuristicCounter),
            },
            system_prompt: self.system_prompt.clone(),
            model_name: self.model.clone(),
            temperature: self.temperature,
            context: self.context.clone(),
            gates: self.gates,
            max_total_tokens: self.budget.max_total_tokens,
            output_reserve: self.budget.output_reserve,
            weights: self.weights,
            adjudicator: Arc::new(TokenSimilarityAdjudicator),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        assert_eq!(PipelineConfig::from_toml_str("").unwrap(), PipelineConfig::default());
    }

    #[test]
    fn full_file() {
        let text = r#"
model = "m1"
backend = "mock"
objective = "cost-critical"
dictionary = [["END LOOP", "EL:"]]

[weights]
alpha = 0.7
beta = 0.3

[gates]
min_semantic_match = 0.9

[budget]
max_total_tokens = 4000
output_reserve = 1000

[context]
migration_rules = "NUMBER -> NUMERIC"

[http]
endpoint = "http://localhost:9/v1/chat"
"#;
        let c = PipelineConfig::from_toml_str(text).unwrap();
        assert_eq!(c.backend, BackendChoice::Mock);
        assert_eq!(c.objective, Objective::CostCritical);
        assert_eq!(c.dictionary.as_ref().unwrap().pairs().len(), 1);
        assert_eq!(c.http.api_key_env, "LLM_API_KEY");
        let s = c.run_settings();
        assert_eq!(s.max_total_tokens, Some(4000));
        assert_eq!(s.gates.min_semantic_match, 0.9);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(PipelineConfig::from_toml_str("[weights]\nalpha = 0.7\nbeta = 0.7").is_err());
        assert!(PipelineConfig::from_toml_str("[budget]\nmax_total_tokens = 10\noutput_reserve = 10").is_err());
        assert!(PipelineConfig::from_toml_str("colour = 1").is_err());
        assert!(PipelineConfig::from_toml_str("dictionary = [[\"A\", \"x\"], [\"a\", \"y\"]]").is_err());
    }
}
