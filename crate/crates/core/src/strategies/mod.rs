//! The twelve token-optimization strategies and their shared types.

mod distill;
mod dsl;
mod masking;
mod metadata;
mod prune;
mod refactor;
mod route;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sql::{HeuristicCounter, ParseFailure, SqlArtifact, SqlError, TokenCount, TokenCounter};

pub use distill::{distill, BODY_MARKER};
pub use dsl::{dsl_compress, SubstitutionDictionary};
pub use masking::{demask, demask_with_warnings, mask_identifiers, AliasMap};
pub use metadata::{augment_metadata, extract_metadata, MetadataVector};
pub use prune::{ast_minify, minify, prune};
pub use refactor::refactor_quotes;
pub use route::{eq11_branch, route_adaptive, RouteBranch};

/// Sentinel first line of [`C_MIN`].
pub const C_MIN_SENTINEL: &str = "#OUTPUT-CONSTRAINTS v1";

/// Output-constraint block appended to the system prompt.
pub const C_MIN: &str = "#OUTPUT-CONSTRAINTS v1\nReturn ONLY the migrated PostgreSQL code.\nNo markdown fences. No comments. No explanations.\nUse single spaces; no blank lines.";

/// Default system prompt.
pub const DEFAULT_SYSTEM_PROMPT: &str = "You are a database migration engine. Translate the given Oracle SQL/PL-SQL to semantically equivalent PostgreSQL.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StrategyId {
    Baseline,
    Pruning,
    Minification,
    Dsl,
    Metadata,
    Refactoring,
    Distillation,
    Adaptive,
    AstMinification,
    IdentifierMasking,
    PromptRestricted,
    Hybrid,
}

impl StrategyId {
    pub const ALL: [StrategyId; 12] = [
        StrategyId::Baseline,
        StrategyId::Pruning,
        StrategyId::Minification,
        StrategyId::Dsl,
        StrategyId::Metadata,
        StrategyId::Refactoring,
        StrategyId::Distillation,
        StrategyId::Adaptive,
        StrategyId::AstMinification,
        StrategyId::IdentifierMasking,
        StrategyId::PromptRestricted,
        StrategyId::Hybrid,
    ];

    /// Command-line name.
    pub fn cli_name(self) -> &'static str {
        match self {
            StrategyId::Baseline => "baseline",
            StrategyId::Pruning => "context-pruning",
            StrategyId::Minification => "minification",
            StrategyId::Dsl => "semantic-compression",
            StrategyId::Metadata => "metadata-augmentation",
            StrategyId::Refactoring => "context-refactoring",
            StrategyId::Distillation => "schema-distillation",
            StrategyId::Adaptive => "adaptive-routing",
            StrategyId::AstMinification => "ast-minification",
            StrategyId::IdentifierMasking => "identifier-masking",
            StrategyId::PromptRestricted => "output-constraint-enforcement",
            StrategyId::Hybrid => "hybrid-optimization",
        }
    }

    /// Row label used in result tables.
    pub fn report_name(self) -> &'static str {
        match self {
            StrategyId::Baseline => "Original",
            StrategyId::Pruning => "Pruning",
            StrategyId::Minification => "Minification",
            StrategyId::Dsl => "DSL",
            StrategyId::Metadata => "Metadata",
            StrategyId::Refactoring => "Context Refactoring",
            StrategyId::Distillation => "Distillation",
            StrategyId::Adaptive => "Adaptive",
            StrategyId::AstMinification => "AST-Based Minification",
            StrategyId::IdentifierMasking => "Identifier Masking",
            StrategyId::PromptRestricted => "Prompt Restricted",
            StrategyId::Hybrid => "Hybrid Optimization",
        }
    }

    fn aliases(self) -> &'static [&'static str] {
        match self {
            StrategyId::Baseline => &["original"],
            StrategyId::Pruning => &["pruning"],
            StrategyId::Minification => &["minify"],
            StrategyId::Dsl => &["dsl", "dsl-compression"],
            StrategyId::Metadata => &["metadata"],
            StrategyId::Refactoring => &["refactoring", "refactor"],
            StrategyId::Distillation => &["distillation", "distill"],
            StrategyId::Adaptive => &["adaptive"],
            StrategyId::AstMinification => &["ast-based-minification", "ast-minify"],
            StrategyId::IdentifierMasking => &["masking"],
            StrategyId::PromptRestricted => &["prompt-restricted", "output-constraints"],
            StrategyId::Hybrid => &["hybrid"],
        }
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown strategy '{0}'")]
pub struct UnknownStrategy(pub String);

impl FromStr for StrategyId {
    type Err = UnknownStrategy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let needle = s.trim().to_ascii_lowercase().replace('_', "-");
        StrategyId::ALL
            .into_iter()
            .find(|id| id.cli_name() == needle || id.aliases().contains(&needle.as_str()))
            .ok_or_else(|| UnknownStrategy(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StrategyError {
    #[error(transparent)]
    Sql(#[from] SqlError),
    #[error("replacement '{replacement}' already occurs in the input")]
    ReplacementCollision { replacement: String },
    #[error("invalid substitution dictionary: {0}")]
    InvalidDictionary(String),
    #[error("no table or routine header to retain")]
    NothingToDistill,
    #[error("AST minification needs parseable input: {0}")]
    ParseRequired(ParseFailure),
    /// The input contains keywords only. Carries the minified context with an
    /// empty alias map so callers can continue.
    #[error("input has no maskable identifiers")]
    NoMaskableIdentifiers { fallback: Box<OptimizedContext> },
}

/// The prompt payload produced by a strategy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptimizedContext {
    prompt_text: String,
    strategy: StrategyId,
    input_tokens: TokenCount,
    alias_map: Option<AliasMap>,
    system_prompt_constraints: bool,
}

impl OptimizedContext {
    pub fn new(prompt_text: impl Into<String>, strategy: StrategyId) -> Self {
        Self::counted(prompt_text, strategy, &HeuristicCounter)
    }

    pub fn counted(prompt_text: impl Into<String>, strategy: StrategyId, counter: &dyn TokenCounter) -> Self {
        let prompt_text = prompt_text.into();
        Self {
            input_tokens: counter.count(&prompt_text),
            prompt_text,
            strategy,
            alias_map: None,
            system_prompt_constraints: false,
        }
    }

    pub fn prompt_text(&self) -> &str {
        &self.prompt_text
    }

    pub fn strategy(&self) -> StrategyId {
        self.strategy
    }

    pub fn input_tokens(&self) -> TokenCount {
        self.input_tokens
    }

    pub fn alias_map(&self) -> Option<&AliasMap> {
        self.alias_map.as_ref()
    }

    pub fn system_prompt_constraints(&self) -> bool {
        self.system_prompt_constraints
    }

    pub(crate) fn with_alias_map(mut self, map: AliasMap) -> Self {
        self.alias_map = Some(map);
        self
    }

    pub(crate) fn with_strategy(mut self, strategy: StrategyId) -> Self {
        self.strategy = strategy;
        self
    }

    pub(crate) fn with_constraints(mut self) -> Self {
        self.system_prompt_constraints = true;
        self
    }

    fn recounted(mut self, counter: &dyn TokenCounter) -> Self {
        self.input_tokens = counter.count(&self.prompt_text);
        self
    }
}

/// Immutable settings shared by all strategies.
#[derive(Clone)]
pub struct StrategyConfig {
    pub dictionary: SubstitutionDictionary,
    pub alias_prefix: String,
    pub counter: Arc<dyn TokenCounter>,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self {
            dictionary: SubstitutionDictionary::default(),
            alias_prefix: "X".to_string(),
            counter: Arc::new(HeuristicCounter),
        }
    }
}

impl fmt::Debug for StrategyConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StrategyConfig")
            .field("dictionary", &self.dictionary)
            .field("alias_prefix", &self.alias_prefix)
            .finish_non_exhaustive()
    }
}

pub fn apply_baseline(artifact: &SqlArtifact) -> OptimizedContext {
    OptimizedContext::new(artifact.text(), StrategyId::Baseline)
}

/// Appends [`C_MIN`] to `base` unless it is already present.
pub fn constrained_system_prompt(base: &str) -> String {
    if base.lines().any(|l| l == C_MIN_SENTINEL) {
        return base.to_string();
    }
    if base.is_empty() {
        return C_MIN.to_string();
    }
    format!("{base}\n{C_MIN}")
}

/// Runs strategy `id` on `artifact`.
///
/// A keyword-only input under identifier masking is not an error here: the
/// minified text is returned with an empty alias map.
pub fn apply_strategy(
    id: StrategyId,
    artifact: &SqlArtifact,
    config: &StrategyConfig,
) -> Result<OptimizedContext, StrategyError> {
    let ctx = match id {
        StrategyId::Baseline => apply_baseline(artifact),
        StrategyId::Pruning => prune(artifact),
        StrategyId::Minification => minify(artifact),
        StrategyId::Dsl => dsl_compress(artifact, &config.dictionary)?,
        StrategyId::Metadata => augment_metadata(artifact),
        StrategyId::Refactoring => refactor_quotes(artifact),
        StrategyId::Distillation => distill(artifact)?,
        StrategyId::Adaptive => route_adaptive(artifact, &config.dictionary)?,
        StrategyId::AstMinification => ast_minify(artifact)?,
        StrategyId::IdentifierMasking => {
            match masking::mask_with_prefix(artifact, &config.alias_prefix) {
                Ok((ctx, _)) => ctx,
                Err(StrategyError::NoMaskableIdentifiers { fallback }) => *fallback,
                Err(e) => return Err(e),
            }
        }
        StrategyId::PromptRestricted => {
            OptimizedContext::new(artifact.text(), StrategyId::PromptRestricted).with_constraints()
        }
        StrategyId::Hybrid => route_adaptive(artifact, &config.dictionary)?
            .with_strategy(StrategyId::Hybrid)
            .with_constraints(),
    };
    Ok(ctx.recounted(config.counter.as_ref()))
}
