//! Migration context, structural profiling, the token budget and the
//! strategy-selection policy.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::sql::{
    lex, physical_clause_tokens, plsql_ratio, split_statements, SqlArtifact, SqlError, StatementKind,
    TokenCount, TokenKind,
};
use crate::strategies::{OptimizedContext, StrategyId};

use super::PipelineError;

/// Optional context sent ahead of the SQL payload, one tagged line per
/// source line.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MigrationContext {
    pub specification_notes: Option<String>,
    pub migration_rules: Option<String>,
    pub schema_context: Option<String>,
}

impl MigrationContext {
    pub fn is_empty(&self) -> bool {
        self.specification_notes.is_none() && self.migration_rules.is_none() && self.schema_context.is_none()
    }

    /// `#SPEC`, `#RULES` and `#SCHEMA` lines, each ending in a newline.
    pub fn header(&self) -> String {
        let mut out = String::new();
        for (tag, field) in [
            ("#SPEC", &self.specification_notes),
            ("#RULES", &self.migration_rules),
            ("#SCHEMA", &self.schema_context),
        ] {
            if let Some(text) = field {
                for line in text.lines() {
                    out.push_str(tag);
                    if !line.is_empty() {
                        out.push(' ');
                        out.push_str(line);
                    }
                    out.push('\n');
                }
            }
        }
        out
    }

    /// The full user prompt for an optimized payload.
    pub fn prompt_for(&self, payload: &str) -> String {
        format!("{}{payload}", self.header())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    SemanticCritical,
    #[default]
    Balanced,
    CostCritical,
}

impl Objective {
    pub const ALL: [Objective; 3] = [Objective::SemanticCritical, Objective::Balanced, Objective::CostCritical];

    pub fn name(self) -> &'static str {
        match self {
            Objective::SemanticCritical => "semantic-critical",
            Objective::Balanced => "balanced",
            Objective::CostCritical => "cost-critical",
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Objective {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Objective::ALL
            .into_iter()
            .find(|o| o.name() == s.trim().to_ascii_lowercase().replace('_', "-"))
            .ok_or_else(|| PipelineError::Config(format!("unknown objective '{s}'")))
    }
}

/// Identifiers at least this long count as long.
pub const LONG_IDENTIFIER_CHARS: usize = 20;

/// Features of an input that drive strategy selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralProfile {
    pub plsql_percentage: f64,
    pub has_long_identifiers: bool,
    pub has_physical_params: bool,
    pub is_ddl_only: bool,
    pub objective: Objective,
}

fn is_ddl(kind: StatementKind) -> bool {
    matches!(
        kind,
        StatementKind::Table
            | StatementKind::Index
            | StatementKind::View
            | StatementKind::MaterializedView
            | StatementKind::Sequence
            | StatementKind::AlterTable
            | StatementKind::TypeSpec
    )
}

impl StructuralProfile {
    pub fn of(artifact: &SqlArtifact, objective: Objective) -> Result<Self, SqlError> {
        let dialect = artifact.dialect();
        let tokens = lex(artifact.text(), dialect)?;
        let has_long_identifiers = tokens.iter().any(|t| match t.kind {
            TokenKind::Identifier => t.text.chars().count() >= LONG_IDENTIFIER_CHARS,
            TokenKind::QuotedIdentifier => t.text.chars().count().saturating_sub(2) >= LONG_IDENTIFIER_CHARS,
            _ => false,
        });
        let has_physical_params = physical_clause_tokens(&tokens, dialect).into_iter().any(|m| m);
        let kinds: Vec<StatementKind> = split_statements(&tokens, dialect)
            .into_iter()
            .map(|s| s.kind)
            .filter(|k| *k != StatementKind::Slash)
            .collect();
        let is_ddl_only = !kinds.is_empty() && kinds.iter().all(|&k| is_ddl(k));
        Ok(Self {
            plsql_percentage: plsql_ratio(artifact)?,
            has_long_identifiers,
            has_physical_params,
            is_ddl_only,
            objective,
        })
    }
}

/// Pruning when semantics matter most, distillation only for cost-critical
/// pure DDL, adaptive routing otherwise.
pub fn select_strategy(profile: &StructuralProfile) -> StrategyId {
    match profile.objective {
        Objective::SemanticCritical => StrategyId::Pruning,
        Objective::Balanced => StrategyId::Adaptive,
        Objective::CostCritical if profile.is_ddl_only && profile.plsql_percentage == 0.0 => {
            StrategyId::Distillation
        }
        Objective::CostCritical => StrategyId::Adaptive,
    }
}

/// Strategies to try in order, starting with `strategy` and ending at
/// the baseline.
pub fn fallback_ladder(strategy: StrategyId) -> Vec<StrategyId> {
    use StrategyId::*;
    match strategy {
        Baseline => vec![Baseline],
        Distillation | Dsl | IdentifierMasking => vec![strategy, Adaptive, Pruning, Baseline],
        Adaptive => vec![Adaptive, Pruning, Baseline],
        Pruning => vec![Pruning, Baseline],
        other => vec![other, Baseline],
    }
}

/// Token cap on input plus reserved output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetConfig {
    max_total_tokens: usize,
    output_reserve: usize,
}

impl BudgetConfig {
    pub fn new(max_total_tokens: usize, output_reserve: usize) -> Result<Self, PipelineError> {
        if output_reserve == 0 || output_reserve >= max_total_tokens {
            return Err(PipelineError::InvalidBudget(format!(
                "output reserve {output_reserve} must be positive and below the cap {max_total_tokens}"
            )));
        }
        Ok(Self {
            max_total_tokens,
            output_reserve,
        })
    }

    /// Reserve of `ceil(1.1 × input_tokens)`.
    pub fn default_reserve(input_tokens: TokenCount) -> usize {
        (input_tokens.value() * 11).div_ceil(10).max(1)
    }

    pub fn max_total_tokens(&self) -> usize {
        self.max_total_tokens
    }

    pub fn output_reserve(&self) -> usize {
        self.output_reserve
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BudgetExceeded {
    pub overshoot: usize,
}

/// Passes when input tokens plus the output reserve fit the cap.
pub fn enforce_budget(context: &OptimizedContext, budget: &BudgetConfig) -> Result<(), BudgetExceeded> {
    let need = context.input_tokens().value() + budget.output_reserve;
    if need <= budget.max_total_tokens {
        Ok(())
    } else {
        Err(BudgetExceeded {
            overshoot: need - budget.max_total_tokens,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategies::apply_baseline;

    fn ctx_with(n: usize) -> OptimizedContext {
        // each `a` is one token
        apply_baseline(&SqlArtifact::oracle(vec!["a"; n].join(" ")))
    }

    #[test]
    fn budget_arithmetic() {
        let b = BudgetConfig::new(1000, 600).unwrap();
        assert_eq!(enforce_budget(&ctx_with(500), &b), Err(BudgetExceeded { overshoot: 100 }));
        assert_eq!(enforce_budget(&ctx_with(300), &b), Ok(()));
        assert_eq!(enforce_budget(&ctx_with(400), &b), Ok(()));
        assert!(BudgetConfig::new(100, 100).is_err());
        assert_eq!(BudgetConfig::default_reserve(TokenCount(10)), 11);
        assert_eq!(BudgetConfig::default_reserve(TokenCount(11)), 13);
    }

    #[test]
    fn context_header() {
        let c = MigrationContext {
            specification_notes: Some("keep names\nno views".into()),
            migration_rules: None,
            schema_context: Some("t(a int)".into()),
        };
        assert_eq!(c.prompt_for("SELECT 1"), "#SPEC keep names\n#SPEC no views\n#SCHEMA t(a int)\nSELECT 1");
        assert_eq!(MigrationContext::default().prompt_for("SELECT 1"), "SELECT 1");
    }

    #[test]
    fn profile_fields() {
        let a = SqlArtifact::oracle("CREATE TABLE customer_account_balance (a INT) TABLESPACE users;");
        let p = StructuralProfile::of(&a, Objective::CostCritical).unwrap();
        assert!(p.is_ddl_only && p.has_long_identifiers && p.has_physical_params);
        assert_eq!(p.plsql_percentage, 0.0);
        assert_eq!(select_strategy(&p), StrategyId::Distillation);
        let b = SqlArtifact::oracle("BEGIN NULL; END;\n/");
        let p = StructuralProfile::of(&b, Objective::CostCritical).unwrap();
        assert!(!p.is_ddl_only && !p.has_long_identifiers && !p.has_physical_params);
        assert_eq!(select_strategy(&p), StrategyId::Adaptive);
    }

    #[test]
    fn ladders_end_at_baseline() {
        for id in StrategyId::ALL {
            let l = fallback_ladder(id);
            assert_eq!(l[0], id);
            assert_eq!(*l.last().unwrap(), StrategyId::Baseline);
            assert!(l.len() <= 4);
        }
    }

    #[test]
    fn objective_names() {
        for o in Objective::ALL {
            assert_eq!(o.name().parse::<Objective>().unwrap(), o);
        }
        assert!("cheap".parse::<Objective>().is_err());
    }
}
