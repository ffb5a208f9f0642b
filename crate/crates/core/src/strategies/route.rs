//! Adaptive routing on the procedural share of the input.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::sql::{plsql_ratio, SqlArtifact};

use super::{dsl_compress, minify, refactor_quotes, OptimizedContext, StrategyError, StrategyId, SubstitutionDictionary};

/// Strategy chosen by adaptive routing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RouteBranch {
    Dsl,
    Refactoring,
    Minification,
}

impl RouteBranch {
    pub fn strategy(self) -> StrategyId {
        match self {
            RouteBranch::Dsl => StrategyId::Dsl,
            RouteBranch::Refactoring => StrategyId::Refactoring,
            RouteBranch::Minification => StrategyId::Minification,
        }
    }
}

impl fmt::Display for RouteBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RouteBranch::Dsl => "dsl",
            RouteBranch::Refactoring => "refactoring",
            RouteBranch::Minification => "minification",
        })
    }
}

/// DSL above 80 % PL/SQL, quote refactoring at exactly 0 %, minification
/// otherwise.
pub fn eq11_branch(plsql_percentage: f64) -> RouteBranch {
    if plsql_percentage > 80.0 {
        RouteBranch::Dsl
    } else if plsql_percentage == 0.0 {
        RouteBranch::Refactoring
    } else {
        RouteBranch::Minification
    }
}

pub fn route_adaptive(
    artifact: &SqlArtifact,
    dict: &SubstitutionDictionary,
) -> Result<OptimizedContext, StrategyError> {
    let p = plsql_ratio(artifact)?;
    let routed = match eq11_branch(p) {
        RouteBranch::Dsl => dsl_compress(artifact, dict)?,
        RouteBranch::Refactoring => refactor_quotes(artifact),
        RouteBranch::Minification => minify(artifact),
    };
    Ok(routed.with_strategy(StrategyId::Adaptive))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds() {
        assert_eq!(eq11_branch(0.0), RouteBranch::Refactoring);
        assert_eq!(eq11_branch(40.0), RouteBranch::Minification);
        assert_eq!(eq11_branch(80.0), RouteBranch::Minification);
        assert_eq!(eq11_branch(80.5), RouteBranch::Dsl);
        assert_eq!(eq11_branch(100.0), RouteBranch::Dsl);
    }

    #[test]
    fn pure_ddl_goes_to_refactoring() {
        let a = SqlArtifact::oracle("CREATE TABLE \"T\" (\"A\" INT);");
        let dict = SubstitutionDictionary::default();
        let out = route_adaptive(&a, &dict).unwrap();
        assert_eq!(out.prompt_text(), refactor_quotes(&a).prompt_text());
        assert_eq!(out.strategy(), StrategyId::Adaptive);
    }

    #[test]
    fn block_goes_to_dsl() {
        let a = SqlArtifact::oracle("BEGIN IF x > 0 THEN y := 1; END IF; END;");
        let dict = SubstitutionDictionary::default();
        let out = route_adaptive(&a, &dict).unwrap();
        assert_eq!(out.prompt_text(), dsl_compress(&a, &dict).unwrap().prompt_text());
    }
}
