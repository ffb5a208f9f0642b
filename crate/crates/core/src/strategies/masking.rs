//! Bijective identifier aliasing and its inverse.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::sql::{lex_lenient, Dialect, SqlArtifact, Token, TokenKind};

use super::prune::minify_text;
use super::{OptimizedContext, StrategyError, StrategyId};

/// Identifier-to-alias bijection. Aliases are `<prefix>_<n>`, numbered from 1
/// in entry order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AliasMap {
    prefix: String,
    entries: Vec<(String, String)>,
}

impl AliasMap {
    pub fn prefix(&self) -> &str {
        &self.prefix
    }

    /// `(identifier, alias)` pairs in assignment order.
    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn alias_of(&self, identifier: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(id, _)| id == identifier)
            .map(|(_, a)| a.as_str())
    }

    pub fn identifier_of(&self, alias: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(_, a)| a == alias)
            .map(|(id, _)| id.as_str())
    }

    /// `true` when `word` has the shape of an alias under this prefix.
    fn looks_like_alias(&self, word: &str) -> bool {
        alias_shaped(word, &self.prefix)
    }
}

fn alias_shaped(word: &str, prefix: &str) -> bool {
    word.strip_prefix(prefix)
        .and_then(|rest| rest.strip_prefix('_'))
        .is_some_and(|n| !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit()))
}

/// Shortest repetition of `base` such that no token is shaped like one of its
/// aliases.
fn fresh_prefix(base: &str, tokens: &[Token]) -> String {
    let mut prefix = base.to_string();
    while tokens.iter().any(|t| t.kind.is_word() && alias_shaped(&t.text, &prefix)) {
        prefix.push_str(base);
    }
    prefix
}

pub fn mask_identifiers(artifact: &SqlArtifact) -> Result<(OptimizedContext, AliasMap), StrategyError> {
    mask_with_prefix(artifact, "X")
}

pub(crate) fn mask_with_prefix(
    artifact: &SqlArtifact,
    base_prefix: &str,
) -> Result<(OptimizedContext, AliasMap), StrategyError> {
    let minified = minify_text(artifact.text(), artifact.dialect());
    let tokens = lex_lenient(&minified, artifact.dialect());
    let identifiers: BTreeSet<&str> = tokens
        .iter()
        .filter(|t| t.kind == TokenKind::Identifier)
        .map(|t| t.text.as_str())
        .collect();
    let prefix = fresh_prefix(base_prefix, &tokens);
    if identifiers.is_empty() {
        let map = AliasMap {
            prefix,
            entries: Vec::new(),
        };
        let fallback = OptimizedContext::new(minified, StrategyId::IdentifierMasking).with_alias_map(map);
        return Err(StrategyError::NoMaskableIdentifiers {
            fallback: Box::new(fallback),
        });
    }
    let mut ordered: Vec<&str> = identifiers.into_iter().collect();
    ordered.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    let entries: Vec<(String, String)> = ordered
        .iter()
        .enumerate()
        .map(|(i, id)| (id.to_string(), format!("{prefix}_{}", i + 1)))
        .collect();
    let lookup: HashMap<&str, &str> = entries.iter().map(|(i, a)| (i.as_str(), a.as_str())).collect();
    let masked: String = tokens
        .iter()
        .map(|t| match t.kind {
            TokenKind::Identifier => lookup[t.text.as_str()],
            _ => t.text.as_str(),
        })
        .collect();
    let map = AliasMap { prefix, entries };
    let ctx = OptimizedContext::new(masked, StrategyId::IdentifierMasking).with_alias_map(map.clone());
    Ok((ctx, map))
}

/// Restores identifiers in generated text. Aliases inside string literals
/// stay as they are, except in dollar-quoted bodies, which hold code.
pub fn demask(generated: &str, map: &AliasMap) -> String {
    demask_with_warnings(generated, map).0
}

/// As [`demask`], also returning one warning per alias-shaped word that the
/// map does not know.
pub fn demask_with_warnings(generated: &str, map: &AliasMap) -> (String, Vec<String>) {
    if map.is_empty() {
        return (generated.to_string(), Vec::new());
    }
    let mut warnings = Vec::new();
    let out = demask_into(generated, map, &mut warnings);
    (out, warnings)
}

fn demask_into(text: &str, map: &AliasMap, warnings: &mut Vec<String>) -> String {
    let mut out = String::with_capacity(text.len());
    for tok in lex_lenient(text, Dialect::Postgres) {
        match tok.kind {
            TokenKind::Identifier | TokenKind::Keyword => match map.identifier_of(&tok.text) {
                Some(id) => out.push_str(id),
                None => {
                    if map.looks_like_alias(&tok.text) {
                        warnings.push(format!("unknown alias '{}'", tok.text));
                    }
                    out.push_str(&tok.text);
                }
            },
            TokenKind::StringLiteral if tok.text.starts_with('$') => {
                out.push_str(&demask_dollar_body(&tok.text, map, warnings));
            }
            _ => out.push_str(&tok.text),
        }
    }
    out
}

fn demask_dollar_body(literal: &str, map: &AliasMap, warnings: &mut Vec<String>) -> String {
    let Some(close) = literal[1..].find('$') else {
        return literal.to_string();
    };
    let tag = &literal[..close + 2];
    match literal[tag.len()..].strip_suffix(tag) {
        Some(inner) => format!("{tag}{}{tag}", demask_into(inner, map, warnings)),
        None => literal.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategies::minify;

    fn mask(s: &str) -> (String, AliasMap) {
        let (ctx, map) = mask_identifiers(&SqlArtifact::oracle(s)).unwrap();
        (ctx.prompt_text().to_string(), map)
    }

    #[test]
    fn equal_length_ties_break_lexicographically() {
        let (text, map) = mask("SELECT user_name FROM app_users");
        assert_eq!(text, "SELECT X_2 FROM X_1");
        assert_eq!(
            map.entries(),
            &[
                ("app_users".to_string(), "X_1".to_string()),
                ("user_name".to_string(), "X_2".to_string())
            ]
        );
        assert_eq!(demask(&text, &map), "SELECT user_name FROM app_users");
    }

    #[test]
    fn keyword_only_input() {
        let err = mask_identifiers(&SqlArtifact::oracle("SELECT 1")).unwrap_err();
        match err {
            StrategyError::NoMaskableIdentifiers { fallback } => {
                assert_eq!(fallback.prompt_text(), "SELECT 1");
                assert!(fallback.alias_map().is_some_and(AliasMap::is_empty));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn longer_name_is_never_split() {
        let src = "SELECT USER_ID, USER FROM t WHERE USER_ID = USER";
        let (text, map) = mask(src);
        assert_eq!(map.alias_of("USER_ID"), Some("X_1"));
        assert_eq!(map.alias_of("USER"), Some("X_2"));
        assert!(!text.contains("_ID"));
        assert_eq!(demask(&text, &map), minify(&SqlArtifact::oracle(src)).prompt_text());
    }

    #[test]
    fn prefix_extends_when_taken() {
        let (text, map) = mask("SELECT X_1, a FROM t");
        assert_eq!(map.prefix(), "XX");
        assert_eq!(text, "SELECT XX_1,XX_2 FROM XX_3");
    }

    #[test]
    fn literals_and_quoted_names_are_untouched() {
        let (text, map) = mask(r#"SELECT "t", 't' FROM t"#);
        assert_eq!(text, r#"SELECT "t",'t' FROM X_1"#);
        assert_eq!(demask("SELECT 'X_1' FROM X_1", &map), "SELECT 'X_1' FROM t");
    }

    #[test]
    fn dollar_bodies_are_demasked() {
        let (_, map) = mask("SELECT a FROM t");
        let out = demask("DO $$ BEGIN UPDATE X_2 SET X_1 = 1; END $$;", &map);
        assert_eq!(out, "DO $$ BEGIN UPDATE t SET a = 1; END $$;");
    }

    #[test]
    fn unknown_aliases_warn() {
        let (_, map) = mask("SELECT a FROM t");
        let (out, warnings) = demask_with_warnings("SELECT X_9 FROM X_2", &map);
        assert_eq!(out, "SELECT X_9 FROM t");
        assert_eq!(warnings.len(), 1);
        assert_eq!(demask("SELECT X_1", &AliasMap::default()), "SELECT X_1");
    }
}
