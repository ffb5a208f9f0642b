//! Structural similarity between generated and reference PostgreSQL.

use std::collections::HashMap;

use crate::sql::{lex_lenient, parse, subtree_fingerprints_folded, Dialect, TokenKind};

/// Multiplier applied to the fallback score of unparseable output.
pub const UNPARSEABLE_PENALTY: f64 = 0.5;

/// Scores a generated query that does not parse. Implementations may defer
/// to a human reviewer; the result must lie in `[0, 1]`.
pub trait Adjudicator: Send + Sync {
    fn adjudicate(&self, generated: &str, reference: &str) -> f64;
}

/// Automated fallback: token-sequence similarity times
/// [`UNPARSEABLE_PENALTY`].
#[derive(Debug, Clone, Copy, Default)]
pub struct TokenSimilarityAdjudicator;

impl Adjudicator for TokenSimilarityAdjudicator {
    fn adjudicate(&self, generated: &str, reference: &str) -> f64 {
        token_similarity(generated, reference) * UNPARSEABLE_PENALTY
    }
}

fn normalized_tokens(text: &str) -> Vec<String> {
    lex_lenient(text, Dialect::Postgres)
        .into_iter()
        .filter(|t| !t.kind.is_trivia())
        .map(|t| match t.kind {
            TokenKind::Keyword | TokenKind::Identifier => t.text.to_lowercase(),
            _ => t.text,
        })
        .collect()
}

/// `2·LCS / (|a| + |b|)` over significant tokens, keywords and plain
/// identifiers case-folded. Two empty inputs score 1.
pub fn token_similarity(a: &str, b: &str) -> f64 {
    let a = normalized_tokens(a);
    let b = normalized_tokens(b);
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut row = vec![0usize; b.len() + 1];
    for x in &a {
        for (j, y) in b.iter().enumerate() {
            row[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(row[j]) };
        }
        std::mem::swap(&mut prev, &mut row);
    }
    2.0 * prev[b.len()] as f64 / (a.len() + b.len()) as f64
}

fn dice(a: &[String], b: &[String]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for fp in a {
        *counts.entry(fp).or_default() += 1;
    }
    let mut common = 0usize;
    for fp in b {
        if let Some(c) = counts.get_mut(fp.as_str()) {
            if *c > 0 {
                *c -= 1;
                common += 1;
            }
        }
    }
    2.0 * common as f64 / (a.len() + b.len()) as f64
}

/// [`semantic_match_with`] using [`TokenSimilarityAdjudicator`].
pub fn semantic_match(generated: &str, reference: &str) -> f64 {
    semantic_match_with(generated, reference, &TokenSimilarityAdjudicator)
}

/// Dice coefficient over subtree fingerprint multisets when both sides parse
/// as PostgreSQL; otherwise the adjudicator's verdict, clamped to `[0, 1]`.
pub fn semantic_match_with(generated: &str, reference: &str, adjudicator: &dyn Adjudicator) -> f64 {
    match (parse(generated, Dialect::Postgres), parse(reference, Dialect::Postgres)) {
        (Ok(g), Ok(r)) => dice(&subtree_fingerprints_folded(&g), &subtree_fingerprints_folded(&r)),
        _ => adjudicator.adjudicate(generated, reference).clamp(0.0, 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_formatting() {
        assert_eq!(semantic_match("SELECT a FROM t", "SELECT a FROM t"), 1.0);
        assert_eq!(semantic_match("SELECT a FROM t", "SELECT  a\nFROM t"), 1.0);
        assert_eq!(semantic_match("select A from T", "SELECT a FROM t"), 1.0);
    }

    #[test]
    fn unparseable_is_penalised() {
        let s = semantic_match("SELECT a FROM", "SELECT a FROM t");
        assert!((s - 0.5 * (2.0 * 3.0 / 7.0)).abs() < 1e-12);
    }

    #[test]
    fn custom_adjudicator() {
        struct Strict;
        impl Adjudicator for Strict {
            fn adjudicate(&self, _: &str, _: &str) -> f64 {
                7.0
            }
        }
        assert_eq!(semantic_match_with("SELECT", "SELECT 1", &Strict), 1.0);
    }

    #[test]
    fn lcs_similarity() {
        assert_eq!(token_similarity("a b c", "a c"), 0.8);
        assert_eq!(token_similarity("", ""), 1.0);
        assert_eq!(token_similarity("a", ""), 0.0);
    }
}
