//! Quote stripping for Oracle-canonical identifiers.

use crate::sql::keywords::is_reserved;
use crate::sql::{join_compact, lex_lenient, SqlArtifact, TokenKind};

use super::prune::minify_text;
use super::{OptimizedContext, StrategyId};

/// Inner text of `"X"` when the quotes can go: a plain upper-case name that
/// is not a reserved word.
fn strippable(quoted: &str) -> Option<&str> {
    let inner = quoted.strip_prefix('"')?.strip_suffix('"')?;
    let mut chars = inner.chars();
    let first = chars.next()?;
    let plain = first.is_ascii_alphabetic()
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '$' | '#'));
    let upper = !inner.chars().any(|c| c.is_ascii_lowercase());
    (plain && upper && !is_reserved(inner)).then_some(inner)
}

pub fn refactor_quotes(artifact: &SqlArtifact) -> OptimizedContext {
    let dialect = artifact.dialect();
    let minified = minify_text(artifact.text(), dialect);
    let tokens = lex_lenient(&minified, dialect);
    let mut items = Vec::with_capacity(tokens.len());
    let mut space_before = false;
    for tok in &tokens {
        if tok.kind == TokenKind::Whitespace {
            space_before = true;
            continue;
        }
        let item = match (tok.kind, strippable(&tok.text)) {
            (TokenKind::QuotedIdentifier, Some(inner)) => (TokenKind::Identifier, inner, space_before),
            _ => (tok.kind, tok.text.as_str(), space_before),
        };
        items.push(item);
        space_before = false;
    }
    OptimizedContext::new(join_compact(items, Some(dialect)), StrategyId::Refactoring)
}
