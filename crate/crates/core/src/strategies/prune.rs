//! Comment and physical-clause pruning, whitespace minification and
//! AST-based minification.

use crate::sql::{
    concat, join_compact, lex_lenient, parse, physical_clause_tokens, prune_nodes, render,
    tokens_fuse, Dialect, SqlArtifact, Token, TokenKind,
};

use super::{OptimizedContext, StrategyError, StrategyId};

/// Drops comments and removable physical clauses, keeping the original
/// whitespace between surviving tokens.
///
/// Whitespace runs that end up adjacent merge into one (the first, or the
/// first containing a line break). A single space is inserted where two
/// tokens brought together by a removal would otherwise fuse.
pub(crate) fn pruned_tokens(text: &str, dialect: Dialect) -> Vec<Token> {
    let tokens = lex_lenient(text, dialect);
    let physical = if dialect == Dialect::Oracle {
        physical_clause_tokens(&tokens, dialect)
    } else {
        vec![false; tokens.len()]
    };
    let mut out: Vec<Token> = Vec::with_capacity(tokens.len());
    let mut removed_since_last = false;
    for (tok, phys) in tokens.into_iter().zip(physical) {
        if tok.kind.is_comment() || phys {
            removed_since_last = true;
            continue;
        }
        if tok.kind == TokenKind::Whitespace {
            match out.last_mut() {
                Some(prev) if prev.kind == TokenKind::Whitespace => {
                    if !prev.text.contains('\n') && tok.text.contains('\n') {
                        *prev = tok;
                    }
                }
                _ => out.push(tok),
            }
            continue;
        }
        if removed_since_last {
            if let Some(prev) = out.last() {
                if prev.kind != TokenKind::Whitespace && tokens_fuse(&prev.text, &tok.text, dialect) {
                    out.push(Token::new(TokenKind::Whitespace, " ", (0, 0)));
                }
            }
        }
        removed_since_last = false;
        out.push(tok);
    }
    while out.last().is_some_and(|t| t.kind == TokenKind::Whitespace) {
        out.pop();
    }
    let lead = out.iter().take_while(|t| t.kind == TokenKind::Whitespace).count();
    out.drain(..lead);
    out
}

pub(crate) fn prune_text(text: &str, dialect: Dialect) -> String {
    concat(&pruned_tokens(text, dialect))
}

/// Pruned text with every whitespace run collapsed to one space and spaces
/// next to operators and punctuation removed.
pub(crate) fn minify_text(text: &str, dialect: Dialect) -> String {
    let pruned = pruned_tokens(text, dialect);
    let mut items = Vec::with_capacity(pruned.len());
    let mut space_before = false;
    for tok in &pruned {
        if tok.kind == TokenKind::Whitespace {
            space_before = true;
            continue;
        }
        items.push((tok.kind, tok.text.as_str(), space_before));
        space_before = false;
    }
    join_compact(items, Some(dialect))
}

pub fn prune(artifact: &SqlArtifact) -> OptimizedContext {
    OptimizedContext::new(prune_text(artifact.text(), artifact.dialect()), StrategyId::Pruning)
}

pub fn minify(artifact: &SqlArtifact) -> OptimizedContext {
    OptimizedContext::new(
        minify_text(artifact.text(), artifact.dialect()),
        StrategyId::Minification,
    )
}

/// Parses, drops redundant nodes and renders the canonical compact form.
pub fn ast_minify(artifact: &SqlArtifact) -> Result<OptimizedContext, StrategyError> {
    let ast = parse(artifact.text(), artifact.dialect()).map_err(StrategyError::ParseRequired)?;
    Ok(OptimizedContext::new(
        render(&prune_nodes(&ast)),
        StrategyId::AstMinification,
    ))
}
