//! SQL substrate shared by every strategy and metric: lexing, a lightweight
//! parser with canonical rendering, token counting and structural profiling.

mod ast;
mod count;
pub mod keywords;
mod lexer;
mod parser;
mod structure;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ast::{
    join_compact, prune_nodes, render, subtree_fingerprints, subtree_fingerprints_folded, AstNode,
    NodeKind,
};
pub use count::{count_tokens, HeuristicCounter, TokenCount, TokenCounter};
pub use lexer::{concat, lex, lex_lenient, tokens_fuse, Token, TokenKind};
pub use parser::{parse, ParseFailure};
pub use structure::{
    physical_clause_tokens, plsql_ratio, procedural_tokens, split_statements, StatementKind,
    StatementSpan,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dialect {
    Oracle,
    Postgres,
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dialect::Oracle => "oracle",
            Dialect::Postgres => "postgres",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SqlError {
    #[error("unterminated string or quoted identifier starting at byte {offset}")]
    UnterminatedString { offset: usize },
    #[error("unterminated block comment starting at byte {offset}")]
    UnterminatedComment { offset: usize },
    #[error(transparent)]
    Parse(#[from] ParseFailure),
    #[error("artifact has no significant tokens")]
    EmptyArtifact,
}

/// A unit of SQL source in a fixed dialect.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SqlArtifact {
    id: String,
    text: String,
    dialect: Dialect,
}

impl SqlArtifact {
    pub fn new(id: impl Into<String>, text: impl Into<String>, dialect: Dialect) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            dialect,
        }
    }

    pub fn oracle(text: impl Into<String>) -> Self {
        Self::new("inline", text, Dialect::Oracle)
    }

    pub fn postgres(text: impl Into<String>) -> Self {
        Self::new("inline", text, Dialect::Postgres)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn dialect(&self) -> Dialect {
        self.dialect
    }

    /// Admission check for pipeline runs: the text must not be blank.
    pub fn is_admissible(&self) -> bool {
        !self.text.trim().is_empty()
    }
}
