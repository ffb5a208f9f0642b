//! Schema-anchor extraction and the metadata-augmented prompt.

use serde::{Deserialize, Serialize};

use crate::sql::{lex_lenient, plsql_ratio, split_statements, SqlArtifact, StatementKind, Token};

use super::prune::minify_text;
use super::{OptimizedContext, StrategyId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetadataVector {
    pub object_kind: String,
    pub object_name: Option<String>,
    pub referenced_tables: Vec<String>,
    pub column_count: Option<usize>,
    pub plsql_percentage: f64,
    pub has_exception_handlers: bool,
}

impl MetadataVector {
    /// Single-line form: `META kind=<k> name=<n> cols=<c> refs=<t1,t2>
    /// plsql=<p> exc=<bool>`, omitting unknown fields.
    pub fn serialize(&self) -> String {
        let mut out = format!("META kind={}", self.object_kind);
        if let Some(name) = &self.object_name {
            out.push_str(&format!(" name={name}"));
        }
        if let Some(cols) = self.column_count {
            out.push_str(&format!(" cols={cols}"));
        }
        if !self.referenced_tables.is_empty() {
            out.push_str(&format!(" refs={}", self.referenced_tables.join(",")));
        }
        let p = (self.plsql_percentage * 10.0).round() / 10.0;
        out.push_str(&format!(" plsql={p} exc={}", self.has_exception_handlers));
        out
    }
}

fn kind_label(kind: StatementKind) -> &'static str {
    match kind {
        StatementKind::AnonymousBlock => "BLOCK",
        StatementKind::Procedure => "PROCEDURE",
        StatementKind::Function => "FUNCTION",
        StatementKind::PackageSpec => "PACKAGE",
        StatementKind::PackageBody => "PACKAGE_BODY",
        StatementKind::Trigger => "TRIGGER",
        StatementKind::TypeSpec => "TYPE",
        StatementKind::TypeBody => "TYPE_BODY",
        StatementKind::Table => "TABLE",
        StatementKind::Index => "INDEX",
        StatementKind::View => "VIEW",
        StatementKind::MaterializedView => "MVIEW",
        StatementKind::Sequence => "SEQUENCE",
        StatementKind::AlterTable => "ALTER",
        StatementKind::Query => "QUERY",
        StatementKind::Dml => "DML",
        StatementKind::Slash | StatementKind::Other => "OTHER",
    }
}

const OBJECT_WORDS: &[&str] = &["TABLE", "INDEX", "VIEW", "SEQUENCE", "PROCEDURE", "FUNCTION", "PACKAGE", "TRIGGER", "TYPE"];

/// Dotted name starting at `sig[k]`; returns the name and the index after it.
fn dotted_name(sig: &[&Token], mut k: usize) -> Option<(String, usize)> {
    let first = sig.get(k)?;
    if !is_name(first) {
        return None;
    }
    let mut name = first.text.clone();
    k += 1;
    while sig.get(k).is_some_and(|t| t.is_punct(".")) && sig.get(k + 1).is_some_and(|t| is_name(t)) {
        name.push('.');
        name.push_str(&sig[k + 1].text);
        k += 2;
    }
    Some((name, k))
}

fn is_name(t: &Token) -> bool {
    matches!(
        t.kind,
        crate::sql::TokenKind::Identifier | crate::sql::TokenKind::QuotedIdentifier
    )
}

fn object_name(sig: &[&Token]) -> Option<String> {
    if !sig.first().is_some_and(|t| t.is_word_ci("CREATE")) {
        return None;
    }
    let k = sig.iter().position(|t| OBJECT_WORDS.iter().any(|w| t.is_word_ci(w)))?;
    let mut k = k + 1;
    if sig.get(k).is_some_and(|t| t.is_word_ci("BODY")) {
        k += 1;
    }
    if sig.get(k).is_some_and(|t| t.is_word_ci("IF")) {
        k += 3;
    }
    dotted_name(sig, k).map(|(n, _)| n)
}

fn column_count(sig: &[&Token]) -> Option<usize> {
    let open = sig.iter().position(|t| t.is_punct("("))?;
    let mut depth = 0;
    let mut count = 0;
    let mut element_start = true;
    for t in &sig[open..] {
        if t.is_punct("(") {
            depth += 1;
            if depth == 1 {
                continue;
            }
        } else if t.is_punct(")") {
            depth -= 1;
            if depth == 0 {
                break;
            }
        } else if depth == 1 && t.is_punct(",") {
            element_start = true;
            continue;
        }
        if depth == 1 && element_start {
            element_start = false;
            let constraint = ["CONSTRAINT", "PRIMARY", "UNIQUE", "FOREIGN", "CHECK"]
                .iter()
                .any(|w| t.is_word_ci(w));
            if !constraint {
                count += 1;
            }
        }
    }
    Some(count)
}

fn referenced_tables(sig: &[&Token], kind: StatementKind, own: Option<&str>) -> Vec<String> {
    let mut refs: Vec<String> = Vec::new();
    let mut push = |name: String| {
        if Some(name.as_str()) != own && !refs.contains(&name) {
            refs.push(name);
        }
    };
    let mut seen_on = false;
    let mut k = 0;
    while k < sig.len() {
        let t = sig[k];
        let prev = k.checked_sub(1).map(|p| sig[p]);
        let list = t.is_word_ci("FROM") || t.is_word_ci("USING");
        let single = t.is_word_ci("JOIN")
            || t.is_word_ci("REFERENCES")
            || (t.is_word_ci("UPDATE") && prev.is_none_or(|p| !p.is_word_ci("FOR") && !p.is_word_ci("OR") && !p.is_word_ci("BEFORE") && !p.is_word_ci("AFTER")))
            || (t.is_word_ci("INTO") && prev.is_some_and(|p| p.is_word_ci("INSERT") || p.is_word_ci("MERGE")))
            || (t.is_word_ci("ON")
                && !seen_on
                && matches!(kind, StatementKind::Index | StatementKind::Trigger));
        if t.is_word_ci("ON") {
            seen_on = true;
        }
        if !(list || single) {
            k += 1;
            continue;
        }
        k += 1;
        while let Some((name, next)) = dotted_name(sig, k) {
            push(name);
            k = next;
            if !list {
                break;
            }
            // optional alias, then another list item after a comma
            if sig.get(k).is_some_and(|t| is_name(t)) {
                k += 1;
            }
            if sig.get(k).is_some_and(|t| t.is_punct(",")) {
                k += 1;
            } else {
                break;
            }
        }
    }
    refs
}

/// Extracts schema anchors from the first statement of the artifact; the
/// exception-handler flag and PL/SQL share cover the whole text.
pub fn extract_metadata(artifact: &SqlArtifact) -> MetadataVector {
    let tokens = lex_lenient(artifact.text(), artifact.dialect());
    let statements = split_statements(&tokens, artifact.dialect());
    let first = statements.iter().find(|s| s.kind != StatementKind::Slash);
    let all_sig: Vec<&Token> = tokens.iter().filter(|t| !t.kind.is_trivia()).collect();
    let has_exception_handlers = all_sig
        .windows(2)
        .any(|w| w[0].is_word_ci("EXCEPTION") && w[1].is_word_ci("WHEN"));
    let plsql_percentage = plsql_ratio(artifact).unwrap_or(0.0);
    let Some(stmt) = first else {
        return MetadataVector {
            object_kind: "OTHER".into(),
            object_name: None,
            referenced_tables: Vec::new(),
            column_count: None,
            plsql_percentage,
            has_exception_handlers,
        };
    };
    let sig: Vec<&Token> = tokens[stmt.start..stmt.end]
        .iter()
        .filter(|t| !t.kind.is_trivia())
        .collect();
    let object_name = object_name(&sig);
    let column_count = match stmt.kind {
        StatementKind::Table => column_count(&sig),
        _ => None,
    };
    let referenced_tables = referenced_tables(&sig, stmt.kind, object_name.as_deref());
    MetadataVector {
        object_kind: kind_label(stmt.kind).into(),
        object_name,
        referenced_tables,
        column_count,
        plsql_percentage,
        has_exception_handlers,
    }
}

/// Metadata line, a newline, then the minified code.
pub fn augment_metadata(artifact: &SqlArtifact) -> OptimizedContext {
    let meta = extract_metadata(artifact).serialize();
    let code = minify_text(artifact.text(), artifact.dialect());
    OptimizedContext::new(format!("{meta}\n{code}"), StrategyId::Metadata)
}
