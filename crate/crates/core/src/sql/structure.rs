//! Token-level statement structure: statement boundaries, procedural regions
//! and Oracle physical-storage clauses.
//!
//! Everything here works on the raw token stream rather than the parse tree,
//! so it also covers text the parser rejects.

use super::lexer::{lex, Token, TokenKind};
use super::{Dialect, SqlArtifact, SqlError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatementKind {
    AnonymousBlock,
    Procedure,
    Function,
    PackageSpec,
    PackageBody,
    Trigger,
    TypeSpec,
    TypeBody,
    Table,
    Index,
    View,
    MaterializedView,
    Sequence,
    AlterTable,
    Query,
    Dml,
    /// An Oracle `/` line that executes the SQL*Plus buffer.
    Slash,
    Other,
}

impl StatementKind {
    pub fn is_routine(self) -> bool {
        matches!(
            self,
            StatementKind::Procedure
                | StatementKind::Function
                | StatementKind::PackageSpec
                | StatementKind::PackageBody
                | StatementKind::Trigger
                | StatementKind::TypeBody
        )
    }

    fn has_physical_clauses(self) -> bool {
        matches!(
            self,
            StatementKind::Table
                | StatementKind::Index
                | StatementKind::MaterializedView
                | StatementKind::AlterTable
        )
    }
}

/// One statement as a range of token indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatementSpan {
    pub kind: StatementKind,
    /// First significant token.
    pub start: usize,
    /// One past the last significant token (the `;` when present).
    pub end: usize,
    /// For routines, the `IS`/`AS` keyword that ends the header.
    pub header_end: Option<usize>,
    /// First token of the procedural region, if the statement has one.
    pub body_start: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Frame {
    Decl,
    Body,
    Case,
    Package,
}

fn significant(tokens: &[Token]) -> Vec<usize> {
    tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| !t.kind.is_trivia())
        .map(|(i, _)| i)
        .collect()
}

/// `true` when the `/` at `idx` stands alone on its line.
fn is_slash_line(tokens: &[Token], idx: usize) -> bool {
    if tokens[idx].text != "/" {
        return false;
    }
    let breaks_line = |t: &Token| t.kind == TokenKind::Whitespace && t.text.contains('\n');
    let line_start = match tokens[..idx].iter().rev().find(|t| !is_inline_gap(t)) {
        None => true,
        Some(t) => breaks_line(t),
    };
    let line_end = match tokens[idx + 1..].iter().find(|t| !is_inline_gap(t)) {
        None => true,
        Some(t) => breaks_line(t),
    };
    line_start && line_end
}

/// Trivia that never spans a line break.
fn is_inline_gap(t: &Token) -> bool {
    match t.kind {
        TokenKind::Whitespace => !t.text.contains('\n'),
        TokenKind::LineComment => true,
        TokenKind::BlockComment => !t.text.contains('\n'),
        _ => false,
    }
}

fn word_at<'t>(tokens: &'t [Token], sig: &[usize], pos: usize) -> Option<String> {
    let t: &'t Token = tokens.get(*sig.get(pos)?)?;
    t.kind.is_word().then(|| t.upper())
}

fn classify(tokens: &[Token], sig: &[usize], at: usize, dialect: Dialect) -> (StatementKind, usize) {
    let w = |k: usize| word_at(tokens, sig, at + k);
    let Some(first) = w(0) else {
        return (StatementKind::Other, 0);
    };
    match first.as_str() {
        "DECLARE" if dialect == Dialect::Oracle => (StatementKind::AnonymousBlock, 0),
        "BEGIN" if dialect == Dialect::Oracle => {
            let next = sig.get(at + 1).map(|&i| &tokens[i]);
            let is_txn = next.is_none_or(|t| {
                t.is_punct(";") || t.is_word_ci("WORK") || t.is_word_ci("TRANSACTION")
            });
            if is_txn {
                (StatementKind::Other, 0)
            } else {
                (StatementKind::AnonymousBlock, 0)
            }
        }
        "SELECT" | "WITH" => (StatementKind::Query, 0),
        "INSERT" | "UPDATE" | "DELETE" | "MERGE" => (StatementKind::Dml, 0),
        "ALTER" => match w(1).as_deref() {
            Some("TABLE") | Some("INDEX") => (StatementKind::AlterTable, 0),
            _ => (StatementKind::Other, 0),
        },
        "CREATE" => {
            let mut k = 1;
            let mut materialized = false;
            while let Some(word) = w(k) {
                match word.as_str() {
                    "OR" | "REPLACE" | "EDITIONABLE" | "NONEDITIONABLE" | "GLOBAL" | "TEMPORARY"
                    | "TEMP" | "UNIQUE" | "BITMAP" | "FORCE" | "NOFORCE" | "UNLOGGED" => k += 1,
                    "MATERIALIZED" => {
                        materialized = true;
                        k += 1;
                    }
                    _ => break,
                }
            }
            let kind = match w(k).as_deref() {
                Some("PROCEDURE") => StatementKind::Procedure,
                Some("FUNCTION") => StatementKind::Function,
                Some("TRIGGER") => StatementKind::Trigger,
                Some("PACKAGE") if w(k + 1).as_deref() == Some("BODY") => StatementKind::PackageBody,
                Some("PACKAGE") => StatementKind::PackageSpec,
                Some("TYPE") if w(k + 1).as_deref() == Some("BODY") => StatementKind::TypeBody,
                Some("TYPE") => StatementKind::TypeSpec,
                Some("TABLE") => StatementKind::Table,
                Some("INDEX") => StatementKind::Index,
                Some("VIEW") if materialized => StatementKind::MaterializedView,
                Some("VIEW") => StatementKind::View,
                Some("SEQUENCE") => StatementKind::Sequence,
                _ => StatementKind::Other,
            };
            (kind, k)
        }
        _ => (StatementKind::Other, 0),
    }
}

/// Splits a token stream into statements.
///
/// Procedural statements (anonymous blocks, routines, packages, triggers)
/// end at the `;` that follows the `END` closing their outermost block, so
/// semicolons inside bodies and declaration sections never split them.
pub fn split_statements(tokens: &[Token], dialect: Dialect) -> Vec<StatementSpan> {
    let sig = significant(tokens);
    let mut out = Vec::new();
    let mut p = 0;
    while p < sig.len() {
        let start = sig[p];
        if dialect == Dialect::Oracle && is_slash_line(tokens, start) {
            out.push(StatementSpan {
                kind: StatementKind::Slash,
                start,
                end: start + 1,
                header_end: None,
                body_start: None,
            });
            p += 1;
            continue;
        }
        let (kind, _) = classify(tokens, &sig, p, dialect);
        let mut frames: Vec<Frame> = Vec::new();
        let mut parens = 0i32;
        let mut header_end = None;
        let mut body_start = None;
        let mut pending_routine = false;
        let mut q = p;
        let mut end = None;
        while q < sig.len() {
            let idx = sig[q];
            let tok = &tokens[idx];
            let next = sig.get(q + 1).map(|&i| &tokens[i]);
            if q > p
                && frames.is_empty()
                && dialect == Dialect::Oracle
                && is_slash_line(tokens, idx)
            {
                end = Some(sig[q - 1] + 1);
                break;
            }
            if tok.is_punct("(") {
                parens += 1;
            } else if tok.is_punct(")") {
                parens -= 1;
            } else if tok.is_punct(";") && parens <= 0 {
                if frames.is_empty() {
                    end = Some(idx + 1);
                    q += 1;
                    break;
                }
                pending_routine = false;
            } else if tok.kind.is_word() && !(q == p && kind == StatementKind::Other) {
                match tok.upper().as_str() {
                    "IS" | "AS"
                        if parens == 0
                            && kind.is_routine()
                            && header_end.is_none()
                            && frames.is_empty()
                            && kind != StatementKind::Trigger =>
                    {
                        header_end = Some(idx);
                        let external = next.is_none_or(|t| {
                            t.kind == TokenKind::StringLiteral
                                || t.is_word_ci("LANGUAGE")
                                || t.is_word_ci("EXTERNAL")
                        });
                        if !external {
                            body_start = sig.get(q + 1).copied();
                            frames.push(match kind {
                                StatementKind::PackageSpec
                                | StatementKind::PackageBody
                                | StatementKind::TypeBody => Frame::Package,
                                _ => Frame::Decl,
                            });
                        }
                    }
                    "IS" | "AS" if pending_routine && parens == 0 => {
                        pending_routine = false;
                        frames.push(Frame::Decl);
                    }
                    "PROCEDURE" | "FUNCTION"
                        if matches!(frames.last(), Some(Frame::Decl | Frame::Package)) =>
                    {
                        pending_routine = true;
                    }
                    "DECLARE" if dialect == Dialect::Oracle => {
                        body_start.get_or_insert(idx);
                        frames.push(Frame::Decl);
                    }
                    "BEGIN" if dialect == Dialect::Oracle => {
                        body_start.get_or_insert(idx);
                        match frames.last_mut() {
                            Some(top @ (Frame::Decl | Frame::Package)) => *top = Frame::Body,
                            _ => frames.push(Frame::Body),
                        }
                    }
                    "CASE" => {
                        let after_end = q > p && tokens[sig[q - 1]].is_word_ci("END");
                        if !after_end {
                            frames.push(Frame::Case);
                        }
                    }
                    "END" => {
                        let closes_other = next.is_some_and(|t| {
                            t.is_word_ci("IF") || t.is_word_ci("LOOP")
                        });
                        if !closes_other {
                            frames.pop();
                        }
                    }
                    _ => {}
                }
            }
            q += 1;
        }
        let end = end.unwrap_or_else(|| sig[q.min(sig.len()) - 1] + 1);
        let body_start = match kind {
            StatementKind::AnonymousBlock => Some(start),
            k if k.is_routine() && dialect == Dialect::Oracle => body_start,
            _ => None,
        };
        out.push(StatementSpan {
            kind,
            start,
            end,
            header_end,
            body_start,
        });
        // resume at the first significant token at or after `end`
        p = sig.partition_point(|&i| i < end);
    }
    out
}

/// Marks the significant tokens that sit inside procedural regions:
/// `DECLARE … END` and `BEGIN … END` blocks and the bodies (after `IS`/`AS`)
/// of procedures, functions, package bodies and triggers.
pub fn procedural_tokens(tokens: &[Token], dialect: Dialect) -> Vec<bool> {
    let mut marks = vec![false; tokens.len()];
    for stmt in split_statements(tokens, dialect) {
        let in_scope = matches!(
            stmt.kind,
            StatementKind::AnonymousBlock
                | StatementKind::Procedure
                | StatementKind::Function
                | StatementKind::PackageBody
                | StatementKind::Trigger
        );
        if let (true, Some(from)) = (in_scope, stmt.body_start) {
            for (i, mark) in marks.iter_mut().enumerate().take(stmt.end).skip(from) {
                *mark = !tokens[i].kind.is_trivia();
            }
        }
    }
    marks
}

/// Percentage of significant (non-whitespace, non-comment) tokens that lie in
/// procedural regions.
pub fn plsql_ratio(artifact: &SqlArtifact) -> Result<f64, SqlError> {
    let tokens = lex(artifact.text(), artifact.dialect())?;
    let marks = procedural_tokens(&tokens, artifact.dialect());
    let total = tokens.iter().filter(|t| !t.kind.is_trivia()).count();
    if total == 0 {
        return Err(SqlError::EmptyArtifact);
    }
    let inside = marks.iter().filter(|&&m| m).count();
    Ok(100.0 * inside as f64 / total as f64)
}

/// Marks tokens that belong to removable Oracle physical-storage clauses:
/// `TABLESPACE <name>`, `STORAGE (…)`, `PCTFREE|PCTUSED|INITRANS|MAXTRANS <n>`,
/// `LOGGING`, `NOLOGGING`, `COMPRESS [n]`, `NOCOMPRESS`, `CACHE`, `NOCACHE`.
///
/// Only table, index and materialized-view DDL is scanned, and a keyword right
/// after `(` or `,` is a column name, not a clause.
pub fn physical_clause_tokens(tokens: &[Token], dialect: Dialect) -> Vec<bool> {
    let mut marks = vec![false; tokens.len()];
    for stmt in split_statements(tokens, dialect) {
        if !stmt.kind.has_physical_clauses() {
            continue;
        }
        let sig: Vec<usize> = (stmt.start..stmt.end)
            .filter(|&i| !tokens[i].kind.is_trivia())
            .collect();
        let mut k = 0;
        while k < sig.len() {
            let tok = &tokens[sig[k]];
            let prev_is_list_start = k > 0 && {
                let prev = &tokens[sig[k - 1]];
                prev.is_punct("(") || prev.is_punct(",")
            };
            if tok.kind != TokenKind::Keyword || prev_is_list_start {
                k += 1;
                continue;
            }
            let next = sig.get(k + 1).map(|&i| &tokens[i]);
            let len = match tok.upper().as_str() {
                "TABLESPACE" => match next {
                    Some(n) if n.kind.is_word() || n.kind == TokenKind::QuotedIdentifier => 2,
                    _ => 0,
                },
                "STORAGE" => match next {
                    Some(n) if n.is_punct("(") => {
                        let mut depth = 0i32;
                        let mut len = 0;
                        for (off, &i) in sig[k + 1..].iter().enumerate() {
                            if tokens[i].is_punct("(") {
                                depth += 1;
                            } else if tokens[i].is_punct(")") {
                                depth -= 1;
                                if depth == 0 {
                                    len = off + 2;
                                    break;
                                }
                            }
                        }
                        len
                    }
                    _ => 0,
                },
                "PCTFREE" | "PCTUSED" | "INITRANS" | "MAXTRANS" => match next {
                    Some(n) if n.kind == TokenKind::Number => 2,
                    _ => 0,
                },
                "COMPRESS" => match next {
                    Some(n) if n.kind == TokenKind::Number => 2,
                    _ => 1,
                },
                "LOGGING" | "NOLOGGING" | "NOCOMPRESS" | "CACHE" | "NOCACHE" => 1,
                _ => 0,
            };
            if len == 0 {
                k += 1;
                continue;
            }
            for &i in &sig[k..k + len] {
                marks[i] = true;
            }
            k += len;
        }
    }
    marks
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Token> {
        lex(s, Dialect::Oracle).unwrap()
    }

    fn kinds(s: &str) -> Vec<StatementKind> {
        split_statements(&toks(s), Dialect::Oracle)
            .into_iter()
            .map(|s| s.kind)
            .collect()
    }

    #[test]
    fn splits_plain_statements() {
        assert_eq!(
            kinds("SELECT 1 FROM dual; INSERT INTO t VALUES (1);"),
            vec![StatementKind::Query, StatementKind::Dml]
        );
    }

    #[test]
    fn procedure_body_semicolons_do_not_split() {
        let src = "CREATE OR REPLACE PROCEDURE p IS v NUMBER; BEGIN v := 1; IF v > 0 THEN NULL; END IF; END p;\n/\nSELECT 1 FROM dual";
        assert_eq!(
            kinds(src),
            vec![StatementKind::Procedure, StatementKind::Slash, StatementKind::Query]
        );
    }

    #[test]
    fn nested_local_procedure() {
        let src = "CREATE PROCEDURE p IS PROCEDURE inner IS BEGIN NULL; END; BEGIN inner; END; SELECT 1 FROM dual;";
        assert_eq!(kinds(src), vec![StatementKind::Procedure, StatementKind::Query]);
    }

    #[test]
    fn package_body_with_routines() {
        let src = "CREATE PACKAGE BODY pk AS PROCEDURE a IS BEGIN NULL; END a; FUNCTION f RETURN NUMBER IS BEGIN RETURN 1; END; END pk; SELECT 1 FROM dual;";
        assert_eq!(kinds(src), vec![StatementKind::PackageBody, StatementKind::Query]);
    }

    #[test]
    fn case_expression_balances() {
        let src = "DECLARE x NUMBER; BEGIN x := CASE WHEN 1 = 1 THEN 1 ELSE 0 END; END; SELECT 1 FROM dual;";
        assert_eq!(kinds(src), vec![StatementKind::AnonymousBlock, StatementKind::Query]);
    }

    #[test]
    fn block_ratio_is_full() {
        let a = SqlArtifact::oracle("BEGIN NULL; END;");
        assert_eq!(plsql_ratio(&a).unwrap(), 100.0);
    }

    #[test]
    fn plain_sql_ratio_is_zero() {
        let a = SqlArtifact::oracle("SELECT a FROM t");
        assert_eq!(plsql_ratio(&a).unwrap(), 0.0);
    }

    #[test]
    fn half_ddl_half_body() {
        // Outside: CREATE TABLE t ( a INT ) ; CREATE PROCEDURE p IS  -> 8 + 4 = 12
        // Inside:  BEGIN x := 1 ; y := - 2 ; END ;                  -> 12
        let src = "CREATE TABLE t (a INT); CREATE PROCEDURE p IS BEGIN x := 1; y := -2; END;";
        let a = SqlArtifact::oracle(src);
        assert_eq!(plsql_ratio(&a).unwrap(), 50.0);
    }

    #[test]
    fn empty_artifact_ratio_errors() {
        let a = SqlArtifact::oracle("  -- nothing\n");
        assert_eq!(plsql_ratio(&a), Err(SqlError::EmptyArtifact));
    }

    #[test]
    fn physical_clauses_marked() {
        let t = toks("CREATE TABLE t (a INT, cache INT) TABLESPACE users PCTFREE 10 STORAGE (INITIAL 64K NEXT 1M) NOLOGGING;");
        let marks = physical_clause_tokens(&t, Dialect::Oracle);
        let removed: Vec<&str> = t
            .iter()
            .zip(&marks)
            .filter(|(_, &m)| m)
            .map(|(t, _)| t.text.as_str())
            .collect();
        assert_eq!(
            removed,
            vec![
                "TABLESPACE", "users", "PCTFREE", "10", "STORAGE", "(", "INITIAL", "64", "K",
                "NEXT", "1", "M", ")", "NOLOGGING"
            ]
        );
    }

    #[test]
    fn sequence_cache_is_not_physical() {
        let t = toks("CREATE SEQUENCE s CACHE 20;");
        assert!(physical_clause_tokens(&t, Dialect::Oracle).iter().all(|m| !m));
    }

    #[test]
    fn postgres_function_body_is_a_string() {
        let t = lex(
            "CREATE FUNCTION f() RETURNS int AS $$ BEGIN RETURN 1; END; $$ LANGUAGE plpgsql; SELECT 1;",
            Dialect::Postgres,
        )
        .unwrap();
        let spans = split_statements(&t, Dialect::Postgres);
        assert_eq!(spans.len(), 2);
        assert_eq!(spans[0].kind, StatementKind::Function);
    }
}
