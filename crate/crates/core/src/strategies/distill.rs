//! Schema distillation: table column lists and routine signatures only.

use crate::sql::{
    count_tokens, join_compact, lex_lenient, physical_clause_tokens, split_statements, Dialect,
    SqlArtifact, StatementKind, StatementSpan, Token, TokenKind,
};

use super::{OptimizedContext, StrategyError, StrategyId};

/// Stands in for an omitted routine body.
pub const BODY_MARKER: &str = "/*BODY OMITTED*/";

/// Words that end the data type of a column definition.
const COLUMN_TAIL: &[&str] = &[
    "NOT", "NULL", "DEFAULT", "PRIMARY", "UNIQUE", "REFERENCES", "CHECK", "CONSTRAINT",
    "GENERATED", "COLLATE", "ENABLE", "DISABLE", "AS",
];

const TABLE_CONSTRAINT: &[&str] = &["CONSTRAINT", "PRIMARY", "UNIQUE", "FOREIGN", "CHECK"];

type Piece<'a> = (TokenKind, &'a str);

fn joined(pieces: &[Piece<'_>]) -> String {
    join_compact(pieces.iter().map(|&(k, t)| (k, t, true)), Some(Dialect::Oracle))
}

fn table_columns<'a>(sig: &[&'a Token]) -> Vec<Piece<'a>> {
    let piece = |t: &&'a Token| (t.kind, t.text.as_str());
    let Some(open) = sig.iter().position(|t| t.is_punct("(")) else {
        let end = sig.iter().position(|t| t.is_word_ci("AS")).unwrap_or(sig.len());
        return sig[..end].iter().filter(|t| !t.is_punct(";")).map(piece).collect();
    };
    let mut out: Vec<Piece<'a>> = sig[..=open].iter().map(piece).collect();
    let mut elements: Vec<Vec<&'a Token>> = vec![Vec::new()];
    let mut depth = 0;
    for t in &sig[open + 1..] {
        if t.is_punct("(") {
            depth += 1;
        } else if t.is_punct(")") {
            if depth == 0 {
                break;
            }
            depth -= 1;
        } else if t.is_punct(",") && depth == 0 {
            elements.push(Vec::new());
            continue;
        }
        elements.last_mut().expect("non-empty").push(t);
    }
    let mut first = true;
    for element in elements {
        let Some(head) = element.first() else { continue };
        if TABLE_CONSTRAINT.iter().any(|w| head.is_word_ci(w)) {
            continue;
        }
        if !first {
            out.push((TokenKind::Punct, ","));
        }
        first = false;
        out.push(piece(head));
        let mut depth = 0;
        for t in &element[1..] {
            if depth == 0 && t.kind.is_word() && COLUMN_TAIL.iter().any(|w| t.is_word_ci(w)) {
                break;
            }
            if t.is_punct("(") {
                depth += 1;
            } else if t.is_punct(")") {
                depth -= 1;
            }
            out.push(piece(t));
        }
    }
    out.push((TokenKind::Punct, ")"));
    if sig.last().is_some_and(|t| t.is_punct(";")) {
        out.push((TokenKind::Punct, ";"));
    }
    out
}

/// Header through `IS`/`AS` (or up to the trigger body) plus the marker, or
/// the whole statement when that is no more expensive.
fn routine_signature<'a>(span: &StatementSpan, tokens: &'a [Token], keep: &[bool]) -> Vec<Piece<'a>> {
    let pieces = |from: usize, to: usize| -> Vec<Piece<'a>> {
        (from..to)
            .filter(|&i| keep[i])
            .map(|i| (tokens[i].kind, tokens[i].text.as_str()))
            .collect()
    };
    let full = pieces(span.start, span.end);
    let header_to = match (span.header_end, span.body_start) {
        (Some(h), _) => h + 1,
        (None, Some(b)) if span.kind == StatementKind::Trigger => b,
        _ => return full,
    };
    let mut header = pieces(span.start, header_to);
    header.push((TokenKind::BlockComment, BODY_MARKER));
    if count_tokens(&joined(&header)) <= count_tokens(&joined(&full)) {
        header
    } else {
        full
    }
}

/// Keeps table column lists (names and types) and routine signatures with
/// bodies replaced by [`BODY_MARKER`]; drops every other statement.
pub fn distill(artifact: &SqlArtifact) -> Result<OptimizedContext, StrategyError> {
    let dialect = artifact.dialect();
    let tokens = lex_lenient(artifact.text(), dialect);
    let physical = physical_clause_tokens(&tokens, dialect);
    let keep: Vec<bool> = tokens
        .iter()
        .zip(&physical)
        .map(|(t, &p)| !t.kind.is_trivia() && !p)
        .collect();
    let mut pieces: Vec<Piece<'_>> = Vec::new();
    for span in split_statements(&tokens, dialect) {
        match span.kind {
            StatementKind::Table => {
                let sig: Vec<&Token> = (span.start..span.end)
                    .filter(|&i| keep[i])
                    .map(|i| &tokens[i])
                    .collect();
                pieces.extend(table_columns(&sig));
            }
            k if k.is_routine() || k == StatementKind::TypeSpec => {
                pieces.extend(routine_signature(&span, &tokens, &keep));
            }
            _ => {}
        }
    }
    if pieces.is_empty() {
        return Err(StrategyError::NothingToDistill);
    }
    Ok(OptimizedContext::new(joined(&pieces), StrategyId::Distillation))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(s: &str) -> Result<String, StrategyError> {
        distill(&SqlArtifact::oracle(s)).map(|c| c.prompt_text().to_string())
    }

    #[test]
    fn procedure_signature() {
        let body: String = (0..100).map(|i| format!("  v := v + {i};\n")).collect();
        let src = format!("CREATE PROCEDURE p(a IN NUMBER) IS\n  v NUMBER := 0;\nBEGIN\n{body}END;");
        assert_eq!(run(&src).unwrap(), "CREATE PROCEDURE p(a IN NUMBER) IS /*BODY OMITTED*/");
    }

    #[test]
    fn table_columns_only() {
        assert_eq!(run("CREATE TABLE t (a INT PRIMARY KEY) TABLESPACE u").unwrap(), "CREATE TABLE t(a INT)");
        assert_eq!(
            run("CREATE TABLE t (a NUMBER(10,2) NOT NULL, b VARCHAR2(20) DEFAULT 'x', CONSTRAINT pk PRIMARY KEY (a));").unwrap(),
            "CREATE TABLE t(a NUMBER(10,2),b VARCHAR2(20));"
        );
    }

    #[test]
    fn drops_everything_else() {
        let src = "CREATE INDEX ix ON t (a);\nGRANT SELECT ON t TO u;\nBEGIN NULL; END;\n/\nCREATE TABLE t (a INT);";
        assert_eq!(run(src).unwrap(), "CREATE TABLE t(a INT);");
    }

    #[test]
    fn trigger_keeps_header() {
        let body: String = (0..20).map(|i| format!(" :NEW.c{i} := SYSDATE;")).collect();
        let src = format!("CREATE TRIGGER trg BEFORE INSERT ON t FOR EACH ROW BEGIN{body} END;");
        assert_eq!(
            run(&src).unwrap(),
            "CREATE TRIGGER trg BEFORE INSERT ON t FOR EACH ROW /*BODY OMITTED*/"
        );
    }

    #[test]
    fn short_body_is_kept_when_cheaper() {
        let src = "CREATE PROCEDURE p IS BEGIN NULL; END;";
        let out = run(src).unwrap();
        assert!(count_tokens(&out) <= count_tokens(src));
    }

    #[test]
    fn nothing_to_keep() {
        assert_eq!(run("SELECT 1 FROM t"), Err(StrategyError::NothingToDistill));
    }
}
