//! Seeded synthetic corpus of Oracle inputs with rule-based PostgreSQL
//! references.

use std::collections::HashSet;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::sql::keywords::is_reserved;
use crate::sql::{
    join_compact, lex, lex_lenient, physical_clause_tokens, split_statements, Dialect, StatementKind,
    StatementSpan, Token, TokenKind,
};

use super::MigrationCase;

/// Knobs controlling the shape of generated cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CorpusDials {
    /// Probability that a case is procedural (procedure, function or block).
    pub plsql_ratio: f64,
    /// Probability of a comment at each comment slot.
    pub comment_density: f64,
    /// Probability that a table or index statement carries physical clauses.
    pub storage_density: f64,
    pub min_identifier_len: usize,
    pub max_identifier_len: usize,
}

impl Default for CorpusDials {
    fn default() -> Self {
        Self {
            plsql_ratio: 0.5,
            comment_density: 0.3,
            storage_density: 0.3,
            min_identifier_len: 3,
            max_identifier_len: 24,
        }
    }
}

const SEGMENTS: &[&str] = &[
    "order", "customer", "account", "balance", "status", "amount", "region", "invoice", "product",
    "created", "updated", "item", "line", "price", "qty", "code", "total", "branch", "ledger", "entry",
    "payment", "supplier", "batch", "stock", "rate", "user", "dept", "emp", "salary", "hist", "audit",
];

const NOTES: &[&str] = &[
    "legacy column kept for reporting",
    "see ticket 4411",
    "do not drop: used by nightly batch",
    "values are in cents",
    "TODO remove after cutover",
];

const LITERALS: &[&str] = &["ACTIVE", "it''s done", "a -- not a comment", "/* not a comment */", "TABLESPACE users", "N/A"];

struct Gen<'a> {
    rng: ChaCha8Rng,
    dials: &'a CorpusDials,
    upper: bool,
    used: HashSet<String>,
}

fn plain_identifier(name: &str) -> bool {
    if is_reserved(name) || word_mapping(&name.to_ascii_uppercase()).is_some() {
        return false;
    }
    [Dialect::Oracle, Dialect::Postgres].iter().all(|&d| {
        matches!(lex(name, d).as_deref(), Ok([t]) if t.kind == TokenKind::Identifier)
    })
}

impl Gen<'_> {
    fn chance(&mut self, p: f64) -> bool {
        p > 0.0 && (p >= 1.0 || self.rng.random_bool(p))
    }

    fn raw_name(&mut self) -> String {
        let lo = self.dials.min_identifier_len.max(1);
        let hi = self.dials.max_identifier_len.max(lo);
        let target = self.rng.random_range(lo..=hi);
        if target <= 2 {
            let c = (b'a' + self.rng.random_range(0..26u8)) as char;
            return if target == 1 { c.to_string() } else { format!("{c}{}", self.rng.random_range(0..10)) };
        }
        let mut s = String::new();
        while s.len() < target {
            if !s.is_empty() {
                s.push('_');
            }
            s.push_str(SEGMENTS.choose(&mut self.rng).expect("segments"));
        }
        s.truncate(target);
        while s.ends_with('_') {
            s.pop();
            s.push(SEGMENTS.choose(&mut self.rng).expect("segments").as_bytes()[0] as char);
        }
        s
    }

    /// A fresh identifier, unique within the current case.
    fn name(&mut self) -> String {
        loop {
            let n = self.raw_name();
            let n = if self.upper { n.to_ascii_uppercase() } else { n };
            if plain_identifier(&n) && self.used.insert(n.to_ascii_lowercase()) {
                return n;
            }
        }
    }

    /// `base` with a suffix, so that one identifier is a prefix of another.
    fn extended(&mut self, base: &str) -> String {
        let suffix = if self.upper { "_ID" } else { "_id" };
        let n = format!("{base}{suffix}");
        if plain_identifier(&n) && self.used.insert(n.to_ascii_lowercase()) {
            n
        } else {
            self.name()
        }
    }

    fn literal(&mut self) -> &'static str {
        if self.dials.comment_density > 0.0 && self.chance(0.5) {
            LITERALS.choose(&mut self.rng).expect("literals")
        } else {
            LITERALS[0]
        }
    }

    fn line_comment(&mut self) -> String {
        if self.chance(self.dials.comment_density) {
            format!(" -- {}", NOTES.choose(&mut self.rng).expect("notes"))
        } else {
            String::new()
        }
    }

    fn block_comment(&mut self) -> String {
        if self.chance(self.dials.comment_density) {
            format!("/* {} */ ", NOTES.choose(&mut self.rng).expect("notes"))
        } else {
            String::new()
        }
    }

    fn physical(&mut self, table: bool) -> String {
        if !self.chance(self.dials.storage_density) {
            return String::new();
        }
        let ts = if self.upper { "USERS_DATA" } else { "users_data" };
        let mut clauses = vec![format!("TABLESPACE {ts}")];
        if table {
            clauses.push(format!("PCTFREE {}", self.rng.random_range(5..=20)));
            if self.chance(0.5) {
                clauses.push("STORAGE (INITIAL 65536 NEXT 1048576)".to_string());
            }
        }
        if self.chance(0.5) {
            clauses.push("NOLOGGING".to_string());
        }
        clauses.shuffle(&mut self.rng);
        format!("\n{}", clauses.join(" "))
    }

    fn table(&mut self) -> (String, String, Vec<String>) {
        let t = self.name();
        let id = self.name();
        let mut cols = vec![id.clone()];
        let mut s = format!("{}CREATE TABLE {t} ({}\n", self.block_comment(), self.line_comment());
        s.push_str(&format!("  {id} NUMBER(10) NOT NULL,{}\n", self.line_comment()));
        for _ in 0..self.rng.random_range(1..=4) {
            let c = if self.chance(0.3) {
                let base = cols.last().cloned().expect("non-empty");
                self.extended(&base)
            } else {
                self.name()
            };
            let ty = match self.rng.random_range(0..4) {
                0 => format!("VARCHAR2({}) DEFAULT '{}'", self.rng.random_range(10..=200), self.literal()),
                1 => "DATE".to_string(),
                2 => "NUMBER(12,2)".to_string(),
                _ => "NUMBER".to_string(),
            };
            s.push_str(&format!("  {}{c} {ty},{}\n", self.block_comment(), self.line_comment()));
            cols.push(c);
        }
        let pk = self.name();
        s.push_str(&format!("  CONSTRAINT {pk} PRIMARY KEY ({id})\n){};", self.physical(true)));
        (s, t, cols)
    }

    fn index(&mut self, t: &str, col: &str) -> String {
        let ix = self.name();
        format!("{}CREATE INDEX {ix} ON {t} ({col}){};", self.block_comment(), self.physical(false))
    }

    fn columns(&mut self) -> (String, Vec<String>) {
        let t = self.name();
        let n = self.rng.random_range(2..=4);
        let mut cols = vec![self.name()];
        for _ in 1..n {
            let c = if self.chance(0.3) {
                let base = cols[0].clone();
                self.extended(&base)
            } else {
                self.name()
            };
            cols.push(c);
        }
        (t, cols)
    }

    fn query(&mut self, t: &str, cols: &[String]) -> String {
        let alias = self.name();
        let lit = self.literal();
        format!(
            "{}SELECT {}, NVL({}, 0) AS {alias}{}\nFROM {t}\nWHERE {} = '{lit}' AND {} > {}\nORDER BY {};",
            self.block_comment(),
            cols[0],
            cols[cols.len() - 1],
            self.line_comment(),
            cols[0],
            cols[cols.len() - 1],
            self.rng.random_range(0..1000),
            cols[0],
        )
    }

    fn dml(&mut self, t: &str, cols: &[String]) -> String {
        let (a, b) = (&cols[0], &cols[cols.len() - 1]);
        let n = self.rng.random_range(1..500);
        match self.rng.random_range(0..3) {
            0 => format!("UPDATE {t} SET {b} = {b} + 1, {a} = SYSDATE WHERE {a} = {n};{}", self.line_comment()),
            1 => format!("INSERT INTO {t} ({a}, {b}) VALUES ({n}, '{}');{}", self.literal(), self.line_comment()),
            _ => format!("{}DELETE FROM {t} WHERE {a} < {n};", self.block_comment()),
        }
    }

    fn procedure(&mut self, t: &str, cols: &[String]) -> String {
        let (p, v) = (self.name(), self.name());
        let proc_name = self.name();
        let (id, c) = (&cols[0], &cols[cols.len() - 1]);
        format!(
            "CREATE OR REPLACE PROCEDURE {proc_name} ({p} IN NUMBER) IS{}\n  {v} NUMBER := 0;\nBEGIN\n  {}SELECT COUNT(*) INTO {v} FROM {t} WHERE {id} = {p};\n  IF {v} > 0 THEN{}\n    UPDATE {t} SET {c} = SYSDATE WHERE {id} = {p};\n  ELSE\n    INSERT INTO {t} ({id}) VALUES ({p});\n  END IF;\nEXCEPTION\n  WHEN OTHERS THEN\n    NULL;\nEND {proc_name};\n/",
            self.line_comment(),
            self.block_comment(),
            self.line_comment(),
        )
    }

    fn function(&mut self, t: &str, cols: &[String]) -> String {
        let (p, v) = (self.name(), self.name());
        let f = self.name();
        let c = &cols[cols.len() - 1];
        format!(
            "CREATE OR REPLACE FUNCTION {f} ({p} IN NUMBER) RETURN NUMBER IS\n  {v} NUMBER;{}\nBEGIN\n  {}SELECT NVL(MAX({c}), 0) INTO {v} FROM {t};\n  RETURN {v} * {p};\nEND;\n/",
            self.line_comment(),
            self.block_comment(),
        )
    }

    fn block(&mut self, t: &str, cols: &[String]) -> String {
        let (v, i) = (self.name(), self.name());
        let (id, c) = (&cols[0], &cols[cols.len() - 1]);
        format!(
            "DECLARE\n  {v} NUMBER := 0;{}\nBEGIN\n  FOR {i} IN 1..{} LOOP\n    {v} := {v} + {i};\n  END LOOP;\n  {}UPDATE {t} SET {c} = {v} WHERE {id} = 1;\nEND;\n/",
            self.line_comment(),
            self.rng.random_range(2..=50),
            self.block_comment(),
        )
    }

    fn case_text(&mut self) -> String {
        self.used.clear();
        self.upper = self.chance(0.5);
        let mut parts = Vec::new();
        if self.chance(self.dials.plsql_ratio) {
            let (t, cols) = if self.chance(0.3) {
                let (ddl, t, cols) = self.table();
                parts.push(ddl);
                (t, cols)
            } else {
                self.columns()
            };
            let body = match self.rng.random_range(0..3) {
                0 => self.procedure(&t, &cols),
                1 => self.function(&t, &cols),
                _ => self.block(&t, &cols),
            };
            parts.push(body);
        } else {
            match self.rng.random_range(0..4) {
                0 => {
                    let (ddl, t, cols) = self.table();
                    parts.push(ddl);
                    if self.chance(0.5) {
                        let col = cols[cols.len() - 1].clone();
                        parts.push(self.index(&t, &col));
                    }
                }
                1 => {
                    let (t, cols) = self.columns();
                    parts.push(self.query(&t, &cols));
                }
                2 => {
                    let (t, cols) = self.columns();
                    parts.push(self.dml(&t, &cols));
                }
                _ => {
                    let (ddl, t, cols) = self.table();
                    parts.push(ddl);
                    parts.push(self.dml(&t, &cols));
                }
            }
        }
        parts.join("\n\n")
    }
}

/// `count` cases, identical for identical `(seed, dials)`.
pub fn generate_synthetic_corpus(seed: u64, count: usize, dials: &CorpusDials) -> Vec<MigrationCase> {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        dials,
        upper: false,
        used: HashSet::new(),
    };
    (0..count)
        .map(|i| {
            let input = g.case_text();
            MigrationCase {
                id: format!("syn-{seed}-{i:04}"),
                output_db_query: rewrite_to_postgres(&input),
                input_db_query: input,
            }
        })
        .collect()
}

fn word_mapping(upper: &str) -> Option<&'static str> {
    Some(match upper {
        "NUMBER" => "NUMERIC",
        "VARCHAR2" => "VARCHAR",
        "DATE" => "TIMESTAMP",
        "NVL" => "COALESCE",
        "SYSDATE" => "CURRENT_TIMESTAMP",
        "PLS_INTEGER" => "INTEGER",
        "CLOB" => "TEXT",
        _ => return None,
    })
}

type Piece = (TokenKind, String, bool);

fn map_token(t: &Token, space: bool) -> Piece {
    match t.kind {
        TokenKind::Keyword | TokenKind::Identifier => match word_mapping(&t.upper()) {
            Some(m) => (TokenKind::Keyword, m.to_string(), space),
            None if t.kind == TokenKind::Identifier => (t.kind, t.text.to_lowercase(), space),
            None => (t.kind, t.upper(), space),
        },
        _ => (t.kind, t.text.clone(), space),
    }
}

fn join(pieces: &[Piece]) -> String {
    join_compact(pieces.iter().map(|(k, t, s)| (*k, t.as_str(), *s)), Some(Dialect::Postgres))
}

/// Significant, non-physical tokens of `span` with a flag telling whether
/// anything was dropped or skipped before each.
fn kept<'a>(tokens: &'a [Token], physical: &[bool], span: &StatementSpan) -> Vec<(usize, &'a Token, bool)> {
    let mut out = Vec::new();
    let mut gap = false;
    for i in span.start..span.end {
        if tokens[i].kind.is_trivia() || physical[i] {
            gap = true;
            continue;
        }
        out.push((i, &tokens[i], gap));
        gap = false;
    }
    out
}

fn plain(toks: &[(usize, &Token, bool)]) -> String {
    let mut pieces: Vec<Piece> = Vec::new();
    let mut k = 0;
    while k < toks.len() {
        let (_, t, s) = toks[k];
        if t.is_word_ci("FROM") && toks.get(k + 1).is_some_and(|x| x.1.is_word_ci("DUAL")) {
            k += 2;
            continue;
        }
        pieces.push(map_token(t, s));
        k += 1;
    }
    if !pieces.last().is_some_and(|p| p.1 == ";") {
        pieces.push((TokenKind::Punct, ";".to_string(), false));
    }
    join(&pieces)
}

fn param(toks: &[(usize, &Token, bool)]) -> Vec<Piece> {
    let Some(&(_, name, _)) = toks.first() else {
        return Vec::new();
    };
    let mut k = 1;
    let mut mode = Vec::new();
    while let Some(&(_, t, _)) = toks.get(k) {
        if t.is_word_ci("IN") || t.is_word_ci("OUT") {
            mode.push(t.upper());
        } else if !t.is_word_ci("NOCOPY") {
            break;
        }
        k += 1;
    }
    let mut out = Vec::new();
    match mode.join(" ").as_str() {
        "" => {}
        "IN OUT" => out.push((TokenKind::Keyword, "INOUT".to_string(), true)),
        m => out.push((TokenKind::Keyword, m.to_string(), true)),
    }
    out.push(map_token(name, true));
    for &(_, t, s) in &toks[k..] {
        if t.is_op(":=") {
            out.push((TokenKind::Keyword, "DEFAULT".to_string(), true));
        } else {
            out.push(map_token(t, s));
        }
    }
    out
}

fn routine(toks: &[(usize, &Token, bool)], header_end: usize, is_function: bool) -> String {
    let split = toks.iter().position(|x| x.0 == header_end).unwrap_or(toks.len());
    let header = &toks[..split];
    let mut pieces: Vec<Piece> = Vec::new();
    let mut k = 0;
    while k < header.len() {
        let (_, t, s) = header[k];
        if t.is_punct("(") {
            pieces.push((TokenKind::Punct, "(".to_string(), s));
            let mut depth = 0;
            let mut current = Vec::new();
            let mut first = true;
            k += 1;
            while k < header.len() {
                let x = header[k];
                if x.1.is_punct("(") {
                    depth += 1;
                } else if x.1.is_punct(")") && depth > 0 {
                    depth -= 1;
                } else if depth == 0 && (x.1.is_punct(",") || x.1.is_punct(")")) {
                    if !first {
                        pieces.push((TokenKind::Punct, ",".to_string(), false));
                    }
                    first = false;
                    pieces.extend(param(&current));
                    current.clear();
                    if x.1.is_punct(")") {
                        pieces.push((TokenKind::Punct, ")".to_string(), false));
                        break;
                    }
                    k += 1;
                    continue;
                }
                current.push(x);
                k += 1;
            }
        } else if is_function && t.is_word_ci("RETURN") {
            pieces.push((TokenKind::Keyword, "RETURNS".to_string(), true));
        } else {
            pieces.push(map_token(t, s));
        }
        k += 1;
    }
    let mut body: Vec<Piece> = toks[(split + 1).min(toks.len())..]
        .iter()
        .map(|&(_, t, s)| map_token(t, s))
        .collect();
    strip_end_label(&mut body);
    let declare = if body.first().is_some_and(|p| p.1 != "BEGIN") { "DECLARE " } else { "" };
    format!("{} AS $$\n{declare}{}\n$$ LANGUAGE plpgsql;", join(&pieces), join(&body))
}

/// `END name;` becomes `END;`.
fn strip_end_label(body: &mut Vec<Piece>) {
    if !body.last().is_some_and(|p| p.1 == ";") {
        body.push((TokenKind::Punct, ";".to_string(), false));
    }
    let n = body.len();
    if n >= 3 && body[n - 3].1 == "END" && body[n - 2].0 == TokenKind::Identifier {
        body.remove(n - 2);
    }
}

fn anonymous_block(toks: &[(usize, &Token, bool)]) -> String {
    let mut body: Vec<Piece> = toks.iter().map(|&(_, t, s)| map_token(t, s)).collect();
    strip_end_label(&mut body);
    format!("DO $$\n{}\n$$;", join(&body))
}

/// Rewrites the generator's Oracle constructs as PostgreSQL: comments and
/// physical clauses dropped, types and built-ins mapped, identifiers folded
/// to lower case, procedural code moved into PL/pgSQL dollar-quoted bodies.
pub fn rewrite_to_postgres(oracle: &str) -> String {
    let tokens = lex_lenient(oracle, Dialect::Oracle);
    let physical = physical_clause_tokens(&tokens, Dialect::Oracle);
    let mut out = Vec::new();
    for span in split_statements(&tokens, Dialect::Oracle) {
        let toks = kept(&tokens, &physical, &span);
        if toks.is_empty() {
            continue;
        }
        let text = match (span.kind, span.header_end) {
            (StatementKind::Slash, _) => continue,
            (StatementKind::Procedure, Some(h)) => routine(&toks, h, false),
            (StatementKind::Function, Some(h)) => routine(&toks, h, true),
            (StatementKind::AnonymousBlock, _) => anonymous_block(&toks),
            _ => plain(&toks),
        };
        out.push(text);
    }
    out.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sql::{parse, plsql_ratio, SqlArtifact};

    #[test]
    fn deterministic_per_seed() {
        let d = CorpusDials::default();
        assert_eq!(generate_synthetic_corpus(1, 10, &d), generate_synthetic_corpus(1, 10, &d));
        assert_ne!(generate_synthetic_corpus(1, 10, &d), generate_synthetic_corpus(2, 10, &d));
    }

    #[test]
    fn references_parse() {
        let d = CorpusDials {
            comment_density: 0.8,
            storage_density: 0.8,
            ..CorpusDials::default()
        };
        for c in generate_synthetic_corpus(7, 200, &d) {
            parse(&c.output_db_query, Dialect::Postgres)
                .unwrap_or_else(|e| panic!("{}\n{}\n{e}", c.input_db_query, c.output_db_query));
            parse(&c.input_db_query, Dialect::Oracle).unwrap_or_else(|e| panic!("{}\n{e}", c.input_db_query));
        }
    }

    #[test]
    fn zero_plsql_dial() {
        let d = CorpusDials {
            plsql_ratio: 0.0,
            ..CorpusDials::default()
        };
        for c in generate_synthetic_corpus(3, 50, &d) {
            assert_eq!(plsql_ratio(&SqlArtifact::oracle(c.input_db_query)).unwrap(), 0.0);
        }
    }

    #[test]
    fn rewrites_routines() {
        let src = "CREATE OR REPLACE PROCEDURE p (a IN NUMBER, b IN OUT VARCHAR2) IS\n v NUMBER := 0;\nBEGIN\n v := NVL(a, 0);\nEND p;\n/";
        assert_eq!(
            rewrite_to_postgres(src),
            "CREATE OR REPLACE PROCEDURE p(IN a NUMERIC,INOUT b VARCHAR) AS $$\nDECLARE v NUMERIC:=0;BEGIN v:=COALESCE(a,0);END;\n$$ LANGUAGE plpgsql;"
        );
        assert_eq!(
            rewrite_to_postgres("CREATE TABLE T (A DATE) TABLESPACE X; -- c\nSELECT SYSDATE FROM DUAL;"),
            "CREATE TABLE t(a TIMESTAMP);\nSELECT CURRENT_TIMESTAMP;"
        );
    }
}
