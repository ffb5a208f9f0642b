//! Recursive-descent parser for the Oracle and PostgreSQL subsets.
//!
//! Coverage: queries and DML, table/index/view/sequence DDL, procedures,
//! functions, packages, triggers, anonymous PL/SQL blocks and PL/pgSQL bodies
//! inside dollar-quoted strings. Any other statement that starts with a
//! keyword becomes a flat [`NodeKind::GenericStatement`].
//!
//! Dialect checks are syntactic only: Oracle-only forms (bind variables,
//! `(+)`, `MINUS`, `CONNECT BY`, storage clauses, `/` lines) fail under the
//! Postgres dialect and vice versa (`::`, dollar quoting, `LIMIT`).

use thiserror::Error;

use super::ast::{AstNode, NodeKind};
use super::keywords::is_hard_reserved;
use super::lexer::{lex, Token, TokenKind};
use super::structure::physical_clause_tokens;
use super::{Dialect, SqlError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at byte {offset}: expected {expected}, found {found}")]
pub struct ParseFailure {
    pub offset: usize,
    pub expected: String,
    pub found: String,
}

type PResult<T> = Result<T, ParseFailure>;

/// Parses a whole script. The root is always a [`NodeKind::Script`].
pub fn parse(text: &str, dialect: Dialect) -> Result<AstNode, ParseFailure> {
    parse_at(text, dialect, 0, Entry::Script)
}

#[derive(Clone, Copy)]
enum Entry {
    Script,
    PlpgsqlBody,
}

fn parse_at(text: &str, dialect: Dialect, base: usize, entry: Entry) -> PResult<AstNode> {
    let tokens = lex(text, dialect).map_err(|e| {
        let offset = match e {
            SqlError::UnterminatedString { offset } | SqlError::UnterminatedComment { offset } => {
                offset
            }
            _ => 0,
        };
        ParseFailure {
            offset: base + offset,
            expected: "terminated literal or comment".into(),
            found: "end of input".into(),
        }
    })?;
    let physical = if dialect == Dialect::Oracle {
        physical_clause_tokens(&tokens, dialect)
    } else {
        vec![false; tokens.len()]
    };
    let toks: Vec<Token> = tokens
        .into_iter()
        .zip(physical)
        .filter(|(t, phys)| !t.kind.is_trivia() && !phys)
        .map(|(t, _)| t)
        .collect();
    let mut p = Parser {
        toks,
        pos: 0,
        dialect,
        base,
        end_offset: base + text.len(),
    };
    match entry {
        Entry::Script => p.script(),
        Entry::PlpgsqlBody => p.plpgsql_body(),
    }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    dialect: Dialect,
    base: usize,
    end_offset: usize,
}

fn leaf_from(tok: &Token) -> AstNode {
    match tok.kind {
        TokenKind::Keyword => AstNode::leaf(NodeKind::Keyword, tok.upper()),
        TokenKind::Identifier => AstNode::leaf(NodeKind::Identifier, tok.text.clone()),
        TokenKind::QuotedIdentifier => AstNode::leaf(NodeKind::QuotedIdentifier, tok.text.clone()),
        TokenKind::StringLiteral => AstNode::leaf(NodeKind::StringLiteral, tok.text.clone()),
        TokenKind::Number => AstNode::leaf(NodeKind::Number, tok.text.clone()),
        TokenKind::Operator => AstNode::leaf(NodeKind::Operator, tok.text.clone()),
        _ => AstNode::leaf(NodeKind::Punct, tok.text.clone()),
    }
}

fn node(kind: NodeKind, children: Vec<AstNode>) -> AstNode {
    AstNode::branch(kind, children)
}

const COMPARISON_OPS: &[&str] = &["=", "<>", "!=", "^=", "<", ">", "<=", ">="];

const PG_REJECTED_OPTIONS: &[&str] = &[
    "PCTFREE", "PCTUSED", "INITRANS", "MAXTRANS", "STORAGE", "LOGGING", "NOLOGGING", "COMPRESS",
    "NOCOMPRESS", "CACHE", "NOCACHE",
];

impl Parser {
    // ---- token access -------------------------------------------------

    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn peek_at(&self, k: usize) -> Option<&Token> {
        self.toks.get(self.pos + k)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn at_word(&self, w: &str) -> bool {
        self.peek().is_some_and(|t| t.is_word_ci(w))
    }

    fn at_word_at(&self, k: usize, w: &str) -> bool {
        self.peek_at(k).is_some_and(|t| t.is_word_ci(w))
    }

    fn at_any_word(&self, ws: &[&str]) -> bool {
        ws.iter().any(|w| self.at_word(w))
    }

    fn at_punct(&self, p: &str) -> bool {
        self.peek().is_some_and(|t| t.is_punct(p))
    }

    fn at_op(&self, o: &str) -> bool {
        self.peek().is_some_and(|t| t.is_op(o))
    }

    fn upper(&self) -> Option<String> {
        self.peek().filter(|t| t.kind.is_word()).map(Token::upper)
    }

    fn err(&self, expected: &str) -> ParseFailure {
        match self.peek() {
            Some(t) => ParseFailure {
                offset: self.base + t.span.0,
                expected: expected.into(),
                found: format!("'{}'", t.text),
            },
            None => ParseFailure {
                offset: self.end_offset,
                expected: expected.into(),
                found: "end of input".into(),
            },
        }
    }

    fn bump(&mut self) -> AstNode {
        let leaf = leaf_from(&self.toks[self.pos]);
        self.pos += 1;
        leaf
    }

    /// Consumes a word as a keyword leaf.
    fn expect_word(&mut self, w: &str) -> PResult<AstNode> {
        if self.at_word(w) {
            self.pos += 1;
            Ok(AstNode::leaf(NodeKind::Keyword, w.to_ascii_uppercase()))
        } else {
            Err(self.err(&format!("'{w}'")))
        }
    }

    fn eat_word(&mut self, w: &str, out: &mut Vec<AstNode>) -> bool {
        if self.at_word(w) {
            out.push(self.expect_word(w).expect("checked"));
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<AstNode> {
        if self.at_punct(p) {
            Ok(self.bump())
        } else {
            Err(self.err(&format!("'{p}'")))
        }
    }

    fn expect_op(&mut self, o: &str) -> PResult<AstNode> {
        if self.at_op(o) {
            Ok(self.bump())
        } else {
            Err(self.err(&format!("'{o}'")))
        }
    }

    fn at_ident(&self) -> bool {
        self.peek().is_some_and(|t| match t.kind {
            TokenKind::Identifier | TokenKind::QuotedIdentifier => true,
            TokenKind::Keyword => !is_hard_reserved(&t.upper()),
            _ => false,
        })
    }

    fn ident(&mut self) -> PResult<AstNode> {
        let tok = self.peek().ok_or_else(|| self.err("identifier"))?;
        let leaf = match tok.kind {
            TokenKind::Identifier => AstNode::leaf(NodeKind::Identifier, tok.text.clone()),
            TokenKind::QuotedIdentifier => AstNode::leaf(NodeKind::QuotedIdentifier, tok.text.clone()),
            TokenKind::Keyword if !is_hard_reserved(&tok.upper()) => {
                AstNode::leaf(NodeKind::Identifier, tok.text.clone())
            }
            _ => return Err(self.err("identifier")),
        };
        self.pos += 1;
        Ok(leaf)
    }

    /// `a`, `a.b`, `a.b.c`.
    fn object_name(&mut self) -> PResult<AstNode> {
        let mut parts = vec![self.ident()?];
        while self.at_punct(".") {
            parts.push(self.bump());
            parts.push(self.ident()?);
        }
        if self.at_op("@") {
            parts.push(self.bump());
            parts.push(self.object_name()?);
        }
        Ok(node(NodeKind::ObjectName, parts))
    }

    fn ident_list_in_parens(&mut self) -> PResult<Vec<AstNode>> {
        let mut out = vec![self.expect_punct("(")?];
        out.push(self.ident()?);
        while self.at_punct(",") {
            out.push(self.bump());
            out.push(self.ident()?);
        }
        out.push(self.expect_punct(")")?);
        Ok(out)
    }

    /// Leaves up to (not including) a `;` at paren depth zero, or a token
    /// matched by `stop` at depth zero.
    fn loose_until(&mut self, stop: &dyn Fn(&Token) -> bool) -> PResult<Vec<AstNode>> {
        let mut out = Vec::new();
        let mut depth = 0i32;
        while let Some(t) = self.peek() {
            if depth == 0 && (t.is_punct(";") || stop(t)) {
                break;
            }
            if t.is_punct("(") {
                depth += 1;
            } else if t.is_punct(")") {
                if depth == 0 {
                    break;
                }
                depth -= 1;
            }
            out.push(self.bump());
        }
        if depth != 0 {
            return Err(self.err("')'"));
        }
        Ok(out)
    }

    fn oracle(&self) -> bool {
        self.dialect == Dialect::Oracle
    }

    // ---- scripts and statements ----------------------------------------

    fn script(&mut self) -> PResult<AstNode> {
        if self.at_end() {
            return Err(self.err("statement"));
        }
        let mut children = Vec::new();
        while !self.at_end() {
            if self.at_punct(";") || (self.oracle() && self.at_op("/")) {
                children.push(self.bump());
                continue;
            }
            children.push(self.statement()?);
            if self.at_end() {
                break;
            }
            if self.at_punct(";") {
                children.push(self.bump());
            } else if !(self.oracle() && self.at_op("/")) {
                return Err(self.err("';'"));
            }
        }
        Ok(node(NodeKind::Script, children))
    }

    fn statement(&mut self) -> PResult<AstNode> {
        let Some(tok) = self.peek() else {
            return Err(self.err("statement"));
        };
        if tok.is_punct("(") {
            return self.query();
        }
        if !tok.kind.is_word() {
            return Err(self.err("statement"));
        }
        match tok.upper().as_str() {
            "SELECT" | "WITH" => self.query(),
            "INSERT" => self.insert(),
            "UPDATE" => self.update(),
            "DELETE" => self.delete(),
            "CREATE" => self.create(),
            "DECLARE" if self.oracle() => self.block(),
            "BEGIN" if self.oracle() && !self.begin_is_transaction() => self.block(),
            "DO" if !self.oracle() => self.do_block(),
            _ if tok.kind == TokenKind::Keyword => self.generic(),
            _ => Err(self.err("statement")),
        }
    }

    fn begin_is_transaction(&self) -> bool {
        match self.peek_at(1) {
            None => true,
            Some(t) => t.is_punct(";") || t.is_word_ci("WORK") || t.is_word_ci("TRANSACTION"),
        }
    }

    fn generic(&mut self) -> PResult<AstNode> {
        let mut out = vec![self.bump()];
        let mut depth = 0i32;
        let mut blocks = 0i32;
        while let Some(t) = self.peek() {
            if depth == 0 && blocks == 0 && t.is_punct(";") {
                break;
            }
            if t.is_punct("(") {
                depth += 1;
            } else if t.is_punct(")") {
                depth -= 1;
            } else if t.is_word_ci("BEGIN") || t.is_word_ci("CASE") {
                let after_end = out.last().is_some_and(|n| {
                    n.leaf_text.as_deref().is_some_and(|s| s.eq_ignore_ascii_case("END"))
                });
                if !after_end {
                    blocks += 1;
                }
            } else if t.is_word_ci("END")
                && !(self.at_word_at(1, "IF") || self.at_word_at(1, "LOOP"))
            {
                blocks -= 1;
            }
            out.push(self.bump());
        }
        Ok(node(NodeKind::GenericStatement, out))
    }

    // ---- queries ---------------------------------------------------------

    fn query(&mut self) -> PResult<AstNode> {
        let mut parts = Vec::new();
        if self.at_word("WITH") {
            parts.push(self.with_clause()?);
        }
        let body = self.set_expr()?;
        parts.push(body);
        if self.at_word("ORDER") {
            parts.push(self.order_by()?);
        }
        loop {
            if self.at_word("LIMIT") && !self.oracle() {
                let mut c = vec![self.bump()];
                if !self.eat_word("ALL", &mut c) {
                    c.push(self.expr()?);
                }
                parts.push(node(NodeKind::LimitClause, c));
            } else if self.at_word("OFFSET") {
                let mut c = vec![self.bump(), self.expr()?];
                if !self.eat_word("ROWS", &mut c) {
                    self.eat_word("ROW", &mut c);
                }
                parts.push(node(NodeKind::OffsetClause, c));
            } else if self.at_word("FETCH") {
                let mut c = vec![self.bump()];
                if !self.eat_word("FIRST", &mut c) {
                    c.push(self.expect_word("NEXT")?);
                }
                if !self.at_word("ROWS") && !self.at_word("ROW") {
                    c.push(self.expr()?);
                }
                if !self.eat_word("ROWS", &mut c) {
                    c.push(self.expect_word("ROW")?);
                }
                c.push(self.expect_word("ONLY")?);
                parts.push(node(NodeKind::FetchClause, c));
            } else if self.at_word("FOR") && self.at_word_at(1, "UPDATE") {
                let mut c = vec![self.bump(), self.bump()];
                c.extend(self.loose_until(&|t: &Token| t.is_word_ci("INTO"))?);
                parts.push(node(NodeKind::ForUpdate, c));
            } else {
                break;
            }
        }
        if parts.len() == 1 {
            Ok(parts.pop().expect("one part"))
        } else {
            Ok(node(NodeKind::Query, parts))
        }
    }

    fn with_clause(&mut self) -> PResult<AstNode> {
        let mut c = vec![self.expect_word("WITH")?];
        self.eat_word("RECURSIVE", &mut c);
        loop {
            let mut cte = vec![self.ident()?];
            if self.at_punct("(") {
                cte.extend(self.ident_list_in_parens()?);
            }
            cte.push(self.expect_word("AS")?);
            cte.push(self.subquery()?);
            c.push(node(NodeKind::CommonTableExpr, cte));
            if self.at_punct(",") {
                c.push(self.bump());
            } else {
                break;
            }
        }
        Ok(node(NodeKind::WithClause, c))
    }

    fn subquery(&mut self) -> PResult<AstNode> {
        let open = self.expect_punct("(")?;
        let q = self.query()?;
        let close = self.expect_punct(")")?;
        Ok(node(NodeKind::Subquery, vec![open, q, close]))
    }

    fn set_expr(&mut self) -> PResult<AstNode> {
        let mut lhs = self.select_core()?;
        loop {
            let op = match self.upper().as_deref() {
                Some("UNION") | Some("INTERSECT") | Some("EXCEPT") => true,
                Some("MINUS") => {
                    if !self.oracle() {
                        return Err(self.err("set operator"));
                    }
                    true
                }
                _ => false,
            };
            if !op {
                return Ok(lhs);
            }
            let mut c = vec![lhs, self.bump()];
            if !self.eat_word("ALL", &mut c) {
                self.eat_word("DISTINCT", &mut c);
            }
            c.push(self.select_core()?);
            lhs = node(NodeKind::SetOperation, c);
        }
    }

    fn select_core(&mut self) -> PResult<AstNode> {
        if self.at_punct("(") {
            return self.subquery();
        }
        let mut c = vec![self.expect_word("SELECT")?];
        if !self.eat_word("DISTINCT", &mut c) && !self.eat_word("ALL", &mut c) && self.oracle() {
            self.eat_word("UNIQUE", &mut c);
        }
        c.push(self.select_list()?);
        if self.at_word("INTO") || (self.at_word("BULK") && self.at_word_at(1, "COLLECT")) {
            c.push(self.into_clause()?);
        }
        if self.at_word("FROM") {
            let mut f = vec![self.bump(), self.from_item()?];
            while self.at_punct(",") {
                f.push(self.bump());
                f.push(self.from_item()?);
            }
            c.push(node(NodeKind::FromClause, f));
        }
        if self.at_word("WHERE") {
            c.push(node(NodeKind::WhereClause, vec![self.bump(), self.expr()?]));
        }
        if self.at_word("START") || self.at_word("CONNECT") {
            if !self.oracle() {
                return Err(self.err("end of query"));
            }
            let mut h = Vec::new();
            while self.at_word("START") || self.at_word("CONNECT") {
                if self.at_word("START") {
                    h.push(self.bump());
                    h.push(self.expect_word("WITH")?);
                } else {
                    h.push(self.bump());
                    h.push(self.expect_word("BY")?);
                    self.eat_word("NOCYCLE", &mut h);
                }
                h.push(self.expr()?);
            }
            c.push(node(NodeKind::HierarchicalClause, h));
        }
        if self.at_word("GROUP") {
            let mut g = vec![self.bump(), self.expect_word("BY")?];
            g.extend(self.expr_list()?);
            c.push(node(NodeKind::GroupBy, g));
        }
        if self.at_word("HAVING") {
            c.push(node(NodeKind::Having, vec![self.bump(), self.expr()?]));
        }
        Ok(node(NodeKind::Select, c))
    }

    fn into_clause(&mut self) -> PResult<AstNode> {
        let mut c = Vec::new();
        if self.at_word("BULK") {
            c.push(self.bump());
            c.push(self.expect_word("COLLECT")?);
        }
        c.push(self.expect_word("INTO")?);
        c.push(self.target()?);
        while self.at_punct(",") {
            c.push(self.bump());
            c.push(self.target()?);
        }
        Ok(node(NodeKind::IntoClause, c))
    }

    /// Assignment or INTO target: a name chain or an Oracle bind variable.
    fn target(&mut self) -> PResult<AstNode> {
        if self.at_op(":") && self.oracle() {
            let colon = self.bump();
            let name = self.object_name()?;
            return Ok(node(NodeKind::BindVariable, vec![colon, name]));
        }
        let name = self.object_name()?;
        Ok(node(NodeKind::ColumnRef, vec![name]))
    }

    fn select_list(&mut self) -> PResult<AstNode> {
        let mut c = vec![self.select_item()?];
        while self.at_punct(",") {
            c.push(self.bump());
            c.push(self.select_item()?);
        }
        Ok(node(NodeKind::SelectList, c))
    }

    fn select_item(&mut self) -> PResult<AstNode> {
        if self.at_op("*") {
            let star = self.bump();
            return Ok(node(NodeKind::SelectItem, vec![node(NodeKind::Star, vec![star])]));
        }
        let mut c = vec![self.expr()?];
        if self.at_word("AS") {
            c.push(self.bump());
            c.push(self.ident()?);
        } else if self.at_implicit_alias() {
            c.push(self.ident()?);
        }
        Ok(node(NodeKind::SelectItem, c))
    }

    fn at_implicit_alias(&self) -> bool {
        self.peek().is_some_and(|t| {
            matches!(t.kind, TokenKind::Identifier | TokenKind::QuotedIdentifier)
        })
    }

    fn from_item(&mut self) -> PResult<AstNode> {
        let mut item = self.table_primary()?;
        loop {
            let mut j = Vec::new();
            let save = self.pos;
            self.eat_word("NATURAL", &mut j);
            if self.at_word("INNER") || self.at_word("CROSS") {
                j.push(self.bump());
            } else if self.at_any_word(&["LEFT", "RIGHT", "FULL"]) {
                j.push(self.bump());
                self.eat_word("OUTER", &mut j);
            }
            if !self.at_word("JOIN") {
                self.pos = save;
                return Ok(item);
            }
            j.insert(0, item);
            j.push(self.bump());
            j.push(self.table_primary()?);
            if self.at_word("ON") {
                j.push(self.bump());
                j.push(self.expr()?);
            } else if self.at_word("USING") {
                j.push(self.bump());
                j.extend(self.ident_list_in_parens()?);
            }
            item = node(NodeKind::Join, j);
        }
    }

    fn table_primary(&mut self) -> PResult<AstNode> {
        let mut c = Vec::new();
        let kind;
        if self.at_punct("(") {
            kind = NodeKind::DerivedTable;
            if matches!(self.peek_at(1).map(Token::upper).as_deref(), Some("SELECT" | "WITH")) {
                c.push(self.subquery()?);
            } else {
                let open = self.bump();
                let inner = self.from_item()?;
                let close = self.expect_punct(")")?;
                c.push(node(NodeKind::Paren, vec![open, inner, close]));
            }
        } else {
            kind = NodeKind::TableRef;
            self.eat_word("LATERAL", &mut c);
            if self.at_word("TABLE") && self.peek_at(1).is_some_and(|t| t.is_punct("(")) {
                c.push(self.bump());
                c.push(self.bump());
                c.push(self.expr()?);
                c.push(self.expect_punct(")")?);
            } else {
                let name = self.object_name()?;
                if self.at_punct("(") {
                    c.push(self.call_args(name)?);
                } else {
                    c.push(name);
                }
            }
        }
        if self.at_word("AS") {
            c.push(self.bump());
            c.push(self.ident()?);
        } else if self.at_implicit_alias() {
            c.push(self.ident()?);
        }
        Ok(node(kind, c))
    }

    fn order_by(&mut self) -> PResult<AstNode> {
        let mut c = vec![self.expect_word("ORDER")?];
        self.eat_word("SIBLINGS", &mut c);
        c.push(self.expect_word("BY")?);
        c.push(self.order_item()?);
        while self.at_punct(",") {
            c.push(self.bump());
            c.push(self.order_item()?);
        }
        Ok(node(NodeKind::OrderBy, c))
    }

    fn order_item(&mut self) -> PResult<AstNode> {
        let mut c = vec![self.expr()?];
        if !self.eat_word("ASC", &mut c) {
            self.eat_word("DESC", &mut c);
        }
        if self.at_word("NULLS") {
            c.push(self.bump());
            if !self.eat_word("FIRST", &mut c) {
                c.push(self.expect_word("LAST")?);
            }
        }
        Ok(node(NodeKind::OrderItem, c))
    }

    // ---- DML ---------------------------------------------------------------

    fn insert(&mut self) -> PResult<AstNode> {
        let mut c = vec![self.expect_word("INSERT")?, self.expect_word("INTO")?];
        c.push(self.object_name()?);
        if self.at_word("AS") {
            c.push(self.bump());
            c.push(self.ident()?);
        } else if self.at_implicit_alias() {
            c.push(self.ident()?);
        }
        if self.at_punct("(")
            && !matches!(self.peek_at(1).map(Token::upper).as_deref(), Some("SELECT" | "WITH"))
        {
            c.extend(self.ident_list_in_parens()?);
        }
        if self.at_word("VALUES") {
            let mut v = vec![self.bump(), self.values_row()?];
            while self.at_punct(",") {
                v.push(self.bump());
                v.push(self.values_row()?);
            }
            c.push(node(NodeKind::ValuesClause, v));
        } else if self.at_word("DEFAULT") {
            c.push(self.bump());
            c.push(self.expect_word("VALUES")?);
        } else {
            c.push(self.query()?);
        }
        if self.at_word("ON") && !self.oracle() {
            let mut conflict = vec![self.bump()];
            conflict.extend(self.loose_until(&|t: &Token| t.is_word_ci("RETURNING"))?);
            c.push(node(NodeKind::GenericStatement, conflict));
        }
        if self.at_word("RETURNING") {
            c.push(self.returning()?);
        }
        Ok(node(NodeKind::Insert, c))
    }

    fn values_row(&mut self) -> PResult<AstNode> {
        let mut c = vec![self.expect_punct("(")?];
        c.extend(self.expr_list()?);
        c.push(self.expect_punct(")")?);
        Ok(node(NodeKind::ValuesRow, c))
    }

    fn returning(&mut self) -> PResult<AstNode> {
        let mut c = vec![self.expect_word("RETURNING")?];
        if self.at_op("*") {
            c.push(self.bump());
        } else {
            c.extend(self.expr_list()?);
        }
        if self.at_word("INTO") || self.at_word("BULK") {
            c.push(self.into_clause()?);
        }
        Ok(node(NodeKind::Returning, c))
    }

    fn update(&mut self) -> PResult<AstNode> {
        let mut c = vec![self.expect_word("UPDATE")?, self.object_name()?];
        if self.at_word("AS") {
            c.push(self.bump());
            c.push(self.ident()?);
        } else if self.at_implicit_alias() {
            c.push(self.ident()?);
        }
        let mut s = vec![self.expect_word("SET")?, self.assignment()?];
        while self.at_punct(",") {
            s.push(self.bump());
            s.push(self.assignment()?);
        }
        c.push(node(NodeKind::SetClause, s));
        if self.at_word("FROM") && !self.oracle() {
            let mut f = vec![self.bump(), self.from_item()?];
            while self.at_punct(",") {
                f.push(self.bump());
                f.push(self.from_item()?);
            }
            c.push(node(NodeKind::FromClause, f));
        }
        if self.at_word("WHERE") {
            c.push(self.where_or_current_of()?);
        }
        if self.at_word("RETURNING") {
            c.push(self.returning()?);
        }
        Ok(node(NodeKind::Update, c))
    }

    fn where_or_current_of(&mut self) -> PResult<AstNode> {
        let kw = self.expect_word("WHERE")?;
        if self.at_word("CURRENT") && self.at_word_at(1, "OF") {
            let cur = self.bump();
            let of = self.bump();
            let name = self.ident()?;
            return Ok(node(NodeKind::WhereClause, vec![kw, cur, of, name]));
        }
        Ok(node(NodeKind::WhereClause, vec![kw, self.expr()?]))
    }

    fn assignment(&mut self) -> PResult<AstNode> {
        if self.at_punct("(") {
            let mut c = self.ident_list_in_parens()?;
            c.push(self.expect_op("=")?);
            c.push(self.subquery()?);
            return Ok(node(NodeKind::Assignment, c));
        }
        let target = self.object_name()?;
        let eq = self.expect_op("=")?;
        let value = if self.at_word("DEFAULT") {
            self.bump()
        } else {
            self.expr()?
        };
        Ok(node(NodeKind::Assignment, vec![target, eq, value]))
    }

    fn delete(&mut self) -> PResult<AstNode> {
        let mut c = vec![self.expect_word("DELETE")?];
        if !self.eat_word("FROM", &mut c) && !self.oracle() {
            return Err(self.err("'FROM'"));
        }
        c.push(self.object_name()?);
        if self.at_word("AS") {
            c.push(self.bump());
            c.push(self.ident()?);
        } else if self.at_implicit_alias() {
            c.push(self.ident()?);
        }
        if self.at_word("USING") && !self.oracle() {
            let mut f = vec![self.bump(), self.from_item()?];
            while self.at_punct(",") {
                f.push(self.bump());
                f.push(self.from_item()?);
            }
            c.push(node(NodeKind::FromClause, f));
        }
        if self.at_word("WHERE") {
            c.push(self.where_or_current_of()?);
        }
        if self.at_word("RETURNING") {
            c.push(self.returning()?);
        }
        Ok(node(NodeKind::Delete, c))
    }

    // ---- expressions ---------------------------------------------------

    fn expr_list(&mut self) -> PResult<Vec<AstNode>> {
        let mut c = vec![self.expr()?];
        while self.at_punct(",") {
            c.push(self.bump());
            c.push(self.expr()?);
        }
        Ok(c)
    }

    fn expr(&mut self) -> PResult<AstNode> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> PResult<AstNode> {
        let mut lhs = self.and_expr()?;
        while self.at_word("OR") {
            let op = self.bump();
            let rhs = self.and_expr()?;
            lhs = node(NodeKind::BinaryExpr, vec![lhs, op, rhs]);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<AstNode> {
        let mut lhs = self.not_expr()?;
        while self.at_word("AND") {
            let op = self.bump();
            let rhs = self.not_expr()?;
            lhs = node(NodeKind::BinaryExpr, vec![lhs, op, rhs]);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<AstNode> {
        if self.at_word("NOT") {
            let kw = self.bump();
            let operand = self.not_expr()?;
            return Ok(node(NodeKind::NotExpr, vec![kw, operand]));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> PResult<AstNode> {
        let mut lhs = self.concat()?;
        loop {
            if let Some(t) = self.peek() {
                if t.kind == TokenKind::Operator && COMPARISON_OPS.contains(&t.text.as_str()) {
                    let op = self.bump();
                    let rhs = self.concat()?;
                    lhs = node(NodeKind::BinaryExpr, vec![lhs, op, rhs]);
                    continue;
                }
            }
            if self.at_word("IS") {
                let mut c = vec![lhs, self.bump()];
                self.eat_word("NOT", &mut c);
                if self.at_any_word(&["NULL", "TRUE", "FALSE", "UNKNOWN"]) {
                    c.push(self.bump());
                } else if self.at_word("DISTINCT") && !self.oracle() {
                    c.push(self.bump());
                    c.push(self.expect_word("FROM")?);
                    c.push(self.concat()?);
                } else {
                    return Err(self.err("'NULL'"));
                }
                lhs = node(NodeKind::IsExpr, c);
                continue;
            }
            let negated = self.at_word("NOT")
                && self.peek_at(1).is_some_and(|t| {
                    ["LIKE", "ILIKE", "IN", "BETWEEN"].iter().any(|w| t.is_word_ci(w))
                });
            let at = usize::from(negated);
            let word = self.peek_at(at).filter(|t| t.kind.is_word()).map(Token::upper);
            match word.as_deref() {
                Some("LIKE") | Some("ILIKE") => {
                    let mut c = vec![lhs];
                    if negated {
                        c.push(self.bump());
                    }
                    c.push(self.bump());
                    c.push(self.concat()?);
                    if self.at_word("ESCAPE") {
                        c.push(self.bump());
                        c.push(self.concat()?);
                    }
                    lhs = node(NodeKind::LikeExpr, c);
                }
                Some("IN") => {
                    let mut c = vec![lhs];
                    if negated {
                        c.push(self.bump());
                    }
                    c.push(self.bump());
                    if matches!(self.peek_at(1).map(Token::upper).as_deref(), Some("SELECT" | "WITH")) {
                        c.push(self.subquery()?);
                    } else {
                        c.push(self.expect_punct("(")?);
                        c.extend(self.expr_list()?);
                        c.push(self.expect_punct(")")?);
                    }
                    lhs = node(NodeKind::InExpr, c);
                }
                Some("BETWEEN") => {
                    let mut c = vec![lhs];
                    if negated {
                        c.push(self.bump());
                    }
                    c.push(self.bump());
                    c.push(self.concat()?);
                    c.push(self.expect_word("AND")?);
                    c.push(self.concat()?);
                    lhs = node(NodeKind::BetweenExpr, c);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn concat(&mut self) -> PResult<AstNode> {
        let mut lhs = self.additive()?;
        while self.at_op("||") {
            let op = self.bump();
            let rhs = self.additive()?;
            lhs = node(NodeKind::BinaryExpr, vec![lhs, op, rhs]);
        }
        Ok(lhs)
    }

    fn additive(&mut self) -> PResult<AstNode> {
        let mut lhs = self.multiplicative()?;
        while self.at_op("+") || self.at_op("-") {
            let op = self.bump();
            let rhs = self.multiplicative()?;
            lhs = node(NodeKind::BinaryExpr, vec![lhs, op, rhs]);
        }
        Ok(lhs)
    }

    fn multiplicative(&mut self) -> PResult<AstNode> {
        let mut lhs = self.unary()?;
        loop {
            let is_mod = !self.oracle() && self.at_op("%");
            if !(self.at_op("*") || self.at_op("/") || is_mod) {
                return Ok(lhs);
            }
            let op = self.bump();
            let rhs = self.unary()?;
            lhs = node(NodeKind::BinaryExpr, vec![lhs, op, rhs]);
        }
    }

    fn unary(&mut self) -> PResult<AstNode> {
        if self.at_op("-") || self.at_op("+") || (self.oracle() && self.at_word("PRIOR")) {
            let op = self.bump();
            let operand = self.unary()?;
            return Ok(node(NodeKind::UnaryExpr, vec![op, operand]));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<AstNode> {
        let mut e = self.primary()?;
        loop {
            if self.at_op("::") {
                if self.oracle() {
                    return Err(self.err("operator"));
                }
                let op = self.bump();
                let ty = self.datatype()?;
                e = node(NodeKind::PgCast, vec![e, op, ty]);
            } else if self.at_op("%")
                && self.peek_at(1).is_some_and(|t| {
                    ["TYPE", "ROWTYPE", "FOUND", "NOTFOUND", "ROWCOUNT", "ISOPEN"]
                        .iter()
                        .any(|w| t.is_word_ci(w))
                })
            {
                let pct = self.bump();
                let attr = self.bump();
                e = node(NodeKind::AttributeRef, vec![e, pct, attr]);
            } else if self.at_punct("(")
                && self.peek_at(1).is_some_and(|t| t.is_op("+"))
                && self.peek_at(2).is_some_and(|t| t.is_punct(")"))
            {
                if !self.oracle() {
                    return Err(self.err("operator"));
                }
                let m = vec![self.bump(), self.bump(), self.bump()];
                e = node(NodeKind::OuterJoinMarker, vec![e, node(NodeKind::Tuple, m)]);
            } else if self.at_punct("[") && !self.oracle() {
                let open = self.bump();
                let idx = self.expr()?;
                let close = self.expect_punct("]")?;
                e = node(NodeKind::ArraySubscript, vec![e, open, idx, close]);
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> PResult<AstNode> {
        let Some(tok) = self.peek().cloned() else {
            return Err(self.err("expression"));
        };
        match tok.kind {
            TokenKind::Number | TokenKind::StringLiteral => return Ok(self.bump()),
            TokenKind::Punct if tok.text == "(" => {
                if matches!(self.peek_at(1).map(Token::upper).as_deref(), Some("SELECT" | "WITH")) {
                    return self.subquery();
                }
                let open = self.bump();
                let first = self.expr()?;
                if self.at_punct(",") {
                    let mut c = vec![open, first];
                    while self.at_punct(",") {
                        c.push(self.bump());
                        c.push(self.expr()?);
                    }
                    c.push(self.expect_punct(")")?);
                    return Ok(node(NodeKind::Tuple, c));
                }
                let close = self.expect_punct(")")?;
                return Ok(node(NodeKind::Paren, vec![open, first, close]));
            }
            TokenKind::Operator if tok.text == ":" => {
                if !self.oracle() {
                    return Err(self.err("expression"));
                }
                let colon = self.bump();
                let name = self.object_name()?;
                return Ok(node(NodeKind::BindVariable, vec![colon, name]));
            }
            TokenKind::Operator if tok.text == "*" => {
                let star = self.bump();
                return Ok(node(NodeKind::Star, vec![star]));
            }
            _ => {}
        }
        if !tok.kind.is_word() && tok.kind != TokenKind::QuotedIdentifier {
            return Err(self.err("expression"));
        }
        let upper = tok.upper();
        let next_is_string = self
            .peek_at(1)
            .is_some_and(|t| t.kind == TokenKind::StringLiteral);
        match upper.as_str() {
            "NULL" | "TRUE" | "FALSE" if tok.kind == TokenKind::Keyword => return Ok(self.bump()),
            "CASE" => return self.case_expr(),
            "EXISTS" => {
                let kw = self.bump();
                let sq = self.subquery()?;
                return Ok(node(NodeKind::ExistsExpr, vec![kw, sq]));
            }
            "CAST" if self.peek_at(1).is_some_and(|t| t.is_punct("(")) => {
                let c = vec![
                    self.bump(),
                    self.bump(),
                    self.expr()?,
                    self.expect_word("AS")?,
                    self.datatype()?,
                    self.expect_punct(")")?,
                ];
                return Ok(node(NodeKind::CastExpr, c));
            }
            "DATE" | "TIMESTAMP" if next_is_string => {
                let c = vec![self.bump(), self.bump()];
                return Ok(node(NodeKind::TypedLiteral, c));
            }
            "INTERVAL" if next_is_string => {
                let mut c = vec![self.bump(), self.bump()];
                if self.at_any_word(&["YEAR", "MONTH", "DAY", "HOUR", "MINUTE", "SECOND"]) {
                    c.push(self.bump());
                    if self.at_word("TO") {
                        c.push(self.bump());
                        c.push(self.bump());
                    }
                }
                return Ok(node(NodeKind::TypedLiteral, c));
            }
            "LEFT" | "RIGHT" if self.peek_at(1).is_some_and(|t| t.is_punct("(")) => {
                let name = AstNode::leaf(NodeKind::Identifier, tok.text.clone());
                self.pos += 1;
                return self.call_args(node(NodeKind::ObjectName, vec![name]));
            }
            _ => {}
        }
        let mut parts = vec![self.ident()?];
        while self.at_punct(".") {
            parts.push(self.bump());
            if self.at_op("*") {
                let star = self.bump();
                parts.push(node(NodeKind::Star, vec![star]));
                return Ok(node(NodeKind::ColumnRef, vec![node(NodeKind::ObjectName, parts)]));
            }
            parts.push(self.ident()?);
        }
        let name = node(NodeKind::ObjectName, parts);
        if self.at_punct("(") && !self.peek_at(1).is_some_and(|t| t.is_op("+")) {
            return self.call_args(name);
        }
        Ok(node(NodeKind::ColumnRef, vec![name]))
    }

    fn call_args(&mut self, name: AstNode) -> PResult<AstNode> {
        let fname = name
            .leaves()
            .last()
            .and_then(|l| l.leaf_text.clone())
            .unwrap_or_default()
            .to_ascii_uppercase();
        let mut c = vec![name, self.expect_punct("(")?];
        if matches!(fname.as_str(), "TRIM" | "SUBSTRING" | "POSITION" | "OVERLAY" | "EXTRACT") {
            c.extend(self.loose_until(&|_| false)?);
        } else if self.at_op("*") {
            c.push(self.bump());
        } else if !self.at_punct(")") {
            if !self.eat_word("DISTINCT", &mut c) {
                self.eat_word("ALL", &mut c);
            }
            c.push(self.call_arg()?);
            while self.at_punct(",") {
                c.push(self.bump());
                c.push(self.call_arg()?);
            }
            if self.at_word("ORDER") {
                c.push(self.order_by()?);
            }
        }
        c.push(self.expect_punct(")")?);
        if self.at_word("WITHIN") {
            c.push(self.bump());
            c.push(self.expect_word("GROUP")?);
            c.push(self.expect_punct("(")?);
            c.push(self.order_by()?);
            c.push(self.expect_punct(")")?);
        }
        if self.at_word("OVER") {
            c.push(self.window_spec()?);
        }
        Ok(node(NodeKind::FunctionCall, c))
    }

    fn call_arg(&mut self) -> PResult<AstNode> {
        if self.at_ident() && self.peek_at(1).is_some_and(|t| t.is_op("=>")) {
            let name = self.ident()?;
            let arrow = self.bump();
            let value = self.expr()?;
            return Ok(node(NodeKind::NamedArg, vec![name, arrow, value]));
        }
        self.expr()
    }

    fn window_spec(&mut self) -> PResult<AstNode> {
        let mut c = vec![self.expect_word("OVER")?, self.expect_punct("(")?];
        if self.at_word("PARTITION") {
            c.push(self.bump());
            c.push(self.expect_word("BY")?);
            c.extend(self.expr_list()?);
        }
        if self.at_word("ORDER") {
            c.push(self.order_by()?);
        }
        if self.at_word("ROWS") || self.at_word("RANGE") {
            c.extend(self.loose_until(&|_| false)?);
        }
        c.push(self.expect_punct(")")?);
        Ok(node(NodeKind::WindowSpec, c))
    }

    fn case_expr(&mut self) -> PResult<AstNode> {
        let mut c = vec![self.expect_word("CASE")?];
        if !self.at_word("WHEN") {
            c.push(self.expr()?);
        }
        if !self.at_word("WHEN") {
            return Err(self.err("'WHEN'"));
        }
        while self.at_word("WHEN") {
            let w = vec![self.bump(), self.expr()?, self.expect_word("THEN")?, self.expr()?];
            c.push(node(NodeKind::WhenClause, w));
        }
        if self.at_word("ELSE") {
            c.push(node(NodeKind::ElseClause, vec![self.bump(), self.expr()?]));
        }
        c.push(self.expect_word("END")?);
        Ok(node(NodeKind::CaseExpr, c))
    }

    fn datatype(&mut self) -> PResult<AstNode> {
        let mut c = Vec::new();
        let head = self.upper().ok_or_else(|| self.err("data type"))?;
        if head == "DOUBLE" {
            c.push(self.bump());
            c.push(self.expect_word("PRECISION")?);
        } else {
            let mut parts = vec![self.ident()?];
            while self.at_punct(".") {
                parts.push(self.bump());
                parts.push(self.ident()?);
            }
            c.push(node(NodeKind::ObjectName, parts));
            if self.at_op("%") && self.at_word_at(1, "TYPE") || self.at_op("%") && self.at_word_at(1, "ROWTYPE") {
                c.push(self.bump());
                c.push(self.bump());
                return Ok(node(NodeKind::DataType, c));
            }
            match head.as_str() {
                "CHARACTER" | "CHAR" | "NCHAR" => {
                    self.eat_word("VARYING", &mut c);
                }
                "LONG" => {
                    self.eat_word("RAW", &mut c);
                }
                _ => {}
            }
        }
        if head == "INTERVAL" {
            if self.at_any_word(&["YEAR", "DAY"]) {
                c.push(self.bump());
                if self.at_punct("(") {
                    c.extend(self.type_args()?);
                }
                c.push(self.expect_word("TO")?);
                c.push(self.bump());
                if self.at_punct("(") {
                    c.extend(self.type_args()?);
                }
            }
        } else if self.at_punct("(") {
            c.extend(self.type_args()?);
        }
        if matches!(head.as_str(), "TIMESTAMP" | "TIME") {
            if self.at_word("WITH") {
                c.push(self.bump());
                self.eat_word("LOCAL", &mut c);
                c.push(self.expect_word("TIME")?);
                c.push(self.expect_word("ZONE")?);
            } else if self.at_word("WITHOUT") {
                c.push(self.bump());
                c.push(self.expect_word("TIME")?);
                c.push(self.expect_word("ZONE")?);
            }
        }
        while self.at_punct("[") && !self.oracle() {
            c.push(self.bump());
            if self.peek().is_some_and(|t| t.kind == TokenKind::Number) {
                c.push(self.bump());
            }
            c.push(self.expect_punct("]")?);
        }
        Ok(node(NodeKind::DataType, c))
    }

    fn type_args(&mut self) -> PResult<Vec<AstNode>> {
        let mut c = vec![self.expect_punct("(")?];
        loop {
            if self.peek().is_some_and(|t| t.kind == TokenKind::Number) || self.at_op("*") {
                c.push(self.bump());
            } else {
                return Err(self.err("type length"));
            }
            if self.at_word("CHAR") || self.at_word("BYTE") {
                c.push(self.bump());
            }
            if self.at_punct(",") {
                c.push(self.bump());
            } else {
                break;
            }
        }
        c.push(self.expect_punct(")")?);
        Ok(c)
    }

    // ---- DDL ---------------------------------------------------------------

    fn create(&mut self) -> PResult<AstNode> {
        let start = self.pos;
        let mut c = vec![self.expect_word("CREATE")?];
        loop {
            let Some(w) = self.upper() else { break };
            match w.as_str() {
                "OR" => {
                    c.push(self.bump());
                    c.push(self.expect_word("REPLACE")?);
                }
                "EDITIONABLE" | "NONEDITIONABLE" | "GLOBAL" | "TEMPORARY" | "TEMP" | "UNIQUE"
                | "BITMAP" | "FORCE" | "NOFORCE" | "MATERIALIZED" | "UNLOGGED" => {
                    c.push(self.expect_word(&w)?);
                }
                _ => break,
            }
        }
        match self.upper().as_deref() {
            Some("TABLE") => self.create_table(c),
            Some("INDEX") => self.create_index(c),
            Some("VIEW") => self.create_view(c),
            Some("SEQUENCE") => {
                c.push(self.bump());
                c.push(self.object_name()?);
                c.extend(self.loose_until(&|_| false)?);
                Ok(node(NodeKind::CreateSequence, c))
            }
            Some("PROCEDURE") | Some("FUNCTION") => self.create_routine(c),
            Some("PACKAGE") => self.create_package(c),
            Some("TRIGGER") => self.create_trigger(c),
            _ => {
                self.pos = start;
                self.generic()
            }
        }
    }

    fn if_not_exists(&mut self, c: &mut Vec<AstNode>) -> PResult<()> {
        if self.at_word("IF") && !self.oracle() {
            c.push(self.bump());
            c.push(self.expect_word("NOT")?);
            c.push(self.expect_word("EXISTS")?);
        }
        Ok(())
    }

    fn table_options(&mut self) -> PResult<Option<AstNode>> {
        let stop = |t: &Token| t.is_op("/");
        let leaves = self.loose_until(&stop)?;
        if leaves.is_empty() {
            return Ok(None);
        }
        if !self.oracle() {
            for l in &leaves {
                if l.kind == NodeKind::Keyword
                    && PG_REJECTED_OPTIONS.contains(&l.leaf_text.as_deref().unwrap_or_default())
                {
                    return Err(ParseFailure {
                        offset: self.end_offset,
                        expected: "PostgreSQL table option".into(),
                        found: format!("'{}'", l.leaf_text.as_deref().unwrap_or_default()),
                    });
                }
            }
        }
        Ok(Some(node(NodeKind::TableOptions, leaves)))
    }

    fn create_table(&mut self, mut c: Vec<AstNode>) -> PResult<AstNode> {
        c.push(self.expect_word("TABLE")?);
        self.if_not_exists(&mut c)?;
        c.push(self.object_name()?);
        if self.at_punct("(") {
            c.push(self.bump());
            c.push(self.table_element()?);
            while self.at_punct(",") {
                c.push(self.bump());
                c.push(self.table_element()?);
            }
            c.push(self.expect_punct(")")?);
        }
        if self.at_word("AS") {
            c.push(self.bump());
            c.push(self.query()?);
        }
        if let Some(opts) = self.table_options()? {
            c.push(opts);
        }
        Ok(node(NodeKind::CreateTable, c))
    }

    fn table_element(&mut self) -> PResult<AstNode> {
        if self.at_any_word(&["CONSTRAINT", "PRIMARY", "UNIQUE", "FOREIGN", "CHECK"]) {
            return self.table_constraint();
        }
        let mut c = vec![self.ident()?, self.datatype()?];
        while let Some(cc) = self.column_constraint()? {
            c.push(cc);
        }
        Ok(node(NodeKind::ColumnDef, c))
    }

    fn constraint_state(&mut self, c: &mut Vec<AstNode>) -> PResult<()> {
        loop {
            if self.at_any_word(&["ENABLE", "DISABLE", "VALIDATE", "NOVALIDATE", "DEFERRABLE", "RELY", "NORELY"]) {
                c.push(self.bump());
            } else if self.at_word("NOT") && self.at_word_at(1, "DEFERRABLE") {
                c.push(self.bump());
                c.push(self.bump());
            } else if self.at_word("INITIALLY") {
                c.push(self.bump());
                c.push(self.bump());
            } else if self.at_word("USING") && self.at_word_at(1, "INDEX") {
                c.push(self.bump());
                c.push(self.bump());
            } else {
                return Ok(());
            }
        }
    }

    fn references(&mut self, c: &mut Vec<AstNode>) -> PResult<()> {
        c.push(self.expect_word("REFERENCES")?);
        c.push(self.object_name()?);
        if self.at_punct("(") {
            c.extend(self.ident_list_in_parens()?);
        }
        while self.at_word("ON") {
            c.push(self.bump());
            if !self.eat_word("DELETE", c) {
                c.push(self.expect_word("UPDATE")?);
            }
            match self.upper().as_deref() {
                Some("CASCADE") | Some("RESTRICT") => c.push(self.bump()),
                Some("SET") => {
                    c.push(self.bump());
                    if !self.eat_word("NULL", c) {
                        c.push(self.expect_word("DEFAULT")?);
                    }
                }
                Some("NO") => {
                    c.push(self.bump());
                    c.push(self.expect_word("ACTION")?);
                }
                _ => return Err(self.err("referential action")),
            }
        }
        Ok(())
    }

    fn table_constraint(&mut self) -> PResult<AstNode> {
        let mut c = Vec::new();
        if self.at_word("CONSTRAINT") {
            c.push(self.bump());
            c.push(self.ident()?);
        }
        match self.upper().as_deref() {
            Some("PRIMARY") => {
                c.push(self.bump());
                c.push(self.expect_word("KEY")?);
                c.extend(self.ident_list_in_parens()?);
            }
            Some("UNIQUE") => {
                c.push(self.bump());
                c.extend(self.ident_list_in_parens()?);
            }
            Some("FOREIGN") => {
                c.push(self.bump());
                c.push(self.expect_word("KEY")?);
                c.extend(self.ident_list_in_parens()?);
                self.references(&mut c)?;
            }
            Some("CHECK") => {
                c.push(self.bump());
                c.push(self.expect_punct("(")?);
                c.push(self.expr()?);
                c.push(self.expect_punct(")")?);
            }
            _ => return Err(self.err("table constraint")),
        }
        self.constraint_state(&mut c)?;
        Ok(node(NodeKind::TableConstraint, c))
    }

    fn column_constraint(&mut self) -> PResult<Option<AstNode>> {
        let mut c = Vec::new();
        if self.at_word("CONSTRAINT") {
            c.push(self.bump());
            c.push(self.ident()?);
        }
        match self.upper().as_deref() {
            Some("NOT") if self.at_word_at(1, "NULL") => {
                c.push(self.bump());
                c.push(self.bump());
            }
            Some("NULL") => c.push(self.bump()),
            Some("DEFAULT") => {
                c.push(self.bump());
                c.push(self.expr()?);
            }
            Some("PRIMARY") => {
                c.push(self.bump());
                c.push(self.expect_word("KEY")?);
            }
            Some("UNIQUE") => c.push(self.bump()),
            Some("REFERENCES") => self.references(&mut c)?,
            Some("CHECK") => {
                c.push(self.bump());
                c.push(self.expect_punct("(")?);
                c.push(self.expr()?);
                c.push(self.expect_punct(")")?);
            }
            Some("GENERATED") => {
                c.push(self.bump());
                if !self.eat_word("ALWAYS", &mut c) {
                    c.push(self.expect_word("BY")?);
                    c.push(self.expect_word("DEFAULT")?);
                    if self.at_word("ON") {
                        c.push(self.bump());
                        c.push(self.expect_word("NULL")?);
                    }
                }
                c.push(self.expect_word("AS")?);
                c.push(self.expect_word("IDENTITY")?);
                if self.at_punct("(") {
                    c.push(self.bump());
                    c.extend(self.loose_until(&|_| false)?);
                    c.push(self.expect_punct(")")?);
                }
            }
            Some("COLLATE") => {
                c.push(self.bump());
                c.push(self.object_name()?);
            }
            _ if c.is_empty() => return Ok(None),
            _ => return Err(self.err("column constraint")),
        }
        self.constraint_state(&mut c)?;
        Ok(Some(node(NodeKind::ColumnConstraint, c)))
    }

    fn create_index(&mut self, mut c: Vec<AstNode>) -> PResult<AstNode> {
        c.push(self.expect_word("INDEX")?);
        if !self.oracle() {
            self.eat_word("CONCURRENTLY", &mut c);
            self.if_not_exists(&mut c)?;
        }
        if !self.at_word("ON") {
            c.push(self.object_name()?);
        } else if self.oracle() {
            return Err(self.err("index name"));
        }
        c.push(self.expect_word("ON")?);
        c.push(self.object_name()?);
        if self.at_word("USING") && !self.oracle() {
            c.push(self.bump());
            c.push(self.ident()?);
        }
        c.push(self.expect_punct("(")?);
        c.push(self.index_elem()?);
        while self.at_punct(",") {
            c.push(self.bump());
            c.push(self.index_elem()?);
        }
        c.push(self.expect_punct(")")?);
        if let Some(opts) = self.table_options()? {
            c.push(opts);
        }
        Ok(node(NodeKind::CreateIndex, c))
    }

    fn index_elem(&mut self) -> PResult<AstNode> {
        let mut c = vec![self.expr()?];
        if !self.eat_word("ASC", &mut c) {
            self.eat_word("DESC", &mut c);
        }
        Ok(node(NodeKind::IndexElem, c))
    }

    fn create_view(&mut self, mut c: Vec<AstNode>) -> PResult<AstNode> {
        c.push(self.expect_word("VIEW")?);
        self.if_not_exists(&mut c)?;
        c.push(self.object_name()?);
        if self.at_punct("(") {
            c.extend(self.ident_list_in_parens()?);
        }
        c.push(self.expect_word("AS")?);
        c.push(self.query()?);
        if self.at_word("WITH") {
            c.push(self.bump());
            c.extend(self.loose_until(&|t: &Token| t.is_op("/"))?);
        }
        Ok(node(NodeKind::CreateView, c))
    }

    fn params(&mut self) -> PResult<AstNode> {
        let mut c = vec![self.expect_punct("(")?];
        if !self.at_punct(")") {
            c.push(self.param()?);
            while self.at_punct(",") {
                c.push(self.bump());
                c.push(self.param()?);
            }
        }
        c.push(self.expect_punct(")")?);
        Ok(node(NodeKind::ParamList, c))
    }

    fn param(&mut self) -> PResult<AstNode> {
        let mut c = Vec::new();
        if self.oracle() {
            c.push(self.ident()?);
            if self.at_word("IN") {
                c.push(self.bump());
                self.eat_word("OUT", &mut c);
            } else {
                self.eat_word("OUT", &mut c);
            }
            self.eat_word("NOCOPY", &mut c);
            c.push(self.datatype()?);
        } else {
            if self.at_any_word(&["IN", "OUT", "INOUT", "VARIADIC"]) {
                c.push(self.bump());
            }
            // `name type` or just `type`
            let single = self.peek_at(1).is_some_and(|t| {
                t.is_punct(",") || t.is_punct(")") || t.is_word_ci("DEFAULT") || t.is_op("=")
            }) || self.at_word("DOUBLE");
            if !single {
                c.push(self.ident()?);
            }
            c.push(self.datatype()?);
        }
        if self.at_word("DEFAULT") || self.at_op(":=") || (!self.oracle() && self.at_op("=")) {
            c.push(self.bump());
            c.push(self.expr()?);
        }
        Ok(node(NodeKind::Param, c))
    }

    fn create_routine(&mut self, mut c: Vec<AstNode>) -> PResult<AstNode> {
        let is_function = self.at_word("FUNCTION");
        c.push(self.bump());
        c.push(self.object_name()?);
        if self.at_punct("(") {
            c.push(self.params()?);
        } else if !self.oracle() {
            return Err(self.err("'('"));
        }
        let kind = if is_function {
            NodeKind::CreateFunction
        } else {
            NodeKind::CreateProcedure
        };
        if self.oracle() {
            if is_function {
                c.push(node(
                    NodeKind::ReturnClause,
                    vec![self.expect_word("RETURN")?, self.datatype()?],
                ));
            }
            let mut opts = Vec::new();
            loop {
                if self.at_word("AUTHID") {
                    opts.push(self.bump());
                    opts.push(self.bump());
                } else if self.at_any_word(&["DETERMINISTIC", "PIPELINED", "PARALLEL_ENABLE", "RESULT_CACHE"]) {
                    opts.push(self.bump());
                } else {
                    break;
                }
            }
            if !opts.is_empty() {
                c.push(node(NodeKind::RoutineOptions, opts));
            }
            if !self.eat_word("IS", &mut c) {
                c.push(self.expect_word("AS")?);
            }
            if self.at_word("LANGUAGE") || self.at_word("EXTERNAL") {
                c.extend(self.loose_until(&|_| false)?);
            } else {
                c.push(self.routine_block()?);
            }
            return Ok(node(kind, c));
        }
        if is_function {
            let mut r = vec![self.expect_word("RETURNS")?];
            if self.at_word("TABLE") {
                r.push(self.bump());
                r.push(self.params()?);
            } else {
                self.eat_word("SETOF", &mut r);
                r.push(self.datatype()?);
            }
            c.push(node(NodeKind::ReturnClause, r));
        }
        self.pg_routine_tail(c, kind)
    }

    /// PostgreSQL routine options and body, in any order.
    fn pg_routine_tail(&mut self, mut c: Vec<AstNode>, kind: NodeKind) -> PResult<AstNode> {
        let mut language: Option<String> = None;
        let mut body_slot: Option<(usize, Token)> = None;
        let mut opts = Vec::new();
        while let Some(t) = self.peek() {
            if t.is_punct(";") {
                break;
            }
            match t.upper().as_str() {
                "AS" => {
                    opts.push(self.bump());
                    let tok = self
                        .peek()
                        .filter(|t| t.kind == TokenKind::StringLiteral)
                        .cloned()
                        .ok_or_else(|| self.err("routine body"))?;
                    self.pos += 1;
                    body_slot = Some((opts.len(), tok));
                    opts.push(AstNode::leaf(NodeKind::Punct, "")); // placeholder
                    if self.at_punct(",") {
                        opts.push(self.bump());
                        opts.push(self.bump());
                    }
                }
                "LANGUAGE" => {
                    opts.push(self.bump());
                    let lang = self.ident()?;
                    language = lang.leaf_text.clone().map(|s| s.to_ascii_lowercase());
                    opts.push(lang);
                }
                "IMMUTABLE" | "STABLE" | "VOLATILE" | "STRICT" | "LEAKPROOF" | "WINDOW" => {
                    opts.push(self.bump())
                }
                "SECURITY" | "PARALLEL" | "COST" | "ROWS" => {
                    opts.push(self.bump());
                    opts.push(self.bump());
                }
                "CALLED" | "RETURNS" => {
                    // CALLED ON NULL INPUT / RETURNS NULL ON NULL INPUT
                    while !self.at_word("INPUT") && !self.at_end() {
                        opts.push(self.bump());
                    }
                    opts.push(self.expect_word("INPUT")?);
                }
                "SET" => {
                    opts.extend(self.loose_until(&|t: &Token| {
                        t.is_word_ci("AS") || t.is_word_ci("LANGUAGE")
                    })?);
                }
                _ => return Err(self.err("routine option")),
            }
        }
        let Some((slot, body)) = body_slot else {
            return Err(self.err("'AS' routine body"));
        };
        opts[slot] = self.routine_body_string(&body, language.as_deref())?;
        c.extend(opts);
        Ok(node(kind, c))
    }

    /// Parses the inside of a dollar-quoted body as PL/pgSQL or SQL; other
    /// languages and single-quoted bodies stay opaque.
    fn routine_body_string(&self, tok: &Token, language: Option<&str>) -> PResult<AstNode> {
        let text = &tok.text;
        if !text.starts_with('$') {
            return Ok(leaf_from(tok));
        }
        let tag_end = text[1..].find('$').expect("dollar quote has a closing tag") + 2;
        let tag = &text[..tag_end];
        let inner = &text[tag_end..text.len() - tag_end];
        let inner_base = self.base + tok.span.0 + tag_end;
        let body = match language.unwrap_or("plpgsql") {
            "plpgsql" => parse_at(inner, Dialect::Postgres, inner_base, Entry::PlpgsqlBody)?,
            "sql" => parse_at(inner, Dialect::Postgres, inner_base, Entry::Script)?,
            _ => return Ok(leaf_from(tok)),
        };
        Ok(node(
            NodeKind::DollarBody,
            vec![
                AstNode::leaf(NodeKind::Punct, tag),
                body,
                AstNode::leaf(NodeKind::Punct, tag),
            ],
        ))
    }

    fn do_block(&mut self) -> PResult<AstNode> {
        let mut c = vec![self.expect_word("DO")?];
        let mut language = None;
        if self.at_word("LANGUAGE") {
            c.push(self.bump());
            let l = self.ident()?;
            language = l.leaf_text.clone();
            c.push(l);
        }
        let tok = self
            .peek()
            .filter(|t| t.kind == TokenKind::StringLiteral)
            .cloned()
            .ok_or_else(|| self.err("block body"))?;
        self.pos += 1;
        let slot = c.len();
        c.push(AstNode::leaf(NodeKind::Punct, ""));
        if self.at_word("LANGUAGE") {
            c.push(self.bump());
            let l = self.ident()?;
            language = l.leaf_text.clone();
            c.push(l);
        }
        let lang = language.map(|s| s.to_ascii_lowercase());
        c[slot] = self.routine_body_string(&tok, lang.as_deref())?;
        Ok(node(NodeKind::DoBlock, c))
    }

    fn create_package(&mut self, mut c: Vec<AstNode>) -> PResult<AstNode> {
        c.push(self.expect_word("PACKAGE")?);
        let is_body = self.eat_word("BODY", &mut c);
        if !self.oracle() {
            return Err(self.err("object type"));
        }
        c.push(self.object_name()?);
        if self.at_word("AUTHID") {
            c.push(self.bump());
            c.push(self.bump());
        }
        if !self.eat_word("IS", &mut c) {
            c.push(self.expect_word("AS")?);
        }
        let mut items = Vec::new();
        while !self.at_word("END") && !self.at_word("BEGIN") && !self.at_end() {
            items.push(self.declaration()?);
        }
        c.push(node(NodeKind::DeclareSection, items));
        if is_body && self.at_word("BEGIN") {
            c.push(self.expect_word("BEGIN")?);
            c.push(self.statement_list()?);
            if self.at_word("EXCEPTION") {
                c.push(self.exception_section()?);
            }
        }
        c.push(self.expect_word("END")?);
        if self.at_ident() {
            c.push(self.ident()?);
        }
        let kind = if is_body {
            NodeKind::CreatePackageBody
        } else {
            NodeKind::CreatePackage
        };
        Ok(node(kind, c))
    }

    fn create_trigger(&mut self, mut c: Vec<AstNode>) -> PResult<AstNode> {
        c.push(self.expect_word("TRIGGER")?);
        c.push(self.object_name()?);
        match self.upper().as_deref() {
            Some("BEFORE") | Some("AFTER") => c.push(self.bump()),
            Some("INSTEAD") => {
                c.push(self.bump());
                c.push(self.expect_word("OF")?);
            }
            _ => return Err(self.err("trigger timing")),
        }
        c.push(self.trigger_event()?);
        while self.at_word("OR") {
            c.push(self.bump());
            c.push(self.trigger_event()?);
        }
        c.push(self.expect_word("ON")?);
        c.push(self.object_name()?);
        if self.at_word("REFERENCING") {
            c.push(self.bump());
            while self.at_any_word(&["NEW", "OLD"]) {
                c.push(self.bump());
                self.eat_word("TABLE", &mut c);
                self.eat_word("AS", &mut c);
                c.push(self.ident()?);
            }
        }
        if self.at_word("FOR") {
            c.push(self.bump());
            self.eat_word("EACH", &mut c);
            if !self.eat_word("ROW", &mut c) {
                c.push(self.expect_word("STATEMENT")?);
            }
        }
        if self.at_word("WHEN") {
            c.push(self.bump());
            c.push(self.expect_punct("(")?);
            c.push(self.expr()?);
            c.push(self.expect_punct(")")?);
        }
        if self.oracle() {
            c.push(self.block()?);
        } else {
            c.push(self.expect_word("EXECUTE")?);
            if !self.eat_word("FUNCTION", &mut c) {
                c.push(self.expect_word("PROCEDURE")?);
            }
            let name = self.object_name()?;
            c.push(self.call_args(name)?);
        }
        Ok(node(NodeKind::CreateTrigger, c))
    }

    fn trigger_event(&mut self) -> PResult<AstNode> {
        let mut c = Vec::new();
        match self.upper().as_deref() {
            Some("INSERT") | Some("DELETE") | Some("TRUNCATE") => c.push(self.bump()),
            Some("UPDATE") => {
                c.push(self.bump());
                if self.at_word("OF") {
                    c.push(self.bump());
                    c.push(self.ident()?);
                    while self.at_punct(",") {
                        c.push(self.bump());
                        c.push(self.ident()?);
                    }
                }
            }
            _ => return Err(self.err("trigger event")),
        }
        Ok(node(NodeKind::TriggerEvent, c))
    }

    // ---- procedural code ---------------------------------------------

    /// `[DECLARE decls] BEGIN stmts [EXCEPTION handlers] END [label]`.
    fn block(&mut self) -> PResult<AstNode> {
        let mut c = Vec::new();
        if self.at_word("DECLARE") {
            let mut d = vec![self.bump()];
            while !self.at_word("BEGIN") && !self.at_end() {
                d.push(self.declaration()?);
            }
            c.push(node(NodeKind::DeclareSection, d));
        }
        self.block_tail(c)
    }

    fn block_tail(&mut self, mut c: Vec<AstNode>) -> PResult<AstNode> {
        c.push(self.expect_word("BEGIN")?);
        c.push(self.statement_list()?);
        if self.at_word("EXCEPTION") {
            c.push(self.exception_section()?);
        }
        c.push(self.expect_word("END")?);
        if self.at_ident() {
            c.push(self.ident()?);
        }
        Ok(node(NodeKind::PlsqlBlock, c))
    }

    /// Body of a named routine: declarations without `DECLARE`, then a block.
    fn routine_block(&mut self) -> PResult<AstNode> {
        let mut decls = Vec::new();
        while !self.at_word("BEGIN") && !self.at_end() {
            decls.push(self.declaration()?);
        }
        let mut c = Vec::new();
        if !decls.is_empty() {
            c.push(node(NodeKind::DeclareSection, decls));
        }
        self.block_tail(c)
    }

    /// A whole PL/pgSQL function body.
    fn plpgsql_body(&mut self) -> PResult<AstNode> {
        let mut c = Vec::new();
        if self.at_op("<") {
            c.push(self.label()?);
        }
        if self.at_word("DECLARE") {
            let mut d = vec![self.bump()];
            while !self.at_word("BEGIN") && !self.at_end() {
                d.push(self.declaration()?);
            }
            c.push(node(NodeKind::DeclareSection, d));
        }
        let mut block = self.block_tail(c)?;
        if self.at_punct(";") {
            block.children.push(self.bump());
        }
        if !self.at_end() {
            return Err(self.err("end of routine body"));
        }
        Ok(block)
    }

    fn label(&mut self) -> PResult<AstNode> {
        let c = vec![
            self.expect_op("<")?,
            self.expect_op("<")?,
            self.ident()?,
            self.expect_op(">")?,
            self.expect_op(">")?,
        ];
        Ok(node(NodeKind::Label, c))
    }

    fn semicolon(&mut self, c: &mut Vec<AstNode>) -> PResult<()> {
        c.push(self.expect_punct(";")?);
        Ok(())
    }

    fn declaration(&mut self) -> PResult<AstNode> {
        let head = self.upper();
        match head.as_deref() {
            Some("PRAGMA") | Some("TYPE") | Some("SUBTYPE") => {
                let mut c = self.loose_until(&|_| false)?;
                self.semicolon(&mut c)?;
                return Ok(node(NodeKind::LooseDecl, c));
            }
            Some("CURSOR") if self.oracle() => {
                let mut c = vec![self.bump(), self.ident()?];
                if self.at_punct("(") {
                    c.push(self.params()?);
                }
                if self.at_word("RETURN") {
                    c.push(self.bump());
                    c.push(self.datatype()?);
                }
                c.push(self.expect_word("IS")?);
                c.push(self.query()?);
                self.semicolon(&mut c)?;
                return Ok(node(NodeKind::CursorDecl, c));
            }
            Some("PROCEDURE") | Some("FUNCTION") if self.oracle() => {
                return self.routine_decl();
            }
            _ => {}
        }
        let mut c = vec![self.ident()?];
        if self.at_word("EXCEPTION") {
            c.push(self.bump());
            self.semicolon(&mut c)?;
            return Ok(node(NodeKind::ExceptionDecl, c));
        }
        if !self.oracle() {
            if self.at_word("ALIAS") {
                c.extend(self.loose_until(&|_| false)?);
                self.semicolon(&mut c)?;
                return Ok(node(NodeKind::LooseDecl, c));
            }
            if self.at_word("CURSOR") || (self.at_word("NO") && self.at_word_at(1, "SCROLL")) {
                while !self.at_word("CURSOR") {
                    c.push(self.bump());
                }
                c.push(self.bump());
                if self.at_punct("(") {
                    c.push(self.params()?);
                }
                if !self.eat_word("FOR", &mut c) {
                    c.push(self.expect_word("IS")?);
                }
                c.push(self.query()?);
                self.semicolon(&mut c)?;
                return Ok(node(NodeKind::CursorDecl, c));
            }
        }
        self.eat_word("CONSTANT", &mut c);
        c.push(self.datatype()?);
        if self.at_word("NOT") {
            c.push(self.bump());
            c.push(self.expect_word("NULL")?);
        }
        if self.at_op(":=") || self.at_word("DEFAULT") || (!self.oracle() && self.at_op("=")) {
            c.push(self.bump());
            c.push(self.expr()?);
        }
        self.semicolon(&mut c)?;
        Ok(node(NodeKind::VariableDecl, c))
    }

    /// Nested procedure/function: a forward declaration or a definition.
    fn routine_decl(&mut self) -> PResult<AstNode> {
        let is_function = self.at_word("FUNCTION");
        let mut c = vec![self.bump(), self.ident()?];
        if self.at_punct("(") {
            c.push(self.params()?);
        }
        if is_function {
            c.push(node(
                NodeKind::ReturnClause,
                vec![self.expect_word("RETURN")?, self.datatype()?],
            ));
        }
        while self.at_any_word(&["DETERMINISTIC", "PIPELINED", "PARALLEL_ENABLE", "RESULT_CACHE"]) {
            c.push(self.bump());
        }
        if self.at_word("IS") || self.at_word("AS") {
            c.push(self.bump());
            c.push(self.routine_block()?);
        }
        self.semicolon(&mut c)?;
        Ok(node(NodeKind::RoutineDecl, c))
    }

    fn at_block_end(&self) -> bool {
        self.at_end()
            || self.at_any_word(&["END", "EXCEPTION", "ELSE", "ELSIF", "ELSEIF", "WHEN"])
    }

    fn statement_list(&mut self) -> PResult<AstNode> {
        let mut c = Vec::new();
        while !self.at_block_end() {
            c.push(self.pl_statement()?);
        }
        if c.is_empty() && self.oracle() {
            return Err(self.err("statement"));
        }
        Ok(node(NodeKind::StatementList, c))
    }

    fn exception_section(&mut self) -> PResult<AstNode> {
        let mut c = vec![self.expect_word("EXCEPTION")?];
        if !self.at_word("WHEN") {
            return Err(self.err("'WHEN'"));
        }
        while self.at_word("WHEN") {
            let mut h = vec![self.bump()];
            h.push(self.handler_condition()?);
            while self.at_word("OR") {
                h.push(self.bump());
                h.push(self.handler_condition()?);
            }
            h.push(self.expect_word("THEN")?);
            h.push(self.statement_list()?);
            c.push(node(NodeKind::Handler, h));
        }
        Ok(node(NodeKind::ExceptionSection, c))
    }

    fn handler_condition(&mut self) -> PResult<AstNode> {
        if self.at_word("SQLSTATE") && !self.oracle() {
            let kw = self.bump();
            if self.peek().is_some_and(|t| t.kind == TokenKind::StringLiteral) {
                return Ok(node(NodeKind::ObjectName, vec![kw, self.bump()]));
            }
            return Err(self.err("SQLSTATE code"));
        }
        self.object_name()
    }

    fn pl_statement(&mut self) -> PResult<AstNode> {
        if self.at_op("<") && self.peek_at(1).is_some_and(|t| t.is_op("<")) {
            return self.label();
        }
        let Some(tok) = self.peek().cloned() else {
            return Err(self.err("statement"));
        };
        if tok.is_punct("(") {
            let mut c = vec![self.query()?];
            self.semicolon(&mut c)?;
            return Ok(node(NodeKind::StatementList, c));
        }
        let upper = if tok.kind.is_word() { tok.upper() } else { String::new() };
        let mut c = Vec::new();
        let kind = match upper.as_str() {
            "NULL" if self.peek_at(1).is_some_and(|t| t.is_punct(";")) => {
                c.push(self.bump());
                NodeKind::NullStmt
            }
            "IF" => return self.if_stmt(),
            "LOOP" => {
                self.loop_body(&mut c)?;
                NodeKind::LoopStmt
            }
            "WHILE" => {
                c.push(self.bump());
                c.push(self.expr()?);
                self.loop_body(&mut c)?;
                NodeKind::WhileLoop
            }
            "FOR" => {
                self.for_header(&mut c)?;
                self.loop_body(&mut c)?;
                NodeKind::ForLoop
            }
            "EXIT" | "CONTINUE" => {
                c.push(self.bump());
                if self.at_ident() && !self.at_word("WHEN") {
                    c.push(self.ident()?);
                }
                if self.at_word("WHEN") {
                    c.push(self.bump());
                    c.push(self.expr()?);
                }
                NodeKind::ExitStmt
            }
            "RETURN" => {
                c.push(self.bump());
                if !self.oracle() && self.at_word("QUERY") {
                    c.push(self.bump());
                    c.push(self.query()?);
                } else {
                    if !self.oracle() {
                        self.eat_word("NEXT", &mut c);
                    }
                    if !self.at_punct(";") {
                        c.push(self.expr()?);
                    }
                }
                NodeKind::ReturnStmt
            }
            "RAISE" => {
                c.push(self.bump());
                c.extend(self.loose_until(&|_| false)?);
                NodeKind::RaiseStmt
            }
            "SELECT" | "WITH" => {
                c.push(self.query()?);
                NodeKind::StatementList
            }
            "INSERT" => {
                c.push(self.insert()?);
                NodeKind::StatementList
            }
            "UPDATE" => {
                c.push(self.update()?);
                NodeKind::StatementList
            }
            "DELETE" => {
                c.push(self.delete()?);
                NodeKind::StatementList
            }
            "CASE" => return self.case_stmt(),
            "DECLARE" | "BEGIN" => {
                c.push(self.block()?);
                NodeKind::StatementList
            }
            "COMMIT" | "ROLLBACK" | "SAVEPOINT" | "OPEN" | "FETCH" | "CLOSE" | "EXECUTE"
            | "PERFORM" | "GET" | "CALL" | "SET" | "LOCK" | "MERGE" | "FORALL" | "PIPE" => {
                c.extend(self.loose_until(&|_| false)?);
                NodeKind::LooseStmt
            }
            _ => return self.assign_or_call(),
        };
        self.semicolon(&mut c)?;
        Ok(node(kind, c))
    }

    fn loop_body(&mut self, c: &mut Vec<AstNode>) -> PResult<()> {
        c.push(self.expect_word("LOOP")?);
        c.push(self.statement_list()?);
        c.push(self.expect_word("END")?);
        c.push(self.expect_word("LOOP")?);
        if self.at_ident() {
            c.push(self.ident()?);
        }
        Ok(())
    }

    fn for_header(&mut self, c: &mut Vec<AstNode>) -> PResult<()> {
        c.push(self.expect_word("FOR")?);
        c.push(self.ident()?);
        c.push(self.expect_word("IN")?);
        self.eat_word("REVERSE", c);
        if self.at_word("SELECT") || self.at_word("WITH") {
            c.push(self.query()?);
        } else if !self.oracle() && self.at_word("EXECUTE") {
            c.extend(self.loose_until(&|t: &Token| t.is_word_ci("LOOP"))?);
        } else {
            let first = self.expr()?;
            c.push(first);
            if self.at_op("..") {
                c.push(self.bump());
                c.push(self.expr()?);
            }
        }
        Ok(())
    }

    fn if_stmt(&mut self) -> PResult<AstNode> {
        let mut c = vec![
            self.expect_word("IF")?,
            self.expr()?,
            self.expect_word("THEN")?,
            self.statement_list()?,
        ];
        while self.at_word("ELSIF") || self.at_word("ELSEIF") {
            let e = vec![
                self.bump(),
                self.expr()?,
                self.expect_word("THEN")?,
                self.statement_list()?,
            ];
            c.push(node(NodeKind::ElsifClause, e));
        }
        if self.at_word("ELSE") {
            c.push(node(
                NodeKind::ElseBranch,
                vec![self.bump(), self.statement_list()?],
            ));
        }
        c.push(self.expect_word("END")?);
        c.push(self.expect_word("IF")?);
        self.semicolon(&mut c)?;
        Ok(node(NodeKind::IfStmt, c))
    }

    fn case_stmt(&mut self) -> PResult<AstNode> {
        let mut c = vec![self.expect_word("CASE")?];
        if !self.at_word("WHEN") {
            c.push(self.expr()?);
        }
        while self.at_word("WHEN") {
            let w = vec![
                self.bump(),
                self.expr()?,
                self.expect_word("THEN")?,
                self.statement_list()?,
            ];
            c.push(node(NodeKind::WhenClause, w));
        }
        if self.at_word("ELSE") {
            c.push(node(
                NodeKind::ElseBranch,
                vec![self.bump(), self.statement_list()?],
            ));
        }
        c.push(self.expect_word("END")?);
        c.push(self.expect_word("CASE")?);
        self.semicolon(&mut c)?;
        Ok(node(NodeKind::CaseStmt, c))
    }

    fn assign_or_call(&mut self) -> PResult<AstNode> {
        let target = if self.at_op(":") && self.oracle() {
            self.target()?
        } else if self.at_ident() {
            let name = self.object_name()?;
            if self.at_punct("(") {
                self.call_args(name)?
            } else {
                node(NodeKind::ColumnRef, vec![name])
            }
        } else {
            return Err(self.err("statement"));
        };
        let mut c = vec![target];
        let kind = if self.at_op(":=") || (!self.oracle() && self.at_op("=")) {
            c.push(self.bump());
            c.push(self.expr()?);
            NodeKind::AssignStmt
        } else if c[0].kind == NodeKind::BindVariable {
            return Err(self.err("':='"));
        } else {
            NodeKind::CallStmt
        };
        self.semicolon(&mut c)?;
        Ok(node(kind, c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sql::ast::render;

    fn ora(s: &str) -> AstNode {
        parse(s, Dialect::Oracle).unwrap_or_else(|e| panic!("{s}: {e}"))
    }

    fn pg(s: &str) -> AstNode {
        parse(s, Dialect::Postgres).unwrap_or_else(|e| panic!("{s}: {e}"))
    }

    #[test]
    fn minimal_select() {
        let root = ora("SELECT a FROM t");
        assert_eq!(root.kind, NodeKind::Script);
        let select = &root.children[0];
        assert_eq!(select.kind, NodeKind::Select);
        let list = select.find(NodeKind::SelectList).unwrap();
        assert_eq!(list.leaves()[0].leaf_text.as_deref(), Some("a"));
        let from = select.find(NodeKind::FromClause).unwrap();
        assert_eq!(from.leaves()[1].leaf_text.as_deref(), Some("t"));
    }

    #[test]
    fn missing_projection_fails_at_from() {
        let err = parse("SELECT FROM", Dialect::Oracle).unwrap_err();
        assert_eq!(err.offset, 7);
        assert_eq!(err.found, "'FROM'");
    }

    #[test]
    fn whitespace_does_not_change_tree() {
        assert_eq!(ora("SELECT  a\n  FROM t"), ora("SELECT a FROM t"));
    }

    #[test]
    fn render_canonicalizes() {
        assert_eq!(render(&ora("SELECT   a  FROM t")), "SELECT a FROM t");
        assert_eq!(render(&ora("select a from t")), "SELECT a FROM t");
    }

    #[test]
    fn empty_input_fails() {
        assert!(parse("", Dialect::Oracle).is_err());
        assert!(parse("  -- only a comment", Dialect::Oracle).is_err());
    }

    #[test]
    fn prose_is_not_sql() {
        assert!(parse("Here is the migrated code", Dialect::Postgres).is_err());
        assert!(parse("```sql\nSELECT 1;\n```", Dialect::Postgres).is_err());
    }

    #[test]
    fn oracle_procedure() {
        let src = "CREATE OR REPLACE PROCEDURE p(a IN NUMBER, b OUT VARCHAR2) IS\n  v NUMBER := 0;\nBEGIN\n  SELECT COUNT(*) INTO v FROM t WHERE id = a;\n  IF v > 0 THEN b := 'x'; ELSIF v < 0 THEN NULL; ELSE b := NULL; END IF;\n  FOR i IN 1..10 LOOP v := v + i; END LOOP;\nEXCEPTION\n  WHEN NO_DATA_FOUND THEN b := NULL;\n  WHEN OTHERS THEN RAISE;\nEND p;\n/";
        let root = ora(src);
        assert_eq!(root.children[0].kind, NodeKind::CreateProcedure);
        assert!(root.find(NodeKind::ExceptionSection).is_some());
    }

    #[test]
    fn oracle_package_and_trigger() {
        ora("CREATE PACKAGE BODY pk AS PROCEDURE a(x NUMBER) IS BEGIN NULL; END a; FUNCTION f RETURN NUMBER IS BEGIN RETURN 1; END f; END pk;");
        ora("CREATE OR REPLACE TRIGGER trg BEFORE INSERT OR UPDATE OF name ON emp FOR EACH ROW BEGIN :NEW.updated_at := SYSDATE; END;");
    }

    #[test]
    fn oracle_ddl() {
        let root = ora("CREATE TABLE t (id NUMBER(10) NOT NULL, name VARCHAR2(100 CHAR) DEFAULT 'x', CONSTRAINT pk PRIMARY KEY (id)) TABLESPACE users PCTFREE 10;");
        assert_eq!(root.children[0].kind, NodeKind::CreateTable);
        // storage clauses are trivia
        assert_eq!(root, ora("CREATE TABLE t (id NUMBER(10) NOT NULL, name VARCHAR2(100 CHAR) DEFAULT 'x', CONSTRAINT pk PRIMARY KEY (id));"));
        ora("CREATE UNIQUE INDEX ix ON t (a, UPPER(b) DESC) NOLOGGING;");
        ora("CREATE OR REPLACE VIEW v AS SELECT a, b FROM t WHERE a IS NOT NULL WITH READ ONLY;");
        ora("CREATE SEQUENCE s START WITH 1 INCREMENT BY 1 NOCACHE;");
    }

    #[test]
    fn postgres_function_with_body() {
        let src = "CREATE OR REPLACE FUNCTION f(a integer) RETURNS integer AS $$\nDECLARE v integer := 0;\nBEGIN\n  SELECT count(*) INTO v FROM t WHERE id = a;\n  RETURN v;\nEND;\n$$ LANGUAGE plpgsql;";
        let root = pg(src);
        assert!(root.find(NodeKind::DollarBody).is_some());
        assert!(root.find(NodeKind::PlsqlBlock).is_some());
        let re = pg(&render(&root));
        assert_eq!(re, root);
    }

    #[test]
    fn broken_plpgsql_body_fails() {
        let src = "CREATE FUNCTION f() RETURNS int AS $$ BEGIN RETURN 1 END; $$ LANGUAGE plpgsql;";
        assert!(parse(src, Dialect::Postgres).is_err());
    }

    #[test]
    fn dialect_specific_rejections() {
        assert!(parse("SELECT a FROM t, u WHERE t.id = u.id(+)", Dialect::Postgres).is_err());
        assert!(parse("SELECT a FROM t, u WHERE t.id = u.id(+)", Dialect::Oracle).is_ok());
        assert!(parse("SELECT a::int FROM t", Dialect::Oracle).is_err());
        assert!(parse("SELECT a FROM t MINUS SELECT a FROM u", Dialect::Postgres).is_err());
        assert!(parse("CREATE TABLE t (a int) PCTFREE 10;", Dialect::Postgres).is_err());
        assert!(parse("CREATE TABLE t (a int) TABLESPACE users;", Dialect::Postgres).is_ok());
    }

    #[test]
    fn unknown_statements_are_generic() {
        let root = ora("GRANT SELECT ON t TO u;");
        assert_eq!(root.children[0].kind, NodeKind::GenericStatement);
        let root = ora("CREATE SYNONYM s FOR t;");
        assert_eq!(root.children[0].kind, NodeKind::GenericStatement);
    }

    #[test]
    fn expressions() {
        ora("SELECT CASE WHEN a > 1 THEN 'x' ELSE 'y' END AS c, NVL(b, 0), COUNT(DISTINCT c) FROM t WHERE a BETWEEN 1 AND 5 AND b NOT LIKE 'x%' AND c IN (1, 2) OR EXISTS (SELECT 1 FROM u)");
        pg("SELECT a::text, now() - interval '1 day' FROM t ORDER BY a DESC NULLS LAST LIMIT 10 OFFSET 5");
        ora("SELECT e.* FROM emp e JOIN dept d ON e.d = d.id LEFT OUTER JOIN x USING (k) FETCH FIRST 5 ROWS ONLY");
    }

    #[test]
    fn parse_is_deterministic() {
        let s = "SELECT a, b FROM t WHERE (a = 1 OR b = 2) AND c IS NULL";
        assert_eq!(ora(s), ora(s));
    }
}
