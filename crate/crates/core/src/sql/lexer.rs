//! Lossless lexer for the Oracle and PostgreSQL dialect subsets.
//!
//! Every byte of the input lands in exactly one token, so joining the token
//! texts reproduces the source. Comments, string literals and quoted
//! identifiers are always single tokens.

use serde::{Deserialize, Serialize};

use super::keywords::is_reserved;
use super::{Dialect, SqlError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Keyword,
    Identifier,
    QuotedIdentifier,
    StringLiteral,
    Number,
    Operator,
    Punct,
    LineComment,
    BlockComment,
    Whitespace,
}

impl TokenKind {
    /// Whitespace and comments.
    pub fn is_trivia(self) -> bool {
        matches!(
            self,
            TokenKind::Whitespace | TokenKind::LineComment | TokenKind::BlockComment
        )
    }

    pub fn is_comment(self) -> bool {
        matches!(self, TokenKind::LineComment | TokenKind::BlockComment)
    }

    /// Keyword or plain identifier.
    pub fn is_word(self) -> bool {
        matches!(self, TokenKind::Keyword | TokenKind::Identifier)
    }

    pub fn is_symbol(self) -> bool {
        matches!(self, TokenKind::Operator | TokenKind::Punct)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    /// Byte offsets `[start, end)` into the lexed input.
    pub span: (usize, usize),
}

impl Token {
    pub fn new(kind: TokenKind, text: impl Into<String>, span: (usize, usize)) -> Self {
        Self {
            kind,
            text: text.into(),
            span,
        }
    }

    /// Case-insensitive keyword test. Only matches tokens lexed as keywords.
    pub fn is_kw(&self, kw: &str) -> bool {
        self.kind == TokenKind::Keyword && self.text.eq_ignore_ascii_case(kw)
    }

    /// Case-insensitive word test for keywords and plain identifiers.
    pub fn is_word_ci(&self, word: &str) -> bool {
        self.kind.is_word() && self.text.eq_ignore_ascii_case(word)
    }

    pub fn is_punct(&self, p: &str) -> bool {
        self.kind == TokenKind::Punct && self.text == p
    }

    pub fn is_op(&self, op: &str) -> bool {
        self.kind == TokenKind::Operator && self.text == op
    }

    pub fn upper(&self) -> String {
        self.text.to_ascii_uppercase()
    }
}

/// Lexes `text`; fails on unterminated strings, quoted identifiers and block
/// comments.
pub fn lex(text: &str, dialect: Dialect) -> Result<Vec<Token>, SqlError> {
    Lexer::new(text, dialect, false).run()
}

/// Like [`lex`] but never fails: an unterminated literal or comment runs to
/// the end of input. Used on model output, which is not trusted to be
/// well-formed.
pub fn lex_lenient(text: &str, dialect: Dialect) -> Vec<Token> {
    Lexer::new(text, dialect, true)
        .run()
        .expect("lenient lexing is infallible")
}

const MULTI_CHAR_OPERATORS: &[&str] = &[
    ":=", "=>", "||", "<=", ">=", "<>", "!=", "^=", "**", "..", "::",
];

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    dialect: Dialect,
    lenient: bool,
    out: Vec<Token>,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str, dialect: Dialect, lenient: bool) -> Self {
        Self {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            dialect,
            lenient,
            out: Vec::new(),
        }
    }

    fn run(mut self) -> Result<Vec<Token>, SqlError> {
        while self.pos < self.bytes.len() {
            let start = self.pos;
            let kind = self.next_kind()?;
            let end = self.pos;
            debug_assert!(end > start);
            self.out
                .push(Token::new(kind, &self.src[start..end], (start, end)));
        }
        Ok(self.out)
    }

    fn peek_char(&self, offset: usize) -> Option<char> {
        self.src.get(self.pos + offset..)?.chars().next()
    }

    fn byte_at(&self, idx: usize) -> Option<u8> {
        self.bytes.get(idx).copied()
    }

    fn next_kind(&mut self) -> Result<TokenKind, SqlError> {
        let c = self.peek_char(0).expect("pos within input");
        let start = self.pos;

        if c.is_whitespace() {
            while let Some(ch) = self.peek_char(0) {
                if !ch.is_whitespace() {
                    break;
                }
                self.pos += ch.len_utf8();
            }
            return Ok(TokenKind::Whitespace);
        }

        if self.src[start..].starts_with("--") {
            let rest = &self.src[start..];
            let len = rest.find('\n').unwrap_or(rest.len());
            self.pos += len;
            return Ok(TokenKind::LineComment);
        }

        if self.src[start..].starts_with("/*") {
            match self.src[start + 2..].find("*/") {
                Some(i) => self.pos = start + 2 + i + 2,
                None if self.lenient => self.pos = self.bytes.len(),
                None => return Err(SqlError::UnterminatedComment { offset: start }),
            }
            return Ok(TokenKind::BlockComment);
        }

        if self.dialect == Dialect::Oracle && self.at_q_quote() {
            return self.q_quote(start);
        }

        if (c == 'n' || c == 'N') && self.byte_at(start + 1) == Some(b'\'') {
            self.pos += 1;
            return self.quoted(start, b'\'', TokenKind::StringLiteral);
        }

        if c == '\'' {
            return self.quoted(start, b'\'', TokenKind::StringLiteral);
        }

        if c == '"' {
            return self.quoted(start, b'"', TokenKind::QuotedIdentifier);
        }

        if c == '$' && self.dialect == Dialect::Postgres {
            if let Some(kind) = self.dollar(start)? {
                return Ok(kind);
            }
        }

        if c.is_alphabetic() || c == '_' {
            self.pos += c.len_utf8();
            while let Some(ch) = self.peek_char(0) {
                if ch.is_alphanumeric() || ch == '_' || ch == '$' || ch == '#' {
                    self.pos += ch.len_utf8();
                } else {
                    break;
                }
            }
            let word = &self.src[start..self.pos];
            return Ok(if is_reserved(word) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            });
        }

        let next_is_digit = self.byte_at(start + 1).is_some_and(|b| b.is_ascii_digit());
        if c.is_ascii_digit() || (c == '.' && next_is_digit && !self.prev_is_dot()) {
            self.number();
            return Ok(TokenKind::Number);
        }

        for op in MULTI_CHAR_OPERATORS {
            if self.src[start..].starts_with(op) {
                self.pos += op.len();
                return Ok(TokenKind::Operator);
            }
        }

        self.pos += c.len_utf8();
        Ok(match c {
            '+' | '-' | '*' | '/' | '=' | '<' | '>' | '!' | '|' | '%' | '^' | ':' | '@' | '&'
            | '~' | '?' => TokenKind::Operator,
            '$' => TokenKind::Operator,
            _ => TokenKind::Punct,
        })
    }

    fn prev_is_dot(&self) -> bool {
        self.out.last().is_some_and(|t| t.text == ".")
    }

    fn number(&mut self) {
        let digits = |l: &mut Self| {
            while l.byte_at(l.pos).is_some_and(|b| b.is_ascii_digit()) {
                l.pos += 1;
            }
        };
        digits(self);
        // a fraction, but never the first dot of a `..` range
        if self.byte_at(self.pos) == Some(b'.') && self.byte_at(self.pos + 1) != Some(b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.byte_at(self.pos), Some(b'e' | b'E')) {
            let mut look = self.pos + 1;
            if matches!(self.byte_at(look), Some(b'+' | b'-')) {
                look += 1;
            }
            if self.byte_at(look).is_some_and(|b| b.is_ascii_digit()) {
                self.pos = look;
                digits(self);
            }
        }
    }

    /// Scans a delimited token starting at the delimiter under `self.pos`. A
    /// doubled delimiter is an escape and stays inside the token.
    fn quoted(&mut self, start: usize, delim: u8, kind: TokenKind) -> Result<TokenKind, SqlError> {
        debug_assert_eq!(self.byte_at(self.pos), Some(delim));
        let mut i = self.pos + 1;
        loop {
            match self.byte_at(i) {
                None => {
                    if self.lenient {
                        self.pos = self.bytes.len();
                        return Ok(kind);
                    }
                    return Err(SqlError::UnterminatedString { offset: start });
                }
                Some(b) if b == delim => {
                    if self.byte_at(i + 1) == Some(delim) {
                        i += 2;
                    } else {
                        self.pos = i + 1;
                        return Ok(kind);
                    }
                }
                Some(_) => i += 1,
            }
        }
    }

    fn at_q_quote(&self) -> bool {
        let b = self.bytes;
        let p = self.pos;
        let is_q = |i: usize| matches!(b.get(i), Some(b'q' | b'Q'));
        let q_at = if matches!(b.get(p), Some(b'n' | b'N')) && is_q(p + 1) {
            p + 1
        } else if is_q(p) {
            p
        } else {
            return false;
        };
        // must not be the tail of a longer word such as `freq'`
        let prev_is_word = self.out.last().is_some_and(|t| {
            t.span.1 == p && t.kind.is_word()
        });
        !prev_is_word && b.get(q_at + 1) == Some(&b'\'') && b.get(q_at + 2).is_some()
    }

    fn q_quote(&mut self, start: usize) -> Result<TokenKind, SqlError> {
        let mut i = self.pos;
        if matches!(self.byte_at(i), Some(b'n' | b'N')) {
            i += 1;
        }
        i += 2; // q'
        let open = self.src[i..].chars().next().expect("checked by at_q_quote");
        let close = match open {
            '[' => ']',
            '{' => '}',
            '(' => ')',
            '<' => '>',
            other => other,
        };
        let body = i + open.len_utf8();
        let mut terminator = String::with_capacity(close.len_utf8() + 1);
        terminator.push(close);
        terminator.push('\'');
        match self.src[body..].find(&terminator) {
            Some(off) => self.pos = body + off + terminator.len(),
            None if self.lenient => self.pos = self.bytes.len(),
            None => return Err(SqlError::UnterminatedString { offset: start }),
        }
        Ok(TokenKind::StringLiteral)
    }

    /// `$tag$ ... $tag$` dollar quoting. Returns `None` when the `$` does not
    /// open a dollar quote.
    fn dollar(&mut self, start: usize) -> Result<Option<TokenKind>, SqlError> {
        let rest = &self.src[start + 1..];
        let tag_len = rest
            .char_indices()
            .take_while(|&(i, ch)| {
                ch == '_' || ch.is_ascii_alphabetic() || (i > 0 && ch.is_ascii_digit())
            })
            .map(|(_, ch)| ch.len_utf8())
            .sum::<usize>();
        if !rest[tag_len..].starts_with('$') {
            if tag_len == 0 && rest.starts_with(|c: char| c.is_ascii_digit()) {
                // positional parameter `$1`
                self.pos = start + 1;
                while self.byte_at(self.pos).is_some_and(|b| b.is_ascii_digit()) {
                    self.pos += 1;
                }
                return Ok(Some(TokenKind::Identifier));
            }
            return Ok(None);
        }
        let delim = &self.src[start..start + tag_len + 2];
        let body = start + delim.len();
        match self.src[body..].find(delim) {
            Some(off) => self.pos = body + off + delim.len(),
            None if self.lenient => self.pos = self.bytes.len(),
            None => return Err(SqlError::UnterminatedString { offset: start }),
        }
        Ok(Some(TokenKind::StringLiteral))
    }
}

/// `true` when writing `a` directly followed by `b` would lex differently from
/// the two separate tokens.
pub fn tokens_fuse(a: &str, b: &str, dialect: Dialect) -> bool {
    let joined = format!("{a}{b}");
    let toks = lex_lenient(&joined, dialect);
    !(toks.len() == 2 && toks[0].text == a && toks[1].text == b)
}

/// Joined text of all tokens.
pub fn concat(tokens: &[Token]) -> String {
    tokens.iter().map(|t| t.text.as_str()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenKind::*;

    fn kinds(src: &str) -> Vec<(TokenKind, String)> {
        lex(src, Dialect::Oracle)
            .unwrap()
            .into_iter()
            .map(|t| (t.kind, t.text))
            .collect()
    }

    #[test]
    fn empty_input_has_no_tokens() {
        assert!(lex("", Dialect::Oracle).unwrap().is_empty());
    }

    #[test]
    fn select_with_line_comment() {
        assert_eq!(
            kinds("SELECT 1 -- hi"),
            vec![
                (Keyword, "SELECT".into()),
                (Whitespace, " ".into()),
                (Number, "1".into()),
                (Whitespace, " ".into()),
                (LineComment, "-- hi".into()),
            ]
        );
    }

    #[test]
    fn comment_marker_inside_literal_is_literal() {
        let toks = kinds("x := '--not a comment'");
        assert_eq!(toks.last().unwrap(), &(StringLiteral, "'--not a comment'".into()));
        assert!(toks.iter().all(|(k, _)| *k != LineComment));
        assert_eq!(toks[2], (Operator, ":=".into()));
    }

    #[test]
    fn doubled_quote_stays_in_one_literal() {
        let toks = kinds("'it''s'");
        assert_eq!(toks, vec![(StringLiteral, "'it''s'".into())]);
    }

    #[test]
    fn quoted_identifier_is_one_token() {
        let toks = kinds("\"weird col\"");
        assert_eq!(toks, vec![(QuotedIdentifier, "\"weird col\"".into())]);
    }

    #[test]
    fn q_quote_is_opaque() {
        let toks = kinds("v := q'[it's -- fine]';");
        assert_eq!(toks[4], (StringLiteral, "q'[it's -- fine]'".into()));
        assert_eq!(toks[5], (Punct, ";".into()));
    }

    #[test]
    fn word_ending_in_q_is_not_a_q_quote() {
        let toks = kinds("freq'x'");
        assert_eq!(toks[0], (Identifier, "freq".into()));
        assert_eq!(toks[1], (StringLiteral, "'x'".into()));
    }

    #[test]
    fn dollar_quote_only_in_postgres() {
        let pg = lex("AS $$ BEGIN END; $$", Dialect::Postgres).unwrap();
        assert_eq!(pg[2].kind, StringLiteral);
        assert_eq!(pg[2].text, "$$ BEGIN END; $$");
        let tagged = lex("$fn$ a $fn$", Dialect::Postgres).unwrap();
        assert_eq!(tagged.len(), 1);
    }

    #[test]
    fn unterminated_string_reports_opening_offset() {
        assert_eq!(
            lex("SELECT 'abc", Dialect::Oracle),
            Err(SqlError::UnterminatedString { offset: 7 })
        );
        assert_eq!(
            lex("a /* b", Dialect::Oracle),
            Err(SqlError::UnterminatedComment { offset: 2 })
        );
    }

    #[test]
    fn lenient_lexing_runs_to_end() {
        let toks = lex_lenient("SELECT 'abc", Dialect::Oracle);
        assert_eq!(toks.last().unwrap().text, "'abc");
        assert_eq!(concat(&toks), "SELECT 'abc");
    }

    #[test]
    fn numbers_and_ranges() {
        let toks = kinds("1..10");
        assert_eq!(
            toks,
            vec![(Number, "1".into()), (Operator, "..".into()), (Number, "10".into())]
        );
        assert_eq!(kinds("3.14e-2"), vec![(Number, "3.14e-2".into())]);
        assert_eq!(kinds(".5"), vec![(Number, ".5".into())]);
    }

    #[test]
    fn oracle_identifier_chars() {
        assert_eq!(kinds("v$session"), vec![(Identifier, "v$session".into())]);
        assert_eq!(kinds("a#b"), vec![(Identifier, "a#b".into())]);
    }

    #[test]
    fn fuse_detection() {
        assert!(tokens_fuse("-", "-", Dialect::Oracle));
        assert!(tokens_fuse("SELECT", "a", Dialect::Oracle));
        assert!(tokens_fuse(":", "=", Dialect::Oracle));
        assert!(!tokens_fuse("a", ",", Dialect::Oracle));
        assert!(!tokens_fuse("t", "(", Dialect::Oracle));
    }
}
