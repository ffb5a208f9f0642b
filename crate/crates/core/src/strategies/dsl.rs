//! Keyword-phrase substitution over minified SQL.

use serde::{Deserialize, Serialize};

use crate::sql::{lex_lenient, tokens_fuse, Dialect, SqlArtifact, Token, TokenKind};

use super::prune::minify_text;
use super::{OptimizedContext, StrategyError, StrategyId};

/// Ordered `(keyword phrase, replacement)` pairs, longest phrase first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(String, String)>", into = "Vec<(String, String)>")]
pub struct SubstitutionDictionary {
    pairs: Vec<(String, String)>,
}

impl SubstitutionDictionary {
    /// Validates and orders the pairs: by keyword length descending, then
    /// lexicographically.
    pub fn new<K, V>(pairs: impl IntoIterator<Item = (K, V)>) -> Result<Self, StrategyError>
    where
        K: Into<String>,
        V: Into<String>,
    {
        let mut pairs: Vec<(String, String)> =
            pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect();
        let invalid = |msg: String| Err(StrategyError::InvalidDictionary(msg));
        for (i, (k, v)) in pairs.iter().enumerate() {
            if k.trim().is_empty() || v.trim().is_empty() {
                return invalid(format!("empty keyword or replacement at position {i}"));
            }
            if significant(k).is_empty() {
                return invalid(format!("keyword '{k}' has no tokens"));
            }
        }
        for (i, (k, v)) in pairs.iter().enumerate() {
            for (k2, v2) in &pairs[i + 1..] {
                if k.eq_ignore_ascii_case(k2) {
                    return invalid(format!("duplicate keyword '{k}'"));
                }
                if v == v2 {
                    return invalid(format!("duplicate replacement '{v}'"));
                }
            }
            if let Some((k2, _)) = pairs.iter().find(|(k2, _)| k2.contains(v.as_str())) {
                return invalid(format!("replacement '{v}' is a substring of keyword '{k2}'"));
            }
        }
        pairs.sort_by(|(a, _), (b, _)| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        Ok(Self { pairs })
    }

    pub fn empty() -> Self {
        Self { pairs: Vec::new() }
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

impl Default for SubstitutionDictionary {
    fn default() -> Self {
        Self::new([
            ("CREATE OR REPLACE", "CR:"),
            ("PROCEDURE", "PRC:"),
            ("FUNCTION", "FNC:"),
            ("PACKAGE BODY", "PKB:"),
            ("PACKAGE", "PKG:"),
            ("EXCEPTION WHEN OTHERS THEN", "EXO:"),
            ("END IF", "EIF:"),
        ])
        .expect("default dictionary is valid")
    }
}

impl TryFrom<Vec<(String, String)>> for SubstitutionDictionary {
    type Error = StrategyError;

    fn try_from(pairs: Vec<(String, String)>) -> Result<Self, Self::Error> {
        Self::new(pairs)
    }
}

impl From<SubstitutionDictionary> for Vec<(String, String)> {
    fn from(d: SubstitutionDictionary) -> Self {
        d.pairs
    }
}

fn significant(text: &str) -> Vec<Token> {
    lex_lenient(text, Dialect::Oracle)
        .into_iter()
        .filter(|t| !t.kind.is_trivia())
        .collect()
}

fn token_matches(pattern: &Token, tok: &Token) -> bool {
    if pattern.kind.is_word() {
        tok.kind.is_word() && tok.text.eq_ignore_ascii_case(&pattern.text)
    } else {
        tok.kind == pattern.kind && tok.text == pattern.text
    }
}

/// Indices (into `tokens`) of the significant tokens.
fn significant_positions(tokens: &[Token]) -> Vec<usize> {
    (0..tokens.len()).filter(|&i| !tokens[i].kind.is_trivia()).collect()
}

fn find_sequence(tokens: &[Token], sig: &[usize], pattern: &[Token], from: usize) -> Option<usize> {
    if pattern.is_empty() || sig.len() < pattern.len() {
        return None;
    }
    (from..=sig.len() - pattern.len())
        .find(|&s| pattern.iter().enumerate().all(|(j, p)| token_matches(p, &tokens[sig[s + j]])))
}

/// Replaces every whole-token occurrence of `key` in `text`. Returns `None`
/// when the key does not occur.
fn substitute(text: &str, key: &[Token], replacement: &str) -> Option<String> {
    let tokens = lex_lenient(text, Dialect::Oracle);
    let sig = significant_positions(&tokens);
    let rep = significant(replacement);
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0usize; // token index
    let mut s = 0usize; // significant index
    let mut hit = false;
    while let Some(at) = find_sequence(&tokens, &sig, key, s) {
        let first = sig[at];
        let last = sig[at + key.len() - 1];
        for t in &tokens[cursor..first] {
            out.push_str(&t.text);
        }
        let prev = tokens[..first].last().filter(|t| t.kind != TokenKind::Whitespace);
        if let (Some(prev), Some(head)) = (prev, rep.first()) {
            if tokens_fuse(&prev.text, &head.text, Dialect::Oracle) {
                out.push(' ');
            }
        }
        out.push_str(replacement);
        let next = tokens.get(last + 1).filter(|t| t.kind != TokenKind::Whitespace);
        if let (Some(next), Some(tail)) = (next, rep.last()) {
            if tokens_fuse(&tail.text, &next.text, Dialect::Oracle) {
                out.push(' ');
            }
        }
        cursor = last + 1;
        s = at + key.len();
        hit = true;
    }
    if !hit {
        return None;
    }
    for t in &tokens[cursor..] {
        out.push_str(&t.text);
    }
    Some(out)
}

/// Minifies, then applies every dictionary pair in order. A legend line
/// `LEGEND k=v;…` listing the pairs that fired precedes the code.
pub fn dsl_compress(
    artifact: &SqlArtifact,
    dict: &SubstitutionDictionary,
) -> Result<OptimizedContext, StrategyError> {
    let minified = minify_text(artifact.text(), artifact.dialect());
    let tokens = lex_lenient(&minified, Dialect::Oracle);
    let sig = significant_positions(&tokens);
    for (_, v) in dict.pairs() {
        let pattern = significant(v);
        if find_sequence(&tokens, &sig, &pattern, 0).is_some() {
            return Err(StrategyError::ReplacementCollision {
                replacement: v.clone(),
            });
        }
    }
    let mut text = minified;
    let mut applied = Vec::new();
    for (k, v) in dict.pairs() {
        if let Some(next) = substitute(&text, &significant(k), v) {
            text = next;
            applied.push(format!("{k}={v}"));
        }
    }
    let prompt = if applied.is_empty() {
        text
    } else {
        format!("LEGEND {}\n{text}", applied.join(";"))
    };
    Ok(OptimizedContext::new(prompt, StrategyId::Dsl))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategies::minify;

    fn ora(s: &str) -> SqlArtifact {
        SqlArtifact::oracle(s)
    }

    #[test]
    fn create_or_replace_shorthand() {
        let dict = SubstitutionDictionary::new([("CREATE OR REPLACE", "CR:")]).unwrap();
        let out = dsl_compress(&ora("CREATE OR REPLACE PROCEDURE p IS BEGIN NULL; END;"), &dict).unwrap();
        assert_eq!(
            out.prompt_text(),
            "LEGEND CREATE OR REPLACE=CR:\nCR: PROCEDURE p IS BEGIN NULL;END;"
        );
    }

    #[test]
    fn empty_dictionary_is_minify() {
        let src = "SELECT  a FROM t";
        let out = dsl_compress(&ora(src), &SubstitutionDictionary::empty()).unwrap();
        assert_eq!(out.prompt_text(), minify(&ora(src)).prompt_text());
    }

    #[test]
    fn whole_token_only() {
        let dict = SubstitutionDictionary::new([("CREATE", "C#")]).unwrap();
        let out = dsl_compress(&ora("SELECT createx, 'CREATE' FROM t"), &dict).unwrap();
        assert_eq!(out.prompt_text(), "SELECT createx,'CREATE' FROM t");
    }

    #[test]
    fn matching_ignores_case_and_whitespace() {
        let out = dsl_compress(
            &ora("create or\n replace function f return number is begin return 1; end;"),
            &SubstitutionDictionary::default(),
        )
        .unwrap();
        assert_eq!(
            out.prompt_text(),
            "LEGEND CREATE OR REPLACE=CR:;FUNCTION=FNC:\nCR: FNC: f return number is begin return 1;end;"
        );
    }

    #[test]
    fn collision_is_reported() {
        let dict = SubstitutionDictionary::new([("PROCEDURE", "prc")]).unwrap();
        let err = dsl_compress(&ora("SELECT prc FROM t"), &dict).unwrap_err();
        assert!(matches!(err, StrategyError::ReplacementCollision { .. }));
    }

    #[test]
    fn dictionary_ordering_and_validation() {
        let d = SubstitutionDictionary::default();
        let keys: Vec<_> = d.pairs().iter().map(|(k, _)| k.as_str()).collect();
        assert_eq!(
            keys,
            [
                "EXCEPTION WHEN OTHERS THEN",
                "CREATE OR REPLACE",
                "PACKAGE BODY",
                "PROCEDURE",
                "FUNCTION",
                "PACKAGE",
                "END IF"
            ]
        );
        let tie = SubstitutionDictionary::new([("BB", "2"), ("AA", "1")]).unwrap();
        assert_eq!(tie.pairs()[0].0, "AA");
        assert!(SubstitutionDictionary::new([("A", "x"), ("a", "y")]).is_err());
        assert!(SubstitutionDictionary::new([("A", "x"), ("B", "x")]).is_err());
        assert!(SubstitutionDictionary::new([("BEGIN", "EG")]).is_err());
    }
}
