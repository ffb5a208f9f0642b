//! Two-component CodeBLEU: n-gram BLEU plus reserved-word match.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::sql::keywords::is_reserved;
use crate::sql::{lex_lenient, Dialect, TokenKind};

use super::MetricsError;

/// Weights of the BLEU and keyword components; they sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeBleuWeights {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for CodeBleuWeights {
    fn default() -> Self {
        Self { alpha: 0.5, beta: 0.5 }
    }
}

const MAX_ORDER: usize = 4;

/// Non-whitespace tokens with keywords upper-cased.
fn tokens(text: &str) -> Vec<String> {
    lex_lenient(text, Dialect::Postgres)
        .into_iter()
        .filter(|t| t.kind != TokenKind::Whitespace)
        .map(|t| if t.kind == TokenKind::Keyword { t.upper() } else { t.text })
        .collect()
}

fn ngram_counts(toks: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for gram in toks.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Geometric mean of clipped n-gram precisions for orders up to
/// `min(4, |reference|)`, times the brevity penalty. Unsmoothed.
fn bleu(cand: &[String], refr: &[String]) -> f64 {
    if cand.is_empty() {
        return 0.0;
    }
    let orders = MAX_ORDER.min(refr.len());
    let mut log_sum = 0.0;
    for n in 1..=orders {
        let total = cand.len().saturating_sub(n - 1);
        if total == 0 {
            return 0.0;
        }
        let refc = ngram_counts(refr, n);
        let clipped: usize = ngram_counts(cand, n)
            .into_iter()
            .map(|(g, c)| c.min(refc.get(g).copied().unwrap_or(0)))
            .sum();
        if clipped == 0 {
            return 0.0;
        }
        log_sum += (clipped as f64 / total as f64).ln();
    }
    let bp = if cand.len() > refr.len() {
        1.0
    } else {
        (1.0 - refr.len() as f64 / cand.len() as f64).exp()
    };
    bp * (log_sum / orders as f64).exp()
}

/// Matched reference keyword occurrences over total reference keyword
/// occurrences, counted with multiplicity. `None` when the reference has no
/// reserved words.
fn keyword_match(cand: &[String], refr: &[String]) -> Option<f64> {
    let kw = |toks: &[String]| {
        let mut m: HashMap<String, usize> = HashMap::new();
        for t in toks.iter().filter(|t| is_reserved(t)) {
            *m.entry(t.to_ascii_uppercase()).or_default() += 1;
        }
        m
    };
    let r = kw(refr);
    let total: usize = r.values().sum();
    if total == 0 {
        return None;
    }
    let c = kw(cand);
    let matched: usize = r.iter().map(|(k, n)| (*n).min(c.get(k).copied().unwrap_or(0))).sum();
    Some(matched as f64 / total as f64)
}

/// `alpha·BLEU + beta·keyword match`, clamped to `[0, 1]`. Without reserved
/// words in the reference the score is BLEU alone.
pub fn codebleu(generated: &str, reference: &str, weights: CodeBleuWeights) -> Result<f64, MetricsError> {
    let refr = tokens(reference);
    if refr.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    let cand = tokens(generated);
    let b = bleu(&cand, &refr);
    let score = match keyword_match(&cand, &refr) {
        Some(k) => weights.alpha * b + weights.beta * k,
        None => b,
    };
    Ok(score.clamp(0.0, 1.0))
}

/// [`codebleu`] with equal weights.
pub fn codebleu_default(generated: &str, reference: &str) -> Result<f64, MetricsError> {
    codebleu(generated, reference, CodeBleuWeights::default())
}
