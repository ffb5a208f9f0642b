//! Metrics checked against independent reference computations.

use proptest::prelude::*;
use tokenopt_core::metrics::{
    codebleu, codebleu_default, semantic_match, token_efficiency, token_similarity, CaseEvaluation, CodeBleuWeights,
    MetricsError, StrategyReport, TokenSimilarityAdjudicator,
};
use tokenopt_core::pipeline::{generate_synthetic_corpus, CorpusDials};
use tokenopt_core::sql::{count_tokens, parse, Dialect, TokenCount};
use tokenopt_core::strategies::StrategyId;

const KEYWORDS: [&str; 4] = ["SELECT", "FROM", "WHERE", "AND"];

/// Counts of every n-gram by scanning all windows pairwise.
fn count_of(gram: &[&str], toks: &[&str]) -> usize {
    (0..toks.len().saturating_sub(gram.len() - 1))
        .filter(|&i| toks[i..i + gram.len()] == *gram)
        .count()
}

fn bleu_oracle(cand: &[&str], refr: &[&str]) -> f64 {
    let orders = refr.len().min(4);
    let mut product = 1.0;
    for n in 1..=orders {
        if cand.len() < n {
            return 0.0;
        }
        let windows = cand.len() - n + 1;
        let mut seen: Vec<&[&str]> = Vec::new();
        let mut clipped = 0;
        for i in 0..windows {
            let g = &cand[i..i + n];
            if seen.contains(&g) {
                continue;
            }
            seen.push(g);
            clipped += count_of(g, cand).min(count_of(g, refr));
        }
        product *= clipped as f64 / windows as f64;
    }
    let bp = if cand.len() > refr.len() {
        1.0
    } else {
        (1.0 - refr.len() as f64 / cand.len() as f64).exp()
    };
    bp * product.powf(1.0 / orders as f64)
}

fn keyword_oracle(cand: &[&str], refr: &[&str]) -> Option<f64> {
    let total = refr.iter().filter(|t| KEYWORDS.contains(t)).count();
    if total == 0 {
        return None;
    }
    let matched: usize = KEYWORDS
        .iter()
        .map(|k| {
            let r = refr.iter().filter(|t| *t == k).count();
            let c = cand.iter().filter(|t| *t == k).count();
            r.min(c)
        })
        .sum();
    Some(matched as f64 / total as f64)
}

fn codebleu_oracle(cand: &str, refr: &str) -> f64 {
    let c: Vec<&str> = cand.split_whitespace().collect();
    let r: Vec<&str> = refr.split_whitespace().collect();
    if c.is_empty() {
        return keyword_oracle(&c, &r).map_or(0.0, |k| 0.5 * k);
    }
    let b = bleu_oracle(&c, &r);
    match keyword_oracle(&c, &r) {
        Some(k) => 0.5 * b + 0.5 * k,
        None => b,
    }
}

fn counter_oracle(text: &str) -> usize {
    let mut total = 0;
    for piece in text.split(|c: char| !(c.is_alphanumeric() || c == '_')) {
        total += piece.chars().count().div_ceil(4);
    }
    total + text.chars().filter(|c| !(c.is_alphanumeric() || *c == '_' || c.is_whitespace())).count()
}

#[test]
fn codebleu_matches_oracle_on_fixed_pairs() {
    let pairs = [
        ("SELECT a FROM t", "SELECT a FROM t"),
        ("SELECT a FROM t WHERE b = 1", "SELECT a FROM t"),
        ("SELECT a , b FROM t", "SELECT a FROM t WHERE a = 1 AND b = 1"),
        ("SELECT b FROM t", "SELECT a FROM t"),
        ("a b c", "a b c d"),
        ("t", "SELECT a"),
    ];
    for (g, r) in pairs {
        let got = codebleu_default(g, r).unwrap();
        let want = codebleu_oracle(g, r);
        assert!((got - want).abs() < 1e-12, "{g:?} vs {r:?}: {got} != {want}");
    }
}

#[test]
fn codebleu_shares() {
    // one of three unigrams wrong, no bigram matches across the change
    let g = "SELECT b FROM t";
    let r = "SELECT a FROM t";
    assert_eq!(codebleu_default(g, r).unwrap(), 0.5 * 0.0 + 0.5 * 1.0);
    let w = CodeBleuWeights { alpha: 1.0, beta: 0.0 };
    assert_eq!(codebleu(r, r, w).unwrap(), 1.0);
    assert!(matches!(codebleu_default("SELECT 1", "  "), Err(MetricsError::EmptyReference)));
}

#[test]
fn semantic_match_single_leaf_change() {
    // fingerprints describe a node and its children's kinds, so renaming one
    // leaf changes exactly one fingerprint out of N
    let n = parse("SELECT a FROM t", Dialect::Postgres).unwrap().node_count() as f64;
    let sm = semantic_match("SELECT a FROM t", "SELECT b FROM t");
    assert!((sm - (n - 1.0) / n).abs() < 1e-12, "{sm} vs {}", (n - 1.0) / n);
}

#[test]
fn semantic_match_unparseable_uses_penalised_lcs() {
    // tokens: select a from | select a from t; LCS 3, lengths 3 and 4
    let sm = semantic_match("SELECT a FROM", "SELECT a FROM t");
    assert!((sm - 0.5 * 6.0 / 7.0).abs() < 1e-12);
    assert!((token_similarity("x y z", "y z x") - 2.0 * 2.0 / 6.0).abs() < 1e-12);
}

#[test]
fn aggregation_of_case_scores() {
    let adj = TokenSimilarityAdjudicator;
    let w = CodeBleuWeights::default();
    let evals = vec![
        CaseEvaluation::score("a", "SELECT a FROM t", "SELECT a FROM t", TokenCount(10), TokenCount(6), &adj, w)
            .unwrap(),
        CaseEvaluation::failed("b", TokenCount(30)),
    ];
    let r = StrategyReport::from_evaluations(StrategyId::Pruning, &evals).unwrap();
    assert_eq!(r.avg_in_tokens, 20.0);
    assert_eq!(r.avg_out_tokens, 3.0);
    assert_eq!(r.vsr_pct, 50.0);
    assert_eq!(r.em_pct, 50.0);
    assert_eq!(r.sm_pct, 50.0);
    assert_eq!(r.te, 1000.0 * 0.5 / 23.0);
    assert_eq!(token_efficiency(0.5, 20.0, 3.0).unwrap(), r.te);
    assert!(StrategyReport::from_evaluations(StrategyId::Pruning, &[]).is_err());
}

#[test]
fn identities_on_synthetic_references() {
    for case in generate_synthetic_corpus(11, 60, &CorpusDials::default()) {
        let r = &case.output_db_query;
        assert_eq!(semantic_match(r, r), 1.0, "{r}");
        assert_eq!(codebleu_default(r, r).unwrap(), 1.0, "{r}");
    }
}

fn sql_words() -> impl Strategy<Value = String> {
    let vocab = prop::sample::select(vec!["SELECT", "FROM", "WHERE", "AND", "a", "b", "c", "t", "=", "1"]);
    prop::collection::vec(vocab, 1..14).prop_map(|v| v.join(" "))
}

proptest! {
    #[test]
    fn codebleu_agrees_with_oracle(g in sql_words(), r in sql_words()) {
        let got = codebleu_default(&g, &r).unwrap();
        prop_assert!((got - codebleu_oracle(&g, &r)).abs() < 1e-9, "{} / {}: {}", g, r, got);
        prop_assert!((0.0..=1.0).contains(&got));
    }

    #[test]
    fn semantic_match_in_range(g in sql_words(), r in sql_words()) {
        let sm = semantic_match(&g, &r);
        prop_assert!((0.0..=1.0).contains(&sm));
    }

    #[test]
    fn counter_agrees_with_oracle(s in "[a-zA-Z0-9_ ,;()'\n.-]{0,60}") {
        prop_assert_eq!(count_tokens(&s).value(), counter_oracle(&s));
    }
}
