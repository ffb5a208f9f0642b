//! Strategy contracts checked over the synthetic corpus.

use tokenopt_core::pipeline::{generate_synthetic_corpus, CorpusDials, MigrationCase};
use tokenopt_core::sql::{lex, parse, physical_clause_tokens, plsql_ratio, prune_nodes, Dialect, SqlArtifact, TokenKind};
use tokenopt_core::strategies::{
    apply_strategy, ast_minify, demask, dsl_compress, eq11_branch, mask_identifiers, minify, prune, refactor_quotes,
    route_adaptive, RouteBranch, StrategyConfig, StrategyId, SubstitutionDictionary,
};

fn corpus(seed: u64) -> Vec<MigrationCase> {
    let mut out = Vec::new();
    for (i, (plsql, comments, storage, lo, hi)) in [
        (0.0, 1.0, 1.0, 3, 24),
        (1.0, 0.5, 0.0, 1, 4),
        (0.5, 0.0, 0.5, 18, 40),
        (0.5, 1.0, 1.0, 3, 12),
    ]
    .into_iter()
    .enumerate()
    {
        let dials = CorpusDials {
            plsql_ratio: plsql,
            comment_density: comments,
            storage_density: storage,
            min_identifier_len: lo,
            max_identifier_len: hi,
        };
        out.extend(generate_synthetic_corpus(seed + i as u64, 30, &dials));
    }
    out
}

fn oracle(text: &str) -> SqlArtifact {
    SqlArtifact::oracle(text)
}

#[test]
fn masking_round_trips_to_minified_text() {
    for case in corpus(100) {
        let a = oracle(&case.input_db_query);
        let (ctx, map) = mask_identifiers(&a).unwrap();
        assert_eq!(demask(ctx.prompt_text(), &map), minify(&a).prompt_text(), "{}", case.id);
        for (ident, _) in map.entries() {
            let hit = lex(ctx.prompt_text(), Dialect::Oracle)
                .unwrap()
                .iter()
                .any(|t| t.kind == TokenKind::Identifier && &t.text == ident);
            assert!(!hit, "{} survived masking in {}", ident, case.id);
        }
    }
}

#[test]
fn masking_substring_trap() {
    let src = "SELECT USER_ID, USER_ID_OLD FROM USERS WHERE USER_ID > 0";
    let a = oracle(src);
    let (ctx, map) = mask_identifiers(&a).unwrap();
    assert!(!ctx.prompt_text().contains("USER"));
    assert_eq!(demask(ctx.prompt_text(), &map), minify(&a).prompt_text());
}

#[test]
fn minify_preserves_structure() {
    for case in corpus(200) {
        let Ok(tree) = parse(&case.input_db_query, Dialect::Oracle) else {
            continue;
        };
        let a = oracle(&case.input_db_query);
        assert_eq!(parse(minify(&a).prompt_text(), Dialect::Oracle).unwrap(), tree, "{}", case.id);
        let ast = ast_minify(&a).unwrap();
        assert_eq!(parse(ast.prompt_text(), Dialect::Oracle).unwrap(), prune_nodes(&tree), "{}", case.id);
    }
}

fn string_literals(text: &str) -> Vec<String> {
    lex(text, Dialect::Oracle)
        .unwrap()
        .into_iter()
        .filter(|t| t.kind == TokenKind::StringLiteral)
        .map(|t| t.text)
        .collect()
}

#[test]
fn pruning_drops_comments_and_storage_only() {
    let dials = CorpusDials {
        comment_density: 1.0,
        storage_density: 1.0,
        ..CorpusDials::default()
    };
    for case in generate_synthetic_corpus(300, 80, &dials) {
        let out = prune(&oracle(&case.input_db_query));
        let text = out.prompt_text();
        let tokens = lex(text, Dialect::Oracle).unwrap();
        assert!(tokens.iter().all(|t| !t.kind.is_comment()), "{text}");
        assert!(physical_clause_tokens(&tokens, Dialect::Oracle).iter().all(|m| !m));
        for word in ["TABLESPACE", "PCTFREE", "STORAGE", "NOLOGGING"] {
            assert!(!tokens.iter().any(|t| t.kind.is_word() && t.text.eq_ignore_ascii_case(word)), "{text}");
        }
        assert_eq!(string_literals(text), string_literals(&case.input_db_query));
    }
}

#[test]
fn idempotence() {
    for case in corpus(400) {
        let a = oracle(&case.input_db_query);
        let once = prune(&a);
        assert_eq!(prune(&oracle(once.prompt_text())).prompt_text(), once.prompt_text());
        let once = minify(&a);
        assert_eq!(minify(&oracle(once.prompt_text())).prompt_text(), once.prompt_text());
        let once = refactor_quotes(&a);
        assert_eq!(refactor_quotes(&oracle(once.prompt_text())).prompt_text(), once.prompt_text());
        if let Ok(once) = ast_minify(&a) {
            assert_eq!(ast_minify(&oracle(once.prompt_text())).unwrap().prompt_text(), once.prompt_text());
        }
    }
}

#[test]
fn baseline_is_identity_and_strategies_never_grow_minified_input() {
    let config = StrategyConfig::default();
    for case in corpus(500) {
        let a = oracle(&case.input_db_query);
        let base = apply_strategy(StrategyId::Baseline, &a, &config).unwrap();
        assert_eq!(base.prompt_text(), case.input_db_query);
        let min = apply_strategy(StrategyId::Minification, &a, &config).unwrap();
        assert!(min.input_tokens() <= base.input_tokens());
        let pruned = apply_strategy(StrategyId::Pruning, &a, &config).unwrap();
        assert!(pruned.input_tokens() <= base.input_tokens());
    }
}

#[test]
fn adaptive_routing_equals_its_branch() {
    let dict = SubstitutionDictionary::default();
    for case in corpus(600) {
        let a = oracle(&case.input_db_query);
        let routed = route_adaptive(&a, &dict).unwrap();
        let direct = match eq11_branch(plsql_ratio(&a).unwrap()) {
            RouteBranch::Dsl => dsl_compress(&a, &dict).unwrap(),
            RouteBranch::Refactoring => refactor_quotes(&a),
            RouteBranch::Minification => minify(&a),
        };
        assert_eq!(routed.prompt_text(), direct.prompt_text());
        assert_eq!(routed.strategy(), StrategyId::Adaptive);
    }
}
