//! End-to-end runs of the `tokenopt` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn tokenopt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tokenopt")).args(args).output().expect("binary runs")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const COMMENTED: &str = "-- list orders\nSELECT id, /* total */ amount\n  FROM orders -- all of them\n WHERE id > 0;\n";

#[test]
fn baseline_is_a_byte_identical_passthrough() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "q.sql", COMMENTED);
    let o = tokenopt(&["optimize", p(&input), "-s", "baseline"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), COMMENTED);
    assert!(stderr(&o).contains("saved=0.00%"), "{}", stderr(&o));
}

#[test]
fn pruning_drops_comments() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "q.sql", COMMENTED);
    let out = dir.path().join("pruned.sql");
    let o = tokenopt(&["optimize", p(&input), "--strategy", "context-pruning", "-o", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert!(!text.contains("--") && !text.contains("/*"), "{text}");
    assert!(text.contains("amount") && text.contains("WHERE id > 0"), "{text}");
}

#[test]
fn masking_writes_an_alias_map_and_migrate_restores_names() {
    let dir = tempfile::tempdir().unwrap();
    let sql = "SELECT customer_id, order_total FROM customer_orders WHERE customer_id > 10";
    let input = write(dir.path(), "q.sql", sql);
    let out = dir.path().join("masked.sql");
    let o = tokenopt(&["optimize", p(&input), "-s", "identifier-masking", "-o", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let masked = fs::read_to_string(&out).unwrap();
    assert!(!masked.contains("customer"), "{masked}");
    let map = fs::read_to_string(dir.path().join("masked.sql.map.json")).unwrap();
    assert!(map.contains("customer_orders"), "{map}");

    // the mock backend echoes the prompt, so the demasked answer is the
    // minified input
    let minified = "SELECT customer_id,order_total FROM customer_orders WHERE customer_id>10";
    let reference = write(dir.path(), "ref.sql", minified);
    let o = tokenopt(&[
        "migrate",
        p(&input),
        "-s",
        "identifier-masking",
        "--backend",
        "mock",
        "--reference",
        p(&reference),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim_end(), minified);
    let summary = stderr(&o);
    assert!(summary.contains("strategy=identifier-masking"), "{summary}");
    assert!(summary.contains("sm=1.0000"), "{summary}");
}

fn route_lines(dir: &Path, sql: &str) -> Vec<String> {
    let input = write(dir, "r.sql", sql);
    let o = tokenopt(&["route", p(&input)]);
    assert!(o.status.success(), "{}", stderr(&o));
    stdout(&o).lines().map(str::to_string).collect()
}

#[test]
fn route_reports_branch_and_policy_choices() {
    let dir = tempfile::tempdir().unwrap();
    let ddl = route_lines(dir.path(), "CREATE TABLE t (a NUMBER) TABLESPACE users;\n");
    assert!(ddl.contains(&"eq11: refactoring".to_string()), "{ddl:?}");
    assert!(ddl.contains(&"semantic-critical: pruning".to_string()), "{ddl:?}");
    assert!(ddl.contains(&"is_ddl_only: true".to_string()), "{ddl:?}");

    let mut block = String::from("BEGIN\n");
    for _ in 0..40 {
        block.push_str("  NULL;\n");
    }
    block.push_str("END;\n/\nSELECT a FROM t;\n");
    let plsql = route_lines(dir.path(), &block);
    assert!(plsql.contains(&"eq11: dsl".to_string()), "{plsql:?}");

    let mixed = route_lines(dir.path(), "BEGIN\n  NULL;\nEND;\n/\nSELECT a, b, c FROM t WHERE a = 1;\n");
    assert!(mixed.contains(&"eq11: minification".to_string()), "{mixed:?}");
}

fn evaluate(report_dir: &Path, cache: &Path) -> Output {
    let corpus = fixture("corpus.jsonl");
    tokenopt(&[
        "evaluate",
        "--backend",
        "replay",
        "--cache",
        p(cache),
        "--corpus",
        p(&corpus),
        "--report-dir",
        p(report_dir),
    ])
}

#[test]
fn evaluate_from_the_fixture_cache_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let o = evaluate(d, &fixture("cache.jsonl"));
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 6);
    for name in &names {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name:?}");
    }
    let csv: Vec<String> = names.iter().map(|n| n.to_string_lossy().into_owned()).filter(|n| n.ends_with(".csv")).collect();
    let rows: usize = csv.iter().map(|n| fs::read_to_string(a.join(n)).unwrap().lines().count() - 1).sum();
    assert_eq!(rows, 12 + 11);
}

#[test]
fn evaluate_lists_missing_cache_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cache = write(dir.path(), "empty.jsonl", "");
    let reports = dir.path().join("reports");
    let o = evaluate(&reports, &cache);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("missing from the replay cache"), "{err}");
    assert!(err.lines().any(|l| l.trim().len() == 64 && l.trim().chars().all(|c| c.is_ascii_hexdigit())), "{err}");
    assert!(!reports.exists());
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(tokenopt(&["route", "x.sql", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(tokenopt(&["optimize", "x.sql", "-s", "no-such-strategy"]).status.code(), Some(2));
    assert_eq!(tokenopt(&["--help"]).status.code(), Some(0));
}

#[test]
fn domain_errors_exit_with_one() {
    let o = tokenopt(&["route", "/nonexistent/input.sql"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error: "));
}

#[test]
fn corpus_gen_is_seeded() {
    let a = tokenopt(&["corpus-gen", "--seed", "9", "--count", "5"]);
    let b = tokenopt(&["corpus-gen", "--seed", "9", "--count", "5"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 5);
}
