use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use tokenopt_core::gateway::{record, Generator, HttpBackend, MockBackend, ReplayBackend, ReplayCache};
use tokenopt_core::metrics::display;
use tokenopt_core::pipeline::{
    emit_report, generate_synthetic_corpus, load_corpus, prepare, run_case, run_experiment, select_strategy,
    write_corpus, BackendChoice, CorpusDials, MigrationCase, Objective, PipelineConfig, PipelineError, ReportFormat,
    StructuralProfile,
};
use tokenopt_core::sql::SqlArtifact;
use tokenopt_core::strategies::{apply_strategy, eq11_branch, StrategyId, SubstitutionDictionary};

#[derive(Parser)]
#[command(name = "tokenopt", version, about = "Token-optimized Oracle to PostgreSQL migration")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

/// Settings that override the config file.
#[derive(Args, Default)]
struct Overrides {
    /// TOML configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    model: Option<String>,
    #[arg(long, global = true)]
    temperature: Option<f64>,
    #[arg(long, global = true)]
    system_prompt: Option<String>,
    /// replay, mock or http
    #[arg(long, global = true)]
    backend: Option<BackendChoice>,
    /// Replay cache (JSON Lines)
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// semantic-critical, balanced or cost-critical
    #[arg(long, global = true)]
    objective: Option<Objective>,
    /// JSON file of [keyword phrase, replacement] pairs
    #[arg(long, global = true)]
    dict: Option<PathBuf>,
    #[arg(long, global = true)]
    alias_prefix: Option<String>,
    /// CodeBLEU n-gram weight
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// CodeBLEU keyword weight
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    min_semantic_match: Option<f64>,
    #[arg(long, global = true)]
    max_total_tokens: Option<usize>,
    #[arg(long, global = true)]
    output_reserve: Option<usize>,
    #[arg(long, global = true)]
    endpoint: Option<String>,
    /// More log output on stderr
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Apply one optimization strategy to a SQL file
    Optimize {
        input: PathBuf,
        #[arg(long, short)]
        strategy: StrategyId,
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Alias map file for identifier masking
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Migrate a file through the selected strategy with quality-gated fallback
    Migrate {
        input: PathBuf,
        /// Skip selection and start the ladder at this strategy
        #[arg(long, short)]
        strategy: Option<StrategyId>,
        /// Expected PostgreSQL; without it only the syntax gate applies
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run strategies over a corpus and write report tables
    Evaluate {
        #[arg(long)]
        corpus: PathBuf,
        /// Comma-separated strategy names, or "all"
        #[arg(long, default_value = "all")]
        strategies: String,
        #[arg(long)]
        report_dir: PathBuf,
    },
    /// Show the structural profile and the strategy each policy picks
    Route { input: PathBuf },
    /// Generate a seeded synthetic corpus as JSON Lines
    CorpusGen {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long)]
        plsql_ratio: Option<f64>,
        #[arg(long)]
        comment_density: Option<f64>,
        #[arg(long)]
        storage_density: Option<f64>,
        #[arg(long)]
        min_identifier_len: Option<usize>,
        #[arg(long)]
        max_identifier_len: Option<usize>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Fill the replay cache from a live or mock backend
    Record {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "all")]
        strategies: String,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.overrides.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let config = load_config(&cli.overrides)?;
    match cli.command {
        Command::Optimize { input, strategy, out, map } => optimize(&config, &input, strategy, out, map),
        Command::Migrate {
            input,
            strategy,
            reference,
            out,
        } => migrate(&config, &input, strategy, reference, out),
        Command::Evaluate {
            corpus,
            strategies,
            report_dir,
        } => evaluate(&config, &corpus, &strategies, &report_dir),
        Command::Route { input } => route(&config, &input),
        Command::CorpusGen {
            seed,
            count,
            plsql_ratio,
            comment_density,
            storage_density,
            min_identifier_len,
            max_identifier_len,
            out,
        } => {
            let mut dials = CorpusDials::default();
            if let Some(v) = plsql_ratio {
                dials.plsql_ratio = v;
            }
            if let Some(v) = comment_density {
                dials.comment_density = v;
            }
            if let Some(v) = storage_density {
                dials.storage_density = v;
            }
            if let Some(v) = min_identifier_len {
                dials.min_identifier_len = v;
            }
            if let Some(v) = max_identifier_len {
                dials.max_identifier_len = v;
            }
            corpus_gen(seed, count, &dials, out)
        }
        Command::Record { corpus, strategies } => record_cache(&config, &corpus, &strategies),
    }
}

fn load_config(o: &Overrides) -> Result<PipelineConfig> {
    let mut c = match &o.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(v) = &o.model {
        c.model = v.clone();
    }
    if let Some(v) = o.temperature {
        c.temperature = v;
    }
    if let Some(v) = &o.system_prompt {
        c.system_prompt = v.clone();
    }
    if let Some(v) = o.backend {
        c.backend = v;
    }
    if let Some(v) = &o.cache {
        c.cache = Some(v.clone());
    }
    if let Some(v) = o.objective {
        c.objective = v;
    }
    if let Some(path) = &o.dict {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let dict: SubstitutionDictionary =
            serde_json::from_str(&text).with_context(|| format!("dictionary {}", path.display()))?;
        c.dictionary = Some(dict);
    }
    if let Some(v) = &o.alias_prefix {
        c.alias_prefix = v.clone();
    }
    match (o.alpha, o.beta) {
        (Some(a), Some(b)) => (c.weights.alpha, c.weights.beta) = (a, b),
        (Some(a), None) => (c.weights.alpha, c.weights.beta) = (a, 1.0 - a),
        (None, Some(b)) => (c.weights.alpha, c.weights.beta) = (1.0 - b, b),
        (None, None) => {}
    }
    if let Some(v) = o.min_semantic_match {
        c.gates.min_semantic_match = v;
    }
    if let Some(v) = o.max_total_tokens {
        c.budget.max_total_tokens = Some(v);
    }
    if let Some(v) = o.output_reserve {
        c.budget.output_reserve = Some(v);
    }
    if let Some(v) = &o.endpoint {
        c.http.endpoint = v.clone();
    }
    c.validate()?;
    Ok(c)
}

fn read_input(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn parse_strategies(list: &str) -> Result<Vec<StrategyId>> {
    if list.trim().eq_ignore_ascii_case("all") {
        return Ok(StrategyId::ALL.to_vec());
    }
    let mut out = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let id: StrategyId = name.parse()?;
        if !out.contains(&id) {
            out.push(id);
        }
    }
    if out.is_empty() {
        bail!("no strategies given");
    }
    Ok(out)
}

fn generator(config: &PipelineConfig, writable_cache: bool) -> Result<Box<dyn Generator>> {
    let counter = config.run_settings().strategy_config.counter;
    Ok(match config.backend {
        BackendChoice::Mock => Box::new(MockBackend::new(counter)),
        BackendChoice::Http => Box::new(HttpBackend::new(config.http.clone(), counter)?),
        BackendChoice::Replay => {
            let Some(path) = &config.cache else {
                bail!("the replay backend needs --cache or `cache` in the config file");
            };
            let cache = if writable_cache {
                ReplayCache::open_or_create(path)?
            } else {
                ReplayCache::load(path)?
            };
            Box::new(ReplayBackend::new(Arc::new(cache), counter))
        }
    })
}

fn optimize(
    config: &PipelineConfig,
    input: &Path,
    strategy: StrategyId,
    out: Option<PathBuf>,
    map: Option<PathBuf>,
) -> Result<ExitCode> {
    let text = read_input(input)?;
    let settings = config.run_settings();
    let artifact = SqlArtifact::oracle(text.clone());
    let ctx = apply_strategy(strategy, &artifact, &settings.strategy_config)?;
    write_output(out.as_deref(), ctx.prompt_text())?;
    if let Some(aliases) = ctx.alias_map() {
        let path = map.unwrap_or_else(|| {
            let base = out.as_deref().unwrap_or(input);
            let mut name = base.as_os_str().to_owned();
            name.push(".map.json");
            PathBuf::from(name)
        });
        let json = serde_json::to_string_pretty(aliases)?;
        fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
        log::info!("alias map written to {}", path.display());
    }
    let before = settings.strategy_config.counter.count(&text).value();
    let after = ctx.input_tokens().value();
    let saved = if before == 0 {
        0.0
    } else {
        100.0 * (before as f64 - after as f64) / before as f64
    };
    eprintln!("in={before} out={after} saved={}%", display(saved, 2));
    Ok(ExitCode::SUCCESS)
}

fn case_id(path: &Path) -> String {
    path.file_stem().map_or_else(|| "input".to_string(), |s| s.to_string_lossy().into_owned())
}

fn migrate(
    config: &PipelineConfig,
    input: &Path,
    strategy: Option<StrategyId>,
    reference: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<ExitCode> {
    let text = read_input(input)?;
    let strategy = match strategy {
        Some(s) => s,
        None => select_strategy(&StructuralProfile::of(&SqlArtifact::oracle(text.clone()), config.objective)?),
    };
    let case = MigrationCase {
        id: case_id(input),
        input_db_query: text,
        output_db_query: match &reference {
            Some(path) => read_input(path)?,
            None => String::new(),
        },
    };
    let settings = config.run_settings();
    let backend = generator(config, false)?;
    let outcome = run_case(&case, strategy, &settings, backend.as_ref())?;
    let mut output = outcome.output.clone();
    if !output.ends_with('\n') {
        output.push('\n');
    }
    write_output(out.as_deref(), &output)?;
    let attempts: Vec<&str> = outcome.attempts.iter().map(|s| s.cli_name()).collect();
    let e = &outcome.evaluation;
    let mut summary = format!(
        "strategy={} attempts={} in={} out={} parse={}",
        outcome.final_strategy,
        attempts.join(">"),
        e.input_tokens.value(),
        e.output_tokens.value(),
        e.parse_valid
    );
    if reference.is_some() {
        summary.push_str(&format!(" sm={} codebleu={}", display(e.semantic_match, 4), display(e.codebleu, 4)));
    }
    eprintln!("{summary}");
    for w in &outcome.demask_warnings {
        log::warn!("{w}");
    }
    Ok(ExitCode::SUCCESS)
}

fn evaluate(config: &PipelineConfig, corpus: &Path, strategies: &str, report_dir: &Path) -> Result<ExitCode> {
    let cases = load_corpus(corpus)?;
    let strategies = parse_strategies(strategies)?;
    let backend = generator(config, false)?;
    let result = match run_experiment(&cases, &strategies, &config.run_settings(), backend.as_ref()) {
        Ok(r) => r,
        Err(e @ PipelineError::CacheMisses { .. }) => {
            eprintln!("error: {e}:");
            if let PipelineError::CacheMisses { keys } = &e {
                for key in keys {
                    eprintln!("  {key}");
                }
            }
            return Ok(ExitCode::from(1));
        }
        Err(e) => return Err(e.into()),
    };
    for (strategy, outcomes) in &result.outcomes {
        for o in outcomes.iter().filter(|o| o.error.is_some()) {
            log::warn!("{strategy} on {}: {}", o.evaluation.case_id, o.error.as_deref().unwrap_or_default());
        }
    }
    for format in ReportFormat::ALL {
        for path in emit_report(&result.reports, &result.deltas, format, report_dir)? {
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn route(config: &PipelineConfig, input: &Path) -> Result<ExitCode> {
    let artifact = SqlArtifact::oracle(read_input(input)?);
    let profile = StructuralProfile::of(&artifact, config.objective)?;
    let mut out = String::new();
    out.push_str(&format!("plsql_percentage: {}\n", display(profile.plsql_percentage, 2)));
    out.push_str(&format!("has_long_identifiers: {}\n", profile.has_long_identifiers));
    out.push_str(&format!("has_physical_params: {}\n", profile.has_physical_params));
    out.push_str(&format!("is_ddl_only: {}\n", profile.is_ddl_only));
    out.push_str(&format!("eq11: {}\n", eq11_branch(profile.plsql_percentage)));
    for objective in Objective::ALL {
        let picked = select_strategy(&StructuralProfile {
            objective,
            ..profile.clone()
        });
        out.push_str(&format!("{objective}: {}\n", picked.report_name().to_lowercase()));
    }
    out.push_str(&format!("selected: {}\n", select_strategy(&profile).cli_name()));
    write_output(None, &out)?;
    Ok(ExitCode::SUCCESS)
}

fn corpus_gen(seed: u64, count: usize, dials: &CorpusDials, out: Option<PathBuf>) -> Result<ExitCode> {
    if count == 0 {
        bail!("--count must be at least 1");
    }
    let cases = generate_synthetic_corpus(seed, count, dials);
    match out {
        Some(path) => write_corpus(&path, &cases)?,
        None => {
            let mut text = String::new();
            for c in &cases {
                text.push_str(&serde_json::to_string(c)?);
                text.push('\n');
            }
            write_output(None, &text)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn record_cache(config: &PipelineConfig, corpus: &Path, strategies: &str) -> Result<ExitCode> {
    let Some(cache_path) = &config.cache else {
        bail!("record needs --cache or `cache` in the config file");
    };
    if config.backend == BackendChoice::Replay {
        bail!("record needs a generating backend (--backend mock or --backend http)");
    }
    let cases = load_corpus(corpus)?;
    let strategies = parse_strategies(strategies)?;
    let cache = ReplayCache::open_or_create(cache_path)?;
    let backend = generator(config, true)?;
    let settings = config.run_settings();
    let (mut added, mut present, mut skipped) = (0usize, 0usize, 0usize);
    for &strategy in &strategies {
        for case in &cases {
            let request = match prepare(case, strategy, &settings) {
                Ok((_, r)) => r,
                Err(e) => {
                    log::info!("{strategy} on {}: {e}", case.id);
                    skipped += 1;
                    continue;
                }
            };
            if cache.lookup(&request.cache_key()).is_some() {
                present += 1;
                continue;
            }
            let generated = backend.generate(&request)?;
            if record(&request, &generated.text, &cache)? {
                added += 1;
            } else {
                present += 1;
            }
        }
    }
    eprintln!("recorded={added} already_present={present} not_applicable={skipped}");
    Ok(ExitCode::SUCCESS)
}
