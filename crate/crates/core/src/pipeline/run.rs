//! Per-case execution with quality gates and fallback, and whole-corpus
//! experiments.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gateway::{GatewayError, GenerationRequest, Generator};
use crate::metrics::{
    delta_from_baseline, Adjudicator, CaseEvaluation, CodeBleuWeights, DeltaReport, StrategyReport,
    TokenSimilarityAdjudicator,
};
use crate::sql::{parse, Dialect, SqlArtifact, TokenCount};
use crate::strategies::{
    apply_strategy, constrained_system_prompt, demask_with_warnings, OptimizedContext, StrategyConfig,
    StrategyId, DEFAULT_SYSTEM_PROMPT,
};

use super::policy::{enforce_budget, fallback_ladder, BudgetConfig, MigrationContext};
use super::{MigrationCase, PipelineError};

/// Minimum quality for accepting a generation without falling back.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QualityGates {
    pub require_parse: bool,
    pub min_semantic_match: f64,
}

impl Default for QualityGates {
    fn default() -> Self {
        Self {
            require_parse: true,
            min_semantic_match: 0.85,
        }
    }
}

impl QualityGates {
    pub fn pass(&self, eval: &CaseEvaluation) -> bool {
        (eval.parse_valid || !self.require_parse) && eval.semantic_match >= self.min_semantic_match
    }

    /// Without a reference only the syntax gate can be checked.
    pub fn pass_unreferenced(&self, eval: &CaseEvaluation) -> bool {
        eval.parse_valid || !self.require_parse
    }
}

/// Everything a run needs besides the corpus and the backend.
#[derive(Clone)]
pub struct RunSettings {
    pub strategy_config: StrategyConfig,
    pub system_prompt: String,
    pub model_name: String,
    pub temperature: f64,
    pub context: MigrationContext,
    pub gates: QualityGates,
    /// Cap on input plus reserved output tokens; `None` disables the check.
    pub max_total_tokens: Option<usize>,
    /// Fixed output reserve; `None` reserves 110 % of the input's tokens.
    pub output_reserve: Option<usize>,
    pub weights: CodeBleuWeights,
    pub adjudicator: Arc<dyn Adjudicator>,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            strategy_config: StrategyConfig::default(),
            system_prompt: DEFAULT_SYSTEM_PROMPT.to_string(),
            model_name: "gpt-4o".to_string(),
            temperature: 0.0,
            context: MigrationContext::default(),
            gates: QualityGates::default(),
            max_total_tokens: None,
            output_reserve: None,
            weights: CodeBleuWeights::default(),
            adjudicator: Arc::new(TokenSimilarityAdjudicator),
        }
    }
}

impl fmt::Debug for RunSettings {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RunSettings")
            .field("strategy_config", &self.strategy_config)
            .field("model_name", &self.model_name)
            .field("temperature", &self.temperature)
            .field("context", &self.context)
            .field("gates", &self.gates)
            .field("max_total_tokens", &self.max_total_tokens)
            .field("output_reserve", &self.output_reserve)
            .field("weights", &self.weights)
            .finish_non_exhaustive()
    }
}

impl RunSettings {
    /// The request a strategy's context turns into.
    pub fn request_for(&self, ctx: &OptimizedContext) -> GenerationRequest {
        let system_prompt = if ctx.system_prompt_constraints() {
            constrained_system_prompt(&self.system_prompt)
        } else {
            self.system_prompt.clone()
        };
        GenerationRequest {
            prompt: self.context.prompt_for(ctx.prompt_text()),
            system_prompt,
            model_name: self.model_name.clone(),
            temperature: self.temperature,
        }
    }
}

/// The evaluated result of one case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseOutcome {
    pub evaluation: CaseEvaluation,
    /// The generation after fence stripping and demasking.
    pub output: String,
    pub requested_strategy: StrategyId,
    pub final_strategy: StrategyId,
    /// Strategies tried, in order.
    pub attempts: Vec<StrategyId>,
    pub fence_stripped: bool,
    pub demask_warnings: Vec<String>,
    /// Why the case has no generation, in experiment mode.
    pub error: Option<String>,
}

/// Removes a leading ```` ```lang ```` line and a trailing ```` ``` ````
/// line. Returns whether anything was removed.
pub fn strip_fences(text: &str) -> (String, bool) {
    let trimmed = text.trim();
    let mut body = trimmed;
    let mut stripped = false;
    if body.starts_with("```") {
        body = body.split_once('\n').map_or("", |(_, rest)| rest);
        stripped = true;
    }
    if let Some(rest) = body.trim_end().strip_suffix("```") {
        body = rest;
        stripped = true;
    }
    if stripped {
        (body.trim().to_string(), true)
    } else {
        (text.to_string(), false)
    }
}

enum Failure {
    Strategy(PipelineError),
    OverBudget(usize),
    Generation(GatewayError),
    Metrics(PipelineError),
}

struct Attempted {
    evaluation: CaseEvaluation,
    output: String,
    fence_stripped: bool,
    demask_warnings: Vec<String>,
}

fn budget_for(case: &MigrationCase, settings: &RunSettings, input: TokenCount) -> Result<Option<BudgetConfig>, Failure> {
    let Some(cap) = settings.max_total_tokens else {
        return Ok(None);
    };
    let counter = settings.strategy_config.counter.as_ref();
    let reserve = settings
        .output_reserve
        .unwrap_or_else(|| BudgetConfig::default_reserve(counter.count(&case.input_db_query)));
    match BudgetConfig::new(cap, reserve) {
        Ok(b) => Ok(Some(b)),
        Err(_) => Err(Failure::OverBudget((input.value() + reserve).saturating_sub(cap))),
    }
}

/// The optimized context of `case` under `strategy` and the request it
/// becomes.
pub fn prepare(
    case: &MigrationCase,
    strategy: StrategyId,
    settings: &RunSettings,
) -> Result<(OptimizedContext, GenerationRequest), PipelineError> {
    let artifact = SqlArtifact::new(case.id.clone(), case.input_db_query.clone(), Dialect::Oracle);
    let ctx = apply_strategy(strategy, &artifact, &settings.strategy_config)?;
    let request = settings.request_for(&ctx);
    Ok((ctx, request))
}

fn attempt(
    case: &MigrationCase,
    strategy: StrategyId,
    settings: &RunSettings,
    generator: &dyn Generator,
) -> (Option<TokenCount>, Result<Attempted, Failure>) {
    let (ctx, request) = match prepare(case, strategy, settings) {
        Ok(c) => c,
        Err(e) => {
            // an inapplicable strategy is charged the unoptimized prompt
            let raw = settings.context.prompt_for(&case.input_db_query);
            return (Some(settings.strategy_config.counter.count(&raw)), Err(Failure::Strategy(e)));
        }
    };
    let counter = settings.strategy_config.counter.as_ref();
    let prompt_ctx = OptimizedContext::counted(request.prompt.clone(), strategy, counter);
    let input = prompt_ctx.input_tokens();
    match budget_for(case, settings, input) {
        Ok(Some(budget)) => {
            if let Err(over) = enforce_budget(&prompt_ctx, &budget) {
                return (Some(input), Err(Failure::OverBudget(over.overshoot)));
            }
        }
        Ok(None) => {}
        Err(f) => return (Some(input), Err(f)),
    }
    let generated = match generator.generate(&request) {
        Ok(g) => g,
        Err(e) => return (Some(input), Err(Failure::Generation(e))),
    };
    let (text, fence_stripped) = strip_fences(&generated.text);
    let (text, demask_warnings) = match ctx.alias_map() {
        Some(map) => demask_with_warnings(&text, map),
        None => (text, Vec::new()),
    };
    let evaluation = if case.output_db_query.trim().is_empty() {
        Ok(CaseEvaluation {
            case_id: case.id.clone(),
            parse_valid: parse(&text, Dialect::Postgres).is_ok(),
            exact: false,
            semantic_match: 0.0,
            codebleu: 0.0,
            input_tokens: input,
            output_tokens: generated.output_tokens,
        })
    } else {
        CaseEvaluation::score(
            case.id.clone(),
            &text,
            &case.output_db_query,
            input,
            generated.output_tokens,
            settings.adjudicator.as_ref(),
            settings.weights,
        )
    };
    let result = evaluation
        .map(|evaluation| Attempted {
            evaluation,
            output: text,
            fence_stripped,
            demask_warnings,
        })
        .map_err(|e| Failure::Metrics(e.into()));
    (Some(input), result)
}

/// Runs one case, retreating down the fallback ladder while the quality
/// gates fail. The outcome names the strategy that produced it. An empty
/// reference limits the gates to the syntax check.
pub fn run_case(
    case: &MigrationCase,
    strategy: StrategyId,
    settings: &RunSettings,
    generator: &dyn Generator,
) -> Result<CaseOutcome, PipelineError> {
    let mut attempts = Vec::new();
    let mut best: Option<CaseOutcome> = None;
    let mut generation_error = None;
    let mut overshoot = None;
    let mut other_error = None;
    for rung in fallback_ladder(strategy) {
        attempts.push(rung);
        match attempt(case, rung, settings, generator).1 {
            Ok(a) => {
                let outcome = CaseOutcome {
                    requested_strategy: strategy,
                    final_strategy: rung,
                    attempts: attempts.clone(),
                    fence_stripped: a.fence_stripped,
                    demask_warnings: a.demask_warnings,
                    error: None,
                    evaluation: a.evaluation,
                    output: a.output,
                };
                let passed = if case.output_db_query.trim().is_empty() {
                    settings.gates.pass_unreferenced(&outcome.evaluation)
                } else {
                    settings.gates.pass(&outcome.evaluation)
                };
                if passed || rung == StrategyId::Baseline {
                    return Ok(outcome);
                }
                log::info!("case {}: {rung} failed the quality gates, falling back", case.id);
                best = Some(outcome);
            }
            Err(Failure::Strategy(e)) | Err(Failure::Metrics(e)) => {
                log::info!("case {}: {rung} not applicable: {e}", case.id);
                other_error = Some(e);
            }
            Err(Failure::OverBudget(o)) => {
                log::info!("case {}: {rung} exceeds the budget by {o}", case.id);
                overshoot = Some(o);
            }
            Err(Failure::Generation(e)) => {
                log::warn!("case {}: generation with {rung} failed: {e}", case.id);
                generation_error = Some(e);
            }
        }
    }
    if let Some(mut outcome) = best {
        outcome.attempts = attempts;
        return Ok(outcome);
    }
    if let Some(source) = generation_error {
        return Err(PipelineError::GenerationFailed {
            case_id: case.id.clone(),
            source,
        });
    }
    if let Some(overshoot) = overshoot {
        return Err(PipelineError::BudgetUnsatisfiable {
            case_id: case.id.clone(),
            overshoot,
        });
    }
    Err(other_error.unwrap_or_else(|| PipelineError::Config("empty fallback ladder".into())))
}

/// Rows, deltas and per-case outcomes of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub reports: Vec<StrategyReport>,
    pub deltas: Vec<DeltaReport>,
    pub outcomes: Vec<(StrategyId, Vec<CaseOutcome>)>,
}

/// Runs every strategy on every case without fallback. Cases are processed
/// in id order; per-case failures count as invalid output, except replay
/// cache misses, which fail the whole run with every missing key. Deltas are
/// computed when the baseline is among `strategies`.
pub fn run_experiment(
    corpus: &[MigrationCase],
    strategies: &[StrategyId],
    settings: &RunSettings,
    generator: &dyn Generator,
) -> Result<ExperimentResult, PipelineError> {
    let mut cases: Vec<&MigrationCase> = corpus.iter().collect();
    cases.sort_by(|a, b| a.id.cmp(&b.id));
    let mut reports = Vec::with_capacity(strategies.len());
    let mut outcomes = Vec::with_capacity(strategies.len());
    let mut cache_misses = Vec::new();
    for &strategy in strategies {
        let results: Vec<(CaseOutcome, Option<String>)> = cases
            .par_iter()
            .map(|case| {
                let (input, result) = attempt(case, strategy, settings, generator);
                let mut miss = None;
                let outcome = match result {
                    Ok(a) => CaseOutcome {
                        evaluation: a.evaluation,
                        output: a.output,
                        requested_strategy: strategy,
                        final_strategy: strategy,
                        attempts: vec![strategy],
                        fence_stripped: a.fence_stripped,
                        demask_warnings: a.demask_warnings,
                        error: None,
                    },
                    Err(f) => {
                        let message = match f {
                            Failure::Strategy(e) | Failure::Metrics(e) => e.to_string(),
                            Failure::OverBudget(o) => format!("over budget by {o} tokens"),
                            Failure::Generation(e) => {
                                if let GatewayError::CacheMiss { key } = &e {
                                    miss = Some(key.clone());
                                }
                                e.to_string()
                            }
                        };
                        CaseOutcome {
                            evaluation: CaseEvaluation::failed(case.id.clone(), input.unwrap_or_default()),
                            output: String::new(),
                            requested_strategy: strategy,
                            final_strategy: strategy,
                            attempts: vec![strategy],
                            fence_stripped: false,
                            demask_warnings: Vec::new(),
                            error: Some(message),
                        }
                    }
                };
                (outcome, miss)
            })
            .collect();
        let mut case_outcomes = Vec::with_capacity(results.len());
        for (outcome, miss) in results {
            cache_misses.extend(miss);
            case_outcomes.push(outcome);
        }
        if !cache_misses.is_empty() {
            continue;
        }
        let evals: Vec<CaseEvaluation> = case_outcomes.iter().map(|o| o.evaluation.clone()).collect();
        reports.push(StrategyReport::from_evaluations(strategy, &evals)?);
        outcomes.push((strategy, case_outcomes));
    }
    if !cache_misses.is_empty() {
        cache_misses.sort();
        cache_misses.dedup();
        return Err(PipelineError::CacheMisses { keys: cache_misses });
    }
    let deltas = match reports.iter().find(|r| r.strategy == StrategyId::Baseline) {
        Some(base) => reports
            .iter()
            .filter(|r| r.strategy != StrategyId::Baseline)
            .map(|r| delta_from_baseline(r, base))
            .collect::<Result<Vec<_>, _>>()?,
        None => Vec::new(),
    };
    Ok(ExperimentResult {
        reports,
        deltas,
        outcomes,
    })
}
