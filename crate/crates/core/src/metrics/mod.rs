//! Evaluation metrics, per-strategy aggregation and deltas against the
//! baseline.

mod codebleu;
mod semantic;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sql::{parse, Dialect, TokenCount};
use crate::strategies::StrategyId;

pub use codebleu::{codebleu, codebleu_default, CodeBleuWeights};
pub use semantic::{
    semantic_match, semantic_match_with, token_similarity, Adjudicator, TokenSimilarityAdjudicator,
    UNPARSEABLE_PENALTY,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("evaluation set is empty")]
    EmptyEvaluationSet,
    #[error("reference has no tokens")]
    EmptyReference,
    #[error("average input plus output tokens is zero")]
    ZeroTokenDenominator,
    #[error("delta baseline must be the baseline strategy, got {found}")]
    BaselineMismatch { found: StrategyId },
    #[error("baseline {field} is zero, relative delta undefined")]
    ZeroBaseline { field: &'static str },
}

/// Outcome of one generated query against its reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseEvaluation {
    pub case_id: String,
    pub parse_valid: bool,
    pub exact: bool,
    pub semantic_match: f64,
    pub codebleu: f64,
    pub input_tokens: TokenCount,
    pub output_tokens: TokenCount,
}

impl CaseEvaluation {
    /// Scores `generated` (already demasked) against `reference`.
    pub fn score(
        case_id: impl Into<String>,
        generated: &str,
        reference: &str,
        input_tokens: TokenCount,
        output_tokens: TokenCount,
        adjudicator: &dyn Adjudicator,
        weights: CodeBleuWeights,
    ) -> Result<Self, MetricsError> {
        Ok(Self {
            case_id: case_id.into(),
            parse_valid: parse(generated, Dialect::Postgres).is_ok(),
            exact: generated.as_bytes() == reference.as_bytes(),
            semantic_match: semantic_match_with(generated, reference, adjudicator),
            codebleu: codebleu(generated, reference, weights)?,
            input_tokens,
            output_tokens,
        })
    }

    /// A case whose generation failed outright: invalid, zero similarity.
    pub fn failed(case_id: impl Into<String>, input_tokens: TokenCount) -> Self {
        Self {
            case_id: case_id.into(),
            parse_valid: false,
            exact: false,
            semantic_match: 0.0,
            codebleu: 0.0,
            input_tokens,
            output_tokens: TokenCount(0),
        }
    }
}

fn share(evals: &[CaseEvaluation], pred: impl Fn(&CaseEvaluation) -> bool) -> Result<f64, MetricsError> {
    if evals.is_empty() {
        return Err(MetricsError::EmptyEvaluationSet);
    }
    let hits = evals.iter().filter(|e| pred(e)).count();
    Ok(100.0 * hits as f64 / evals.len() as f64)
}

/// Valid syntax rate in percent.
pub fn vsr(evals: &[CaseEvaluation]) -> Result<f64, MetricsError> {
    share(evals, |e| e.parse_valid)
}

/// Exact match rate in percent.
pub fn em(evals: &[CaseEvaluation]) -> Result<f64, MetricsError> {
    share(evals, |e| e.exact)
}

/// Semantic match per thousand tokens of combined input and output.
pub fn token_efficiency(sm: f64, avg_in: f64, avg_out: f64) -> Result<f64, MetricsError> {
    let denom = avg_in + avg_out;
    if denom <= 0.0 {
        return Err(MetricsError::ZeroTokenDenominator);
    }
    Ok(1000.0 * sm / denom)
}

/// Rounds half away from zero to `decimals` places, tolerating binary
/// representation error just below the midpoint.
pub fn round_half_up(x: f64, decimals: u32) -> f64 {
    let f = 10f64.powi(decimals as i32);
    let y = x.abs() * f;
    let r = (y + 0.5 + 1e-9).floor();
    x.signum() * r / f
}

/// Fixed-point display with half-up rounding.
pub fn display(x: f64, decimals: u32) -> String {
    let r = round_half_up(x, decimals);
    let r = if r == 0.0 { 0.0 } else { r };
    format!("{r:.*}", decimals as usize)
}

/// As [`display`] with an explicit `+` on positive values.
pub fn display_signed(x: f64, decimals: u32) -> String {
    let s = display(x, decimals);
    if round_half_up(x, decimals) > 0.0 {
        format!("+{s}")
    } else {
        s
    }
}

/// One row of a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyReport {
    pub strategy: StrategyId,
    pub avg_in_tokens: f64,
    pub avg_out_tokens: f64,
    pub vsr_pct: f64,
    pub em_pct: f64,
    pub sm_pct: f64,
    pub codebleu_pct: f64,
    pub te: f64,
}

impl StrategyReport {
    /// Builds a row from aggregate values, deriving `te`.
    pub fn new(
        strategy: StrategyId,
        avg_in_tokens: f64,
        avg_out_tokens: f64,
        vsr_pct: f64,
        em_pct: f64,
        sm_pct: f64,
        codebleu_pct: f64,
    ) -> Result<Self, MetricsError> {
        let te = token_efficiency(sm_pct / 100.0, avg_in_tokens, avg_out_tokens)?;
        Ok(Self {
            strategy,
            avg_in_tokens,
            avg_out_tokens,
            vsr_pct,
            em_pct,
            sm_pct,
            codebleu_pct,
            te,
        })
    }

    /// Replaces `te` with an externally reported value, e.g. a published
    /// figure that was rounded before further arithmetic.
    pub fn with_reported_te(mut self, te: f64) -> Self {
        self.te = te;
        self
    }

    /// Aggregates per-case results. Averages are arithmetic means in the
    /// order given.
    pub fn from_evaluations(strategy: StrategyId, evals: &[CaseEvaluation]) -> Result<Self, MetricsError> {
        if evals.is_empty() {
            return Err(MetricsError::EmptyEvaluationSet);
        }
        let n = evals.len() as f64;
        let mean = |f: &dyn Fn(&CaseEvaluation) -> f64| evals.iter().map(f).sum::<f64>() / n;
        Self::new(
            strategy,
            mean(&|e| e.input_tokens.value() as f64),
            mean(&|e| e.output_tokens.value() as f64),
            vsr(evals)?,
            em(evals)?,
            100.0 * mean(&|e| e.semantic_match),
            100.0 * mean(&|e| e.codebleu),
        )
    }

    /// `te` recomputed from the other columns.
    pub fn recomputed_te(&self) -> Result<f64, MetricsError> {
        token_efficiency(self.sm_pct / 100.0, self.avg_in_tokens, self.avg_out_tokens)
    }

    /// Stored `te` agrees with the recomputed one within 1e-9.
    pub fn te_consistent(&self) -> bool {
        self.recomputed_te().is_ok_and(|te| (te - self.te).abs() <= 1e-9)
    }
}

/// Differences of a row against the baseline row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub strategy: StrategyId,
    pub d_in_pct: f64,
    pub d_out_pct: f64,
    pub d_vsr_pp: f64,
    pub d_em_pp: f64,
    pub d_sm_pp: f64,
    pub d_codebleu_pp: f64,
    pub d_te_pct: f64,
}

fn relative(value: f64, base: f64, field: &'static str) -> Result<f64, MetricsError> {
    if base == 0.0 {
        return Err(MetricsError::ZeroBaseline { field });
    }
    Ok(100.0 * (value - base) / base)
}

/// Token counts and TE as relative percentages, rates as absolute points.
pub fn delta_from_baseline(report: &StrategyReport, baseline: &StrategyReport) -> Result<DeltaReport, MetricsError> {
    if baseline.strategy != StrategyId::Baseline {
        return Err(MetricsError::BaselineMismatch {
            found: baseline.strategy,
        });
    }
    Ok(DeltaReport {
        strategy: report.strategy,
        d_in_pct: relative(report.avg_in_tokens, baseline.avg_in_tokens, "avg_in_tokens")?,
        d_out_pct: relative(report.avg_out_tokens, baseline.avg_out_tokens, "avg_out_tokens")?,
        d_vsr_pp: report.vsr_pct - baseline.vsr_pct,
        d_em_pp: report.em_pct - baseline.em_pct,
        d_sm_pp: report.sm_pct - baseline.sm_pct,
        d_codebleu_pp: report.codebleu_pct - baseline.codebleu_pct,
        d_te_pct: relative(report.te, baseline.te, "te")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case(valid: bool, exact: bool) -> CaseEvaluation {
        CaseEvaluation {
            case_id: "c".into(),
            parse_valid: valid,
            exact,
            semantic_match: 1.0,
            codebleu: 1.0,
            input_tokens: TokenCount(10),
            output_tokens: TokenCount(10),
        }
    }

    #[test]
    fn rates() {
        let evals: Vec<_> = (0..100).map(|i| case(i < 71, i < 5)).collect();
        assert_eq!(vsr(&evals).unwrap(), 71.0);
        assert_eq!(em(&evals).unwrap(), 5.0);
        assert_eq!(vsr(&[]), Err(MetricsError::EmptyEvaluationSet));
        assert_eq!(vsr(&[case(false, false)]).unwrap(), 0.0);
        assert_eq!(vsr(&[case(true, false)]).unwrap(), 100.0);
    }

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(display(0.125, 2), "0.13");
        assert_eq!(display(2.675, 2), "2.68");
        assert_eq!(display(-1.005, 2), "-1.01");
        assert_eq!(display(-0.001, 2), "0.00");
        assert_eq!(display_signed(0.594, 2), "+0.59");
        assert_eq!(display_signed(0.0, 2), "0.00");
    }

    #[test]
    fn te_errors_and_consistency() {
        assert_eq!(token_efficiency(0.5, 0.0, 0.0), Err(MetricsError::ZeroTokenDenominator));
        let r = StrategyReport::new(StrategyId::Pruning, 10.0, 30.0, 50.0, 0.0, 80.0, 70.0).unwrap();
        assert!((r.te - 20.0).abs() < 1e-12);
        assert!(r.te_consistent());
        assert!(!r.clone().with_reported_te(21.0).te_consistent());
    }

    #[test]
    fn self_delta_is_zero() {
        let b = StrategyReport::new(StrategyId::Baseline, 10.0, 30.0, 50.0, 5.0, 80.0, 70.0).unwrap();
        let d = delta_from_baseline(&b, &b).unwrap();
        for v in [d.d_in_pct, d.d_out_pct, d.d_vsr_pp, d.d_em_pp, d.d_sm_pp, d.d_codebleu_pp, d.d_te_pct] {
            assert_eq!(v, 0.0);
        }
        let other = StrategyReport { strategy: StrategyId::Dsl, ..b.clone() };
        assert_eq!(
            delta_from_baseline(&b, &other),
            Err(MetricsError::BaselineMismatch { found: StrategyId::Dsl })
        );
    }

    #[test]
    fn aggregation() {
        let mut evals = vec![case(true, true), case(false, false)];
        evals[1].semantic_match = 0.5;
        evals[1].output_tokens = TokenCount(30);
        let r = StrategyReport::from_evaluations(StrategyId::Baseline, &evals).unwrap();
        assert_eq!(r.avg_out_tokens, 20.0);
        assert_eq!(r.sm_pct, 75.0);
        assert_eq!(r.vsr_pct, 50.0);
        assert!(r.te_consistent());
    }
}
