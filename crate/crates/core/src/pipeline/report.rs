//! Result tables as JSON, CSV or aligned text.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::metrics::{display, display_signed, round_half_up, DeltaReport, StrategyReport};

use super::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Text,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [ReportFormat::Json, ReportFormat::Csv, ReportFormat::Text];

    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
            ReportFormat::Text => "txt",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "text" | "txt" | "text-table" => Ok(ReportFormat::Text),
            other => Err(PipelineError::Config(format!("unknown report format '{other}'"))),
        }
    }
}

const DECIMALS: u32 = 2;

const STRATEGY_COLUMNS: [&str; 8] =
    ["Strategy", "AvgInTokens", "AvgOutTokens", "VSR%", "EM%", "SM%", "CodeBLEU%", "TE"];

const DELTA_COLUMNS: [&str; 8] = [
    "Strategy",
    "DeltaInTokens%",
    "DeltaOutTokens%",
    "DeltaVSRpp",
    "DeltaEMpp",
    "DeltaSMpp",
    "DeltaCodeBLEUpp",
    "DeltaTE%",
];

#[derive(Serialize)]
struct StrategyRow<'a> {
    #[serde(rename = "Strategy")]
    strategy: &'a str,
    #[serde(rename = "AvgInTokens")]
    avg_in: f64,
    #[serde(rename = "AvgOutTokens")]
    avg_out: f64,
    #[serde(rename = "VSR%")]
    vsr: f64,
    #[serde(rename = "EM%")]
    em: f64,
    #[serde(rename = "SM%")]
    sm: f64,
    #[serde(rename = "CodeBLEU%")]
    codebleu: f64,
    #[serde(rename = "TE")]
    te: f64,
}

#[derive(Serialize)]
struct DeltaRow<'a> {
    #[serde(rename = "Strategy")]
    strategy: &'a str,
    #[serde(rename = "DeltaInTokens%")]
    d_in: f64,
    #[serde(rename = "DeltaOutTokens%")]
    d_out: f64,
    #[serde(rename = "DeltaVSRpp")]
    d_vsr: f64,
    #[serde(rename = "DeltaEMpp")]
    d_em: f64,
    #[serde(rename = "DeltaSMpp")]
    d_sm: f64,
    #[serde(rename = "DeltaCodeBLEUpp")]
    d_codebleu: f64,
    #[serde(rename = "DeltaTE%")]
    d_te: f64,
}

fn r(x: f64) -> f64 {
    let v = round_half_up(x, DECIMALS);
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

fn strategy_cells(rep: &StrategyReport) -> Vec<String> {
    let mut cells = vec![rep.strategy.report_name().to_string()];
    cells.extend(
        [rep.avg_in_tokens, rep.avg_out_tokens, rep.vsr_pct, rep.em_pct, rep.sm_pct, rep.codebleu_pct, rep.te]
            .map(|x| display(x, DECIMALS)),
    );
    cells
}

fn delta_cells(d: &DeltaReport) -> Vec<String> {
    let mut cells = vec![d.strategy.report_name().to_string()];
    cells.extend(
        [d.d_in_pct, d.d_out_pct, d.d_vsr_pp, d.d_em_pp, d.d_sm_pp, d.d_codebleu_pp, d.d_te_pct]
            .map(|x| display_signed(x, DECIMALS)),
    );
    cells
}

fn text_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        let mut out = String::new();
        for (i, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if i == 0 {
                out.push_str(&format!("{cell:<w$}"));
            } else {
                out.push_str(&format!("  {cell:>w$}"));
            }
        }
        out.trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&line(rule.iter().map(String::as_str).collect()));
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    out
}

fn csv_table(header: &[&str], rows: &[Vec<String>]) -> Result<String, PipelineError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let fail = |e: csv::Error| PipelineError::io("csv", e);
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(row).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| PipelineError::io("csv", e))?;
    String::from_utf8(bytes).map_err(|e| PipelineError::io("csv", e))
}

fn json_table<T: Serialize>(rows: &[T]) -> Result<String, PipelineError> {
    let mut s = serde_json::to_string_pretty(rows).map_err(|e| PipelineError::io("json", e))?;
    s.push('\n');
    Ok(s)
}

/// Renders strategy rows with columns Strategy, AvgInTokens, AvgOutTokens,
/// VSR%, EM%, SM%, CodeBLEU%, TE, rounded half-up to two decimals.
pub fn render_reports(reports: &[StrategyReport], format: ReportFormat) -> Result<String, PipelineError> {
    match format {
        ReportFormat::Json => {
            let rows: Vec<StrategyRow<'_>> = reports
                .iter()
                .map(|x| StrategyRow {
                    strategy: x.strategy.report_name(),
                    avg_in: r(x.avg_in_tokens),
                    avg_out: r(x.avg_out_tokens),
                    vsr: r(x.vsr_pct),
                    em: r(x.em_pct),
                    sm: r(x.sm_pct),
                    codebleu: r(x.codebleu_pct),
                    te: r(x.te),
                })
                .collect();
            json_table(&rows)
        }
        ReportFormat::Csv => csv_table(&STRATEGY_COLUMNS, &reports.iter().map(strategy_cells).collect::<Vec<_>>()),
        ReportFormat::Text => Ok(text_table(
            &STRATEGY_COLUMNS,
            &reports.iter().map(strategy_cells).collect::<Vec<_>>(),
        )),
    }
}

/// Renders delta rows: relative percentages for tokens and TE, percentage
/// points for the rates.
pub fn render_deltas(deltas: &[DeltaReport], format: ReportFormat) -> Result<String, PipelineError> {
    match format {
        ReportFormat::Json => {
            let rows: Vec<DeltaRow<'_>> = deltas
                .iter()
                .map(|d| DeltaRow {
                    strategy: d.strategy.report_name(),
                    d_in: r(d.d_in_pct),
                    d_out: r(d.d_out_pct),
                    d_vsr: r(d.d_vsr_pp),
                    d_em: r(d.d_em_pp),
                    d_sm: r(d.d_sm_pp),
                    d_codebleu: r(d.d_codebleu_pp),
                    d_te: r(d.d_te_pct),
                })
                .collect();
            json_table(&rows)
        }
        ReportFormat::Csv => csv_table(&DELTA_COLUMNS, &deltas.iter().map(delta_cells).collect::<Vec<_>>()),
        ReportFormat::Text => Ok(text_table(&DELTA_COLUMNS, &deltas.iter().map(delta_cells).collect::<Vec<_>>())),
    }
}

/// Writes `strategy_report.<ext>` and `delta_report.<ext>` into `dir` and
/// returns their paths.
pub fn emit_report(
    reports: &[StrategyReport],
    deltas: &[DeltaReport],
    format: ReportFormat,
    dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>, PipelineError> {
    if reports.is_empty() {
        return Err(PipelineError::Config("no strategy rows to report".into()));
    }
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir.display(), e))?;
    let ext = format.extension();
    let mut written = Vec::with_capacity(2);
    for (name, body) in [
        ("strategy_report", render_reports(reports, format)?),
        ("delta_report", render_deltas(deltas, format)?),
    ] {
        let path = dir.join(format!("{name}.{ext}"));
        fs::write(&path, body).map_err(|e| PipelineError::io(path.display(), e))?;
        written.push(path);
    }
    Ok(written)
}
