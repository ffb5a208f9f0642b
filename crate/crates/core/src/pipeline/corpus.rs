//! JSON Lines corpus of Oracle inputs and PostgreSQL references.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::sql::{parse, Dialect};

use super::PipelineError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MigrationCase {
    pub id: String,
    pub input_db_query: String,
    pub output_db_query: String,
}

/// Reads and validates a corpus file. Cases keep file order.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<MigrationCase>, PipelineError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path.display(), e))?;
    parse_corpus(&text)
}

/// Validates corpus text: one JSON object per non-blank line, non-empty
/// fields, unique ids and references that parse as PostgreSQL.
pub fn parse_corpus(text: &str) -> Result<Vec<MigrationCase>, PipelineError> {
    let mut cases = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let case: MigrationCase = serde_json::from_str(line).map_err(|e| PipelineError::MalformedRecord {
            line: line_no,
            message: e.to_string(),
        })?;
        for (name, value) in [
            ("id", &case.id),
            ("input_db_query", &case.input_db_query),
            ("output_db_query", &case.output_db_query),
        ] {
            if value.trim().is_empty() {
                return Err(PipelineError::MalformedRecord {
                    line: line_no,
                    message: format!("{name} is empty"),
                });
            }
        }
        if !seen.insert(case.id.clone()) {
            return Err(PipelineError::DuplicateId {
                line: line_no,
                id: case.id,
            });
        }
        if let Err(e) = parse(&case.output_db_query, Dialect::Postgres) {
            return Err(PipelineError::InvalidReference {
                line: line_no,
                message: e.to_string(),
            });
        }
        cases.push(case);
    }
    Ok(cases)
}

/// Writes `cases` as JSON Lines.
pub fn write_corpus(path: impl AsRef<Path>, cases: &[MigrationCase]) -> Result<(), PipelineError> {
    let path = path.as_ref();
    let mut out = String::new();
    for case in cases {
        out.push_str(&serde_json::to_string(case).map_err(|e| PipelineError::io(path.display(), e))?);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| PipelineError::io(path.display(), e))
}
