//! Benchmark dataset loading.
//!
//! Input is line-delimited JSON with fields `question_id`, `question`,
//! `gold_polar`, and optional `gold_doc_ids` / `gold_long_answer`. The two
//! supported datasets differ only in which polar labels are legal: the
//! yes/no set rejects "maybe".

use std::collections::HashSet;
use std::path::Path;

use serde::Deserialize;

use crate::answer::PolarAnswer;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetName {
    /// Yes/no questions with gold supporting documents.
    BioasqYn,
    /// Yes/no/maybe questions.
    PubmedQa,
}

impl std::str::FromStr for DatasetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<DatasetName> {
        match s {
            "bioasq_yn" => Ok(DatasetName::BioasqYn),
            "pubmedqa" => Ok(DatasetName::PubmedQa),
            other => Err(Error::Config(format!(
                "unknown dataset `{other}` (expected bioasq_yn or pubmedqa)"
            ))),
        }
    }
}

/// One benchmark question.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetItem {
    pub question_id: String,
    pub question: String,
    pub gold_polar: PolarAnswer,
    /// Gold supporting documents; required for oracle-grounded generation.
    pub gold_doc_ids: Option<Vec<String>>,
    /// Long reference answer used for ROUGE-L when present.
    pub gold_long_answer: Option<String>,
}

#[derive(Deserialize)]
struct RawItem {
    question_id: Option<String>,
    question: Option<String>,
    gold_polar: Option<String>,
    #[serde(default)]
    gold_doc_ids: Option<Vec<String>>,
    #[serde(default)]
    gold_long_answer: Option<String>,
}

fn field_error(line: usize, field: &str, message: impl Into<String>) -> Error {
    Error::Dataset {
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

pub fn load_dataset(name: DatasetName, path: &Path) -> Result<Vec<DatasetItem>> {
    let content = std::fs::read_to_string(path)?;
    let mut items = Vec::new();
    let mut seen_ids: HashSet<String> = HashSet::new();
    for (i, line) in content.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawItem = serde_json::from_str(line)
            .map_err(|e| field_error(line_no, "<record>", e.to_string()))?;
        let question_id = raw
            .question_id
            .filter(|s| !s.is_empty())
            .ok_or_else(|| field_error(line_no, "question_id", "missing or empty"))?;
        if !seen_ids.insert(question_id.clone()) {
            return Err(field_error(line_no, "question_id", format!("duplicate id {question_id}")));
        }
        let question = raw
            .question
            .filter(|s| !s.is_empty())
            .ok_or_else(|| field_error(line_no, "question", "missing or empty"))?;
        let polar_text = raw
            .gold_polar
            .ok_or_else(|| field_error(line_no, "gold_polar", "missing"))?;
        let gold_polar = match polar_text.to_lowercase().as_str() {
            "yes" => PolarAnswer::Yes,
            "no" => PolarAnswer::No,
            "maybe" if name == DatasetName::PubmedQa => PolarAnswer::Maybe,
            "maybe" => {
                return Err(field_error(
                    line_no,
                    "gold_polar",
                    "maybe is not a legal label for this dataset",
                ))
            }
            other => {
                return Err(field_error(
                    line_no,
                    "gold_polar",
                    format!("unrecognized label `{other}`"),
                ))
            }
        };
        items.push(DatasetItem {
            question_id,
            question,
            gold_polar,
            gold_doc_ids: raw.gold_doc_ids.filter(|v| !v.is_empty()),
            gold_long_answer: raw.gold_long_answer.filter(|s| !s.is_empty()),
        });
    }
    Ok(items)
}
