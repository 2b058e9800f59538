//! Annotation export/import and agreement against the machine judge.
//!
//! Export emits one editable record per judgment the machine made: a recall
//! row per statement (judging all citations as a group) and a precision row
//! per citation (judging each alone). Recall judgments are binary
//! full/not_full; precision judgments are full/partial/none. Import pairs the
//! filled-in judgments with the machine labels from an evaluation report and
//! yields one Cohen's kappa per judge role.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AttributionLabel, EvalReport};
use crate::answer::CitedAnswer;
use crate::eval::cohens_kappa;
use crate::{Error, Result};

/// Statement-level combined-evidence judgment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecallJudgment {
    Full,
    NotFull,
}

/// One annotation file record. `citation_doc_id` is empty for recall rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRow {
    pub question_id: String,
    pub statement_index: usize,
    pub citation_doc_id: String,
    pub judgment: String,
}

/// Parsed annotations keyed for pairing with machine labels.
#[derive(Debug, Clone, Default)]
pub struct AnnotationSet {
    pub recall: Vec<((String, usize), RecallJudgment)>,
    pub precision: Vec<((String, usize, String), AttributionLabel)>,
}

/// Write an annotation file for a set of answers: per statement one recall
/// row followed by one precision row per citation, judgments left empty.
pub fn annotation_export(answers: &[CitedAnswer], path: &Path) -> Result<usize> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut rows = 0;
    for answer in answers {
        for (i, statement) in answer.statements.iter().enumerate() {
            let recall_row = AnnotationRow {
                question_id: answer.question_id.clone(),
                statement_index: i,
                citation_doc_id: String::new(),
                judgment: String::new(),
            };
            serde_json::to_writer(&mut out, &recall_row)?;
            out.write_all(b"\n")?;
            rows += 1;
            for doc_id in &statement.citations {
                let precision_row = AnnotationRow {
                    question_id: answer.question_id.clone(),
                    statement_index: i,
                    citation_doc_id: doc_id.clone(),
                    judgment: String::new(),
                };
                serde_json::to_writer(&mut out, &precision_row)?;
                out.write_all(b"\n")?;
                rows += 1;
            }
        }
    }
    out.flush()?;
    Ok(rows)
}

/// Read a filled annotation file. Empty judgments are collected and reported
/// together; an unrecognized judgment token fails with its line number.
pub fn annotation_import(path: &Path) -> Result<AnnotationSet> {
    let content = std::fs::read_to_string(path)?;
    let mut set = AnnotationSet::default();
    let mut unfilled: Vec<usize> = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let row: AnnotationRow = serde_json::from_str(line).map_err(|e| Error::Annotation {
            line: line_no,
            message: e.to_string(),
        })?;
        let judgment = row.judgment.trim().to_lowercase();
        if judgment.is_empty() {
            unfilled.push(line_no);
            continue;
        }
        if row.citation_doc_id.is_empty() {
            let value = match judgment.as_str() {
                "full" => RecallJudgment::Full,
                "not_full" => RecallJudgment::NotFull,
                other => {
                    return Err(Error::Annotation {
                        line: line_no,
                        message: format!(
                            "recall judgment must be full or not_full, got `{other}`"
                        ),
                    })
                }
            };
            set.recall.push(((row.question_id, row.statement_index), value));
        } else {
            let value = match judgment.as_str() {
                "full" => AttributionLabel::Full,
                "partial" => AttributionLabel::Partial,
                "none" => AttributionLabel::None,
                other => {
                    return Err(Error::Annotation {
                        line: line_no,
                        message: format!(
                            "precision judgment must be full, partial, or none, got `{other}`"
                        ),
                    })
                }
            };
            set.precision.push((
                (row.question_id, row.statement_index, row.citation_doc_id),
                value,
            ));
        }
    }
    if !unfilled.is_empty() {
        return Err(Error::Annotation {
            line: unfilled[0],
            message: format!(
                "{} unfilled judgment field(s) at line(s) {}",
                unfilled.len(),
                unfilled
                    .iter()
                    .map(|l| l.to_string())
                    .collect::<Vec<_>>()
                    .join(", ")
            ),
        });
    }
    Ok(set)
}

/// Pair human annotations with the machine labels recorded in an evaluation
/// report and compute (recall-judge kappa, precision-judge kappa).
pub fn kappa_against_report(annotations: &AnnotationSet, report: &EvalReport) -> Result<(f64, f64)> {
    let mut machine_recall: HashMap<(String, usize), RecallJudgment> = HashMap::new();
    let mut machine_precision: HashMap<(String, usize, String), AttributionLabel> = HashMap::new();
    for detail in &report.details {
        for statement in &detail.statements {
            let recall = match statement.recall_label {
                Some(AttributionLabel::Full) => RecallJudgment::Full,
                _ => RecallJudgment::NotFull,
            };
            machine_recall.insert((detail.question_id.clone(), statement.statement_index), recall);
            for citation in &statement.citations {
                machine_precision.insert(
                    (
                        detail.question_id.clone(),
                        statement.statement_index,
                        citation.doc_id.clone(),
                    ),
                    citation.label,
                );
            }
        }
    }

    let mut human_recall = Vec::with_capacity(annotations.recall.len());
    let mut auto_recall = Vec::with_capacity(annotations.recall.len());
    for (key, human) in &annotations.recall {
        let machine = machine_recall.get(key).ok_or_else(|| Error::Annotation {
            line: 0,
            message: format!("no machine recall label for {}#{}", key.0, key.1),
        })?;
        human_recall.push(*human);
        auto_recall.push(*machine);
    }
    let mut human_precision = Vec::with_capacity(annotations.precision.len());
    let mut auto_precision = Vec::with_capacity(annotations.precision.len());
    for (key, human) in &annotations.precision {
        let machine = machine_precision.get(key).ok_or_else(|| Error::Annotation {
            line: 0,
            message: format!("no machine precision label for {}#{}#{}", key.0, key.1, key.2),
        })?;
        human_precision.push(*human);
        auto_precision.push(*machine);
    }

    Ok((
        cohens_kappa(&human_recall, &auto_recall)?,
        cohens_kappa(&human_precision, &auto_precision)?,
    ))
}
