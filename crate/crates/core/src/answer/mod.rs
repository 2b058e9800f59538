//! Structured view of generated answer text: polar verdict, statement list,
//! and inline `[n]` citation markers.

mod markers;
mod polar;
mod segment;

pub use markers::{parse_inline_citations, reinsert_markers, Marker, ParsedMarkers};
pub use polar::extract_polar_answer;
pub use segment::{segment_statements, Segment};

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusStore;
use crate::{Error, Result};

/// Discrete verdict extracted from a free-text answer. `Unknown` means no
/// extraction rule fired; it never matches a gold label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolarAnswer {
    Yes,
    No,
    Maybe,
    Unknown,
}

impl std::fmt::Display for PolarAnswer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PolarAnswer::Yes => "yes",
            PolarAnswer::No => "no",
            PolarAnswer::Maybe => "maybe",
            PolarAnswer::Unknown => "unknown",
        };
        f.write_str(s)
    }
}

/// One statement after marker extraction: clean sentence text plus the
/// in-range shortlist indices that were attached to it, in order of
/// appearance (duplicates preserved; deduplication happens when indices are
/// mapped to doc ids).
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzedStatement {
    pub index: usize,
    pub text: String,
    pub marker_indices: Vec<usize>,
}

/// Full structural analysis of a generated answer.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzedAnswer {
    pub polar: PolarAnswer,
    pub statements: Vec<AnalyzedStatement>,
    /// Well-formed markers whose index fell outside 1..=shortlist_size.
    pub dropped_markers: usize,
    /// Bracket groups that did not parse as `[integer]` (left in the text).
    pub malformed_brackets: usize,
}

/// Collapse the whitespace gaps that marker removal leaves behind: runs of
/// spaces become one space, and spaces directly before closing punctuation
/// disappear. Non-whitespace characters are untouched.
fn tidy_after_removal(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        if c == ' ' && out.ends_with(' ') {
            continue;
        }
        if matches!(c, '.' | ',' | ';' | ':' | '!' | '?' | ')' | ']') && out.ends_with(' ') {
            out.pop();
        }
        out.push(c);
    }
    out
}

/// Segment the answer into statements, strip and record inline markers, and
/// extract the polar verdict.
pub fn analyze(raw_text: &str, shortlist_size: usize) -> AnalyzedAnswer {
    let polar = extract_polar_answer(raw_text);
    let mut statements = Vec::new();
    let mut dropped = 0;
    let mut malformed = 0;
    for (i, segment) in segment_statements(raw_text).into_iter().enumerate() {
        let parsed = parse_inline_citations(&segment.text, shortlist_size);
        dropped += parsed.dropped_out_of_range;
        malformed += parsed.malformed_brackets;
        statements.push(AnalyzedStatement {
            index: i,
            text: tidy_after_removal(parsed.clean_text.trim()),
            marker_indices: parsed
                .markers
                .iter()
                .filter(|m| m.in_range)
                .map(|m| m.index)
                .collect(),
        });
    }
    AnalyzedAnswer {
        polar,
        statements,
        dropped_markers: dropped,
        malformed_brackets: malformed,
    }
}

/// One statement of a finished answer with its ordered citation list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitedStatement {
    pub text: String,
    pub citations: Vec<String>,
}

/// A generated answer with per-statement citations. Serialized as one
/// line-delimited record per question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitedAnswer {
    pub question_id: String,
    pub polar: PolarAnswer,
    pub statements: Vec<CitedStatement>,
    pub raw_text: String,
}

impl CitedAnswer {
    /// Check the structural invariants: every cited doc id resolves in the
    /// corpus and no statement cites the same document twice.
    pub fn validate(&self, corpus: &CorpusStore) -> Result<()> {
        for (i, statement) in self.statements.iter().enumerate() {
            let mut seen = std::collections::HashSet::new();
            for doc_id in &statement.citations {
                if !corpus.contains(doc_id) {
                    return Err(Error::DocumentNotFound {
                        doc_id: doc_id.clone(),
                    });
                }
                if !seen.insert(doc_id.as_str()) {
                    return Err(Error::InvalidParam(format!(
                        "statement {i} of {} cites {doc_id} twice",
                        self.question_id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn citation_count(&self) -> usize {
        self.statements.iter().map(|s| s.citations.len()).sum()
    }
}

/// Read line-delimited cited answers.
pub fn read_cited_answers(path: &std::path::Path) -> Result<Vec<CitedAnswer>> {
    let content = std::fs::read_to_string(path)?;
    let mut answers = Vec::new();
    for line in content.lines() {
        if line.trim().is_empty() {
            continue;
        }
        answers.push(serde_json::from_str(line)?);
    }
    Ok(answers)
}

/// Write line-delimited cited answers.
pub fn write_cited_answers(path: &std::path::Path, answers: &[CitedAnswer]) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for answer in answers {
        serde_json::to_writer(&mut out, answer)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::corpus_from;

    #[test]
    fn analyze_splits_and_maps_markers() {
        let out = analyze("Yes, drug A works [1][2]. It is approved [3].", 3);
        assert_eq!(out.polar, PolarAnswer::Yes);
        assert_eq!(out.statements.len(), 2);
        assert_eq!(out.statements[0].text, "Yes, drug A works.");
        assert_eq!(out.statements[0].marker_indices, vec![1, 2]);
        assert_eq!(out.statements[1].marker_indices, vec![3]);
        assert_eq!(out.dropped_markers, 0);
    }

    #[test]
    fn statement_texts_reconstruct_the_answer_body_minus_markers() {
        let raw = "Yes, therapy helps [1][2]. Survival improved (p = 0.03) [3]. No caveats.";
        let out = analyze(raw, 3);
        let non_ws = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<String>();
        let reconstructed: String = out.statements.iter().map(|s| non_ws(&s.text)).collect();
        let stripped = parse_inline_citations(raw, 3).clean_text;
        assert_eq!(reconstructed, non_ws(&stripped));
    }

    #[test]
    fn analyze_counts_out_of_range_markers() {
        let out = analyze("Claim one [4].", 3);
        assert_eq!(out.statements[0].marker_indices, Vec::<usize>::new());
        assert_eq!(out.dropped_markers, 1);
    }

    #[test]
    fn cited_answer_round_trips_as_jsonl() {
        let answer = CitedAnswer {
            question_id: "q1".into(),
            polar: PolarAnswer::Maybe,
            statements: vec![CitedStatement {
                text: "Something.".into(),
                citations: vec!["111".into()],
            }],
            raw_text: "Something. [1]".into(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("answers.jsonl");
        write_cited_answers(&path, std::slice::from_ref(&answer)).unwrap();
        let back = read_cited_answers(&path).unwrap();
        assert_eq!(back, vec![answer]);
        // field shape is part of the external interface
        let line = std::fs::read_to_string(&path).unwrap();
        let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
        assert_eq!(v["polar"], "maybe");
        assert_eq!(v["statements"][0]["citations"][0], "111");
    }

    #[test]
    fn validate_rejects_unknown_and_duplicate_citations() {
        let (_dir, corpus) = corpus_from(&[("1", "t", "a")]);
        let mut answer = CitedAnswer {
            question_id: "q".into(),
            polar: PolarAnswer::Yes,
            statements: vec![CitedStatement {
                text: "s".into(),
                citations: vec!["1".into(), "missing".into()],
            }],
            raw_text: "s".into(),
        };
        assert!(answer.validate(&corpus).is_err());
        answer.statements[0].citations = vec!["1".into(), "1".into()];
        assert!(answer.validate(&corpus).is_err());
        answer.statements[0].citations = vec!["1".into()];
        assert!(answer.validate(&corpus).is_ok());
    }
}
