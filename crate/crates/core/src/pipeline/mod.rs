//! Generation + citation strategies.
//!
//! A run is: generate an answer (chain-of-thought, retrieval-augmented, or
//! oracle-grounded), optionally collect inline `[n]` citations from the
//! generation itself (pass 1), optionally seek citations per statement
//! (pass 2), then merge with order-preserving dedup. The classic baselines
//! fall out as configurations: answer-only RAG (no citations), inline-only
//! RAG, and post-hoc citation over a chain-of-thought answer.

mod config;
mod run;

pub use config::{GenerationMode, PipelineConfig, SecondPassSeeker, SeekStrategy};
pub use run::{Pipeline, PipelineServices, QuestionFailure, RunOutcome, SecondPassLog, StageLog};

/// Order-preserving union: pass-1 citations first, then pass-2 entries not
/// already present. Duplicates are removed by doc id.
pub fn merge_dedup(pass1: &[String], pass2: &[String]) -> Vec<String> {
    let mut merged: Vec<String> = Vec::with_capacity(pass1.len() + pass2.len());
    for doc_id in pass1.iter().chain(pass2) {
        if !merged.iter().any(|d| d == doc_id) {
            merged.push(doc_id.clone());
        }
    }
    merged
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn merge_keeps_pass1_order_then_new_pass2() {
        assert_eq!(merge_dedup(&ids(&["A", "B"]), &ids(&["B", "C"])), ids(&["A", "B", "C"]));
    }

    #[test]
    fn merge_of_empties_is_empty() {
        assert!(merge_dedup(&[], &[]).is_empty());
    }

    #[test]
    fn merge_is_idempotent() {
        let x = ids(&["A", "B"]);
        let y = ids(&["B", "D"]);
        let once = merge_dedup(&x, &y);
        assert_eq!(merge_dedup(&x, &once), once);
        assert_eq!(merge_dedup(&once, &y), once);
    }

    #[test]
    fn merge_result_contains_both_sides() {
        let x = ids(&["A", "C"]);
        let y = ids(&["B", "C", "D"]);
        let merged = merge_dedup(&x, &y);
        for id in x.iter().chain(&y) {
            assert!(merged.contains(id));
        }
        assert_eq!(merged.len(), 4);
    }
}
