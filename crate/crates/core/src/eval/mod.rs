//! Evaluation stack: attribution judging, citation recall/precision/F1,
//! EM accuracy, ROUGE-L, dataset loading, annotation export/import, and
//! Cohen's kappa.

mod annotation;
mod dataset;
mod judge;
mod kappa;
mod rouge;

pub use annotation::{
    annotation_export, annotation_import, kappa_against_report, AnnotationRow, AnnotationSet,
    RecallJudgment,
};
pub use dataset::{load_dataset, DatasetItem, DatasetName};
pub use judge::{
    parse_judge_response, AttributionJudge, AttributionLabel, LexicalOverlapJudge, LlmJudge,
    ScriptedJudge,
};
pub use kappa::cohens_kappa;
pub use rouge::{rouge_l, RougeScore};

use futures::future::try_join_all;
use serde::{Deserialize, Serialize};

use crate::answer::{CitedAnswer, PolarAnswer};
use crate::corpus::{CorpusStore, Document};
use crate::Result;

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Exact-match accuracy on polar answers. `Unknown` never matches.
pub fn em_accuracy(predicted: PolarAnswer, gold: PolarAnswer) -> u8 {
    u8::from(predicted != PolarAnswer::Unknown && predicted == gold)
}

/// Evidence string for the recall judgment: the cited abstracts concatenated
/// in citation order, each prefixed by its title, blank-line separated.
pub fn concat_evidence(docs: &[Document]) -> String {
    docs.iter()
        .map(|d| format!("{}\n{}", d.title, d.abstract_text))
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Raw judge output for one citation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitationJudgment {
    pub doc_id: String,
    pub label: AttributionLabel,
}

/// Raw judge outputs for one statement: the combined-evidence recall label
/// (absent when the statement has no citations, which scores 0 without a
/// judge call) plus one label per citation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatementJudgment {
    pub statement_index: usize,
    pub statement: String,
    pub recall_label: Option<AttributionLabel>,
    pub citations: Vec<CitationJudgment>,
}

impl StatementJudgment {
    /// Statement-level recall contribution: 1 only for a Full combined label.
    pub fn recall(&self) -> u8 {
        u8::from(self.recall_label == Some(AttributionLabel::Full))
    }

    /// (supportive, judged) citation counts; Partial counts as supportive.
    pub fn precision_counts(&self) -> (usize, usize) {
        let supportive = self
            .citations
            .iter()
            .filter(|c| c.label != AttributionLabel::None)
            .count();
        (supportive, self.citations.len())
    }
}

/// Judge every statement of an answer. Exactly one judge call per cited
/// statement (the combined evidence) and one per citation. Statements are
/// judged concurrently; assembly order is the statement order regardless of
/// completion order.
pub async fn judge_answer(
    answer: &CitedAnswer,
    judge: &dyn AttributionJudge,
    corpus: &CorpusStore,
) -> Result<Vec<StatementJudgment>> {
    let futures = answer.statements.iter().enumerate().map(|(i, statement)| async move {
        let docs: Vec<Document> = statement
            .citations
            .iter()
            .map(|id| corpus.get(id))
            .collect::<Result<_>>()?;
        let recall_label = if docs.is_empty() {
            None
        } else {
            Some(judge.judge(&statement.text, &concat_evidence(&docs)).await?)
        };
        let citation_futures = docs.iter().map(|d| async {
            let label = judge
                .judge(&statement.text, &concat_evidence(std::slice::from_ref(d)))
                .await?;
            Ok::<_, crate::Error>(CitationJudgment {
                doc_id: d.doc_id.clone(),
                label,
            })
        });
        let citations = try_join_all(citation_futures).await?;
        Ok::<_, crate::Error>(StatementJudgment {
            statement_index: i,
            statement: statement.text.clone(),
            recall_label,
            citations,
        })
    });
    try_join_all(futures).await
}

/// Per-question metric bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionScore {
    pub question_id: String,
    pub em: u8,
    /// Absent when the dataset item carries no long reference answer.
    pub rouge_l: Option<f64>,
    /// Mean of per-statement binary recalls.
    pub citation_recall: f64,
    /// Supportive / judged over all citations in the answer (the primary
    /// definition: every citation weighs the same).
    pub citation_precision: f64,
    /// Alternative aggregation: per-statement precision averaged over cited
    /// statements. Reported alongside for comparison; F1 uses the primary.
    pub citation_precision_macro: f64,
    pub citation_f1: f64,
    pub statement_count: usize,
    /// Statements that carry no citations at all (they score 0 recall and
    /// contribute nothing to precision).
    pub zero_citation_statements: usize,
    pub citation_count: usize,
}

/// Compute the per-question metrics from raw judge outputs.
pub fn score_from_judgments(
    question_id: &str,
    judgments: &[StatementJudgment],
    em: u8,
    rouge: Option<f64>,
) -> QuestionScore {
    let statement_count = judgments.len();
    let recall = if statement_count == 0 {
        0.0
    } else {
        judgments.iter().map(|j| j.recall() as f64).sum::<f64>() / statement_count as f64
    };
    let (supportive, judged) = judgments.iter().fold((0usize, 0usize), |(s, t), j| {
        let (a, b) = j.precision_counts();
        (s + a, t + b)
    });
    let precision = if judged == 0 {
        0.0
    } else {
        supportive as f64 / judged as f64
    };
    let per_statement: Vec<f64> = judgments
        .iter()
        .filter_map(|j| {
            let (s, t) = j.precision_counts();
            (t > 0).then(|| s as f64 / t as f64)
        })
        .collect();
    let precision_macro = if per_statement.is_empty() {
        0.0
    } else {
        per_statement.iter().sum::<f64>() / per_statement.len() as f64
    };
    let zero_citation = judgments.iter().filter(|j| j.citations.is_empty()).count();
    QuestionScore {
        question_id: question_id.to_string(),
        em,
        rouge_l: rouge,
        citation_recall: recall,
        citation_precision: precision,
        citation_precision_macro: precision_macro,
        citation_f1: f1(precision, recall),
        statement_count,
        zero_citation_statements: zero_citation,
        citation_count: judged,
    }
}

/// Judge and score one answer against its gold item.
pub async fn score_answer(
    answer: &CitedAnswer,
    gold_polar: PolarAnswer,
    gold_long_answer: Option<&str>,
    judge: &dyn AttributionJudge,
    corpus: &CorpusStore,
) -> Result<(QuestionScore, Vec<StatementJudgment>)> {
    let judgments = judge_answer(answer, judge, corpus).await?;
    let em = em_accuracy(answer.polar, gold_polar);
    let rouge = gold_long_answer.map(|reference| rouge_l(&answer.raw_text, reference).f);
    let score = score_from_judgments(&answer.question_id, &judgments, em, rouge);
    Ok((score, judgments))
}

/// Aggregate means over scored questions. F1 is reported both ways the
/// formula can be aggregated: mean of per-question F1 values, and the F1 of
/// the mean precision and recall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub question_count: usize,
    pub em_accuracy: f64,
    pub rouge_l: Option<f64>,
    pub rouge_scored: usize,
    pub citation_recall: f64,
    pub citation_precision: f64,
    /// Mean of per-question F1.
    pub citation_f1: f64,
    /// F1 of (mean precision, mean recall).
    pub citation_f1_of_means: f64,
}

pub fn aggregate(scores: &[QuestionScore]) -> Aggregate {
    let n = scores.len();
    if n == 0 {
        return Aggregate {
            question_count: 0,
            em_accuracy: 0.0,
            rouge_l: None,
            rouge_scored: 0,
            citation_recall: 0.0,
            citation_precision: 0.0,
            citation_f1: 0.0,
            citation_f1_of_means: 0.0,
        };
    }
    let nf = n as f64;
    let em = scores.iter().map(|s| s.em as f64).sum::<f64>() / nf;
    let rouge_values: Vec<f64> = scores.iter().filter_map(|s| s.rouge_l).collect();
    let rouge = if rouge_values.is_empty() {
        None
    } else {
        Some(rouge_values.iter().sum::<f64>() / rouge_values.len() as f64)
    };
    let recall = scores.iter().map(|s| s.citation_recall).sum::<f64>() / nf;
    let precision = scores.iter().map(|s| s.citation_precision).sum::<f64>() / nf;
    let mean_f1 = scores.iter().map(|s| s.citation_f1).sum::<f64>() / nf;
    Aggregate {
        question_count: n,
        em_accuracy: em,
        rouge_l: rouge,
        rouge_scored: rouge_values.len(),
        citation_recall: recall,
        citation_precision: precision,
        citation_f1: mean_f1,
        citation_f1_of_means: f1(precision, recall),
    }
}

/// Full evaluation output: per-question scores, raw judge labels (the input
/// to annotation pairing and oracle re-derivation), aggregates, the judge
/// identity, and a config snapshot supplied by the caller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub judge: String,
    pub judge_warnings: usize,
    pub config: serde_json::Value,
    pub aggregate: Aggregate,
    pub question_scores: Vec<QuestionScore>,
    pub details: Vec<QuestionDetail>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionDetail {
    pub question_id: String,
    pub statements: Vec<StatementJudgment>,
}

impl EvalReport {
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        std::fs::write(path, bytes)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<EvalReport> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Human-readable summary table.
    pub fn render_table(&self) -> String {
        let a = &self.aggregate;
        let rouge = a
            .rouge_l
            .map(|r| format!("{:.2}", r * 100.0))
            .unwrap_or_else(|| "/".into());
        let mut out = String::new();
        out.push_str(&format!(
            "{:<12} {:>8} {:>8} {:>8} {:>10} {:>8}\n",
            "questions", "Acc EM", "ROUGE-L", "Recall", "Precision", "F1"
        ));
        out.push_str(&format!(
            "{:<12} {:>8.2} {:>8} {:>8.2} {:>10.2} {:>8.2}\n",
            a.question_count,
            a.em_accuracy * 100.0,
            rouge,
            a.citation_recall * 100.0,
            a.citation_precision * 100.0,
            a.citation_f1 * 100.0,
        ));
        out.push_str(&format!(
            "(F1 of mean P/R: {:.2}; judge: {}; judge warnings: {})\n",
            a.citation_f1_of_means * 100.0,
            self.judge,
            self.judge_warnings
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::answer::CitedStatement;
    use crate::testutil::corpus_from;

    #[test]
    fn f1_edge_cases() {
        assert_eq!(f1(1.0, 1.0), 1.0);
        assert_eq!(f1(0.0, 0.5), 0.0);
        assert_eq!(f1(0.0, 0.0), 0.0);
        assert!((f1(0.5, 1.0) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn em_requires_exact_known_match() {
        assert_eq!(em_accuracy(PolarAnswer::Yes, PolarAnswer::Yes), 1);
        assert_eq!(em_accuracy(PolarAnswer::Unknown, PolarAnswer::Yes), 0);
        assert_eq!(em_accuracy(PolarAnswer::Maybe, PolarAnswer::Maybe), 1);
        assert_eq!(em_accuracy(PolarAnswer::No, PolarAnswer::Yes), 0);
    }

    fn answer(statements: Vec<(&str, Vec<&str>)>) -> CitedAnswer {
        CitedAnswer {
            question_id: "q1".into(),
            polar: PolarAnswer::Yes,
            statements: statements
                .into_iter()
                .map(|(text, citations)| CitedStatement {
                    text: text.into(),
                    citations: citations.into_iter().map(String::from).collect(),
                })
                .collect(),
            raw_text: String::new(),
        }
    }

    #[tokio::test]
    async fn zero_citations_score_zero_recall_without_judge_calls() {
        let (_dir, corpus) = corpus_from(&[("1", "t", "a")]);
        let judge = ScriptedJudge::new(AttributionLabel::Full);
        let ans = answer(vec![("uncited claim", vec![])]);
        let judgments = judge_answer(&ans, &judge, &corpus).await.unwrap();
        assert_eq!(judgments[0].recall_label, None);
        assert_eq!(judgments[0].recall(), 0);
        let score = score_from_judgments("q1", &judgments, 1, None);
        assert_eq!(score.citation_recall, 0.0);
        assert_eq!(score.citation_count, 0);
        assert_eq!(score.citation_precision, 0.0);
        assert_eq!(score.citation_f1, 0.0);
    }

    #[tokio::test]
    async fn recall_is_full_only_and_precision_pools_citations() {
        let (_dir, corpus) = corpus_from(&[
            ("a", "Title A", "alpha body"),
            ("b", "Title B", "beta body"),
        ]);
        let mut judge = ScriptedJudge::new(AttributionLabel::None);
        // union judged Partial -> recall 0 for statement 1
        judge.insert(
            "s1",
            &concat_evidence(&[corpus.get("a").unwrap(), corpus.get("b").unwrap()]),
            AttributionLabel::Partial,
        );
        judge.insert("s1", &concat_evidence(&[corpus.get("a").unwrap()]), AttributionLabel::Full);
        judge.insert("s1", &concat_evidence(&[corpus.get("b").unwrap()]), AttributionLabel::None);
        // union judged Full -> recall 1 for statement 2
        judge.insert("s2", &concat_evidence(&[corpus.get("a").unwrap()]), AttributionLabel::Full);

        let ans = answer(vec![("s1", vec!["a", "b"]), ("s2", vec!["a"])]);
        let judgments = judge_answer(&ans, &judge, &corpus).await.unwrap();
        let score = score_from_judgments("q1", &judgments, 0, None);

        assert_eq!(score.citation_recall, 0.5);
        // citations: Full, None, Full -> 2/3 supportive
        assert!((score.citation_precision - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(score.citation_count, 3);
    }

    #[tokio::test]
    async fn partial_counts_toward_precision() {
        let (_dir, corpus) = corpus_from(&[("a", "Title A", "alpha body")]);
        let mut judge = ScriptedJudge::new(AttributionLabel::None);
        let single = concat_evidence(&[corpus.get("a").unwrap()]);
        judge.insert("s", &single, AttributionLabel::Partial);
        let ans = answer(vec![("s", vec!["a"])]);
        let judgments = judge_answer(&ans, &judge, &corpus).await.unwrap();
        let score = score_from_judgments("q1", &judgments, 0, None);
        assert_eq!(score.citation_precision, 1.0);
        // ... but Partial on the union does not count toward recall
        assert_eq!(score.citation_recall, 0.0);
    }

    #[tokio::test]
    async fn judge_call_economy_is_one_per_statement_plus_one_per_citation() {
        use std::sync::atomic::{AtomicUsize, Ordering};

        struct CountingJudge(AtomicUsize);

        #[async_trait::async_trait]
        impl AttributionJudge for CountingJudge {
            fn name(&self) -> &str {
                "counting"
            }
            async fn judge(&self, _s: &str, _e: &str) -> crate::Result<AttributionLabel> {
                self.0.fetch_add(1, Ordering::Relaxed);
                Ok(AttributionLabel::Partial)
            }
        }

        let (_dir, corpus) = corpus_from(&[("a", "t", "x"), ("b", "t", "y"), ("c", "t", "z")]);
        // 3 statements: 2 + 1 + 0 citations -> 2 union calls + 3 citation calls
        let ans = answer(vec![
            ("s1", vec!["a", "b"]),
            ("s2", vec!["c"]),
            ("s3", vec![]),
        ]);
        let judge = CountingJudge(AtomicUsize::new(0));
        judge_answer(&ans, &judge, &corpus).await.unwrap();
        assert_eq!(judge.0.load(Ordering::Relaxed), 5);
    }

    #[tokio::test]
    async fn unknown_citation_doc_is_a_pipeline_bug() {
        let (_dir, corpus) = corpus_from(&[("a", "t", "x")]);
        let judge = ScriptedJudge::new(AttributionLabel::Full);
        let ans = answer(vec![("s", vec!["missing"])]);
        assert!(judge_answer(&ans, &judge, &corpus).await.is_err());
    }

    #[test]
    fn aggregate_means_and_both_f1_forms() {
        let scores = vec![
            QuestionScore {
                question_id: "1".into(),
                em: 1,
                rouge_l: Some(0.5),
                citation_recall: 1.0,
                citation_precision: 0.5,
                citation_precision_macro: 0.5,
                citation_f1: f1(0.5, 1.0),
                statement_count: 1,
                zero_citation_statements: 0,
                citation_count: 2,
            },
            QuestionScore {
                question_id: "2".into(),
                em: 0,
                rouge_l: None,
                citation_recall: 0.0,
                citation_precision: 1.0,
                citation_precision_macro: 1.0,
                citation_f1: f1(1.0, 0.0),
                statement_count: 2,
                zero_citation_statements: 1,
                citation_count: 1,
            },
        ];
        let agg = aggregate(&scores);
        assert_eq!(agg.question_count, 2);
        assert_eq!(agg.em_accuracy, 0.5);
        assert_eq!(agg.rouge_l, Some(0.5));
        assert_eq!(agg.rouge_scored, 1);
        assert_eq!(agg.citation_recall, 0.5);
        assert_eq!(agg.citation_precision, 0.75);
        assert!((agg.citation_f1 - (f1(0.5, 1.0) + 0.0) / 2.0).abs() < 1e-12);
        assert!((agg.citation_f1_of_means - f1(0.75, 0.5)).abs() < 1e-12);
    }
}
