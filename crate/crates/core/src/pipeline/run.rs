//! Pipeline execution: one question end to end, and bounded-parallel dataset
//! runs with per-stage logs.

use std::sync::Arc;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

use super::{merge_dedup, GenerationMode, PipelineConfig, SecondPassSeeker};
use crate::answer::{analyze, CitedAnswer, CitedStatement, PolarAnswer};
use crate::corpus::{CorpusStore, Document};
use crate::eval::DatasetItem;
use crate::llm::{
    bindings, format_document_block, names, render_with_budget, ChatClient, GenerationConfig,
    PromptSet,
};
use crate::retrieval::{RankedHit, RerankCandidate, RerankScorer, RetrievalPurpose, Retriever};
use crate::{Error, Result};

/// Shared read-only services for a run. Clone-cheap: everything is behind an
/// Arc.
#[derive(Clone)]
pub struct PipelineServices {
    pub corpus: Arc<CorpusStore>,
    pub retriever: Arc<Retriever>,
    pub chat: Arc<dyn ChatClient>,
    pub prompts: Arc<PromptSet>,
    pub generation: GenerationConfig,
    /// Entailment-style scorer for the NLI citation filter.
    pub nli_scorer: Arc<dyn RerankScorer>,
}

/// Per-statement second-pass record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondPassLog {
    pub statement_index: usize,
    /// Candidate pool doc ids, in pool order.
    pub pool: Vec<String>,
    /// Final pass-2 citations.
    pub selected: Vec<String>,
    /// Selection failed or was unparseable; pool order was used instead.
    pub fallback: bool,
}

/// Stage artifacts for one question, enough to replay any ablation offline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageLog {
    pub question_id: String,
    pub shortlist: Vec<RankedHit>,
    /// Shortlist documents actually shown after prompt-budget truncation.
    pub docs_shown: usize,
    pub dropped_docs: usize,
    pub raw_answer: String,
    pub polar: PolarAnswer,
    pub first_pass: Vec<Vec<String>>,
    pub second_pass: Vec<SecondPassLog>,
    pub merged: Vec<Vec<String>>,
    pub dropped_markers: usize,
    pub malformed_brackets: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionFailure {
    pub question_id: String,
    pub error: String,
}

/// Outcome of a dataset run. Answers and logs are in dataset order; failed
/// questions are recorded and skipped unless fail_fast is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub answers: Vec<CitedAnswer>,
    pub stage_logs: Vec<StageLog>,
    pub failures: Vec<QuestionFailure>,
    pub pre_generation_retrievals: usize,
    pub per_statement_retrievals: usize,
}

pub struct Pipeline {
    services: PipelineServices,
    config: PipelineConfig,
}

struct Generated {
    raw: String,
    shortlist: Vec<RankedHit>,
    shown_docs: Vec<Document>,
    dropped_docs: usize,
}

impl Pipeline {
    pub fn new(services: PipelineServices, config: PipelineConfig) -> Result<Pipeline> {
        config.validate()?;
        Ok(Pipeline { services, config })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn services(&self) -> &PipelineServices {
        &self.services
    }

    async fn generate(&self, question: &str, gold_doc_ids: Option<&[String]>) -> Result<Generated> {
        let s = &self.services;
        match self.config.generation_mode {
            GenerationMode::Cot => {
                let template = s.prompts.get(names::COT_ANSWER)?;
                let (system, user) = template.render(&bindings([("question", question)]))?;
                let raw = s.chat.generate(&system, &user, &s.generation).await?;
                Ok(Generated {
                    raw,
                    shortlist: Vec::new(),
                    shown_docs: Vec::new(),
                    dropped_docs: 0,
                })
            }
            GenerationMode::Rag | GenerationMode::RagOracle => {
                let (shortlist, docs) = match self.config.generation_mode {
                    GenerationMode::Rag => {
                        let hits = s
                            .retriever
                            .retrieve(question, self.config.shortlist_k, RetrievalPurpose::PreGeneration)
                            .await?;
                        let docs = hits
                            .iter()
                            .map(|h| s.corpus.get(&h.doc_id))
                            .collect::<Result<Vec<_>>>()?;
                        (hits, docs)
                    }
                    GenerationMode::RagOracle => {
                        let ids = gold_doc_ids.filter(|v| !v.is_empty()).ok_or_else(|| {
                            Error::Config("oracle generation requires gold documents for the question".into())
                        })?;
                        let docs = ids
                            .iter()
                            .map(|id| {
                                s.corpus.get(id).map_err(|_| {
                                    Error::Config(format!("gold document {id} is not in the corpus"))
                                })
                            })
                            .collect::<Result<Vec<_>>>()?;
                        let hits = ids
                            .iter()
                            .enumerate()
                            .map(|(i, id)| RankedHit {
                                doc_id: id.clone(),
                                score: 0.0,
                                rank: i + 1,
                            })
                            .collect();
                        (hits, docs)
                    }
                    GenerationMode::Cot => unreachable!(),
                };
                let template_name = if self.config.seek_strategy.requests_inline() {
                    names::RAG_CITE_ANSWER
                } else {
                    names::RAG_ANSWER
                };
                let template = s.prompts.get(template_name)?;
                let (system, user, used) = render_with_budget(
                    template,
                    &bindings([("question", question)]),
                    &docs,
                    self.config.max_prompt_chars,
                )?;
                let raw = s.chat.generate(&system, &user, &s.generation).await?;
                let dropped = docs.len() - used;
                Ok(Generated {
                    raw,
                    shortlist,
                    shown_docs: docs.into_iter().take(used).collect(),
                    dropped_docs: dropped,
                })
            }
        }
    }

    /// Map in-range marker indices to shortlist doc ids, deduplicating within
    /// the statement while preserving first-mention order.
    fn map_markers(marker_indices: &[usize], shown_docs: &[Document]) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for &idx in marker_indices {
            let Some(doc) = shown_docs.get(idx - 1) else {
                continue;
            };
            if !out.iter().any(|d| d == &doc.doc_id) {
                out.push(doc.doc_id.clone());
            }
        }
        out
    }

    async fn select_with_model(
        &self,
        statement: &str,
        pool: &[Document],
    ) -> Result<Option<Vec<String>>> {
        let s = &self.services;
        let template = s.prompts.get(names::CITE_SELECT)?;
        let (system, user) = template.render(&bindings([
            ("statement", statement),
            ("documents", &format_document_block(pool)),
        ]))?;
        let response = s.chat.generate(&system, &user, &s.generation).await?;
        if response.trim().eq_ignore_ascii_case("none") {
            return Ok(Some(Vec::new()));
        }
        let parsed = crate::answer::parse_inline_citations(&response, pool.len());
        let mut selected: Vec<String> = Vec::new();
        for idx in parsed.citation_indices() {
            let doc_id = &pool[idx - 1].doc_id;
            if !selected.iter().any(|d| d == doc_id) {
                selected.push(doc_id.clone());
            }
        }
        if selected.is_empty() {
            // unparseable selection; signal fallback
            return Ok(None);
        }
        selected.truncate(self.config.per_statement_k);
        Ok(Some(selected))
    }

    async fn second_pass(
        &self,
        statement_index: usize,
        statement: &str,
        shown_docs: &[Document],
        seeker: SecondPassSeeker,
    ) -> Result<SecondPassLog> {
        let s = &self.services;
        let k = self.config.per_statement_k;
        let pool: Vec<Document> = match seeker {
            SecondPassSeeker::PreGenShortlistLlmRerank => shown_docs.to_vec(),
            _ => {
                let hits = s
                    .retriever
                    .retrieve(statement, k, RetrievalPurpose::PerStatement)
                    .await?;
                hits.iter()
                    .map(|h| s.corpus.get(&h.doc_id))
                    .collect::<Result<Vec<_>>>()?
            }
        };
        let pool_ids: Vec<String> = pool.iter().map(|d| d.doc_id.clone()).collect();
        if pool.is_empty() {
            return Ok(SecondPassLog {
                statement_index,
                pool: pool_ids,
                selected: Vec::new(),
                fallback: false,
            });
        }
        let fallback_selection = || pool_ids.iter().take(k).cloned().collect::<Vec<_>>();
        let (selected, fallback) = match seeker {
            SecondPassSeeker::ReRetrievalOnly => (fallback_selection(), false),
            SecondPassSeeker::ReRetrievalNliRerank => {
                let candidates: Vec<RerankCandidate> = pool
                    .iter()
                    .map(|d| RerankCandidate {
                        doc_id: d.doc_id.clone(),
                        text: d.indexed_text(true),
                    })
                    .collect();
                match s.nli_scorer.score(statement, &candidates).await {
                    Ok(scores) => {
                        let mut kept: Vec<(String, f64)> = scores
                            .into_iter()
                            .filter(|(_, score)| *score >= self.config.nli_threshold)
                            .collect();
                        kept.sort_by(|a, b| {
                            b.1.partial_cmp(&a.1)
                                .unwrap_or(std::cmp::Ordering::Equal)
                                .then_with(|| a.0.cmp(&b.0))
                        });
                        kept.truncate(k);
                        (kept.into_iter().map(|(id, _)| id).collect(), false)
                    }
                    Err(_) => (fallback_selection(), true),
                }
            }
            SecondPassSeeker::ReRetrievalLlmRerank | SecondPassSeeker::PreGenShortlistLlmRerank => {
                match self.select_with_model(statement, &pool).await {
                    Ok(Some(selected)) => (selected, false),
                    Ok(None) | Err(_) => (fallback_selection(), true),
                }
            }
        };
        Ok(SecondPassLog {
            statement_index,
            pool: pool_ids,
            selected,
            fallback,
        })
    }

    /// Run one question end to end.
    pub async fn run_question(
        &self,
        question_id: &str,
        question: &str,
        gold_doc_ids: Option<&[String]>,
    ) -> Result<(CitedAnswer, StageLog)> {
        let result = self.run_question_inner(question_id, question, gold_doc_ids).await;
        result.map_err(|e| e.for_question(question_id))
    }

    async fn run_question_inner(
        &self,
        question_id: &str,
        question: &str,
        gold_doc_ids: Option<&[String]>,
    ) -> Result<(CitedAnswer, StageLog)> {
        let generated = self.generate(question, gold_doc_ids).await?;
        let analysis = analyze(&generated.raw, generated.shown_docs.len());
        let inline = self.config.seek_strategy.requests_inline();

        let first_pass: Vec<Vec<String>> = analysis
            .statements
            .iter()
            .map(|st| {
                if inline {
                    Self::map_markers(&st.marker_indices, &generated.shown_docs)
                } else {
                    Vec::new()
                }
            })
            .collect();

        let second_pass_logs: Vec<SecondPassLog> = match self
            .config
            .seek_strategy
            .second_pass(self.config.multi_pass_seeker)
        {
            None => Vec::new(),
            Some(seeker) => {
                let futures = analysis.statements.iter().enumerate().map(|(i, st)| {
                    self.second_pass(i, &st.text, &generated.shown_docs, seeker)
                });
                futures::future::try_join_all(futures).await?
            }
        };

        let merged: Vec<Vec<String>> = analysis
            .statements
            .iter()
            .enumerate()
            .map(|(i, _)| {
                let empty: Vec<String> = Vec::new();
                let pass2 = second_pass_logs
                    .get(i)
                    .map(|l| l.selected.clone())
                    .unwrap_or(empty);
                merge_dedup(&first_pass[i], &pass2)
            })
            .collect();
        debug_assert!(merged
            .iter()
            .all(|c| c.len() <= self.config.shortlist_k + self.config.per_statement_k));

        let answer = CitedAnswer {
            question_id: question_id.to_string(),
            polar: analysis.polar,
            statements: analysis
                .statements
                .iter()
                .zip(&merged)
                .map(|(st, citations)| CitedStatement {
                    text: st.text.clone(),
                    citations: citations.clone(),
                })
                .collect(),
            raw_text: generated.raw.clone(),
        };
        let log = StageLog {
            question_id: question_id.to_string(),
            shortlist: generated.shortlist,
            docs_shown: generated.shown_docs.len(),
            dropped_docs: generated.dropped_docs,
            raw_answer: generated.raw,
            polar: analysis.polar,
            first_pass,
            second_pass: second_pass_logs,
            merged,
            dropped_markers: analysis.dropped_markers,
            malformed_brackets: analysis.malformed_brackets,
        };
        Ok((answer, log))
    }

    /// Run every dataset item through a bounded worker pool. Output order is
    /// dataset order regardless of completion order.
    pub async fn run_dataset(&self, items: &[DatasetItem]) -> Result<RunOutcome> {
        let results: Vec<(String, Result<(CitedAnswer, StageLog)>)> = stream::iter(items)
            .map(|item| async move {
                let result = self
                    .run_question(&item.question_id, &item.question, item.gold_doc_ids.as_deref())
                    .await;
                (item.question_id.clone(), result)
            })
            .buffered(self.config.parallelism)
            .collect()
            .await;

        let mut answers = Vec::new();
        let mut stage_logs = Vec::new();
        let mut failures = Vec::new();
        for (question_id, result) in results {
            match result {
                Ok((answer, log)) => {
                    answers.push(answer);
                    stage_logs.push(log);
                }
                Err(e) if self.config.fail_fast => return Err(e),
                Err(e) => failures.push(QuestionFailure {
                    question_id,
                    error: e.to_string(),
                }),
            }
        }
        let counters = self.services.retriever.counters();
        Ok(RunOutcome {
            answers,
            stage_logs,
            failures,
            pre_generation_retrievals: counters.pre_generation(),
            per_statement_retrievals: counters.per_statement(),
        })
    }
}
