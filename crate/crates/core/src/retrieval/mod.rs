//! Retrieval: lexical BM25 search, pluggable semantic reranking, hierarchical
//! two-stage retrieval, and reciprocal-rank fusion.
//!
//! All result lists share one ordering contract: ranks are 1..n, scores are
//! non-increasing, and exact score ties are broken by ascending doc id.

mod fusion;
mod index;
mod rerank;

pub use fusion::rrf_fuse;
pub use index::{IndexConfig, InvertedIndex};
pub use rerank::{
    rerank, HttpRerankScorer, InvertingScorer, JaccardScorer, PassthroughScorer, RerankCandidate,
    RerankScorer, ReplayRerankScorer,
};

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusStore;
use crate::{Error, Result};

/// Okapi BM25 parameters. Defaults mirror a common search-toolkit
/// configuration (k1 = 0.9, b = 0.4) and are tunable per run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 0.9, b: 0.4 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<()> {
        if self.k1.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::InvalidParam(format!("k1 must be > 0, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::InvalidParam(format!("b must be in [0, 1], got {}", self.b)));
        }
        Ok(())
    }
}

/// One entry of a ranked result list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedHit {
    pub doc_id: String,
    pub score: f64,
    /// 1-based rank within the list.
    pub rank: usize,
}

/// Sort scored documents into a ranked list: score descending, exact ties by
/// ascending doc id, ranks reassigned 1..n.
pub(crate) fn rank_hits(mut scored: Vec<(String, f64)>) -> Vec<RankedHit> {
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    scored
        .into_iter()
        .enumerate()
        .map(|(i, (doc_id, score))| RankedHit {
            doc_id,
            score,
            rank: i + 1,
        })
        .collect()
}

/// Which pipeline stage asked for retrieval. Counted separately so strategy
/// separation (e.g. "no pre-generation retrieval" for post-hoc citation) can
/// be asserted from the outside.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RetrievalPurpose {
    PreGeneration,
    PerStatement,
}

/// Retrieval call counters, shared across pipeline workers.
#[derive(Debug, Default)]
pub struct RetrievalCounters {
    pre_generation: AtomicUsize,
    per_statement: AtomicUsize,
}

impl RetrievalCounters {
    pub fn record(&self, purpose: RetrievalPurpose) {
        match purpose {
            RetrievalPurpose::PreGeneration => self.pre_generation.fetch_add(1, Ordering::Relaxed),
            RetrievalPurpose::PerStatement => self.per_statement.fetch_add(1, Ordering::Relaxed),
        };
    }

    pub fn pre_generation(&self) -> usize {
        self.pre_generation.load(Ordering::Relaxed)
    }

    pub fn per_statement(&self) -> usize {
        self.per_statement.load(Ordering::Relaxed)
    }
}

/// Retriever configuration selecting one of the studied arrangements:
/// lexical only, semantic scoring over a deep lexical pool, hierarchical
/// two-stage, or rank fusion of the lexical and semantic orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RetrieverKind {
    /// BM25 top-k.
    Lexical,
    /// Semantic scorer over a deep BM25 candidate pool. This approximates a
    /// standalone dense retriever; reports label it as scorer-over-pool.
    Semantic { pool_depth: usize },
    /// BM25 candidate generation, semantic rerank, truncate to k.
    Hierarchical { first_stage_depth: usize },
    /// Reciprocal-rank fusion of the BM25 order and the semantic order.
    RrfFusion { pool_depth: usize, k_rrf: usize },
}

impl Default for RetrieverKind {
    fn default() -> Self {
        RetrieverKind::Hierarchical {
            first_stage_depth: 100,
        }
    }
}

/// Immutable search facade over one corpus + index pair. Shareable across
/// concurrent readers; the scorer is the only component that may do I/O.
pub struct Retriever {
    corpus: Arc<CorpusStore>,
    index: InvertedIndex,
    params: Bm25Params,
    scorer: Arc<dyn RerankScorer>,
    kind: RetrieverKind,
    counters: Arc<RetrievalCounters>,
}

impl Retriever {
    pub fn new(
        corpus: Arc<CorpusStore>,
        index: InvertedIndex,
        params: Bm25Params,
        scorer: Arc<dyn RerankScorer>,
        kind: RetrieverKind,
    ) -> Result<Retriever> {
        params.validate()?;
        Ok(Retriever {
            corpus,
            index,
            params,
            scorer,
            kind,
            counters: Arc::new(RetrievalCounters::default()),
        })
    }

    pub fn counters(&self) -> Arc<RetrievalCounters> {
        Arc::clone(&self.counters)
    }

    pub fn corpus(&self) -> &CorpusStore {
        &self.corpus
    }

    pub fn index(&self) -> &InvertedIndex {
        &self.index
    }

    /// BM25 top-n.
    pub fn bm25_search(&self, query: &str, n: usize) -> Vec<RankedHit> {
        self.index.bm25_search(&self.params, query, n)
    }

    /// Lexical candidate generation followed by semantic rerank, truncated to
    /// `k`. The result set is always a subset of the first-stage set.
    pub async fn hierarchical_retrieve(
        &self,
        query: &str,
        first_stage_depth: usize,
        k: usize,
    ) -> Result<Vec<RankedHit>> {
        if k > first_stage_depth {
            return Err(Error::InvalidParam(format!(
                "k ({k}) must not exceed first_stage_depth ({first_stage_depth})"
            )));
        }
        let pool = self.bm25_search(query, first_stage_depth);
        if pool.is_empty() {
            return Ok(Vec::new());
        }
        let candidates = self.load_candidates(&pool)?;
        let mut reranked = rerank(query, &pool, &candidates, self.scorer.as_ref()).await?;
        reranked.truncate(k);
        Ok(reranked)
    }

    /// Run the configured retriever arrangement and count the call against
    /// `purpose`.
    pub async fn retrieve(
        &self,
        query: &str,
        k: usize,
        purpose: RetrievalPurpose,
    ) -> Result<Vec<RankedHit>> {
        self.counters.record(purpose);
        match self.kind {
            RetrieverKind::Lexical => Ok(self.bm25_search(query, k)),
            RetrieverKind::Semantic { pool_depth } => {
                let depth = pool_depth.max(k);
                let mut hits = self.hierarchical_retrieve(query, depth, depth).await?;
                hits.truncate(k);
                Ok(hits)
            }
            RetrieverKind::Hierarchical { first_stage_depth } => {
                self.hierarchical_retrieve(query, first_stage_depth.max(k), k)
                    .await
            }
            RetrieverKind::RrfFusion { pool_depth, k_rrf } => {
                let depth = pool_depth.max(k);
                let lexical = self.bm25_search(query, depth);
                if lexical.is_empty() {
                    return Ok(Vec::new());
                }
                let candidates = self.load_candidates(&lexical)?;
                let semantic = rerank(query, &lexical, &candidates, self.scorer.as_ref()).await?;
                let mut fused = rrf_fuse(&[lexical, semantic], k_rrf)?;
                fused.truncate(k);
                Ok(fused)
            }
        }
    }

    fn load_candidates(&self, hits: &[RankedHit]) -> Result<Vec<RerankCandidate>> {
        hits.iter()
            .map(|h| {
                let doc = self.corpus.get(&h.doc_id)?;
                Ok(RerankCandidate {
                    doc_id: h.doc_id.clone(),
                    text: doc.indexed_text(true),
                })
            })
            .collect()
    }
}
