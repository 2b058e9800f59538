//! Biomedical question answering with statement-level inline citations.
//!
//! The crate is organized around the stages of a cited-answer run:
//!
//! - [`corpus`]: ingest and serve a frozen abstract corpus (the citation pool).
//! - [`retrieval`]: BM25 inverted index, pluggable semantic reranking,
//!   hierarchical two-stage retrieval, and reciprocal-rank fusion.
//! - [`llm`]: prompt templates, an OpenAI-compatible chat client with retries,
//!   and a record/replay transcript store for reproducible offline runs.
//! - [`answer`]: turning raw model text into statements, `[n]` citation
//!   markers, and a polar yes/no/maybe verdict.
//! - [`pipeline`]: the generation + citation strategies (RAG, CoT, inline-only,
//!   per-statement re-retrieval, multi-pass with dedup/merge).
//! - [`eval`]: attribution judging, citation recall/precision/F1, EM accuracy,
//!   ROUGE-L, Cohen's kappa, dataset loading, and annotation export/import.

pub mod answer;
pub mod corpus;
mod error;
pub mod eval;
pub mod llm;
pub mod pipeline;
pub mod retrieval;
pub mod text;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[cfg(test)]
pub(crate) mod testutil {
    use std::io::Cursor;
    use std::sync::Arc;

    use crate::corpus::{ingest_documents, CorpusStore};

    /// Build a corpus store from (doc_id, title, abstract) triples. The
    /// returned TempDir must stay alive for the duration of the test.
    pub fn corpus_from(lines: &[(&str, &str, &str)]) -> (tempfile::TempDir, Arc<CorpusStore>) {
        let dir = tempfile::tempdir().unwrap();
        let input = lines
            .iter()
            .map(|(id, t, a)| {
                serde_json::json!({"doc_id": id, "title": t, "abstract": a}).to_string()
            })
            .collect::<Vec<_>>()
            .join("\n");
        ingest_documents(Cursor::new(input), dir.path()).unwrap();
        let store = Arc::new(CorpusStore::open(dir.path()).unwrap());
        (dir, store)
    }
}
