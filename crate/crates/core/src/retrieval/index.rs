//! Persisted inverted index with Okapi BM25 scoring.
//!
//! The index stores per-term postings (doc id, term frequency), per-document
//! token lengths, and the corpus token total. All maps are ordered so that
//! rebuilding over the same corpus produces a byte-identical artifact.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusStore;
use crate::text::tokenize_with;
use crate::{Error, Result};

/// How documents and queries are tokenized for this index. Stored with the
/// index so queries are tokenized the same way the postings were built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexConfig {
    /// Index title + " " + abstract instead of the abstract alone.
    pub include_title: bool,
    /// Apply plural stemming to document and query tokens.
    pub stem: bool,
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig {
            include_title: true,
            stem: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvertedIndex {
    config: IndexConfig,
    doc_count: u64,
    total_tokens: u64,
    /// doc id -> token count
    doc_lengths: BTreeMap<String, u32>,
    /// term -> postings sorted by doc id
    postings: BTreeMap<String, Vec<(String, u32)>>,
}

impl InvertedIndex {
    /// Build an index over every document of a corpus.
    pub fn build(corpus: &CorpusStore, config: IndexConfig) -> Result<InvertedIndex> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut doc_lengths = BTreeMap::new();
        let mut postings: BTreeMap<String, BTreeMap<String, u32>> = BTreeMap::new();
        let mut total_tokens: u64 = 0;

        for doc in corpus.iter() {
            let doc = doc?;
            let tokens = tokenize_with(&doc.indexed_text(config.include_title), config.stem);
            total_tokens += tokens.len() as u64;
            doc_lengths.insert(doc.doc_id.clone(), tokens.len() as u32);
            let mut freqs: HashMap<String, u32> = HashMap::new();
            for t in tokens {
                *freqs.entry(t).or_insert(0) += 1;
            }
            for (term, tf) in freqs {
                postings.entry(term).or_default().insert(doc.doc_id.clone(), tf);
            }
        }

        Ok(InvertedIndex {
            config,
            doc_count: corpus.len() as u64,
            total_tokens,
            doc_lengths,
            postings: postings
                .into_iter()
                .map(|(term, docs)| (term, docs.into_iter().collect()))
                .collect(),
        })
    }

    pub fn config(&self) -> IndexConfig {
        self.config
    }

    pub fn doc_count(&self) -> u64 {
        self.doc_count
    }

    /// Mean token count per document.
    pub fn avgdl(&self) -> f64 {
        if self.doc_count == 0 {
            0.0
        } else {
            self.total_tokens as f64 / self.doc_count as f64
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        serde_json::to_writer(BufWriter::new(File::create(path)?), self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<InvertedIndex> {
        Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
    }

    /// Inverse document frequency: ln((N - df + 0.5) / (df + 0.5) + 1).
    /// Positive for every indexed term.
    fn idf(&self, term: &str) -> f64 {
        let df = self.postings.get(term).map(|p| p.len()).unwrap_or(0) as f64;
        if df == 0.0 {
            return 0.0;
        }
        let n = self.doc_count as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    /// Top-n documents by Okapi BM25. Query terms are tokenized with the
    /// index configuration; repeated query terms contribute once per
    /// occurrence. A query with no indexable terms returns an empty list.
    pub fn bm25_search(&self, params: &super::Bm25Params, query: &str, n: usize) -> Vec<super::RankedHit> {
        let terms = tokenize_with(query, self.config.stem);
        if terms.is_empty() || n == 0 {
            return Vec::new();
        }
        let avgdl = self.avgdl();
        let mut scores: HashMap<&str, f64> = HashMap::new();
        for term in &terms {
            let Some(postings) = self.postings.get(term) else {
                continue;
            };
            let idf = self.idf(term);
            for (doc_id, tf) in postings {
                let dl = self.doc_lengths[doc_id] as f64;
                let tf = *tf as f64;
                let denom = tf + params.k1 * (1.0 - params.b + params.b * dl / avgdl);
                *scores.entry(doc_id.as_str()).or_insert(0.0) += idf * tf * (params.k1 + 1.0) / denom;
            }
        }
        let mut hits = super::rank_hits(
            scores
                .into_iter()
                .map(|(id, s)| (id.to_string(), s))
                .collect(),
        );
        hits.truncate(n);
        hits
    }
}
