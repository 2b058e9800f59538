//! Semantic reranking behind a pluggable scorer interface.
//!
//! The scorer may be a remote cross-encoder endpoint, a replay of a recorded
//! endpoint, or the deterministic local token-overlap scorer used for offline
//! tests. Reranking never changes the document set, only the order.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{rank_hits, RankedHit};
use crate::text::jaccard;
use crate::{Error, Result};

/// One candidate passed to a scorer: the doc id plus the passage text.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RerankCandidate {
    pub doc_id: String,
    pub text: String,
}

/// Scores candidates against a query. Higher is more relevant. Implementations
/// must return exactly one score per candidate.
#[async_trait]
pub trait RerankScorer: Send + Sync {
    fn name(&self) -> &str;

    async fn score(
        &self,
        query: &str,
        candidates: &[RerankCandidate],
    ) -> Result<Vec<(String, f64)>>;
}

/// Reorder `hits` by scorer score descending, ties by ascending doc id, ranks
/// reassigned. On scorer failure the error carries the candidate list
/// untouched so the caller can fall back to the first-stage order.
pub async fn rerank(
    query: &str,
    hits: &[RankedHit],
    candidates: &[RerankCandidate],
    scorer: &dyn RerankScorer,
) -> Result<Vec<RankedHit>> {
    if hits.is_empty() {
        return Err(Error::InvalidParam("rerank requires a nonempty candidate list".into()));
    }
    let scored = match scorer.score(query, candidates).await {
        Ok(s) => s,
        Err(e) => {
            return Err(Error::Rerank {
                message: e.to_string(),
                candidates: hits.to_vec(),
            })
        }
    };
    // the response must cover exactly the requested candidate set
    if scored.len() != hits.len() {
        return Err(Error::Rerank {
            message: format!("scorer returned {} scores for {} candidates", scored.len(), hits.len()),
            candidates: hits.to_vec(),
        });
    }
    let mut by_id: HashMap<&str, f64> = HashMap::with_capacity(scored.len());
    for (doc_id, score) in &scored {
        if by_id.insert(doc_id.as_str(), *score).is_some() {
            return Err(Error::Rerank {
                message: format!("scorer returned doc_id {doc_id} more than once"),
                candidates: hits.to_vec(),
            });
        }
    }
    let mut pairs = Vec::with_capacity(hits.len());
    for hit in hits {
        match by_id.get(hit.doc_id.as_str()) {
            Some(score) => pairs.push((hit.doc_id.clone(), *score)),
            None => {
                return Err(Error::Rerank {
                    message: format!("scorer response missing doc_id {}", hit.doc_id),
                    candidates: hits.to_vec(),
                })
            }
        }
    }
    Ok(rank_hits(pairs))
}

/// Token-overlap Jaccard between query and passage. Deterministic stand-in
/// for a remote cross-encoder; also serves as the entailment-style scorer in
/// offline citation filtering.
#[derive(Debug, Default)]
pub struct JaccardScorer;

#[async_trait]
impl RerankScorer for JaccardScorer {
    fn name(&self) -> &str {
        "jaccard"
    }

    async fn score(
        &self,
        query: &str,
        candidates: &[RerankCandidate],
    ) -> Result<Vec<(String, f64)>> {
        Ok(candidates
            .iter()
            .map(|c| (c.doc_id.clone(), jaccard(query, &c.text)))
            .collect())
    }
}

/// Keeps the input order: score = -position.
#[derive(Debug, Default)]
pub struct PassthroughScorer;

#[async_trait]
impl RerankScorer for PassthroughScorer {
    fn name(&self) -> &str {
        "passthrough"
    }

    async fn score(
        &self,
        _query: &str,
        candidates: &[RerankCandidate],
    ) -> Result<Vec<(String, f64)>> {
        Ok(candidates
            .iter()
            .enumerate()
            .map(|(i, c)| (c.doc_id.clone(), -((i + 1) as f64)))
            .collect())
    }
}

/// Exactly reverses the input order: score = +position.
#[derive(Debug, Default)]
pub struct InvertingScorer;

#[async_trait]
impl RerankScorer for InvertingScorer {
    fn name(&self) -> &str {
        "inverting"
    }

    async fn score(
        &self,
        _query: &str,
        candidates: &[RerankCandidate],
    ) -> Result<Vec<(String, f64)>> {
        Ok(candidates
            .iter()
            .enumerate()
            .map(|(i, c)| (c.doc_id.clone(), (i + 1) as f64))
            .collect())
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    query: &'a str,
    passages: Vec<&'a str>,
}

#[derive(Deserialize)]
struct WireResponse {
    scores: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ScorerLogEntry {
    hash: String,
    query: String,
    passages: Vec<String>,
    scores: Vec<f64>,
}

fn request_hash(query: &str, candidates: &[RerankCandidate]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(query.as_bytes());
    for c in candidates {
        hasher.update([0x1f]);
        hasher.update(c.text.as_bytes());
    }
    format!("{:x}", hasher.finalize())
}

/// Remote cross-encoder endpoint: POST {query, passages} -> {scores}, scores
/// aligned with the passage order. Requests and responses can be logged to a
/// line-delimited file for later replay.
pub struct HttpRerankScorer {
    url: String,
    client: reqwest::Client,
    log_path: Option<PathBuf>,
    log_lock: Mutex<()>,
}

impl HttpRerankScorer {
    pub fn new(url: impl Into<String>) -> HttpRerankScorer {
        HttpRerankScorer {
            url: url.into(),
            client: reqwest::Client::new(),
            log_path: None,
            log_lock: Mutex::new(()),
        }
    }

    /// Record every request/response pair to `path` for replay.
    pub fn with_log(mut self, path: impl Into<PathBuf>) -> HttpRerankScorer {
        self.log_path = Some(path.into());
        self
    }

    fn append_log(&self, entry: &ScorerLogEntry) -> Result<()> {
        if let Some(path) = &self.log_path {
            let _guard = self.log_lock.lock().expect("scorer log lock poisoned");
            let mut line = serde_json::to_vec(entry)?;
            line.push(b'\n');
            use std::io::Write;
            let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
            f.write_all(&line)?;
        }
        Ok(())
    }
}

#[async_trait]
impl RerankScorer for HttpRerankScorer {
    fn name(&self) -> &str {
        "http"
    }

    async fn score(
        &self,
        query: &str,
        candidates: &[RerankCandidate],
    ) -> Result<Vec<(String, f64)>> {
        let request = WireRequest {
            query,
            passages: candidates.iter().map(|c| c.text.as_str()).collect(),
        };
        let response = self.client.post(&self.url).json(&request).send().await?;
        let status = response.status();
        if !status.is_success() {
            return Err(Error::HttpStatus {
                status: status.as_u16(),
                body: response.text().await.unwrap_or_default(),
            });
        }
        let body: WireResponse = response.json().await?;
        if body.scores.len() != candidates.len() {
            return Err(Error::InvalidParam(format!(
                "rerank endpoint returned {} scores for {} passages",
                body.scores.len(),
                candidates.len()
            )));
        }
        self.append_log(&ScorerLogEntry {
            hash: request_hash(query, candidates),
            query: query.to_string(),
            passages: candidates.iter().map(|c| c.text.clone()).collect(),
            scores: body.scores.clone(),
        })?;
        Ok(candidates
            .iter()
            .zip(body.scores)
            .map(|(c, s)| (c.doc_id.clone(), s))
            .collect())
    }
}

/// Replays scores recorded by [`HttpRerankScorer::with_log`]. Lookups are by
/// content hash of (query, passages); a miss is an error.
pub struct ReplayRerankScorer {
    entries: HashMap<String, Vec<f64>>,
}

impl ReplayRerankScorer {
    pub fn load(path: &Path) -> Result<ReplayRerankScorer> {
        let mut entries = HashMap::new();
        let content = std::fs::read_to_string(path)?;
        for line in content.lines() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: ScorerLogEntry = serde_json::from_str(line)?;
            entries.entry(entry.hash).or_insert(entry.scores);
        }
        Ok(ReplayRerankScorer { entries })
    }
}

#[async_trait]
impl RerankScorer for ReplayRerankScorer {
    fn name(&self) -> &str {
        "replay"
    }

    async fn score(
        &self,
        query: &str,
        candidates: &[RerankCandidate],
    ) -> Result<Vec<(String, f64)>> {
        let hash = request_hash(query, candidates);
        let scores = self
            .entries
            .get(&hash)
            .ok_or(Error::ReplayMiss { hash })?;
        if scores.len() != candidates.len() {
            return Err(Error::InvalidParam(
                "recorded score count does not match candidate count".into(),
            ));
        }
        Ok(candidates
            .iter()
            .zip(scores.iter())
            .map(|(c, s)| (c.doc_id.clone(), *s))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hits(ids: &[&str]) -> Vec<RankedHit> {
        ids.iter()
            .enumerate()
            .map(|(i, id)| RankedHit {
                doc_id: id.to_string(),
                score: 10.0 - i as f64,
                rank: i + 1,
            })
            .collect()
    }

    fn candidates(ids: &[&str]) -> Vec<RerankCandidate> {
        ids.iter()
            .map(|id| RerankCandidate {
                doc_id: id.to_string(),
                text: format!("passage for {id}"),
            })
            .collect()
    }

    #[tokio::test]
    async fn passthrough_keeps_order() {
        let h = hits(&["a", "b", "c"]);
        let out = rerank("q", &h, &candidates(&["a", "b", "c"]), &PassthroughScorer)
            .await
            .unwrap();
        let ids: Vec<&str> = out.iter().map(|x| x.doc_id.as_str()).collect();
        assert_eq!(ids, vec!["a", "b", "c"]);
        assert_eq!(out.iter().map(|x| x.rank).collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[tokio::test]
    async fn inverting_reverses_order() {
        let h = hits(&["a", "b", "c"]);
        let out = rerank("q", &h, &candidates(&["a", "b", "c"]), &InvertingScorer)
            .await
            .unwrap();
        let ids: Vec<&str> = out.iter().map(|x| x.doc_id.as_str()).collect();
        assert_eq!(ids, vec!["c", "b", "a"]);
    }

    #[tokio::test]
    async fn single_candidate_unchanged() {
        let h = hits(&["only"]);
        let out = rerank("q", &h, &candidates(&["only"]), &InvertingScorer)
            .await
            .unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].doc_id, "only");
        assert_eq!(out[0].rank, 1);
    }

    #[tokio::test]
    async fn empty_candidates_is_an_error() {
        let out = rerank("q", &[], &[], &PassthroughScorer).await;
        assert!(out.is_err());
    }

    struct BrokenScorer;

    #[async_trait]
    impl RerankScorer for BrokenScorer {
        fn name(&self) -> &str {
            "broken"
        }
        async fn score(&self, _q: &str, _c: &[RerankCandidate]) -> Result<Vec<(String, f64)>> {
            Err(Error::InvalidParam("scorer exploded".into()))
        }
    }

    #[tokio::test]
    async fn scorer_failure_carries_candidates_for_fallback() {
        let h = hits(&["a", "b"]);
        let err = rerank("q", &h, &candidates(&["a", "b"]), &BrokenScorer)
            .await
            .unwrap_err();
        match err {
            Error::Rerank { candidates, .. } => assert_eq!(candidates, h),
            other => panic!("unexpected error: {other}"),
        }
    }

    struct ShortScorer;

    #[async_trait]
    impl RerankScorer for ShortScorer {
        fn name(&self) -> &str {
            "short"
        }
        async fn score(&self, _q: &str, c: &[RerankCandidate]) -> Result<Vec<(String, f64)>> {
            Ok(c.iter().take(1).map(|x| (x.doc_id.clone(), 1.0)).collect())
        }
    }

    #[tokio::test]
    async fn incomplete_coverage_is_an_error() {
        let h = hits(&["a", "b"]);
        let err = rerank("q", &h, &candidates(&["a", "b"]), &ShortScorer)
            .await
            .unwrap_err();
        assert!(matches!(err, Error::Rerank { .. }));
    }

    #[tokio::test]
    async fn jaccard_prefers_overlapping_passage() {
        let h = hits(&["far", "near"]);
        let cands = vec![
            RerankCandidate {
                doc_id: "far".into(),
                text: "completely unrelated words".into(),
            },
            RerankCandidate {
                doc_id: "near".into(),
                text: "chlorotoxin is a peptide".into(),
            },
        ];
        let out = rerank("chlorotoxin peptide", &h, &cands, &JaccardScorer)
            .await
            .unwrap();
        assert_eq!(out[0].doc_id, "near");
    }

    #[tokio::test]
    async fn replay_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let log = dir.path().join("rerank_log.jsonl");
        let cands = candidates(&["a", "b"]);
        // write a log entry the way the http scorer would
        let entry = ScorerLogEntry {
            hash: request_hash("q", &cands),
            query: "q".into(),
            passages: cands.iter().map(|c| c.text.clone()).collect(),
            scores: vec![0.25, 0.75],
        };
        std::fs::write(&log, format!("{}\n", serde_json::to_string(&entry).unwrap())).unwrap();

        let scorer = ReplayRerankScorer::load(&log).unwrap();
        let scores = scorer.score("q", &cands).await.unwrap();
        assert_eq!(scores, vec![("a".into(), 0.25), ("b".into(), 0.75)]);

        let miss = scorer.score("other query", &cands).await;
        assert!(matches!(miss, Err(Error::ReplayMiss { .. })));
    }
}
