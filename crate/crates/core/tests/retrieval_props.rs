//! Retrieval properties checked against independent oracles on random
//! corpora: BM25 score equivalence, prefix monotonicity, ranked-list
//! ordering, and hierarchical composition with known scorers.

use std::io::Cursor;
use std::sync::Arc;

use proptest::prelude::*;

use citedqa::corpus::{ingest_documents, CorpusStore};
use citedqa::retrieval::{
    rrf_fuse, Bm25Params, IndexConfig, InvertedIndex, InvertingScorer, PassthroughScorer,
    RankedHit, Retriever, RetrieverKind,
};

const VOCAB: &[&str] = &[
    "avelumab", "carcinoma", "chemotherapy", "trial", "survival", "patients", "treatment",
    "checkpoint", "inhibitor", "maintenance", "bladder", "urothelial", "response", "therapy",
    "platinum", "peptide", "chlorotoxin", "amino", "acids", "evidence",
];

/// Independent re-derivation of the BM25 score straight from the formula.
/// Deliberately shares nothing with the index implementation: document
/// frequencies, term frequencies, and lengths are recomputed by scanning.
fn brute_force_bm25(
    docs: &[(String, Vec<String>)],
    params: Bm25Params,
    query_tokens: &[String],
    doc_idx: usize,
) -> f64 {
    let n = docs.len() as f64;
    let total: usize = docs.iter().map(|(_, t)| t.len()).sum();
    let avgdl = total as f64 / n;
    let tokens = &docs[doc_idx].1;
    let dl = tokens.len() as f64;
    let mut score = 0.0;
    for q in query_tokens {
        let df = docs.iter().filter(|(_, t)| t.contains(q)).count() as f64;
        let tf = tokens.iter().filter(|t| *t == q).count() as f64;
        if df == 0.0 || tf == 0.0 {
            continue;
        }
        let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
        score += idf * tf * (params.k1 + 1.0)
            / (tf + params.k1 * (1.0 - params.b + params.b * dl / avgdl));
    }
    score
}

fn lowercase_tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

struct Fixture {
    _dir: tempfile::TempDir,
    corpus: Arc<CorpusStore>,
    index: InvertedIndex,
    /// (doc_id, tokens of the indexed text) for the oracle.
    tokenized: Vec<(String, Vec<String>)>,
}

fn build_fixture(doc_words: &[Vec<usize>]) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let mut lines = Vec::new();
    let mut tokenized = Vec::new();
    for (i, words) in doc_words.iter().enumerate() {
        let doc_id = format!("d{i:03}");
        let body: Vec<&str> = words.iter().map(|w| VOCAB[w % VOCAB.len()]).collect();
        let abstract_text = if body.is_empty() { "placeholder".to_string() } else { body.join(" ") };
        lines.push(
            serde_json::json!({"doc_id": doc_id, "title": "", "abstract": abstract_text})
                .to_string(),
        );
        tokenized.push((doc_id, lowercase_tokens(&abstract_text)));
    }
    ingest_documents(Cursor::new(lines.join("\n")), dir.path()).unwrap();
    let corpus = Arc::new(CorpusStore::open(dir.path()).unwrap());
    let index = InvertedIndex::build(
        &corpus,
        IndexConfig {
            include_title: false,
            stem: false,
        },
    )
    .unwrap();
    Fixture {
        _dir: dir,
        corpus,
        index,
        tokenized,
    }
}

fn assert_ordering_invariant(hits: &[RankedHit]) {
    for (i, hit) in hits.iter().enumerate() {
        assert_eq!(hit.rank, i + 1, "ranks must be 1..n");
        if i > 0 {
            let prev = &hits[i - 1];
            assert!(
                prev.score > hit.score || (prev.score == hit.score && prev.doc_id < hit.doc_id),
                "ordering violated at {i}: {prev:?} then {hit:?}"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bm25_matches_brute_force_on_random_corpora(
        doc_words in proptest::collection::vec(proptest::collection::vec(0usize..60, 1..30), 2..25),
        query_words in proptest::collection::vec(0usize..60, 1..6),
    ) {
        let fixture = build_fixture(&doc_words);
        let params = Bm25Params::default();
        let query: String = query_words.iter().map(|w| VOCAB[w % VOCAB.len()]).collect::<Vec<_>>().join(" ");
        let query_tokens = lowercase_tokens(&query);

        let hits = fixture.index.bm25_search(&params, &query, fixture.tokenized.len());
        assert_ordering_invariant(&hits);

        for hit in &hits {
            let idx = fixture.tokenized.iter().position(|(id, _)| id == &hit.doc_id).unwrap();
            let expected = brute_force_bm25(&fixture.tokenized, params, &query_tokens, idx);
            prop_assert!((hit.score - expected).abs() < 1e-9,
                "score mismatch for {}: engine {} vs oracle {}", hit.doc_id, hit.score, expected);
        }
        // documents the engine did not return must score zero
        for (idx, (doc_id, _)) in fixture.tokenized.iter().enumerate() {
            if !hits.iter().any(|h| &h.doc_id == doc_id) {
                let expected = brute_force_bm25(&fixture.tokenized, params, &query_tokens, idx);
                prop_assert!(expected.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn increasing_n_never_removes_a_prefix_doc(
        doc_words in proptest::collection::vec(proptest::collection::vec(0usize..40, 1..20), 3..15),
        query_words in proptest::collection::vec(0usize..40, 1..4),
        n1 in 1usize..6,
        extra in 1usize..6,
    ) {
        let fixture = build_fixture(&doc_words);
        let params = Bm25Params::default();
        let query: String = query_words.iter().map(|w| VOCAB[w % VOCAB.len()]).collect::<Vec<_>>().join(" ");
        let small = fixture.index.bm25_search(&params, &query, n1);
        let large = fixture.index.bm25_search(&params, &query, n1 + extra);
        prop_assert!(small.len() <= large.len());
        for (a, b) in small.iter().zip(large.iter()) {
            prop_assert_eq!(&a.doc_id, &b.doc_id);
            prop_assert_eq!(a.score, b.score);
        }
    }

    #[test]
    fn rrf_output_satisfies_ordering(
        doc_words in proptest::collection::vec(proptest::collection::vec(0usize..40, 1..20), 3..15),
        q1 in proptest::collection::vec(0usize..40, 1..4),
        q2 in proptest::collection::vec(0usize..40, 1..4),
    ) {
        let fixture = build_fixture(&doc_words);
        let params = Bm25Params::default();
        let query1: String = q1.iter().map(|w| VOCAB[w % VOCAB.len()]).collect::<Vec<_>>().join(" ");
        let query2: String = q2.iter().map(|w| VOCAB[w % VOCAB.len()]).collect::<Vec<_>>().join(" ");
        let a = fixture.index.bm25_search(&params, &query1, 10);
        let b = fixture.index.bm25_search(&params, &query2, 10);
        let fused = rrf_fuse(&[a, b], 60).unwrap();
        assert_ordering_invariant(&fused);
    }
}

#[tokio::test]
async fn hierarchical_with_passthrough_equals_bm25_top_k() {
    let doc_words: Vec<Vec<usize>> = (0..20).map(|i| vec![i, i + 1, i % 7, (i * 3) % 11]).collect();
    let fixture = build_fixture(&doc_words);
    let retriever = Retriever::new(
        Arc::clone(&fixture.corpus),
        fixture.index.clone(),
        Bm25Params::default(),
        Arc::new(PassthroughScorer),
        RetrieverKind::default(),
    )
    .unwrap();
    for query in ["avelumab carcinoma", "trial survival patients", "peptide"] {
        for k in [1, 3, 5] {
            let hierarchical = retriever.hierarchical_retrieve(query, 10, k).await.unwrap();
            let mut direct = retriever.bm25_search(query, 10);
            direct.truncate(k);
            let direct: Vec<(String, usize)> =
                direct.into_iter().map(|h| (h.doc_id, h.rank)).collect();
            let hierarchical: Vec<(String, usize)> =
                hierarchical.into_iter().map(|h| (h.doc_id, h.rank)).collect();
            assert_eq!(hierarchical, direct, "query {query}, k {k}");
        }
    }
}

#[tokio::test]
async fn hierarchical_with_inverting_scorer_reverses_first_stage() {
    let doc_words: Vec<Vec<usize>> = (0..12).map(|i| vec![0, i, i + 2, (i * 5) % 9]).collect();
    let fixture = build_fixture(&doc_words);
    let retriever = Retriever::new(
        Arc::clone(&fixture.corpus),
        fixture.index.clone(),
        Bm25Params::default(),
        Arc::new(InvertingScorer),
        RetrieverKind::default(),
    )
    .unwrap();
    let query = "avelumab";
    let depth = 5;
    let k = 2;
    let first_stage = retriever.bm25_search(query, depth);
    let inverted = retriever.hierarchical_retrieve(query, depth, k).await.unwrap();
    // inverting the pool puts first-stage ranks depth, depth-1, ... on top
    let expected: Vec<String> = first_stage
        .iter()
        .rev()
        .take(k)
        .map(|h| h.doc_id.clone())
        .collect();
    let got: Vec<String> = inverted.iter().map(|h| h.doc_id.clone()).collect();
    assert_eq!(got, expected);
}

#[tokio::test]
async fn retriever_kinds_compose_as_documented() {
    use citedqa::retrieval::{JaccardScorer, RetrievalPurpose};

    let doc_words: Vec<Vec<usize>> = (0..15).map(|i| vec![0, i, i + 3, (i * 7) % 13]).collect();
    let fixture = build_fixture(&doc_words);
    let query = "avelumab trial";
    let k = 4;

    let make = |kind| {
        Retriever::new(
            Arc::clone(&fixture.corpus),
            fixture.index.clone(),
            Bm25Params::default(),
            Arc::new(JaccardScorer),
            kind,
        )
        .unwrap()
    };

    // lexical-only is exactly bm25
    let lexical = make(RetrieverKind::Lexical);
    let got = lexical.retrieve(query, k, RetrievalPurpose::PreGeneration).await.unwrap();
    assert_eq!(got, lexical.bm25_search(query, k));

    // semantic = scorer over a deep lexical pool, truncated
    let semantic = make(RetrieverKind::Semantic { pool_depth: 10 });
    let got = semantic.retrieve(query, k, RetrievalPurpose::PreGeneration).await.unwrap();
    let mut expected = semantic.hierarchical_retrieve(query, 10, 10).await.unwrap();
    expected.truncate(k);
    assert_eq!(got, expected);

    // rrf fuses the lexical order with the scorer order over the same pool
    let fusion = make(RetrieverKind::RrfFusion {
        pool_depth: 10,
        k_rrf: 60,
    });
    let got = fusion.retrieve(query, k, RetrievalPurpose::PreGeneration).await.unwrap();
    let lexical_ranking = fusion.bm25_search(query, 10);
    let semantic_ranking = fusion.hierarchical_retrieve(query, 10, 10).await.unwrap();
    let mut expected = rrf_fuse(&[lexical_ranking, semantic_ranking], 60).unwrap();
    expected.truncate(k);
    assert_eq!(got, expected);

    // only retrieve() counts; the direct search helpers above do not
    assert_eq!(lexical.counters().pre_generation(), 1);
    assert_eq!(fusion.counters().pre_generation(), 1);
    assert_eq!(fusion.counters().per_statement(), 0);
}

#[tokio::test]
async fn result_set_is_subset_of_first_stage_and_corpus_smaller_than_k_is_fine() {
    let fixture = build_fixture(&[vec![0, 1], vec![0, 2]]);
    let retriever = Retriever::new(
        Arc::clone(&fixture.corpus),
        fixture.index.clone(),
        Bm25Params::default(),
        Arc::new(PassthroughScorer),
        RetrieverKind::default(),
    )
    .unwrap();
    // corpus of 2 docs, k = 3: both docs come back
    let hits = retriever.hierarchical_retrieve("avelumab", 5, 3).await.unwrap();
    assert_eq!(hits.len(), 2);
    // k > depth is a precondition violation
    assert!(retriever.hierarchical_retrieve("avelumab", 2, 3).await.is_err());
    // zero-term query yields empty, not an error
    let empty = retriever.hierarchical_retrieve("!!!", 5, 3).await.unwrap();
    assert!(empty.is_empty());
}
