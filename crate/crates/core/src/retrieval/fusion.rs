//! Reciprocal-rank fusion of multiple ranked lists.

use std::collections::HashMap;

use super::{rank_hits, RankedHit};
use crate::{Error, Result};

/// Fuse ranked lists by RRF score: for each document, sum 1 / (k_rrf + rank)
/// over every list it appears in. Output is ordered by descending fused score
/// with exact ties broken by ascending doc id. A document present in only one
/// list still contributes its single term.
pub fn rrf_fuse(rankings: &[Vec<RankedHit>], k_rrf: usize) -> Result<Vec<RankedHit>> {
    if rankings.is_empty() {
        return Err(Error::InvalidParam("rrf_fuse requires at least one ranking".into()));
    }
    if k_rrf == 0 {
        return Err(Error::InvalidParam("k_rrf must be positive".into()));
    }
    let mut scores: HashMap<&str, f64> = HashMap::new();
    for ranking in rankings {
        for hit in ranking {
            *scores.entry(hit.doc_id.as_str()).or_insert(0.0) +=
                1.0 / (k_rrf as f64 + hit.rank as f64);
        }
    }
    Ok(rank_hits(
        scores.into_iter().map(|(id, s)| (id.to_string(), s)).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ranking(ids: &[&str]) -> Vec<RankedHit> {
        ids.iter()
            .enumerate()
            .map(|(i, id)| RankedHit {
                doc_id: id.to_string(),
                score: 100.0 - i as f64,
                rank: i + 1,
            })
            .collect()
    }

    #[test]
    fn single_list_keeps_order() {
        let fused = rrf_fuse(&[ranking(&["x", "y", "z"])], 60).unwrap();
        let ids: Vec<&str> = fused.iter().map(|h| h.doc_id.as_str()).collect();
        assert_eq!(ids, vec!["x", "y", "z"]);
    }

    #[test]
    fn symmetric_lists_tie_break_by_doc_id() {
        let fused = rrf_fuse(&[ranking(&["d1", "d2"]), ranking(&["d2", "d1"])], 60).unwrap();
        let expected = 1.0 / 61.0 + 1.0 / 62.0;
        assert_eq!(fused.len(), 2);
        assert_eq!(fused[0].doc_id, "d1");
        assert_eq!(fused[1].doc_id, "d2");
        assert!((fused[0].score - expected).abs() < 1e-15);
        assert_eq!(fused[0].score, fused[1].score);
    }

    #[test]
    fn doc_in_one_list_still_fused() {
        let fused = rrf_fuse(&[ranking(&["a", "b"]), ranking(&["a"])], 60).unwrap();
        let b = fused.iter().find(|h| h.doc_id == "b").unwrap();
        assert!((b.score - 1.0 / 62.0).abs() < 1e-15);
        // a outranks b: it collected contributions from both lists
        assert_eq!(fused[0].doc_id, "a");
    }

    #[test]
    fn empty_input_rejected() {
        assert!(rrf_fuse(&[], 60).is_err());
        assert!(rrf_fuse(&[ranking(&["a"])], 0).is_err());
    }
}
