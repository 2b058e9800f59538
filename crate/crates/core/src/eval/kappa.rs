//! Cohen's kappa: chance-corrected agreement between two label sequences.

use std::collections::HashMap;
use std::hash::Hash;

use crate::{Error, Result};

/// Compute Cohen's kappa between two equal-length label sequences:
/// kappa = (p_o - p_e) / (1 - p_e) with marginal-product expected agreement.
///
/// Degenerate case: when p_e = 1 both raters used a single identical label,
/// so observed agreement is perfect and kappa is defined as 1.0.
pub fn cohens_kappa<T: Eq + Hash>(labels_a: &[T], labels_b: &[T]) -> Result<f64> {
    if labels_a.len() != labels_b.len() {
        return Err(Error::LengthMismatch {
            left: labels_a.len(),
            right: labels_b.len(),
        });
    }
    if labels_a.is_empty() {
        return Err(Error::InvalidParam("kappa requires at least one label pair".into()));
    }
    let n = labels_a.len() as f64;

    let mut agree = 0usize;
    let mut marg_a: HashMap<&T, usize> = HashMap::new();
    let mut marg_b: HashMap<&T, usize> = HashMap::new();
    for (a, b) in labels_a.iter().zip(labels_b) {
        if a == b {
            agree += 1;
        }
        *marg_a.entry(a).or_insert(0) += 1;
        *marg_b.entry(b).or_insert(0) += 1;
    }
    let p_o = agree as f64 / n;
    let p_e: f64 = marg_a
        .iter()
        .map(|(label, &ca)| {
            let cb = marg_b.get(label).copied().unwrap_or(0);
            (ca as f64 / n) * (cb as f64 / n)
        })
        .sum();

    if (1.0 - p_e).abs() < f64::EPSILON {
        return Ok(if (p_o - 1.0).abs() < f64::EPSILON { 1.0 } else { 0.0 });
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_agreement_with_two_labels() {
        assert_eq!(cohens_kappa(&[1, 0, 1, 0], &[1, 0, 1, 0]).unwrap(), 1.0);
    }

    #[test]
    fn hand_computed_half() {
        // p_o = 3/4, p_e = 0.5*0.25 + 0.5*0.75 = 0.5 -> kappa = 0.5 exactly
        assert_eq!(cohens_kappa(&[1, 1, 0, 0], &[1, 0, 0, 0]).unwrap(), 0.5);
    }

    #[test]
    fn degenerate_constant_sequences() {
        assert_eq!(cohens_kappa(&["x"; 5], &["x"; 5]).unwrap(), 1.0);
        // constant but different labels: p_e = 0, p_o = 0 -> kappa 0
        assert_eq!(cohens_kappa(&["x"; 5], &["y"; 5]).unwrap(), 0.0);
    }

    #[test]
    fn systematic_disagreement_is_negative() {
        let k = cohens_kappa(&[1, 0, 1, 0], &[0, 1, 0, 1]).unwrap();
        assert_eq!(k, -1.0);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(matches!(
            cohens_kappa(&[1, 2], &[1]),
            Err(Error::LengthMismatch { left: 2, right: 1 })
        ));
        assert!(cohens_kappa::<u8>(&[], &[]).is_err());
    }

    proptest! {
        #[test]
        fn kappa_stays_in_range(pairs in proptest::collection::vec((0u8..4, 0u8..4), 1..200)) {
            let a: Vec<u8> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<u8> = pairs.iter().map(|p| p.1).collect();
            let k = cohens_kappa(&a, &b).unwrap();
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&k), "kappa out of range: {k}");
        }
    }
}
