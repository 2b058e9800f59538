//! Polar answer extraction.
//!
//! Precedence: (1) the first standalone token of the answer; (2) the last
//! labelled phrase "answer is ..." or "conclude(s/d) that ..."; (3) Unknown.
//! Deliberately deterministic and auditable rather than clever.

use super::PolarAnswer;

fn token_to_polar(token: &str, allow_maybe: bool) -> Option<PolarAnswer> {
    match token {
        "yes" => Some(PolarAnswer::Yes),
        "no" => Some(PolarAnswer::No),
        "maybe" if allow_maybe => Some(PolarAnswer::Maybe),
        _ => None,
    }
}

/// Scan the tokens following a labelled phrase for the first polar word.
/// A short window keeps filler like "A." or "definitely" from blocking the
/// match while not reaching into unrelated text.
fn scan_window(window: &str, allow_maybe: bool) -> Option<PolarAnswer> {
    window
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .take(4)
        .find_map(|t| token_to_polar(&t.to_lowercase(), allow_maybe))
}

/// Extract the discrete yes/no/maybe verdict from answer text.
pub fn extract_polar_answer(text: &str) -> PolarAnswer {
    // rule 1: first standalone token
    if let Some(first) = text
        .split(|c: char| !c.is_alphanumeric())
        .find(|t| !t.is_empty())
    {
        if let Some(polar) = token_to_polar(&first.to_lowercase(), true) {
            return polar;
        }
    }

    // rule 2: labelled phrases, last occurrence wins
    let lower = text.to_lowercase();
    let mut best: Option<(usize, PolarAnswer)> = None;
    for (phrase, allow_maybe) in [("answer is", true), ("conclude that", false), ("concludes that", false), ("concluded that", false)] {
        let mut search_from = 0;
        while let Some(rel) = lower[search_from..].find(phrase) {
            let at = search_from + rel;
            let after = &lower[at + phrase.len()..];
            let window_end = after
                .char_indices()
                .nth(48)
                .map(|(i, _)| i)
                .unwrap_or(after.len());
            if let Some(polar) = scan_window(&after[..window_end], allow_maybe) {
                if best.is_none_or(|(pos, _)| at >= pos) {
                    best = Some((at, polar));
                }
            }
            search_from = at + phrase.len();
        }
    }
    best.map(|(_, p)| p).unwrap_or(PolarAnswer::Unknown)
}
