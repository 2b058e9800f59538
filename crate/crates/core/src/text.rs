//! Shared tokenization for indexing, scoring, and ROUGE-L.
//!
//! Corpus text is stored verbatim; all normalization happens here. The rule is
//! deliberately exact-match biased: lowercase, split on non-alphanumeric, no
//! stopword removal. A light plural stemmer can be switched on per index.

/// Lowercase and split on non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Tokenize with optional plural stemming.
pub fn tokenize_with(text: &str, stem: bool) -> Vec<String> {
    let mut tokens = tokenize(text);
    if stem {
        for t in &mut tokens {
            *t = stem_plural(t);
        }
    }
    tokens
}

/// Strip common English plural suffixes. Intentionally conservative: only
/// plural forms, no verb morphology, so that rare medical terms survive.
pub fn stem_plural(term: &str) -> String {
    let len = term.len();
    if len > 3 && term.ends_with("ies") {
        return format!("{}y", &term[..len - 3]);
    }
    if len > 4 && (term.ends_with("sses") || term.ends_with("shes") || term.ends_with("ches")) {
        return term[..len - 2].to_string();
    }
    if len > 3 && (term.ends_with("xes") || term.ends_with("zes")) {
        return term[..len - 2].to_string();
    }
    if len > 3 && term.ends_with('s') && !term.ends_with("ss") && !term.ends_with("us") {
        return term[..len - 1].to_string();
    }
    term.to_string()
}

/// Jaccard similarity between the token sets of two texts. Used as the
/// deterministic local stand-in for a remote semantic scorer.
pub fn jaccard(a: &str, b: &str) -> f64 {
    use std::collections::HashSet;
    let sa: HashSet<String> = tokenize(a).into_iter().collect();
    let sb: HashSet<String> = tokenize(b).into_iter().collect();
    if sa.is_empty() && sb.is_empty() {
        return 0.0;
    }
    let inter = sa.intersection(&sb).count();
    let union = sa.len() + sb.len() - inter;
    inter as f64 / union as f64
}
