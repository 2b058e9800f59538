//! Rule-based sentence segmentation.
//!
//! A boundary is a `.`, `!`, or `?` followed by whitespace and an uppercase
//! letter or digit, with two guards for periods: a known-abbreviation check
//! on the preceding word and a single-initial check. Decimals never split
//! because the character after the period is not whitespace. Citation marker
//! groups sitting between a terminator and the next sentence stay attached to
//! the sentence they follow.

/// Words whose trailing period does not end a sentence. Compared lowercase,
/// with any internal periods intact (the token is read back to the previous
/// whitespace).
const ABBREVIATIONS: &[&str] = &[
    "e.g", "i.e", "et", "al", "etc", "cf", "ca", "vs", "v", "dr", "mr", "mrs", "ms", "prof",
    "fig", "figs", "eq", "ref", "refs", "approx", "resp", "st", "jr", "sr", "dept", "inc",
];

/// One segmented statement with its byte span in the source text. The span
/// set partitions the input; `text` is the trimmed slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub index: usize,
    pub text: String,
    pub span: (usize, usize),
}

fn is_abbreviation(before_period: &str) -> bool {
    let word = before_period
        .rsplit(char::is_whitespace)
        .next()
        .unwrap_or("")
        .trim_start_matches(['(', '[', '"', '\'']);
    if word.is_empty() {
        return false;
    }
    // single-letter initials: "J. Smith"
    if word.chars().count() == 1 && word.chars().next().is_some_and(|c| c.is_uppercase()) {
        return true;
    }
    let lower = word.to_lowercase();
    ABBREVIATIONS.contains(&lower.as_str())
}

/// Consume whitespace-separated `[digits]` groups starting at `chars[i]`.
/// Returns the index just past the last group, or `i` if none were found.
fn skip_marker_groups(chars: &[(usize, char)], mut i: usize) -> usize {
    loop {
        let mut j = i;
        while j < chars.len() && chars[j].1.is_whitespace() {
            j += 1;
        }
        if j >= chars.len() || chars[j].1 != '[' {
            return i;
        }
        let mut k = j + 1;
        let mut digits = 0;
        while k < chars.len() && chars[k].1.is_ascii_digit() {
            digits += 1;
            k += 1;
        }
        if digits == 0 || k >= chars.len() || chars[k].1 != ']' {
            return i;
        }
        i = k + 1;
    }
}

/// Split text into statements. Never fails: text with no recognized boundary
/// becomes a single statement. Whitespace-only input yields no statements.
pub fn segment_statements(text: &str) -> Vec<Segment> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut boundaries: Vec<usize> = Vec::new(); // byte offsets where a new segment starts

    let mut i = 0;
    while i < chars.len() {
        let (byte_pos, c) = chars[i];
        if c != '.' && c != '!' && c != '?' {
            i += 1;
            continue;
        }
        if c == '.' && is_abbreviation(&text[..byte_pos]) {
            i += 1;
            continue;
        }
        // let trailing markers ride along with this sentence
        let after_markers = skip_marker_groups(&chars, i + 1);
        let mut j = after_markers;
        let mut saw_whitespace = false;
        while j < chars.len() && chars[j].1.is_whitespace() {
            saw_whitespace = true;
            j += 1;
        }
        if saw_whitespace && j < chars.len() {
            let next = chars[j].1;
            if next.is_uppercase() || next.is_ascii_digit() {
                boundaries.push(chars[j].0);
                i = j;
                continue;
            }
        }
        i += 1;
    }

    let mut segments = Vec::new();
    let mut start = 0;
    for &boundary in boundaries.iter().chain(std::iter::once(&text.len())) {
        let slice = &text[start..boundary];
        if !slice.trim().is_empty() {
            segments.push(Segment {
                index: segments.len(),
                text: slice.trim().to_string(),
                span: (start, boundary),
            });
        } else if let Some(last) = segments.last_mut() {
            // trailing whitespace-only remainder joins the previous span
            last.span.1 = boundary;
        }
        start = boundary;
    }
    segments
}
