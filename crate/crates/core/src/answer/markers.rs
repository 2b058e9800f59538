//! Inline citation marker grammar: one or more `[` integer `]` groups.
//!
//! Well-formed markers are removed from the clean text and recorded with
//! enough position information to reconstruct the original string exactly.
//! Indices outside 1..=shortlist_size are still removed but flagged out of
//! range and counted. Malformed bracket text is left in place and counted.

/// One extracted marker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Marker {
    /// The integer inside the brackets.
    pub index: usize,
    /// Byte position in the clean text where the marker stood.
    pub pos: usize,
    /// Original bracket text, e.g. `"[17]"`.
    pub raw: String,
    /// Whether `index` lies in 1..=shortlist_size.
    pub in_range: bool,
}

/// Result of scanning a text for inline markers.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedMarkers {
    /// Input with every well-formed marker removed.
    pub clean_text: String,
    /// Extracted markers in order of appearance.
    pub markers: Vec<Marker>,
    /// Well-formed markers outside the shortlist range.
    pub dropped_out_of_range: usize,
    /// Opening brackets that did not complete a `[integer]` group.
    pub malformed_brackets: usize,
}

impl ParsedMarkers {
    /// Marker indices usable for citation mapping, in order, in range only.
    pub fn citation_indices(&self) -> Vec<usize> {
        self.markers
            .iter()
            .filter(|m| m.in_range)
            .map(|m| m.index)
            .collect()
    }
}

/// Scan `text` for `[integer]` groups and strip them out.
pub fn parse_inline_citations(text: &str, shortlist_size: usize) -> ParsedMarkers {
    let mut clean = String::with_capacity(text.len());
    let mut markers = Vec::new();
    let mut dropped = 0;
    let mut malformed = 0;

    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'[' {
            let mut j = i + 1;
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            let has_digits = j > i + 1;
            if has_digits && j < bytes.len() && bytes[j] == b']' {
                let raw = &text[i..=j];
                // leading zeros parse fine; overflow can only come from
                // absurd digit runs, which we treat as malformed
                match text[i + 1..j].parse::<usize>() {
                    Ok(index) => {
                        let in_range = index >= 1 && index <= shortlist_size;
                        if !in_range {
                            dropped += 1;
                        }
                        markers.push(Marker {
                            index,
                            pos: clean.len(),
                            raw: raw.to_string(),
                            in_range,
                        });
                        i = j + 1;
                        continue;
                    }
                    Err(_) => {
                        malformed += 1;
                    }
                }
            } else {
                malformed += 1;
            }
        }
        let c = text[i..].chars().next().expect("in-bounds char");
        clean.push(c);
        i += c.len_utf8();
    }

    ParsedMarkers {
        clean_text: clean,
        markers,
        dropped_out_of_range: dropped,
        malformed_brackets: malformed,
    }
}

/// Re-insert extracted markers into a clean text, reproducing the original
/// string that [`parse_inline_citations`] consumed.
pub fn reinsert_markers(clean: &str, markers: &[Marker]) -> String {
    let mut out = String::with_capacity(clean.len() + markers.len() * 4);
    let mut last = 0;
    for m in markers {
        out.push_str(&clean[last..m.pos]);
        out.push_str(&m.raw);
        last = m.pos;
    }
    out.push_str(&clean[last..]);
    out
}
