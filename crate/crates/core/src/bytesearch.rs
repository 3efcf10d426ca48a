//! Plain byte-substring search helpers shared by the crafter and scanner.

/// Offset of the first occurrence of `needle` in `haystack`.
pub(crate) fn find_first(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    if needle.is_empty() || needle.len() > haystack.len() {
        return None;
    }
    haystack.windows(needle.len()).position(|w| w == needle)
}

/// Offsets of every occurrence of `needle`, overlapping matches included.
pub(crate) fn find_all(haystack: &[u8], needle: &[u8]) -> Vec<usize> {
    let mut hits = Vec::new();
    if needle.is_empty() || needle.len() > haystack.len() {
        return hits;
    }
    for (i, window) in haystack.windows(needle.len()).enumerate() {
        if window == needle {
            hits.push(i);
        }
    }
    hits
}
