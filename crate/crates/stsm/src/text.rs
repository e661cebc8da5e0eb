//! Whitespace normalization, case-folding and the shared metric tokenizer.

/// Trims the ends of `t` and collapses every internal whitespace run to a
/// single space.
pub fn normalize_text(t: &str) -> String {
    let mut out = String::with_capacity(t.len());
    for word in t.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Normalizes and, unless `strict`, lowercases.
pub fn fold(t: &str, strict: bool) -> String {
    let n = normalize_text(t);
    if strict {
        n
    } else {
        n.to_lowercase()
    }
}

/// Substring containment under [`fold`].
pub fn contains_folded(haystack: &str, needle: &str, strict: bool) -> bool {
    fold(haystack, strict).contains(&fold(needle, strict))
}

/// Tokenizer used by every metric: normalize, case-fold, split on
/// whitespace, then peel punctuation off both ends of each word so that
/// `"curry,"` becomes `["curry", ","]`.
pub fn tokenize(t: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for word in fold(t, false).split(' ').filter(|w| !w.is_empty()) {
        let chars: Vec<char> = word.chars().collect();
        let mut start = 0;
        let mut end = chars.len();
        while start < end && chars[start].is_ascii_punctuation() {
            start += 1;
        }
        while end > start && chars[end - 1].is_ascii_punctuation() {
            end -= 1;
        }
        for c in &chars[..start] {
            tokens.push(c.to_string());
        }
        if start < end {
            tokens.push(chars[start..end].iter().collect());
        }
        for c in &chars[end..] {
            tokens.push(c.to_string());
        }
    }
    tokens
}
