//! Tokenization shared by the mock embedder, the enrichment lexicon,
//! canonicalization and prompt matching.

use alloc::string::String;
use alloc::vec::Vec;

/// A lowercase word token and its byte range in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

const STOP_WORDS: &[&str] = &[
    "a", "an", "the", "of", "on", "in", "at", "to", "and", "or", "is", "are", "was", "were", "be",
    "been", "with", "by", "for", "from", "its", "it", "this", "that", "these", "those", "any",
    "some", "as", "into", "there", "their", "them", "they", "do", "does", "did",
];

pub fn is_stop_word(token: &str) -> bool {
    STOP_WORDS.contains(&token)
}

/// Splits on anything that is not alphanumeric. Offsets are byte offsets
/// into `text` and always fall on char boundaries.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in text.char_indices() {
        if ch.is_alphanumeric() {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            out.push(Token { text: text[s..i].to_lowercase(), start: s, end: i });
        }
    }
    if let Some(s) = start {
        out.push(Token { text: text[s..].to_lowercase(), start: s, end: text.len() });
    }
    out
}

/// Lowercased tokens with stop words removed.
pub fn content_tokens(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.text).filter(|t| !is_stop_word(t)).collect()
}

/// Light suffix stripping. Only needs to conflate the inflections that show
/// up in traffic narratives ("cyclists", "crossing", "yielded").
pub fn stem(token: &str) -> String {
    let t = token;
    let n = t.len();
    if n > 4 && t.ends_with("ies") {
        let mut s = String::from(&t[..n - 3]);
        s.push('y');
        return s;
    }
    if n > 5 && t.ends_with("ing") {
        return undouble(&t[..n - 3]);
    }
    if n > 4 && t.ends_with("ed") && !t.ends_with("eed") {
        return undouble(&t[..n - 2]);
    }
    if n > 4 && (t.ends_with("sses") || t.ends_with("shes") || t.ends_with("ches") || t.ends_with("xes")) {
        return String::from(&t[..n - 2]);
    }
    if n > 3 && t.ends_with('s') && !t.ends_with("ss") && !t.ends_with("us") {
        return String::from(&t[..n - 1]);
    }
    String::from(t)
}

fn undouble(s: &str) -> String {
    let b = s.as_bytes();
    if b.len() >= 2 && b[b.len() - 1] == b[b.len() - 2] && !matches!(b[b.len() - 1], b'l' | b's' | b'z') {
        String::from(&s[..s.len() - 1])
    } else {
        String::from(s)
    }
}

/// Stemmed content tokens.
pub fn stems(text: &str) -> Vec<String> {
    content_tokens(text).iter().map(|t| stem(t)).collect()
}

/// Token Jaccard similarity over lowercased, stop-word-stripped tokens.
/// Two phrases with no content tokens are similar only when their
/// lowercased surfaces are identical.
pub fn jaccard(a: &str, b: &str) -> f64 {
    let mut sa = content_tokens(a);
    let mut sb = content_tokens(b);
    sa.sort();
    sa.dedup();
    sb.sort();
    sb.dedup();
    if sa.is_empty() && sb.is_empty() {
        return if a.trim().to_lowercase() == b.trim().to_lowercase() { 1.0 } else { 0.0 };
    }
    let inter = sa.iter().filter(|t| sb.binary_search(t).is_ok()).count();
    let union = sa.len() + sb.len() - inter;
    inter as f64 / union as f64
}

/// Normalizes a taxonomy token: trimmed, lowercase, runs of spaces and
/// hyphens collapsed to `_`.
pub fn normalize_class_token(raw: &str) -> String {
    join_words(raw, '_')
}

/// Normalizes a relation label: lowercase words joined by `-`.
pub fn normalize_relation_token(raw: &str) -> String {
    join_words(raw, '-')
}

fn join_words(raw: &str, sep: char) -> String {
    let mut out = String::new();
    for word in raw.split(|c: char| c.is_whitespace() || c == '_' || c == '-').filter(|w| !w.is_empty()) {
        if !out.is_empty() {
            out.push(sep);
        }
        out.push_str(&word.to_lowercase());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_offsets_slice_back() {
        let s = "A dark SUV, man-on bike!";
        for t in tokenize(s) {
            assert_eq!(s[t.start..t.end].to_lowercase(), t.text);
        }
        let words: Vec<_> = tokenize(s).into_iter().map(|t| t.text).collect();
        assert_eq!(words, ["a", "dark", "suv", "man", "on", "bike"]);
    }

    #[test]
    fn stemming_conflates_inflections() {
        assert_eq!(stem("cyclists"), "cyclist");
        assert_eq!(stem("crossing"), "cross");
        assert_eq!(stem("crosses"), "cross");
        assert_eq!(stem("stopped"), "stop");
        assert_eq!(stem("vehicles"), "vehicle");
        assert_eq!(stem("bus"), "bus");
        assert_eq!(stem("bicycles"), "bicycle");
        assert_eq!(stem("crosswalk"), "crosswalk");
    }

    #[test]
    fn jaccard_cases() {
        assert_eq!(jaccard("dark SUV", "the dark SUV"), 1.0);
        assert_eq!(jaccard("a red car", "the vehicle"), 0.0);
        assert!((jaccard("red car", "blue car") - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(jaccard("the", "The"), 1.0);
        assert_eq!(jaccard("the", "a"), 0.0);
    }

    #[test]
    fn token_normalization() {
        assert_eq!(normalize_class_token(" Traffic Light "), "traffic_light");
        assert_eq!(normalize_class_token("stationary-state"), "stationary_state");
        assert_eq!(normalize_relation_token("Yields to"), "yields-to");
        assert_eq!(normalize_relation_token("conflicts_with"), "conflicts-with");
    }
}
