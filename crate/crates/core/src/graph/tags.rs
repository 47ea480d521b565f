//! Fixed HTML tag vocabulary for DOM node attributes.
//!
//! Tag values are bucketed into this closed set so that downstream per-tag
//! statistics have a stable, data-independent layout. Anything outside the
//! set maps to [`UNKNOWN`].

/// Standard HTML element names, sorted for binary search.
pub const TAGS: &[&str] = &[
    "a", "abbr", "address", "area", "article", "aside", "audio", "b", "base", "bdi", "bdo",
    "blockquote", "body", "br", "button", "canvas", "caption", "cite", "code", "col", "colgroup",
    "data", "datalist", "dd", "del", "details", "dfn", "dialog", "div", "dl", "dt", "em", "embed",
    "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6",
    "head", "header", "hgroup", "hr", "html", "i", "iframe", "img", "input", "ins", "kbd", "label",
    "legend", "li", "link", "main", "map", "mark", "menu", "meta", "meter", "nav", "noscript",
    "object", "ol", "optgroup", "option", "output", "p", "param", "picture", "pre", "progress",
    "q", "rp", "rt", "ruby", "s", "samp", "script", "search", "section", "select", "slot", "small",
    "source", "span", "strong", "style", "sub", "summary", "sup", "table", "tbody", "td",
    "template", "textarea", "tfoot", "th", "thead", "time", "title", "tr", "track", "u", "ul",
    "var", "video", "wbr",
];

/// Bucket for anything not in [`TAGS`].
pub const UNKNOWN: &str = "unknown";

/// Number of buckets including the unknown bucket.
pub const BUCKETS: usize = TAGS.len() + 1;

/// Canonical vocabulary form of a tag: the lowercased standard name, or
/// [`UNKNOWN`] for anything else.
pub fn normalize(tag: &str) -> &'static str {
    let lower = tag.to_ascii_lowercase();
    match TAGS.binary_search(&lower.as_str()) {
        Ok(i) => TAGS[i],
        Err(_) => UNKNOWN,
    }
}

/// Bucket index of a tag; [`UNKNOWN`] occupies the last slot.
pub fn index(tag: &str) -> usize {
    let lower = tag.to_ascii_lowercase();
    TAGS.binary_search(&lower.as_str()).unwrap_or(TAGS.len())
}

/// Tag name of a bucket index (inverse of [`index`] over the vocabulary).
pub fn name(idx: usize) -> &'static str {
    TAGS.get(idx).copied().unwrap_or(UNKNOWN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_is_sorted_and_deduplicated() {
        let mut sorted = TAGS.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted, TAGS);
        assert!(TAGS.len() >= 108, "vocabulary holds the standard element set");
        assert!(!TAGS.contains(&UNKNOWN));
    }

    #[test]
    fn normalization_lowercases_and_buckets() {
        assert_eq!(normalize("DIV"), "div");
        assert_eq!(normalize("iframe"), "iframe");
        assert_eq!(normalize("custom-element"), UNKNOWN);
        assert_eq!(normalize(""), UNKNOWN);
    }

    #[test]
    fn indices_cover_all_buckets() {
        assert_eq!(index("a"), 0);
        assert_eq!(index("blink"), TAGS.len());
        assert!(index("wbr") < TAGS.len());
        assert_eq!(BUCKETS, TAGS.len() + 1);
    }
}
