//! Registrable-domain computation over a bundled static suffix table.
//!
//! Third-party checks need the registrable domain (the public suffix plus one
//! label) for both the request host and the frame origin. To keep results
//! reproducible the suffix table is a fixed snapshot versioned with the crate
//! rather than a live download. Only exact multi-label suffixes are listed;
//! any unlisted top-level domain falls back to the default rule (the last
//! label is the public suffix). Wildcard and exception suffix rules are not
//! supported.

/// Multi-label public suffixes recognized in addition to plain TLDs.
/// Sorted, lowercase, no leading/trailing dots.
const MULTI_LABEL_SUFFIXES: &[&str] = &[
    "ac.jp",
    "ac.uk",
    "amazonaws.com",
    "appspot.com",
    "azurewebsites.net",
    "blogspot.com",
    "cloudfront.net",
    "co.il",
    "co.in",
    "co.jp",
    "co.kr",
    "co.nz",
    "co.uk",
    "co.za",
    "com.ar",
    "com.au",
    "com.br",
    "com.cn",
    "com.hk",
    "com.mx",
    "com.sg",
    "com.tr",
    "com.tw",
    "com.ua",
    "edu.au",
    "fastly.net",
    "firebaseapp.com",
    "github.io",
    "gitlab.io",
    "gov.uk",
    "herokuapp.com",
    "ltd.uk",
    "me.uk",
    "ne.jp",
    "net.au",
    "net.uk",
    "netlify.app",
    "or.jp",
    "org.au",
    "org.uk",
    "pages.dev",
    "plc.uk",
    "s3.amazonaws.com",
    "web.app",
];

fn is_ip_literal(host: &str) -> bool {
    if host.contains(':') {
        return true; // IPv6 literals keep their colons after URL parsing
    }
    let mut labels = host.split('.');
    labels.all(|l| !l.is_empty() && l.bytes().all(|b| b.is_ascii_digit()))
}

/// Length in labels of the public suffix of `labels`, per the bundled table.
fn suffix_label_count(labels: &[&str]) -> usize {
    // Longest listed suffix wins; otherwise the default single-label rule.
    let max_len = 3.min(labels.len());
    for take in (2..=max_len).rev() {
        let candidate = labels[labels.len() - take..].join(".");
        if MULTI_LABEL_SUFFIXES.binary_search(&candidate.as_str()).is_ok() {
            return take;
        }
    }
    1
}

/// The registrable domain of `host`: its public suffix plus one label.
///
/// Hosts that are themselves a public suffix (or a single label, or an IP
/// literal) are returned unchanged so same-site comparison stays total.
pub fn registrable_domain(host: &str) -> String {
    let host = host.trim_end_matches('.').to_ascii_lowercase();
    if host.is_empty() || is_ip_literal(&host) {
        return host;
    }
    let labels: Vec<&str> = host.split('.').collect();
    if labels.len() < 2 {
        return host;
    }
    let suffix = suffix_label_count(&labels);
    let keep = (suffix + 1).min(labels.len());
    labels[labels.len() - keep..].join(".")
}

/// True when both hosts share a registrable domain (i.e. are first-party to
/// each other).
pub fn same_site(a: &str, b: &str) -> bool {
    registrable_domain(a) == registrable_domain(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_is_sorted_for_binary_search() {
        let mut sorted = MULTI_LABEL_SUFFIXES.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted, MULTI_LABEL_SUFFIXES);
    }

    #[test]
    fn default_rule_takes_last_two_labels() {
        assert_eq!(registrable_domain("mealty.ru"), "mealty.ru");
        assert_eq!(registrable_domain("www.mealty.ru"), "mealty.ru");
        assert_eq!(registrable_domain("a.b.c.example.com"), "example.com");
        assert_eq!(registrable_domain("tinyzonetv.to"), "tinyzonetv.to");
    }

    #[test]
    fn multi_label_suffixes_keep_one_extra_label() {
        assert_eq!(registrable_domain("shop.example.co.uk"), "example.co.uk");
        assert_eq!(registrable_domain("example.co.uk"), "example.co.uk");
        assert_eq!(registrable_domain("user.github.io"), "user.github.io");
        assert_eq!(registrable_domain("deep.user.github.io"), "user.github.io");
        assert_eq!(registrable_domain("bucket.s3.amazonaws.com"), "bucket.s3.amazonaws.com");
    }

    #[test]
    fn degenerate_hosts_are_returned_whole() {
        assert_eq!(registrable_domain("localhost"), "localhost");
        assert_eq!(registrable_domain("co.uk"), "co.uk");
        assert_eq!(registrable_domain("192.168.0.1"), "192.168.0.1");
        assert_eq!(registrable_domain("[::1]"), "[::1]");
    }

    #[test]
    fn case_and_trailing_dot_are_normalized() {
        assert_eq!(registrable_domain("WWW.Example.COM."), "example.com");
    }

    #[test]
    fn same_site_matches_subdomains() {
        assert!(same_site("mealty.ru", "www.mealty.ru"));
        assert!(same_site("a.example.co.uk", "b.example.co.uk"));
        assert!(!same_site("sfzover.com", "tinyzonetv.to"));
        assert!(!same_site("one.github.io", "two.github.io"));
    }
}
