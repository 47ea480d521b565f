//! A documented subset of ABP filter-list syntax.
//!
//! Supported grammar:
//!
//! * block rules (`||host^`, `/path/ad.js`, …) and exception rules (`@@` prefix);
//! * the hostname anchor `||`, the separator class `^`, the wildcard `*`, and
//!   a trailing end-of-address anchor `|`;
//! * options after `$`: resource types (`script`, `image`, `subdocument`,
//!   `stylesheet`, `xhr`/`xmlhttprequest`, `other`), the party constraints
//!   `third-party` / `~third-party`, and `domain=` lists with `~` exclusions.
//!
//! Everything else — cosmetic rules (`##`, `#@#`, `#?#`), regular-expression
//! rules (`/…/`), a leading `|` start anchor, and unrecognized options — is an
//! explicit [`UnsupportedSyntax`] error so callers can count exactly what was
//! skipped. Matching is case-insensitive over the serialized URL.

pub mod psl;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

/// Resource classes a request can be matched against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceType {
    Script,
    Image,
    Subdocument,
    Stylesheet,
    Xhr,
    Other,
}

impl ResourceType {
    pub const ALL: [ResourceType; 6] = [
        ResourceType::Script,
        ResourceType::Image,
        ResourceType::Subdocument,
        ResourceType::Stylesheet,
        ResourceType::Xhr,
        ResourceType::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ResourceType::Script => "script",
            ResourceType::Image => "image",
            ResourceType::Subdocument => "subdocument",
            ResourceType::Stylesheet => "stylesheet",
            ResourceType::Xhr => "xhr",
            ResourceType::Other => "other",
        }
    }

    pub fn from_str_opt(s: &str) -> Option<Self> {
        Some(match s {
            "script" => ResourceType::Script,
            "image" => ResourceType::Image,
            "subdocument" => ResourceType::Subdocument,
            "stylesheet" => ResourceType::Stylesheet,
            "xhr" | "xmlhttprequest" => ResourceType::Xhr,
            "other" => ResourceType::Other,
            _ => return None,
        })
    }
}

impl fmt::Display for ResourceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Whether a rule blocks requests or exempts them from blocking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    Block,
    Exception,
}

/// Where the pattern is anchored in the URL.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    /// `||`: the pattern must start at a hostname-label boundary.
    Hostname,
    /// The pattern may match anywhere in the URL.
    None,
}

/// One element of a tokenized rule pattern.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternToken {
    /// A literal run, lowercased at parse time.
    Literal(String),
    /// `*`: any span of characters, including the empty span.
    Wildcard,
    /// `^`: one separator character, or the end of the URL.
    Separator,
    /// A trailing `|`: the pattern must end exactly at the end of the URL.
    EndAnchor,
}

/// First-party / third-party constraint from `third-party` options.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartyConstraint {
    Any,
    /// `~third-party`: only requests whose registrable domain matches the frame's.
    FirstPartyOnly,
    /// `third-party`: only requests crossing registrable domains.
    ThirdPartyOnly,
}

/// A parsed network filter rule. `raw` preserves the exact input line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterRule {
    pub raw: String,
    pub kind: RuleKind,
    pub anchor: Anchor,
    pub pattern: Vec<PatternToken>,
    /// Empty set means the rule applies to every resource type.
    pub resource_types: BTreeSet<ResourceType>,
    pub party: PartyConstraint,
    /// `domain=` entries without `~`. Empty means no positive restriction.
    pub include_domains: Vec<String>,
    /// `domain=` entries with `~`.
    pub exclude_domains: Vec<String>,
}

/// Rejection reasons for lines outside the supported grammar.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UnsupportedSyntax {
    #[error("cosmetic rules are not supported")]
    CosmeticRule,
    #[error("regular-expression rules are not supported")]
    RegexRule,
    #[error("unknown rule option `{0}`")]
    UnknownOption(String),
    #[error("negated resource type `~{0}` is not supported")]
    NegatedType(String),
    #[error("start-of-address anchor `|` is not supported")]
    StartAnchor,
    #[error("`|` is only valid as the last character of a pattern")]
    MisplacedEndAnchor,
    #[error("rule pattern is empty")]
    EmptyPattern,
    #[error("`domain=` option has no usable entries")]
    EmptyDomainList,
    #[error("comment or blank line is not a rule")]
    NotARule,
}

/// Parses one non-comment, non-blank filter-list line.
pub fn parse_rule(line: &str) -> Result<FilterRule, UnsupportedSyntax> {
    let raw = line.to_string();
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.starts_with('!') || (trimmed.starts_with('[') && trimmed.ends_with(']')) {
        return Err(UnsupportedSyntax::NotARule);
    }
    if trimmed.contains("##") || trimmed.contains("#@#") || trimmed.contains("#?#") {
        return Err(UnsupportedSyntax::CosmeticRule);
    }

    let (kind, rest) = match trimmed.strip_prefix("@@") {
        Some(rest) => (RuleKind::Exception, rest),
        None => (RuleKind::Block, trimmed),
    };
    if rest.len() > 1 && rest.starts_with('/') && rest.ends_with('/') {
        return Err(UnsupportedSyntax::RegexRule);
    }

    // Options come after the last `$`. A `$` inside a genuine pattern would
    // surface as an unknown option, which is an acceptable rejection for this
    // subset.
    let (pattern_text, options_text) = match rest.rfind('$') {
        Some(idx) => (&rest[..idx], Some(&rest[idx + 1..])),
        None => (rest, None),
    };

    let mut resource_types = BTreeSet::new();
    let mut party = PartyConstraint::Any;
    let mut include_domains = Vec::new();
    let mut exclude_domains = Vec::new();
    if let Some(options) = options_text {
        for opt in options.split(',') {
            if let Some(list) = opt.strip_prefix("domain=") {
                for entry in list.split('|') {
                    if entry.is_empty() {
                        continue;
                    }
                    match entry.strip_prefix('~') {
                        Some(d) if !d.is_empty() => exclude_domains.push(d.to_ascii_lowercase()),
                        Some(_) => return Err(UnsupportedSyntax::EmptyDomainList),
                        None => include_domains.push(entry.to_ascii_lowercase()),
                    }
                }
                if include_domains.is_empty() && exclude_domains.is_empty() {
                    return Err(UnsupportedSyntax::EmptyDomainList);
                }
            } else if opt == "third-party" {
                party = PartyConstraint::ThirdPartyOnly;
            } else if opt == "~third-party" {
                party = PartyConstraint::FirstPartyOnly;
            } else if let Some(ty) = ResourceType::from_str_opt(opt) {
                resource_types.insert(ty);
            } else if let Some(neg) = opt.strip_prefix('~') {
                if ResourceType::from_str_opt(neg).is_some() {
                    return Err(UnsupportedSyntax::NegatedType(neg.to_string()));
                }
                return Err(UnsupportedSyntax::UnknownOption(opt.to_string()));
            } else {
                return Err(UnsupportedSyntax::UnknownOption(opt.to_string()));
            }
        }
    }

    let (anchor, body) = match pattern_text.strip_prefix("||") {
        Some(body) => (Anchor::Hostname, body),
        None if pattern_text.starts_with('|') => return Err(UnsupportedSyntax::StartAnchor),
        None => (Anchor::None, pattern_text),
    };

    let pattern = tokenize(body)?;
    if pattern.is_empty() {
        return Err(UnsupportedSyntax::EmptyPattern);
    }

    Ok(FilterRule {
        raw,
        kind,
        anchor,
        pattern,
        resource_types,
        party,
        include_domains,
        exclude_domains,
    })
}

fn tokenize(body: &str) -> Result<Vec<PatternToken>, UnsupportedSyntax> {
    let mut tokens = Vec::new();
    let mut literal = String::new();
    let chars: Vec<char> = body.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        let special = match c {
            '*' => Some(PatternToken::Wildcard),
            '^' => Some(PatternToken::Separator),
            '|' if i == chars.len() - 1 => Some(PatternToken::EndAnchor),
            '|' => return Err(UnsupportedSyntax::MisplacedEndAnchor),
            _ => None,
        };
        match special {
            Some(tok) => {
                if !literal.is_empty() {
                    tokens.push(PatternToken::Literal(std::mem::take(&mut literal)));
                }
                tokens.push(tok);
            }
            None => literal.extend(c.to_lowercase()),
        }
    }
    if !literal.is_empty() {
        tokens.push(PatternToken::Literal(literal));
    }
    Ok(tokens)
}

/// Errors constructing a [`RequestContext`].
#[derive(Debug, Error)]
pub enum RequestError {
    #[error("request URL does not parse: {0}")]
    BadUrl(#[from] url::ParseError),
    #[error("frame origin must be a non-empty hostname")]
    EmptyFrameOrigin,
}

/// One network request to evaluate against a rule list.
#[derive(Debug, Clone)]
pub struct RequestContext {
    url: Url,
    resource_type: ResourceType,
    frame_origin: String,
    /// Serialized URL lowercased once for matching.
    url_lower: String,
    /// Byte offset of the host within `url_lower`, when the URL has one.
    host_span: Option<(usize, usize)>,
    third_party: bool,
}

impl RequestContext {
    pub fn new(url: &str, resource_type: ResourceType, frame_origin: &str) -> Result<Self, RequestError> {
        let url = Url::parse(url)?;
        let frame_origin = frame_origin.trim().to_ascii_lowercase();
        if frame_origin.is_empty() {
            return Err(RequestError::EmptyFrameOrigin);
        }
        let url_lower = url.as_str().to_ascii_lowercase();
        let host_span = url.host_str().map(|h| {
            let host = h.to_ascii_lowercase();
            // The host serializes after `scheme://` and optional `user[:pass]@`.
            let after_scheme = url.scheme().len() + 3;
            let authority_end = url_lower[after_scheme..]
                .find(['/', '?', '#'])
                .map_or(url_lower.len(), |i| after_scheme + i);
            let host_start = url_lower[after_scheme..authority_end]
                .rfind('@')
                .map_or(after_scheme, |i| after_scheme + i + 1);
            (host_start, host_start + host.len())
        });
        let third_party = match url.host_str() {
            Some(h) => !psl::same_site(h, &frame_origin),
            None => true,
        };
        Ok(RequestContext {
            url,
            resource_type,
            frame_origin,
            url_lower,
            host_span,
            third_party,
        })
    }

    pub fn url(&self) -> &Url {
        &self.url
    }

    pub fn resource_type(&self) -> ResourceType {
        self.resource_type
    }

    pub fn frame_origin(&self) -> &str {
        &self.frame_origin
    }

    /// True when the request's registrable domain differs from the frame's.
    pub fn is_third_party(&self) -> bool {
        self.third_party
    }
}

/// True when `rule` matches the request: pattern, resource type, party, and
/// `domain=` constraints all admit it.
pub fn match_rule(rule: &FilterRule, ctx: &RequestContext) -> bool {
    if !rule.resource_types.is_empty() && !rule.resource_types.contains(&ctx.resource_type) {
        return false;
    }
    match rule.party {
        PartyConstraint::Any => {}
        PartyConstraint::FirstPartyOnly if ctx.third_party => return false,
        PartyConstraint::ThirdPartyOnly if !ctx.third_party => return false,
        _ => {}
    }
    if !domain_option_admits(rule, &ctx.frame_origin) {
        return false;
    }
    pattern_matches(rule, ctx)
}

fn domain_option_admits(rule: &FilterRule, frame: &str) -> bool {
    fn within(frame: &str, domain: &str) -> bool {
        frame == domain || (frame.ends_with(domain) && frame.as_bytes()[frame.len() - domain.len() - 1] == b'.')
    }
    if rule.exclude_domains.iter().any(|d| within(frame, d)) {
        return false;
    }
    rule.include_domains.is_empty() || rule.include_domains.iter().any(|d| within(frame, d))
}

fn pattern_matches(rule: &FilterRule, ctx: &RequestContext) -> bool {
    let url = ctx.url_lower.as_bytes();
    match rule.anchor {
        Anchor::Hostname => {
            let Some((start, end)) = ctx.host_span else {
                return false;
            };
            // Candidate starts: beginning of the host and after each dot in it.
            if match_tokens(&rule.pattern, url, start) {
                return true;
            }
            (start..end).any(|i| url[i] == b'.' && match_tokens(&rule.pattern, url, i + 1))
        }
        Anchor::None => (0..=url.len()).any(|i| match_tokens(&rule.pattern, url, i)),
    }
}

fn is_separator(b: u8) -> bool {
    b.is_ascii() && !b.is_ascii_alphanumeric() && !matches!(b, b'_' | b'-' | b'.' | b'%')
}

fn match_tokens(tokens: &[PatternToken], url: &[u8], pos: usize) -> bool {
    let Some((first, rest)) = tokens.split_first() else {
        return true;
    };
    match first {
        PatternToken::Literal(lit) => {
            let lit = lit.as_bytes();
            url[pos..].starts_with(lit) && match_tokens(rest, url, pos + lit.len())
        }
        PatternToken::Wildcard => (pos..=url.len()).any(|next| match_tokens(rest, url, next)),
        PatternToken::Separator => {
            if pos == url.len() {
                // End of the address counts as a separator and consumes nothing.
                match_tokens(rest, url, pos)
            } else {
                is_separator(url[pos]) && match_tokens(rest, url, pos + 1)
            }
        }
        PatternToken::EndAnchor => pos == url.len() && match_tokens(rest, url, pos),
    }
}

/// Outcome class of a block/allow decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Blocked,
    Allowed,
    ExceptionAllowed,
}

/// The decision for one request, with the index of the deciding rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockDecision {
    pub outcome: Outcome,
    /// Index into the rule list; `None` exactly when nothing matched.
    pub matched_rule: Option<usize>,
}

impl BlockDecision {
    /// True for outcomes in the "blocked" class (exceptions count as allowed).
    pub fn is_blocked(&self) -> bool {
        self.outcome == Outcome::Blocked
    }
}

/// Evaluates a rule list against one request. Any matching exception rule
/// overrides every block rule; otherwise the first matching block rule wins.
pub fn decide(rules: &[FilterRule], ctx: &RequestContext) -> BlockDecision {
    let mut first_block = None;
    for (i, rule) in rules.iter().enumerate() {
        match rule.kind {
            RuleKind::Exception => {
                if match_rule(rule, ctx) {
                    return BlockDecision {
                        outcome: Outcome::ExceptionAllowed,
                        matched_rule: Some(i),
                    };
                }
            }
            RuleKind::Block => {
                if first_block.is_none() && match_rule(rule, ctx) {
                    first_block = Some(i);
                }
            }
        }
    }
    match first_block {
        Some(i) => BlockDecision {
            outcome: Outcome::Blocked,
            matched_rule: Some(i),
        },
        None => BlockDecision {
            outcome: Outcome::Allowed,
            matched_rule: None,
        },
    }
}

/// Indices of requests whose blocked/not-blocked class differs between the
/// two rule lists.
pub fn blocking_delta(
    pre_rules: &[FilterRule],
    post_rules: &[FilterRule],
    requests: &[RequestContext],
) -> BTreeSet<usize> {
    requests
        .iter()
        .enumerate()
        .filter(|(_, ctx)| decide(pre_rules, ctx).is_blocked() != decide(post_rules, ctx).is_blocked())
        .map(|(i, _)| i)
        .collect()
}

/// A skipped line from a filter-list file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedLine {
    /// 1-based line number.
    pub line: usize,
    pub reason: String,
}

/// Result of parsing a whole list file: the usable rules plus coverage stats.
#[derive(Debug, Clone, Default)]
pub struct FilterList {
    pub rules: Vec<FilterRule>,
    pub comment_lines: usize,
    pub blank_lines: usize,
    pub unsupported: Vec<SkippedLine>,
}

impl FilterList {
    /// Parses newline-delimited list text, skipping comments and blanks and
    /// recording every unsupported line with its reason.
    pub fn parse(text: &str) -> FilterList {
        let mut list = FilterList::default();
        for (i, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() {
                list.blank_lines += 1;
                continue;
            }
            if trimmed.starts_with('!') || (trimmed.starts_with('[') && trimmed.ends_with(']')) {
                list.comment_lines += 1;
                continue;
            }
            match parse_rule(line) {
                Ok(rule) => list.rules.push(rule),
                Err(reason) => list.unsupported.push(SkippedLine {
                    line: i + 1,
                    reason: reason.to_string(),
                }),
            }
        }
        list
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(url: &str, ty: ResourceType, frame: &str) -> RequestContext {
        RequestContext::new(url, ty, frame).unwrap()
    }

    #[test]
    fn parses_block_rule_with_anchor_and_separator() {
        let rule = parse_rule("||sfzover.com^").unwrap();
        assert_eq!(rule.raw, "||sfzover.com^");
        assert_eq!(rule.kind, RuleKind::Block);
        assert_eq!(rule.anchor, Anchor::Hostname);
        assert_eq!(
            rule.pattern,
            vec![PatternToken::Literal("sfzover.com".into()), PatternToken::Separator]
        );
        assert!(rule.resource_types.is_empty());
        assert_eq!(rule.party, PartyConstraint::Any);
    }

    #[test]
    fn parses_exception_with_party_option() {
        let rule = parse_rule("@@||mealty.ru/js/ga_events.js$~third-party").unwrap();
        assert_eq!(rule.kind, RuleKind::Exception);
        assert_eq!(rule.anchor, Anchor::Hostname);
        assert_eq!(rule.party, PartyConstraint::FirstPartyOnly);
        assert_eq!(rule.raw, "@@||mealty.ru/js/ga_events.js$~third-party");
    }

    #[test]
    fn parses_type_and_domain_options() {
        let rule = parse_rule("||ads.example.com^$script,image,domain=a.com|~b.a.com").unwrap();
        assert_eq!(
            rule.resource_types.iter().copied().collect::<Vec<_>>(),
            vec![ResourceType::Script, ResourceType::Image]
        );
        assert_eq!(rule.include_domains, vec!["a.com"]);
        assert_eq!(rule.exclude_domains, vec!["b.a.com"]);
    }

    #[test]
    fn xmlhttprequest_is_an_alias_for_xhr() {
        let rule = parse_rule("||t.example^$xmlhttprequest").unwrap();
        assert!(rule.resource_types.contains(&ResourceType::Xhr));
    }

    #[test]
    fn rejects_unsupported_lines() {
        assert_eq!(parse_rule("example.com##.ad"), Err(UnsupportedSyntax::CosmeticRule));
        assert_eq!(parse_rule("example.com#@#.ad"), Err(UnsupportedSyntax::CosmeticRule));
        assert_eq!(parse_rule("/banner[0-9]+/"), Err(UnsupportedSyntax::RegexRule));
        assert_eq!(
            parse_rule("||x.com^$popup"),
            Err(UnsupportedSyntax::UnknownOption("popup".into()))
        );
        assert_eq!(parse_rule("||x.com^$~script"), Err(UnsupportedSyntax::NegatedType("script".into())));
        assert_eq!(parse_rule("|http://x.com/ad"), Err(UnsupportedSyntax::StartAnchor));
        assert_eq!(parse_rule("a|b.com"), Err(UnsupportedSyntax::MisplacedEndAnchor));
        assert_eq!(parse_rule("@@$image"), Err(UnsupportedSyntax::EmptyPattern));
        assert_eq!(parse_rule("||x.com^$domain="), Err(UnsupportedSyntax::EmptyDomainList));
        assert_eq!(parse_rule("! comment"), Err(UnsupportedSyntax::NotARule));
        assert_eq!(parse_rule("   "), Err(UnsupportedSyntax::NotARule));
    }

    #[test]
    fn hostname_anchor_matches_at_label_boundaries() {
        let rule = parse_rule("||a.com^").unwrap();
        assert!(match_rule(&rule, &ctx("https://a.com/x.js", ResourceType::Script, "a.com")));
        assert!(match_rule(&rule, &ctx("https://cdn.a.com/x.js", ResourceType::Script, "a.com")));
        // `na.com` must not match: `a.com` does not start at a label boundary.
        assert!(!match_rule(&rule, &ctx("https://na.com/x.js", ResourceType::Script, "a.com")));
        // The anchor never matches inside the path.
        assert!(!match_rule(&rule, &ctx("https://other.net/a.com/x.js", ResourceType::Script, "a.com")));
    }

    #[test]
    fn end_of_url_counts_as_separator() {
        let rule = parse_rule("||a.com^").unwrap();
        assert!(match_rule(&rule, &ctx("https://a.com", ResourceType::Other, "a.com")));
    }

    #[test]
    fn wildcard_and_separator_compose() {
        let rule = parse_rule("/banner/*/img^").unwrap();
        let hit = ctx("http://example.com/banner/foo/img?x=1", ResourceType::Image, "example.com");
        // `.` is not a separator, so `img.gif` must not satisfy the `^`.
        let dot = ctx("http://example.com/banner/foo/img.gif", ResourceType::Image, "example.com");
        let miss = ctx("http://example.com/banner/img", ResourceType::Image, "example.com");
        assert!(match_rule(&rule, &hit));
        assert!(!match_rule(&rule, &dot));
        assert!(!match_rule(&rule, &miss));
    }

    #[test]
    fn end_anchor_requires_url_end() {
        let rule = parse_rule("||a.com/ad.js|").unwrap();
        assert!(match_rule(&rule, &ctx("https://a.com/ad.js", ResourceType::Script, "a.com")));
        assert!(!match_rule(&rule, &ctx("https://a.com/ad.js?x=1", ResourceType::Script, "a.com")));
    }

    #[test]
    fn matching_is_case_insensitive() {
        let rule = parse_rule("||a.com/AD.js").unwrap();
        assert!(match_rule(&rule, &ctx("https://A.com/ad.JS", ResourceType::Script, "a.com")));
    }

    #[test]
    fn resource_type_constraint_applies() {
        let rule = parse_rule("||a.com^$script").unwrap();
        assert!(match_rule(&rule, &ctx("https://a.com/x.js", ResourceType::Script, "a.com")));
        assert!(!match_rule(&rule, &ctx("https://a.com/x.png", ResourceType::Image, "a.com")));
    }

    #[test]
    fn party_constraint_uses_registrable_domains() {
        let rule = parse_rule("||tracker.example.com^$third-party").unwrap();
        // Same registrable domain: first-party, so a third-party rule skips it.
        assert!(!match_rule(
            &rule,
            &ctx("https://tracker.example.com/t.js", ResourceType::Script, "www.example.com")
        ));
        assert!(match_rule(
            &rule,
            &ctx("https://tracker.example.com/t.js", ResourceType::Script, "other.net")
        ));
    }

    #[test]
    fn domain_option_restricts_frames() {
        let rule = parse_rule("||ads.net^$domain=a.com|~sub.a.com").unwrap();
        let url = "https://ads.net/x.js";
        assert!(match_rule(&rule, &ctx(url, ResourceType::Script, "a.com")));
        assert!(match_rule(&rule, &ctx(url, ResourceType::Script, "deep.a.com")));
        assert!(!match_rule(&rule, &ctx(url, ResourceType::Script, "sub.a.com")));
        assert!(!match_rule(&rule, &ctx(url, ResourceType::Script, "inner.sub.a.com")));
        assert!(!match_rule(&rule, &ctx(url, ResourceType::Script, "b.com")));
    }

    #[test]
    fn adserver_rule_blocks_third_party_script() {
        let rules = vec![parse_rule("||sfzover.com^").unwrap()];
        let request = ctx("https://sfzover.com/ad.js", ResourceType::Script, "tinyzonetv.to");
        let decision = decide(&rules, &request);
        assert_eq!(decision.outcome, Outcome::Blocked);
        assert_eq!(decision.matched_rule, Some(0));
    }

    #[test]
    fn exception_overrides_block_for_first_party_only() {
        let rules = vec![
            parse_rule("||mealty.ru/js^").unwrap(),
            parse_rule("@@||mealty.ru/js/ga_events.js$~third-party").unwrap(),
        ];
        let first_party = ctx("https://www.mealty.ru/js/ga_events.js", ResourceType::Script, "mealty.ru");
        let decision = decide(&rules, &first_party);
        assert_eq!(decision.outcome, Outcome::ExceptionAllowed);
        assert_eq!(decision.matched_rule, Some(1));

        // In a third-party frame the exception no longer applies.
        let third_party = ctx("https://www.mealty.ru/js/ga_events.js", ResourceType::Script, "other.example");
        let decision = decide(&rules, &third_party);
        assert_eq!(decision.outcome, Outcome::Blocked);
        assert_eq!(decision.matched_rule, Some(0));
    }

    #[test]
    fn no_match_yields_allowed_without_rule() {
        let rules = vec![parse_rule("||ads.net^").unwrap()];
        let decision = decide(&rules, &ctx("https://a.com/x.js", ResourceType::Script, "a.com"));
        assert_eq!(decision.outcome, Outcome::Allowed);
        assert_eq!(decision.matched_rule, None);
    }

    #[test]
    fn blocking_delta_reports_class_changes_only() {
        let pre = vec![parse_rule("||ads.net^").unwrap()];
        let mut post = pre.clone();
        post.push(parse_rule("@@||ads.net/ok.js").unwrap());
        let requests = vec![
            ctx("https://ads.net/ok.js", ResourceType::Script, "a.com"),
            ctx("https://ads.net/track.js", ResourceType::Script, "a.com"),
            ctx("https://a.com/app.js", ResourceType::Script, "a.com"),
        ];
        let delta = blocking_delta(&pre, &post, &requests);
        assert_eq!(delta.into_iter().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn list_parse_counts_coverage() {
        let text = "[Adblock Plus 2.0]\n! title\n\n||ads.net^\nexample.com##.ad\n@@||ok.net^$~third-party\n/re/\n";
        let list = FilterList::parse(text);
        assert_eq!(list.rules.len(), 2);
        assert_eq!(list.comment_lines, 2);
        assert_eq!(list.blank_lines, 1);
        assert_eq!(list.unsupported.len(), 2);
        assert_eq!(list.unsupported[0].line, 5);
        assert_eq!(list.unsupported[1].line, 7);
    }

    #[test]
    fn raw_text_round_trips() {
        for line in ["||a.com^$script,domain=x.com", "@@||b.net/path/*/x|", "plain-fragment"] {
            assert_eq!(parse_rule(line).unwrap().raw, line);
        }
    }

    mod reference {
        //! An independent regex translation of the pattern grammar, used to
        //! cross-check the hand-written matcher on randomized inputs.

        pub fn matches(rule_text: &str, url: &str) -> bool {
            let body = rule_text.strip_prefix("@@").unwrap_or(rule_text);
            let (anchored, body) = match body.strip_prefix("||") {
                Some(b) => (true, b),
                None => (false, body),
            };
            let mut re = String::new();
            if anchored {
                re.push_str(r"^https?://(?:[0-9a-z.-]+\.)?");
            }
            let chars: Vec<char> = body.chars().collect();
            for (i, c) in chars.iter().enumerate() {
                match c {
                    '*' => re.push_str(".*"),
                    '^' => re.push_str(r"(?:[^0-9a-zA-Z_.%-]|$)"),
                    '|' if i == chars.len() - 1 => re.push('$'),
                    c => re.push_str(&regex::escape(&c.to_string())),
                }
            }
            regex::Regex::new(&re).unwrap().is_match(&url.to_ascii_lowercase())
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn label() -> impl Strategy<Value = String> {
            "[a-z][a-z0-9]{0,6}"
        }

        fn simple_url() -> impl Strategy<Value = String> {
            (
                prop_oneof![Just("https"), Just("http")],
                proptest::collection::vec(label(), 1..4),
                proptest::collection::vec("[a-z0-9]{1,5}", 0..3),
                proptest::option::of("[a-z]{1,4}=[0-9]{1,3}"),
            )
                .prop_map(|(scheme, host, path, query)| {
                    let mut url = format!("{}://{}/", scheme, host.join("."));
                    url.push_str(&path.join("/"));
                    if let Some(q) = query {
                        url.push('?');
                        url.push_str(&q);
                    }
                    url
                })
        }

        fn pattern_body() -> impl Strategy<Value = String> {
            proptest::collection::vec(
                prop_oneof![
                    4 => "[a-z0-9./]{1,6}".prop_map(|s| s),
                    1 => Just("*".to_string()),
                    1 => Just("^".to_string()),
                ],
                1..5,
            )
            .prop_map(|parts| parts.concat())
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(512))]

            /// The backtracking matcher and the regex translation agree on
            /// option-free rules.
            #[test]
            fn matcher_agrees_with_regex_reference(
                body in pattern_body(),
                anchored in proptest::bool::ANY,
                end in proptest::bool::ANY,
                url in simple_url(),
            ) {
                let mut text = if anchored { format!("||{body}") } else { body };
                if end {
                    text.push('|');
                }
                let Ok(rule) = parse_rule(&text) else {
                    // e.g. a generated body of only separators plus `|` — fine.
                    return Ok(());
                };
                let ctx = RequestContext::new(&url, ResourceType::Other, "frame.example").unwrap();
                prop_assert_eq!(
                    match_rule(&rule, &ctx),
                    reference::matches(&text, &url),
                    "rule {:?} on {:?}", text, url
                );
            }

            /// Parsing preserves the raw line and never panics on list-like input.
            #[test]
            fn parse_preserves_raw(line in "[ -~]{0,40}") {
                if let Ok(rule) = parse_rule(&line) {
                    prop_assert_eq!(rule.raw, line);
                    prop_assert!(!rule.pattern.is_empty());
                }
            }

            /// A rule list compared against itself never produces a delta.
            #[test]
            fn identical_lists_have_empty_delta(
                urls in proptest::collection::vec(simple_url(), 1..8),
                bodies in proptest::collection::vec(pattern_body(), 1..6),
            ) {
                let rules: Vec<FilterRule> =
                    bodies.iter().filter_map(|b| parse_rule(b).ok()).collect();
                let requests: Vec<RequestContext> = urls
                    .iter()
                    .map(|u| RequestContext::new(u, ResourceType::Script, "frame.example").unwrap())
                    .collect();
                prop_assert!(blocking_delta(&rules, &rules, &requests).is_empty());
            }
        }
    }
}
