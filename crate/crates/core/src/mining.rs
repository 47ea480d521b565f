//! Mines labeled page examples from a filter-list change log.
//!
//! The input is a JSONL log of list commits. Maintainers tag commit messages:
//! `P:` marks a problem fix (a rule change made because a page broke) and
//! `A:` marks added coverage (a rule change that blocked something new while
//! the page kept working). Each page URL in a commit's first message line
//! becomes one example:
//!
//! * fix commits yield `broken` examples paired with the *inverted* diff —
//!   re-applying what the maintainers reverted reproduces the breakage;
//! * coverage commits yield `working` examples with the diff as committed.
//!
//! Only commits at or after a cutoff date (2013-01-01 by default) are used;
//! older list syntax predates the dialect handled by [`crate::filter`].

use std::collections::BTreeSet;
use std::io::BufRead;
use std::sync::OnceLock;

use chrono::{DateTime, TimeZone, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filter;

/// One commit from the change log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub id: String,
    pub timestamp: DateTime<Utc>,
    pub message: String,
    pub files: Vec<FileChange>,
}

/// Line-level changes to one list file within a commit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileChange {
    pub path: String,
    #[serde(default)]
    pub added: Vec<String>,
    #[serde(default)]
    pub removed: Vec<String>,
}

/// Message-tag classification of a commit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommitClass {
    /// `P:` — a fix for a broken page.
    Fix,
    /// `A:` — new blocking coverage.
    Coverage,
    /// Anything else, including ambiguous double-tagged messages.
    Other,
}

/// Ground-truth label of a mined example.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Broken,
    Working,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Broken => "broken",
            Label::Working => "working",
        }
    }
}

/// Net rule-line changes of a commit, as raw list text.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterListDiff {
    pub added: Vec<String>,
    pub removed: Vec<String>,
}

impl FilterListDiff {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty()
    }
}

/// Swaps added and removed lines. Applying the inverse of a fix restores the
/// state that broke the page.
pub fn invert(diff: &FilterListDiff) -> FilterListDiff {
    FilterListDiff {
        added: diff.removed.clone(),
        removed: diff.added.clone(),
    }
}

/// One labeled example: a page URL, its label, and the list diff that causes
/// the labeled behavior when applied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinedExample {
    pub example_id: String,
    pub page_url: String,
    pub label: Label,
    pub diff: FilterListDiff,
    pub source_commit: String,
}

#[derive(Debug, Error)]
pub enum MiningError {
    #[error("malformed commit record on line {line}: {source}")]
    MalformedRecord {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("failed to read commit log: {0}")]
    Io(#[from] std::io::Error),
}

/// Commits with messages tagged `P:` are fixes, `A:` is added coverage; the
/// tag must open the message (case-sensitive, optional leading whitespace).
/// A message carrying both tags back-to-back is ambiguous and classified
/// [`CommitClass::Other`].
pub fn classify_commit(commit: &CommitRecord) -> CommitClass {
    let msg = commit.message.trim_start();
    for (tag, class) in [("P:", CommitClass::Fix), ("A:", CommitClass::Coverage)] {
        if let Some(rest) = msg.strip_prefix(tag) {
            let rest = rest.trim_start();
            if rest.starts_with("P:") || rest.starts_with("A:") {
                return CommitClass::Other;
            }
            return class;
        }
    }
    CommitClass::Other
}

fn url_patterns() -> &'static (Regex, Regex) {
    static PATTERNS: OnceLock<(Regex, Regex)> = OnceLock::new();
    PATTERNS.get_or_init(|| {
        // Forum references like `(Fixes https://forums…)` are maintainer
        // bookkeeping, not the affected page; drop the whole parenthesized
        // span (it may run to end of line unclosed).
        let fixes_ref = Regex::new(r"\(\s*[Ff]ixes[^)]*\)?").unwrap();
        let url = Regex::new(r#"https?://[^\s"'<>()\[\]]+"#).unwrap();
        (fixes_ref, url)
    })
}

/// Absolute http(s) URLs in the first line of `message`, in order of
/// appearance. URLs inside parenthesized `Fixes …` references are excluded.
pub fn extract_urls(message: &str) -> Vec<String> {
    let first_line = message.lines().next().unwrap_or("");
    let (fixes_ref, url) = url_patterns();
    let cleaned = fixes_ref.replace_all(first_line, " ");
    url.find_iter(&cleaned)
        .map(|m| m.as_str().trim_end_matches(['.', ',', ';', ':', '!', '?']).to_string())
        .filter(|u| !u.is_empty())
        .collect()
}

/// Default mining cutoff: list syntax before 2013 predates the supported
/// dialect.
pub fn default_cutoff() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2013, 1, 1, 0, 0, 0).unwrap()
}

/// Counters describing what mining kept and skipped.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningStats {
    pub commits_total: usize,
    pub commits_fix: usize,
    pub commits_coverage: usize,
    pub commits_other: usize,
    pub commits_before_cutoff: usize,
    pub commits_without_urls: usize,
    pub commits_with_empty_diff: usize,
    /// Changed lines skipped because they are outside the supported rule
    /// grammar (cosmetic rules, regex rules, unknown options).
    pub unsupported_lines: usize,
    pub examples_broken: usize,
    pub examples_working: usize,
}

/// Mined examples plus coverage counters.
#[derive(Debug, Clone, Default)]
pub struct MiningOutcome {
    pub examples: Vec<MinedExample>,
    pub stats: MiningStats,
}

/// Net parseable rule changes of a commit. Lines that appear in both the
/// added and removed sets (file moves) cancel out; unsupported lines are
/// skipped and counted.
fn commit_diff(commit: &CommitRecord, unsupported: &mut usize) -> FilterListDiff {
    let mut collect = |lines: &mut dyn Iterator<Item = &String>| -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for line in lines {
            match filter::parse_rule(line) {
                Ok(_) => {
                    if seen.insert(line.clone()) {
                        out.push(line.clone());
                    }
                }
                Err(_) => *unsupported += 1,
            }
        }
        out
    };
    let added = collect(&mut commit.files.iter().flat_map(|f| f.added.iter()));
    let removed = collect(&mut commit.files.iter().flat_map(|f| f.removed.iter()));

    let added_set: BTreeSet<&String> = added.iter().collect();
    let removed_set: BTreeSet<&String> = removed.iter().collect();
    let moved: BTreeSet<String> = added_set.intersection(&removed_set).map(|s| (*s).clone()).collect();
    FilterListDiff {
        added: added.into_iter().filter(|l| !moved.contains(l)).collect(),
        removed: removed.into_iter().filter(|l| !moved.contains(l)).collect(),
    }
}

/// Turns classified commits into labeled examples, one per distinct page URL.
pub fn mine_examples(commits: &[CommitRecord], cutoff: DateTime<Utc>) -> MiningOutcome {
    let mut out = MiningOutcome::default();
    out.stats.commits_total = commits.len();
    for commit in commits {
        let class = classify_commit(commit);
        match class {
            CommitClass::Fix => out.stats.commits_fix += 1,
            CommitClass::Coverage => out.stats.commits_coverage += 1,
            CommitClass::Other => {
                out.stats.commits_other += 1;
                continue;
            }
        }
        if commit.timestamp < cutoff {
            out.stats.commits_before_cutoff += 1;
            continue;
        }
        let urls = extract_urls(&commit.message);
        if urls.is_empty() {
            out.stats.commits_without_urls += 1;
            continue;
        }
        let diff = commit_diff(commit, &mut out.stats.unsupported_lines);
        if diff.is_empty() {
            out.stats.commits_with_empty_diff += 1;
            continue;
        }
        let (label, diff) = match class {
            CommitClass::Fix => (Label::Broken, invert(&diff)),
            CommitClass::Coverage => (Label::Working, diff),
            CommitClass::Other => unreachable!(),
        };
        let mut seen = BTreeSet::new();
        for url in urls {
            if !seen.insert(url.clone()) {
                continue;
            }
            match label {
                Label::Broken => out.stats.examples_broken += 1,
                Label::Working => out.stats.examples_working += 1,
            }
            out.examples.push(MinedExample {
                example_id: format!("{}-{}", commit.id, seen.len() - 1),
                page_url: url,
                label,
                diff: diff.clone(),
                source_commit: commit.id.clone(),
            });
        }
    }
    out
}

/// Reads a JSONL commit log, reporting the first malformed line.
pub fn parse_commit_log<R: BufRead>(reader: R) -> Result<Vec<CommitRecord>, MiningError> {
    let mut commits = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|source| MiningError::MalformedRecord { line: i + 1, source })?;
        commits.push(record);
    }
    Ok(commits)
}

/// Serializes mined examples as JSONL.
pub fn write_examples<W: std::io::Write>(mut w: W, examples: &[MinedExample]) -> std::io::Result<()> {
    for ex in examples {
        serde_json::to_writer(&mut w, ex)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
