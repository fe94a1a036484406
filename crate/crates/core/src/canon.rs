//! Canonical forms of slot values and fuzzy string similarity.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::domain::normalize_slot_name;
use crate::error::{Error, Result};

/// Canonical value used for every "no preference" spelling.
pub const DONTCARE: &str = "dontcare";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalValue {
    pub raw: String,
    pub canonical: String,
    /// Set when a rule should have applied but could not parse the value,
    /// e.g. an unreadable time.
    pub flagged: bool,
}

impl CanonicalValue {
    pub fn is_wildcard(&self) -> bool {
        self.canonical == DONTCARE
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleFile {
    format_version: u32,
    wildcards: Vec<String>,
    articles: Vec<String>,
    synonyms: BTreeMap<String, BTreeMap<String, String>>,
    hours: BTreeMap<String, u32>,
    minutes: BTreeMap<String, u32>,
}

/// Rule tables for [`canonicalize`].
#[derive(Debug, Clone)]
pub struct CanonRules {
    wildcards: Vec<String>,
    articles: Vec<String>,
    synonyms: HashMap<String, HashMap<String, String>>,
    hours: HashMap<String, u32>,
    minutes: HashMap<String, u32>,
}

pub static BUNDLED_RULES: &str = include_str!("../data/canon_rules.json");

static DEFAULT_RULES: LazyLock<CanonRules> = LazyLock::new(|| {
    CanonRules::from_json_str(BUNDLED_RULES, "bundled canonicalization rules").expect("bundled rules are valid")
});

impl CanonRules {
    pub fn bundled() -> &'static CanonRules {
        &DEFAULT_RULES
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text, &path.display().to_string())
    }

    pub fn from_json_str(text: &str, location: &str) -> Result<Self> {
        let file: RuleFile = serde_json::from_str(text).map_err(|e| Error::json(location, &e))?;
        if file.format_version != 1 {
            return Err(Error::format(
                location,
                format!("unsupported format_version {}", file.format_version),
            ));
        }
        let rules = CanonRules {
            wildcards: file.wildcards,
            articles: file.articles,
            synonyms: file
                .synonyms
                .into_iter()
                .map(|(slot, table)| (normalize_slot_name(&slot), table.into_iter().collect()))
                .collect(),
            hours: file.hours.into_iter().collect(),
            minutes: file.minutes.into_iter().collect(),
        };
        // Synonym targets must be fixed points or canonicalization is not idempotent.
        for (slot, table) in &rules.synonyms {
            for target in table.values() {
                if table.contains_key(target) {
                    return Err(Error::format(
                        location,
                        format!("synonym target `{target}` for {slot} is itself a synonym"),
                    ));
                }
            }
        }
        Ok(rules)
    }

    /// Canonical form of `value` for the given slot.
    pub fn canonicalize(&self, slot: &str, value: &str) -> CanonicalValue {
        let slot = normalize_slot_name(slot);
        let lowered = value
            .trim()
            .to_lowercase()
            .replace(['\u{2019}', '\u{2018}'], "'")
            .replace('&', " and ");
        let collapsed = collapse(&lowered);
        let make = |canonical: String, flagged| CanonicalValue {
            raw: value.to_string(),
            canonical,
            flagged,
        };
        if self.wildcards.contains(&collapsed) {
            return make(DONTCARE.to_string(), false);
        }
        if is_time_slot(&slot) {
            return match self.parse_time(&lowered) {
                Some(time) => make(time, false),
                None => make(lowered.split_whitespace().collect::<Vec<_>>().join(" "), true),
            };
        }
        let mut canonical = collapsed;
        if slot == "name" {
            while let Some((first, rest)) = canonical.split_once(' ') {
                if !self.articles.iter().any(|a| a == first) {
                    break;
                }
                canonical = rest.to_string();
            }
        }
        if slot == "stars" {
            for suffix in [" stars", " star"] {
                if let Some(stripped) = canonical.strip_suffix(suffix) {
                    canonical = stripped.to_string();
                }
            }
        }
        if let Some(target) = self.synonyms.get(&slot).and_then(|t| t.get(&canonical)) {
            canonical = target.clone();
        }
        make(canonical, false)
    }

    /// Parses digit, am/pm, o'clock and spelled-out times into `HH:MM`.
    pub fn parse_time(&self, value: &str) -> Option<String> {
        static DIGITS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(\d{1,2})(?:[:.](\d{2}))?$").unwrap());
        let mut text = value.trim().to_lowercase().replace("a.m.", "am").replace("p.m.", "pm");
        text = text.replace("a.m", "am").replace("p.m", "pm");
        let text = text.split_whitespace().collect::<Vec<_>>().join(" ");
        match text.as_str() {
            "noon" | "midday" | "12 noon" => return Some("12:00".into()),
            "midnight" | "12 midnight" => return Some("00:00".into()),
            _ => {}
        }
        let mut body = text.as_str();
        let mut meridiem = None;
        for (suffix, pm) in [
            ("in the morning", false),
            ("in the afternoon", true),
            ("in the evening", true),
            ("at night", true),
            ("am", false),
            ("pm", true),
        ] {
            if let Some(rest) = body.strip_suffix(suffix) {
                body = rest.trim_end();
                meridiem = Some(pm);
                break;
            }
        }
        let mut oclock = false;
        for marker in ["o'clock", "oclock", "o clock"] {
            if let Some(rest) = body.strip_suffix(marker) {
                body = rest.trim_end();
                oclock = true;
                break;
            }
        }
        let (hour, minute, explicit_minutes) = if let Some(caps) = DIGITS.captures(body) {
            let hour: u32 = caps[1].parse().ok()?;
            let minute = caps.get(2).map(|m| m.as_str().parse::<u32>()).transpose().ok()?;
            (hour, minute.unwrap_or(0), minute.is_some())
        } else {
            let (first, rest) = body.split_once(' ').unwrap_or((body, ""));
            let hour = *self.hours.get(first)?;
            let minute = if rest.is_empty() {
                None
            } else {
                Some(*self.minutes.get(rest)?)
            };
            (hour, minute.unwrap_or(0), minute.is_some())
        };
        if meridiem.is_none() && !oclock && !explicit_minutes {
            return None;
        }
        let hour = match meridiem {
            Some(pm) if (1..=12).contains(&hour) => hour % 12 + if pm { 12 } else { 0 },
            Some(_) => return None,
            None => hour,
        };
        (hour < 24 && minute < 60).then(|| format!("{hour:02}:{minute:02}"))
    }
}

fn is_time_slot(slot: &str) -> bool {
    matches!(slot, "time" | "leaveat" | "arriveby")
}

/// Lowercase text with apostrophes removed, other punctuation turned
/// into spaces and whitespace collapsed. Colons survive for times.
fn collapse(text: &str) -> String {
    let cleaned: String = text
        .chars()
        .filter(|c| *c != '\'')
        .map(|c| if c.is_alphanumeric() || c == ':' { c } else { ' ' })
        .collect();
    cleaned.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Canonicalizes with the bundled rules.
pub fn canonicalize(slot: &str, value: &str) -> CanonicalValue {
    CanonRules::bundled().canonicalize(slot, value)
}

fn lcs_len(a: &[char], b: &[char]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut row = vec![0usize; b.len() + 1];
    for &ca in a {
        for (j, &cb) in b.iter().enumerate() {
            row[j + 1] = if ca == cb { prev[j] + 1 } else { row[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut row);
    }
    prev[b.len()]
}

/// Indel similarity `2·LCS / (|a| + |b|) · 100`; 100 for two empty strings.
pub fn simple_ratio(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let total = a.len() + b.len();
    if total == 0 {
        return 100.0;
    }
    200.0 * lcs_len(&a, &b) as f64 / total as f64
}

fn sorted_tokens(s: &str) -> String {
    let mut tokens: Vec<&str> = s.split_whitespace().collect();
    tokens.sort_unstable();
    tokens.join(" ")
}

/// [`simple_ratio`] of the whitespace tokens sorted alphabetically.
pub fn token_sort_ratio(a: &str, b: &str) -> f64 {
    simple_ratio(&sorted_tokens(a), &sorted_tokens(b))
}

/// Similarity in `[0, 100]`: the better of [`simple_ratio`] and
/// [`token_sort_ratio`]. Scores are not rounded.
pub fn fuzzy_match(a: &str, b: &str) -> f64 {
    simple_ratio(a, b).max(token_sort_ratio(a, b))
}
