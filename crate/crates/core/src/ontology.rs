//! The unified placeholder vocabulary and the per-style mapping onto it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{Error, Result};

/// A unified slot placeholder. Normalized text spells these as
/// lowercase bracketed tokens (`[name]`, `[post]`, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Slot {
    Name,
    TrainId,
    Place,
    Address,
    Post,
    Phone,
    Price,
    Count,
    Area,
    Food,
    Type,
    Time,
    Day,
    People,
    Stay,
    Reference,
    Stars,
    Department,
}

impl Slot {
    pub const ALL: [Slot; 18] = [
        Slot::Name,
        Slot::TrainId,
        Slot::Place,
        Slot::Address,
        Slot::Post,
        Slot::Phone,
        Slot::Price,
        Slot::Count,
        Slot::Area,
        Slot::Food,
        Slot::Type,
        Slot::Time,
        Slot::Day,
        Slot::People,
        Slot::Stay,
        Slot::Reference,
        Slot::Stars,
        Slot::Department,
    ];

    /// Slots whose mention counts towards Success.
    pub const REQUESTABLE: [Slot; 5] = [Slot::Address, Slot::Post, Slot::Phone, Slot::Reference, Slot::TrainId];

    pub fn as_str(self) -> &'static str {
        match self {
            Slot::Name => "NAME",
            Slot::TrainId => "TRAINID",
            Slot::Place => "PLACE",
            Slot::Address => "ADDRESS",
            Slot::Post => "POST",
            Slot::Phone => "PHONE",
            Slot::Price => "PRICE",
            Slot::Count => "COUNT",
            Slot::Area => "AREA",
            Slot::Food => "FOOD",
            Slot::Type => "TYPE",
            Slot::Time => "TIME",
            Slot::Day => "DAY",
            Slot::People => "PEOPLE",
            Slot::Stay => "STAY",
            Slot::Reference => "REFERENCE",
            Slot::Stars => "STARS",
            Slot::Department => "DEPARTMENT",
        }
    }

    /// The token used in normalized text, e.g. `[post]`.
    pub fn placeholder(self) -> String {
        format!("[{}]", self.as_str().to_ascii_lowercase())
    }

    pub fn is_requestable(self) -> bool {
        Self::REQUESTABLE.contains(&self)
    }

    /// True for the placeholders that trigger an offered-entity update.
    pub fn is_entity(self) -> bool {
        matches!(self, Slot::Name | Slot::TrainId)
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Slot {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let upper = s
            .trim()
            .trim_start_matches('[')
            .trim_end_matches(']')
            .to_ascii_uppercase();
        Slot::ALL
            .into_iter()
            .find(|slot| slot.as_str() == upper)
            .ok_or_else(|| format!("unknown unified slot `{s}`"))
    }
}

/// Matches every style.
const ANY_STYLE: &str = "*";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct OntologyFile {
    format_version: u32,
    unified: Vec<String>,
    styles: BTreeMap<String, Vec<String>>,
    entries: Vec<(String, String, String)>,
}

/// Placeholder prefixes that are not domains but are still stripped.
const NEUTRAL_PREFIXES: [&str; 1] = ["value"];

/// The style-specific to unified placeholder mapping.
#[derive(Debug, Clone)]
pub struct SlotOntology {
    format_version: u32,
    styles: BTreeMap<String, Vec<String>>,
    entries: HashMap<(String, String), Slot>,
}

pub static BUNDLED_ONTOLOGY: &str = include_str!("../data/ontology.json");

static DEFAULT: LazyLock<SlotOntology> = LazyLock::new(|| {
    SlotOntology::from_json_str(BUNDLED_ONTOLOGY, "bundled ontology").expect("bundled ontology is valid")
});

/// Lookup key for a source name: lowercase without underscores.
fn compact(name: &str) -> String {
    name.chars()
        .filter(|c| *c != '_' && *c != '\\')
        .flat_map(char::to_lowercase)
        .collect()
}

impl SlotOntology {
    /// The ontology shipped with the toolkit.
    pub fn bundled() -> &'static SlotOntology {
        &DEFAULT
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text, &path.display().to_string())
    }

    pub fn from_json_str(text: &str, location: &str) -> Result<Self> {
        let file: OntologyFile = serde_json::from_str(text).map_err(|e| Error::json(location, &e))?;
        if file.format_version != 1 {
            return Err(Error::format(
                location,
                format!("unsupported format_version {}", file.format_version),
            ));
        }
        let unified: BTreeSet<Slot> = file
            .unified
            .iter()
            .map(|name| name.parse::<Slot>().map_err(|e| Error::format(location, e)))
            .collect::<Result<_>>()?;
        if unified.len() != Slot::ALL.len() || file.unified.len() != Slot::ALL.len() {
            return Err(Error::format(
                location,
                format!("expected exactly {} unified names", Slot::ALL.len()),
            ));
        }
        let mut styles = BTreeMap::new();
        for (style, prefixes) in file.styles {
            for prefix in &prefixes {
                if !NEUTRAL_PREFIXES.contains(&prefix.as_str()) && prefix.parse::<Domain>().is_err() {
                    return Err(Error::format(
                        location,
                        format!("style {style}: prefix `{prefix}` is neither a domain nor `value`"),
                    ));
                }
            }
            styles.insert(style.to_ascii_lowercase(), prefixes);
        }
        let mut entries = HashMap::new();
        for (style, source, target) in file.entries {
            let style = style.to_ascii_lowercase();
            if style != ANY_STYLE && !styles.contains_key(&style) {
                return Err(Error::format(location, format!("entry for undeclared style `{style}`")));
            }
            let slot = target.parse::<Slot>().map_err(|e| Error::format(location, e))?;
            if entries.insert((style.clone(), compact(&source)), slot).is_some() {
                return Err(Error::format(location, format!("duplicate entry ({style}, {source})")));
            }
        }
        Ok(SlotOntology {
            format_version: file.format_version,
            styles,
            entries,
        })
    }

    pub fn format_version(&self) -> u32 {
        self.format_version
    }

    pub fn styles(&self) -> impl Iterator<Item = &str> {
        self.styles.keys().map(String::as_str)
    }

    pub fn has_style(&self, style: &str) -> bool {
        self.styles.contains_key(&style.to_ascii_lowercase())
    }

    /// Looks up an unqualified source name for a style.
    pub fn lookup(&self, style: &str, source: &str) -> Option<Slot> {
        let key = compact(source);
        self.entries
            .get(&(style.to_ascii_lowercase(), key.clone()))
            .or_else(|| self.entries.get(&(ANY_STYLE.to_string(), key)))
            .copied()
    }

    /// Resolves the inside of a bracketed placeholder (`attraction_name`,
    /// `value_count`, `postcode`) into a unified slot and, when the style
    /// qualifies placeholders with a domain, that domain.
    pub fn resolve(&self, style: &str, inner: &str) -> Result<(Slot, Option<Domain>)> {
        let style_key = style.to_ascii_lowercase();
        let prefixes = self.styles.get(&style_key).ok_or_else(|| {
            Error::Validation(format!(
                "unknown style `{style}` (known: {})",
                self.styles.keys().cloned().collect::<Vec<_>>().join(", ")
            ))
        })?;
        let lowered = inner.replace('\\', "").to_ascii_lowercase();
        if let Some((prefix, rest)) = lowered.split_once('_') {
            if prefixes.iter().any(|p| p == prefix) {
                if let Some(slot) = self.lookup(&style_key, rest) {
                    return Ok((slot, prefix.parse::<Domain>().ok()));
                }
            }
        }
        self.lookup(&style_key, &lowered)
            .map(|slot| (slot, None))
            .ok_or_else(|| Error::UnknownPlaceholder {
                token: format!("[{inner}]"),
                style: style.to_string(),
            })
    }

    /// Maps a goal's requested slot name (`postcode`, `trainID`, `ref`)
    /// onto the unified vocabulary. `Ok(None)` means the name is known but
    /// not tracked for Success.
    pub fn requested_slot(&self, domain: Domain, name: &str) -> Result<Option<Slot>> {
        match self.lookup(ANY_STYLE, name) {
            Some(slot) if slot.is_requestable() => Ok(Some(slot)),
            Some(_) => Ok(None),
            None if domain.knows_slot(&crate::domain::normalize_slot_name(name)) => Ok(None),
            None => Err(Error::UnknownSlot {
                domain,
                slot: name.to_string(),
            }),
        }
    }
}

impl Default for SlotOntology {
    fn default() -> Self {
        DEFAULT.clone()
    }
}
