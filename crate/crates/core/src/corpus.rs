//! Dialogues, goals and prediction sets, and their JSON file formats.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::de::{Deserializer, MapAccess, Visitor};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::canon::canonicalize;
use crate::domain::{normalize_slot_name, Domain};
use crate::error::{Error, Result};
use crate::ontology::{Slot, SlotOntology};

pub use crate::db::{load_database, Database, DatabaseEntity};

pub const FORMAT_VERSION: u64 = 1;

/// Normalized slot name to raw value.
pub type DomainState = BTreeMap<String, String>;
pub type State = BTreeMap<Domain, DomainState>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub index: usize,
    pub user: Option<String>,
    /// Delexicalized ground-truth response, when the file carries one.
    pub reference: Option<String>,
    pub response: String,
    pub state: State,
    pub active_domain: Option<Domain>,
    /// The state in the file could not be read and was replaced by an empty one.
    pub state_flagged: bool,
}

impl Turn {
    pub fn new(index: usize, response: impl Into<String>) -> Self {
        Turn {
            index,
            user: None,
            reference: None,
            response: response.into(),
            state: State::new(),
            active_domain: None,
            state_flagged: false,
        }
    }

    pub fn is_missing(&self) -> bool {
        self.response.trim().is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dialogue {
    pub id: String,
    pub turns: Vec<Turn>,
}

impl Dialogue {
    /// Checks that turn indices strictly increase.
    pub fn validate(&self) -> Result<()> {
        for pair in self.turns.windows(2) {
            if pair[1].index <= pair[0].index {
                return Err(Error::Validation(format!(
                    "dialogue {}: turn index {} follows {}",
                    self.id, pair[1].index, pair[0].index
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredictionSet {
    pub system_name: String,
    pub dialogues: BTreeMap<String, Dialogue>,
}

impl PredictionSet {
    /// Fraction of `benchmark` ids that have a predicted dialogue.
    pub fn coverage<'a>(&self, benchmark: impl IntoIterator<Item = &'a String>) -> f64 {
        let benchmark: BTreeSet<&String> = benchmark.into_iter().collect();
        if benchmark.is_empty() {
            return 0.0;
        }
        let covered = benchmark
            .iter()
            .filter(|id| self.dialogues.contains_key(id.as_str()))
            .count();
        covered as f64 / benchmark.len() as f64
    }

    /// Native JSON form, the inverse of [`parse_predictions`].
    pub fn to_json(&self) -> Value {
        let mut map = serde_json::Map::new();
        map.insert("format_version".into(), json!(FORMAT_VERSION));
        for (id, dialogue) in &self.dialogues {
            let turns: Vec<Value> = dialogue
                .turns
                .iter()
                .map(|t| {
                    let mut turn = json!({
                        "response": t.response,
                        "state": t.state,
                        "active_domain": t.active_domain,
                    });
                    if let Some(user) = &t.user {
                        turn["user"] = json!(user);
                    }
                    if let Some(reference) = &t.reference {
                        turn["reference"] = json!(reference);
                    }
                    turn
                })
                .collect();
            map.insert(id.clone(), Value::Array(turns));
        }
        Value::Object(map)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictionFormat {
    /// Versioned toolkit format.
    Native,
    /// Unversioned input of the reference Python scripts: lowercase ids,
    /// `active_domains` lists.
    Mwzeval,
}

/// Top-level map entries in file order, so duplicate keys survive parsing.
struct Entries(Vec<(String, Value)>);

impl<'de> Deserialize<'de> for Entries {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct EntriesVisitor;
        impl<'de> Visitor<'de> for EntriesVisitor {
            type Value = Entries;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a JSON object")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> std::result::Result<Entries, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, Value>()? {
                    out.push((k, v));
                }
                Ok(Entries(out))
            }
        }
        deserializer.deserialize_map(EntriesVisitor)
    }
}

fn parse_entries(text: &str, location: &str) -> Result<Vec<(String, Value)>> {
    serde_json::from_str::<Entries>(text)
        .map(|e| e.0)
        .map_err(|e| Error::json(location, &e))
}

/// Removes and checks the `format_version` entry.
fn take_version(entries: &mut Vec<(String, Value)>, location: &str, required: bool) -> Result<()> {
    match entries.iter().position(|(k, _)| k == "format_version") {
        Some(pos) => {
            let (_, v) = entries.remove(pos);
            if v.as_u64() != Some(FORMAT_VERSION) {
                return Err(Error::format(location, format!("unsupported format_version {v}")));
            }
            Ok(())
        }
        None if required => Err(Error::format(location, "missing format_version")),
        None => Ok(()),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NativeTurn {
    response: String,
    #[serde(default)]
    state: Value,
    #[serde(default)]
    active_domain: Option<String>,
    #[serde(default)]
    user: Option<String>,
    #[serde(default)]
    reference: Option<String>,
}

#[derive(Deserialize)]
struct LegacyTurn {
    response: String,
    #[serde(default)]
    state: Value,
    #[serde(default)]
    active_domains: Option<Vec<String>>,
    #[serde(default)]
    active_domain: Option<String>,
}

fn state_value(value: &Value) -> Option<String> {
    match value {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Array(items) => items.first().and_then(state_value),
        _ => None,
    }
}

/// Reads a dialogue state; `None` when it does not fit the schema.
fn parse_state(value: &Value) -> Option<State> {
    let mut state = State::new();
    match value {
        Value::Null => return Some(state),
        Value::Object(domains) => {
            for (name, slots) in domains {
                let domain: Domain = name.parse().ok()?;
                let mut entry = DomainState::new();
                for (slot, v) in slots.as_object()? {
                    let slot = normalize_slot_name(slot);
                    if !domain.knows_slot(&slot) {
                        return None;
                    }
                    entry.insert(slot, state_value(v)?);
                }
                state.insert(domain, entry);
            }
        }
        _ => return None,
    }
    Some(state)
}

fn parse_domain(dialogue: &str, name: Option<String>) -> Result<Option<Domain>> {
    match name {
        None => Ok(None),
        Some(n) if n.is_empty() || n == "none" => Ok(None),
        Some(n) => n.parse().map(Some).map_err(|_| Error::UnknownDomain {
            dialogue: dialogue.to_string(),
            domain: n,
        }),
    }
}

/// Parses a prediction file held in memory. `location` names it in errors.
pub fn parse_predictions(
    text: &str,
    location: &str,
    format: PredictionFormat,
    system_name: &str,
) -> Result<PredictionSet> {
    let mut entries = parse_entries(text, location)?;
    take_version(&mut entries, location, format == PredictionFormat::Native)?;
    if entries.is_empty() {
        return Err(Error::Validation(format!("{location}: no dialogues")));
    }
    let mut dialogues = BTreeMap::new();
    for (raw_id, value) in entries {
        let id = match format {
            PredictionFormat::Native => raw_id,
            PredictionFormat::Mwzeval => raw_id.trim_end_matches(".json").to_uppercase(),
        };
        let Value::Array(items) = value else {
            return Err(Error::format(
                format!("{location}: dialogue {id}"),
                "expected a list of turns",
            ));
        };
        if items.is_empty() {
            return Err(Error::Validation(format!("{location}: dialogue {id} has no turns")));
        }
        let mut turns = Vec::with_capacity(items.len());
        for (index, item) in items.into_iter().enumerate() {
            let at = || format!("{location}: dialogue {id} turn {index}");
            let (response, state, domain, user, reference) = match format {
                PredictionFormat::Native => {
                    let t: NativeTurn = serde_json::from_value(item).map_err(|e| Error::format(at(), e.to_string()))?;
                    (t.response, t.state, t.active_domain, t.user, t.reference)
                }
                PredictionFormat::Mwzeval => {
                    let t: LegacyTurn = serde_json::from_value(item).map_err(|e| Error::format(at(), e.to_string()))?;
                    let domain = t.active_domain.or(t.active_domains.and_then(|d| d.into_iter().next()));
                    (t.response, t.state, domain, None, None)
                }
            };
            let parsed = parse_state(&state);
            turns.push(Turn {
                index,
                user,
                reference,
                response,
                state_flagged: parsed.is_none(),
                state: parsed.unwrap_or_default(),
                active_domain: parse_domain(&id, domain)?,
            });
        }
        let dialogue = Dialogue { id: id.clone(), turns };
        dialogue.validate()?;
        if dialogues.insert(id.clone(), dialogue).is_some() {
            return Err(Error::Validation(format!("{location}: duplicate dialogue id {id}")));
        }
    }
    Ok(PredictionSet {
        system_name: system_name.to_string(),
        dialogues,
    })
}

/// Loads a prediction file; the system is named after the file stem.
pub fn load_predictions(path: &Path, format: PredictionFormat) -> Result<PredictionSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    parse_predictions(&text, &path.display().to_string(), format, &name)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainGoal {
    /// Normalized slot name to canonical value.
    pub constraints: BTreeMap<String, String>,
    pub requested: BTreeSet<Slot>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Goal {
    pub domains: BTreeMap<Domain, DomainGoal>,
}

pub type Goals = BTreeMap<String, Goal>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GoalRecord {
    #[serde(default)]
    constraints: BTreeMap<String, Value>,
    #[serde(default)]
    requested: Vec<String>,
}

/// Parses a goal file held in memory.
pub fn parse_goals(text: &str, location: &str, ontology: &SlotOntology) -> Result<Goals> {
    let mut entries = parse_entries(text, location)?;
    take_version(&mut entries, location, true)?;
    let mut goals = Goals::new();
    for (id, value) in entries {
        let Value::Object(domains) = value else {
            return Err(Error::format(format!("{location}: goal {id}"), "expected an object"));
        };
        let mut goal = Goal::default();
        for (name, record) in domains {
            let domain: Domain = name.parse().map_err(|_| Error::UnknownDomain {
                dialogue: id.clone(),
                domain: name.clone(),
            })?;
            let at = format!("{location}: goal {id} {domain}");
            let record: GoalRecord = serde_json::from_value(record).map_err(|e| Error::format(&at, e.to_string()))?;
            let mut domain_goal = DomainGoal::default();
            for (slot, value) in record.constraints {
                let slot = normalize_slot_name(&slot);
                if !domain.knows_slot(&slot) {
                    return Err(Error::UnknownSlot { domain, slot });
                }
                let value = state_value(&value)
                    .ok_or_else(|| Error::format(&at, format!("constraint {slot} is not a string")))?;
                let canonical = canonicalize(&slot, &value).canonical;
                domain_goal.constraints.insert(slot, canonical);
            }
            for name in record.requested {
                if let Some(slot) = ontology.requested_slot(domain, &name)? {
                    domain_goal.requested.insert(slot);
                }
            }
            goal.domains.insert(domain, domain_goal);
        }
        if goals.insert(id.clone(), goal).is_some() {
            return Err(Error::Validation(format!("{location}: duplicate goal id {id}")));
        }
    }
    Ok(goals)
}

pub fn load_goals(path: &Path, ontology: &SlotOntology) -> Result<Goals> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_goals(&text, &path.display().to_string(), ontology)
}

/// Native JSON form, the inverse of [`parse_goals`].
pub fn goals_to_json(goals: &Goals) -> Value {
    let mut map = serde_json::Map::new();
    map.insert("format_version".into(), json!(FORMAT_VERSION));
    for (id, goal) in goals {
        let domains: serde_json::Map<String, Value> = goal
            .domains
            .iter()
            .map(|(d, g)| {
                (
                    d.to_string(),
                    json!({ "constraints": g.constraints, "requested": g.requested }),
                )
            })
            .collect();
        map.insert(id.clone(), Value::Object(domains));
    }
    Value::Object(map)
}
