//! Venue and train tables and the slot-constrained query engine.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::canon::{canonicalize, fuzzy_match};
use crate::domain::{normalize_slot_name, Domain};
use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 90.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatabaseEntity {
    pub id: String,
    pub domain: Domain,
    /// Normalized slot name to canonical value.
    pub attributes: BTreeMap<String, String>,
}

impl DatabaseEntity {
    /// Builds an entity, normalizing slot names and canonicalizing values.
    pub fn new<'a>(
        domain: Domain,
        id: impl Into<String>,
        attributes: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Self {
        DatabaseEntity {
            id: id.into(),
            domain,
            attributes: attributes
                .into_iter()
                .map(|(slot, value)| {
                    let slot = normalize_slot_name(slot);
                    let value = canonicalize(&slot, value).canonical;
                    (slot, value)
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    /// Every informable constraint must match.
    Full,
    /// A venue name or train ID, when present, is the only constraint used.
    Reduced,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryResult {
    pub domain: Domain,
    pub entity_ids: BTreeSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Database {
    tables: BTreeMap<Domain, Vec<DatabaseEntity>>,
    /// Non-fatal load problems such as missing tables.
    pub warnings: Vec<String>,
}

impl Database {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, entity: DatabaseEntity) -> Result<()> {
        let table = self.tables.entry(entity.domain).or_default();
        if table.iter().any(|e| e.id == entity.id) {
            return Err(Error::Validation(format!(
                "duplicate {} entity id {}",
                entity.domain, entity.id
            )));
        }
        table.push(entity);
        Ok(())
    }

    pub fn table(&self, domain: Domain) -> &[DatabaseEntity] {
        self.tables.get(&domain).map_or(&[], Vec::as_slice)
    }

    pub fn counts(&self) -> BTreeMap<Domain, usize> {
        Domain::DATABASED.iter().map(|d| (*d, self.table(*d).len())).collect()
    }

    /// Entity ids of `domain` matching `constraints` (slot to value).
    ///
    /// Values are canonicalized before matching. Wildcards and booking
    /// slots are ignored. Train `arriveby` and `leaveat` compare as times
    /// (arrive no later, leave no earlier); everything else fuzzy-matches
    /// at `threshold`.
    pub fn query<K: AsRef<str>, V: AsRef<str>>(
        &self,
        domain: Domain,
        constraints: impl IntoIterator<Item = (K, V)>,
        mode: SearchMode,
        threshold: f64,
    ) -> Result<QueryResult> {
        let mut active = Vec::new();
        for (slot, value) in constraints {
            let slot = normalize_slot_name(slot.as_ref());
            if !domain.knows_slot(&slot) {
                return Err(Error::UnknownSlot { domain, slot });
            }
            if !domain.informable_slots().contains(&slot.as_str()) {
                continue;
            }
            let value = canonicalize(&slot, value.as_ref());
            if !value.is_wildcard() {
                active.push((slot, value.canonical));
            }
        }
        if mode == SearchMode::Reduced {
            let key = if domain == Domain::Train { "trainid" } else { "name" };
            if let Some(pos) = active.iter().position(|(slot, _)| slot == key) {
                active = vec![active.swap_remove(pos)];
            }
        }
        let entity_ids = self
            .table(domain)
            .iter()
            .filter(|entity| {
                active.iter().all(|(slot, wanted)| {
                    entity
                        .attributes
                        .get(slot)
                        .is_some_and(|have| value_matches(domain, slot, have, wanted, threshold))
                })
            })
            .map(|entity| entity.id.clone())
            .collect();
        Ok(QueryResult { domain, entity_ids })
    }
}

fn is_clock(s: &str) -> bool {
    let b = s.as_bytes();
    b.len() == 5 && b[2] == b':' && [0, 1, 3, 4].iter().all(|&i| b[i].is_ascii_digit())
}

fn value_matches(domain: Domain, slot: &str, have: &str, wanted: &str, threshold: f64) -> bool {
    if domain == Domain::Train && is_clock(have) && is_clock(wanted) {
        match slot {
            "arriveby" => return have <= wanted,
            "leaveat" => return have >= wanted,
            _ => {}
        }
    }
    fuzzy_match(have, wanted) >= threshold
}

fn entity_from_json(domain: Domain, value: &Value, location: &str) -> Result<DatabaseEntity> {
    let object = value
        .as_object()
        .ok_or_else(|| Error::format(location, "entity is not an object"))?;
    let mut id = None;
    let mut attributes = Vec::new();
    for (key, value) in object {
        let text = match value {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            Value::Bool(b) => b.to_string(),
            _ => continue,
        };
        if key == "id" {
            id = Some(text);
        } else {
            attributes.push((key.as_str(), text));
        }
    }
    let id = id
        .or_else(|| {
            attributes
                .iter()
                .find(|(k, _)| normalize_slot_name(k) == "trainid")
                .map(|(_, v)| v.clone())
        })
        .ok_or_else(|| Error::format(location, "entity has no id"))?;
    Ok(DatabaseEntity::new(
        domain,
        id,
        attributes.iter().map(|(k, v)| (*k, v.as_str())),
    ))
}

/// Parses one domain table: a bare array of entities or
/// `{"format_version": 1, "entities": [...]}`.
pub fn parse_table(domain: Domain, text: &str, location: &str) -> Result<Vec<DatabaseEntity>> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::json(location, &e))?;
    let entities = match &value {
        Value::Array(items) => items,
        Value::Object(map) => {
            match map.get("format_version") {
                Some(v) if v.as_u64() == Some(1) => {}
                other => return Err(Error::format(location, format!("unsupported format_version {other:?}"))),
            }
            map.get("entities")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::format(location, "missing `entities` array"))?
        }
        _ => return Err(Error::format(location, "expected an array of entities")),
    };
    entities
        .iter()
        .enumerate()
        .map(|(i, e)| entity_from_json(domain, e, &format!("{location}: entity {i}")))
        .collect()
}

/// Loads `<domain>.json` or `<domain>_db.json` for each databased domain.
/// Missing tables are recorded in [`Database::warnings`].
pub fn load_database(dir: &Path) -> Result<Database> {
    if !dir.is_dir() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
        ));
    }
    let mut db = Database::new();
    for domain in Domain::DATABASED {
        let path = [format!("{domain}.json"), format!("{domain}_db.json")]
            .into_iter()
            .map(|name| dir.join(name))
            .find(|p| p.is_file());
        let Some(path) = path else {
            db.warnings.push(format!("no table for {domain} in {}", dir.display()));
            continue;
        };
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        for entity in parse_table(domain, &text, &path.display().to_string())? {
            db.insert(entity)
                .map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
        }
    }
    Ok(db)
}

/// Serializes one domain table in the versioned format.
pub fn table_to_json(db: &Database, domain: Domain) -> Value {
    let entities: Vec<Value> = db
        .table(domain)
        .iter()
        .map(|e| {
            let mut map = serde_json::Map::new();
            map.insert("id".into(), Value::String(e.id.clone()));
            for (k, v) in &e.attributes {
                map.insert(k.clone(), Value::String(v.clone()));
            }
            Value::Object(map)
        })
        .collect();
    serde_json::json!({ "format_version": 1, "entities": entities })
}
