//! Domains and the per-domain slot schema.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One of the seven MultiWOZ domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Restaurant,
    Hotel,
    Attraction,
    Train,
    Taxi,
    Police,
    Hospital,
}

impl Domain {
    pub const ALL: [Domain; 7] = [
        Domain::Restaurant,
        Domain::Hotel,
        Domain::Attraction,
        Domain::Train,
        Domain::Taxi,
        Domain::Police,
        Domain::Hospital,
    ];

    /// Domains backed by a database table.
    pub const DATABASED: [Domain; 4] = [Domain::Restaurant, Domain::Hotel, Domain::Attraction, Domain::Train];

    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Restaurant => "restaurant",
            Domain::Hotel => "hotel",
            Domain::Attraction => "attraction",
            Domain::Train => "train",
            Domain::Taxi => "taxi",
            Domain::Police => "police",
            Domain::Hospital => "hospital",
        }
    }

    pub fn is_databased(self) -> bool {
        Self::DATABASED.contains(&self)
    }

    /// Slots that constrain a database search in this domain.
    pub fn informable_slots(self) -> &'static [&'static str] {
        match self {
            Domain::Restaurant => &["area", "food", "name", "pricerange"],
            Domain::Hotel => &["area", "internet", "name", "parking", "pricerange", "stars", "type"],
            Domain::Attraction => &["area", "name", "type"],
            Domain::Train => &["arriveby", "day", "departure", "destination", "leaveat", "trainid"],
            Domain::Taxi => &["arriveby", "departure", "destination", "leaveat"],
            Domain::Police => &["name"],
            Domain::Hospital => &["department"],
        }
    }

    /// Booking slots: legal in states and goals, never used for search.
    pub fn booking_slots(self) -> &'static [&'static str] {
        match self {
            Domain::Restaurant => &["people", "day", "time"],
            Domain::Hotel => &["people", "day", "stay"],
            Domain::Train => &["people"],
            _ => &[],
        }
    }

    pub fn knows_slot(self, slot: &str) -> bool {
        self.informable_slots().contains(&slot) || self.booking_slots().contains(&slot)
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownDomain(pub String);

impl fmt::Display for UnknownDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown domain `{}`", self.0)
    }
}

impl std::error::Error for UnknownDomain {}

impl FromStr for Domain {
    type Err = UnknownDomain;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lowered = s.trim().to_ascii_lowercase();
        Domain::ALL
            .into_iter()
            .find(|d| d.as_str() == lowered)
            .ok_or(UnknownDomain(s.to_string()))
    }
}

/// Maps the many spellings of a slot name found in states and goals
/// (`arriveBy`, `arrive by`, `book_people`, `price range`, ...) onto the
/// schema names used by [`Domain::informable_slots`] and
/// [`Domain::booking_slots`].
pub fn normalize_slot_name(raw: &str) -> String {
    let compact: String = raw
        .trim()
        .to_ascii_lowercase()
        .chars()
        .filter(|c| !matches!(c, ' ' | '_' | '-'))
        .collect();
    let compact = compact
        .strip_prefix("book")
        .filter(|rest| !rest.is_empty())
        .unwrap_or(&compact)
        .to_string();
    match compact.as_str() {
        "price" => "pricerange".to_string(),
        "arrive" => "arriveby".to_string(),
        "leave" => "leaveat".to_string(),
        "id" | "trainid" => "trainid".to_string(),
        _ => compact,
    }
}
