//! Normalization of delexicalized system outputs onto the unified ontology.

use std::sync::LazyLock;

use regex::{Captures, Regex};
use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::Result;
use crate::ontology::{Slot, SlotOntology};
use crate::tokenizer::{moses_detokenize, moses_tokenize, TokenStream};

/// One placeholder occurrence. `domain` is set when the source style
/// qualified the placeholder with a domain name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placeholder {
    pub slot: Slot,
    pub domain: Option<Domain>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizedUtterance {
    pub text: String,
    pub placeholders: Vec<Placeholder>,
}

impl NormalizedUtterance {
    /// Domains named by qualified placeholders, in order of appearance.
    pub fn qualified_domains(&self) -> impl Iterator<Item = Domain> + '_ {
        self.placeholders.iter().filter_map(|p| p.domain)
    }

    pub fn contains(&self, slot: Slot) -> bool {
        self.placeholders.iter().any(|p| p.slot == slot)
    }
}

static SEQUENCE_MARKERS: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)<\|?/?(?:sos|eos|bos|go|s|pad|endoftext)(?:_[a-z]+)?\|?>").unwrap());

/// A bracketed placeholder plus any suffix glued to it.
static BRACKETED: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\[([A-Za-z0-9_\\]+)\](?:-s\b|-ly\b|es\b|s\b)?").unwrap());

/// Normalizes with the bundled ontology.
pub fn normalize(raw: &str, style: &str) -> Result<NormalizedUtterance> {
    normalize_with(SlotOntology::bundled(), raw, style)
}

/// Strips sequence markers and placeholder suffixes, lowercases, maps
/// placeholders to the unified vocabulary and round-trips the result
/// through the Moses tokenizer.
pub fn normalize_with(ontology: &SlotOntology, raw: &str, style: &str) -> Result<NormalizedUtterance> {
    let text = SEQUENCE_MARKERS.replace_all(raw, " ");

    let mut placeholders = Vec::new();
    let mut mapped = String::with_capacity(text.len());
    let mut last = 0;
    for caps in BRACKETED.captures_iter(&text) {
        let whole = caps.get(0).unwrap();
        let (slot, domain) = ontology.resolve(style, &caps[1])?;
        mapped.push_str(&text[last..whole.start()].to_lowercase());
        mapped.push(' ');
        mapped.push_str(&slot.placeholder());
        mapped.push(' ');
        placeholders.push(Placeholder { slot, domain });
        last = whole.end();
    }
    if placeholders.is_empty() && !ontology.has_style(style) {
        // Surface unknown styles even for placeholder-free input.
        ontology.resolve(style, "name")?;
    }
    mapped.push_str(&text[last..].to_lowercase());

    let tokens = moses_tokenize(&mapped)
        .into_vec()
        .into_iter()
        .filter(|t| t != "-s" && t != "-ly")
        .collect();
    let tokens = TokenStream::new(tokens).expect("tokens from the tokenizer are valid");
    let text = moses_detokenize(&tokens);
    Ok(NormalizedUtterance { text, placeholders })
}

/// Unified placeholders of a normalized utterance in order of occurrence.
pub fn extract_placeholders(u: &NormalizedUtterance) -> Vec<Slot> {
    u.placeholders.iter().map(|p| p.slot).collect()
}

/// Re-reads the placeholders of already normalized text.
pub fn placeholders_in(text: &str) -> Vec<Slot> {
    BRACKETED
        .captures_iter(text)
        .filter_map(|c: Captures| c[1].parse::<Slot>().ok())
        .collect()
}
