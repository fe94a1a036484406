//! Lexical diversity of normalized outputs.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normalize::NormalizedUtterance;
use crate::tokenizer::moses_tokenize;

pub const MSTTR_SEGMENT: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityReport {
    pub unique_tokens: usize,
    /// Distinct trigrams, counted within utterances.
    pub unique_trigrams: usize,
    /// Unigram Shannon entropy in bits.
    pub token_entropy: f64,
    /// H(w2 | w1) over within-utterance bigrams, in bits.
    pub conditional_bigram_entropy: f64,
    /// Mean type/token ratio over consecutive segments; `None` when the
    /// corpus is shorter than one segment.
    pub msttr_50: Option<f64>,
    pub avg_turn_length: f64,
}

/// Diversity with the default 50-token MSTTR segments.
pub fn diversity(corpus: &[NormalizedUtterance]) -> Result<DiversityReport> {
    diversity_of_texts(corpus.iter().map(|u| u.text.as_str()), MSTTR_SEGMENT)
}

/// Diversity of raw utterance strings. Each is Moses-tokenized; the
/// trailing partial MSTTR segment is dropped.
pub fn diversity_of_texts<'a>(texts: impl IntoIterator<Item = &'a str>, segment: usize) -> Result<DiversityReport> {
    if segment == 0 {
        return Err(Error::Validation("MSTTR segment length must be positive".into()));
    }
    let utterances: Vec<Vec<String>> = texts.into_iter().map(|t| moses_tokenize(t).into_vec()).collect();
    let total: usize = utterances.iter().map(Vec::len).sum();
    if total == 0 {
        return Err(Error::Empty("diversity needs at least one non-empty utterance".into()));
    }

    let mut unigrams: BTreeMap<&str, u64> = BTreeMap::new();
    let mut bigrams: BTreeMap<(&str, &str), u64> = BTreeMap::new();
    let mut trigrams: HashSet<(&str, &str, &str)> = HashSet::new();
    for tokens in &utterances {
        for t in tokens {
            *unigrams.entry(t).or_default() += 1;
        }
        for w in tokens.windows(2) {
            *bigrams.entry((&w[0], &w[1])).or_default() += 1;
        }
        for w in tokens.windows(3) {
            trigrams.insert((&w[0], &w[1], &w[2]));
        }
    }

    // Ordered maps keep the floating-point sums reproducible across runs.
    let n = total as f64;
    let token_entropy = -unigrams
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            p * p.log2()
        })
        .sum::<f64>();

    let mut left_totals: BTreeMap<&str, u64> = BTreeMap::new();
    for (&(w1, _), &c) in &bigrams {
        *left_totals.entry(w1).or_default() += c;
    }
    let bigram_total: u64 = bigrams.values().sum();
    let conditional_bigram_entropy = if bigram_total == 0 {
        0.0
    } else {
        -bigrams
            .iter()
            .map(|(&(w1, _), &c)| {
                let joint = c as f64 / bigram_total as f64;
                joint * (c as f64 / left_totals[w1] as f64).log2()
            })
            .sum::<f64>()
    };

    let stream: Vec<&str> = utterances.iter().flatten().map(String::as_str).collect();
    let ratios: Vec<f64> = stream
        .chunks_exact(segment)
        .map(|chunk| chunk.iter().collect::<HashSet<_>>().len() as f64 / segment as f64)
        .collect();
    let msttr_50 = (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64);

    Ok(DiversityReport {
        unique_tokens: unigrams.len(),
        unique_trigrams: trigrams.len(),
        token_entropy: token_entropy.max(0.0),
        conditional_bigram_entropy: conditional_bigram_entropy.max(0.0),
        msttr_50,
        avg_turn_length: n / utterances.len() as f64,
    })
}
