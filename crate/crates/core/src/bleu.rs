//! Corpus-level BLEU over single references.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tokenizer::bleu_tokenize;

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Smoothing {
    /// Unsmoothed: any zero precision gives a score of 0.
    None,
    /// Each zero-match order k in turn gets precision 1 / (2^k · total).
    #[default]
    Exp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuResult {
    /// Percentage in `[0, 100]`.
    pub score: f64,
    /// Modified n-gram precisions as fractions, n = 1..4.
    pub precisions: [f64; MAX_ORDER],
    pub matches: [u64; MAX_ORDER],
    pub totals: [u64; MAX_ORDER],
    pub brevity_penalty: f64,
    pub hyp_length: u64,
    pub ref_length: u64,
    /// Every hypothesis was empty.
    pub degenerate: bool,
}

/// Pooled clipped n-gram statistics for a corpus.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: [u64; MAX_ORDER],
    pub totals: [u64; MAX_ORDER],
    pub hyp_length: u64,
    pub ref_length: u64,
}

impl BleuStats {
    /// Statistics of one tokenized pair.
    pub fn pair<S: AsRef<str>>(hyp: &[S], reference: &[S]) -> Self {
        let mut stats = BleuStats {
            hyp_length: hyp.len() as u64,
            ref_length: reference.len() as u64,
            ..Default::default()
        };
        for n in 1..=MAX_ORDER {
            let ref_counts = ngram_counts(reference, n);
            for (gram, count) in ngram_counts(hyp, n) {
                let clip = ref_counts.get(&gram).copied().unwrap_or(0);
                stats.matches[n - 1] += count.min(clip);
            }
            stats.totals[n - 1] += hyp.len().saturating_sub(n - 1) as u64;
        }
        stats
    }

    pub fn merge(mut self, other: &BleuStats) -> Self {
        for n in 0..MAX_ORDER {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.hyp_length += other.hyp_length;
        self.ref_length += other.ref_length;
        self
    }

    pub fn score(&self, smoothing: Smoothing) -> BleuResult {
        let mut precisions = [0.0; MAX_ORDER];
        let mut smooth = 1.0;
        for n in 0..MAX_ORDER {
            if self.totals[n] == 0 {
                continue;
            }
            precisions[n] = if self.matches[n] > 0 {
                self.matches[n] as f64 / self.totals[n] as f64
            } else if smoothing == Smoothing::Exp {
                smooth *= 2.0;
                1.0 / (smooth * self.totals[n] as f64)
            } else {
                0.0
            };
        }
        let brevity_penalty = if self.hyp_length == 0 {
            0.0
        } else if self.hyp_length < self.ref_length {
            (1.0 - self.ref_length as f64 / self.hyp_length as f64).exp()
        } else {
            1.0
        };
        let score = if precisions.contains(&0.0) {
            0.0
        } else {
            let log_mean = precisions.iter().map(|p| p.ln()).sum::<f64>() / MAX_ORDER as f64;
            (brevity_penalty * log_mean.exp() * 100.0).min(100.0)
        };
        BleuResult {
            score,
            precisions,
            matches: self.matches,
            totals: self.totals,
            brevity_penalty,
            hyp_length: self.hyp_length,
            ref_length: self.ref_length,
            degenerate: self.hyp_length == 0,
        }
    }
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, u64> {
    let mut counts = HashMap::new();
    for window in tokens.windows(n) {
        *counts.entry(window.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
    }
    counts
}

/// Corpus BLEU of `hypotheses` against one reference each. Both sides go
/// through [`bleu_tokenize`]; counts are pooled before dividing.
pub fn corpus_bleu<H: AsRef<str>, R: AsRef<str>>(
    hypotheses: &[H],
    references: &[R],
    smoothing: Smoothing,
) -> Result<BleuResult> {
    if hypotheses.len() != references.len() {
        return Err(Error::LengthMismatch {
            hypotheses: hypotheses.len(),
            references: references.len(),
        });
    }
    if hypotheses.is_empty() {
        return Err(Error::Empty("no hypothesis/reference pairs".into()));
    }
    let mut stats = BleuStats::default();
    for (i, (hyp, reference)) in hypotheses.iter().zip(references).enumerate() {
        let reference = bleu_tokenize(reference.as_ref());
        if reference.is_empty() {
            return Err(Error::Validation(format!("reference {i} is empty")));
        }
        let hyp = bleu_tokenize(hyp.as_ref());
        stats = stats.merge(&BleuStats::pair(hyp.tokens(), reference.tokens()));
    }
    Ok(stats.score(smoothing))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_scores_100() {
        let corpus = ["the cat sat on the mat .", "[name] is at [address]."];
        let r = corpus_bleu(&corpus, &corpus, Smoothing::None).unwrap();
        assert_eq!(r.score, 100.0);
        assert_eq!(r.brevity_penalty, 1.0);
    }

    #[test]
    fn clipping() {
        let r = corpus_bleu(&["the the the the"], &["the cat"], Smoothing::None).unwrap();
        assert_eq!(r.precisions, [0.25, 0.0, 0.0, 0.0]);
        assert_eq!(r.score, 0.0);
        let smoothed = corpus_bleu(&["the the the the"], &["the cat"], Smoothing::Exp).unwrap();
        assert_eq!(smoothed.precisions, [0.25, 1.0 / 6.0, 1.0 / 8.0, 1.0 / 8.0]);
        assert!(smoothed.score > 0.0);
    }

    #[test]
    fn errors_and_degenerate_input() {
        assert!(matches!(
            corpus_bleu(&["a"], &["a", "b"], Smoothing::Exp),
            Err(Error::LengthMismatch {
                hypotheses: 1,
                references: 2
            })
        ));
        let r = corpus_bleu(&["", ""], &["a b", "c"], Smoothing::Exp).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.score, 0.0);
        assert!(corpus_bleu(&["a"], &[""], Smoothing::Exp).is_err());
    }

    #[test]
    fn brevity_penalty() {
        let r = corpus_bleu(&["a b c d e"], &["a b c d e f g h i j"], Smoothing::None).unwrap();
        assert!((r.brevity_penalty - (-1.0f64).exp()).abs() < 1e-15);
    }
}
