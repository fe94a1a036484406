use std::collections::HashMap;

use mwzeval::diversity::{diversity_of_texts, DiversityReport};
use proptest::prelude::*;

fn utterances() -> impl Strategy<Value = Vec<String>> {
    let word = prop::sample::select(vec![
        "the", "a", "hotel", "is", "in", "centre", "[name]", "[area]", "?", ".",
    ]);
    prop::collection::vec(prop::collection::vec(word, 1..12).prop_map(|w| w.join(" ")), 1..30)
}

fn report(texts: &[String]) -> DiversityReport {
    diversity_of_texts(texts.iter().map(String::as_str), 50).unwrap()
}

/// H(w2 | w1) as the joint bigram entropy minus the entropy of the left word.
fn conditional_via_chain_rule(texts: &[String]) -> f64 {
    let mut joint: HashMap<(&str, &str), f64> = HashMap::new();
    let mut left: HashMap<&str, f64> = HashMap::new();
    let mut total = 0.0;
    for text in texts {
        let words: Vec<&str> = text.split_whitespace().collect();
        for pair in words.windows(2) {
            *joint.entry((pair[0], pair[1])).or_default() += 1.0;
            *left.entry(pair[0]).or_default() += 1.0;
            total += 1.0;
        }
    }
    let entropy = |counts: Vec<f64>| -counts.iter().map(|c| c / total * (c / total).log2()).sum::<f64>();
    if total == 0.0 {
        0.0
    } else {
        entropy(joint.into_values().collect()) - entropy(left.into_values().collect())
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(1.0)
}

proptest! {
    #[test]
    fn values_stay_in_range(texts in utterances()) {
        let r = report(&texts);
        prop_assert!(r.token_entropy >= 0.0);
        prop_assert!(r.token_entropy <= (r.unique_tokens as f64).log2() + 1e-9);
        prop_assert!(r.conditional_bigram_entropy >= 0.0);
        let tokens: usize = texts.iter().map(|t| t.split_whitespace().count()).sum();
        prop_assert!(r.unique_trigrams <= tokens);
        prop_assert_eq!(r.msttr_50.is_some(), tokens >= 50);
        if let Some(m) = r.msttr_50 {
            prop_assert!(m > 0.0 && m <= 1.0);
        }
        prop_assert!(close(r.avg_turn_length, tokens as f64 / texts.len() as f64));
    }

    #[test]
    fn conditional_entropy_matches_chain_rule(texts in utterances()) {
        let r = report(&texts);
        prop_assert!(close(r.conditional_bigram_entropy, conditional_via_chain_rule(&texts)));
    }

    #[test]
    fn duplicating_the_corpus_keeps_distributional_values(texts in utterances()) {
        let r = report(&texts);
        let doubled: Vec<String> = texts.iter().chain(&texts).cloned().collect();
        let d = report(&doubled);
        prop_assert_eq!(d.unique_tokens, r.unique_tokens);
        prop_assert_eq!(d.unique_trigrams, r.unique_trigrams);
        prop_assert!(close(d.token_entropy, r.token_entropy));
        prop_assert!(close(d.conditional_bigram_entropy, r.conditional_bigram_entropy));
        prop_assert!(close(d.avg_turn_length, r.avg_turn_length));
        let tokens: usize = texts.iter().map(|t| t.split_whitespace().count()).sum();
        if tokens.is_multiple_of(50) {
            prop_assert_eq!(d.msttr_50.is_some(), r.msttr_50.is_some());
            if let (Some(a), Some(b)) = (d.msttr_50, r.msttr_50) {
                prop_assert!(close(a, b));
            }
        }
    }

    #[test]
    fn utterance_order_only_affects_msttr(texts in utterances(), shift in 0usize..30) {
        let r = report(&texts);
        let mut rotated = texts.clone();
        let n = rotated.len();
        rotated.rotate_left(shift % n);
        let s = report(&rotated);
        prop_assert_eq!(s.unique_tokens, r.unique_tokens);
        prop_assert_eq!(s.unique_trigrams, r.unique_trigrams);
        prop_assert!(close(s.token_entropy, r.token_entropy));
        prop_assert!(close(s.conditional_bigram_entropy, r.conditional_bigram_entropy));
    }
}

#[test]
fn corpus_shorter_than_a_segment() {
    let r = diversity_of_texts(["a b c d"], 50).unwrap();
    assert_eq!(r.msttr_50, None);
    assert!(diversity_of_texts(["a b"], 0).is_err());
}
