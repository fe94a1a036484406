use mwzeval::bleu::{corpus_bleu, BleuStats, Smoothing};
use mwzeval::tokenizer::bleu_tokenize;
use proptest::prelude::*;

fn sentence() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e", "f", "."]), 1..12)
        .prop_map(|words| words.join(" "))
}

fn corpus() -> impl Strategy<Value = Vec<(String, String)>> {
    prop::collection::vec((sentence(), sentence()), 1..8)
}

fn split(pairs: &[(String, String)]) -> (Vec<&str>, Vec<&str>) {
    pairs.iter().map(|(h, r)| (h.as_str(), r.as_str())).unzip()
}

proptest! {
    #[test]
    fn pair_order_does_not_matter(pairs in corpus(), seed in any::<u64>()) {
        let (h, r) = split(&pairs);
        let mut shuffled = pairs.clone();
        let n = shuffled.len();
        shuffled.rotate_left((seed as usize) % n);
        let (h2, r2) = split(&shuffled);
        for smoothing in [Smoothing::None, Smoothing::Exp] {
            let a = corpus_bleu(&h, &r, smoothing).unwrap();
            let b = corpus_bleu(&h2, &r2, smoothing).unwrap();
            prop_assert_eq!(a.matches, b.matches);
            prop_assert!((a.score - b.score).abs() < 1e-9);
        }
    }

    #[test]
    fn precisions_and_score_are_bounded(pairs in corpus()) {
        let (h, r) = split(&pairs);
        let result = corpus_bleu(&h, &r, Smoothing::Exp).unwrap();
        for (m, t) in result.matches.iter().zip(&result.totals) {
            prop_assert!(m <= t);
        }
        for p in &result.precisions {
            prop_assert!((0.0..=1.0).contains(p));
        }
        prop_assert!((0.0..=100.0).contains(&result.score));
        prop_assert!(result.brevity_penalty <= 1.0);
    }

    #[test]
    fn brevity_penalty_grows_with_hypothesis_length(reference in sentence(), extra in 1usize..10) {
        let refs = [format!("{reference}{}", " x".repeat(12))];
        let short = corpus_bleu(std::slice::from_ref(&reference), &refs, Smoothing::Exp).unwrap();
        let longer = corpus_bleu(&[reference + &" x".repeat(extra)], &refs, Smoothing::Exp).unwrap();
        prop_assert!(longer.brevity_penalty >= short.brevity_penalty);
    }

    #[test]
    fn merged_stats_equal_corpus_stats(pairs in corpus()) {
        let (h, r) = split(&pairs);
        let merged = pairs
            .iter()
            .map(|(h, r)| BleuStats::pair(bleu_tokenize(h).tokens(), bleu_tokenize(r).tokens()))
            .fold(BleuStats::default(), |acc, s| acc.merge(&s));
        let direct = corpus_bleu(&h, &r, Smoothing::None).unwrap();
        prop_assert_eq!(merged.score(Smoothing::None), direct);
    }

    #[test]
    fn identity_scores_100(pairs in corpus()) {
        let (h, _) = split(&pairs);
        // Without a single 4-gram the fourth precision is undefined and taken as zero.
        prop_assume!(h.iter().any(|s| s.split(' ').count() >= 4));
        prop_assert_eq!(corpus_bleu(&h, &h, Smoothing::None).unwrap().score, 100.0);
    }
}

#[test]
fn mismatched_lengths_and_empty_corpora_are_errors() {
    assert!(corpus_bleu(&["a"], &["a", "b"], Smoothing::Exp).is_err());
    assert!(corpus_bleu::<&str, &str>(&[], &[], Smoothing::Exp).is_err());
    assert!(corpus_bleu(&["a"], &[""], Smoothing::Exp).is_err());
}

#[test]
fn identity_without_four_grams_scores_zero() {
    let r = corpus_bleu(&["a b c"], &["a b c"], Smoothing::Exp).unwrap();
    assert_eq!(r.totals[3], 0);
    assert_eq!(r.score, 0.0);
}
