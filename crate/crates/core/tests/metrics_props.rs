use colordecode::metrics::{cer, edit_distance, jargon_wer, wer, MarkedReference};
use proptest::prelude::*;

/// Minimum edits by plain recursion over the three operations.
fn brute_force(a: &[u8], b: &[u8]) -> usize {
    match (a.split_first(), b.split_first()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((x, ra)), Some((y, rb))) => {
            let sub = brute_force(ra, rb) + usize::from(x != y);
            let del = brute_force(ra, b) + 1;
            let ins = brute_force(a, rb) + 1;
            sub.min(del).min(ins)
        }
    }
}

fn binary_strings(max_len: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    for len in 0..=max_len {
        for bits in 0..(1u32 << len) {
            out.push((0..len).map(|i| ((bits >> i) & 1) as u8).collect());
        }
    }
    out
}

#[test]
fn edit_distance_matches_brute_force_on_all_short_binary_pairs() {
    let all = binary_strings(6);
    for a in &all {
        for b in &all {
            assert_eq!(edit_distance(a, b), brute_force(a, b), "{a:?} {b:?}");
        }
    }
}

#[test]
fn fixed_rates() {
    let w = |s: &str| s.split_whitespace().map(str::to_string).collect::<Vec<_>>();
    assert!((wer(&[w("a b c")], &[w("a x c")]).unwrap() - 100.0 / 3.0).abs() < 0.01);
    assert_eq!(cer(&[w("ab")], &[w("ab")]).unwrap(), 0.0);
    assert_eq!(cer(&[w("ab")], &[w("ac")]).unwrap(), 50.0);
}

fn words() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec("[abc]{1,3}", 0..6)
}

fn single_chars() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec("[abc]", 1..6)
}

proptest! {
    #[test]
    fn edit_distance_is_a_metric(a in words(), b in words(), c in words()) {
        prop_assert_eq!(edit_distance(&a, &b), edit_distance(&b, &a));
        prop_assert_eq!(edit_distance(&a, &a), 0);
        prop_assert_eq!(edit_distance(&a, &b) == 0, a == b);
        prop_assert!(edit_distance(&a, &c) <= edit_distance(&a, &b) + edit_distance(&b, &c));
    }

    #[test]
    fn corpus_rates_ignore_utterance_order(pairs in prop::collection::vec((words(), words()), 1..6), rot in 0usize..6) {
        let (refs, hyps): (Vec<_>, Vec<_>) = pairs.iter().cloned().unzip();
        let mut rotated = pairs.clone();
        rotated.rotate_left(rot % pairs.len());
        let (r2, h2): (Vec<_>, Vec<_>) = rotated.into_iter().unzip();
        prop_assert_eq!(wer(&refs, &hyps).unwrap().to_bits(), wer(&r2, &h2).unwrap().to_bits());
        prop_assert_eq!(cer(&refs, &hyps).unwrap().to_bits(), cer(&r2, &h2).unwrap().to_bits());
        prop_assert_eq!(wer(&refs, &refs).unwrap(), 0.0);
    }

    #[test]
    fn cer_reduces_to_wer_for_single_character_words(r in single_chars(), h in single_chars()) {
        // Spaces would count as characters, so compare unspaced strings.
        let join = |v: &[String]| vec![v.concat()];
        let chars = |v: &[String]| v.concat().chars().map(String::from).collect::<Vec<_>>();
        prop_assert_eq!(
            cer(&[join(&r)], &[join(&h)]).unwrap().to_bits(),
            wer(&[chars(&r)], &[chars(&h)]).unwrap().to_bits()
        );
    }

    #[test]
    fn jargon_rate_is_defined_exactly_when_a_word_is_marked(r in words(), h in words(), mask_bits in any::<u8>()) {
        let jargon: Vec<bool> = (0..r.len()).map(|i| mask_bits >> (i % 8) & 1 == 1).collect();
        let marked = MarkedReference { words: r.clone(), jargon: jargon.clone() };
        let rate = jargon_wer(&[marked], std::slice::from_ref(&h)).unwrap();
        prop_assert_eq!(rate.is_some(), jargon.iter().any(|&j| j));
        if let Some(rate) = rate {
            prop_assert!((0.0..=100.0).contains(&rate));
        }
    }
}
