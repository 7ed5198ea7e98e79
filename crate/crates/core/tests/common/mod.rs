#![allow(dead_code)]

use std::sync::Arc;

use colordecode::{LogitsMatrix, NGramModel, NgramEntry};
use rand::prelude::*;

pub fn entry(log10_prob: f64, backoff: Option<f64>) -> NgramEntry {
    NgramEntry {
        log10_prob,
        backoff_log10: backoff,
    }
}

pub fn uniform_unigram(words: &[String]) -> Arc<NGramModel> {
    let p = -(words.len() as f64).log10();
    let grams = words.iter().map(|w| (vec![w.clone()], entry(p, None)));
    Arc::new(NGramModel::from_ngrams(1, grams).unwrap())
}

pub fn random_rows(rng: &mut impl Rng, frames: usize, columns: usize) -> LogitsMatrix {
    let rows: Vec<Vec<f64>> = (0..frames)
        .map(|_| {
            let raw: Vec<f64> = (0..columns).map(|_| rng.gen_range(0.05..1.0)).collect();
            let sum: f64 = raw.iter().sum();
            raw.iter().map(|v| v / sum).collect()
        })
        .collect();
    LogitsMatrix::from_prob_rows(&rows).unwrap()
}

/// Model of `order` with every unigram, a random subset of each higher
/// order, and backoff weights below the top order.
pub fn random_lm(rng: &mut impl Rng, words: &[String], order: usize) -> NGramModel {
    let mut grams: Vec<(Vec<String>, NgramEntry)> = words
        .iter()
        .map(|w| {
            let backoff = (order > 1).then(|| rng.gen_range(-1.0..0.0));
            (vec![w.clone()], entry(rng.gen_range(-3.0..-0.1), backoff))
        })
        .collect();
    let mut prev: Vec<Vec<String>> = words.iter().map(|w| vec![w.clone()]).collect();
    for n in 2..=order {
        let mut next = Vec::new();
        for ctx in &prev {
            for w in words {
                if rng.gen_bool(0.4) {
                    let mut g = ctx.clone();
                    g.push(w.clone());
                    let backoff = (n < order).then(|| rng.gen_range(-1.0..0.0));
                    grams.push((g.clone(), entry(rng.gen_range(-2.0..-0.05), backoff)));
                    next.push(g);
                }
            }
        }
        prev = next;
    }
    NGramModel::from_ngrams(order, grams).unwrap()
}

pub fn random_words(rng: &mut impl Rng, letters: &[char], n: usize, max_len: usize) -> Vec<String> {
    let mut ws: Vec<String> = (0..n)
        .map(|_| {
            let len = rng.gen_range(1..=max_len);
            (0..len).map(|_| *letters.choose(rng).unwrap()).collect()
        })
        .collect();
    ws.sort();
    ws.dedup();
    ws
}

pub fn letters(k: usize) -> Vec<char> {
    ('a'..='z').take(k).collect()
}

/// Separator first, then `k` letters.
pub fn base_chars(k: usize) -> Vec<char> {
    let mut chars = vec![' '];
    chars.extend(letters(k));
    chars
}
