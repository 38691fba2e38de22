//! Shared fixtures for the criterion benchmarks.

use subseq_core::generators::{generate_iid, iid_deviation_densities};
use subseq_core::{Alphabet, DeletionChannel, ObservedSequence, RecognitionModel, Vocabulary};

/// Two i.i.d. vocabularies over `a, c, g, t` with lengths 20..=40.
pub fn iid_pair(words: usize, deviation: u32, seed: u64) -> (Vocabulary, Vocabulary) {
    let a = Alphabet::from_chars("acgt").expect("alphabet");
    let (d1, d2) = iid_deviation_densities(deviation as f64);
    (
        generate_iid("theta1", &a, &d1, words, 20, 40, seed).expect("vocabulary"),
        generate_iid("theta2", &a, &d2, words, 20, 40, seed ^ 1).expect("vocabulary"),
    )
}

pub fn models(pair: &(Vocabulary, Vocabulary)) -> Vec<RecognitionModel> {
    vec![
        RecognitionModel::learn(&pair.0).expect("model"),
        RecognitionModel::learn(&pair.1).expect("model"),
    ]
}

/// `count` channel outputs of words from the first vocabulary.
pub fn observations(v: &Vocabulary, p: f64, count: usize) -> Vec<ObservedSequence> {
    let channel = DeletionChannel::new(p, 11).expect("channel");
    (0..count)
        .map(|k| channel.transmit(&v.words()[k % v.len()], k as u64))
        .collect()
}
