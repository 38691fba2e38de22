//! Vocabulary recognition over i.i.d. deletion channels.
//!
//! Given two or more vocabularies (finite sets of words over one alphabet),
//! a word drawn from one of them is passed through a channel that deletes
//! each symbol independently with probability `p`. The task is to decide
//! which vocabulary produced the observed subsequence.
//!
//! The exact MAP rule needs the number of ways the observation embeds into
//! every word of every vocabulary. This crate approximates it with
//! *subsequence histograms*: per word length `n` and observation length
//! `m`, the positional histogram of the multiset of all length-`m`
//! subsequences. They are learned once per vocabulary in
//! `O(|alphabet| L^3)` space and scored in `O(m L)` time.
//!
//! Modules:
//!
//! * [`vocab`]: alphabets, words, vocabularies and their text format
//! * [`combinatorics`]: binomials and warping placement counts
//! * [`learning`]: histogram learning and the JSON model format
//! * [`recognition`]: similarity scores and the decision rule
//! * [`oracle`]: exact embedding counts, exact MAP and error analysis
//! * [`channel`], [`generators`]: the deletion channel and test vocabularies
//! * [`experiment`]: seeded Monte Carlo runs and CSV reports

pub mod channel;
pub mod combinatorics;
pub mod error;
pub mod experiment;
pub mod generators;
pub mod learning;
pub mod oracle;
pub mod recognition;
pub mod rng;
pub mod selftest;
pub mod vocab;

pub use channel::DeletionChannel;
pub use combinatorics::{binomial, verify_alpha_identity, AlphaTable};
pub use error::{Error, Result};
pub use experiment::{run_experiment, DrawPolicy, ExperimentConfig, ExperimentReport, ReportRow};
pub use generators::GeneratorSpec;
pub use learning::{
    learn_positional, learn_subsequence, load_model, save_model, CountMatrix, LoadMode,
    PositionalHistogram, RecognitionModel, SubsequenceHistogram,
};
pub use oracle::{
    channel_likelihood, classify_map, count_embeddings, error_analysis, map_discriminant,
    EmbeddingCount, ErrorAnalysisReport,
};
pub use recognition::{
    classify, classify_regular_histogram, similarity_score, total_score, Decision, Method, Outcome,
    ScoreBreakdown, DEFAULT_EPSILON,
};
pub use vocab::{load_vocabulary, Alphabet, ObservedSequence, Vocabulary, Word};
