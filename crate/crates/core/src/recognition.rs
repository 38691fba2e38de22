//! Recognition: similarity scores, total scores and the decision rule.
//!
//! For an observation `S` of length `m`, the order-`n` similarity score is
//! the mean of `psi[n][m](s_i, i)` over the positions of `S`, and the total
//! score of a vocabulary is
//!
//! ```text
//! J(S) = prior / |V| * sum_{n=m..L} gamma_n(S) * p^n
//! ```
//!
//! Decisions compare scores in the log domain so that tiny scores (long
//! words, small `p`) never underflow into spurious draws.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learning::RecognitionModel;
use crate::vocab::{Alphabet, ObservedSequence};

/// Relative tolerance under which the two best scores are a draw.
pub const DEFAULT_EPSILON: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SubsequenceHistogram,
    RegularHistogram,
    ExactMap,
}

impl Method {
    pub const ALL: [Method; 3] = [
        Method::SubsequenceHistogram,
        Method::RegularHistogram,
        Method::ExactMap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::SubsequenceHistogram => "subsequence-histogram",
            Method::RegularHistogram => "regular-histogram",
            Method::ExactMap => "exact-map",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "subsequence-histogram" | "subsequence" | "sh" => Ok(Method::SubsequenceHistogram),
            "regular-histogram" | "regular" | "rh" => Ok(Method::RegularHistogram),
            "exact-map" | "map" => Ok(Method::ExactMap),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Label(String),
    Draw,
}

impl Outcome {
    pub fn label(&self) -> Option<&str> {
        match self {
            Outcome::Label(l) => Some(l),
            Outcome::Draw => None,
        }
    }

    pub fn is_draw(&self) -> bool {
        matches!(self, Outcome::Draw)
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Label(l) => f.write_str(l),
            Outcome::Draw => f.write_str("draw"),
        }
    }
}

/// Per-vocabulary score with its per-length terms.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreBreakdown {
    pub label: String,
    /// `(n, gamma_n(S))` for every stored length `n >= m`.
    pub per_length: Vec<(usize, f64)>,
    /// The score itself (zero when nothing can produce `S`).
    pub total: f64,
    /// Natural log of `total`, `-inf` for zero. For the regular-histogram
    /// baseline this is the log-likelihood and `total` its exponential.
    pub log_total: f64,
    /// Number of histogram entries read to compute this score.
    pub lookups: usize,
}

impl ScoreBreakdown {
    fn zero(label: &str) -> Self {
        ScoreBreakdown {
            label: label.to_string(),
            per_length: Vec::new(),
            total: 0.0,
            log_total: f64::NEG_INFINITY,
            lookups: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decision {
    pub outcome: Outcome,
    pub scores: Vec<ScoreBreakdown>,
    pub method: Method,
}

fn check_sequence(alphabet: &Alphabet, s: &ObservedSequence) -> Result<()> {
    match s.letters().iter().find(|&&x| x >= alphabet.len()) {
        Some(&index) => Err(Error::IndexOutOfRange {
            index,
            size: alphabet.len(),
        }),
        None => Ok(()),
    }
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "deletion probability must be in [0, 1), got {p}"
        )));
    }
    Ok(())
}

// Exact sum_i psi[n][m](s_i, i) and the number of entries read.
fn psi_sum(model: &RecognitionModel, s: &ObservedSequence, n: usize) -> (u128, usize) {
    let m = s.len();
    match model.psi().get(n, m) {
        Some(psi) => {
            let sum = s
                .letters()
                .iter()
                .enumerate()
                .map(|(i, &sym)| psi.get(sym, i) as u128)
                .sum();
            (sum, m)
        }
        None => (0, 0),
    }
}

fn gamma(model: &RecognitionModel, s: &ObservedSequence, n: usize) -> (f64, usize) {
    let m = s.len();
    if m == 0 {
        // one empty subsequence per word
        return (model.words_of_length(n) as f64, 0);
    }
    if n < m {
        return (0.0, 0);
    }
    let (sum, lookups) = psi_sum(model, s, n);
    (sum as f64 / m as f64, lookups)
}

/// `gamma_n(S)`: zero when no word has length `n` or `n < |S|`; for the
/// empty observation it is the number of length-`n` words.
pub fn similarity_score(model: &RecognitionModel, s: &ObservedSequence, n: usize) -> Result<f64> {
    model.ensure_finalized()?;
    check_sequence(model.alphabet(), s)?;
    Ok(gamma(model, s, n).0)
}

/// `m * gamma_n(S)` as an exact integer (`m = 0` gives the word count).
pub fn similarity_sum(model: &RecognitionModel, s: &ObservedSequence, n: usize) -> Result<u128> {
    model.ensure_finalized()?;
    check_sequence(model.alphabet(), s)?;
    if s.is_empty() {
        return Ok(model.words_of_length(n) as u128);
    }
    Ok(psi_sum(model, s, n).0)
}

/// The total similarity score. `p = 0` keeps only the exact-length term
/// `n = |S|`; `p = 1` is rejected.
pub fn total_score(model: &RecognitionModel, s: &ObservedSequence, p: f64) -> Result<ScoreBreakdown> {
    model.ensure_finalized()?;
    check_sequence(model.alphabet(), s)?;
    check_probability(p)?;
    if model.vocab_size() == 0 {
        return Err(Error::EmptyVocabulary);
    }
    let m = s.len();
    let max_len = model.max_len();
    if m > max_len {
        return Ok(ScoreBreakdown::zero(model.label()));
    }
    let prefactor = model.prior() / model.vocab_size() as f64;

    let mut per_length = Vec::new();
    let mut lookups = 0;
    let mut acc = 0.0f64;
    if p == 0.0 {
        let (g, l) = gamma(model, s, m);
        lookups += l;
        if model.words_of_length(m) > 0 {
            per_length.push((m, g));
        }
        acc = g;
    } else {
        // Horner in descending n: acc = sum_n gamma_n p^(n - m)
        let lengths: Vec<usize> = model.lengths().filter(|&n| n >= m).collect();
        let mut next = max_len;
        for &n in lengths.iter().rev() {
            acc *= p.powi((next - n) as i32);
            next = n;
            let (g, l) = gamma(model, s, n);
            lookups += l;
            acc += g;
            per_length.push((n, g));
        }
        acc *= p.powi((next - m) as i32);
        per_length.reverse();
    }

    let (total, log_total) = if acc > 0.0 && prefactor > 0.0 {
        let log_pm = if m == 0 || p == 0.0 { 0.0 } else { m as f64 * p.ln() };
        let log_total = prefactor.ln() + log_pm + acc.ln();
        let pm = if p == 0.0 { 1.0 } else { p.powi(m as i32) };
        (prefactor * pm * acc, log_total)
    } else {
        (0.0, f64::NEG_INFINITY)
    };
    Ok(ScoreBreakdown {
        label: model.label().to_string(),
        per_length,
        total,
        log_total,
        lookups,
    })
}

/// Picks the best of a set of log-domain scores. The two best are a draw
/// when `|J1 - J2| <= eps * max(J1, J2)`, evaluated as a log difference.
pub fn decide<'a>(scores: impl IntoIterator<Item = (&'a str, f64)>, epsilon: f64) -> Outcome {
    let mut best: Option<(&str, f64)> = None;
    let mut second = f64::NEG_INFINITY;
    let mut seen = 0usize;
    for (label, score) in scores {
        seen += 1;
        match best {
            Some((_, b)) if score <= b => second = second.max(score),
            Some((_, b)) => {
                second = b;
                best = Some((label, score));
            }
            None => best = Some((label, score)),
        }
    }
    let Some((label, top)) = best else {
        return Outcome::Draw;
    };
    if seen == 1 {
        return Outcome::Label(label.to_string());
    }
    if top == second {
        return Outcome::Draw;
    }
    let threshold = if epsilon >= 1.0 {
        f64::INFINITY
    } else {
        -(-epsilon).ln_1p()
    };
    if top - second <= threshold {
        Outcome::Draw
    } else {
        Outcome::Label(label.to_string())
    }
}

pub(crate) fn shared_alphabet<'a>(mut alphabets: impl Iterator<Item = &'a Alphabet>) -> Result<&'a Alphabet> {
    let first = alphabets
        .next()
        .ok_or_else(|| Error::InvalidArgument("need at least one vocabulary".into()))?;
    for a in alphabets {
        if a != first {
            return Err(Error::AlphabetMismatch {
                left: first.to_string(),
                right: a.to_string(),
            });
        }
    }
    Ok(first)
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::InvalidArgument(format!("epsilon must be >= 0, got {epsilon}")));
    }
    Ok(())
}

/// Subsequence-histogram classification.
pub fn classify(
    models: &[RecognitionModel],
    s: &ObservedSequence,
    p: f64,
    epsilon: f64,
) -> Result<Decision> {
    check_epsilon(epsilon)?;
    shared_alphabet(models.iter().map(RecognitionModel::alphabet))?;
    let scores = models
        .iter()
        .map(|m| total_score(m, s, p))
        .collect::<Result<Vec<_>>>()?;
    let outcome = decide(scores.iter().map(|b| (b.label.as_str(), b.log_total)), epsilon);
    Ok(Decision {
        outcome,
        scores,
        method: Method::SubsequenceHistogram,
    })
}

/// Order-agnostic baseline: log-likelihood of the observed symbols under
/// each vocabulary's overall symbol frequencies, plus the log prior.
pub fn classify_regular_histogram(
    models: &[RecognitionModel],
    s: &ObservedSequence,
    epsilon: f64,
) -> Result<Decision> {
    check_epsilon(epsilon)?;
    let alphabet = shared_alphabet(models.iter().map(RecognitionModel::alphabet))?;
    check_sequence(alphabet, s)?;
    let mut scores = Vec::with_capacity(models.len());
    for model in models {
        let totals = model.symbol_totals();
        let letters: u64 = totals.iter().sum();
        if letters == 0 {
            return Err(Error::EmptyVocabulary);
        }
        let mut log_score = model.prior().ln();
        for &sym in s.letters() {
            log_score += (totals[sym] as f64 / letters as f64).ln();
        }
        scores.push(ScoreBreakdown {
            label: model.label().to_string(),
            per_length: Vec::new(),
            total: log_score.exp(),
            log_total: log_score,
            lookups: s.len(),
        });
    }
    let outcome = decide(scores.iter().map(|b| (b.label.as_str(), b.log_total)), epsilon);
    Ok(Decision {
        outcome,
        scores,
        method: Method::RegularHistogram,
    })
}
