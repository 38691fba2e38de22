//! Exact ground truth: embedding counts, the MAP discriminant, and the
//! error analysis for equal-size, equal-length, equiprobable vocabularies.

use crate::error::{Error, Result};
use crate::learning::RecognitionModel;
use crate::recognition::{self, check_epsilon, decide, shared_alphabet, Decision, Method, ScoreBreakdown};
use crate::vocab::{ObservedSequence, Vocabulary, Word};

/// Longest word the exact counter accepts; `C(128, 64)` still fits in `u128`.
pub const MAX_EXACT_LEN: usize = 128;

/// Default cap on the number of observations `error_analysis` enumerates.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 1 << 22;

/// Number of strictly increasing index maps embedding `S` into `W`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EmbeddingCount(u128);

impl EmbeddingCount {
    pub fn value(self) -> u128 {
        self.0
    }
}

/// Embedding count over raw index slices, O(|s| * |w|).
pub fn count_embeddings_raw(s: &[usize], w: &[usize]) -> Result<u128> {
    let m = s.len();
    if m > w.len() {
        return Ok(0);
    }
    if w.len() > MAX_EXACT_LEN {
        return Err(Error::Overflow("embedding count (word longer than 128)"));
    }
    // row[i] = number of embeddings of s[..i] into the prefix of w seen so far
    let mut row = vec![0u128; m + 1];
    row[0] = 1;
    for &c in w {
        for i in (1..=m).rev() {
            if s[i - 1] == c {
                row[i] = row[i]
                    .checked_add(row[i - 1])
                    .ok_or(Error::Overflow("embedding count"))?;
            }
        }
    }
    Ok(row[m])
}

pub fn count_embeddings(s: &ObservedSequence, w: &Word) -> Result<EmbeddingCount> {
    count_embeddings_raw(s.letters(), w.letters()).map(EmbeddingCount)
}

/// `P(S | W) = psi(S, W) p^(n-m) (1-p)^m`.
pub fn channel_likelihood(s: &ObservedSequence, w: &Word, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("p must be in [0, 1], got {p}")));
    }
    let psi = count_embeddings(s, w)?.value();
    if psi == 0 {
        return Ok(0.0);
    }
    let (n, m) = (w.len() as i32, s.len() as i32);
    Ok(psi as f64 * p.powi(n - m) * (1.0 - p).powi(m))
}

/// Exact `sum_{W in V(n)} psi(S, W)` for every length `n >= |S|` present.
fn embedding_totals(v: &Vocabulary, s: &ObservedSequence) -> Result<Vec<(usize, u128)>> {
    let mut out = Vec::new();
    for n in v.lengths().filter(|&n| n >= s.len()) {
        let mut total: u128 = 0;
        for w in v.by_length(n) {
            total = total
                .checked_add(count_embeddings_raw(s.letters(), w.letters())?)
                .ok_or(Error::Overflow("embedding total"))?;
        }
        out.push((n, total));
    }
    Ok(out)
}

/// The MAP discriminant as a breakdown; `per_length` holds the exact
/// embedding totals per word length.
pub fn map_score(v: &Vocabulary, s: &ObservedSequence, p: f64) -> Result<ScoreBreakdown> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("p must be in [0, 1], got {p}")));
    }
    if let Some(&bad) = s.letters().iter().find(|&&x| x >= v.alphabet().len()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            size: v.alphabet().len(),
        });
    }
    let m = s.len();
    let totals = embedding_totals(v, s)?;
    let lookups = 0;
    // acc = sum_n A_n p^(n - m), or only n = m in exact-match mode
    let acc: f64 = if p == 0.0 {
        totals
            .iter()
            .find(|&&(n, _)| n == m)
            .map_or(0.0, |&(_, a)| a as f64)
    } else {
        totals
            .iter()
            .map(|&(n, a)| a as f64 * p.powi((n - m) as i32))
            .sum()
    };
    let prefactor = v.prior() / v.len() as f64;
    let (total, log_total) = if acc > 0.0 && prefactor > 0.0 {
        let pm = if p == 0.0 { 1.0 } else { p.powi(m as i32) };
        let log_pm = if p == 0.0 || m == 0 { 0.0 } else { m as f64 * p.ln() };
        (prefactor * pm * acc, prefactor.ln() + log_pm + acc.ln())
    } else {
        (0.0, f64::NEG_INFINITY)
    };
    Ok(ScoreBreakdown {
        label: v.label().to_string(),
        per_length: totals.into_iter().map(|(n, a)| (n, a as f64)).collect(),
        total,
        log_total,
        lookups,
    })
}

/// `J(S) = prior / |V| * sum_n p^n sum_{W in V(n)} psi(S, W)`.
pub fn map_discriminant(v: &Vocabulary, s: &ObservedSequence, p: f64) -> Result<f64> {
    map_score(v, s, p).map(|b| b.total)
}

/// Exact MAP classification by full enumeration of each vocabulary.
pub fn classify_map(
    vocabularies: &[Vocabulary],
    s: &ObservedSequence,
    p: f64,
    epsilon: f64,
) -> Result<Decision> {
    check_epsilon(epsilon)?;
    shared_alphabet(vocabularies.iter().map(Vocabulary::alphabet))?;
    let scores = vocabularies
        .iter()
        .map(|v| map_score(v, s, p))
        .collect::<Result<Vec<_>>>()?;
    let outcome = decide(scores.iter().map(|b| (b.label.as_str(), b.log_total)), epsilon);
    Ok(Decision {
        outcome,
        scores,
        method: Method::ExactMap,
    })
}

/// Per-observation-length terms of the error analysis.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorTerm {
    pub m: usize,
    /// `sum_{|S|=m} min_k sum_{W in V_k} psi(S, W)`.
    pub mu: u128,
    /// Twice the histogram-classifier misclassification weight, so that
    /// ties (which count half to each side) stay integral.
    pub lambda_halves: u128,
    /// `sum_{|S|=m} sqrt(gamma_1(S) * gamma_2(S))`.
    pub sqrt_sum: f64,
}

impl ErrorTerm {
    pub fn lambda(&self) -> f64 {
        self.lambda_halves as f64 / 2.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorAnalysisReport {
    pub labels: (String, String),
    pub p: f64,
    /// Common word length.
    pub word_len: usize,
    /// Common vocabulary size.
    pub vocab_size: usize,
    pub terms: Vec<ErrorTerm>,
    /// Exact MAP error probability.
    pub p_map: f64,
    /// Error probability of the subsequence-histogram classifier.
    pub lambda_error: f64,
    /// Upper bound on `lambda_error`.
    pub sqrt_bound: f64,
}

impl ErrorAnalysisReport {
    pub fn term(&self, m: usize) -> Option<&ErrorTerm> {
        self.terms.get(m)
    }

    /// `p_map <= lambda_error <= sqrt_bound`, all within `[0, 1]`, up to a
    /// relative float tolerance.
    pub fn bound_chain_holds(&self) -> bool {
        let tol = 1e-12;
        let le = |a: f64, b: f64| a <= b + tol * b.abs().max(1.0);
        le(0.0, self.p_map)
            && le(self.p_map, self.lambda_error)
            && le(self.lambda_error, self.sqrt_bound)
            && le(self.p_map, 0.5)
            && le(self.lambda_error, 1.0)
    }

    /// Per-m detail table.
    pub fn detail_csv(&self) -> String {
        let mut out = String::from("m,mu,lambda,sqrt_sum\n");
        for t in &self.terms {
            out.push_str(&format!("{},{},{},{}\n", t.m, t.mu, t.lambda(), t.sqrt_sum));
        }
        out
    }
}

/// Calls `f` with every sequence in `0..sigma` of length `m`, in
/// lexicographic order.
pub fn for_each_sequence(sigma: usize, m: usize, mut f: impl FnMut(&[usize])) {
    let mut s = vec![0usize; m];
    loop {
        f(&s);
        let mut k = m;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            s[k] += 1;
            if s[k] < sigma {
                break;
            }
            s[k] = 0;
        }
    }
}

/// Exact error analysis for two equiprobable vocabularies with the same
/// number of words, all of one common length. Enumerates every observation
/// of every length up to that word length.
pub fn error_analysis(v1: &Vocabulary, v2: &Vocabulary, p: f64) -> Result<ErrorAnalysisReport> {
    error_analysis_with_budget(v1, v2, p, DEFAULT_ENUMERATION_BUDGET)
}

pub fn error_analysis_with_budget(
    v1: &Vocabulary,
    v2: &Vocabulary,
    p: f64,
    budget: u128,
) -> Result<ErrorAnalysisReport> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Precondition(format!("p must be in [0, 1], got {p}")));
    }
    let alphabet = shared_alphabet([v1.alphabet(), v2.alphabet()].into_iter())?;
    if v1.prior() != v2.prior() {
        return Err(Error::Precondition("vocabularies must be equiprobable".into()));
    }
    if v1.len() != v2.len() {
        return Err(Error::Precondition(format!(
            "vocabularies must have equal size ({} vs {})",
            v1.len(),
            v2.len()
        )));
    }
    let lengths: Vec<usize> = v1.lengths().chain(v2.lengths()).collect();
    let n = lengths[0];
    if lengths.iter().any(|&l| l != n) {
        return Err(Error::Precondition("all words must share one length".into()));
    }
    let sigma = alphabet.len() as u128;
    let mut needed: u128 = 0;
    let mut power: u128 = 1;
    for _ in 0..=n {
        needed = needed.saturating_add(power);
        power = power.saturating_mul(sigma);
    }
    if needed > budget {
        return Err(Error::Budget { needed, budget });
    }

    let m1 = RecognitionModel::learn(v1)?;
    let m2 = RecognitionModel::learn(v2)?;
    let big_n = v1.len();

    let mut terms = Vec::with_capacity(n + 1);
    let mut failure: Option<Error> = None;
    for m in 0..=n {
        let mut term = ErrorTerm {
            m,
            mu: 0,
            lambda_halves: 0,
            sqrt_sum: 0.0,
        };
        for_each_sequence(alphabet.len(), m, |letters| {
            if failure.is_some() {
                return;
            }
            let mut step = || -> Result<()> {
                let a1 = total_embeddings(v1, letters)?;
                let a2 = total_embeddings(v2, letters)?;
                let s = ObservedSequence::from_trusted(letters.to_vec());
                // m * gamma as exact integers: comparisons are exact
                let g1 = recognition::similarity_sum(&m1, &s, n)?;
                let g2 = recognition::similarity_sum(&m2, &s, n)?;
                term.mu += a1.min(a2);
                term.lambda_halves += match g1.cmp(&g2) {
                    std::cmp::Ordering::Less => 2 * a1,
                    std::cmp::Ordering::Greater => 2 * a2,
                    std::cmp::Ordering::Equal => a1 + a2,
                };
                let scale = m.max(1) as f64;
                term.sqrt_sum += ((g1 as f64 / scale) * (g2 as f64 / scale)).sqrt();
                Ok(())
            };
            if let Err(e) = step() {
                failure = Some(e);
            }
        });
        if let Some(e) = failure.take() {
            return Err(e);
        }
        terms.push(term);
    }

    let weight = |m: usize| p.powi((n - m) as i32) * (1.0 - p).powi(m as i32);
    let half_n = 2.0 * big_n as f64;
    let p_map = terms.iter().map(|t| weight(t.m) * t.mu as f64 / half_n).sum();
    let lambda_error = terms.iter().map(|t| weight(t.m) * t.lambda() / half_n).sum();
    let sqrt_bound = terms
        .iter()
        .map(|t| weight(t.m) * t.sqrt_sum / big_n as f64)
        .sum();

    Ok(ErrorAnalysisReport {
        labels: (v1.label().to_string(), v2.label().to_string()),
        p,
        word_len: n,
        vocab_size: big_n,
        terms,
        p_map,
        lambda_error,
        sqrt_bound,
    })
}

fn total_embeddings(v: &Vocabulary, s: &[usize]) -> Result<u128> {
    let mut total: u128 = 0;
    for w in v.words() {
        total = total
            .checked_add(count_embeddings_raw(s, w.letters())?)
            .ok_or(Error::Overflow("embedding total"))?;
    }
    Ok(total)
}
