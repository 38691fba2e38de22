//! Offline learning: positional histograms, subsequence histograms and the
//! persisted [`RecognitionModel`].
//!
//! For every word length `n` present in a vocabulary, `phi[n]` is the
//! `|alphabet| x n` matrix counting how many length-`n` words carry symbol
//! `s` at position `j`. From it, `psi[n][m]` is the `|alphabet| x m`
//! positional histogram of the multiset of all length-`m` subsequences of
//! those words:
//!
//! ```text
//! psi[n][m](s, i) = sum_j phi[n](s, j) * alpha(n, m, j, i)
//! ```
//!
//! Lengths with no words store nothing and read as zero.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::combinatorics::AlphaTable;
use crate::error::{Error, Result};
use crate::vocab::{Alphabet, Vocabulary, Word};

pub const FORMAT_VERSION: u32 = 1;

/// Dense row-major matrix of exact counts; rows are symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl CountMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CountMatrix {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::ModelFormat("ragged matrix".into()));
        }
        Ok(CountMatrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Entry at (symbol, column), both 0-based.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    fn get_mut(&mut self, row: usize, col: usize) -> &mut u64 {
        &mut self.data[row * self.cols + col]
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        self.data.chunks(self.cols.max(1)).map(<[u64]>::to_vec).collect()
    }

    pub fn column_sum(&self, col: usize) -> u64 {
        (0..self.rows).map(|r| self.get(r, col)).sum()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    fn add_assign(&mut self, other: &CountMatrix) -> Result<()> {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a = a.checked_add(*b).ok_or(Error::Overflow("histogram merge"))?;
        }
        Ok(())
    }
}

/// `phi[n]` for every word length present.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PositionalHistogram {
    alphabet_size: usize,
    by_len: BTreeMap<usize, CountMatrix>,
}

impl PositionalHistogram {
    pub fn new(alphabet_size: usize) -> Self {
        PositionalHistogram {
            alphabet_size,
            by_len: BTreeMap::new(),
        }
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn add_word(&mut self, w: &Word) -> Result<()> {
        if let Some(&bad) = w.letters().iter().find(|&&s| s >= self.alphabet_size) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                size: self.alphabet_size,
            });
        }
        let n = w.len();
        let sigma = self.alphabet_size;
        let phi = self
            .by_len
            .entry(n)
            .or_insert_with(|| CountMatrix::zeros(sigma, n));
        for (j, &s) in w.letters().iter().enumerate() {
            let cell = phi.get_mut(s, j);
            *cell = cell.checked_add(1).ok_or(Error::Overflow("phi"))?;
        }
        Ok(())
    }

    /// Entrywise sum; exact, so sharded learning merges losslessly.
    pub fn merge(&mut self, other: &PositionalHistogram) -> Result<()> {
        if other.alphabet_size != self.alphabet_size {
            return Err(Error::InvalidArgument("alphabet sizes differ".into()));
        }
        for (&n, m) in &other.by_len {
            match self.by_len.get_mut(&n) {
                Some(mine) => mine.add_assign(m)?,
                None => {
                    self.by_len.insert(n, m.clone());
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, n: usize) -> Option<&CountMatrix> {
        self.by_len.get(&n)
    }

    /// Entry `phi[n](symbol, j)` with 1-based `j`; zero for absent lengths.
    pub fn count(&self, n: usize, symbol: usize, j: usize) -> u64 {
        self.by_len.get(&n).map_or(0, |m| m.get(symbol, j - 1))
    }

    pub fn lengths(&self) -> impl Iterator<Item = usize> + '_ {
        self.by_len.keys().copied()
    }

    pub fn max_len(&self) -> usize {
        self.by_len.keys().next_back().copied().unwrap_or(0)
    }

    /// Number of words of length `n`.
    pub fn words_of_length(&self, n: usize) -> u64 {
        self.by_len.get(&n).map_or(0, |m| m.column_sum(0))
    }

    pub fn total_words(&self) -> u64 {
        self.by_len.values().map(|m| m.column_sum(0)).sum()
    }
}

pub fn learn_positional(v: &Vocabulary) -> PositionalHistogram {
    let mut phi = PositionalHistogram::new(v.alphabet().len());
    for w in v.words() {
        phi.add_word(w).expect("vocabulary words are valid");
    }
    phi
}

/// `psi[n][m]` for every present `n` and every `1 <= m <= n`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SubsequenceHistogram {
    // by_len[n][m - 1] is psi[n][m]
    by_len: BTreeMap<usize, Vec<CountMatrix>>,
}

impl SubsequenceHistogram {
    pub fn get(&self, n: usize, m: usize) -> Option<&CountMatrix> {
        if m == 0 {
            return None;
        }
        self.by_len.get(&n).and_then(|v| v.get(m - 1))
    }

    pub fn lengths(&self) -> impl Iterator<Item = usize> + '_ {
        self.by_len.keys().copied()
    }

    fn storage(&self) -> usize {
        self.by_len.values().flatten().map(CountMatrix::len).sum()
    }
}

fn psi_for_length(phi_n: &CountMatrix, n: usize, alpha: &AlphaTable) -> Result<Vec<CountMatrix>> {
    let sigma = phi_n.rows();
    let mut out = Vec::with_capacity(n);
    for m in 1..=n {
        let mut psi = CountMatrix::zeros(sigma, m);
        for i in 1..=m {
            // alpha vanishes unless i <= j <= n - m + i
            let weights = (i..=n - m + i)
                .map(|j| alpha.alpha(n, m, j, i).map(|a| (j, a)))
                .collect::<Result<Vec<_>>>()?;
            for s in 0..sigma {
                let mut acc: u64 = 0;
                for &(j, a) in &weights {
                    let term = phi_n
                        .get(s, j - 1)
                        .checked_mul(a)
                        .ok_or(Error::Overflow("psi"))?;
                    acc = acc.checked_add(term).ok_or(Error::Overflow("psi"))?;
                }
                *psi.get_mut(s, i - 1) = acc;
            }
        }
        out.push(psi);
    }
    Ok(out)
}

pub fn learn_subsequence(phi: &PositionalHistogram, alpha: &AlphaTable) -> Result<SubsequenceHistogram> {
    if phi.max_len() > alpha.max_n() {
        return Err(Error::InvalidArgument(format!(
            "alpha table covers n <= {}, histogram needs {}",
            alpha.max_n(),
            phi.max_len()
        )));
    }
    let mut by_len = BTreeMap::new();
    for (&n, phi_n) in &phi.by_len {
        by_len.insert(n, psi_for_length(phi_n, n, alpha)?);
    }
    Ok(SubsequenceHistogram { by_len })
}

/// Everything recognition needs for one vocabulary.
#[derive(Clone, Debug)]
pub struct RecognitionModel {
    label: String,
    alphabet: Alphabet,
    prior: f64,
    vocab_size: u64,
    phi: PositionalHistogram,
    psi: SubsequenceHistogram,
    pending: BTreeSet<usize>,
}

impl PartialEq for RecognitionModel {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label
            && self.alphabet == other.alphabet
            && self.prior.to_bits() == other.prior.to_bits()
            && self.vocab_size == other.vocab_size
            && self.phi == other.phi
            && self.psi == other.psi
            && self.pending == other.pending
    }
}

impl RecognitionModel {
    /// Runs both learning passes over `v`.
    pub fn learn(v: &Vocabulary) -> Result<Self> {
        let phi = learn_positional(v);
        let alpha = AlphaTable::new(phi.max_len());
        let psi = learn_subsequence(&phi, &alpha)?;
        Ok(RecognitionModel {
            label: v.label().to_string(),
            alphabet: v.alphabet().clone(),
            prior: v.prior(),
            vocab_size: v.len() as u64,
            phi,
            psi,
            pending: BTreeSet::new(),
        })
    }

    /// A model with no words, to be filled by [`incremental_add`](Self::incremental_add).
    pub fn empty(label: impl Into<String>, alphabet: Alphabet, prior: f64) -> Self {
        RecognitionModel {
            label: label.into(),
            phi: PositionalHistogram::new(alphabet.len()),
            alphabet,
            prior,
            vocab_size: 0,
            psi: SubsequenceHistogram::default(),
            pending: BTreeSet::new(),
        }
    }

    /// Counts one more word. The subsequence histogram of its length is
    /// marked stale until [`finalize`](Self::finalize). The model keeps no
    /// word list, so adding a word twice counts it twice.
    pub fn incremental_add(&mut self, w: &Word) -> Result<()> {
        self.phi.add_word(w)?;
        self.vocab_size += 1;
        self.pending.insert(w.len());
        Ok(())
    }

    /// Recomputes the subsequence histograms of every length touched since
    /// the last call.
    pub fn finalize(&mut self) -> Result<()> {
        if self.pending.is_empty() {
            return Ok(());
        }
        let alpha = AlphaTable::new(self.phi.max_len());
        for &n in &self.pending {
            let phi_n = self.phi.get(n).expect("pending length has a histogram");
            self.psi.by_len.insert(n, psi_for_length(phi_n, n, &alpha)?);
        }
        self.pending.clear();
        Ok(())
    }

    pub fn is_finalized(&self) -> bool {
        self.pending.is_empty()
    }

    pub(crate) fn ensure_finalized(&self) -> Result<()> {
        if self.pending.is_empty() {
            Ok(())
        } else {
            Err(Error::StaleModel {
                label: self.label.clone(),
            })
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn prior(&self) -> f64 {
        self.prior
    }

    pub fn set_prior(&mut self, prior: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&prior) {
            return Err(Error::InvalidArgument(format!("prior {prior} not in [0,1]")));
        }
        self.prior = prior;
        Ok(())
    }

    pub fn set_label(&mut self, label: impl Into<String>) {
        self.label = label.into();
    }

    pub fn vocab_size(&self) -> u64 {
        self.vocab_size
    }

    pub fn max_len(&self) -> usize {
        self.phi.max_len()
    }

    pub fn lengths(&self) -> impl Iterator<Item = usize> + '_ {
        self.phi.lengths()
    }

    pub fn phi(&self) -> &PositionalHistogram {
        &self.phi
    }

    pub fn psi(&self) -> &SubsequenceHistogram {
        &self.psi
    }

    pub fn words_of_length(&self, n: usize) -> u64 {
        self.phi.words_of_length(n)
    }

    /// Total number of stored counts across all phi and psi matrices.
    pub fn storage_counts(&self) -> usize {
        self.phi.by_len.values().map(CountMatrix::len).sum::<usize>() + self.psi.storage()
    }

    /// Total occurrences of each symbol across all words.
    pub fn symbol_totals(&self) -> Vec<u64> {
        let mut totals = vec![0u64; self.alphabet.len()];
        for m in self.phi.by_len.values() {
            for (s, t) in totals.iter_mut().enumerate() {
                *t += (0..m.cols()).map(|j| m.get(s, j)).sum::<u64>();
            }
        }
        totals
    }

    /// Re-derives psi from phi and compares.
    pub fn check_consistency(&self) -> Result<()> {
        self.ensure_finalized()?;
        if self.phi.total_words() != self.vocab_size {
            return Err(Error::Inconsistent(format!(
                "vocab_size {} but histograms hold {} words",
                self.vocab_size,
                self.phi.total_words()
            )));
        }
        let alpha = AlphaTable::new(self.phi.max_len());
        let expected = learn_subsequence(&self.phi, &alpha)?;
        if expected != self.psi {
            let (n, m) = expected
                .by_len
                .iter()
                .flat_map(|(&n, v)| (1..=v.len()).map(move |m| (n, m)))
                .find(|&(n, m)| expected.get(n, m) != self.psi.get(n, m))
                .unwrap_or((0, 0));
            return Err(Error::Inconsistent(format!(
                "psi[{n},{m}] does not match its recomputation from phi"
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        self.ensure_finalized()?;
        let mut file = ModelFile {
            format_version: FORMAT_VERSION,
            label: self.label.clone(),
            alphabet: self.alphabet.clone(),
            prior: self.prior,
            vocab_size: self.vocab_size,
            max_len: self.max_len(),
            phi: self
                .phi
                .by_len
                .iter()
                .map(|(n, m)| (n.to_string(), m.to_rows()))
                .collect(),
            psi: self
                .psi
                .by_len
                .iter()
                .flat_map(|(n, v)| {
                    v.iter()
                        .enumerate()
                        .map(move |(k, m)| (format!("{},{}", n, k + 1), m.to_rows()))
                })
                .collect(),
            checksum: None,
        };
        file.checksum = Some(file.digest()?);
        serde_json::to_string_pretty(&file).map_err(|e| Error::ModelFormat(e.to_string()))
    }

    pub fn from_json(text: &str, mode: LoadMode) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        let version = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::ModelFormat("missing format_version".into()))?;
        if version != FORMAT_VERSION as u64 {
            return Err(Error::Version {
                found: version as u32,
                expected: FORMAT_VERSION,
            });
        }
        let file: ModelFile =
            serde_json::from_value(value).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if let Some(stored) = &file.checksum {
            let computed = file.digest()?;
            if *stored != computed {
                return Err(Error::Checksum {
                    stored: stored.clone(),
                    computed,
                });
            }
        }
        let model = file.into_model()?;
        if mode == LoadMode::Strict {
            model.check_consistency()?;
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = self.to_json()?;
        text.push('\n');
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum LoadMode {
    /// Recompute psi from phi and reject mismatches.
    #[default]
    Strict,
    /// Only check shapes.
    Lenient,
}

pub fn save_model(model: &RecognitionModel, path: impl AsRef<Path>) -> Result<()> {
    model.save(path)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<RecognitionModel> {
    load_model_with(path, LoadMode::Strict)
}

pub fn load_model_with(path: impl AsRef<Path>, mode: LoadMode) -> Result<RecognitionModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RecognitionModel::from_json(&text, mode)
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    label: String,
    alphabet: Alphabet,
    prior: f64,
    vocab_size: u64,
    max_len: usize,
    phi: BTreeMap<String, Vec<Vec<u64>>>,
    psi: BTreeMap<String, Vec<Vec<u64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    checksum: Option<String>,
}

impl ModelFile {
    fn digest(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Payload<'a> {
            format_version: u32,
            label: &'a str,
            alphabet: &'a Alphabet,
            prior: f64,
            vocab_size: u64,
            max_len: usize,
            phi: &'a BTreeMap<String, Vec<Vec<u64>>>,
            psi: &'a BTreeMap<String, Vec<Vec<u64>>>,
        }
        let payload = Payload {
            format_version: self.format_version,
            label: &self.label,
            alphabet: &self.alphabet,
            prior: self.prior,
            vocab_size: self.vocab_size,
            max_len: self.max_len,
            phi: &self.phi,
            psi: &self.psi,
        };
        let bytes = serde_json::to_vec(&payload).map_err(|e| Error::ModelFormat(e.to_string()))?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }

    fn into_model(self) -> Result<RecognitionModel> {
        let sigma = self.alphabet.len();
        if !(0.0..=1.0).contains(&self.prior) {
            return Err(Error::ModelFormat(format!("prior {} not in [0,1]", self.prior)));
        }
        let mut phi = PositionalHistogram::new(sigma);
        for (key, rows) in &self.phi {
            let n: usize = key
                .parse()
                .map_err(|_| Error::ModelFormat(format!("bad phi key {key:?}")))?;
            let m = CountMatrix::from_rows(rows)?;
            if n == 0 || m.rows() != sigma || m.cols() != n {
                return Err(Error::ModelFormat(format!("phi[{n}] has the wrong shape")));
            }
            phi.by_len.insert(n, m);
        }
        if phi.max_len() != self.max_len {
            return Err(Error::ModelFormat(format!(
                "max_len {} but longest phi is {}",
                self.max_len,
                phi.max_len()
            )));
        }
        let mut psi = SubsequenceHistogram::default();
        for (key, rows) in &self.psi {
            let (n, m) = key
                .split_once(',')
                .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)))
                .ok_or_else(|| Error::ModelFormat(format!("bad psi key {key:?}")))?;
            let mat = CountMatrix::from_rows(rows)?;
            if m == 0 || m > n || mat.rows() != sigma || mat.cols() != m {
                return Err(Error::ModelFormat(format!("psi[{n},{m}] has the wrong shape")));
            }
            let slot = psi.by_len.entry(n).or_insert_with(|| vec![CountMatrix::zeros(0, 0); n]);
            slot[m - 1] = mat;
        }
        let phi_lengths: Vec<usize> = phi.lengths().collect();
        let psi_lengths: Vec<usize> = psi.lengths().collect();
        let complete = psi
            .by_len
            .iter()
            .all(|(_, v)| v.iter().all(|m| m.rows() == sigma));
        if phi_lengths != psi_lengths || !complete {
            return Err(Error::ModelFormat("psi does not cover every (n, m) of phi".into()));
        }
        Ok(RecognitionModel {
            label: self.label,
            alphabet: self.alphabet,
            prior: self.prior,
            vocab_size: self.vocab_size,
            phi,
            psi,
            pending: BTreeSet::new(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::Vocabulary;
    use proptest::prelude::*;

    fn theta1() -> Vocabulary {
        let a = Alphabet::from_chars("01").unwrap();
        Vocabulary::from_strs("theta1", a, &["0101", "1100"], 0.5).unwrap()
    }

    fn theta2() -> Vocabulary {
        let a = Alphabet::from_chars("01").unwrap();
        Vocabulary::from_strs("theta2", a, &["1010", "0011"], 0.5).unwrap()
    }

    fn rows(m: &CountMatrix) -> Vec<Vec<u64>> {
        m.to_rows()
    }

    #[test]
    fn positional_histograms_of_example_pair() {
        let p1 = learn_positional(&theta1());
        assert_eq!(rows(p1.get(4).unwrap()), vec![vec![1, 0, 2, 1], vec![1, 2, 0, 1]]);
        let p2 = learn_positional(&theta2());
        assert_eq!(rows(p2.get(4).unwrap()), vec![vec![1, 2, 0, 1], vec![1, 0, 2, 1]]);
        for n in 1..4 {
            assert!(p1.get(n).is_none());
            assert_eq!(p1.count(n, 0, 1), 0);
        }
    }

    #[test]
    fn positional_single_word() {
        let a = Alphabet::from_chars("01").unwrap();
        let v = Vocabulary::from_strs("v", a, &["01"], 1.0).unwrap();
        assert_eq!(rows(learn_positional(&v).get(2).unwrap()), vec![vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn subsequence_histograms_of_example_pair() {
        let m1 = RecognitionModel::learn(&theta1()).unwrap();
        let psi = m1.psi();
        assert_eq!(rows(psi.get(4, 1).unwrap()), vec![vec![4], vec![4]]);
        assert_eq!(rows(psi.get(4, 2).unwrap()), vec![vec![5, 7], vec![7, 5]]);
        assert_eq!(rows(psi.get(4, 3).unwrap()), vec![vec![3, 4, 5], vec![5, 4, 3]]);
        assert_eq!(psi.get(4, 4).unwrap(), m1.phi().get(4).unwrap());

        let m2 = RecognitionModel::learn(&theta2()).unwrap();
        let psi = m2.psi();
        assert_eq!(rows(psi.get(4, 1).unwrap()), vec![vec![4], vec![4]]);
        assert_eq!(rows(psi.get(4, 2).unwrap()), vec![vec![7, 5], vec![5, 7]]);
        assert_eq!(rows(psi.get(4, 3).unwrap()), vec![vec![5, 4, 3], vec![3, 4, 5]]);
        assert_eq!(rows(psi.get(4, 4).unwrap()), vec![vec![1, 2, 0, 1], vec![1, 0, 2, 1]]);
    }

    #[test]
    fn learn_subsequence_needs_a_large_enough_table() {
        let phi = learn_positional(&theta1());
        assert!(learn_subsequence(&phi, &AlphaTable::new(3)).is_err());
    }

    #[test]
    fn incremental_single_word() {
        let a = Alphabet::from_chars("01").unwrap();
        let mut m = RecognitionModel::empty("v", a.clone(), 0.5);
        m.incremental_add(&Word::parse("0101", &a).unwrap()).unwrap();
        assert!(!m.is_finalized());
        m.finalize().unwrap();
        assert_eq!(rows(m.phi().get(4).unwrap()), vec![vec![1, 0, 1, 0], vec![0, 1, 0, 1]]);
        assert_eq!(m.vocab_size(), 1);
    }

    #[test]
    fn incremental_order_does_not_matter() {
        let a = Alphabet::from_chars("01").unwrap();
        let w1 = Word::parse("0101", &a).unwrap();
        let w2 = Word::parse("1100", &a).unwrap();
        let mut x = RecognitionModel::empty("theta1", a.clone(), 0.5);
        x.incremental_add(&w1).unwrap();
        x.incremental_add(&w2).unwrap();
        x.finalize().unwrap();
        let mut y = RecognitionModel::empty("theta1", a.clone(), 0.5);
        y.incremental_add(&w2).unwrap();
        y.finalize().unwrap();
        y.incremental_add(&w1).unwrap();
        y.finalize().unwrap();
        assert_eq!(x, y);
        assert_eq!(x, RecognitionModel::learn(&theta1()).unwrap());
    }

    #[test]
    fn incremental_rejects_foreign_letters() {
        let a = Alphabet::from_chars("01").unwrap();
        let big = Alphabet::from_chars("012").unwrap();
        let mut m = RecognitionModel::empty("v", a, 0.5);
        assert!(m.incremental_add(&Word::parse("012", &big).unwrap()).is_err());
    }

    #[test]
    fn stale_model_refuses_serialisation() {
        let a = Alphabet::from_chars("01").unwrap();
        let mut m = RecognitionModel::empty("v", a.clone(), 0.5);
        m.incremental_add(&Word::parse("01", &a).unwrap()).unwrap();
        assert!(matches!(m.to_json(), Err(Error::StaleModel { .. })));
    }

    #[test]
    fn json_round_trip() {
        let m = RecognitionModel::learn(&theta1()).unwrap();
        let back = RecognitionModel::from_json(&m.to_json().unwrap(), LoadMode::Strict).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn file_round_trip() {
        let m = RecognitionModel::learn(&theta1()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        save_model(&m, &path).unwrap();
        assert_eq!(load_model(&path).unwrap(), m);
    }

    fn edit(json: &str, f: impl FnOnce(&mut serde_json::Value)) -> String {
        let mut v: serde_json::Value = serde_json::from_str(json).unwrap();
        f(&mut v);
        serde_json::to_string(&v).unwrap()
    }

    #[test]
    fn unknown_version_rejected() {
        let json = RecognitionModel::learn(&theta1()).unwrap().to_json().unwrap();
        let bad = edit(&json, |v| v["format_version"] = 99.into());
        assert!(matches!(
            RecognitionModel::from_json(&bad, LoadMode::Strict),
            Err(Error::Version { found: 99, .. })
        ));
    }

    #[test]
    fn tampering_breaks_checksum() {
        let json = RecognitionModel::learn(&theta1()).unwrap().to_json().unwrap();
        let bad = edit(&json, |v| v["psi"]["4,2"][0][0] = 6.into());
        assert!(matches!(
            RecognitionModel::from_json(&bad, LoadMode::Strict),
            Err(Error::Checksum { .. })
        ));
    }

    #[test]
    fn strict_load_detects_inconsistent_psi() {
        let json = RecognitionModel::learn(&theta1()).unwrap().to_json().unwrap();
        let bad = edit(&json, |v| {
            v["psi"]["4,2"][0][0] = 6.into();
            v.as_object_mut().unwrap().remove("checksum");
        });
        assert!(matches!(
            RecognitionModel::from_json(&bad, LoadMode::Strict),
            Err(Error::Inconsistent(_))
        ));
        assert!(RecognitionModel::from_json(&bad, LoadMode::Lenient).is_ok());
    }

    #[test]
    fn malformed_shapes_rejected() {
        let json = RecognitionModel::learn(&theta1()).unwrap().to_json().unwrap();
        let bad = edit(&json, |v| {
            v["psi"].as_object_mut().unwrap().remove("4,3");
            v.as_object_mut().unwrap().remove("checksum");
        });
        assert!(matches!(
            RecognitionModel::from_json(&bad, LoadMode::Lenient),
            Err(Error::ModelFormat(_))
        ));
        assert!(RecognitionModel::from_json("{ not json", LoadMode::Strict).is_err());
    }

    #[test]
    fn sharded_merge_equals_batch() {
        let a = Alphabet::from_chars("acgt").unwrap();
        let words = ["acgt", "ggt", "tacg", "a", "ccc", "gatc"];
        let v = Vocabulary::from_strs("v", a.clone(), &words, 0.5).unwrap();
        let left = Vocabulary::from_strs("l", a.clone(), &words[..3], 0.5).unwrap();
        let right = Vocabulary::from_strs("r", a, &words[3..], 0.5).unwrap();
        let mut merged = learn_positional(&left);
        merged.merge(&learn_positional(&right)).unwrap();
        assert_eq!(merged, learn_positional(&v));
    }

    // Exhaustive oracle: tally every (word, warping) pair directly.
    fn brute_force_psi(v: &Vocabulary, n: usize, m: usize) -> Vec<Vec<u64>> {
        let mut out = vec![vec![0u64; m]; v.alphabet().len()];
        for w in v.by_length(n) {
            for mask in 0u32..1 << n {
                if mask.count_ones() as usize != m {
                    continue;
                }
                let sub: Vec<usize> = (0..n)
                    .filter(|b| mask & (1 << b) != 0)
                    .map(|b| w.letters()[b])
                    .collect();
                for (i, &s) in sub.iter().enumerate() {
                    out[s][i] += 1;
                }
            }
        }
        out
    }

    fn vocab_strategy() -> impl Strategy<Value = Vocabulary> {
        (2usize..=4)
            .prop_flat_map(|sigma| {
                (
                    Just(sigma),
                    proptest::collection::btree_set(
                        proptest::collection::vec(0..sigma, 1..=8),
                        1..=20,
                    ),
                )
            })
            .prop_map(|(sigma, words)| {
                let a = Alphabet::from_chars(&"abcd"[..sigma]).unwrap();
                let words = words.into_iter().map(|w| Word::new(w, &a).unwrap()).collect();
                Vocabulary::new("v", a, words, 0.5).unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn psi_matches_brute_force(v in vocab_strategy()) {
            let model = RecognitionModel::learn(&v).unwrap();
            for n in v.lengths() {
                for m in 1..=n {
                    prop_assert_eq!(model.psi().get(n, m).unwrap().to_rows(), brute_force_psi(&v, n, m));
                }
            }
        }

        #[test]
        fn column_sums(v in vocab_strategy()) {
            let model = RecognitionModel::learn(&v).unwrap();
            let alpha = AlphaTable::new(v.max_len());
            for n in v.lengths() {
                let count = v.count_of_length(n) as u64;
                let phi = model.phi().get(n).unwrap();
                for j in 0..n {
                    prop_assert_eq!(phi.column_sum(j), count);
                }
                for m in 1..=n {
                    let psi = model.psi().get(n, m).unwrap();
                    for i in 0..m {
                        prop_assert_eq!(psi.column_sum(i), count * alpha.binomial(n, m).unwrap());
                    }
                }
                prop_assert_eq!(model.psi().get(n, n).unwrap(), phi);
            }
        }

        #[test]
        fn incremental_equals_batch(v in vocab_strategy(), split in 0usize..20) {
            let split = split % v.len();
            let mut model = RecognitionModel::empty(v.label(), v.alphabet().clone(), v.prior());
            for w in &v.words()[..split] {
                model.incremental_add(w).unwrap();
            }
            model.finalize().unwrap();
            for w in &v.words()[split..] {
                model.incremental_add(w).unwrap();
            }
            model.finalize().unwrap();
            prop_assert_eq!(model, RecognitionModel::learn(&v).unwrap());
        }

        #[test]
        fn mirror_reverses_histograms(v in vocab_strategy()) {
            let model = RecognitionModel::learn(&v).unwrap();
            let mirror = RecognitionModel::learn(&v.mirrored("m")).unwrap();
            for n in v.lengths() {
                for m in 1..=n {
                    let a = model.psi().get(n, m).unwrap();
                    let b = mirror.psi().get(n, m).unwrap();
                    for s in 0..v.alphabet().len() {
                        for i in 0..m {
                            prop_assert_eq!(b.get(s, i), a.get(s, m - 1 - i));
                        }
                    }
                }
            }
        }
    }
}
