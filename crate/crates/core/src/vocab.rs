//! Alphabets, words and vocabularies.
//!
//! Symbols are opaque UTF-8 tokens. Everything downstream addresses them by
//! their index in the [`Alphabet`], so a [`Word`] is just a sequence of
//! indices in `0..alphabet.len()`.
//!
//! ## Vocabulary file format
//!
//! ```text
//! #alphabet 0 1
//! #label theta1
//! #prior 0.5
//! 0101
//! 1100
//! ```
//!
//! The `#alphabet` header is optional and only recognised on the first line.
//! `#label` and `#prior` are optional directives; any other line starting
//! with `#` is a comment. Words are written as concatenated symbols when
//! every symbol is a single character, and space-separated otherwise.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const DEFAULT_PRIOR: f64 = 0.5;

/// An ordered set of distinct symbols.
#[derive(Clone)]
pub struct Alphabet {
    symbols: Vec<String>,
    index: HashMap<String, usize>,
}

impl Alphabet {
    pub fn new<I, S>(symbols: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(Error::InvalidAlphabet("alphabet must not be empty".into()));
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            if s.is_empty() || s.chars().any(char::is_whitespace) {
                return Err(Error::InvalidAlphabet(format!(
                    "symbol {s:?} is empty or contains whitespace"
                )));
            }
            if index.insert(s.clone(), i).is_some() {
                return Err(Error::InvalidAlphabet(format!("symbol {s:?} repeated")));
            }
        }
        Ok(Alphabet { symbols, index })
    }

    /// Alphabet whose symbols are the characters of `chars`, in order.
    pub fn from_chars(chars: &str) -> Result<Self> {
        Self::new(chars.chars().map(String::from))
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn symbol(&self, index: usize) -> Option<&str> {
        self.symbols.get(index).map(String::as_str)
    }

    pub fn index_of(&self, symbol: &str) -> Result<usize> {
        self.index
            .get(symbol)
            .copied()
            .ok_or_else(|| Error::UnknownSymbol {
                symbol: symbol.to_string(),
            })
    }

    /// True when every symbol is exactly one character, so words can be
    /// written without separators.
    pub fn is_single_char(&self) -> bool {
        self.symbols.iter().all(|s| s.chars().count() == 1)
    }

    /// Splits a textual word into symbol indices.
    pub fn parse(&self, text: &str) -> Result<Vec<usize>> {
        let text = text.trim();
        if text.chars().any(char::is_whitespace) || !self.is_single_char() {
            text.split_whitespace().map(|t| self.index_of(t)).collect()
        } else {
            let mut buf = [0u8; 4];
            text.chars()
                .map(|c| self.index_of(c.encode_utf8(&mut buf)))
                .collect()
        }
    }

    pub fn render(&self, letters: &[usize]) -> String {
        let sep = if self.is_single_char() { "" } else { " " };
        letters
            .iter()
            .map(|&i| self.symbols[i].as_str())
            .collect::<Vec<_>>()
            .join(sep)
    }

    fn check(&self, letters: &[usize]) -> Result<()> {
        match letters.iter().find(|&&i| i >= self.len()) {
            Some(&index) => Err(Error::IndexOutOfRange {
                index,
                size: self.len(),
            }),
            None => Ok(()),
        }
    }
}

impl PartialEq for Alphabet {
    fn eq(&self, other: &Self) -> bool {
        self.symbols == other.symbols
    }
}

impl Eq for Alphabet {}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.symbols).finish()
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.symbols.join(","))
    }
}

impl Serialize for Alphabet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.symbols.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Alphabet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let symbols = Vec::<String>::deserialize(deserializer)?;
        Alphabet::new(symbols).map_err(serde::de::Error::custom)
    }
}

/// A nonempty sequence of alphabet indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn new(letters: Vec<usize>, alphabet: &Alphabet) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::InvalidArgument("words must have length >= 1".into()));
        }
        alphabet.check(&letters)?;
        Ok(Word(letters))
    }

    pub fn parse(text: &str, alphabet: &Alphabet) -> Result<Self> {
        Self::new(alphabet.parse(text)?, alphabet)
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }
}

/// The (possibly empty) output of a deletion channel.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ObservedSequence(Vec<usize>);

impl ObservedSequence {
    pub fn new(letters: Vec<usize>, alphabet: &Alphabet) -> Result<Self> {
        alphabet.check(&letters)?;
        Ok(ObservedSequence(letters))
    }

    pub fn parse(text: &str, alphabet: &Alphabet) -> Result<Self> {
        Self::new(alphabet.parse(text)?, alphabet)
    }

    /// Caller guarantees every index is in range (e.g. channel output).
    pub(crate) fn from_trusted(letters: Vec<usize>) -> Self {
        ObservedSequence(letters)
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<&Word> for ObservedSequence {
    fn from(w: &Word) -> Self {
        ObservedSequence(w.0.clone())
    }
}

/// A finite set of distinct words over one alphabet, with a prior.
#[derive(Clone, Debug)]
pub struct Vocabulary {
    label: String,
    alphabet: Alphabet,
    words: Vec<Word>,
    by_len: BTreeMap<usize, Vec<usize>>,
    prior: f64,
}

impl Vocabulary {
    pub fn new(
        label: impl Into<String>,
        alphabet: Alphabet,
        words: Vec<Word>,
        prior: f64,
    ) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        if !(0.0..=1.0).contains(&prior) {
            return Err(Error::InvalidArgument(format!("prior {prior} not in [0,1]")));
        }
        let mut seen = HashSet::with_capacity(words.len());
        let mut by_len: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (k, w) in words.iter().enumerate() {
            alphabet.check(w.letters())?;
            if !seen.insert(w.letters()) {
                return Err(Error::DuplicateWord {
                    word: alphabet.render(w.letters()),
                });
            }
            by_len.entry(w.len()).or_default().push(k);
        }
        Ok(Vocabulary {
            label: label.into(),
            alphabet,
            words,
            by_len,
            prior,
        })
    }

    /// Parses whitespace-free words like `"0101"` against `alphabet`.
    pub fn from_strs(
        label: impl Into<String>,
        alphabet: Alphabet,
        words: &[&str],
        prior: f64,
    ) -> Result<Self> {
        let words = words
            .iter()
            .map(|w| Word::parse(w, &alphabet))
            .collect::<Result<Vec<_>>>()?;
        Self::new(label, alphabet, words, prior)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn prior(&self) -> f64 {
        self.prior
    }

    pub fn with_prior(mut self, prior: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&prior) {
            return Err(Error::InvalidArgument(format!("prior {prior} not in [0,1]")));
        }
        self.prior = prior;
        Ok(self)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Longest word length.
    pub fn max_len(&self) -> usize {
        self.by_len.keys().next_back().copied().unwrap_or(0)
    }

    /// Word lengths that occur, ascending.
    pub fn lengths(&self) -> impl Iterator<Item = usize> + '_ {
        self.by_len.keys().copied()
    }

    /// The words of length exactly `n`; empty for lengths that do not occur.
    pub fn by_length(&self, n: usize) -> impl Iterator<Item = &Word> + '_ {
        self.by_len
            .get(&n)
            .map(Vec::as_slice)
            .unwrap_or(&[])
            .iter()
            .map(move |&k| &self.words[k])
    }

    pub fn count_of_length(&self, n: usize) -> usize {
        self.by_len.get(&n).map_or(0, Vec::len)
    }

    pub fn contains(&self, w: &Word) -> bool {
        self.by_length(w.len()).any(|x| x == w)
    }

    /// The vocabulary of reversed words.
    pub fn mirrored(&self, label: impl Into<String>) -> Vocabulary {
        let words = self.words.iter().map(Word::reversed).collect();
        Vocabulary::new(label, self.alphabet.clone(), words, self.prior)
            .expect("reversal preserves distinctness")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("#alphabet ");
        out.push_str(&self.alphabet.symbols().join(" "));
        out.push('\n');
        out.push_str(&format!("#label {}\n", self.label));
        out.push_str(&format!("#prior {:?}\n", self.prior));
        for w in &self.words {
            out.push_str(&self.alphabet.render(w.letters()));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        if self.label != other.label
            || self.alphabet != other.alphabet
            || self.prior != other.prior
            || self.words.len() != other.words.len()
        {
            return false;
        }
        let mine: BTreeSet<&Word> = self.words.iter().collect();
        other.words.iter().all(|w| mine.contains(w))
    }
}

/// Loads a vocabulary file. The label defaults to the file stem.
pub fn load_vocabulary(path: impl AsRef<Path>, declared: Option<&Alphabet>) -> Result<Vocabulary> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "vocabulary".to_string());
    parse_vocabulary(&text, declared, &stem)
}

pub fn parse_vocabulary(text: &str, declared: Option<&Alphabet>, label: &str) -> Result<Vocabulary> {
    let mut header: Option<Alphabet> = None;
    let mut label = label.to_string();
    let mut prior = DEFAULT_PRIOR;
    let mut lines: Vec<(usize, &str)> = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let lineno = k + 1;
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix('#') {
            let mut parts = rest.splitn(2, char::is_whitespace);
            let key = parts.next().unwrap_or("");
            let value = parts.next().unwrap_or("").trim();
            match key {
                "alphabet" if k == 0 => {
                    header = Some(Alphabet::new(value.split_whitespace()).map_err(|e| {
                        Error::Malformed {
                            line: lineno,
                            message: e.to_string(),
                        }
                    })?);
                }
                "label" if !value.is_empty() => label = value.to_string(),
                "prior" => {
                    prior = value.parse().map_err(|_| Error::Malformed {
                        line: lineno,
                        message: format!("bad prior {value:?}"),
                    })?;
                }
                _ => {}
            }
            continue;
        }
        if !line.is_empty() {
            lines.push((lineno, line));
        }
    }
    if lines.is_empty() {
        return Err(Error::EmptyVocabulary);
    }

    let alphabet = match (declared, header) {
        (Some(d), Some(h)) if *d != h => {
            return Err(Error::AlphabetMismatch {
                left: d.to_string(),
                right: h.to_string(),
            })
        }
        (Some(d), _) => d.clone(),
        (None, Some(h)) => h,
        (None, None) => infer_alphabet(&lines)?,
    };

    let mut words = Vec::with_capacity(lines.len());
    for &(lineno, line) in &lines {
        let letters = alphabet.parse(line).map_err(|e| match e {
            Error::UnknownSymbol { .. } => e,
            other => Error::Malformed {
                line: lineno,
                message: other.to_string(),
            },
        })?;
        words.push(Word::new(letters, &alphabet)?);
    }
    Vocabulary::new(label, alphabet, words, prior)
}

fn infer_alphabet(lines: &[(usize, &str)]) -> Result<Alphabet> {
    let spaced = lines.iter().any(|(_, l)| l.contains(char::is_whitespace));
    let mut symbols = BTreeSet::new();
    for (_, line) in lines {
        if spaced {
            symbols.extend(line.split_whitespace().map(str::to_string));
        } else {
            symbols.extend(line.chars().map(String::from));
        }
    }
    Alphabet::new(symbols)
}
