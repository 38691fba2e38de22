//! Vocabulary generators for the experimental setups: explicit lists, all
//! words of one length, i.i.d. sources, and prefixed mirror pairs.

use std::collections::HashSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::vocab::{Alphabet, Vocabulary, Word, DEFAULT_PRIOR};

/// Default cap on the number of words `generate_all_combinations` may build.
pub const DEFAULT_COMBINATION_BUDGET: u128 = 1 << 20;

const WORD_STREAM: u64 = 0x574f_5244;
const MIRROR_PREFIX: &str = "acgt";

/// A serialisable description of how to build one or two vocabularies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorSpec {
    ExplicitList {
        label: String,
        alphabet: Vec<String>,
        words: Vec<String>,
    },
    AllCombinations {
        label: String,
        alphabet: Vec<String>,
        length: usize,
    },
    IidSource {
        label: String,
        alphabet: Vec<String>,
        density: Vec<f64>,
        count: usize,
        len_min: usize,
        len_max: usize,
    },
    /// Yields two vocabularies: prefixed random words and their mirror.
    MirrorPrefix {
        labels: (String, String),
        count: usize,
        len_min: usize,
        len_max: usize,
        case: usize,
    },
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            GeneratorSpec::ExplicitList { alphabet, words, .. } => {
                Alphabet::new(alphabet.clone())?;
                if words.is_empty() {
                    return Err(Error::EmptyVocabulary);
                }
            }
            GeneratorSpec::AllCombinations { alphabet, length, .. } => {
                Alphabet::new(alphabet.clone())?;
                if *length == 0 {
                    return Err(Error::InvalidArgument("length must be >= 1".into()));
                }
            }
            GeneratorSpec::IidSource {
                alphabet,
                density,
                len_min,
                len_max,
                count,
                ..
            } => {
                let a = Alphabet::new(alphabet.clone())?;
                check_density(&a, density)?;
                check_lengths(*len_min, *len_max)?;
                if *count == 0 {
                    return Err(Error::EmptyVocabulary);
                }
            }
            GeneratorSpec::MirrorPrefix {
                count,
                len_min,
                len_max,
                case,
                ..
            } => {
                check_case(*case, *len_min)?;
                check_lengths(*len_min, *len_max)?;
                if *count == 0 {
                    return Err(Error::EmptyVocabulary);
                }
            }
        }
        Ok(())
    }

    /// Number of vocabularies this spec produces.
    pub fn arity(&self) -> usize {
        match self {
            GeneratorSpec::MirrorPrefix { .. } => 2,
            _ => 1,
        }
    }

    /// Number of words in each produced vocabulary.
    pub fn size(&self) -> usize {
        match self {
            GeneratorSpec::ExplicitList { words, .. } => words.len(),
            GeneratorSpec::AllCombinations { alphabet, length, .. } => {
                (alphabet.len() as u128).saturating_pow(*length as u32).min(usize::MAX as u128) as usize
            }
            GeneratorSpec::IidSource { count, .. } | GeneratorSpec::MirrorPrefix { count, .. } => *count,
        }
    }

    pub fn generate(&self, seed: u64) -> Result<Vec<Vocabulary>> {
        self.validate()?;
        match self {
            GeneratorSpec::ExplicitList {
                label,
                alphabet,
                words,
            } => {
                let a = Alphabet::new(alphabet.clone())?;
                let words = words
                    .iter()
                    .map(|w| Word::parse(w, &a))
                    .collect::<Result<Vec<_>>>()?;
                Ok(vec![Vocabulary::new(label.clone(), a, words, DEFAULT_PRIOR)?])
            }
            GeneratorSpec::AllCombinations {
                label,
                alphabet,
                length,
            } => {
                let a = Alphabet::new(alphabet.clone())?;
                Ok(vec![generate_all_combinations(&a, *length, DEFAULT_COMBINATION_BUDGET)?
                    .with_label(label.clone())])
            }
            GeneratorSpec::IidSource {
                label,
                alphabet,
                density,
                count,
                len_min,
                len_max,
            } => {
                let a = Alphabet::new(alphabet.clone())?;
                Ok(vec![generate_iid(label, &a, density, *count, *len_min, *len_max, seed)?])
            }
            GeneratorSpec::MirrorPrefix {
                labels,
                count,
                len_min,
                len_max,
                case,
            } => {
                let (v1, v2) = generate_mirror_pair(*count, *len_min, *len_max, *case, seed)?;
                Ok(vec![v1.with_label(labels.0.clone()), v2.with_label(labels.1.clone())])
            }
        }
    }
}

fn check_density(alphabet: &Alphabet, density: &[f64]) -> Result<()> {
    if density.len() != alphabet.len() {
        return Err(Error::InvalidArgument(format!(
            "density has {} entries for an alphabet of {}",
            density.len(),
            alphabet.len()
        )));
    }
    if density.iter().any(|&d| !(0.0..=1.0).contains(&d)) {
        return Err(Error::InvalidArgument("density entries must lie in [0, 1]".into()));
    }
    let sum: f64 = density.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("density sums to {sum}, not 1")));
    }
    Ok(())
}

fn check_lengths(len_min: usize, len_max: usize) -> Result<()> {
    if len_min == 0 || len_min > len_max {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= len_min <= len_max, got {len_min}..{len_max}"
        )));
    }
    Ok(())
}

fn check_case(case: usize, len_min: usize) -> Result<()> {
    if !(1..=5).contains(&case) {
        return Err(Error::InvalidArgument(format!("mirror case must be 1..=5, got {case}")));
    }
    if len_min < case {
        return Err(Error::InvalidArgument(format!(
            "words of length {len_min} cannot hold a prefix of length {}",
            case - 1
        )));
    }
    Ok(())
}

/// Every word of length `length` over `alphabet`, in lexicographic order.
pub fn generate_all_combinations(alphabet: &Alphabet, length: usize, budget: u128) -> Result<Vocabulary> {
    let needed = (alphabet.len() as u128).checked_pow(length as u32).unwrap_or(u128::MAX);
    if needed > budget {
        return Err(Error::Budget { needed, budget });
    }
    let mut words = Vec::with_capacity(needed as usize);
    crate::oracle::for_each_sequence(alphabet.len(), length, |s| {
        words.push(Word::new(s.to_vec(), alphabet).expect("indices in range"));
    });
    Vocabulary::new(format!("all{length}"), alphabet.clone(), words, DEFAULT_PRIOR)
}

/// The pair of densities over `a, c, g, t` with deviation parameter `i`:
/// `[1/4 - i/50, 1/4 - i/100, 1/4 + i/100, 1/4 + i/50]` and its reverse.
pub fn iid_deviation_densities(i: f64) -> (Vec<f64>, Vec<f64>) {
    let first = vec![0.25 - i / 50.0, 0.25 - i / 100.0, 0.25 + i / 100.0, 0.25 + i / 50.0];
    let second = first.iter().rev().copied().collect();
    (first, second)
}

fn draw_word<R: Rng>(rng: &mut R, sampler: &WeightedIndex<f64>, len_min: usize, len_max: usize) -> Vec<usize> {
    let len = rng.random_range(len_min..=len_max);
    (0..len).map(|_| sampler.sample(rng)).collect()
}

fn attempt_budget(count: usize) -> usize {
    count.saturating_mul(20).saturating_add(1000)
}

/// `count` distinct words with lengths uniform on `len_min..=len_max` and
/// letters drawn i.i.d. from `density`. Colliding draws are redrawn.
pub fn generate_iid(
    label: &str,
    alphabet: &Alphabet,
    density: &[f64],
    count: usize,
    len_min: usize,
    len_max: usize,
    seed: u64,
) -> Result<Vocabulary> {
    check_density(alphabet, density)?;
    check_lengths(len_min, len_max)?;
    let sampler = WeightedIndex::new(density)
        .map_err(|e| Error::InvalidArgument(format!("bad density: {e}")))?;
    let mut seen = HashSet::with_capacity(count);
    let mut words = Vec::with_capacity(count);
    let max_attempts = attempt_budget(count);
    let mut attempt = 0usize;
    while words.len() < count {
        if attempt >= max_attempts {
            return Err(Error::Exhausted {
                wanted: count,
                attempts: attempt,
            });
        }
        let mut rng = rng::stream(seed, &[WORD_STREAM, attempt as u64]);
        attempt += 1;
        let letters = draw_word(&mut rng, &sampler, len_min, len_max);
        if seen.insert(letters.clone()) {
            words.push(Word::new(letters, alphabet)?);
        }
    }
    Vocabulary::new(label, alphabet.clone(), words, DEFAULT_PRIOR)
}

/// Uniform random words over `a, c, g, t`; for `case >= 2` each word gets
/// the prefix `"acgt"[..case - 1]` and loses as many letters from its end.
/// The second vocabulary is the mirror image of the first.
pub fn generate_mirror_pair(
    count: usize,
    len_min: usize,
    len_max: usize,
    case: usize,
    seed: u64,
) -> Result<(Vocabulary, Vocabulary)> {
    check_case(case, len_min)?;
    check_lengths(len_min, len_max)?;
    let alphabet = Alphabet::from_chars(MIRROR_PREFIX)?;
    let prefix: Vec<usize> = (0..case - 1).collect();
    let sampler = WeightedIndex::new([1.0; 4]).expect("uniform weights");
    let mut seen = HashSet::with_capacity(count);
    let mut words = Vec::with_capacity(count);
    let max_attempts = attempt_budget(count);
    let mut attempt = 0usize;
    while words.len() < count {
        if attempt >= max_attempts {
            return Err(Error::Exhausted {
                wanted: count,
                attempts: attempt,
            });
        }
        let mut rng = rng::stream(seed, &[WORD_STREAM, attempt as u64]);
        attempt += 1;
        let raw = draw_word(&mut rng, &sampler, len_min, len_max);
        let letters = apply_prefix(&prefix, &raw);
        if seen.insert(letters.clone()) {
            words.push(Word::new(letters, &alphabet)?);
        }
    }
    let forward = Vocabulary::new("theta1", alphabet, words, DEFAULT_PRIOR)?;
    let mirror = forward.mirrored("theta2");
    Ok((forward, mirror))
}

fn apply_prefix(prefix: &[usize], raw: &[usize]) -> Vec<usize> {
    let keep = raw.len() - prefix.len();
    prefix.iter().chain(&raw[..keep]).copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learning::RecognitionModel;
    use crate::recognition::{classify_regular_histogram, DEFAULT_EPSILON};
    use crate::vocab::ObservedSequence;

    #[test]
    fn all_combinations_small() {
        let a = Alphabet::from_chars("01").unwrap();
        let v = generate_all_combinations(&a, 2, 100).unwrap();
        let expected = Vocabulary::from_strs("all2", a.clone(), &["00", "01", "10", "11"], 0.5).unwrap();
        assert_eq!(v, expected);
        let single = generate_all_combinations(&Alphabet::from_chars("a").unwrap(), 3, 100).unwrap();
        assert_eq!(single.len(), 1);
        assert!(matches!(generate_all_combinations(&a, 10, 100), Err(Error::Budget { .. })));
    }

    #[test]
    fn all_combinations_positional_histogram_is_flat() {
        let a = Alphabet::from_chars("01").unwrap();
        let v = generate_all_combinations(&a, 4, 100).unwrap();
        assert_eq!(v.len(), 16);
        let m = RecognitionModel::learn(&v).unwrap();
        let phi = m.phi().get(4).unwrap();
        assert!(phi.to_rows().iter().flatten().all(|&c| c == 8));
    }

    #[test]
    fn deviation_densities() {
        let (p1, p2) = iid_deviation_densities(0.0);
        assert_eq!(p1, vec![0.25; 4]);
        assert_eq!(p2, vec![0.25; 4]);
        let (p1, p2) = iid_deviation_densities(4.0);
        let want = [0.17, 0.21, 0.29, 0.33];
        for (got, w) in p1.iter().zip(want) {
            assert!((got - w).abs() < 1e-15);
        }
        assert!((p2[0] - 0.33).abs() < 1e-15);
        assert!((p1.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn iid_is_deterministic_and_distinct() {
        let a = Alphabet::from_chars("acgt").unwrap();
        let d = [0.25; 4];
        let v1 = generate_iid("x", &a, &d, 500, 3, 8, 17).unwrap();
        let v2 = generate_iid("x", &a, &d, 500, 3, 8, 17).unwrap();
        assert_eq!(v1.words(), v2.words());
        assert_eq!(v1.len(), 500);
        assert!(v1.words().iter().all(|w| (3..=8).contains(&w.len())));
        let v3 = generate_iid("x", &a, &d, 500, 3, 8, 18).unwrap();
        assert_ne!(v1.words(), v3.words());
    }

    #[test]
    fn iid_rejects_bad_input() {
        let a = Alphabet::from_chars("acgt").unwrap();
        assert!(generate_iid("x", &a, &[0.5, 0.5], 10, 1, 2, 0).is_err());
        assert!(generate_iid("x", &a, &[0.3, 0.3, 0.3, 0.3], 10, 1, 2, 0).is_err());
        assert!(generate_iid("x", &a, &[0.25; 4], 10, 5, 2, 0).is_err());
        // only 4 + 16 distinct words of length 1..=2 exist
        assert!(matches!(
            generate_iid("x", &a, &[0.25; 4], 21, 1, 2, 0),
            Err(Error::Exhausted { .. })
        ));
    }

    #[test]
    fn iid_letter_frequencies_match_density() {
        // chi-square goodness of fit, 3 degrees of freedom, alpha = 0.001
        let a = Alphabet::from_chars("acgt").unwrap();
        let (density, _) = iid_deviation_densities(4.0);
        let v = generate_iid("x", &a, &density, 5000, 20, 20, 5).unwrap();
        let mut counts = [0f64; 4];
        for w in v.words() {
            for &s in w.letters() {
                counts[s] += 1.0;
            }
        }
        let total: f64 = counts.iter().sum();
        assert_eq!(total, 100_000.0);
        let chi2: f64 = counts
            .iter()
            .zip(&density)
            .map(|(&o, &p)| (o - total * p).powi(2) / (total * p))
            .sum();
        assert!(chi2 < 16.266, "chi2 = {chi2}");
    }

    #[test]
    fn prefix_replaces_the_tail() {
        assert_eq!(apply_prefix(&[0], &[1, 2, 3, 0]), vec![0, 1, 2, 3]);
        assert_eq!(apply_prefix(&[], &[1, 2]), vec![1, 2]);
        assert_eq!(apply_prefix(&[0, 1, 2, 3], &[3, 3, 3, 3, 3]), vec![0, 1, 2, 3, 3]);
    }

    #[test]
    fn mirror_pair_cases() {
        for case in 1..=5 {
            let (v1, v2) = generate_mirror_pair(200, 20, 40, case, 9).unwrap();
            assert_eq!(v1.len(), 200);
            assert_eq!(v2, v1.mirrored("theta2"));
            let prefix: Vec<usize> = (0..case - 1).collect();
            for w in v1.words() {
                assert!(w.letters().starts_with(&prefix));
                assert!((20..=40).contains(&w.len()));
            }
        }
        assert!(generate_mirror_pair(10, 20, 40, 0, 1).is_err());
        assert!(generate_mirror_pair(10, 20, 40, 6, 1).is_err());
    }

    #[test]
    fn mirror_pair_defeats_regular_histogram() {
        let (v1, v2) = generate_mirror_pair(100, 20, 40, 1, 4).unwrap();
        let models = [RecognitionModel::learn(&v1).unwrap(), RecognitionModel::learn(&v2).unwrap()];
        for w in v1.words().iter().take(20) {
            let s = ObservedSequence::from(w);
            let d = classify_regular_histogram(&models, &s, DEFAULT_EPSILON).unwrap();
            assert!(d.outcome.is_draw());
        }
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec = GeneratorSpec::MirrorPrefix {
            labels: ("a".into(), "b".into()),
            count: 10,
            len_min: 20,
            len_max: 40,
            case: 2,
        };
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"kind\":\"mirror-prefix\""));
        let back: GeneratorSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.generate(3).unwrap().len(), 2);
    }

    #[test]
    fn explicit_list_spec() {
        let spec = GeneratorSpec::ExplicitList {
            label: "theta1".into(),
            alphabet: vec!["0".into(), "1".into()],
            words: vec!["0101".into(), "1100".into()],
        };
        let v = spec.generate(0).unwrap().remove(0);
        assert_eq!(v.len(), 2);
        assert_eq!(v.label(), "theta1");
    }
}
