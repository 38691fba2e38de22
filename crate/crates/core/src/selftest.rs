//! Built-in invariant checks run by `subseq selftest`.

use crate::combinatorics::{binomial, verify_alpha_identity, AlphaTable};
use crate::generators::generate_iid;
use crate::learning::{learn_positional, learn_subsequence, RecognitionModel};
use crate::oracle::{channel_likelihood, classify_map, count_embeddings_raw, for_each_sequence};
use crate::recognition::{classify, DEFAULT_EPSILON};
use crate::vocab::{Alphabet, ObservedSequence, Vocabulary, Word};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SelfTestOptions {
    /// Run the checks against a deliberately corrupted placement table.
    pub corrupt_alpha: bool,
}

fn check(name: &'static str, outcome: std::result::Result<(), String>) -> CheckResult {
    match outcome {
        Ok(()) => CheckResult {
            name,
            passed: true,
            detail: String::new(),
        },
        Err(detail) => CheckResult {
            name,
            passed: false,
            detail,
        },
    }
}

fn example_pair() -> (Vocabulary, Vocabulary) {
    let a = Alphabet::from_chars("01").expect("binary alphabet");
    (
        Vocabulary::from_strs("theta1", a.clone(), &["0101", "1100"], 0.5).expect("fixture"),
        Vocabulary::from_strs("theta2", a, &["1010", "0011"], 0.5).expect("fixture"),
    )
}

type Matrix = Vec<Vec<u64>>;

/// Positional and subsequence histograms of the binary example pair.
pub fn example_fixtures() -> [(&'static str, usize, Matrix, Matrix); 4] {
    [
        ("phi4/psi44", 4, vec![vec![1, 0, 2, 1], vec![1, 2, 0, 1]], vec![vec![1, 2, 0, 1], vec![1, 0, 2, 1]]),
        ("psi41", 1, vec![vec![4], vec![4]], vec![vec![4], vec![4]]),
        ("psi42", 2, vec![vec![5, 7], vec![7, 5]], vec![vec![7, 5], vec![5, 7]]),
        ("psi43", 3, vec![vec![3, 4, 5], vec![5, 4, 3]], vec![vec![5, 4, 3], vec![3, 4, 5]]),
    ]
}

/// The published decision list for the binary example pair.
pub const EXAMPLE_DECISIONS: &[(&str, Option<&str>)] = &[
    ("0", None),
    ("1", None),
    ("00", None),
    ("11", None),
    ("01", Some("theta2")),
    ("10", Some("theta1")),
    ("100", Some("theta1")),
    ("110", Some("theta1")),
    ("001", Some("theta2")),
    ("011", Some("theta2")),
    ("010", None),
    ("101", None),
    ("0101", Some("theta1")),
    ("1100", Some("theta1")),
    ("1010", Some("theta2")),
    ("0011", Some("theta2")),
];

pub fn run(options: SelfTestOptions) -> Vec<CheckResult> {
    let mut table = AlphaTable::new(20);
    if options.corrupt_alpha {
        table = table.with_fault(4, 2, 2, 1);
    }
    let mut results = Vec::new();

    results.push(check("alpha identity (n <= 20)", {
        let bad: Vec<String> = (1..=20)
            .flat_map(|n| (1..=n).map(move |m| (n, m)))
            .filter(|&(n, m)| !verify_alpha_identity(&table, n, m))
            .map(|(n, m)| format!("({n},{m})"))
            .collect();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(format!("identity fails at {}", bad.join(" ")))
        }
    }));

    let (v1, v2) = example_pair();
    results.push(check("example histograms", {
        let fixtures = example_fixtures();
        let mut errors = Vec::new();
        for (k, v) in [&v1, &v2].into_iter().enumerate() {
            let phi = learn_positional(v);
            match learn_subsequence(&phi, &table) {
                Ok(psi) => {
                    for (name, m, a, b) in &fixtures {
                        let want = if k == 0 { a } else { b };
                        if psi.get(4, *m).map(|x| x.to_rows()).as_ref() != Some(want) {
                            errors.push(format!("{} {name}", v.label()));
                        }
                    }
                    let want_phi = if k == 0 { &fixtures[0].2 } else { &fixtures[0].3 };
                    if phi.get(4).map(|x| x.to_rows()).as_ref() != Some(want_phi) {
                        errors.push(format!("{} phi4", v.label()));
                    }
                }
                Err(e) => errors.push(e.to_string()),
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(format!("mismatch: {}", errors.join(", ")))
        }
    }));

    results.push(check("psi column sums", {
        let a = Alphabet::from_chars("acgt").expect("alphabet");
        (|| -> std::result::Result<(), String> {
            let v = generate_iid("v", &a, &[0.1, 0.2, 0.3, 0.4], 200, 1, 12, 7).map_err(|e| e.to_string())?;
            let phi = learn_positional(&v);
            let psi = learn_subsequence(&phi, &table).map_err(|e| e.to_string())?;
            for n in v.lengths() {
                let count = v.count_of_length(n) as u64;
                for m in 1..=n {
                    let want = count * binomial(n as u64, m as u64).map_err(|e| e.to_string())?;
                    let matrix = psi.get(n, m).ok_or("missing psi")?;
                    if let Some(i) = (0..m).find(|&i| matrix.column_sum(i) != want) {
                        return Err(format!("psi[{n},{m}] column {} sums wrong", i + 1));
                    }
                }
            }
            Ok(())
        })()
    }));

    results.push(check("embedding DP vs enumeration", {
        let mut failures = 0;
        let w: Vec<usize> = vec![0, 1, 1, 0, 2, 1, 0, 2, 2, 1];
        for m in 0..=4 {
            for_each_sequence(3, m, |s| {
                let brute = (0u32..1 << w.len())
                    .filter(|mask| mask.count_ones() as usize == m)
                    .filter(|mask| {
                        (0..w.len())
                            .filter(|b| mask & (1 << b) != 0)
                            .map(|b| w[b])
                            .eq(s.iter().copied())
                    })
                    .count() as u128;
                if count_embeddings_raw(s, &w).ok() != Some(brute) {
                    failures += 1;
                }
            });
        }
        if failures == 0 {
            Ok(())
        } else {
            Err(format!("{failures} mismatches"))
        }
    }));

    results.push(check("channel normalisation", {
        let a = Alphabet::from_chars("01").expect("alphabet");
        let w = Word::parse("011010011101", &a).expect("word");
        let mut worst: f64 = 0.0;
        for p in [0.0, 0.1, 0.5, 0.9, 1.0] {
            let mut total = 0.0;
            for m in 0..=w.len() {
                for_each_sequence(2, m, |s| {
                    let s = ObservedSequence::from_trusted(s.to_vec());
                    total += channel_likelihood(&s, &w, p).unwrap_or(f64::NAN);
                });
            }
            worst = worst.max((total - 1.0).abs());
        }
        if worst < 1e-12 {
            Ok(())
        } else {
            Err(format!("max deviation {worst:e}"))
        }
    }));

    results.push(check("example decision list", {
        (|| -> std::result::Result<(), String> {
            let models = [
                RecognitionModel::learn(&v1).map_err(|e| e.to_string())?,
                RecognitionModel::learn(&v2).map_err(|e| e.to_string())?,
            ];
            let vocabs = [v1.clone(), v2.clone()];
            for &(text, want) in EXAMPLE_DECISIONS {
                let s = ObservedSequence::parse(text, v1.alphabet()).map_err(|e| e.to_string())?;
                let sh = classify(&models, &s, 0.3, DEFAULT_EPSILON).map_err(|e| e.to_string())?;
                let map = classify_map(&vocabs, &s, 0.3, DEFAULT_EPSILON).map_err(|e| e.to_string())?;
                if sh.outcome.label() != want || map.outcome.label() != want {
                    return Err(format!("S={text}: histogram {} / MAP {}", sh.outcome, map.outcome));
                }
            }
            Ok(())
        })()
    }));

    results
}
