//! Seeded Monte Carlo experiments.
//!
//! Each trial picks a vocabulary by prior, a word uniformly from it, sends
//! the word through the deletion channel and classifies the output with
//! every configured method. Trial `t` at probability index `k` draws from
//! its own stream `(seed, k, t)`, so tallies do not depend on scheduling.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::DeletionChannel;
use crate::error::{Error, Result};
use crate::generators::{iid_deviation_densities, GeneratorSpec};
use crate::learning::RecognitionModel;
use crate::oracle::classify_map;
use crate::recognition::{
    classify, classify_regular_histogram, shared_alphabet, Method, Outcome, DEFAULT_EPSILON,
};
use crate::rng;
use crate::vocab::{load_vocabulary, Vocabulary};

const TRIAL_STREAM: u64 = 0x5452_4941;
const VOCAB_STREAM: u64 = 0x564f_4341;

pub const CSV_HEADER: &str = "scenario,classifier,p,param,trials,errors,draws,error_rate,draw_rate,seed,seconds";

/// Default largest vocabulary exact-MAP may be run against.
pub const DEFAULT_ORACLE_BUDGET: usize = 4096;

/// How draws enter the error rate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DrawPolicy {
    /// A draw is half an error (a fair coin toss).
    #[default]
    Half,
    /// A draw is a full error.
    Wrong,
    /// Draws are dropped from the denominator.
    Excluded,
}

impl DrawPolicy {
    pub fn name(self) -> &'static str {
        match self {
            DrawPolicy::Half => "half",
            DrawPolicy::Wrong => "wrong",
            DrawPolicy::Excluded => "excluded",
        }
    }

    pub fn error_rate(self, trials: usize, errors: usize, draws: usize) -> f64 {
        match self {
            DrawPolicy::Half => (errors as f64 + 0.5 * draws as f64) / trials as f64,
            DrawPolicy::Wrong => (errors + draws) as f64 / trials as f64,
            DrawPolicy::Excluded => errors as f64 / (trials - draws) as f64,
        }
    }
}

impl fmt::Display for DrawPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DrawPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half" => Ok(DrawPolicy::Half),
            "wrong" => Ok(DrawPolicy::Wrong),
            "excluded" => Ok(DrawPolicy::Excluded),
            other => Err(Error::InvalidArgument(format!("unknown draw policy {other:?}"))),
        }
    }
}

/// One experiment: a fixed set of vocabularies swept over deletion
/// probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: String,
    /// Scenario parameter echoed in the report (deviation, case index, ...).
    pub param: String,
    pub generators: Vec<GeneratorSpec>,
    pub probabilities: Vec<f64>,
    pub trials: usize,
    pub classifiers: Vec<Method>,
    pub draw_policy: DrawPolicy,
    pub seed: u64,
    pub epsilon: f64,
    pub oracle_budget: usize,
    /// Write wall-clock seconds; off by default so reports are reproducible
    /// byte for byte.
    pub record_timing: bool,
}

impl ExperimentConfig {
    fn base(scenario: &str, param: String, generators: Vec<GeneratorSpec>) -> Self {
        ExperimentConfig {
            scenario: scenario.to_string(),
            param,
            generators,
            probabilities: vec![0.1, 0.2, 0.3, 0.4],
            trials: 1000,
            classifiers: vec![Method::SubsequenceHistogram, Method::RegularHistogram],
            draw_policy: DrawPolicy::Half,
            seed: 0,
            epsilon: DEFAULT_EPSILON,
            oracle_budget: DEFAULT_ORACLE_BUDGET,
            record_timing: false,
        }
    }

    /// Two i.i.d. sources over `a, c, g, t` with deviation `i`.
    pub fn iid(deviation: u32, words: usize, len_min: usize, len_max: usize) -> Self {
        let (d1, d2) = iid_deviation_densities(deviation as f64);
        let acgt: Vec<String> = "acgt".chars().map(String::from).collect();
        let spec = |label: &str, density: Vec<f64>| GeneratorSpec::IidSource {
            label: label.to_string(),
            alphabet: acgt.clone(),
            density,
            count: words,
            len_min,
            len_max,
        };
        Self::base(
            "iid",
            deviation.to_string(),
            vec![spec("theta1", d1), spec("theta2", d2)],
        )
    }

    /// Random words with a case-dependent prefix, against their mirror.
    pub fn mirror(case: usize, words: usize, len_min: usize, len_max: usize) -> Self {
        Self::base(
            "mirror",
            case.to_string(),
            vec![GeneratorSpec::MirrorPrefix {
                labels: ("theta1".into(), "theta2".into()),
                count: words,
                len_min,
                len_max,
                case,
            }],
        )
    }

    /// The two four-letter binary vocabularies `{0101, 1100}` and `{1010, 0011}`.
    pub fn example_pair() -> Self {
        let bin = vec!["0".to_string(), "1".to_string()];
        let list = |label: &str, words: [&str; 2]| GeneratorSpec::ExplicitList {
            label: label.to_string(),
            alphabet: bin.clone(),
            words: words.iter().map(|w| w.to_string()).collect(),
        };
        let mut config = Self::base(
            "example1",
            "-".to_string(),
            vec![list("theta1", ["0101", "1100"]), list("theta2", ["1010", "0011"])],
        );
        config.classifiers = Method::ALL.to_vec();
        config
    }

    /// Vocabularies read from files.
    pub fn from_vocabularies(vocabularies: &[Vocabulary]) -> Self {
        let generators = vocabularies
            .iter()
            .map(|v| GeneratorSpec::ExplicitList {
                label: v.label().to_string(),
                alphabet: v.alphabet().symbols().to_vec(),
                words: v.words().iter().map(|w| v.alphabet().render(w.letters())).collect(),
            })
            .collect();
        Self::base("files", "-".to_string(), generators)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trial count must be >= 1".into()));
        }
        if self.probabilities.is_empty() {
            return Err(Error::InvalidArgument("no deletion probabilities given".into()));
        }
        if let Some(p) = self.probabilities.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
            return Err(Error::InvalidArgument(format!("deletion probability {p} not in (0, 1)")));
        }
        if self.classifiers.is_empty() {
            return Err(Error::InvalidArgument("no classifiers selected".into()));
        }
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(Error::InvalidArgument("epsilon must be >= 0".into()));
        }
        let count: usize = self.generators.iter().map(GeneratorSpec::arity).sum();
        if count < 2 {
            return Err(Error::InvalidArgument("need at least two vocabularies".into()));
        }
        for g in &self.generators {
            g.validate()?;
        }
        if self.classifiers.contains(&Method::ExactMap) {
            let largest = self.generators.iter().map(GeneratorSpec::size).max().unwrap_or(0);
            if largest > self.oracle_budget {
                return Err(Error::Budget {
                    needed: largest as u128,
                    budget: self.oracle_budget as u128,
                });
            }
        }
        Ok(())
    }

    /// Builds the vocabularies with uniform priors.
    pub fn vocabularies(&self) -> Result<Vec<Vocabulary>> {
        let mut out = Vec::new();
        for (k, g) in self.generators.iter().enumerate() {
            out.extend(g.generate(rng::derive_seed(self.seed, &[VOCAB_STREAM, k as u64]))?);
        }
        let prior = 1.0 / out.len() as f64;
        let out = out
            .into_iter()
            .map(|v| v.with_prior(prior))
            .collect::<Result<Vec<_>>>()?;
        let mut labels: Vec<&str> = out.iter().map(Vocabulary::label).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("vocabulary labels must be distinct".into()));
        }
        shared_alphabet(out.iter().map(Vocabulary::alphabet))?;
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub scenario: String,
    pub classifier: Method,
    pub p: f64,
    pub param: String,
    pub trials: usize,
    pub errors: usize,
    pub draws: usize,
    pub error_rate: f64,
    pub draw_rate: f64,
    pub seed: u64,
    pub seconds: f64,
}

impl ReportRow {
    /// Binomial standard error of `error_rate`.
    pub fn standard_error(&self) -> f64 {
        (self.error_rate * (1.0 - self.error_rate) / self.trials as f64).sqrt()
    }

    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{:.6},{:.6},{},{:.3}",
            self.scenario,
            self.classifier,
            self.p,
            self.param,
            self.trials,
            self.errors,
            self.draws,
            self.error_rate,
            self.draw_rate,
            self.seed,
            self.seconds
        )
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
    pub draw_policy: DrawPolicy,
    pub epsilon: f64,
}

impl ExperimentReport {
    pub fn row(&self, classifier: Method, p: f64, param: &str) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.classifier == classifier && r.p == p && r.param == param)
    }

    pub fn extend(&mut self, other: ExperimentReport) {
        self.draw_policy = other.draw_policy;
        self.epsilon = other.epsilon;
        self.rows.extend(other.rows);
    }

    /// CSV with one leading `#` line recording the draw policy.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# draw_policy={} epsilon={:e}\n{CSV_HEADER}\n",
            self.draw_policy, self.epsilon
        );
        for row in &self.rows {
            out.push_str(&row.csv_line());
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Tally {
    Correct,
    Wrong,
    Draw,
}

struct Classifiers<'a> {
    vocabularies: &'a [Vocabulary],
    models: &'a [RecognitionModel],
    epsilon: f64,
}

impl Classifiers<'_> {
    fn run(&self, method: Method, s: &crate::vocab::ObservedSequence, p: f64) -> Result<Outcome> {
        Ok(match method {
            Method::SubsequenceHistogram => classify(self.models, s, p, self.epsilon)?.outcome,
            Method::RegularHistogram => classify_regular_histogram(self.models, s, self.epsilon)?.outcome,
            Method::ExactMap => classify_map(self.vocabularies, s, p, self.epsilon)?.outcome,
        })
    }
}

fn pick_vocabulary<R: Rng>(rng: &mut R, vocabularies: &[Vocabulary]) -> usize {
    let total: f64 = vocabularies.iter().map(Vocabulary::prior).sum();
    let mut u = rng.random::<f64>() * total;
    for (k, v) in vocabularies.iter().enumerate() {
        if u < v.prior() {
            return k;
        }
        u -= v.prior();
    }
    vocabularies.len() - 1
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let vocabularies = config.vocabularies()?;
    let models = vocabularies
        .par_iter()
        .map(RecognitionModel::learn)
        .collect::<Result<Vec<_>>>()?;
    let classifiers = Classifiers {
        vocabularies: &vocabularies,
        models: &models,
        epsilon: config.epsilon,
    };

    let mut rows = Vec::new();
    for (k, &p) in config.probabilities.iter().enumerate() {
        let started = Instant::now();
        let channel = DeletionChannel::new(p, config.seed)?;
        let outcomes = (0..config.trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng::stream(config.seed, &[TRIAL_STREAM, k as u64, t as u64]);
                let source = pick_vocabulary(&mut rng, &vocabularies);
                let vocab = &vocabularies[source];
                let word = &vocab.words()[rng.random_range(0..vocab.len())];
                let s = channel.transmit_with(word, &mut rng);
                config
                    .classifiers
                    .iter()
                    .map(|&method| {
                        Ok(match classifiers.run(method, &s, p)? {
                            Outcome::Draw => Tally::Draw,
                            Outcome::Label(l) if l == vocab.label() => Tally::Correct,
                            Outcome::Label(_) => Tally::Wrong,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let seconds = if config.record_timing {
            started.elapsed().as_secs_f64()
        } else {
            0.0
        };
        for (c, &method) in config.classifiers.iter().enumerate() {
            let errors = outcomes.iter().filter(|o| o[c] == Tally::Wrong).count();
            let draws = outcomes.iter().filter(|o| o[c] == Tally::Draw).count();
            rows.push(ReportRow {
                scenario: config.scenario.clone(),
                classifier: method,
                p,
                param: config.param.clone(),
                trials: config.trials,
                errors,
                draws,
                error_rate: config.draw_policy.error_rate(config.trials, errors, draws),
                draw_rate: draws as f64 / config.trials as f64,
                seed: config.seed,
                seconds,
            });
        }
    }
    Ok(ExperimentReport {
        rows,
        draw_policy: config.draw_policy,
        epsilon: config.epsilon,
    })
}

/// Runs several configurations and concatenates their rows.
pub fn run_experiments(configs: &[ExperimentConfig]) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::default();
    for c in configs {
        report.extend(run_experiment(c)?);
    }
    Ok(report)
}

/// Flat `key = value` experiment settings, as read from a config file,
/// environment or command line.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

pub const SETTING_KEYS: &[&str] = &[
    "scenario",
    "param",
    "p",
    "words",
    "len_min",
    "len_max",
    "trials",
    "classifiers",
    "draw_policy",
    "seed",
    "epsilon",
    "oracle_budget",
    "vocab",
    "output",
    "timing",
];

impl Settings {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Malformed {
                line: k + 1,
                message: "expected key = value".into(),
            })?;
            let key = key.trim().replace('-', "_");
            if !SETTING_KEYS.contains(&key.as_str()) {
                return Err(Error::Malformed {
                    line: k + 1,
                    message: format!("unknown key {key:?}"),
                });
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Settings { values })
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.replace('-', "_"), value.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Later settings win.
    pub fn merge(&mut self, other: &Settings) {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
    }

    fn parsed<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad value {v:?} for {key}"))),
        }
    }

    fn list<T: FromStr>(&self, key: &str, default: Vec<T>) -> Result<Vec<T>> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse()
                        .map_err(|_| Error::InvalidArgument(format!("bad value {s:?} in {key}")))
                })
                .collect(),
        }
    }

    pub fn output(&self) -> Option<PathBuf> {
        self.get("output").map(PathBuf::from)
    }

    /// Expands the settings into one configuration per scenario parameter.
    pub fn configs(&self) -> Result<Vec<ExperimentConfig>> {
        let scenario = self.get("scenario").unwrap_or("iid");
        let words = self.parsed("words", 8000usize)?;
        let len_min = self.parsed("len_min", 20usize)?;
        let len_max = self.parsed("len_max", 40usize)?;
        let mut configs: Vec<ExperimentConfig> = match scenario {
            "iid" => self
                .list("param", vec![0u32, 1, 2, 3, 4])?
                .into_iter()
                .map(|i| ExperimentConfig::iid(i, words, len_min, len_max))
                .collect(),
            "mirror" => self
                .list("param", vec![1usize, 2, 3, 4, 5])?
                .into_iter()
                .map(|c| ExperimentConfig::mirror(c, words, len_min, len_max))
                .collect(),
            "example1" => vec![ExperimentConfig::example_pair()],
            "files" => {
                let paths: Vec<String> = self.list("vocab", Vec::new())?;
                if paths.len() < 2 {
                    return Err(Error::InvalidArgument(
                        "scenario files needs at least two vocab paths".into(),
                    ));
                }
                let first = load_vocabulary(&paths[0], None)?;
                let mut vocabs = vec![first.clone()];
                for p in &paths[1..] {
                    vocabs.push(load_vocabulary(p, Some(first.alphabet()))?);
                }
                vec![ExperimentConfig::from_vocabularies(&vocabs)]
            }
            other => return Err(Error::InvalidArgument(format!("unknown scenario {other:?}"))),
        };
        for c in &mut configs {
            c.probabilities = self.list("p", c.probabilities.clone())?;
            c.trials = self.parsed("trials", c.trials)?;
            c.classifiers = self.list("classifiers", c.classifiers.clone())?;
            c.draw_policy = self.parsed("draw_policy", c.draw_policy)?;
            c.seed = self.parsed("seed", c.seed)?;
            c.epsilon = self.parsed("epsilon", c.epsilon)?;
            c.oracle_budget = self.parsed("oracle_budget", c.oracle_budget)?;
            c.record_timing = self.parsed("timing", c.record_timing)?;
        }
        Ok(configs)
    }
}
