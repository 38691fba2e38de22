use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use subseq_core::experiment::{run_experiments, Settings};
use subseq_core::learning::load_model;
use subseq_core::oracle::{error_analysis_with_budget, DEFAULT_ENUMERATION_BUDGET};
use subseq_core::selftest::{self, SelfTestOptions};
use subseq_core::{
    classify, classify_map, classify_regular_histogram, load_vocabulary, Alphabet,
    DeletionChannel, Method, ObservedSequence, RecognitionModel, Vocabulary, Word,
    DEFAULT_EPSILON,
};

/// Vocabulary recognition from deletion-channel subsequences.
///
/// Every flag can also be set through an environment variable named
/// `SUBSEQ_<FLAG>` (upper case, dashes as underscores).
#[derive(Parser)]
#[command(name = "subseq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn histogram statistics from a vocabulary file and write a model.
    Learn(LearnArgs),
    /// Classify an observed subsequence against learned models.
    Recognize(RecognizeArgs),
    /// Pass a word through the deletion channel.
    Channel(ChannelArgs),
    /// Run seeded Monte Carlo experiments and write a CSV report.
    Experiment(ExperimentArgs),
    /// Exact MAP error and its bounds for two vocabularies of one word length.
    Oracle(OracleArgs),
    /// Run the built-in invariant checks.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct LearnArgs {
    /// Vocabulary file, one word per line.
    #[arg(env = "SUBSEQ_VOCAB")]
    vocab: PathBuf,
    /// Where to write the model.
    #[arg(short, long, env = "SUBSEQ_OUT")]
    out: PathBuf,
    /// Alphabet as a string of single-character symbols.
    #[arg(long, env = "SUBSEQ_ALPHABET")]
    alphabet: Option<String>,
    #[arg(long, env = "SUBSEQ_PRIOR")]
    prior: Option<f64>,
    #[arg(long, env = "SUBSEQ_LABEL")]
    label: Option<String>,
    /// Print every subsequence histogram matrix.
    #[arg(long, env = "SUBSEQ_SHOW_PSI")]
    show_psi: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Args)]
struct RecognizeArgs {
    /// Observed sequence.
    sequence: String,
    /// Learned model files (subsequence- and regular-histogram methods).
    #[arg(short, long = "model", env = "SUBSEQ_MODEL", value_delimiter = ',')]
    models: Vec<PathBuf>,
    /// Vocabulary files (exact-map method).
    #[arg(long = "vocab", env = "SUBSEQ_VOCAB", value_delimiter = ',')]
    vocabs: Vec<PathBuf>,
    /// Deletion probability.
    #[arg(short, long, env = "SUBSEQ_P", default_value_t = 0.3)]
    p: f64,
    #[arg(long, env = "SUBSEQ_METHOD", default_value = "subsequence-histogram")]
    method: Method,
    #[arg(long, env = "SUBSEQ_EPSILON", default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, env = "SUBSEQ_FORMAT", value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct ChannelArgs {
    word: String,
    #[arg(short, long, env = "SUBSEQ_P")]
    p: f64,
    #[arg(long, env = "SUBSEQ_SEED", default_value_t = 0)]
    seed: u64,
    /// Index of the draw within the seeded stream.
    #[arg(long, env = "SUBSEQ_DRAW", default_value_t = 0)]
    draw: u64,
    /// Alphabet; defaults to the symbols of the word.
    #[arg(long, env = "SUBSEQ_ALPHABET")]
    alphabet: Option<String>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Settings file of `key = value` lines; flags override it.
    #[arg(short, long, env = "SUBSEQ_CONFIG")]
    config: Option<PathBuf>,
    /// iid, mirror, example1 or files.
    #[arg(long, env = "SUBSEQ_SCENARIO")]
    scenario: Option<String>,
    /// Comma-separated scenario parameters (deviation or mirror case).
    #[arg(long, env = "SUBSEQ_PARAM")]
    param: Option<String>,
    /// Comma-separated deletion probabilities.
    #[arg(short, long, env = "SUBSEQ_P")]
    p: Option<String>,
    #[arg(long, env = "SUBSEQ_WORDS")]
    words: Option<usize>,
    #[arg(long, env = "SUBSEQ_LEN_MIN")]
    len_min: Option<usize>,
    #[arg(long, env = "SUBSEQ_LEN_MAX")]
    len_max: Option<usize>,
    #[arg(long, env = "SUBSEQ_TRIALS")]
    trials: Option<usize>,
    /// Comma-separated classifier names.
    #[arg(long, env = "SUBSEQ_CLASSIFIERS")]
    classifiers: Option<String>,
    /// half, wrong or excluded.
    #[arg(long, env = "SUBSEQ_DRAW_POLICY")]
    draw_policy: Option<String>,
    #[arg(long, env = "SUBSEQ_SEED")]
    seed: Option<u64>,
    #[arg(long, env = "SUBSEQ_EPSILON")]
    epsilon: Option<f64>,
    #[arg(long, env = "SUBSEQ_ORACLE_BUDGET")]
    oracle_budget: Option<usize>,
    /// Comma-separated vocabulary files for the files scenario.
    #[arg(long, env = "SUBSEQ_VOCAB")]
    vocab: Option<String>,
    /// CSV destination; stdout when absent.
    #[arg(short, long, env = "SUBSEQ_OUTPUT")]
    output: Option<PathBuf>,
    /// Record wall-clock seconds per row (makes output non-reproducible).
    #[arg(long, env = "SUBSEQ_TIMING")]
    timing: bool,
}

#[derive(Args)]
struct OracleArgs {
    first: PathBuf,
    second: PathBuf,
    #[arg(short, long, env = "SUBSEQ_P", default_value_t = 0.3)]
    p: f64,
    /// Maximum number of enumerated sequences.
    #[arg(long, env = "SUBSEQ_BUDGET", default_value_t = DEFAULT_ENUMERATION_BUDGET)]
    budget: u128,
    /// Also print the per-length table as CSV.
    #[arg(long, env = "SUBSEQ_DETAIL")]
    detail: bool,
}

#[derive(Args)]
struct SelftestArgs {
    /// Inject a fault into the placement table; the run must then fail.
    #[arg(long, env = "SUBSEQ_CORRUPT_ALPHA")]
    corrupt_alpha: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Learn(a) => learn(a),
        Command::Recognize(a) => recognize(a),
        Command::Channel(a) => channel(a),
        Command::Experiment(a) => experiment(a),
        Command::Oracle(a) => oracle(a),
        Command::Selftest(a) => run_selftest(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn parse_alphabet(text: Option<&str>) -> Result<Option<Alphabet>> {
    text.map(|t| Alphabet::from_chars(t).context("invalid alphabet"))
        .transpose()
}

fn learn(a: LearnArgs) -> Result<ExitCode> {
    let alphabet = parse_alphabet(a.alphabet.as_deref())?;
    let mut vocab = load_vocabulary(&a.vocab, alphabet.as_ref())?;
    if let Some(label) = a.label {
        vocab = vocab.with_label(label);
    }
    if let Some(prior) = a.prior {
        vocab = vocab.with_prior(prior)?;
    }
    let model = RecognitionModel::learn(&vocab)?;
    model.save(&a.out)?;
    println!(
        "learned {}: {} words, max length {}, {} stored counts -> {}",
        model.label(),
        model.vocab_size(),
        model.max_len(),
        model.storage_counts(),
        a.out.display()
    );
    if a.show_psi {
        let symbols = model.alphabet().symbols();
        for n in model.lengths() {
            for m in 1..=n {
                let matrix = model.psi().get(n, m).context("missing histogram")?;
                println!("psi[{n},{m}]");
                for (sym, row) in symbols.iter().zip(matrix.to_rows()) {
                    let cells: Vec<String> = row.iter().map(u64::to_string).collect();
                    println!("  {sym}: {}", cells.join(" "));
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn recognize(a: RecognizeArgs) -> Result<ExitCode> {
    let decision = match a.method {
        Method::ExactMap => {
            if a.vocabs.len() < 2 {
                bail!("exact-map needs at least two --vocab files");
            }
            let first = load_vocabulary(&a.vocabs[0], None)?;
            let mut vocabs: Vec<Vocabulary> = vec![first.clone()];
            for path in &a.vocabs[1..] {
                vocabs.push(load_vocabulary(path, Some(first.alphabet()))?);
            }
            let s = ObservedSequence::parse(&a.sequence, first.alphabet())?;
            classify_map(&vocabs, &s, a.p, a.epsilon)?
        }
        method => {
            if a.models.len() < 2 {
                bail!("need at least two --model files");
            }
            let models = a
                .models
                .iter()
                .map(|path| load_model(path).with_context(|| format!("loading {}", path.display())))
                .collect::<Result<Vec<_>>>()?;
            let s = ObservedSequence::parse(&a.sequence, models[0].alphabet())?;
            if method == Method::RegularHistogram {
                classify_regular_histogram(&models, &s, a.epsilon)?
            } else {
                classify(&models, &s, a.p, a.epsilon)?
            }
        }
    };
    match a.format {
        Format::Text => {
            println!("{}", decision.outcome);
            for score in &decision.scores {
                println!("  {}: score {:e} (log {:.6})", score.label, score.total, score.log_total);
            }
        }
        Format::Csv => {
            println!("sequence,method,p,label,score,log_score,decision");
            for score in &decision.scores {
                println!(
                    "{},{},{},{},{:e},{},{}",
                    a.sequence,
                    decision.method,
                    a.p,
                    score.label,
                    score.total,
                    score.log_total,
                    decision.outcome
                );
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn channel(a: ChannelArgs) -> Result<ExitCode> {
    let alphabet = match parse_alphabet(a.alphabet.as_deref())? {
        Some(alphabet) => alphabet,
        None => {
            let mut chars: Vec<char> = a.word.chars().collect();
            chars.sort_unstable();
            chars.dedup();
            Alphabet::from_chars(&chars.into_iter().collect::<String>())?
        }
    };
    let word = Word::parse(&a.word, &alphabet)?;
    let out = DeletionChannel::new(a.p, a.seed)?.transmit(&word, a.draw);
    println!("{}", alphabet.render(out.letters()));
    Ok(ExitCode::SUCCESS)
}

fn experiment(a: ExperimentArgs) -> Result<ExitCode> {
    let mut settings = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Settings::parse(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => Settings::default(),
    };
    let flags: [(&str, Option<String>); 14] = [
        ("scenario", a.scenario),
        ("param", a.param),
        ("p", a.p),
        ("words", a.words.map(|v| v.to_string())),
        ("len_min", a.len_min.map(|v| v.to_string())),
        ("len_max", a.len_max.map(|v| v.to_string())),
        ("trials", a.trials.map(|v| v.to_string())),
        ("classifiers", a.classifiers),
        ("draw_policy", a.draw_policy),
        ("seed", a.seed.map(|v| v.to_string())),
        ("epsilon", a.epsilon.map(|v| v.to_string())),
        ("oracle_budget", a.oracle_budget.map(|v| v.to_string())),
        ("vocab", a.vocab),
        ("output", a.output.map(|v| v.display().to_string())),
    ];
    for (key, value) in flags {
        if let Some(value) = value {
            settings.set(key, value);
        }
    }
    if a.timing {
        settings.set("timing", "true");
    }
    let report = run_experiments(&settings.configs()?)?;
    let csv = report.to_csv();
    match settings.output() {
        Some(path) => {
            fs::write(&path, &csv).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {} rows to {}", report.rows.len(), path.display());
        }
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn oracle(a: OracleArgs) -> Result<ExitCode> {
    let v1 = load_vocabulary(&a.first, None)?;
    let v2 = load_vocabulary(&a.second, Some(v1.alphabet()))?;
    let report = error_analysis_with_budget(&v1, &v2, a.p, a.budget)?;
    println!("vocabularies: {} vs {}", report.labels.0, report.labels.1);
    println!("word length {}, {} words each, p = {}", report.word_len, report.vocab_size, report.p);
    println!("exact MAP error:       {:.6}", report.p_map);
    println!("histogram error:       {:.6}", report.lambda_error);
    println!("sqrt bound:            {:.6}", report.sqrt_bound);
    println!("bound chain holds:     {}", report.bound_chain_holds());
    if a.detail {
        print!("{}", report.detail_csv());
    }
    Ok(ExitCode::SUCCESS)
}

fn run_selftest(a: SelftestArgs) -> Result<ExitCode> {
    let results = selftest::run(SelfTestOptions {
        corrupt_alpha: a.corrupt_alpha,
    });
    let mut failed = 0;
    for r in &results {
        if r.passed {
            println!("PASS {}", r.name);
        } else {
            failed += 1;
            println!("FAIL {}: {}", r.name, r.detail);
        }
    }
    println!("{} of {} checks passed", results.len() - failed, results.len());
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
