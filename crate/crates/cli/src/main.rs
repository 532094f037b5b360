//! Command-line driver wiring generation, fitting, evaluation, diagnostics,
//! and reporting into reproducible runs.
//!
//! Every subcommand writes its outputs plus a `manifest.json` (resolved
//! config, seed, versions, wall time) into `--out`, never mutates its
//! inputs, and exits 0 on success, 1 on validation errors, 2 on runtime
//! errors.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use leadlag_core::corpus::{CorpusPair, Vocabulary};
use leadlag_core::diagnostics::{ccm, lagged_ccf, word_frequency_series, CcmOptions};
use leadlag_core::error::{Error, ErrorKind, Result};
use leadlag_core::eval::{
    completion_perplexity, completion_perplexity_combined, completion_perplexity_separate,
    fit_combined, fit_separate, select_lag, stratified_split, SplitFractions,
};
use leadlag_core::jdtm::{fit, ModelConfig};
use leadlag_core::model_file::{load_model, save_model};
use leadlag_core::reports;
use leadlag_core::synthgen::{generate_scenario1, generate_scenario2, GenConfig, Scenario};
use leadlag_core::types::Side;

#[derive(Parser)]
#[command(
    name = "leadlag",
    version,
    about = "Joint topic modeling of a leading and a lagged corpus"
)]
struct Cli {
    /// Worker threads; the LEADLAG_THREADS environment variable overrides
    /// this flag when set.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus pair plus ground truth.
    Generate(GenerateArgs),
    /// Fit the joint model to a corpus pair.
    Fit(FitArgs),
    /// Compare held-out completion perplexity of the joint fit against the
    /// separate-fit and pooled baselines.
    Eval(EvalArgs),
    /// Pick the lag by grid search on validation perplexity.
    SelectLag(SelectLagArgs),
    /// Lagged cross-correlation of one word's frequency series in the two
    /// corpora.
    DiagnoseCcf(DiagnoseCcfArgs),
    /// Convergent cross mapping between one word's two frequency series.
    DiagnoseCcm(DiagnoseCcmArgs),
    /// Top words per topic and time slice of a fitted model.
    ReportTopWords(ReportTopWordsArgs),
}

/// Topic-count and lag flags shared by the modeling subcommands.
#[derive(Args)]
struct TopicArgs {
    /// Shared topic count K.
    #[arg(long = "K", value_name = "N", default_value_t = 0)]
    shared_topics: u32,
    /// Lead-specific topic count J.
    #[arg(long = "J", value_name = "N", default_value_t = 0)]
    lead_topics: u32,
    /// Lag-specific topic count H.
    #[arg(long = "H", value_name = "N", default_value_t = 0)]
    lag_topics: u32,
    /// Lead-lag offset l in time slices.
    #[arg(long, default_value_t = 0)]
    lag: u32,
}

/// Optional overrides of the model hyperparameters.
#[derive(Args)]
struct ModelOverrides {
    /// Sets the drift variance of all three chain types at once.
    #[arg(long)]
    drift_var: Option<f64>,
    #[arg(long)]
    shared_drift_var: Option<f64>,
    #[arg(long)]
    lead_drift_var: Option<f64>,
    #[arg(long)]
    lag_drift_var: Option<f64>,
    /// Variational observation variance; defaults to 10x the drift variance.
    #[arg(long)]
    obs_var: Option<f64>,
    /// Dirichlet prior scalar for lead documents.
    #[arg(long)]
    lead_prior: Option<f64>,
    /// Dirichlet prior scalar for lag documents.
    #[arg(long)]
    lag_prior: Option<f64>,
    #[arg(long)]
    cg_max_iter: Option<u32>,
    #[arg(long)]
    cg_tol: Option<f64>,
    #[arg(long)]
    doc_max_iter: Option<u32>,
    #[arg(long)]
    doc_tol: Option<f64>,
    #[arg(long)]
    sweep_max: Option<u32>,
    #[arg(long)]
    elbo_rel_tol: Option<f64>,
    /// Warm-up sweeps at lag 0 that align shared-topic identities across
    /// the two corpora before the lagged fit; 0 disables staging.
    #[arg(long)]
    stage_sweeps: Option<u32>,
}

impl ModelOverrides {
    fn apply(&self, cfg: &mut ModelConfig) {
        if let Some(v) = self.drift_var {
            cfg.shared_drift_var = v;
            cfg.lead_drift_var = v;
            cfg.lag_drift_var = v;
        }
        if let Some(v) = self.shared_drift_var {
            cfg.shared_drift_var = v;
        }
        if let Some(v) = self.lead_drift_var {
            cfg.lead_drift_var = v;
        }
        if let Some(v) = self.lag_drift_var {
            cfg.lag_drift_var = v;
        }
        if let Some(v) = self.obs_var {
            cfg.obs_var = Some(v);
        }
        if let Some(v) = self.lead_prior {
            cfg.lead_prior = v;
        }
        if let Some(v) = self.lag_prior {
            cfg.lag_prior = v;
        }
        if let Some(v) = self.cg_max_iter {
            cfg.cg_max_iter = v;
        }
        if let Some(v) = self.cg_tol {
            cfg.cg_tol = v;
        }
        if let Some(v) = self.doc_max_iter {
            cfg.doc_max_iter = v;
        }
        if let Some(v) = self.doc_tol {
            cfg.doc_tol = v;
        }
        if let Some(v) = self.sweep_max {
            cfg.sweep_max = v;
        }
        if let Some(v) = self.elbo_rel_tol {
            cfg.elbo_rel_tol = v;
        }
        if let Some(v) = self.stage_sweeps {
            cfg.stage_sweeps = v;
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Generative scenario: 1 = plain softmax chains, 2 = embedded topics.
    #[arg(long)]
    scenario: u8,
    #[command(flatten)]
    topics: TopicArgs,
    /// Time slices T.
    #[arg(long = "T", value_name = "N")]
    horizon: Option<u32>,
    /// Vocabulary size V.
    #[arg(long = "V", value_name = "N")]
    vocab_size: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for corpus.jsonl, vocab.txt, truth.json.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    docs_per_slice_mean: Option<f64>,
    #[arg(long)]
    docs_per_slice_min: Option<u32>,
    #[arg(long)]
    words_per_doc_mean: Option<f64>,
    #[arg(long)]
    words_per_doc_min: Option<u32>,
    /// Lead-side override of --words-per-doc-mean.
    #[arg(long)]
    lead_words_per_doc_mean: Option<f64>,
    /// Lead-side override of --words-per-doc-min.
    #[arg(long)]
    lead_words_per_doc_min: Option<u32>,
    /// Lag-side override of --words-per-doc-mean.
    #[arg(long)]
    lag_words_per_doc_mean: Option<f64>,
    /// Lag-side override of --words-per-doc-min.
    #[arg(long)]
    lag_words_per_doc_min: Option<u32>,
    #[arg(long)]
    shared_drift_var: Option<f64>,
    #[arg(long)]
    lead_drift_var: Option<f64>,
    #[arg(long)]
    lag_drift_var: Option<f64>,
    #[arg(long)]
    proportion_mean_drift_var: Option<f64>,
    /// Embedding dimension (scenario 2 only).
    #[arg(long)]
    embed_dim: Option<u32>,
    /// Minimum Jensen-Shannon divergence between specific-topic initials
    /// (scenario 2 only).
    #[arg(long)]
    js_threshold: Option<f64>,
}

#[derive(Args)]
struct CorpusArgs {
    /// Corpus JSONL file.
    #[arg(long)]
    corpus: PathBuf,
    /// Vocabulary text file, one token per line.
    #[arg(long)]
    vocab: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    input: CorpusArgs,
    #[command(flatten)]
    topics: TopicArgs,
    /// Initialization seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for model.json and elbo.csv.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: ModelOverrides,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    input: CorpusArgs,
    #[command(flatten)]
    topics: TopicArgs,
    /// Seed for the document split and model initialization.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Train fraction of the stratified split.
    #[arg(long, default_value_t = 0.85)]
    train_frac: f64,
    /// Validation fraction; test takes the remainder.
    #[arg(long, default_value_t = 0.05)]
    validation_frac: f64,
    /// Output directory for ppl.csv and ppl.json.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: ModelOverrides,
}

#[derive(Args)]
struct SelectLagArgs {
    #[command(flatten)]
    input: CorpusArgs,
    #[command(flatten)]
    topics: TopicArgs,
    /// Candidate lags, comma-separated (e.g. 1,2,3,4,5).
    #[arg(long, value_delimiter = ',', required = true)]
    grid: Vec<u32>,
    /// Seed for the document split and model initialization.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Train fraction of the stratified split.
    #[arg(long, default_value_t = 0.85)]
    train_frac: f64,
    /// Validation fraction; the rest is held out untouched.
    #[arg(long, default_value_t = 0.05)]
    validation_frac: f64,
    /// Output directory for selection.json and lag_ppl.csv.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: ModelOverrides,
}

#[derive(Args)]
struct DiagnoseCcfArgs {
    #[command(flatten)]
    input: CorpusArgs,
    /// Word whose lead/lag frequency series are correlated.
    #[arg(long)]
    word: String,
    #[arg(long, default_value_t = 5)]
    max_lag: usize,
    /// Output directory for ccf.csv and ccf_summary.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DiagnoseCcmArgs {
    #[command(flatten)]
    input: CorpusArgs,
    /// Word whose lead/lag frequency series are cross-mapped.
    #[arg(long)]
    word: String,
    #[arg(long, default_value_t = 3)]
    embedding_dim: usize,
    #[arg(long, default_value_t = 1)]
    delay: usize,
    #[arg(long, default_value_t = 8)]
    library_steps: usize,
    #[arg(long, default_value_t = 20)]
    resamples: usize,
    #[arg(long, default_value_t = 200)]
    surrogates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for the per-direction skill curves and summary.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportTopWordsArgs {
    /// Fitted model JSON file.
    #[arg(long)]
    model: PathBuf,
    /// Vocabulary file; omitted → synthetic w0000-style token names.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Words per (topic, slice).
    #[arg(long, default_value_t = 7)]
    topn: usize,
    /// Output directory for top_words.csv.
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successes; bad flags are
            // validation failures with usage text.
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    let threads = match resolve_threads(cli.threads) {
        Ok(threads) => threads,
        Err(err) => {
            eprintln!("error: {err}");
            return 1;
        }
    };
    if let Some(n) = threads {
        if let Err(err) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: could not configure {n} worker threads: {err}");
            return 2;
        }
    }
    match run(cli.command, threads) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            match err.kind() {
                ErrorKind::Validation => 1,
                ErrorKind::Runtime => 2,
            }
        }
    }
}

/// LEADLAG_THREADS wins over `--threads` when both are given.
fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>> {
    let chosen = match std::env::var("LEADLAG_THREADS") {
        Ok(raw) => Some(raw.trim().parse::<usize>().map_err(|_| {
            Error::Validation(format!(
                "LEADLAG_THREADS must be a positive integer, got {raw:?}"
            ))
        })?),
        Err(_) => flag,
    };
    if chosen == Some(0) {
        return Err(Error::Validation("thread count must be at least 1".into()));
    }
    Ok(chosen)
}

fn run(command: Command, threads: Option<usize>) -> Result<()> {
    let started = Instant::now();
    match command {
        Command::Generate(args) => run_generate(args, threads, started),
        Command::Fit(args) => run_fit(args, threads, started),
        Command::Eval(args) => run_eval(args, threads, started),
        Command::SelectLag(args) => run_select_lag(args, threads, started),
        Command::DiagnoseCcf(args) => run_diagnose_ccf(args, threads, started),
        Command::DiagnoseCcm(args) => run_diagnose_ccm(args, threads, started),
        Command::ReportTopWords(args) => run_report_top_words(args, threads, started),
    }
}

fn ensure_out_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Echoes the resolved configuration, seed, versions, and wall time so a run
/// can be reproduced from the manifest alone.
fn write_manifest<C: serde::Serialize>(
    out: &Path,
    command: &str,
    config: &C,
    seed: Option<u64>,
    threads: Option<usize>,
    started: Instant,
) -> Result<()> {
    let manifest = serde_json::json!({
        "command": command,
        "argv": std::env::args().collect::<Vec<String>>(),
        "config": serde_json::to_value(config)
            .map_err(|e| Error::Validation(format!("serialize config: {e}")))?,
        "seed": seed,
        "threads": threads,
        "versions": {
            "leadlag-cli": env!("CARGO_PKG_VERSION"),
            "leadlag-core": leadlag_core::VERSION,
        },
        "wall_time_seconds": started.elapsed().as_secs_f64(),
    });
    reports::write_json(out.join("manifest.json"), &manifest)
}

fn build_gen_config(args: &GenerateArgs) -> Result<GenConfig> {
    let t = &args.topics;
    let mut cfg = match args.scenario {
        1 => GenConfig::scenario1(t.shared_topics, t.lead_topics, t.lag_topics, t.lag, args.seed),
        2 => GenConfig::scenario2(t.shared_topics, t.lead_topics, t.lag_topics, t.lag, args.seed),
        other => {
            return Err(Error::Validation(format!(
                "scenario must be 1 or 2, got {other}"
            )))
        }
    };
    if let Some(v) = args.horizon {
        cfg.horizon = v;
    }
    if let Some(v) = args.vocab_size {
        cfg.vocab_size = v;
    }
    if let Some(v) = args.docs_per_slice_mean {
        cfg.docs_per_slice_mean = v;
    }
    if let Some(v) = args.docs_per_slice_min {
        cfg.docs_per_slice_min = v;
    }
    if let Some(v) = args.words_per_doc_mean {
        cfg.words_per_doc_mean = v;
    }
    if let Some(v) = args.words_per_doc_min {
        cfg.words_per_doc_min = v;
    }
    if args.lead_words_per_doc_mean.is_some() {
        cfg.lead_words_per_doc_mean = args.lead_words_per_doc_mean;
    }
    if args.lead_words_per_doc_min.is_some() {
        cfg.lead_words_per_doc_min = args.lead_words_per_doc_min;
    }
    if args.lag_words_per_doc_mean.is_some() {
        cfg.lag_words_per_doc_mean = args.lag_words_per_doc_mean;
    }
    if args.lag_words_per_doc_min.is_some() {
        cfg.lag_words_per_doc_min = args.lag_words_per_doc_min;
    }
    if let Some(v) = args.shared_drift_var {
        cfg.shared_drift_var = v;
    }
    if let Some(v) = args.lead_drift_var {
        cfg.lead_drift_var = v;
    }
    if let Some(v) = args.lag_drift_var {
        cfg.lag_drift_var = v;
    }
    if let Some(v) = args.proportion_mean_drift_var {
        cfg.proportion_mean_drift_var = v;
    }
    if let Some(v) = args.embed_dim {
        cfg.embed_dim = v;
    }
    if let Some(v) = args.js_threshold {
        cfg.js_threshold = v;
    }
    Ok(cfg)
}

fn run_generate(args: GenerateArgs, threads: Option<usize>, started: Instant) -> Result<()> {
    let cfg = build_gen_config(&args)?;
    let (corpus, truth) = match cfg.scenario {
        Scenario::Plain => generate_scenario1(&cfg)?,
        Scenario::Embedded => generate_scenario2(&cfg)?,
    };
    ensure_out_dir(&args.out)?;
    corpus.save(args.out.join("corpus.jsonl"))?;
    corpus.vocab().save(args.out.join("vocab.txt"))?;
    truth.save(args.out.join("truth.json"))?;
    write_manifest(&args.out, "generate", &cfg, Some(cfg.seed), threads, started)
}

fn build_model_config(topics: &TopicArgs, seed: u64, overrides: &ModelOverrides) -> ModelConfig {
    let mut cfg = ModelConfig::new(
        topics.shared_topics,
        topics.lead_topics,
        topics.lag_topics,
        topics.lag,
    );
    cfg.init_seed = seed;
    overrides.apply(&mut cfg);
    cfg
}

fn run_fit(args: FitArgs, threads: Option<usize>, started: Instant) -> Result<()> {
    let corpus = CorpusPair::load(&args.input.corpus, &args.input.vocab)?;
    let cfg = build_model_config(&args.topics, args.seed, &args.overrides);
    let model = fit(&corpus, &cfg)?;
    ensure_out_dir(&args.out)?;
    save_model(&model, args.out.join("model.json"))?;
    reports::write_elbo_csv(args.out.join("elbo.csv"), &model.elbo_trace)?;
    write_manifest(&args.out, "fit", &cfg, Some(args.seed), threads, started)
}

fn run_eval(args: EvalArgs, threads: Option<usize>, started: Instant) -> Result<()> {
    let corpus = CorpusPair::load(&args.input.corpus, &args.input.vocab)?;
    let cfg = build_model_config(&args.topics, args.seed, &args.overrides);
    let fractions = SplitFractions {
        train: args.train_frac,
        validation: args.validation_frac,
    };
    let split = stratified_split(&corpus, fractions, args.seed)?;
    let test_docs: Vec<_> = split.test.documents().cloned().collect();

    let joint_model = fit(&split.train, &cfg)?;
    let joint = completion_perplexity(&joint_model, &test_docs)?;
    let (lead_model, lag_model) = fit_separate(&split.train, &cfg)?;
    let separate = completion_perplexity_separate(&lead_model, &lag_model, &test_docs)?;
    let pooled_model = fit_combined(&split.train, &cfg)?;
    let pooled = completion_perplexity_combined(&pooled_model, &test_docs)?;

    let mut rows = reports::ppl_rows("jdtm", cfg.lag, &joint);
    rows.extend(reports::ppl_rows("dtms", 0, &separate));
    rows.extend(reports::ppl_rows("dtmc", 0, &pooled));

    ensure_out_dir(&args.out)?;
    reports::write_ppl_csv(args.out.join("ppl.csv"), &rows)?;
    reports::write_json(
        args.out.join("ppl.json"),
        &serde_json::json!({
            "lag": cfg.lag,
            "methods": {
                "jdtm": joint,
                "dtms": separate,
                "dtmc": pooled,
            },
        }),
    )?;
    write_manifest(&args.out, "eval", &cfg, Some(args.seed), threads, started)
}

fn run_select_lag(args: SelectLagArgs, threads: Option<usize>, started: Instant) -> Result<()> {
    let corpus = CorpusPair::load(&args.input.corpus, &args.input.vocab)?;
    let cfg = build_model_config(&args.topics, args.seed, &args.overrides);
    let fractions = SplitFractions {
        train: args.train_frac,
        validation: args.validation_frac,
    };
    let selection = select_lag(&corpus, &cfg, &args.grid, fractions, args.seed)?;
    ensure_out_dir(&args.out)?;
    let rows: Vec<reports::PplRow> = selection
        .ppl_per_lag
        .iter()
        .map(|&(lag, ppl)| reports::PplRow {
            method: "jdtm".into(),
            corpus: "lag".into(),
            lag,
            ppl,
        })
        .collect();
    reports::write_ppl_csv(args.out.join("lag_ppl.csv"), &rows)?;
    reports::write_json(args.out.join("selection.json"), &selection)?;
    write_manifest(&args.out, "select-lag", &cfg, Some(args.seed), threads, started)
}

/// Resolves a token to its word index.
fn word_index(vocab: &Vocabulary, word: &str) -> Result<u32> {
    vocab
        .index_of(word)
        .ok_or_else(|| Error::Validation(format!("word {word:?} not in vocabulary")))
}

fn run_diagnose_ccf(args: DiagnoseCcfArgs, threads: Option<usize>, started: Instant) -> Result<()> {
    let corpus = CorpusPair::load(&args.input.corpus, &args.input.vocab)?;
    let word = word_index(corpus.vocab(), &args.word)?;
    let lead = word_frequency_series(&corpus, word, Side::Lead)?;
    let lag = word_frequency_series(&corpus, word, Side::Lag)?;
    let ccf = lagged_ccf(&lead.values, &lag.values, args.max_lag)?;

    let peak = ccf
        .points
        .iter()
        .filter_map(|p| p.coefficient.map(|c| (p.lag, c)))
        .max_by(|a, b| a.1.total_cmp(&b.1));
    ensure_out_dir(&args.out)?;
    reports::write_ccf_csv(args.out.join("ccf.csv"), &ccf)?;
    reports::write_json(
        args.out.join("ccf_summary.json"),
        &serde_json::json!({
            "word": args.word,
            "word_index": word,
            "n": ccf.n,
            "band": ccf.band,
            "peak_lag": peak.map(|(l, _)| l),
            "peak_ccf": peak.map(|(_, c)| c),
            "lead_empty_slices": lead.empty_slices,
            "lag_empty_slices": lag.empty_slices,
            "convention": "positive lag means the lead-corpus series leads",
        }),
    )?;
    write_manifest(
        &args.out,
        "diagnose-ccf",
        &serde_json::json!({"word": args.word, "max_lag": args.max_lag}),
        None,
        threads,
        started,
    )
}

fn run_diagnose_ccm(args: DiagnoseCcmArgs, threads: Option<usize>, started: Instant) -> Result<()> {
    let corpus = CorpusPair::load(&args.input.corpus, &args.input.vocab)?;
    let word = word_index(corpus.vocab(), &args.word)?;
    let lead = word_frequency_series(&corpus, word, Side::Lead)?;
    let lag = word_frequency_series(&corpus, word, Side::Lag)?;
    let opts = CcmOptions {
        embedding_dim: args.embedding_dim,
        delay: args.delay,
        library_steps: args.library_steps,
        resamples: args.resamples,
        surrogates: args.surrogates,
        seed: args.seed,
    };
    // ccm(x, y) recovers x from y's embedding — evidence that x drives y.
    let lead_drives_lag = ccm(&lead.values, &lag.values, &opts)?;
    let lag_drives_lead = ccm(&lag.values, &lead.values, &opts)?;

    ensure_out_dir(&args.out)?;
    reports::write_ccm_csv(args.out.join("ccm_lead_drives_lag.csv"), &lead_drives_lag)?;
    reports::write_ccm_csv(args.out.join("ccm_lag_drives_lead.csv"), &lag_drives_lead)?;
    let digest = |curve: &leadlag_core::diagnostics::SkillCurve| {
        serde_json::json!({
            "statistic": curve.terminal_rho,
            "p_value": curve.p_value,
            "no_skill": curve.no_skill,
            "unpredictable": curve.unpredictable,
        })
    };
    reports::write_json(
        args.out.join("ccm_summary.json"),
        &serde_json::json!({
            "word": args.word,
            "word_index": word,
            "lead_drives_lag": digest(&lead_drives_lag),
            "lag_drives_lead": digest(&lag_drives_lead),
        }),
    )?;
    write_manifest(&args.out, "diagnose-ccm", &opts, Some(args.seed), threads, started)
}

fn run_report_top_words(
    args: ReportTopWordsArgs,
    threads: Option<usize>,
    started: Instant,
) -> Result<()> {
    let model = load_model(&args.model)?;
    let vocab = match &args.vocab {
        Some(path) => Vocabulary::load(path)?,
        None => Vocabulary::synthetic(model.vocab_size),
    };
    let rows = reports::top_words(&model, &vocab, args.topn)?;
    ensure_out_dir(&args.out)?;
    reports::write_top_words_csv(args.out.join("top_words.csv"), &rows)?;
    write_manifest(
        &args.out,
        "report-top-words",
        &serde_json::json!({"model": args.model, "topn": args.topn}),
        None,
        threads,
        started,
    )
}
