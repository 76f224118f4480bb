//! The `xlex` command line: `stats | train | align | eval`.
//!
//! Every command that writes files also writes `manifest.conf`; passing it
//! back with `--config` reruns the command with the same parameters.
//!
//! Exit codes: 0 success, 1 other failure, 2 I/O, 3 parse or format,
//! 4 dimension mismatch.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::align::{self, AlignmentModel};
use crate::config::RunConfig;
use crate::corpus::{count_words, RawCorpus};
use crate::embedding::{EmbeddingMatrix, TrainingMode};
use crate::error::{Error, Result};
use crate::eval::{self, EvalReport};
use crate::pipeline::{self, CorpusSource, Trained};

#[derive(Debug, Parser)]
#[command(name = "xlex", version, about = "Monolingual and cross-lingual word embeddings")]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Token and word-type counts of one or more corpora.
    Stats {
        #[arg(required = true)]
        corpora: Vec<PathBuf>,
    },
    /// Train embeddings on a corpus.
    Train(TrainArgs),
    /// Map two embedding spaces into a shared space without supervision.
    Align(AlignArgs),
    /// Coverage and Spearman correlation on word-similarity datasets.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Key-value run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "xlex-out")]
    out: PathBuf,
    /// Random seed [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads [default: available parallelism]
    #[arg(long, env = "XLEX_THREADS")]
    threads: Option<usize>,
    /// One training thread, so reruns are byte-identical.
    #[arg(long)]
    deterministic: bool,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Corpus files, plain or gzip; may also come from the config.
    corpora: Vec<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
    /// skipgram or subword [default: skipgram]
    #[arg(long)]
    mode: Option<TrainingMode>,
    /// Vector dimension [default: 300]
    #[arg(long)]
    dim: Option<usize>,
    /// Maximum context window [default: 4]
    #[arg(long)]
    window: Option<usize>,
    /// Minimum word count [default: 1]
    #[arg(long)]
    min_count: Option<u64>,
    /// Passes over the corpus [default: 100]
    #[arg(long)]
    epochs: Option<usize>,
    /// Negative samples per positive pair [default: 5]
    #[arg(long)]
    negatives: Option<usize>,
    /// Initial learning rate [default: 0.025]
    #[arg(long)]
    lr: Option<f64>,
    /// Shortest character n-gram [default: 3]
    #[arg(long)]
    nmin: Option<usize>,
    /// Longest character n-gram [default: 6]
    #[arg(long)]
    nmax: Option<usize>,
    /// N-gram hash buckets [default: 2000000]
    #[arg(long)]
    buckets: Option<usize>,
    /// Frequent-word subsampling threshold, 0 disables [default: 0]
    #[arg(long)]
    subsample: Option<f64>,
    /// Words to compose from subword units into oov.vec (subword mode).
    #[arg(long)]
    oov_words: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AlignArgs {
    /// Source embeddings; may also come from the config.
    source: Option<PathBuf>,
    /// Target embeddings; may also come from the config.
    target: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
    /// CSLS neighborhood size [default: 10]
    #[arg(long)]
    csls_k: Option<usize>,
    /// Most frequent words used in self-learning [default: 20000]
    #[arg(long)]
    vocab_cutoff: Option<usize>,
    /// Most frequent words used for the initial dictionary [default: 4000]
    #[arg(long)]
    init_vocab: Option<usize>,
    /// Self-learning iteration limit [default: 500]
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Whitening and re-weighting instead of a purely orthogonal map.
    #[arg(long)]
    advanced_mapping: bool,
    /// Known `source<TAB>target` pairs; P@1 against them goes to the log.
    #[arg(long)]
    gold: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Embedding files; with --cross-lingual exactly two (source, target).
    #[arg(long = "embeddings", required = true, num_args = 1..)]
    embeddings: Vec<PathBuf>,
    /// Similarity datasets (three columns, optional header).
    #[arg(long = "dataset", required = true, num_args = 1..)]
    datasets: Vec<PathBuf>,
    /// Look word1 up in the first space and word2 in the second.
    #[arg(long)]
    cross_lingual: bool,
    /// Also print `model<TAB>dataset<TAB>coverage<TAB>spearman` lines.
    #[arg(long)]
    tsv: bool,
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } | Error::Stream(_) => 2,
        Error::Decode { .. } | Error::Format { .. } | Error::DuplicateEntry { .. } => 3,
        Error::DimensionMismatch(..) => 4,
        _ => 1,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 3 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    let stdout = io::stdout();
    let result = match cli.command {
        Command::Stats { corpora } => cmd_stats(&corpora, &mut stdout.lock()),
        Command::Train(a) => cmd_train(a),
        Command::Align(a) => cmd_align(a),
        Command::Eval(a) => cmd_eval(a, &mut stdout.lock()),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn name_of(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned());
    let name = name.unwrap_or_else(|| path.display().to_string());
    // corpus.txt.gz and model.vec both shorten to their first component
    name.split('.').next().filter(|s| !s.is_empty()).unwrap_or(&name).to_string()
}

fn cmd_stats(corpora: &[PathBuf], out: &mut impl Write) -> Result<()> {
    let mut rows = Vec::new();
    for path in corpora {
        let counts = count_words(RawCorpus::open(path)?)?;
        rows.push((name_of(path), counts.tokens(), counts.unique()));
    }
    let width = rows.iter().map(|r| r.0.chars().count()).max().unwrap_or(0);
    for (name, tokens, unique) in rows {
        writeln!(out, "{name:<width$}  tokens={tokens}  unique={unique}")?;
    }
    Ok(())
}

/// Config file first, then flags.
fn base_config(run: &RunArgs) -> Result<RunConfig> {
    let mut config = match &run.config {
        Some(p) => RunConfig::load(p)?,
        None => {
            let mut c = RunConfig::default();
            c.training.threads = std::thread::available_parallelism().map_or(1, |n| n.get());
            c
        }
    };
    if let Some(seed) = run.seed {
        config.training.seed = seed;
        config.alignment.seed = seed;
    }
    if let Some(t) = run.threads {
        config.training.threads = t;
    }
    config.deterministic |= run.deterministic;
    if config.deterministic {
        config.training.threads = 1;
    }
    Ok(config)
}

fn set_threads(config: &RunConfig) {
    // alignment results do not depend on the pool size
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(config.training.threads.max(1))
        .build_global();
}

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn write_manifest(dir: &Path, command: &str, config: &RunConfig) -> Result<()> {
    let path = dir.join("manifest.conf");
    let text = format!("# xlex {command}\n{}", config.to_manifest());
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let mut config = base_config(&a.run)?;
    let t = &mut config.training;
    macro_rules! apply {
        ($($flag:ident => $field:ident),*) => {
            $(if let Some(v) = a.$flag { t.$field = v; })*
        };
    }
    apply!(mode => mode, dim => dim, window => window, min_count => min_count,
        epochs => epochs, negatives => negatives, lr => initial_lr, nmin => nmin,
        nmax => nmax, buckets => buckets, subsample => subsample);
    if !a.corpora.is_empty() {
        config.corpus = a.corpora.clone();
    }
    if config.corpus.is_empty() {
        return Err(Error::parameter("no corpus given"));
    }
    let training = config.effective_training();
    training.validate()?;
    set_threads(&config);

    let sources: Vec<CorpusSource> = config.corpus.iter().cloned().map(CorpusSource::from).collect();
    let trained = pipeline::train(&sources, &training)?;
    let embedding = trained.embedding()?;

    let out = &a.run.out;
    create_out(out)?;
    embedding.write_text(create(&out.join("embeddings.vec"))?)?;
    embedding.vocab().write_tsv(create(&out.join("vocab.tsv"))?)?;
    if let Some(list) = &a.oov_words {
        let Trained::Subword(model) = &trained else {
            return Err(Error::parameter("--oov-words needs --mode subword"));
        };
        write_oov(model, list, &out.join("oov.vec"))?;
    }
    write_manifest(out, "train", &config)?;
    eprintln!("{} words x {} written to {}", embedding.len(), embedding.dim(), out.display());
    Ok(())
}

fn write_oov(model: &crate::subword::SubwordModel, list: &Path, dest: &Path) -> Result<()> {
    let text = fs::read_to_string(list).map_err(|e| Error::io(list, e))?;
    let mut words = Vec::new();
    let mut rows = Vec::new();
    for w in text.split_whitespace().flat_map(crate::corpus::preprocess) {
        if words.contains(&w) {
            continue;
        }
        match model.word_vector(&w) {
            Ok(v) => {
                rows.extend(v.iter().copied());
                words.push(w);
            }
            Err(e) => log::warn!("{e}"),
        }
    }
    let vocab = crate::corpus::Vocabulary::from_words(words)?;
    let dim = model.units.ncols();
    let matrix = ndarray::Array2::from_shape_vec((vocab.len(), dim), rows)
        .map_err(|e| Error::Numerical(e.to_string()))?;
    EmbeddingMatrix::new(vocab, matrix)?.write_text(create(dest)?)
}

fn alignment_log(model: &AlignmentModel, p1: Option<(usize, f64)>) -> String {
    let mut log = String::new();
    for r in &model.history {
        log.push_str(&format!(
            "iteration={} keep_prob={} objective={:.9} dictionary={}\n",
            r.iteration, r.keep_prob, r.objective, r.dictionary_size
        ));
    }
    log.push_str(&format!(
        "converged={} iterations={} objective={:.9}\n",
        model.converged, model.iterations, model.objective
    ));
    if let Some((n, p)) = p1 {
        log.push_str(&format!("p@1={:.2} gold_pairs={n}\n", 100.0 * p));
    }
    log
}

fn cmd_align(a: AlignArgs) -> Result<()> {
    let mut config = base_config(&a.run)?;
    let c = &mut config.alignment;
    if let Some(v) = a.csls_k {
        c.csls_k = v;
    }
    if let Some(v) = a.vocab_cutoff {
        c.vocab_cutoff = v;
    }
    if let Some(v) = a.init_vocab {
        c.init_vocab = v;
    }
    if let Some(v) = a.max_iterations {
        c.max_iterations = v;
    }
    if a.advanced_mapping {
        c.orthogonal = false;
    }
    if a.source.is_some() {
        config.source = a.source.clone();
    }
    if a.target.is_some() {
        config.target = a.target.clone();
    }
    let (Some(sp), Some(tp)) = (config.source.clone(), config.target.clone()) else {
        return Err(Error::parameter("source and target embeddings are required"));
    };
    config.alignment.validate()?;
    set_threads(&config);

    let source = EmbeddingMatrix::load(&sp)?;
    let target = EmbeddingMatrix::load(&tp)?;
    let model = align::align(&source, &target, &config.alignment)?;
    let (ms, mt) = align::mapped_embeddings(&source, &target, &model)?;
    let p1 = match &a.gold {
        Some(g) => {
            let file = File::open(g).map_err(|e| Error::io(g, e))?;
            let gold = align::read_dictionary(BufReader::new(file), source.vocab(), target.vocab())?;
            let p = align::precision_at_1(align::to_f64(&ms).view(), align::to_f64(&mt).view(), &gold);
            Some((gold.len(), p))
        }
        None => None,
    };

    let out = &a.run.out;
    create_out(out)?;
    align::write_transform(create(&out.join("w_source.txt"))?, &model.w_source)?;
    align::write_transform(create(&out.join("w_target.txt"))?, &model.w_target)?;
    ms.write_text(create(&out.join("source.mapped.vec"))?)?;
    mt.write_text(create(&out.join("target.mapped.vec"))?)?;
    align::write_dictionary(
        create(&out.join("dictionary.tsv"))?,
        &model.induced_dictionary,
        source.vocab(),
        target.vocab(),
    )?;
    let log = alignment_log(&model, p1);
    let path = out.join("align.log");
    fs::write(&path, &log).map_err(|e| Error::io(&path, e))?;
    write_manifest(out, "align", &config)?;
    eprint!("{}", log.lines().filter(|l| !l.starts_with("iteration=")).map(|l| format!("{l}\n")).collect::<String>());
    Ok(())
}

fn cmd_eval(a: EvalArgs, out: &mut impl Write) -> Result<()> {
    let models: Vec<EmbeddingMatrix> = a.embeddings.iter().map(EmbeddingMatrix::load).collect::<Result<_>>()?;
    if a.cross_lingual && models.len() != 2 {
        return Err(Error::parameter("--cross-lingual takes exactly two embedding files"));
    }
    let mut first_error: Option<Error> = None;
    let mut reports: Vec<EvalReport> = Vec::new();
    let mut evaluate_all = |model_id: &str, f: &dyn Fn(&eval::SimilarityDataset) -> EvalReport| {
        for path in &a.datasets {
            match eval::load_dataset_file(path) {
                Ok(d) => {
                    let r = f(&d);
                    if let (Some(e), None) = (&r.error, &first_error) {
                        first_error = Some(Error::UndefinedCorrelation(e.clone()));
                    }
                    reports.push(r);
                }
                Err(e) => {
                    reports.push(EvalReport::failed(model_id, &name_of(path), &e));
                    first_error.get_or_insert(e);
                }
            }
        }
    };
    if a.cross_lingual {
        let id = format!("{}-{}", name_of(&a.embeddings[0]), name_of(&a.embeddings[1]));
        evaluate_all(&id, &|d| eval::evaluate_cross(&id, &models[0], &models[1], d));
    } else {
        let names: Vec<String> = a.embeddings.iter().map(|p| name_of(p)).collect();
        for ((path, m), name) in a.embeddings.iter().zip(&models).zip(&names) {
            // same-named files in different directories keep their full path
            let clash = names.iter().filter(|n| *n == name).count() > 1;
            let id = if clash { path.display().to_string() } else { name.clone() };
            evaluate_all(&id, &|d| eval::evaluate(&id, m, d));
        }
    }
    write!(out, "{}", eval::format_table(&reports))?;
    if a.tsv {
        for r in &reports {
            writeln!(out, "{}", r.machine_line())?;
        }
    }
    for r in reports.iter().filter(|r| r.rejected_rows > 0) {
        eprintln!("warning: {}: {} rows rejected", r.dataset, r.rejected_rows);
    }
    out.flush()?;
    first_error.map_or(Ok(()), Err)
}
