//! Command-line pipeline: label → build-net → train → infer / nearest /
//! eval. Stages exchange on-disk artifacts.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use ise::corpus::{read_stopwords, CorpusOptions, LabeledCorpus, DEFAULT_MIN_COUNT};
use ise::eval::{evaluate_classification, evaluate_similarity, load_similarity_pairs, nearest_neighbors, DEFAULT_L2};
use ise::hetnet::HeterogeneousNetwork;
use ise::identity::{
    infer_document_identities, label_category, label_sentiment, label_topics, select_sentiment_words, LdaParams,
    DEFAULT_BETA, DEFAULT_SENTIMENT_THRESHOLD, DEFAULT_SWEEPS,
};
use ise::model_io::{load_model, save_model};
use ise::seed::{stage_seed, Stage};
use ise::trainer::{train, TrainerConfig, DEFAULT_DIM, DEFAULT_NEGATIVES, DEFAULT_RHO0, DEFAULT_SAMPLES, DEFAULT_WINDOW};
use ise::Error;

pub const LEXICON_FILE: &str = "lexicon.tsv";

#[derive(Debug, Parser)]
#[command(name = "ise", version, about = "Identity-sensitive word embeddings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Label every token with an LDA topic.
    LabelTopics(LabelTopicsArgs),
    /// Label polar words with their document's sentiment, others neutral.
    /// Input lines are `label<TAB>text` with two labels.
    LabelSentiment(LabelSentimentArgs),
    /// Label every token with its document's class. Input lines are
    /// `label<TAB>text`.
    LabelCategory(LabelCategoryArgs),
    /// Build the word-context and word-identity networks.
    BuildNet(BuildNetArgs),
    /// Embed a saved network.
    Train(TrainArgs),
    /// Tag each token of a text file with its inferred identity.
    InferIdentity(InferArgs),
    /// Nearest senses of a word or `word#identity`.
    Nearest(NearestArgs),
    /// Document classification with averaged sense vectors.
    EvalClassify(EvalClassifyArgs),
    /// Contextual word similarity against human ratings.
    EvalSimilarity(EvalSimilarityArgs),
}

#[derive(Debug, Args)]
pub struct CorpusInput {
    /// Corpus text, one document per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Output corpus directory.
    #[arg(long)]
    pub output: PathBuf,
    /// Minimum token count to keep a word.
    #[arg(long, default_value_t = DEFAULT_MIN_COUNT)]
    pub min_count: u64,
    /// Stopword list, one word per line.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LabelTopicsArgs {
    #[command(flatten)]
    pub corpus: CorpusInput,
    /// Lines are `label<TAB>text`.
    #[arg(long)]
    pub labeled: bool,
    /// Number of topics.
    #[arg(long)]
    pub topics: usize,
    /// Document-topic prior [default: 50/topics]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Topic-word prior.
    #[arg(long, default_value_t = DEFAULT_BETA)]
    pub beta: f64,
    /// Gibbs sweeps.
    #[arg(long, default_value_t = DEFAULT_SWEEPS)]
    pub iters: usize,
    /// Random seed.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct LabelSentimentArgs {
    #[command(flatten)]
    pub corpus: CorpusInput,
    /// Minimum smoothed probability ratio for a polar word.
    #[arg(long, default_value_t = DEFAULT_SENTIMENT_THRESHOLD)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct LabelCategoryArgs {
    #[command(flatten)]
    pub corpus: CorpusInput,
}

#[derive(Debug, Args)]
pub struct BuildNetArgs {
    /// Labeled corpus directory.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output network directory.
    #[arg(long)]
    pub output: PathBuf,
    /// Co-occurrence window on each side.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    /// Collapse all identities into one (plain word embedding baseline).
    #[arg(long)]
    pub single_identity: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Network directory.
    #[arg(long)]
    pub net: PathBuf,
    /// Output model directory.
    #[arg(long)]
    pub output: PathBuf,
    /// Embedding dimension.
    #[arg(long, default_value_t = DEFAULT_DIM)]
    pub dim: usize,
    /// Negative samples per edge.
    #[arg(long, default_value_t = DEFAULT_NEGATIVES)]
    pub negatives: usize,
    /// Training iterations; each draws one edge from each network.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: u64,
    /// Initial learning rate.
    #[arg(long, default_value_t = DEFAULT_RHO0)]
    pub rho0: f64,
    /// Training threads; one thread gives reproducible output.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Random seed.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    /// Model directory.
    #[arg(long)]
    pub model: PathBuf,
    /// Text, one document per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Output file [default: stdout]
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Stopword list, one word per line.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NearestArgs {
    /// Model directory.
    #[arg(long)]
    pub model: PathBuf,
    /// `word#identity`, or a bare word for all of its senses.
    #[arg(long)]
    pub query: String,
    /// Number of neighbours.
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Skip other senses of the query word.
    #[arg(long)]
    pub exclude_same_word: bool,
}

#[derive(Debug, Args)]
pub struct EvalClassifyArgs {
    /// Model directory.
    #[arg(long)]
    pub model: PathBuf,
    /// Labeled training corpus directory the model was built from.
    #[arg(long)]
    pub train: PathBuf,
    /// Test text with `label<TAB>text` lines.
    #[arg(long)]
    pub test: PathBuf,
    /// L2 penalty of the logistic regression.
    #[arg(long, default_value_t = DEFAULT_L2)]
    pub l2: f64,
    /// Stopword list, one word per line.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Report file [default: stdout]
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalSimilarityArgs {
    /// Model directory.
    #[arg(long)]
    pub model: PathBuf,
    /// Pairs file: `word1<TAB>context1<TAB>word2<TAB>context2<TAB>score`.
    #[arg(long)]
    pub pairs: PathBuf,
    /// Stopword list, one word per line.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
}

/// A failure with a machine-parsable category.
#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let kind = match &e {
            Error::Io { .. } => "io",
            Error::Format { .. } => "format",
            Error::InvalidParameter(_) => "param",
            _ => "data",
        };
        Self {
            kind,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
    .into()
}

fn param(message: impl Into<String>) -> CliError {
    CliError {
        kind: "param",
        message: message.into(),
    }
}

fn stopwords(path: &Option<PathBuf>) -> CliResult<HashSet<String>> {
    Ok(match path {
        Some(p) => read_stopwords(p)?,
        None => HashSet::new(),
    })
}

fn load_corpus(input: &CorpusInput, labeled: bool) -> CliResult<LabeledCorpus> {
    if input.min_count == 0 {
        return Err(param("--min-count must be at least 1"));
    }
    let options = CorpusOptions {
        min_count: input.min_count,
        stopwords: stopwords(&input.stopwords)?,
    };
    Ok(LabeledCorpus::load(&input.input, labeled, &options)?)
}

fn emit(out: &mut dyn Write, path: &Option<PathBuf>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| io_error(p, e)),
        None => out.write_all(text.as_bytes()).map_err(|e| io_error(Path::new("<stdout>"), e)),
    }
}

fn label_topics_cmd(a: &LabelTopicsArgs, out: &mut dyn Write) -> CliResult<()> {
    if a.topics == 0 {
        return Err(param("--topics must be at least 1"));
    }
    let corpus = load_corpus(&a.corpus, a.labeled)?;
    let mut params = LdaParams::new(a.topics);
    if let Some(alpha) = a.alpha {
        params.alpha = alpha;
    }
    params.beta = a.beta;
    params.sweeps = a.iters;
    let labeled = label_topics(&corpus, &params, stage_seed(a.seed, Stage::Label))?;
    labeled.save(&a.corpus.output)?;
    let _ = writeln!(out, "docs={} tokens={} vocab={} topics={}", labeled.docs.len(), labeled.num_tokens(), labeled.vocab.len(), a.topics);
    Ok(())
}

fn label_sentiment_cmd(a: &LabelSentimentArgs, out: &mut dyn Write) -> CliResult<()> {
    let corpus = load_corpus(&a.corpus, true)?;
    let lexicon = select_sentiment_words(&corpus, a.threshold)?;
    let labeled = label_sentiment(&corpus, &lexicon)?;
    labeled.save(&a.corpus.output)?;
    lexicon.save(a.corpus.output.join(LEXICON_FILE), &corpus)?;
    let _ = writeln!(out, "docs={} tokens={} vocab={} polar_words={}", labeled.docs.len(), labeled.num_tokens(), labeled.vocab.len(), lexicon.len());
    Ok(())
}

fn label_category_cmd(a: &LabelCategoryArgs, out: &mut dyn Write) -> CliResult<()> {
    let corpus = load_corpus(&a.corpus, true)?;
    let labeled = label_category(&corpus)?;
    labeled.save(&a.corpus.output)?;
    let _ = writeln!(out, "docs={} tokens={} vocab={} classes={}", labeled.docs.len(), labeled.num_tokens(), labeled.vocab.len(), labeled.num_classes());
    Ok(())
}

fn build_net_cmd(a: &BuildNetArgs, out: &mut dyn Write) -> CliResult<()> {
    if a.window == 0 {
        return Err(param("--window must be at least 1"));
    }
    let mut corpus = LabeledCorpus::load_saved(&a.corpus)?;
    if a.single_identity {
        corpus = corpus.with_single_identity();
    }
    let net = HeterogeneousNetwork::build(&corpus, a.window)?;
    net.save(&a.output)?;
    let _ = writeln!(
        out,
        "senses={} word_context_edges={} word_context_weight={} word_identity_edges={} word_identity_weight={}",
        net.senses.len(),
        net.word_context.len(),
        net.word_context.total_weight(),
        net.word_identity.len(),
        net.word_identity.total_weight()
    );
    Ok(())
}

fn train_cmd(a: &TrainArgs, out: &mut dyn Write) -> CliResult<()> {
    let net = HeterogeneousNetwork::load(&a.net)?;
    let config = TrainerConfig {
        dim: a.dim,
        negatives: a.negatives,
        samples: a.samples,
        rho0: a.rho0,
        seed: stage_seed(a.seed, Stage::Train),
        workers: a.workers,
        ..Default::default()
    };
    config.validate()?;
    let (model, stats) = train(&net, &config)?;
    save_model(&model, &a.output)?;
    let _ = writeln!(
        out,
        "senses={} dim={} word_context_updates={} word_identity_updates={} dropped_negatives={}",
        model.num_senses(),
        model.dim(),
        stats.word_context_updates,
        stats.word_identity_updates,
        stats.dropped_negatives
    );
    Ok(())
}

fn infer_cmd(a: &InferArgs, out: &mut dyn Write) -> CliResult<()> {
    let model = load_model(&a.model)?;
    let stop = stopwords(&a.stopwords)?;
    let text = fs::read_to_string(&a.input).map_err(|e| io_error(&a.input, e))?;
    let mut rendered = String::new();
    for line in text.lines() {
        let tokens = ise::corpus::tokenize(line, &stop);
        let known: Vec<u32> = tokens.iter().filter_map(|t| model.word_id(t)).collect();
        let mut inferred = infer_document_identities(&model, &known).into_iter();
        let tagged: Vec<String> = tokens
            .iter()
            .map(|t| match model.word_id(t) {
                Some(_) => match inferred.next().flatten() {
                    Some(i) => format!("{t}#{i}"),
                    None => format!("{t}#?"),
                },
                None => format!("{t}#?"),
            })
            .collect();
        rendered.push_str(&tagged.join(" "));
        rendered.push('\n');
    }
    emit(out, &a.output, &rendered)
}

fn nearest_cmd(a: &NearestArgs, out: &mut dyn Write) -> CliResult<()> {
    let model = load_model(&a.model)?;
    let rows: Vec<u32> = if a.query.contains('#') {
        vec![model.find_sense(&a.query)?]
    } else {
        let w = model.word_id(&a.query).ok_or_else(|| Error::UnknownWord(a.query.clone()))?;
        model.senses.senses_of(w).to_vec()
    };
    let mut text = String::new();
    for row in rows {
        text.push_str(&format!("# {}\n", model.sense_name(row)));
        for (rank, n) in nearest_neighbors(&model, row, a.k, a.exclude_same_word)?.iter().enumerate() {
            text.push_str(&format!("{}\t{}\t{:.6}\n", rank + 1, model.sense_name(n.row), n.similarity));
        }
    }
    emit(out, &None, &text)
}

fn eval_classify_cmd(a: &EvalClassifyArgs, out: &mut dyn Write) -> CliResult<()> {
    let model = load_model(&a.model)?;
    let train_corpus = LabeledCorpus::load_saved(&a.train)?;
    if model.words.as_slice() != train_corpus.vocab.tokens() {
        return Err(CliError {
            kind: "data",
            message: format!("vocabulary of {} does not match the model", a.train.display()),
        });
    }
    let (test, dropped) = LabeledCorpus::load_with_vocab(&a.test, true, &train_corpus.vocab, &train_corpus.classes, &stopwords(&a.stopwords)?)?;
    let outcome = evaluate_classification(&model, &train_corpus, &test, a.l2)?;
    let mut text = format!(
        "train_docs={}\ntest_docs={}\noov_tokens={}\nunresolved_tokens={}\n",
        train_corpus.docs.len(),
        test.docs.len(),
        dropped,
        outcome.skipped_tokens
    );
    text.push_str(&outcome.report.render(&train_corpus.classes));
    emit(out, &a.output, &text)
}

fn eval_similarity_cmd(a: &EvalSimilarityArgs, out: &mut dyn Write) -> CliResult<()> {
    let model = load_model(&a.model)?;
    let pairs = load_similarity_pairs(&a.pairs, &stopwords(&a.stopwords)?)?;
    let r = evaluate_similarity(&model, &pairs)?;
    let text = format!("spearman={:.6}\npairs_used={}\npairs_skipped={}\n", r.spearman, r.used, r.skipped);
    emit(out, &None, &text)
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    match &cli.command {
        Command::LabelTopics(a) => label_topics_cmd(a, out),
        Command::LabelSentiment(a) => label_sentiment_cmd(a, out),
        Command::LabelCategory(a) => label_category_cmd(a, out),
        Command::BuildNet(a) => build_net_cmd(a, out),
        Command::Train(a) => train_cmd(a, out),
        Command::InferIdentity(a) => infer_cmd(a, out),
        Command::Nearest(a) => nearest_cmd(a, out),
        Command::EvalClassify(a) => eval_classify_cmd(a, out),
        Command::EvalSimilarity(a) => eval_similarity_cmd(a, out),
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit status. Errors are one line on `err`:
/// `error[<kind>]: <message>` with kind `usage`, `io`, `format`, `param`
/// or `data`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = writeln!(err, "error[usage]: a subcommand is required (see --help)");
                    2
                }
                _ => {
                    let rendered = e.render().to_string();
                    let first = rendered.lines().next().unwrap_or("invalid arguments");
                    let _ = writeln!(err, "error[usage]: {}", first.trim_start_matches("error: "));
                    2
                }
            };
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error[{}]: {}", e.kind, e.message.replace('\n', " "));
            1
        }
    }
}
