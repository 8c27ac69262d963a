//! Command-line front end.
//!
//! Every command writes its primary output to the supplied writer so that it
//! can be driven from tests as well as from `main`.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{
    BalanceMethod, ConfigOverlay, ProviderSpec, RunConfig, SplitOverlay, TrainOverlay,
};
use crate::corpus::{self, Corpus, CorpusError, LabelCounts, RhetoricalLabel, SplitMode};
use crate::embedding::{Casing, EmbeddingProvider, HashedBow, TokenizerConfig};
use crate::imbalance::{self, WeightScheme};
use crate::linear_model::{self, EpochRecord, LinearCheckpoint, SelectionMetric};
use crate::metrics::MetricsReport;
use crate::Error;

pub const CHECKPOINT_FILE: &str = "checkpoint.ckpt";
pub const CONFIG_FILE: &str = "config.json";
pub const LOG_FILE: &str = "train.log";
pub const METRICS_FILE: &str = "metrics.json";

#[derive(Debug, Parser)]
#[command(
    name = "rolelab",
    version,
    about = "Rhetorical-role classification of legal judgment sentences"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a TSV corpus and optionally write it back normalized.
    Ingest {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the class distribution and the weights of each scheme.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
        /// Percentile used for the token-length bound.
        #[arg(long, default_value_t = 0.98)]
        percentile: f64,
        #[arg(long, default_value = "cased")]
        casing: Casing,
    },
    /// Train a classifier head and write checkpoint, log and resolved config.
    Train {
        /// Preset to start from (run1, run2, run3); defaults to the config
        /// file's preset, then run1.
        #[arg(long)]
        preset: Option<String>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Score a checkpoint on a labeled corpus and emit metrics JSON.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        provider: ProviderArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Label sentences, one per line, as `sentence<TAB>label<TAB>probability`.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        sentences: PathBuf,
        #[command(flatten)]
        provider: ProviderArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one of the three preset configurations end to end.
    ReproduceRun {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=3))]
        run: u8,
        #[command(flatten)]
        run_args: RunArgs,
    },
}

#[derive(Debug, Args, Default)]
pub struct ProviderArgs {
    /// hashed:<dim> or precomputed:<path>; defaults to the checkpoint's encoder.
    #[arg(long)]
    pub provider: Option<ProviderSpec>,
    #[arg(long)]
    pub casing: Option<Casing>,
    #[arg(long)]
    pub max_len: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct RunArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// JSON run config; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for the split, initialization, shuffling and resampling.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub provider: Option<ProviderSpec>,
    #[arg(long)]
    pub casing: Option<Casing>,
    /// inverse, direct or uniform.
    #[arg(long)]
    pub weights: Option<WeightScheme>,
    /// weighting, under, over or none.
    #[arg(long)]
    pub balance: Option<BalanceMethod>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub max_len: Option<usize>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// sentence_shuffled or document_level.
    #[arg(long, value_parser = parse_split_mode)]
    pub split_mode: Option<SplitMode>,
    /// macro_f1 or val_loss.
    #[arg(long)]
    pub selection_metric: Option<SelectionMetric>,
}

fn parse_split_mode(s: &str) -> Result<SplitMode, String> {
    match s {
        "sentence_shuffled" | "sentence" => Ok(SplitMode::SentenceShuffled),
        "document_level" | "document" => Ok(SplitMode::DocumentLevel),
        other => Err(format!("unknown split mode {other:?}")),
    }
}

impl RunArgs {
    fn overlay(&self) -> ConfigOverlay {
        let split = SplitOverlay {
            train_fraction: self.train_fraction,
            seed: self.seed,
            mode: self.split_mode,
        };
        let train = TrainOverlay {
            batch_size: self.batch_size,
            epochs: self.epochs,
            learning_rate: self.lr,
            weight_decay: self.weight_decay,
            seed: self.seed,
            selection_metric: self.selection_metric,
            ..Default::default()
        };
        ConfigOverlay {
            casing: self.casing,
            weight_scheme: self.weights,
            balance: self.balance,
            max_len: self.max_len,
            provider: self.provider.clone(),
            split: Some(split),
            train: Some(train),
            corpus: self.corpus.clone(),
            ..Default::default()
        }
    }

    fn file_overlay(&self) -> Result<ConfigOverlay, Error> {
        match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                Ok(ConfigOverlay::from_json(&text)?)
            }
            None => Ok(ConfigOverlay::default()),
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), Error> {
    match cli.command {
        Command::Ingest { corpus, out: dest } => {
            cmd_ingest(&corpus, dest.as_deref(), out).map(|_| ())
        }
        Command::Stats {
            corpus,
            percentile,
            casing,
        } => cmd_stats(&corpus, percentile, casing, out),
        Command::Train { preset, run } => {
            let file = run.file_overlay()?;
            let preset = preset
                .or_else(|| file.preset.clone())
                .unwrap_or_else(|| "run1".to_string());
            let cfg = RunConfig::resolve(&preset, &[&file, &run.overlay()])?;
            let dir = run.out.clone().unwrap_or_else(|| default_out(&cfg));
            cmd_train(&cfg, &dir, out).map(|_| ())
        }
        Command::Evaluate {
            checkpoint,
            corpus,
            provider,
            out: dest,
        } => cmd_evaluate(&checkpoint, &corpus, &provider, dest.as_deref(), out).map(|_| ()),
        Command::Predict {
            checkpoint,
            sentences,
            provider,
            out: dest,
        } => cmd_predict(&checkpoint, &sentences, &provider, dest.as_deref(), out),
        Command::ReproduceRun { run, run_args } => {
            cmd_reproduce_run(run, &run_args, out).map(|_| ())
        }
    }
}

fn default_out(cfg: &RunConfig) -> PathBuf {
    Path::new("runs").join(&cfg.run_id)
}

fn read_corpus(path: &Path) -> Result<Corpus, Error> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Corpus::parse(BufReader::new(file)).map_err(|source| Error::Corpus {
        path: Some(path.to_path_buf()),
        source,
    })
}

fn read_nonempty_corpus(path: &Path) -> Result<Corpus, Error> {
    let corpus = read_corpus(path)?;
    if corpus.is_empty() {
        return Err(Error::Corpus {
            path: Some(path.to_path_buf()),
            source: CorpusError::Empty,
        });
    }
    Ok(corpus)
}

fn write_file(
    path: &Path,
    write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<(), Error> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn emit(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> Result<(), Error> {
    out.write_fmt(text)
        .and_then(|_| out.write_all(b"\n"))
        .map_err(|e| Error::io("<stdout>", e))
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => {
        emit($out, format_args!($($arg)*))
    };
}

pub fn cmd_ingest(path: &Path, dest: Option<&Path>, out: &mut dyn Write) -> Result<Corpus, Error> {
    let corpus = read_nonempty_corpus(path)?;
    if let Some(dest) = dest {
        write_file(dest, |w| corpus.write(w))?;
    }
    say!(
        out,
        "{} documents, {} sentences",
        corpus.documents().len(),
        corpus.len()
    )?;
    Ok(corpus)
}

pub fn cmd_stats(
    path: &Path,
    percentile: f64,
    casing: Casing,
    out: &mut dyn Write,
) -> Result<(), Error> {
    let corpus = read_nonempty_corpus(path)?;
    let counts = corpus.class_distribution();
    let total = counts.total();
    let inverse = imbalance::inverse_frequency_weights(counts.as_slice()).ok();
    let direct = imbalance::direct_frequency_weights(counts.as_slice())?;

    say!(
        out,
        "{} documents, {} sentences",
        corpus.documents().len(),
        total
    )?;
    say!(
        out,
        "{:<24} {:>7} {:>8} {:>9} {:>9}",
        "label",
        "count",
        "percent",
        "inverse",
        "direct"
    )?;
    for (label, n) in counts.iter() {
        let inv = inverse.as_ref().map_or_else(
            || "n/a".to_string(),
            |w| format!("{:.5}", w.get(label.index())),
        );
        say!(
            out,
            "{:<24} {:>7} {:>7.2}% {:>9} {:>9.5}",
            label.as_str(),
            n,
            100.0 * n as f64 / total as f64,
            inv,
            direct.get(label.index())
        )?;
    }
    let tok = TokenizerConfig::untruncated(casing);
    let p = corpus::length_percentile(corpus.sentences(), &tok, percentile)?;
    say!(
        out,
        "token length at percentile {percentile} (nearest rank): {p}"
    )?;
    Ok(())
}

/// What a training run produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub config: RunConfig,
    pub checkpoint: LinearCheckpoint,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub validation: MetricsReport,
    pub out_dir: PathBuf,
}

fn log_line(r: &EpochRecord) -> String {
    format!(
        "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
        r.epoch, r.train_loss, r.val_loss, r.val_macro_f1, r.val_accuracy
    )
}

const LOG_HEADER: &str = "# epoch\ttrain_loss\tval_loss\tval_macro_f1\tval_accuracy";

/// Splits, balances, trains and writes `checkpoint.ckpt`, `config.json`,
/// `train.log` and `metrics.json` into `dir`.
pub fn cmd_train(cfg: &RunConfig, dir: &Path, out: &mut dyn Write) -> Result<RunSummary, Error> {
    cfg.validate()?;
    let corpus_path = cfg.corpus.as_deref().ok_or_else(|| {
        Error::Invalid("no corpus given; pass --corpus or set it in the config".into())
    })?;
    let corpus = read_nonempty_corpus(corpus_path)?;
    let (train_set, val_set) = corpus::split(&corpus, &cfg.split)?;

    let counts = LabelCounts::of(&train_set);
    let weights = cfg.class_weights(counts.as_slice())?;
    let train_set = match cfg.balance {
        BalanceMethod::Undersample => imbalance::undersample(&train_set, cfg.train.seed)?,
        BalanceMethod::Oversample => imbalance::oversample(&train_set, cfg.train.seed)?,
        BalanceMethod::LossWeighting | BalanceMethod::None => train_set,
    };

    let provider = cfg.provider.build(cfg.tokenizer())?;
    let outcome = linear_model::train(
        &train_set,
        &val_set,
        provider.as_ref(),
        &weights,
        &cfg.train,
    )?;

    say!(out, "{LOG_HEADER}")?;
    for r in &outcome.history {
        say!(out, "{}", log_line(r))?;
    }
    let validation = evaluate_sentences(&outcome.checkpoint, provider.as_ref(), &val_set)?;

    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let resolved = RunConfig {
        resolved_weights: Some(weights.as_slice().to_vec()),
        ..cfg.clone()
    };
    write_file(&dir.join(CHECKPOINT_FILE), |w| outcome.checkpoint.write(w))?;
    write_file(&dir.join(CONFIG_FILE), |w| {
        serde_json::to_writer_pretty(&mut *w, &resolved)?;
        writeln!(w)
    })?;
    write_file(&dir.join(LOG_FILE), |w| {
        writeln!(w, "{LOG_HEADER}")?;
        outcome
            .history
            .iter()
            .try_for_each(|r| writeln!(w, "{}", log_line(r)))
    })?;
    write_file(&dir.join(METRICS_FILE), |w| {
        serde_json::to_writer_pretty(&mut *w, &validation.to_json())?;
        writeln!(w)
    })?;
    say!(
        out,
        "selected epoch {} of {}; checkpoint written to {}",
        outcome.best_epoch,
        cfg.train.epochs,
        dir.join(CHECKPOINT_FILE).display()
    )?;

    Ok(RunSummary {
        config: resolved,
        checkpoint: outcome.checkpoint,
        history: outcome.history,
        best_epoch: outcome.best_epoch,
        validation,
        out_dir: dir.to_path_buf(),
    })
}

fn evaluate_sentences(
    ckpt: &LinearCheckpoint,
    provider: &dyn EmbeddingProvider,
    sentences: &[corpus::LabeledSentence],
) -> Result<MetricsReport, Error> {
    let x = crate::embedding::embed_batch(sentences, provider)?;
    let pred = x
        .iter_rows()
        .map(|row| ckpt.predict(row))
        .collect::<Result<Vec<_>, _>>()?;
    let gold: Vec<RhetoricalLabel> = sentences.iter().map(|s| s.label).collect();
    Ok(MetricsReport::for_labels(&gold, &pred)?)
}

fn read_checkpoint(path: &Path) -> Result<LinearCheckpoint, Error> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(LinearCheckpoint::parse(BufReader::new(file))?)
}

/// The checkpoint's own hashed encoder unless `args` names another provider;
/// the result must match the checkpoint.
fn provider_for(
    ckpt: &LinearCheckpoint,
    args: &ProviderArgs,
) -> Result<Box<dyn EmbeddingProvider>, Error> {
    let recorded = HashedBow::from_id(&ckpt.provider_id);
    let base_tok = recorded
        .as_ref()
        .map_or(TokenizerConfig::new(Casing::Cased, 120), |h| *h.tokenizer());
    let tok = TokenizerConfig::new(
        args.casing.unwrap_or(base_tok.casing),
        args.max_len.unwrap_or(base_tok.max_len),
    );
    let provider: Box<dyn EmbeddingProvider> = match (&args.provider, recorded) {
        (Some(spec), _) => spec.build(tok)?,
        (None, Some(h)) => Box::new(HashedBow::new(h.dim(), tok)?),
        (None, None) => {
            return Err(Error::Invalid(format!(
                "checkpoint uses provider {}; pass --provider precomputed:<path>",
                ckpt.provider_id
            )))
        }
    };
    ckpt.check_provider(provider.as_ref())?;
    Ok(provider)
}

pub fn cmd_evaluate(
    checkpoint: &Path,
    corpus_path: &Path,
    args: &ProviderArgs,
    dest: Option<&Path>,
    out: &mut dyn Write,
) -> Result<MetricsReport, Error> {
    let ckpt = read_checkpoint(checkpoint)?;
    let provider = provider_for(&ckpt, args)?;
    let corpus = read_nonempty_corpus(corpus_path)?;
    let report = evaluate_sentences(&ckpt, provider.as_ref(), corpus.sentences())?;
    let json = serde_json::to_string_pretty(&report.to_json()).expect("metrics serialize");
    match dest {
        Some(dest) => {
            write_file(dest, |w| writeln!(w, "{json}"))?;
            let m = report.macro_avg;
            say!(
                out,
                "macro precision {:.4}, recall {:.4}, F1 {:.4}",
                m.precision,
                m.recall,
                m.f1
            )?;
        }
        None => say!(out, "{json}")?,
    }
    Ok(report)
}

/// Reads sentences one per non-blank line. `#doc` headers are skipped and
/// anything after a tab is ignored, so corpus files are accepted too.
fn read_sentences(path: &Path) -> Result<Vec<String>, Error> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() || line.starts_with("#doc\t") {
            continue;
        }
        let text = line.split('\t').next().unwrap_or_default();
        if !text.trim().is_empty() {
            out.push(text.to_string());
        }
    }
    Ok(out)
}

pub fn cmd_predict(
    checkpoint: &Path,
    sentences: &Path,
    args: &ProviderArgs,
    dest: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), Error> {
    let ckpt = read_checkpoint(checkpoint)?;
    let provider = provider_for(&ckpt, args)?;
    let texts = read_sentences(sentences)?;
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
    let x = crate::embedding::embed_texts(&refs, provider.as_ref(), crate::Execution::default())?;
    let mut lines = Vec::with_capacity(texts.len());
    for (text, row) in texts.iter().zip(x.iter_rows()) {
        let (label, p) = ckpt.predict_with_probability(row)?;
        lines.push(format!("{text}\t{label}\t{p}"));
    }
    match dest {
        Some(dest) => write_file(dest, |w| lines.iter().try_for_each(|l| writeln!(w, "{l}"))),
        None => lines.iter().try_for_each(|l| say!(out, "{l}")),
    }
}

pub fn cmd_reproduce_run(
    run: u8,
    args: &RunArgs,
    out: &mut dyn Write,
) -> Result<RunSummary, Error> {
    let preset = format!("run{run}");
    let file = args.file_overlay()?;
    let cfg = RunConfig::resolve(&preset, &[&file, &args.overlay()])?;
    let dir = args.out.clone().unwrap_or_else(|| default_out(&cfg));
    say!(out, "resolved config:")?;
    say!(
        out,
        "{}",
        serde_json::to_string_pretty(&cfg).expect("config serializes")
    )?;
    let summary = cmd_train(&cfg, &dir, out)?;
    let m = summary.validation.macro_avg;
    say!(
        out,
        "{} on local validation split ({} sentences; not the shared-task test set): macro precision {:.4}, recall {:.4}, F1 {:.4}",
        cfg.run_id,
        summary.validation.confusion.total(),
        m.precision,
        m.recall,
        m.f1
    )?;
    Ok(summary)
}
