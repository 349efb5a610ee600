//! `chunkstore`: corpus preparation, datastore lifecycle, translation,
//! benchmarking, ablations, and the on-the-fly adaptation stream.
//!
//! Every command is a thin wrapper over one library entry point. A JSON
//! run configuration can be passed with `--config`; individual flags
//! override file values. Exit codes: 0 success, 1 invalid
//! configuration, 2 runtime error.

mod config;

use std::collections::HashMap;
use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use chunkstore::bleu::corpus_bleu;
use chunkstore::datastore::{self, build_datastore, BuildParams, Datastore};
use chunkstore::decode::{translate_batch, DecodeConfig, DecodeOutput};
use chunkstore::eval::{self, split_warm, StreamConfig};
use chunkstore::index::{self, default_n_clusters, IvfIndex, SearchIndex};
use chunkstore::model::ToyModel;
use chunkstore::schedule::ScheduleConfig;
use chunkstore::vocab::{read_parallel_corpus, TokenId, Vocab, RESERVED};

use config::{ConfigError, RunConfig};

#[derive(Parser)]
#[command(name = "chunkstore", version, about = "Chunk-based retrieval-augmented translation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a vocabulary file from tokenized text (one sentence per line)
    BuildVocab {
        /// Text files to count tokens in; repeatable
        #[arg(long, required = true)]
        corpus: Vec<String>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Train the count-based toy model on a parallel corpus
    TrainModel {
        #[command(flatten)]
        flags: Flags,
    },
    /// Build a chunk datastore by forced decoding over a parallel corpus
    BuildDatastore {
        #[command(flatten)]
        flags: Flags,
    },
    /// Translate a file of source sentences, one output line each
    Translate {
        #[command(flatten)]
        flags: Flags,
    },
    /// Compare decoding strategies on the same inputs
    Bench {
        #[command(flatten)]
        flags: Flags,
    },
    /// On-the-fly adaptation: translate a stream, appending references
    /// to the datastore as they arrive
    Onthefly {
        #[command(flatten)]
        flags: Flags,
    },
    /// Sweep strategies, schedules, and k; one JSON record per cell
    Ablate {
        #[command(flatten)]
        flags: Flags,
    },
}

/// Every flag has a config-file equivalent of the same name.
#[derive(Args, Clone, Default)]
struct Flags {
    /// JSON run configuration; explicit flags override its values
    #[arg(long)]
    config: Option<String>,

    #[arg(long)]
    vocab: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    datastore: Option<String>,
    /// Source side of a parallel corpus
    #[arg(long)]
    source: Option<String>,
    /// Target side of a parallel corpus
    #[arg(long)]
    target: Option<String>,
    /// Source sentences to translate
    #[arg(long)]
    input: Option<String>,
    /// Reference translations for scoring
    #[arg(long)]
    reference: Option<String>,
    /// Output path for build commands
    #[arg(long)]
    out: Option<String>,
    /// Line-delimited JSON records path (translate)
    #[arg(long)]
    records: Option<String>,

    /// base | vanilla | maintain-order | cache:single | cache:beam-batch | cache:sentence
    #[arg(long)]
    strategy: Option<String>,
    /// fixed[:N] or geo[:MIN:MAX]
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    i_min: Option<u64>,
    #[arg(long)]
    i_max: Option<u64>,
    /// Use only the first i_k chunk positions at each retrieval step
    #[arg(long)]
    vary_chunk: Option<bool>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    temp: Option<f64>,
    #[arg(long)]
    lambda_cache: Option<f64>,
    #[arg(long)]
    temp_cache: Option<f64>,
    #[arg(long)]
    beam: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    max_src_len: Option<usize>,
    #[arg(long)]
    cache_capacity: Option<usize>,

    #[arg(long)]
    seed: Option<u64>,
    /// Concurrent decode jobs for translate (capped by CHUNKSTORE_THREADS)
    #[arg(long)]
    threads: Option<usize>,

    /// flat | ivf
    #[arg(long)]
    index: Option<String>,
    #[arg(long)]
    nprobe: Option<usize>,
    #[arg(long)]
    n_clusters: Option<usize>,
    #[arg(long)]
    kmeans_iters: Option<usize>,

    #[arg(long)]
    d_full: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    chunk_size: Option<usize>,
    #[arg(long)]
    d_key: Option<usize>,
    #[arg(long)]
    d_cache: Option<usize>,
    #[arg(long)]
    pca_sample: Option<usize>,

    #[arg(long)]
    warm_fraction: Option<f64>,
    #[arg(long)]
    update_block: Option<usize>,
    #[arg(long)]
    report_block: Option<usize>,

    /// Comma-separated strategy list (bench, ablate)
    #[arg(long, value_delimiter = ',')]
    strategies: Option<Vec<String>>,
    /// Comma-separated schedule list (ablate)
    #[arg(long, value_delimiter = ',')]
    schedules: Option<Vec<String>>,
    /// Comma-separated k list (ablate)
    #[arg(long, value_delimiter = ',')]
    ks: Option<Vec<usize>>,
}

impl Flags {
    fn resolve(self) -> Result<RunConfig, ConfigError> {
        let file = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        Ok(file.merged_with(self.into_run_config()))
    }

    fn into_run_config(self) -> RunConfig {
        RunConfig {
            vocab: self.vocab,
            model: self.model,
            datastore: self.datastore,
            source: self.source,
            target: self.target,
            input: self.input,
            reference: self.reference,
            out: self.out,
            records: self.records,
            strategy: self.strategy,
            schedule: self.schedule,
            i_min: self.i_min,
            i_max: self.i_max,
            vary_chunk: self.vary_chunk,
            k: self.k,
            lambda: self.lambda,
            temp: self.temp,
            lambda_cache: self.lambda_cache,
            temp_cache: self.temp_cache,
            beam: self.beam,
            batch: self.batch,
            max_len: self.max_len,
            max_src_len: self.max_src_len,
            cache_capacity: self.cache_capacity,
            seed: self.seed,
            threads: self.threads,
            index: self.index,
            nprobe: self.nprobe,
            n_clusters: self.n_clusters,
            kmeans_iters: self.kmeans_iters,
            d_full: self.d_full,
            alpha: self.alpha,
            chunk_size: self.chunk_size,
            d_key: self.d_key,
            d_cache: self.d_cache,
            pca_sample: self.pca_sample,
            warm_fraction: self.warm_fraction,
            update_block: self.update_block,
            report_block: self.report_block,
            strategies: self.strategies,
            schedules: self.schedules,
            ks: self.ks,
        }
    }
}

enum AppError {
    Config(ConfigError),
    Run(chunkstore::Error),
}

impl From<ConfigError> for AppError {
    fn from(e: ConfigError) -> Self {
        AppError::Config(e)
    }
}

impl From<chunkstore::Error> for AppError {
    fn from(e: chunkstore::Error) -> Self {
        AppError::Run(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Config(e)) => {
            eprintln!("{e}");
            ExitCode::from(1)
        }
        // Downstream consumer closed the pipe; not our failure.
        Err(AppError::Run(chunkstore::Error::Io(e)))
            if e.kind() == std::io::ErrorKind::BrokenPipe =>
        {
            ExitCode::SUCCESS
        }
        Err(AppError::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<(), AppError> {
    match command {
        Command::BuildVocab { corpus, flags } => cmd_build_vocab(corpus, flags.resolve()?),
        Command::TrainModel { flags } => cmd_train_model(flags.resolve()?),
        Command::BuildDatastore { flags } => cmd_build_datastore(flags.resolve()?),
        Command::Translate { flags } => cmd_translate(flags.resolve()?),
        Command::Bench { flags } => cmd_bench(flags.resolve()?),
        Command::Onthefly { flags } => cmd_onthefly(flags.resolve()?),
        Command::Ablate { flags } => cmd_ablate(flags.resolve()?),
    }
}

fn cmd_build_vocab(corpus: Vec<String>, cfg: RunConfig) -> Result<(), AppError> {
    let out = cfg.require("out")?;
    let mut counts: HashMap<String, u64> = HashMap::new();
    for path in &corpus {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("`corpus`: cannot read `{path}`: {e}")))?;
        for token in text.split_whitespace() {
            if !RESERVED.contains(&token) {
                *counts.entry(token.to_string()).or_insert(0) += 1;
            }
        }
    }
    let mut tokens: Vec<(String, u64)> = counts.into_iter().collect();
    tokens.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let vocab = Vocab::new(tokens.into_iter().map(|(t, _)| t))?;
    vocab.save(&out)?;
    eprintln!("wrote {} tokens to {out}", vocab.size());
    Ok(())
}

fn cmd_train_model(cfg: RunConfig) -> Result<(), AppError> {
    let vocab = Vocab::load(cfg.require_existing("vocab")?)?;
    let corpus = read_parallel_corpus(
        &vocab,
        cfg.require_existing("source")?,
        cfg.require_existing("target")?,
    )?;
    let model = ToyModel::train(
        &corpus,
        vocab.size(),
        cfg.seed.unwrap_or(1),
        cfg.alpha.unwrap_or(ToyModel::DEFAULT_ALPHA),
        cfg.d_full.unwrap_or(ToyModel::DEFAULT_D_FULL),
    )?;
    let out = cfg.require("out")?;
    model.save(&out)?;
    eprintln!("trained on {} pairs, wrote {out}", corpus.len());
    Ok(())
}

fn build_params(cfg: &RunConfig) -> BuildParams {
    let defaults = BuildParams::default();
    BuildParams {
        c: cfg.chunk_size.unwrap_or(defaults.c),
        d_key: cfg.d_key.unwrap_or(defaults.d_key),
        d_cache: cfg.d_cache.unwrap_or(defaults.d_cache),
        pca_sample: cfg.pca_sample.unwrap_or(defaults.pca_sample),
    }
}

fn cmd_build_datastore(cfg: RunConfig) -> Result<(), AppError> {
    let vocab = Vocab::load(cfg.require_existing("vocab")?)?;
    let model = ToyModel::load(cfg.require_existing("model")?)?;
    let corpus = read_parallel_corpus(
        &vocab,
        cfg.require_existing("source")?,
        cfg.require_existing("target")?,
    )?;
    let ds = build_datastore(&model, &corpus, &build_params(&cfg))?;
    let out = cfg.require("out")?;
    datastore::save(&ds, &out)?;
    eprintln!(
        "built datastore: {} entries, chunk size {}, wrote {out}",
        ds.entry_count(),
        ds.chunk_size()
    );
    if cfg.index.as_deref() == Some("ivf") {
        let n_clusters = cfg
            .n_clusters
            .unwrap_or_else(|| default_n_clusters(ds.entry_count()));
        let mut ivf = IvfIndex::build(
            &ds,
            n_clusters,
            cfg.seed.unwrap_or(1),
            cfg.kmeans_iters.unwrap_or(10),
        )?;
        if let Some(nprobe) = cfg.nprobe {
            ivf.set_nprobe(nprobe);
        }
        index::append_ivf(&out, &ds, &ivf)?;
        eprintln!("embedded IVF index: {n_clusters} clusters, nprobe {}", ivf.nprobe());
    }
    Ok(())
}

/// Loads the search index named by `--index`: flat, or the datastore
/// file's IVF trailer (built fresh when the file has none).
fn load_index(cfg: &RunConfig, path: &str, ds: &Datastore) -> Result<SearchIndex, AppError> {
    match cfg.index.as_deref().unwrap_or("flat") {
        "flat" => Ok(SearchIndex::flat()),
        "ivf" => {
            let mut ivf = match index::load_ivf(path, ds)? {
                Some(ivf) => ivf,
                None => IvfIndex::build(
                    ds,
                    cfg.n_clusters
                        .unwrap_or_else(|| default_n_clusters(ds.entry_count())),
                    cfg.seed.unwrap_or(1),
                    cfg.kmeans_iters.unwrap_or(10),
                )?,
            };
            if let Some(nprobe) = cfg.nprobe {
                ivf.set_nprobe(nprobe);
            }
            Ok(SearchIndex::Ivf(ivf))
        }
        other => Err(ConfigError(format!("`index`: `{other}` (expected flat or ivf)")).into()),
    }
}

fn read_lines(path: &str, field: &str) -> Result<Vec<String>, AppError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("`{field}`: cannot read `{path}`: {e}")))?;
    Ok(text.lines().map(str::to_string).collect())
}

struct RetrievalSetup {
    ds: Option<Datastore>,
    index: Option<SearchIndex>,
}

fn load_retrieval(cfg: &RunConfig, decode: &DecodeConfig) -> Result<RetrievalSetup, AppError> {
    if !decode.strategy.needs_retrieval() {
        return Ok(RetrievalSetup {
            ds: None,
            index: None,
        });
    }
    let path = cfg.require_existing("datastore")?;
    let ds = datastore::load(&path)?;
    let index = load_index(cfg, &path, &ds)?;
    Ok(RetrievalSetup {
        ds: Some(ds),
        index: Some(index),
    })
}

fn cmd_translate(cfg: RunConfig) -> Result<(), AppError> {
    let vocab = Vocab::load(cfg.require_existing("vocab")?)?;
    let model = ToyModel::load(cfg.require_existing("model")?)?;
    let decode = cfg.decode_config()?;
    let setup = load_retrieval(&cfg, &decode)?;

    let input_path = cfg.require_existing("input")?;
    let lines = read_lines(&input_path, "input")?;
    let sources: Vec<Vec<TokenId>> = lines.iter().map(|l| vocab.encode_line(l)).collect();

    let threads = cfg.effective_threads();
    let outputs = translate_sharded(&model, &setup, &decode, &sources, threads)?;

    let references: Option<Vec<Vec<TokenId>>> = match &cfg.reference {
        Some(path) => Some(
            read_lines(path, "reference")?
                .iter()
                .map(|l| vocab.encode_line(l))
                .collect(),
        ),
        None => None,
    };

    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for output in &outputs {
        writeln!(out, "{}", vocab.decode(&output.tokens)).map_err(chunkstore::Error::from)?;
    }
    drop(out);

    if let Some(refs) = &references {
        if refs.len() != outputs.len() {
            return Err(ConfigError(format!(
                "`reference`: {} lines for {} inputs",
                refs.len(),
                outputs.len()
            ))
            .into());
        }
        let hyps: Vec<Vec<TokenId>> = outputs.iter().map(|o| o.tokens.clone()).collect();
        let report = corpus_bleu(&hyps, refs)?;
        eprintln!("BLEU = {:.2}", report.score);
    }

    if let Some(records_path) = &cfg.records {
        let file = std::fs::File::create(records_path).map_err(chunkstore::Error::from)?;
        let mut file = std::io::BufWriter::new(file);
        for (id, output) in outputs.iter().enumerate() {
            let bleu = references.as_ref().map(|refs| {
                corpus_bleu(
                    std::slice::from_ref(&output.tokens),
                    std::slice::from_ref(&refs[id]),
                )
                .map(|r| r.score)
                .unwrap_or(0.0)
            });
            let mut record = json!({
                "id": id,
                "hypothesis": vocab.decode(&output.tokens),
                "tokens": output.stats.tokens,
                "ds_searches": output.stats.ds_searches,
                "cache_searches": output.stats.cache_searches,
                "wall_ms": output.stats.wall_ms,
            });
            if let Some(score) = bleu {
                record["bleu"] = json!(score);
            }
            writeln!(file, "{record}").map_err(chunkstore::Error::from)?;
        }
        file.flush().map_err(chunkstore::Error::from)?;
    }
    Ok(())
}

/// Shards whole batches across worker threads and restores input order.
fn translate_sharded(
    model: &ToyModel,
    setup: &RetrievalSetup,
    decode: &DecodeConfig,
    sources: &[Vec<TokenId>],
    threads: usize,
) -> Result<Vec<DecodeOutput>, AppError> {
    let ds = setup.ds.as_ref();
    let index = setup.index.as_ref();
    if threads <= 1 {
        return Ok(translate_batch(model, ds, index, decode, sources)?);
    }
    let batches: Vec<&[Vec<TokenId>]> = sources.chunks(decode.batch_size).collect();
    let mut slots: Vec<Option<chunkstore::Result<Vec<DecodeOutput>>>> =
        (0..batches.len()).map(|_| None).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slot_cells: Vec<std::sync::Mutex<&mut Option<chunkstore::Result<Vec<DecodeOutput>>>>> =
        slots.iter_mut().map(std::sync::Mutex::new).collect();
    std::thread::scope(|scope| {
        for _ in 0..threads.min(batches.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= batches.len() {
                    break;
                }
                let result = translate_batch(model, ds, index, decode, batches[i]);
                **slot_cells[i].lock().unwrap() = Some(result);
            });
        }
    });
    drop(slot_cells);
    let mut outputs = Vec::with_capacity(sources.len());
    for slot in slots {
        outputs.extend(slot.expect("every batch processed")?);
    }
    Ok(outputs)
}

fn strategy_configs(
    cfg: &RunConfig,
    base: &DecodeConfig,
    default: &[&str],
) -> Result<Vec<(String, DecodeConfig)>, AppError> {
    let names: Vec<String> = match &cfg.strategies {
        Some(list) if !list.is_empty() => list.clone(),
        _ => default.iter().map(|s| s.to_string()).collect(),
    };
    names
        .into_iter()
        .map(|name| {
            let strategy = name
                .parse()
                .map_err(|e| ConfigError(format!("`strategies`: {e}")).into());
            strategy.map(|strategy| {
                let mut dc = base.clone();
                dc.strategy = strategy;
                (name, dc)
            })
        })
        .collect()
}

fn cmd_bench(cfg: RunConfig) -> Result<(), AppError> {
    let vocab = Vocab::load(cfg.require_existing("vocab")?)?;
    let model = ToyModel::load(cfg.require_existing("model")?)?;
    let base = cfg.decode_config()?;
    let configs = strategy_configs(
        &cfg,
        &base,
        &["base", "vanilla", "maintain-order", "cache:sentence"],
    )?;

    let needs_ds = configs.iter().any(|(_, c)| c.strategy.needs_retrieval());
    let (ds, index) = if needs_ds {
        let path = cfg.require_existing("datastore")?;
        let ds = datastore::load(&path)?;
        let index = load_index(&cfg, &path, &ds)?;
        (Some(ds), Some(index))
    } else {
        (None, None)
    };

    let lines = read_lines(&cfg.require_existing("input")?, "input")?;
    let sources: Vec<Vec<TokenId>> = lines.iter().map(|l| vocab.encode_line(l)).collect();

    let rows = eval::bench(&model, ds.as_ref(), index.as_ref(), &configs, &sources)?;
    for row in &rows {
        println!("{}", serde_json::to_string(row).expect("serializable row"));
    }
    println!(
        "{:<16} {:>8} {:>10} {:>12} {:>10} {:>14}",
        "strategy", "tokens", "tok/s", "ds_searches", "cache", "searches/token"
    );
    for row in &rows {
        println!(
            "{:<16} {:>8} {:>10.1} {:>12} {:>10} {:>14.3}",
            row.label,
            row.tokens,
            row.tokens_per_sec,
            row.ds_searches,
            row.cache_searches,
            row.searches_per_token
        );
    }
    Ok(())
}

fn cmd_onthefly(cfg: RunConfig) -> Result<(), AppError> {
    let vocab = Vocab::load(cfg.require_existing("vocab")?)?;
    let model = ToyModel::load(cfg.require_existing("model")?)?;
    let decode = cfg.decode_config()?;
    let stream_cfg = StreamConfig {
        warm_fraction: cfg.warm_fraction.unwrap_or(0.10),
        update_block: cfg.update_block.unwrap_or(250),
        report_block: cfg.report_block.unwrap_or(4000),
    };
    stream_cfg
        .validate()
        .map_err(|e| ConfigError(format!("stream config: {e}")))?;

    let corpus = read_parallel_corpus(
        &vocab,
        cfg.require_existing("source")?,
        cfg.require_existing("target")?,
    )?;
    let (warm, rest) = split_warm(&corpus, stream_cfg.warm_fraction);
    eprintln!("warm datastore on {} pairs, translating {}", warm.len(), rest.len());

    let mut ds = build_datastore(&model, warm, &build_params(&cfg))?;
    let mut index = match cfg.index.as_deref().unwrap_or("flat") {
        "flat" => SearchIndex::flat(),
        "ivf" => SearchIndex::Ivf(IvfIndex::build(
            &ds,
            cfg.n_clusters
                .unwrap_or_else(|| default_n_clusters(ds.entry_count())),
            cfg.seed.unwrap_or(1),
            cfg.kmeans_iters.unwrap_or(10),
        )?),
        other => {
            return Err(ConfigError(format!("`index`: `{other}` (expected flat or ivf)")).into())
        }
    };

    let report = eval::run_stream(&model, &mut ds, &mut index, &decode, &stream_cfg, rest)?;
    for block in &report.blocks {
        println!(
            "{}",
            json!({ "start": block.start, "end": block.end, "bleu": block.bleu })
        );
    }
    println!(
        "{}",
        json!({
            "overall_bleu": report.overall_bleu,
            "translated": report.translated,
            "updates": report.updates,
            "update_secs": report.update_secs,
            "inference_secs": report.inference_secs,
            "total_secs": report.total_secs(),
        })
    );
    println!(
        "translated {} sentences, BLEU {:.2}, update {:.1}s + inference {:.1}s = {:.1}s",
        report.translated,
        report.overall_bleu,
        report.update_secs,
        report.inference_secs,
        report.total_secs()
    );
    Ok(())
}

fn cmd_ablate(cfg: RunConfig) -> Result<(), AppError> {
    let vocab = Vocab::load(cfg.require_existing("vocab")?)?;
    let model = ToyModel::load(cfg.require_existing("model")?)?;
    let path = cfg.require_existing("datastore")?;
    let ds = datastore::load(&path)?;
    let index = load_index(&cfg, &path, &ds)?;

    let lines = read_lines(&cfg.require_existing("input")?, "input")?;
    let sources: Vec<Vec<TokenId>> = lines.iter().map(|l| vocab.encode_line(l)).collect();
    let refs: Vec<Vec<TokenId>> = read_lines(&cfg.require_existing("reference")?, "reference")?
        .iter()
        .map(|l| vocab.encode_line(l))
        .collect();
    if refs.len() != sources.len() {
        return Err(ConfigError(format!(
            "`reference`: {} lines for {} inputs",
            refs.len(),
            sources.len()
        ))
        .into());
    }

    let base = cfg.decode_config()?;
    let strategies = strategy_configs(&cfg, &base, &["cache:sentence"])?;
    let schedule_specs: Vec<String> = cfg.schedules.clone().unwrap_or_else(|| {
        ["fixed:6", "fixed:8", "geo:2:8", "geo:2:16", "geo:2:32"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    });
    let ks: Vec<usize> = cfg.ks.clone().unwrap_or_else(|| vec![8]);

    for (name, strat_cfg) in &strategies {
        for spec in &schedule_specs {
            let mode = config::parse_schedule(spec, None, None)?;
            for &k in &ks {
                let mut dc = strat_cfg.clone();
                dc.schedule = ScheduleConfig {
                    mode,
                    vary_chunk: dc.schedule.vary_chunk,
                };
                dc.mix.k = k;
                dc.validate()
                    .map_err(|e| ConfigError(format!("ablate cell: {e}")))?;

                let t0 = std::time::Instant::now();
                let outputs = translate_batch(&model, Some(&ds), Some(&index), &dc, &sources)?;
                let wall_secs = t0.elapsed().as_secs_f64();
                let tokens: usize = outputs.iter().map(|o| o.stats.tokens).sum();
                let ds_searches: u64 = outputs.iter().map(|o| o.stats.ds_searches).sum();
                let hyps: Vec<Vec<TokenId>> = outputs.into_iter().map(|o| o.tokens).collect();
                let bleu = corpus_bleu(&hyps, &refs)?.score;
                println!(
                    "{}",
                    json!({
                        "strategy": name,
                        "schedule": spec,
                        "k": k,
                        "bleu": bleu,
                        "tokens": tokens,
                        "searches_per_token": ds_searches as f64 / tokens.max(1) as f64,
                        "tokens_per_sec": tokens as f64 / wall_secs.max(1e-9),
                    })
                );
            }
        }
    }
    Ok(())
}
