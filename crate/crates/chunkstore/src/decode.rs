//! Beam-search decoding with retrieval.
//!
//! Four strategies share one loop:
//!
//! - base: the parametric distribution alone
//! - vanilla: datastore search at every step, first chunk token only
//! - maintain-order: datastore search on schedule; between searches the
//!   retrieved chunks are walked position by position, reusing the same
//!   retrieval distances
//! - cache: datastore search on schedule; between searches the
//!   neighbors' cache is searched with the cache-reduced decoder state,
//!   mixed with the primed hyperparameters
//!
//! Retrieval is per hypothesis: at a firing step every live hypothesis
//! runs its own datastore search. Sentences in a batch decode in
//! lockstep so the shared cache scopes can pool their chunks; each
//! sentence still fires on its own schedule. Within a step, all
//! datastore searches and cache updates happen before any distribution
//! is computed.

use std::rc::Rc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cache::{CacheScope, NeighborsCache};
use crate::datastore::Datastore;
use crate::index::{Hit, SearchIndex};
use crate::model::TranslationModel;
use crate::prob::{interpolate, retrieval_distribution, MixParams, ProbDist};
use crate::schedule::{chunk_size_at, ScheduleConfig, ScheduleCursor};
use crate::vocab::{TokenId, BOS, EOS, PAD};
use crate::{Error, Result};

/// How retrieved information enters the per-step distribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Strategy {
    Base,
    VanillaKnn,
    MaintainOrder,
    Cache(CacheScope),
}

impl Strategy {
    pub fn needs_retrieval(self) -> bool {
        !matches!(self, Strategy::Base)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Base => "base",
            Strategy::VanillaKnn => "vanilla",
            Strategy::MaintainOrder => "maintain-order",
            Strategy::Cache(CacheScope::SingleChunk) => "cache:single",
            Strategy::Cache(CacheScope::BeamBatch) => "cache:beam-batch",
            Strategy::Cache(CacheScope::SentenceLevel) => "cache:sentence",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" => Ok(Strategy::Base),
            "vanilla" => Ok(Strategy::VanillaKnn),
            "maintain-order" => Ok(Strategy::MaintainOrder),
            "cache:single" => Ok(Strategy::Cache(CacheScope::SingleChunk)),
            "cache:beam-batch" => Ok(Strategy::Cache(CacheScope::BeamBatch)),
            "cache:sentence" => Ok(Strategy::Cache(CacheScope::SentenceLevel)),
            other => Err(Error::Config(format!(
                "unknown strategy `{other}` (expected base, vanilla, maintain-order, \
                 cache:single, cache:beam-batch, or cache:sentence)"
            ))),
        }
    }
}

impl TryFrom<String> for Strategy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Strategy> for String {
    fn from(s: Strategy) -> String {
        s.as_str().to_string()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecodeConfig {
    pub beam_size: usize,
    pub max_len: usize,
    pub max_src_len: usize,
    pub batch_size: usize,
    pub mix: MixParams,
    pub schedule: ScheduleConfig,
    pub strategy: Strategy,
    /// Optional cap on neighbors' cache entries (FIFO eviction).
    pub cache_capacity: Option<usize>,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            beam_size: 5,
            max_len: 100,
            max_src_len: 1024,
            batch_size: 8,
            mix: MixParams::default(),
            schedule: ScheduleConfig::default(),
            strategy: Strategy::Cache(CacheScope::SentenceLevel),
            cache_capacity: None,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beam_size == 0 {
            return Err(Error::Config("beam_size must be at least 1".into()));
        }
        if self.max_len == 0 {
            return Err(Error::Config("max_len must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        self.mix.validate()?;
        self.schedule.validate()
    }
}

/// Per-sentence counters along the emitted hypothesis' own path.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct DecodeStats {
    /// Generation steps taken, the emitted EOS included.
    pub tokens: usize,
    /// Datastore searches per hypothesis (one per fired retrieval step).
    pub ds_searches: u64,
    /// Neighbors' cache searches per hypothesis.
    pub cache_searches: u64,
    /// Share of the batch wall time, proportional to tokens.
    pub wall_ms: f64,
}

impl DecodeStats {
    pub fn tokens_per_sec(&self) -> f64 {
        if self.wall_ms > 0.0 {
            self.tokens as f64 / (self.wall_ms / 1000.0)
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug)]
pub struct DecodeOutput {
    /// Emitted tokens, BOS and EOS stripped.
    pub tokens: Vec<TokenId>,
    /// Cumulative log-probability of the emitted hypothesis.
    pub score: f64,
    pub stats: DecodeStats,
}

/// Which source fed a step's final distribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepKind {
    /// Parametric distribution only.
    Base,
    /// Datastore retrieval at this step, first chunk tokens.
    Retrieval,
    /// Maintain-order reuse of earlier retrieval at a chunk offset.
    ChunkOffset,
    /// Neighbors' cache search.
    CacheHit,
    /// Retrieval produced nothing usable; fell back to the model.
    Fallback,
}

/// Snapshot of one hypothesis' step, emitted by the traced decode.
#[derive(Clone, Debug)]
pub struct StepTrace {
    pub sentence: usize,
    pub position: u64,
    pub hypothesis: usize,
    pub kind: StepKind,
    pub p_model: ProbDist,
    pub p_final: ProbDist,
    /// Cache-space query, present at cache search steps.
    pub cache_query: Option<Vec<f32>>,
    /// Cache contents at the moment of the search.
    pub cache_entries: Option<Vec<(Vec<f32>, TokenId)>>,
}

/// Which reduction a raw decoder state is projected into.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuerySpace {
    Key,
    Cache,
}

/// Projects a full decoder state into datastore key space or cache space.
pub fn query_vector(ds: &Datastore, state: &[f32], space: QuerySpace) -> Result<Vec<f32>> {
    match space {
        QuerySpace::Key => ds.pca_key().apply(state),
        QuerySpace::Cache => ds.pca_cache().apply(state),
    }
}

pub fn translate_batch(
    model: &dyn TranslationModel,
    ds: Option<&Datastore>,
    index: Option<&SearchIndex>,
    config: &DecodeConfig,
    sources: &[Vec<TokenId>],
) -> Result<Vec<DecodeOutput>> {
    translate(model, ds, index, config, sources, &mut None)
}

/// Like [`translate_batch`] but reports every hypothesis' per-step
/// distributions through `trace`.
pub fn translate_batch_traced(
    model: &dyn TranslationModel,
    ds: Option<&Datastore>,
    index: Option<&SearchIndex>,
    config: &DecodeConfig,
    sources: &[Vec<TokenId>],
    mut trace: impl FnMut(StepTrace),
) -> Result<Vec<DecodeOutput>> {
    let mut boxed: Option<&mut dyn FnMut(StepTrace)> = Some(&mut trace);
    translate(model, ds, index, config, sources, &mut boxed)
}

fn translate(
    model: &dyn TranslationModel,
    ds: Option<&Datastore>,
    index: Option<&SearchIndex>,
    config: &DecodeConfig,
    sources: &[Vec<TokenId>],
    trace: &mut Option<&mut dyn FnMut(StepTrace)>,
) -> Result<Vec<DecodeOutput>> {
    config.validate()?;
    if sources.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    for src in sources {
        if src.is_empty() {
            return Err(Error::Config("empty source sentence".into()));
        }
        if src.len() > config.max_src_len {
            return Err(Error::SourceTooLong {
                len: src.len(),
                bound: config.max_src_len,
            });
        }
    }
    let retrieval = if config.strategy.needs_retrieval() {
        let ds = ds.ok_or_else(|| Error::Config("strategy requires a datastore".into()))?;
        let index = index.ok_or_else(|| Error::Config("strategy requires an index".into()))?;
        Some((ds, index))
    } else {
        None
    };

    let mut outputs = Vec::with_capacity(sources.len());
    let mut sentence_base = 0usize;
    for batch in sources.chunks(config.batch_size) {
        outputs.extend(decode_batch(model, retrieval, config, batch, sentence_base, trace)?);
        sentence_base += batch.len();
    }
    Ok(outputs)
}

/// One retrieval's worth of reused context for maintain-order: the
/// distances never refresh, only the token offset advances.
#[derive(Debug)]
struct MaintainCtx {
    /// `(distance, chunk tokens)`, tokens already truncated to the
    /// retrieval step's chunk limit.
    hits: Vec<(f32, Vec<TokenId>)>,
}

#[derive(Clone)]
struct Hypothesis {
    prefix: Vec<TokenId>,
    score: f64,
    ds_searches: u64,
    cache_searches: u64,
    maintain: Option<Rc<MaintainCtx>>,
    own_cache: Option<Rc<NeighborsCache>>,
    /// Chunk position the next step will consume.
    offset: usize,
}

impl Hypothesis {
    fn start() -> Self {
        Self {
            prefix: vec![BOS],
            score: 0.0,
            ds_searches: 0,
            cache_searches: 0,
            maintain: None,
            own_cache: None,
            offset: 0,
        }
    }
}

struct SentenceDecode {
    ctx: crate::model::SourceContext,
    cursor: ScheduleCursor,
    live: Vec<Hypothesis>,
    finished: Vec<Hypothesis>,
}

struct StepData {
    state: Vec<f32>,
    p_model: ProbDist,
    hits: Option<Vec<Hit>>,
}

struct Candidate {
    score: f64,
    hyp: usize,
    tok: TokenId,
}

fn decode_batch(
    model: &dyn TranslationModel,
    retrieval: Option<(&Datastore, &SearchIndex)>,
    config: &DecodeConfig,
    sources: &[Vec<TokenId>],
    sentence_base: usize,
    trace: &mut Option<&mut dyn FnMut(StepTrace)>,
) -> Result<Vec<DecodeOutput>> {
    let started = Instant::now();
    let k = config.mix.k;

    let mut sentences: Vec<SentenceDecode> = sources
        .iter()
        .map(|src| SentenceDecode {
            ctx: model.encode(src),
            cursor: ScheduleCursor::new(config.schedule, src.len()),
            live: vec![Hypothesis::start()],
            finished: Vec::new(),
        })
        .collect();

    let mut shared_cache = match (config.strategy, retrieval) {
        (Strategy::Cache(scope @ (CacheScope::BeamBatch | CacheScope::SentenceLevel)), Some((ds, _))) => {
            Some(NeighborsCache::new(scope, ds.d_cache(), config.cache_capacity))
        }
        _ => None,
    };

    for t in 1..=config.max_len as u64 {
        if sentences.iter().all(|s| s.live.is_empty()) {
            break;
        }

        // Model states and distributions for every live hypothesis.
        let mut step_data: Vec<Vec<StepData>> = Vec::with_capacity(sentences.len());
        for sent in &sentences {
            let mut row = Vec::with_capacity(sent.live.len());
            for hyp in &sent.live {
                let (state, p_model) = model.decoder_step(&sent.ctx, &hyp.prefix)?;
                row.push(StepData {
                    state,
                    p_model,
                    hits: None,
                });
            }
            step_data.push(row);
        }

        // Firing decisions, datastore searches, cache updates.
        let mut fired = vec![false; sentences.len()];
        let mut shared_inserts: Vec<(u64, usize)> = Vec::new();
        for (si, sent) in sentences.iter_mut().enumerate() {
            if sent.live.is_empty() {
                continue;
            }
            let interval = match config.strategy {
                Strategy::Base => None,
                Strategy::VanillaKnn => Some(1),
                Strategy::MaintainOrder | Strategy::Cache(_) => sent.cursor.fires(t),
            };
            let Some(i_k) = interval else { continue };
            fired[si] = true;
            let (ds, index) = retrieval.expect("retrieval strategies carry a datastore");
            let limit = match config.strategy {
                Strategy::VanillaKnn => 1,
                _ => chunk_size_at(&config.schedule, ds.chunk_size(), i_k)?,
            };
            for (hi, hyp) in sent.live.iter_mut().enumerate() {
                let query = query_vector(ds, &step_data[si][hi].state, QuerySpace::Key)?;
                let hits = index.search(ds, &query, k)?;
                hyp.ds_searches += 1;
                match config.strategy {
                    Strategy::MaintainOrder => {
                        let ctx_hits = hits
                            .iter()
                            .map(|h| {
                                let chunk = ds.chunk(h.entry as usize);
                                let tokens =
                                    chunk.tokens[..limit].iter().map(|&t| TokenId(t)).collect();
                                (h.distance, tokens)
                            })
                            .collect();
                        hyp.maintain = Some(Rc::new(MaintainCtx { hits: ctx_hits }));
                        hyp.offset = 0;
                    }
                    Strategy::Cache(CacheScope::SingleChunk) => {
                        let mut cache =
                            NeighborsCache::new(CacheScope::SingleChunk, ds.d_cache(), config.cache_capacity);
                        let chunks: Vec<(u64, usize)> =
                            hits.iter().map(|h| (h.entry, limit)).collect();
                        cache.insert_chunks(ds, &chunks)?;
                        hyp.own_cache = Some(Rc::new(cache));
                    }
                    Strategy::Cache(_) => {
                        shared_inserts.extend(hits.iter().map(|h| (h.entry, limit)));
                    }
                    Strategy::VanillaKnn | Strategy::Base => {}
                }
                step_data[si][hi].hits = Some(hits);
            }
        }
        if !shared_inserts.is_empty() {
            let (ds, _) = retrieval.expect("shared cache implies a datastore");
            shared_cache
                .as_mut()
                .expect("shared cache exists for shared scopes")
                .insert_chunks(ds, &shared_inserts)?;
        }

        // Final distributions and beam expansion, sentence by sentence.
        for (si, sent) in sentences.iter_mut().enumerate() {
            if sent.live.is_empty() {
                continue;
            }
            let mut candidates: Vec<Candidate> = Vec::new();
            for (hi, hyp) in sent.live.iter_mut().enumerate() {
                let data = &step_data[si][hi];
                let (p_final, kind, cache_info) = step_distribution(
                    config,
                    retrieval,
                    hyp,
                    data,
                    fired[si],
                    shared_cache.as_ref(),
                )?;
                if let Some(f) = trace.as_mut() {
                    let (cache_query, cache_entries) = cache_info.unwrap_or((None, None));
                    f(StepTrace {
                        sentence: sentence_base + si,
                        position: t,
                        hypothesis: hi,
                        kind,
                        p_model: data.p_model.clone(),
                        p_final: p_final.clone(),
                        cache_query,
                        cache_entries,
                    });
                }
                for (tok, p) in p_final.iter() {
                    if p > 0.0 {
                        candidates.push(Candidate {
                            score: hyp.score + p.ln(),
                            hyp: hi,
                            tok,
                        });
                    }
                }
            }

            candidates.sort_by(|a, b| {
                b.score
                    .partial_cmp(&a.score)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.hyp.cmp(&b.hyp))
                    .then(a.tok.cmp(&b.tok))
            });

            // Only the top beam_size candidates survive; EOS among them
            // retires to the finished pool with its score frozen. This
            // keeps beam_size=1 identical to greedy argmax decoding.
            let beam = config.beam_size;
            let mut new_live: Vec<Hypothesis> = Vec::with_capacity(beam);
            for cand in candidates.iter().take(beam) {
                let parent = &sent.live[cand.hyp];
                let mut child = parent.clone();
                child.prefix.push(cand.tok);
                child.score = cand.score;
                if cand.tok == EOS {
                    sent.finished.push(child);
                } else {
                    child.offset += 1;
                    new_live.push(child);
                }
            }
            sent.live = new_live;

            sent.finished.sort_by(|a, b| {
                b.score
                    .partial_cmp(&a.score)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.prefix.cmp(&b.prefix))
            });
            sent.finished.truncate(beam);

            // Scores only decrease, so once the best finished hypothesis
            // beats every live one nothing can improve.
            if let Some(best_finished) = sent.finished.first() {
                let best_live = sent
                    .live
                    .iter()
                    .map(|h| h.score)
                    .fold(f64::NEG_INFINITY, f64::max);
                if best_finished.score >= best_live {
                    sent.live.clear();
                }
            }
        }
    }

    let batch_ms = started.elapsed().as_secs_f64() * 1000.0;
    let winners: Vec<Hypothesis> = sentences
        .into_iter()
        .map(|mut sent| {
            // Best score over finished and still-live hypotheses; live
            // ones only matter when the horizon cut them off.
            sent.finished.append(&mut sent.live);
            sent.finished.sort_by(|a, b| {
                b.score
                    .partial_cmp(&a.score)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.prefix.cmp(&b.prefix))
            });
            sent.finished
                .into_iter()
                .next()
                .expect("at least one hypothesis survives")
        })
        .collect();

    let total_tokens: usize = winners.iter().map(|h| h.prefix.len() - 1).sum();
    Ok(winners
        .into_iter()
        .map(|hyp| {
            let steps = hyp.prefix.len() - 1;
            let mut tokens = hyp.prefix[1..].to_vec();
            if tokens.last() == Some(&EOS) {
                tokens.pop();
            }
            DecodeOutput {
                tokens,
                score: hyp.score,
                stats: DecodeStats {
                    tokens: steps,
                    ds_searches: hyp.ds_searches,
                    cache_searches: hyp.cache_searches,
                    wall_ms: batch_ms * steps as f64 / total_tokens.max(1) as f64,
                },
            }
        })
        .collect())
}

type CacheInfo = Option<(Option<Vec<f32>>, Option<Vec<(Vec<f32>, TokenId)>>)>;

fn step_distribution(
    config: &DecodeConfig,
    retrieval: Option<(&Datastore, &SearchIndex)>,
    hyp: &mut Hypothesis,
    data: &StepData,
    fired: bool,
    shared_cache: Option<&NeighborsCache>,
) -> Result<(ProbDist, StepKind, CacheInfo)> {
    let mix = &config.mix;
    match config.strategy {
        Strategy::Base => Ok((data.p_model.clone(), StepKind::Base, None)),

        Strategy::VanillaKnn => {
            let (ds, _) = retrieval.expect("vanilla carries a datastore");
            let hits = data.hits.as_ref().expect("vanilla fires every step");
            first_token_mix(ds, hits, &data.p_model, mix.lambda_ds, mix.temp_ds)
        }

        Strategy::MaintainOrder => {
            let offset = if fired { 0 } else { hyp.offset };
            let neighbors: Vec<(f32, TokenId)> = hyp
                .maintain
                .as_ref()
                .map(|ctx| {
                    ctx.hits
                        .iter()
                        .filter_map(|(dist, tokens)| {
                            tokens
                                .get(offset)
                                .copied()
                                .filter(|&tok| tok != PAD)
                                .map(|tok| (*dist, tok))
                        })
                        .collect()
                })
                .unwrap_or_default();
            if neighbors.is_empty() {
                return Ok((data.p_model.clone(), StepKind::Fallback, None));
            }
            let p_ret = retrieval_distribution(&neighbors, mix.temp_ds)?;
            let p = interpolate(&data.p_model, &p_ret, mix.lambda_ds)?;
            let kind = if fired { StepKind::Retrieval } else { StepKind::ChunkOffset };
            Ok((p, kind, None))
        }

        Strategy::Cache(scope) => {
            let (ds, _) = retrieval.expect("cache strategies carry a datastore");
            if fired {
                let hits = data.hits.as_ref().expect("fired steps searched");
                return first_token_mix(ds, hits, &data.p_model, mix.lambda_ds, mix.temp_ds);
            }
            let cache = match scope {
                CacheScope::SingleChunk => hyp.own_cache.as_deref(),
                _ => shared_cache,
            };
            let Some(cache) = cache else {
                return Ok((data.p_model.clone(), StepKind::Fallback, None));
            };
            let query = query_vector(ds, &data.state, QuerySpace::Cache)?;
            match cache.search(&query, mix.k) {
                Err(Error::EmptyCache) => Ok((data.p_model.clone(), StepKind::Fallback, None)),
                Err(e) => Err(e),
                Ok(neighbors) => {
                    hyp.cache_searches += 1;
                    let p_ret = retrieval_distribution(&neighbors, mix.temp_cache)?;
                    let p = interpolate(&data.p_model, &p_ret, mix.lambda_cache)?;
                    let snapshot: Vec<(Vec<f32>, TokenId)> = cache
                        .entries()
                        .map(|(key, tok)| (key.to_vec(), tok))
                        .collect();
                    Ok((
                        p,
                        StepKind::CacheHit,
                        Some((Some(query), Some(snapshot))),
                    ))
                }
            }
        }
    }
}

/// Retrieval distribution over the first token of each retrieved chunk,
/// interpolated with the model. PAD-valued neighbors are dropped before
/// the softmax; if none survive the model distribution passes through.
fn first_token_mix(
    ds: &Datastore,
    hits: &[Hit],
    p_model: &ProbDist,
    lambda: f64,
    temp: f64,
) -> Result<(ProbDist, StepKind, CacheInfo)> {
    let neighbors: Vec<(f32, TokenId)> = hits
        .iter()
        .map(|h| (h.distance, ds.chunk(h.entry as usize).first_token()))
        .filter(|&(_, tok)| tok != PAD)
        .collect();
    if neighbors.is_empty() {
        return Ok((p_model.clone(), StepKind::Fallback, None));
    }
    let p_ret = retrieval_distribution(&neighbors, temp)?;
    Ok((interpolate(p_model, &p_ret, lambda)?, StepKind::Retrieval, None))
}
