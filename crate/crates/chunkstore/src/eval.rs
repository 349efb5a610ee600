//! Throughput benchmarking and the on-the-fly adaptation stream.
//!
//! The stream simulator models post-editing: translate a block of
//! sentences, then receive their references and append them to the
//! datastore before the stream continues. Search-call counters are
//! exact and machine independent; wall-clock numbers are reported for
//! context and should be read together with the hardware they ran on.

use std::time::Instant;

use serde::Serialize;

use crate::bleu::corpus_bleu;
use crate::datastore::{append_examples, Datastore};
use crate::decode::{translate_batch, DecodeConfig};
use crate::index::SearchIndex;
use crate::model::TranslationModel;
use crate::vocab::{SentencePair, TokenId};
use crate::{Error, Result};

/// On-the-fly adaptation settings.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct StreamConfig {
    /// Fraction of the dataset indexed before translation begins.
    pub warm_fraction: f64,
    /// Sentences translated between datastore updates.
    pub update_block: usize,
    /// Sentences per reported BLEU block.
    pub report_block: usize,
}

impl Default for StreamConfig {
    fn default() -> Self {
        Self {
            warm_fraction: 0.10,
            update_block: 250,
            report_block: 4000,
        }
    }
}

impl StreamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.warm_fraction > 0.0 && self.warm_fraction < 1.0) {
            return Err(Error::Config("warm_fraction must lie in (0, 1)".into()));
        }
        if self.update_block == 0 || self.report_block == 0 {
            return Err(Error::Config("stream blocks must be at least 1".into()));
        }
        Ok(())
    }
}

/// Splits a stream into the warm prefix (datastore seed) and the part
/// to translate. The warm side always gets at least one pair.
pub fn split_warm(stream: &[SentencePair], warm_fraction: f64) -> (&[SentencePair], &[SentencePair]) {
    let warm = ((stream.len() as f64 * warm_fraction) as usize)
        .max(1)
        .min(stream.len().saturating_sub(1));
    stream.split_at(warm)
}

#[derive(Clone, Debug, Serialize)]
pub struct BleuBlock {
    /// Sentence range within the translated stream, end exclusive.
    pub start: usize,
    pub end: usize,
    pub bleu: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StreamReport {
    pub blocks: Vec<BleuBlock>,
    pub overall_bleu: f64,
    pub translated: usize,
    pub updates: usize,
    /// Cumulative time appending to the datastore and refreshing the index.
    pub update_secs: f64,
    /// Per-update times, in stream order.
    pub update_block_secs: Vec<f64>,
    pub inference_secs: f64,
}

impl StreamReport {
    pub fn total_secs(&self) -> f64 {
        self.update_secs + self.inference_secs
    }
}

/// Runs the adaptation stream. `ds` must already hold the warm data;
/// `stream` is the remainder, translated in order. After every
/// `update_block` sentences the just-seen pairs are appended and the
/// index refreshed. References also score the hypotheses in disjoint
/// `report_block` ranges.
pub fn run_stream(
    model: &dyn TranslationModel,
    ds: &mut Datastore,
    index: &mut SearchIndex,
    decode: &DecodeConfig,
    config: &StreamConfig,
    stream: &[SentencePair],
) -> Result<StreamReport> {
    config.validate()?;
    if stream.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let mut hypotheses: Vec<Vec<TokenId>> = Vec::with_capacity(stream.len());
    let mut inference_secs = 0.0;
    let mut update_secs = 0.0;
    let mut update_block_secs = Vec::new();

    for block in stream.chunks(config.update_block) {
        let sources: Vec<Vec<TokenId>> = block.iter().map(|p| p.source.clone()).collect();
        let t0 = Instant::now();
        let outputs = translate_batch(model, Some(ds), Some(index), decode, &sources)?;
        inference_secs += t0.elapsed().as_secs_f64();
        hypotheses.extend(outputs.into_iter().map(|o| o.tokens));

        let t1 = Instant::now();
        append_examples(ds, model, block)?;
        index.refresh(ds);
        let took = t1.elapsed().as_secs_f64();
        update_secs += took;
        update_block_secs.push(took);
    }

    let references: Vec<Vec<TokenId>> = stream
        .iter()
        .map(|p| p.target[..p.target.len() - 1].to_vec())
        .collect();

    let mut blocks = Vec::new();
    let mut start = 0;
    while start < hypotheses.len() {
        let end = (start + config.report_block).min(hypotheses.len());
        let bleu = corpus_bleu(&hypotheses[start..end], &references[start..end])?;
        blocks.push(BleuBlock {
            start,
            end,
            bleu: bleu.score,
        });
        start = end;
    }
    let overall = corpus_bleu(&hypotheses, &references)?;

    Ok(StreamReport {
        blocks,
        overall_bleu: overall.score,
        translated: hypotheses.len(),
        updates: update_block_secs.len(),
        update_secs,
        update_block_secs,
        inference_secs,
    })
}

/// One benchmark configuration's aggregate counters.
#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub label: String,
    pub sentences: usize,
    pub tokens: usize,
    pub ds_searches: u64,
    pub cache_searches: u64,
    pub wall_secs: f64,
    pub tokens_per_sec: f64,
    pub searches_per_token: f64,
}

/// Runs every config on the same sources, one at a time so wall times
/// stay honest. Search counters are exactly reproducible; tokens/sec is
/// hardware dependent.
pub fn bench(
    model: &dyn TranslationModel,
    ds: Option<&Datastore>,
    index: Option<&SearchIndex>,
    configs: &[(String, DecodeConfig)],
    sources: &[Vec<TokenId>],
) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::with_capacity(configs.len());
    for (label, config) in configs {
        let t0 = Instant::now();
        let outputs = translate_batch(model, ds, index, config, sources)?;
        let wall_secs = t0.elapsed().as_secs_f64();
        let tokens: usize = outputs.iter().map(|o| o.stats.tokens).sum();
        let ds_searches: u64 = outputs.iter().map(|o| o.stats.ds_searches).sum();
        let cache_searches: u64 = outputs.iter().map(|o| o.stats.cache_searches).sum();
        rows.push(BenchRow {
            label: label.clone(),
            sentences: outputs.len(),
            tokens,
            ds_searches,
            cache_searches,
            wall_secs,
            tokens_per_sec: tokens as f64 / wall_secs.max(1e-9),
            searches_per_token: ds_searches as f64 / tokens.max(1) as f64,
        });
    }
    Ok(rows)
}
