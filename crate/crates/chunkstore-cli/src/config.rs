//! Run configuration: a JSON file mirroring the decode settings plus
//! file paths, overridable field by field from command-line flags.
//!
//! Documented defaults: k=8, lambda=0.7, T=10, lambda'=0.5, T'=1, beam 5,
//! batch 8, chunk size 16, geometric schedule (2, 16). The grids the
//! ablate command sweeps by default follow the validated ranges:
//! lambda in {0.5, 0.6, 0.7, 0.8}, lambda' in {0.4, 0.5, 0.6},
//! T' in {1, 2, 3}.

use std::path::Path;

use serde::{Deserialize, Serialize};

use chunkstore::cache::CacheScope;
use chunkstore::decode::{DecodeConfig, Strategy};
use chunkstore::prob::MixParams;
use chunkstore::schedule::{ScheduleConfig, ScheduleMode};

/// Validation failure naming the offending field. Exit code 1.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid configuration: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// The on-disk and in-memory run description. Every field is optional;
/// flags override file values; command handlers demand what they need.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    // Paths.
    pub vocab: Option<String>,
    pub model: Option<String>,
    pub datastore: Option<String>,
    pub source: Option<String>,
    pub target: Option<String>,
    pub input: Option<String>,
    pub reference: Option<String>,
    pub out: Option<String>,
    pub records: Option<String>,

    // Decoding.
    pub strategy: Option<String>,
    pub schedule: Option<String>,
    pub i_min: Option<u64>,
    pub i_max: Option<u64>,
    pub vary_chunk: Option<bool>,
    pub k: Option<usize>,
    pub lambda: Option<f64>,
    pub temp: Option<f64>,
    pub lambda_cache: Option<f64>,
    pub temp_cache: Option<f64>,
    pub beam: Option<usize>,
    pub batch: Option<usize>,
    pub max_len: Option<usize>,
    pub max_src_len: Option<usize>,
    pub cache_capacity: Option<usize>,

    pub seed: Option<u64>,
    pub threads: Option<usize>,

    // Index.
    pub index: Option<String>,
    pub nprobe: Option<usize>,
    pub n_clusters: Option<usize>,
    pub kmeans_iters: Option<usize>,

    // Model training and datastore building.
    pub d_full: Option<usize>,
    pub alpha: Option<f64>,
    pub chunk_size: Option<usize>,
    pub d_key: Option<usize>,
    pub d_cache: Option<usize>,
    pub pca_sample: Option<usize>,

    // On-the-fly stream.
    pub warm_fraction: Option<f64>,
    pub update_block: Option<usize>,
    pub report_block: Option<usize>,

    // Ablation grids.
    pub strategies: Option<Vec<String>>,
    pub schedules: Option<Vec<String>>,
    pub ks: Option<Vec<usize>>,
}

impl RunConfig {
    pub fn load(path: &str) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("config: cannot read `{path}`: {e}")))?;
        serde_json::from_str(&text).map_err(|e| ConfigError(format!("config: {e}")))
    }

    /// Field-wise override: any value set in `flags` wins.
    pub fn merged_with(mut self, flags: RunConfig) -> Self {
        macro_rules! take {
            ($($field:ident),* $(,)?) => {
                $(if flags.$field.is_some() { self.$field = flags.$field; })*
            };
        }
        take!(
            vocab, model, datastore, source, target, input, reference, out, records, strategy,
            schedule, i_min, i_max, vary_chunk, k, lambda, temp, lambda_cache, temp_cache, beam,
            batch, max_len, max_src_len, cache_capacity, seed, threads, index, nprobe, n_clusters,
            kmeans_iters, d_full, alpha, chunk_size, d_key, d_cache, pca_sample, warm_fraction,
            update_block, report_block, strategies, schedules, ks,
        );
        self
    }

    pub fn require(&self, field: &str) -> Result<String, ConfigError> {
        let value = match field {
            "vocab" => &self.vocab,
            "model" => &self.model,
            "datastore" => &self.datastore,
            "source" => &self.source,
            "target" => &self.target,
            "input" => &self.input,
            "reference" => &self.reference,
            "out" => &self.out,
            other => return Err(ConfigError(format!("unknown required field `{other}`"))),
        };
        value
            .clone()
            .ok_or_else(|| ConfigError(format!("missing required field `{field}`")))
    }

    pub fn require_existing(&self, field: &str) -> Result<String, ConfigError> {
        let path = self.require(field)?;
        if !Path::new(&path).exists() {
            return Err(ConfigError(format!("`{field}`: file `{path}` does not exist")));
        }
        Ok(path)
    }

    pub fn strategy(&self) -> Result<Strategy, ConfigError> {
        match &self.strategy {
            None => Ok(Strategy::Cache(CacheScope::SentenceLevel)),
            Some(s) => s
                .parse()
                .map_err(|e| ConfigError(format!("`strategy`: {e}"))),
        }
    }

    pub fn schedule(&self) -> Result<ScheduleConfig, ConfigError> {
        let mode = parse_schedule(
            self.schedule.as_deref().unwrap_or("geometric"),
            self.i_min,
            self.i_max,
        )?;
        let config = ScheduleConfig {
            mode,
            vary_chunk: self.vary_chunk.unwrap_or(false),
        };
        config
            .validate()
            .map_err(|e| ConfigError(format!("`schedule`: {e}")))?;
        Ok(config)
    }

    pub fn mix(&self) -> Result<MixParams, ConfigError> {
        let mix = MixParams {
            lambda_ds: self.lambda.unwrap_or(0.7),
            temp_ds: self.temp.unwrap_or(10.0),
            lambda_cache: self.lambda_cache.unwrap_or(0.5),
            temp_cache: self.temp_cache.unwrap_or(1.0),
            k: self.k.unwrap_or(8),
        };
        mix.validate()
            .map_err(|e| ConfigError(format!("`lambda`/`temp`/`k`: {e}")))?;
        Ok(mix)
    }

    pub fn decode_config(&self) -> Result<DecodeConfig, ConfigError> {
        let config = DecodeConfig {
            beam_size: self.beam.unwrap_or(5),
            max_len: self.max_len.unwrap_or(100),
            max_src_len: self.max_src_len.unwrap_or(1024),
            batch_size: self.batch.unwrap_or(8),
            mix: self.mix()?,
            schedule: self.schedule()?,
            strategy: self.strategy()?,
            cache_capacity: self.cache_capacity,
        };
        config
            .validate()
            .map_err(|e| ConfigError(format!("decode config: {e}")))?;
        Ok(config)
    }

    /// Concurrency for translate sharding: the flag or file value capped
    /// by the CHUNKSTORE_THREADS environment variable. Defaults to 1.
    pub fn effective_threads(&self) -> usize {
        let requested = self.threads.unwrap_or(1).max(1);
        match std::env::var("CHUNKSTORE_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
        {
            Some(cap) => requested.min(cap.max(1)),
            None => requested,
        }
    }
}

/// Accepts `fixed`, `geometric`, or the compact forms `fixed:N` and
/// `geo:MIN:MAX`; the bare words read `--i-min`/`--i-max`.
pub fn parse_schedule(
    spec: &str,
    i_min: Option<u64>,
    i_max: Option<u64>,
) -> Result<ScheduleMode, ConfigError> {
    let parts: Vec<&str> = spec.split(':').collect();
    let parse_num = |s: &str| {
        s.parse::<u64>()
            .map_err(|_| ConfigError(format!("`schedule`: `{s}` is not a number")))
    };
    match parts.as_slice() {
        ["fixed"] => Ok(ScheduleMode::Fixed {
            interval: i_min.unwrap_or(6),
        }),
        ["fixed", n] => Ok(ScheduleMode::Fixed {
            interval: parse_num(n)?,
        }),
        ["geometric" | "geo"] => Ok(ScheduleMode::Geometric {
            i_min: i_min.unwrap_or(2),
            i_max: i_max.unwrap_or(16),
        }),
        ["geometric" | "geo", lo, hi] => Ok(ScheduleMode::Geometric {
            i_min: parse_num(lo)?,
            i_max: parse_num(hi)?,
        }),
        _ => Err(ConfigError(format!(
            "`schedule`: `{spec}` (expected fixed[:N] or geo[:MIN:MAX])"
        ))),
    }
}
