//! Chunk-based retrieval-augmented sequence decoding.
//!
//! A semi-parametric translation engine: a parametric model's per-step
//! distribution is interpolated with a distribution built from nearest
//! neighbors retrieved out of a key-value datastore whose values are
//! *chunks* of target tokens. Retrieving a chunk at a time lets the
//! decoder skip most datastore searches: between retrieval steps it
//! either walks the retrieved chunks in order or searches a small
//! neighbors' cache holding the retrieved chunks' tokens.
//!
//! # Example
//!
//! ```
//! use chunkstore::datastore::{build_datastore, BuildParams};
//! use chunkstore::decode::{translate_batch, DecodeConfig};
//! use chunkstore::index::SearchIndex;
//! use chunkstore::model::ToyModel;
//! use chunkstore::synth;
//!
//! let vocab = synth::word_vocab(50);
//! let corpus = synth::random_pairs(&vocab, 40, 3..6, 4..9, 7);
//! let model = ToyModel::train(&corpus, vocab.size(), 7, 0.1, 32)?;
//! let params = BuildParams { c: 4, d_key: 16, d_cache: 8, pca_sample: 10_000 };
//! let ds = build_datastore(&model, &corpus, &params)?;
//! let index = SearchIndex::flat();
//!
//! let config = DecodeConfig { max_len: 20, ..DecodeConfig::default() };
//! let sources: Vec<_> = corpus.iter().take(2).map(|p| p.source.clone()).collect();
//! let outputs = translate_batch(&model, Some(&ds), Some(&index), &config, &sources)?;
//! assert_eq!(outputs.len(), 2);
//! assert!(outputs[0].stats.ds_searches <= outputs[0].stats.tokens as u64);
//! # Ok::<(), chunkstore::Error>(())
//! ```
//!
//! Modules:
//! - [`vocab`]: token ids, vocabularies, sentence pairs, corpus IO
//! - [`prob`]: sparse distributions, retrieval softmax, interpolation
//! - [`pca`]: PCA fitting and projection for key dimension reduction
//! - [`model`]: the parametric-model interface and a count-based toy model
//! - [`datastore`]: building, appending, and serializing chunk datastores
//! - [`index`]: exact flat and inverted-file top-k search over keys
//! - [`cache`]: the neighbors' cache with its scope variants
//! - [`schedule`]: fixed and geometric-progression retrieval schedules
//! - [`decode`]: beam search integrating all retrieval strategies
//! - [`bleu`]: corpus BLEU
//! - [`eval`]: throughput benchmarking and the on-the-fly adaptation stream
//! - [`synth`]: seeded synthetic corpora for desk-scale experiments

pub mod bleu;
pub mod cache;
pub mod datastore;
pub mod decode;
mod error;
pub mod eval;
pub mod index;
pub mod model;
pub mod pca;
pub mod prob;
pub mod schedule;
pub mod synth;
pub mod vocab;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
