//! The neighbors' cache: a small searchable memory of retrieved chunks.
//!
//! At retrieval steps the decoder feeds the retrieved chunks' tokens in
//! here, paired with each token's cache-reduced decoder state taken from
//! the datastore's state array. At non-retrieval steps the decoder
//! searches this cache instead of the datastore. The scope decides who
//! shares the cache and when it resets:
//!
//! - single-chunk: one cache per beam hypothesis, rebuilt every retrieval step
//! - beam-batch: one cache for all hypotheses and batch sentences, rebuilt
//!   every retrieval step
//! - sentence-level: shared like beam-batch but accumulating across
//!   retrieval steps, cleared only between batches

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::datastore::{Datastore, PAD_STATE_REF};
use crate::prob::sq_l2_raw;
use crate::vocab::{TokenId, PAD};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CacheScope {
    SingleChunk,
    BeamBatch,
    SentenceLevel,
}

#[derive(Clone, Debug)]
pub struct NeighborsCache {
    entries: VecDeque<(Vec<f32>, TokenId)>,
    scope: CacheScope,
    capacity: Option<usize>,
    d_cache: usize,
}

impl NeighborsCache {
    pub fn new(scope: CacheScope, d_cache: usize, capacity: Option<usize>) -> Self {
        Self {
            entries: VecDeque::new(),
            scope,
            capacity,
            d_cache,
        }
    }

    pub fn scope(&self) -> CacheScope {
        self.scope
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in insertion order (oldest first).
    pub fn entries(&self) -> impl Iterator<Item = (&[f32], TokenId)> + '_ {
        self.entries.iter().map(|(k, v)| (k.as_slice(), *v))
    }

    /// Feeds one retrieval step's chunks into the cache: every non-PAD
    /// position contributes a (state, token) entry, duplicates retained.
    /// Under the resetting scopes the cache is cleared first, so the
    /// caller must gather all chunks of the step into one call. Each
    /// chunk comes as `(entry id, limit)`; only the first `limit` chunk
    /// positions are used, for the varying chunk size option.
    pub fn insert_chunks(&mut self, ds: &Datastore, chunks: &[(u64, usize)]) -> Result<()> {
        if matches!(self.scope, CacheScope::SingleChunk | CacheScope::BeamBatch) {
            self.entries.clear();
        }
        for &(id, limit) in chunks {
            let chunk = ds.chunk(id as usize);
            for (i, (&tok, &state_ref)) in chunk
                .tokens
                .iter()
                .zip(chunk.state_refs)
                .take(limit)
                .enumerate()
            {
                if tok == PAD.0 {
                    continue;
                }
                if state_ref == PAD_STATE_REF {
                    return Err(Error::SentinelDereference { position: i });
                }
                self.entries
                    .push_back((ds.state(state_ref).to_vec(), TokenId(tok)));
                if let Some(cap) = self.capacity {
                    while self.entries.len() > cap {
                        self.entries.pop_front();
                    }
                }
            }
        }
        Ok(())
    }

    /// Exact top-`min(k, len)` scan by squared L2, ties kept in
    /// insertion order.
    pub fn search(&self, query: &[f32], k: usize) -> Result<Vec<(f32, TokenId)>> {
        if self.entries.is_empty() {
            return Err(Error::EmptyCache);
        }
        if query.len() != self.d_cache {
            return Err(Error::DimensionMismatch {
                expected: self.d_cache,
                got: query.len(),
            });
        }
        let mut scored: Vec<(f32, usize, TokenId)> = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, (key, tok))| (sq_l2_raw(query, key), i, *tok))
            .collect();
        scored.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
        });
        scored.truncate(k);
        Ok(scored.into_iter().map(|(d, _, t)| (d, t)).collect())
    }

    /// Empties the cache; scope and capacity survive.
    pub fn reset(&mut self) {
        self.entries.clear();
    }
}
