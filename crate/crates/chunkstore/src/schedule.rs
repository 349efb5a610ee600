//! Retrieval schedules: at which generation positions the decoder
//! searches the datastore.
//!
//! Fixed mode fires every `i` steps. Geometric mode grows the interval
//! along the generation: after a retrieval at position `t_k`, the next
//! one comes `i_k = floor(min(i_max, i_min * 2^(r * t_k)))` tokens later
//! with rate `r = (i_max / 2) / |x|`, so retrieval is dense early and
//! sparse late, capped at `i_max`. Position 1 always fires.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleMode {
    Fixed { interval: u64 },
    Geometric { i_min: u64, i_max: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub mode: ScheduleMode,
    /// Use only the first `i_k` positions of each retrieved chunk
    /// instead of the full stored chunk.
    pub vary_chunk: bool,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            mode: ScheduleMode::Geometric { i_min: 2, i_max: 16 },
            vary_chunk: false,
        }
    }
}

impl ScheduleConfig {
    pub fn validate(&self) -> Result<()> {
        match self.mode {
            ScheduleMode::Fixed { interval } if interval < 1 => {
                Err(Error::Config("fixed interval must be at least 1".into()))
            }
            ScheduleMode::Geometric { i_min, i_max } if i_min < 1 || i_min > i_max => Err(
                Error::Config("geometric schedule needs 1 <= i_min <= i_max".into()),
            ),
            _ => Ok(()),
        }
    }
}

/// Interval from the retrieval step at position `t_k` to the next one.
/// The floor of the capped progression, clamped to at least 1.
pub fn next_interval(t_k: u64, i_min: u64, i_max: u64, src_len: usize) -> u64 {
    let rate = (i_max as f64 / 2.0) / src_len.max(1) as f64;
    let raw = i_min as f64 * 2f64.powf(rate * t_k as f64);
    let capped = raw.min(i_max as f64).floor() as u64;
    capped.max(1)
}

/// All retrieval positions up to and including `horizon`.
pub fn schedule_steps(config: &ScheduleConfig, src_len: usize, horizon: u64) -> Vec<u64> {
    let mut positions = Vec::new();
    let mut cursor = ScheduleCursor::new(*config, src_len);
    for t in 1..=horizon {
        if cursor.fires(t).is_some() {
            positions.push(t);
        }
    }
    positions
}

/// Chunk positions usable at a retrieval step whose interval is `i_k`:
/// the stored chunk size, or `i_k` leading positions under `vary_chunk`.
pub fn chunk_size_at(config: &ScheduleConfig, c_stored: usize, i_k: u64) -> Result<usize> {
    if !config.vary_chunk {
        return Ok(c_stored);
    }
    if i_k > c_stored as u64 {
        return Err(Error::VaryExceedsStored {
            interval: i_k,
            stored: c_stored,
        });
    }
    Ok(i_k as usize)
}

/// Streaming form of the schedule for the decoder: call [`Self::fires`]
/// once for every generation position in order.
#[derive(Clone, Copy, Debug)]
pub struct ScheduleCursor {
    config: ScheduleConfig,
    src_len: usize,
    next_pos: u64,
}

impl ScheduleCursor {
    pub fn new(config: ScheduleConfig, src_len: usize) -> Self {
        Self {
            config,
            src_len,
            next_pos: 1,
        }
    }

    /// If position `t` is a retrieval step, returns the interval `i_k`
    /// until the following one.
    pub fn fires(&mut self, t: u64) -> Option<u64> {
        if t != self.next_pos {
            return None;
        }
        let interval = match self.config.mode {
            ScheduleMode::Fixed { interval } => interval.max(1),
            ScheduleMode::Geometric { i_min, i_max } => {
                next_interval(t, i_min, i_max, self.src_len)
            }
        };
        self.next_pos = t + interval;
        Some(interval)
    }
}
