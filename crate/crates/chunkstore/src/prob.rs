//! Sparse vocabulary distributions and the two mixing formulas.
//!
//! The retrieval distribution turns a neighbor list into token
//! probabilities through a distance softmax: neighbors sharing a value
//! pool their weight, so `p(v)` is proportional to the sum of
//! `exp(-distance / T)` over neighbors whose value is `v`. The final
//! per-step distribution linearly interpolates the parametric model's
//! distribution with the retrieval one.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::vocab::TokenId;
use crate::{Error, Result};

/// Sum tolerance for a valid distribution.
pub const PROB_SUM_TOL: f64 = 1e-9;

/// A sparse probability distribution over the vocabulary.
///
/// Absent ids carry zero mass. Entries are kept in id order so iteration
/// (and therefore everything downstream of it) is deterministic.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProbDist {
    probs: BTreeMap<TokenId, f64>,
}

impl ProbDist {
    /// Builds a distribution from `(token, mass)` pairs, dropping zeros.
    /// Masses for a repeated token accumulate. The caller is responsible
    /// for the masses summing to 1.
    pub fn from_entries(entries: impl IntoIterator<Item = (TokenId, f64)>) -> Self {
        let mut probs = BTreeMap::new();
        for (tok, p) in entries {
            if p != 0.0 {
                *probs.entry(tok).or_insert(0.0) += p;
            }
        }
        Self { probs }
    }

    /// Unit mass on a single token.
    pub fn point(token: TokenId) -> Self {
        Self::from_entries([(token, 1.0)])
    }

    pub fn prob(&self, token: TokenId) -> f64 {
        self.probs.get(&token).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (TokenId, f64)> + '_ {
        self.probs.iter().map(|(&t, &p)| (t, p))
    }

    pub fn support_len(&self) -> usize {
        self.probs.len()
    }

    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }

    /// Highest-probability token, ties broken by the smallest id.
    pub fn argmax(&self) -> Option<(TokenId, f64)> {
        let mut best: Option<(TokenId, f64)> = None;
        for (tok, p) in self.iter() {
            match best {
                Some((_, bp)) if p <= bp => {}
                _ => best = Some((tok, p)),
            }
        }
        best
    }

    /// Checks non-negativity and that the mass sums to 1 within [`PROB_SUM_TOL`].
    pub fn validate(&self) -> Result<()> {
        for (tok, p) in self.iter() {
            if p < 0.0 || !p.is_finite() {
                return Err(Error::Config(format!("negative or non-finite mass at {tok}")));
            }
        }
        let total = self.total();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::Config(format!("distribution sums to {total}")));
        }
        Ok(())
    }
}

/// Interpolation and temperature hyperparameters for both memories.
///
/// `lambda_ds`/`temp_ds` apply at datastore retrieval steps, the primed
/// pair `lambda_cache`/`temp_cache` at cache steps, which use their own
/// values because the cache holds far fewer entries than the datastore.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixParams {
    pub lambda_ds: f64,
    pub temp_ds: f64,
    pub lambda_cache: f64,
    pub temp_cache: f64,
    pub k: usize,
}

impl Default for MixParams {
    fn default() -> Self {
        Self {
            lambda_ds: 0.7,
            temp_ds: 10.0,
            lambda_cache: 0.5,
            temp_cache: 1.0,
            k: 8,
        }
    }
}

impl MixParams {
    pub fn validate(&self) -> Result<()> {
        for lambda in [self.lambda_ds, self.lambda_cache] {
            if !(0.0..=1.0).contains(&lambda) {
                return Err(Error::LambdaOutOfRange(lambda));
            }
        }
        for temp in [self.temp_ds, self.temp_cache] {
            if temp <= 0.0 || !temp.is_finite() {
                return Err(Error::NonPositiveTemperature(temp));
            }
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        Ok(())
    }
}

/// Distance softmax over retrieved neighbors.
///
/// `p(v) ∝ Σ exp(-distance/temp)` over neighbors valued `v`; mass lands
/// only on values present in the list. Distances are shifted by their
/// minimum before exponentiation, which leaves the result unchanged and
/// keeps the weights representable for large distances.
pub fn retrieval_distribution(neighbors: &[(f32, TokenId)], temp: f64) -> Result<ProbDist> {
    if neighbors.is_empty() {
        return Err(Error::EmptyNeighborSet);
    }
    if temp <= 0.0 || !temp.is_finite() {
        return Err(Error::NonPositiveTemperature(temp));
    }
    let min_dist = neighbors
        .iter()
        .map(|&(d, _)| f64::from(d))
        .fold(f64::INFINITY, f64::min);
    let mut weights: BTreeMap<TokenId, f64> = BTreeMap::new();
    let mut denom = 0.0;
    for &(dist, tok) in neighbors {
        let w = (-(f64::from(dist) - min_dist) / temp).exp();
        *weights.entry(tok).or_insert(0.0) += w;
        denom += w;
    }
    Ok(ProbDist::from_entries(
        weights.into_iter().map(|(t, w)| (t, w / denom)),
    ))
}

/// Linear interpolation `(1-λ)·p_model + λ·p_retrieval` over the union
/// of supports. `λ=0` and `λ=1` return the respective input exactly,
/// support included.
pub fn interpolate(p_model: &ProbDist, p_retrieval: &ProbDist, lambda: f64) -> Result<ProbDist> {
    if !(0.0..=1.0).contains(&lambda) || lambda.is_nan() {
        return Err(Error::LambdaOutOfRange(lambda));
    }
    if lambda == 0.0 {
        return Ok(p_model.clone());
    }
    if lambda == 1.0 {
        return Ok(p_retrieval.clone());
    }
    let mut out = BTreeMap::new();
    for (tok, p) in p_model.iter() {
        let q = (1.0 - lambda) * p + lambda * p_retrieval.prob(tok);
        if q != 0.0 {
            out.insert(tok, q);
        }
    }
    for (tok, p) in p_retrieval.iter() {
        out.entry(tok).or_insert(lambda * p);
    }
    Ok(ProbDist { probs: out })
}

/// Squared Euclidean distance.
pub fn sq_l2(a: &[f32], b: &[f32]) -> Result<f32> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(sq_l2_raw(a, b))
}

/// Same as [`sq_l2`] without the dimension check, for validated hot loops.
#[inline]
pub fn sq_l2_raw(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0f32;
    for (&x, &y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}
