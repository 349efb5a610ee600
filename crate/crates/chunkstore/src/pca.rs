//! PCA fitting and projection for key dimension reduction.
//!
//! Keys are reduced with a fitted transform: center on the sample mean,
//! then project onto the top principal directions of the sample
//! covariance. The eigendecomposition is a cyclic Jacobi sweep over the
//! covariance matrix, which is small (state dimension squared) even when
//! the sample is large.

use crate::{Error, Result};

/// A fitted mean-centering projection. Rows of `projection` are
/// orthonormal principal directions in descending eigenvalue order.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaTransform {
    d_in: usize,
    d_out: usize,
    mean: Vec<f32>,
    /// Row-major `d_out x d_in`.
    projection: Vec<f32>,
}

impl PcaTransform {
    pub fn new(d_in: usize, d_out: usize, mean: Vec<f32>, projection: Vec<f32>) -> Self {
        assert_eq!(mean.len(), d_in);
        assert_eq!(projection.len(), d_out * d_in);
        Self {
            d_in,
            d_out,
            mean,
            projection,
        }
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn mean(&self) -> &[f32] {
        &self.mean
    }

    pub fn projection_row(&self, r: usize) -> &[f32] {
        &self.projection[r * self.d_in..(r + 1) * self.d_in]
    }

    pub fn projection(&self) -> &[f32] {
        &self.projection
    }

    /// Centers and projects a full-dimension state.
    pub fn apply(&self, x: &[f32]) -> Result<Vec<f32>> {
        if x.len() != self.d_in {
            return Err(Error::DimensionMismatch {
                expected: self.d_in,
                got: x.len(),
            });
        }
        let mut out = vec![0.0f32; self.d_out];
        for (r, o) in out.iter_mut().enumerate() {
            let row = self.projection_row(r);
            let mut acc = 0.0f32;
            for i in 0..self.d_in {
                acc += row[i] * (x[i] - self.mean[i]);
            }
            *o = acc;
        }
        Ok(out)
    }
}

/// A fit result: the transform plus the eigenvalue of each kept
/// component (sample variance explained along that direction).
#[derive(Clone, Debug)]
pub struct PcaFit {
    pub transform: PcaTransform,
    pub explained_variance: Vec<f64>,
}

/// Fits PCA on the given samples.
///
/// Directions are the top `d_out` eigenvectors of the sample covariance,
/// in descending eigenvalue order; equal eigenvalues keep their original
/// component order. Each eigenvector's sign is fixed so its
/// largest-magnitude entry is positive.
pub fn fit_pca(samples: &[Vec<f32>], d_out: usize) -> Result<PcaFit> {
    if samples.len() < d_out {
        return Err(Error::TooFewSamples {
            needed: d_out,
            got: samples.len(),
        });
    }
    let d_in = samples.first().map(Vec::len).unwrap_or(0);
    if d_out > d_in {
        return Err(Error::ReducedDimExceedsFull {
            reduced: d_out,
            full: d_in,
        });
    }
    for s in samples {
        if s.len() != d_in {
            return Err(Error::DimensionMismatch {
                expected: d_in,
                got: s.len(),
            });
        }
    }

    let n = samples.len();
    let mut mean = vec![0.0f64; d_in];
    for s in samples {
        for (m, &v) in mean.iter_mut().zip(s) {
            *m += f64::from(v);
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    let denom = (n.max(2) - 1) as f64;
    let mut cov = vec![0.0f64; d_in * d_in];
    let mut centered = vec![0.0f64; d_in];
    for s in samples {
        for i in 0..d_in {
            centered[i] = f64::from(s[i]) - mean[i];
        }
        for i in 0..d_in {
            let ci = centered[i];
            for j in i..d_in {
                cov[i * d_in + j] += ci * centered[j];
            }
        }
    }
    for i in 0..d_in {
        for j in i..d_in {
            let v = cov[i * d_in + j] / denom;
            cov[i * d_in + j] = v;
            cov[j * d_in + i] = v;
        }
    }

    let (eigvals, eigvecs) = jacobi_eigen_symmetric(cov, d_in);

    // Descending eigenvalue order, original component index on ties.
    let mut order: Vec<usize> = (0..d_in).collect();
    order.sort_by(|&a, &b| {
        eigvals[b]
            .partial_cmp(&eigvals[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut projection = vec![0.0f32; d_out * d_in];
    let mut explained = Vec::with_capacity(d_out);
    for (r, &col) in order.iter().take(d_out).enumerate() {
        let mut vec_f64: Vec<f64> = (0..d_in).map(|i| eigvecs[i * d_in + col]).collect();
        let mut max_idx = 0;
        for (i, v) in vec_f64.iter().enumerate() {
            if v.abs() > vec_f64[max_idx].abs() {
                max_idx = i;
            }
        }
        if vec_f64[max_idx] < 0.0 {
            for v in &mut vec_f64 {
                *v = -*v;
            }
        }
        for i in 0..d_in {
            projection[r * d_in + i] = vec_f64[i] as f32;
        }
        explained.push(eigvals[col]);
    }

    let mean_f32 = mean.iter().map(|&m| m as f32).collect();
    Ok(PcaFit {
        transform: PcaTransform::new(d_in, d_out, mean_f32, projection),
        explained_variance: explained,
    })
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvector `k` stored in
/// column `k` of the returned row-major `n x n` matrix.
fn jacobi_eigen_symmetric(mut a: Vec<f64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0f64; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    if n < 2 {
        let vals = (0..n).map(|i| a[i * n + i]).collect();
        return (vals, v);
    }

    let initial_off: f64 = {
        let mut s = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                s += a[p * n + q] * a[p * n + q];
            }
        }
        s.sqrt()
    };
    let tol = (initial_off * 1e-14).max(1e-300);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..(n - 1) {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for i in 0..n {
                    let aip = a[i * n + p];
                    let aiq = a[i * n + q];
                    a[i * n + p] = c * aip - s * aiq;
                    a[i * n + q] = s * aip + c * aiq;
                }
                for i in 0..n {
                    let api = a[p * n + i];
                    let aqi = a[q * n + i];
                    a[p * n + i] = c * api - s * aqi;
                    a[q * n + i] = s * api + c * aqi;
                }
                for i in 0..n {
                    let vip = v[i * n + p];
                    let viq = v[i * n + q];
                    v[i * n + p] = c * vip - s * viq;
                    v[i * n + q] = s * vip + c * viq;
                }
            }
        }
    }

    let vals = (0..n).map(|i| a[i * n + i]).collect();
    (vals, v)
}
