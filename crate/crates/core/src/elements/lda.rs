//! Linear discriminants against shared background statistics.
//!
//! For positives with mean `mu_pos` and background `(mu_0, sigma)` the
//! weights solve `(sigma + lambda I) w = mu_pos - mu_0` with
//! `lambda = reg_scale * trace(sigma) / d + 1e-8`, and the bias places the
//! decision boundary at the midpoint of the two means.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;

pub const LAMBDA_ABS: f64 = 1e-8;

/// Rows accumulated per chunk when scattering; fixed so partial sums are
/// combined in the same order for any worker count.
const CHUNK: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdaClassifier {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LdaClassifier {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// `w·f + bias`; dimensions are not checked.
    #[inline]
    pub fn score_unchecked<T: Copy + Into<f64>>(&self, feature: &[T]) -> f64 {
        self.weights
            .iter()
            .zip(feature)
            .fold(0.0, |acc, (w, &f)| acc + w * f.into())
            + self.bias
    }

    pub fn is_degenerate(&self) -> bool {
        self.weights.iter().all(|w| w.abs() <= 1e-12)
    }
}

/// `w·f + bias`.
pub fn score<T: Copy + Into<f64>>(classifier: &LdaClassifier, feature: &[T]) -> Result<f64> {
    if feature.len() != classifier.dim() {
        return Err(Error::DimensionMismatch {
            expected: classifier.dim(),
            found: feature.len(),
        });
    }
    Ok(classifier.score_unchecked(feature))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackgroundStats {
    pub mean: Vec<f64>,
    /// Row-major `d x d`, exactly symmetric.
    pub covariance: Vec<f64>,
    pub count: usize,
}

impl BackgroundStats {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.covariance[i * self.dim() + j]
    }
}

pub fn fit_background<R, T>(rows: &[R]) -> Result<BackgroundStats>
where
    R: AsRef<[T]> + Sync,
    T: Copy + Into<f64> + Sync,
{
    fit_background_with(rows, &Exec::sequential())
}

/// Sample mean and unbiased sample covariance.
pub fn fit_background_with<R, T>(rows: &[R], exec: &Exec) -> Result<BackgroundStats>
where
    R: AsRef<[T]> + Sync,
    T: Copy + Into<f64> + Sync,
{
    if rows.len() < 2 {
        return Err(Error::Empty("background needs at least two samples"));
    }
    let d = rows[0].as_ref().len();
    if let Some(bad) = rows.iter().find(|r| r.as_ref().len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: bad.as_ref().len(),
        });
    }
    let n = rows.len();
    let chunks: Vec<&[R]> = rows.chunks(CHUNK).collect();
    let sums = exec.map(&chunks, |chunk| {
        let mut s = vec![0.0f64; d];
        for r in chunk.iter() {
            for (acc, &v) in s.iter_mut().zip(r.as_ref()) {
                *acc += v.into();
            }
        }
        s
    });
    let mut mean = vec![0.0f64; d];
    for s in &sums {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let scatters = exec.map(&chunks, |chunk| {
        let mut upper = vec![0.0f64; d * (d + 1) / 2];
        let mut centered = vec![0.0f64; d];
        for r in chunk.iter() {
            for ((c, &v), m) in centered.iter_mut().zip(r.as_ref()).zip(&mean) {
                *c = v.into() - m;
            }
            let mut k = 0;
            for i in 0..d {
                let ci = centered[i];
                for &cj in &centered[i..] {
                    upper[k] += ci * cj;
                    k += 1;
                }
            }
        }
        upper
    });
    let mut upper = vec![0.0f64; d * (d + 1) / 2];
    for s in &scatters {
        for (u, v) in upper.iter_mut().zip(s) {
            *u += v;
        }
    }
    let mut covariance = vec![0.0f64; d * d];
    let mut k = 0;
    let denom = (n - 1) as f64;
    for i in 0..d {
        for j in i..d {
            let v = upper[k] / denom;
            covariance[i * d + j] = v;
            covariance[j * d + i] = v;
            k += 1;
        }
    }
    Ok(BackgroundStats {
        mean,
        covariance,
        count: n,
    })
}

/// Cholesky factor of the regularized background covariance, reused for
/// every classifier trained against the same background.
#[derive(Clone, Debug)]
pub struct LdaSolver {
    background: BackgroundStats,
    regularized: Vec<f64>,
    lower: Vec<f64>,
    lambda: f64,
}

impl LdaSolver {
    pub fn new(background: &BackgroundStats, reg_scale: f64) -> Result<Self> {
        Self::with_floor(background, reg_scale, LAMBDA_ABS)
    }

    /// As [`LdaSolver::new`] with an explicit absolute ridge term in place
    /// of `1e-8`; `with_floor(bg, 0.0, 0.0)` is the unregularized solve.
    pub fn with_floor(
        background: &BackgroundStats,
        reg_scale: f64,
        lambda_abs: f64,
    ) -> Result<Self> {
        let d = background.dim();
        if d == 0 {
            return Err(Error::Empty("zero-dimensional background"));
        }
        if !(reg_scale.is_finite()
            && reg_scale >= 0.0
            && lambda_abs.is_finite()
            && lambda_abs >= 0.0)
        {
            return Err(Error::Config(format!(
                "regularization ({reg_scale}, {lambda_abs}) invalid"
            )));
        }
        let trace: f64 = (0..d).map(|i| background.cov(i, i)).sum();
        let lambda = reg_scale * trace / d as f64 + lambda_abs;
        let mut regularized = background.covariance.clone();
        for i in 0..d {
            regularized[i * d + i] += lambda;
        }
        let lower = cholesky(&regularized, d)?;
        Ok(LdaSolver {
            background: background.clone(),
            regularized,
            lower,
            lambda,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.background.dim()
    }

    /// Classifier for positives whose mean is `positive_mean`.
    pub fn train_from_mean(&self, positive_mean: &[f64]) -> Result<LdaClassifier> {
        let d = self.dim();
        if positive_mean.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: positive_mean.len(),
            });
        }
        let mu0 = &self.background.mean;
        let rhs: Vec<f64> = positive_mean.iter().zip(mu0).map(|(p, m)| p - m).collect();
        let rhs_norm = norm(&rhs);
        let mut w = self.solve(&rhs);
        // refine until the residual is well under 1e-9 relative
        for _ in 0..3 {
            let r: Vec<f64> = rhs
                .iter()
                .enumerate()
                .map(|(i, b)| b - dot(&self.regularized[i * d..(i + 1) * d], &w))
                .collect();
            if norm(&r) <= 1e-12 * rhs_norm {
                break;
            }
            let dw = self.solve(&r);
            for (wi, di) in w.iter_mut().zip(&dw) {
                *wi += di;
            }
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular {
                row: 0,
                pivot: f64::NAN,
            });
        }
        let midpoint: Vec<f64> = positive_mean
            .iter()
            .zip(mu0)
            .map(|(p, m)| (p + m) / 2.0)
            .collect();
        let bias = -dot(&w, &midpoint);
        Ok(LdaClassifier { weights: w, bias })
    }

    pub fn train<R, T>(&self, positives: &[R]) -> Result<LdaClassifier>
    where
        R: AsRef<[T]>,
        T: Copy + Into<f64>,
    {
        self.train_from_mean(&mean_of(positives, self.dim())?)
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let l = &self.lower;
        let mut y = vec![0.0; d];
        for i in 0..d {
            let s = rhs[i] - dot(&l[i * d..i * d + i], &y[..i]);
            y[i] = s / l[i * d + i];
        }
        let mut x = vec![0.0; d];
        for i in (0..d).rev() {
            let mut s = y[i];
            for k in i + 1..d {
                s -= l[k * d + i] * x[k];
            }
            x[i] = s / l[i * d + i];
        }
        x
    }
}

/// Trains one classifier from scratch; prefer [`LdaSolver`] when many
/// classifiers share a background.
pub fn train_lda<R, T>(
    positives: &[R],
    background: &BackgroundStats,
    reg_scale: f64,
) -> Result<LdaClassifier>
where
    R: AsRef<[T]>,
    T: Copy + Into<f64>,
{
    LdaSolver::new(background, reg_scale)?.train(positives)
}

pub(crate) fn mean_of<R, T>(rows: &[R], d: usize) -> Result<Vec<f64>>
where
    R: AsRef<[T]>,
    T: Copy + Into<f64>,
{
    if rows.is_empty() {
        return Err(Error::Empty("positive set"));
    }
    let mut mean = vec![0.0f64; d];
    for r in rows {
        let r = r.as_ref();
        if r.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: r.len(),
            });
        }
        for (m, &v) in mean.iter_mut().zip(r) {
            *m += v.into();
        }
    }
    for m in &mut mean {
        *m /= rows.len() as f64;
    }
    Ok(mean)
}

fn cholesky(a: &[f64], d: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0f64; d * d];
    for j in 0..d {
        let s = a[j * d + j] - dot(&l[j * d..j * d + j], &l[j * d..j * d + j]);
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Singular { row: j, pivot: s });
        }
        let ljj = s.sqrt();
        l[j * d + j] = ljj;
        for i in j + 1..d {
            let s = a[i * d + j] - dot(&l[i * d..i * d + j], &l[j * d..j * d + j]);
            l[i * d + j] = s / ljj;
        }
    }
    Ok(l)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}
