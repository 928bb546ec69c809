use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::kernel::{matern52, matern52_dlog_length, KernelParams};
use super::SurrogateError;

/// Distance between two search-space locations.
pub trait Metric: Send + Sync {
    fn distance(&self, a: &[f64], b: &[f64]) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Euclidean;

impl Metric for Euclidean {
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }
}

/// Observed (location, value) pairs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub locations: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

/// Locations closer than this (max-norm) are treated as the same point.
pub const DUPLICATE_TOL: f64 = 1e-12;

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Adds an observation. A duplicate location keeps the larger value.
    /// Returns `false` when the location was already present.
    pub fn push(&mut self, location: Vec<f64>, value: f64) -> bool {
        assert!(value.is_finite(), "observations must be finite");
        let dup = self.locations.iter().position(|l| {
            l.iter().zip(&location).all(|(a, b)| (a - b).abs() <= DUPLICATE_TOL)
        });
        match dup {
            Some(i) => {
                self.values[i] = self.values[i].max(value);
                false
            }
            None => {
                self.locations.push(location);
                self.values.push(value);
                true
            }
        }
    }

    /// Index and value of the largest observation (first on ties).
    pub fn best(&self) -> Option<(usize, f64)> {
        self.values
            .iter()
            .copied()
            .enumerate()
            .fold(None, |acc, (i, v)| match acc {
                Some((_, bv)) if bv >= v => acc,
                _ => Some((i, v)),
            })
    }

    pub fn mean(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.values.iter().sum::<f64>() / self.len() as f64
        }
    }

    pub fn std(&self) -> f64 {
        let m = self.mean();
        (self.values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / self.len().max(1) as f64).sqrt()
    }
}

/// GP regression snapshot with constant (dataset-mean) prior mean.
#[derive(Clone)]
pub struct GpPosterior<M: Metric> {
    dataset: Dataset,
    params: KernelParams,
    metric: M,
    mean: f64,
    distances: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
}

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-4;

impl<M: Metric> GpPosterior<M> {
    pub fn fit(dataset: Dataset, params: KernelParams, metric: M) -> Result<Self, SurrogateError> {
        if dataset.is_empty() {
            return Err(SurrogateError::EmptyDataset);
        }
        let n = dataset.len();
        let distances = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                0.0
            } else {
                metric.distance(&dataset.locations[i], &dataset.locations[j])
            }
        });
        Self::with_distances(dataset, params, metric, distances)
    }

    fn with_distances(
        dataset: Dataset,
        params: KernelParams,
        metric: M,
        distances: DMatrix<f64>,
    ) -> Result<Self, SurrogateError> {
        if !params.is_valid() {
            return Err(SurrogateError::InvalidParams(params));
        }
        let n = dataset.len();
        let base = DMatrix::from_fn(n, n, |i, j| matern52(distances[(i, j)], &params));
        let s2 = params.sigma * params.sigma;
        let mut jitter = JITTER_START * s2;
        let chol = loop {
            let mut k = base.clone();
            for i in 0..n {
                k[(i, i)] += params.noise * params.noise + jitter;
            }
            if let Some(c) = Cholesky::new(k) {
                break c;
            }
            jitter *= 10.0;
            if jitter > JITTER_MAX * s2 {
                return Err(SurrogateError::NonPdKernel { size: n });
            }
        };
        let mean = dataset.mean();
        let centered = DVector::from_iterator(n, dataset.values.iter().map(|y| y - mean));
        let alpha = chol.solve(&centered);
        Ok(Self { dataset, params, metric, mean, distances, chol, alpha, jitter })
    }

    /// Like [`GpPosterior::fit`], but multiplies the noise by 10 while the
    /// kernel matrix stays indefinite, up to `noise = sigma`.
    pub fn fit_escalating(dataset: Dataset, params: KernelParams, metric: M) -> Result<Self, SurrogateError>
    where
        M: Clone,
    {
        let mut gp = Self::fit(dataset.clone(), params, metric.clone());
        let mut p = params;
        while matches!(gp, Err(SurrogateError::NonPdKernel { .. })) && p.noise < p.sigma {
            p.noise = (p.noise * 10.0).min(p.sigma);
            gp = Self::fit(dataset.clone(), p, metric.clone());
        }
        gp
    }

    /// Same data and metric, new hyperparameters. Reuses the distance matrix.
    pub fn refit(&self, params: KernelParams) -> Result<Self, SurrogateError>
    where
        M: Clone,
    {
        Self::with_distances(self.dataset.clone(), params, self.metric.clone(), self.distances.clone())
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn params(&self) -> KernelParams {
        self.params
    }

    pub fn metric(&self) -> &M {
        &self.metric
    }

    pub fn prior_mean(&self) -> f64 {
        self.mean
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    fn cross_cov(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.dataset.len(),
            self.dataset.locations.iter().map(|l| matern52(self.metric.distance(x, l), &self.params)),
        )
    }

    /// Posterior mean and standard deviation of the latent function at `x`.
    pub fn posterior(&self, x: &[f64]) -> (f64, f64) {
        let k = self.cross_cov(x);
        let mu = self.mean + k.dot(&self.alpha);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&k)
            .expect("Cholesky factor has a positive diagonal");
        let var = self.params.sigma * self.params.sigma - v.norm_squared();
        (mu, var.max(0.0).sqrt())
    }

    /// log p(y | X, θ).
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.dataset.len() as f64;
        let centered = DVector::from_iterator(
            self.dataset.len(),
            self.dataset.values.iter().map(|y| y - self.mean),
        );
        let log_det: f64 = self.chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
        -0.5 * centered.dot(&self.alpha) - log_det - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
    }

    /// Gradient of the log marginal likelihood with respect to
    /// (log σ, log ρ, log noise).
    pub fn lml_gradient(&self) -> [f64; 3] {
        let n = self.dataset.len();
        let kinv = self.chol.inverse();
        let w = &self.alpha * self.alpha.transpose() - kinv;
        let p = &self.params;
        let mut g = [0.0; 3];
        for i in 0..n {
            for j in 0..n {
                let d = self.distances[(i, j)];
                let k = matern52(d, p);
                g[0] += w[(i, j)] * 2.0 * k;
                g[1] += w[(i, j)] * matern52_dlog_length(d, p);
            }
            g[2] += w[(i, i)] * 2.0 * p.noise * p.noise;
        }
        g.map(|v| 0.5 * v)
    }
}
