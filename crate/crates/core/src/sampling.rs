//! Seeded random matrices for property checks.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::spaces::MetricTensor;

/// Deterministic generator of test matrices; one instance per test or trial.
#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn gaussian_vector(&mut self, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| self.normal())
    }

    pub fn gaussian_matrix(&mut self, n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |_, _| self.normal())
    }

    /// Haar-distributed orthogonal matrix.
    pub fn orthogonal(&mut self, n: usize) -> DMatrix<f64> {
        let qr = self.gaussian_matrix(n).qr();
        let mut q = qr.q();
        let r = qr.r();
        for j in 0..n {
            if r[(j, j)] < 0.0 {
                q.column_mut(j).neg_mut();
            }
        }
        q
    }

    /// Invertible matrix with condition number at most `max_cond`.
    pub fn gl_matrix(&mut self, n: usize, max_cond: f64) -> DMatrix<f64> {
        let half = 0.5 * max_cond.max(1.0).ln();
        let s = DVector::from_fn(n, |_, _| self.uniform(-half, half).exp());
        let q1 = self.orthogonal(n);
        let q2 = self.orthogonal(n);
        q1 * DMatrix::from_diagonal(&s) * q2
    }

    /// Symmetric positive-definite matrix with spectrum in `[0.5, 2]`.
    pub fn spd_matrix(&mut self, n: usize) -> DMatrix<f64> {
        let q = self.orthogonal(n);
        let lambda = DVector::from_fn(n, |_, _| self.uniform(0.5, 2.0));
        let m = &q * DMatrix::from_diagonal(&lambda) * q.transpose();
        (&m + m.transpose()) * 0.5
    }

    pub fn spd_metric(&mut self, n: usize) -> MetricTensor {
        MetricTensor::new(self.spd_matrix(n)).expect("sampled metric is SPD")
    }

    /// Element of the orthogonal group of `metric`: `A^T metric A = metric`.
    pub fn orthogonal_for(&mut self, metric: &MetricTensor) -> DMatrix<f64> {
        let l = metric
            .components()
            .clone()
            .cholesky()
            .expect("definite metric")
            .l();
        let l_inv_t = l.clone().try_inverse().expect("cholesky factor").transpose();
        let q = self.orthogonal(metric.dim());
        l_inv_t * q * l.transpose()
    }

    /// Map `phi: U -> V` with `phi^T g phi = eta`.
    pub fn isometry(&mut self, eta: &MetricTensor, g: &MetricTensor) -> DMatrix<f64> {
        let l_eta = eta.components().clone().cholesky().expect("definite").l();
        let l_g = g.components().clone().cholesky().expect("definite").l();
        let l_g_inv_t = l_g.try_inverse().expect("cholesky factor").transpose();
        let q = self.orthogonal(eta.dim());
        l_g_inv_t * q * l_eta.transpose()
    }
}
