//! Seeded random streams.
//!
//! Every sampler in the crate draws from an [`RngStream`]. Parallel trial
//! loops never share a stream: they draw one child seed per trial from the
//! parent, in order, and then run the trials on independent children. The
//! result is identical regardless of how rayon schedules the work.

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Splits off `count` independent child streams.
    pub fn children(&mut self, count: usize) -> Vec<RngStream> {
        (0..count).map(|_| RngStream::new(self.next_u64())).collect()
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn index(&mut self, bound: usize) -> usize {
        self.inner.random_range(0..bound)
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Standard complex Gaussian, `E|z|^2 = 1`.
    pub fn complex_normal(&mut self) -> Complex64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Complex64::new(s * self.normal(), s * self.normal())
    }

    /// Uniform point on the unit sphere of `R^dim`.
    pub fn unit_vector(&mut self, dim: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..dim).map(|_| self.normal()).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    }
}
