//! Path samplers.
//!
//! Each sampler is prepared once per spec (factorization, FFT plans, kernel
//! weights) and then draws any number of independent paths keyed by a
//! 64-bit seed. Prepared samplers are immutable and safe to share across
//! threads.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{PathGrid, ProcessKind, ProcessSpec, SamplerKind};
use crate::error::{Error, Result};
use crate::process::covariance::build_covariance;
use crate::rng::path_rng;

/// Hard cap on the step count for covariance factorization (cubic cost).
pub const CHOLESKY_STEP_CAP: usize = 4096;

/// Relative clipping tolerance for covariance eigenvalue repair.
const PSD_CLIP_REL_TOL: f64 = 1e-10;

/// Relative threshold on negative circulant eigenvalues before the sampler
/// falls back to Cholesky.
const CIRCULANT_NEG_REL_TOL: f64 = 1e-8;

enum Inner {
    /// values[1..] = factor * z with z iid standard normal.
    Factor { factor: DMatrix<f64> },
    Circulant {
        /// sqrt(lambda_k / N) for the length-N = 2 n embedding.
        scaled_sqrt_eig: Vec<f64>,
        fft_inv: Arc<dyn Fft<f64>>,
        /// Engaged when the embedding had eigenvalues below tolerance.
        fallback: Option<DMatrix<f64>>,
    },
    Kernel {
        /// Forward FFT of the zero-padded integrated-kernel weights.
        kernel_fft: Vec<Complex<f64>>,
        fft_fwd: Arc<dyn Fft<f64>>,
        fft_inv: Arc<dyn Fft<f64>>,
        fft_len: usize,
    },
}

/// A sampler with all seed-independent work done up front.
pub struct PreparedSampler {
    spec: ProcessSpec,
    inner: Inner,
}

impl PreparedSampler {
    /// Prepare the sampler named by `spec.sampler`.
    pub fn new(spec: &ProcessSpec) -> Result<Self> {
        spec.validate()?;
        match spec.sampler {
            SamplerKind::Cholesky => Self::cholesky(spec),
            SamplerKind::Circulant => Self::circulant(spec),
            SamplerKind::KernelConv => Self::kernel_conv(spec),
        }
    }

    /// Exact sampler from the factorized analytic covariance (any kind).
    pub fn cholesky(spec: &ProcessSpec) -> Result<Self> {
        spec.validate()?;
        if spec.n_steps > CHOLESKY_STEP_CAP {
            return Err(Error::invalid(format!(
                "Cholesky sampling is capped at {CHOLESKY_STEP_CAP} steps, got {}",
                spec.n_steps
            )));
        }
        let factor = covariance_factor(spec)?;
        Ok(PreparedSampler {
            spec: *spec,
            inner: Inner::Factor { factor },
        })
    }

    /// Circulant embedding of fractional Gaussian noise (fBm only).
    pub fn circulant(spec: &ProcessSpec) -> Result<Self> {
        spec.validate()?;
        if spec.kind != ProcessKind::Fbm {
            return Err(Error::invalid("circulant sampler is only valid for fBm"));
        }
        if !spec.n_steps.is_power_of_two() {
            return Err(Error::invalid(format!(
                "circulant sampler needs a power-of-two step count, got {}",
                spec.n_steps
            )));
        }
        let n = spec.n_steps;
        let big_n = 2 * n;
        // First circulant row from the exact fGn autocovariance.
        let gamma = fgn_autocovariance(spec.tau, spec.dt(), n);
        let mut row = vec![Complex::new(0.0, 0.0); big_n];
        for (k, &g) in gamma.iter().enumerate() {
            row[k] = Complex::new(g, 0.0);
        }
        for k in 1..n {
            row[big_n - k] = Complex::new(gamma[k], 0.0);
        }
        let mut planner = FftPlanner::new();
        let fft_fwd = planner.plan_fft_forward(big_n);
        fft_fwd.process(&mut row);

        let lambda_max = row.iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max);
        let lambda_min = row.iter().map(|c| c.re).fold(f64::INFINITY, f64::min);
        if lambda_min < -CIRCULANT_NEG_REL_TOL * lambda_max.abs() {
            // The embedding is provably nonnegative for fGn; this is a
            // floating-point guard. Fall back to the exact factor and flag
            // the paths it produces.
            let factor = covariance_factor(spec)?;
            return Ok(PreparedSampler {
                spec: *spec,
                inner: Inner::Circulant {
                    scaled_sqrt_eig: Vec::new(),
                    fft_inv: planner.plan_fft_inverse(big_n),
                    fallback: Some(factor),
                },
            });
        }
        let scaled_sqrt_eig = row
            .iter()
            .map(|c| (c.re.max(0.0) / big_n as f64).sqrt())
            .collect();
        Ok(PreparedSampler {
            spec: *spec,
            inner: Inner::Circulant {
                scaled_sqrt_eig,
                fft_inv: planner.plan_fft_inverse(big_n),
                fallback: None,
            },
        })
    }

    /// Integrated-kernel convolution scheme for the RL process.
    pub fn kernel_conv(spec: &ProcessSpec) -> Result<Self> {
        spec.validate()?;
        if spec.kind != ProcessKind::Rl {
            return Err(Error::invalid(
                "kernel convolution sampler is only valid for the Riemann-Liouville process",
            ));
        }
        let n = spec.n_steps;
        let weights = rl_kernel_weights(spec);
        let fft_len = (2 * n).next_power_of_two();
        let mut kernel_fft = vec![Complex::new(0.0, 0.0); fft_len];
        for (m, &w) in weights.iter().enumerate() {
            kernel_fft[m] = Complex::new(w, 0.0);
        }
        let mut planner = FftPlanner::new();
        let fft_fwd = planner.plan_fft_forward(fft_len);
        let fft_inv = planner.plan_fft_inverse(fft_len);
        fft_fwd.process(&mut kernel_fft);
        Ok(PreparedSampler {
            spec: *spec,
            inner: Inner::Kernel {
                kernel_fft,
                fft_fwd,
                fft_inv,
                fft_len,
            },
        })
    }

    pub fn spec(&self) -> &ProcessSpec {
        &self.spec
    }

    /// Draw one path. Pure function of the seed.
    pub fn sample(&self, seed: u64) -> PathGrid {
        let n = self.spec.n_steps;
        let mut rng = path_rng(seed);
        match &self.inner {
            Inner::Factor { factor } => {
                let z =
                    DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
                let x = factor * z;
                let mut values = Vec::with_capacity(n + 1);
                values.push(0.0);
                values.extend(x.iter());
                PathGrid::from_values(self.spec, seed, values)
            }
            Inner::Circulant {
                scaled_sqrt_eig,
                fft_inv,
                fallback,
            } => {
                if let Some(factor) = fallback {
                    let z = DVector::from_iterator(
                        n,
                        (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)),
                    );
                    let x = factor * z;
                    let mut values = Vec::with_capacity(n + 1);
                    values.push(0.0);
                    values.extend(x.iter());
                    let mut path = PathGrid::from_values(self.spec, seed, values);
                    path.circulant_fallback = true;
                    return path;
                }
                let big_n = 2 * n;
                let mut buf: Vec<Complex<f64>> = Vec::with_capacity(big_n);
                for &a in scaled_sqrt_eig.iter() {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    buf.push(Complex::new(a * re, a * im));
                }
                fft_inv.process(&mut buf);
                // Re(Y) has exactly the fGn covariance; cumulative sums give fBm.
                let mut values = Vec::with_capacity(n + 1);
                values.push(0.0);
                let mut acc = 0.0;
                for c in buf.iter().take(n) {
                    acc += c.re;
                    values.push(acc);
                }
                PathGrid::from_values(self.spec, seed, values)
            }
            Inner::Kernel {
                kernel_fft,
                fft_fwd,
                fft_inv,
                fft_len,
            } => {
                let sqrt_dt = self.spec.dt().sqrt();
                let mut buf = vec![Complex::new(0.0, 0.0); *fft_len];
                for item in buf.iter_mut().take(n) {
                    let z: f64 = rng.sample(StandardNormal);
                    *item = Complex::new(sqrt_dt * z, 0.0);
                }
                fft_fwd.process(&mut buf);
                for (b, k) in buf.iter_mut().zip(kernel_fft.iter()) {
                    *b *= *k;
                }
                fft_inv.process(&mut buf);
                let scale = 1.0 / *fft_len as f64;
                let mut values = Vec::with_capacity(n + 1);
                values.push(0.0);
                for c in buf.iter().take(n) {
                    values.push(c.re * scale);
                }
                PathGrid::from_values(self.spec, seed, values)
            }
        }
    }
}

/// Exact fGn autocovariance gamma(k) = dt^2H (|k+1|^2H - 2|k|^2H + |k-1|^2H)/2.
fn fgn_autocovariance(h: f64, dt: f64, n: usize) -> Vec<f64> {
    let h2 = 2.0 * h;
    let scale = dt.powf(h2);
    (0..=n)
        .map(|k| {
            if k == 0 {
                scale
            } else {
                let k = k as f64;
                0.5 * scale * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).powf(h2))
            }
        })
        .collect()
}

/// Factor F with F F^T equal to the covariance on times > 0.
///
/// Plain Cholesky first; if round-off makes the matrix indefinite, repair
/// by clipping eigenvalues in [-1e-10 * lambda_max, 0) to zero and use the
/// eigenvector factor. Eigenvalues below the clip window are an error.
fn covariance_factor(spec: &ProcessSpec) -> Result<DMatrix<f64>> {
    let cov = build_covariance(spec)?;
    let n = spec.n_steps;
    let sub = cov.entries.view((1, 1), (n, n)).into_owned();
    if let Some(chol) = sub.clone().cholesky() {
        return Ok(chol.unpack());
    }
    let eig = sub.symmetric_eigen();
    let lambda_max = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let clip = -PSD_CLIP_REL_TOL * lambda_max;
    let mut scaled = eig.eigenvectors.clone();
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda < clip {
            return Err(Error::numerical(format!(
                "covariance eigenvalue {lambda} below the clip tolerance {clip}"
            )));
        }
        let s = lambda.max(0.0).sqrt();
        for i in 0..n {
            scaled[(i, j)] *= s;
        }
    }
    Ok(scaled)
}

/// Integrated-kernel weights of the RL scheme, cell-averaged:
/// w_m = (1/dt) int over one cell of (t - u)^(beta - 1/2) du
///     = dt^(q-1) (m^q - (m-1)^q) / q, with q = beta + 1/2 and m = i - j.
///
/// The scheme is X_i = sum_{j < i} w_{i-j} dW_j with dW_j ~ N(0, dt); the
/// integrated weight stays finite across the u -> t kernel singularity for
/// beta < 1/2, unlike midpoint evaluation. At beta = 1/2 every weight is 1
/// and the scheme is exactly a Brownian random walk.
pub fn rl_kernel_weights(spec: &ProcessSpec) -> Vec<f64> {
    let q = spec.tau + 0.5;
    let dt = spec.dt();
    let scale = dt.powf(q - 1.0) / q;
    (1..=spec.n_steps)
        .map(|m| {
            let m = m as f64;
            scale * (m.powf(q) - (m - 1.0).powf(q))
        })
        .collect()
}

/// Exact variance of the kernel-convolution scheme at grid index i.
pub fn rl_scheme_variance(spec: &ProcessSpec, index: usize) -> f64 {
    let dt = spec.dt();
    rl_kernel_weights(spec)
        .iter()
        .take(index)
        .map(|w| w * w * dt)
        .sum()
}

/// One-shot exact sampler from the factorized covariance.
pub fn sample_cholesky(spec: &ProcessSpec, seed: u64) -> Result<PathGrid> {
    Ok(PreparedSampler::cholesky(spec)?.sample(seed))
}

/// One-shot circulant-embedding fBm sampler.
pub fn sample_circulant_fbm(spec: &ProcessSpec, seed: u64) -> Result<PathGrid> {
    Ok(PreparedSampler::circulant(spec)?.sample(seed))
}

/// One-shot integrated-kernel RL sampler.
pub fn sample_rl_kernel(spec: &ProcessSpec, seed: u64) -> Result<PathGrid> {
    Ok(PreparedSampler::kernel_conv(spec)?.sample(seed))
}

/// Sample with the sampler named in the spec.
pub fn sample_path(spec: &ProcessSpec, seed: u64) -> Result<PathGrid> {
    Ok(PreparedSampler::new(spec)?.sample(seed))
}
