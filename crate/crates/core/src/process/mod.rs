//! Process specifications and sampled paths.
//!
//! Both processes are tau-self-similar zero-mean Gaussian processes started
//! at the origin: fractional Brownian motion with Hurst index in (0,1) and
//! the Riemann-Liouville moving-average process with index beta > 0.

mod covariance;
mod sampler;

pub use covariance::{
    build_covariance, c_h_constant, fbm_covariance, rl_covariance, CovarianceMatrix,
};
pub use sampler::{
    rl_kernel_weights, rl_scheme_variance, sample_cholesky, sample_circulant_fbm, sample_path,
    sample_rl_kernel, PreparedSampler, CHOLESKY_STEP_CAP,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcessKind {
    Fbm,
    Rl,
}

impl ProcessKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProcessKind::Fbm => "fbm",
            ProcessKind::Rl => "rl",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    /// Exact sampling from the Cholesky (or clipped-eigen) factor of the
    /// analytic covariance. Works for both processes, cubic cost.
    Cholesky,
    /// Circulant embedding of fractional Gaussian noise. fBm only,
    /// n_steps must be a power of two.
    Circulant,
    /// Integrated-kernel convolution of Brownian increments. RL only.
    KernelConv,
}

impl SamplerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SamplerKind::Cholesky => "cholesky",
            SamplerKind::Circulant => "circulant",
            SamplerKind::KernelConv => "kernel_conv",
        }
    }
}

/// Which process to sample, at what index, horizon and resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessSpec {
    pub kind: ProcessKind,
    /// Self-similarity index: H for fBm (in (0,1)), beta for RL (> 0).
    pub tau: f64,
    /// Time horizon T > 0.
    pub horizon: f64,
    pub n_steps: usize,
    pub sampler: SamplerKind,
}

impl ProcessSpec {
    pub fn new(
        kind: ProcessKind,
        tau: f64,
        horizon: f64,
        n_steps: usize,
        sampler: SamplerKind,
    ) -> Result<Self> {
        let spec = ProcessSpec {
            kind,
            tau,
            horizon,
            n_steps,
            sampler,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ProcessKind::Fbm => {
                if !(self.tau > 0.0 && self.tau < 1.0) {
                    return Err(Error::domain(format!(
                        "fBm requires Hurst index in (0,1), got {}",
                        self.tau
                    )));
                }
            }
            ProcessKind::Rl => {
                if !(self.tau > 0.0 && self.tau.is_finite()) {
                    return Err(Error::domain(format!(
                        "Riemann-Liouville requires index beta > 0, got {}",
                        self.tau
                    )));
                }
            }
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::domain(format!(
                "horizon must be > 0, got {}",
                self.horizon
            )));
        }
        if self.n_steps == 0 {
            return Err(Error::invalid("n_steps must be positive"));
        }
        match self.sampler {
            SamplerKind::Circulant => {
                if self.kind != ProcessKind::Fbm {
                    return Err(Error::invalid("circulant sampler is only valid for fBm"));
                }
                if !self.n_steps.is_power_of_two() {
                    return Err(Error::invalid(format!(
                        "circulant sampler needs a power-of-two step count, got {}",
                        self.n_steps
                    )));
                }
            }
            SamplerKind::KernelConv => {
                if self.kind != ProcessKind::Rl {
                    return Err(Error::invalid(
                        "kernel convolution sampler is only valid for the Riemann-Liouville process",
                    ));
                }
            }
            SamplerKind::Cholesky => {}
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    /// Uniform grid times t_i = i * T / n_steps, i = 0..=n_steps.
    pub fn times(&self) -> Vec<f64> {
        let n = self.n_steps as f64;
        (0..=self.n_steps)
            .map(|i| i as f64 * self.horizon / n)
            .collect()
    }
}

/// A sampled trajectory on a uniform grid.
///
/// Freshly sampled paths start at the origin (`values[0] == 0`); derived
/// grids produced by [`PathGrid::shift`] or [`PathGrid::translate`] need
/// not.
#[derive(Debug, Clone)]
pub struct PathGrid {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub spec: ProcessSpec,
    pub seed: u64,
    /// Set when the circulant sampler had to fall back to Cholesky.
    pub circulant_fallback: bool,
}

impl PathGrid {
    pub(crate) fn from_values(spec: ProcessSpec, seed: u64, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), spec.n_steps + 1);
        PathGrid {
            times: spec.times(),
            values,
            spec,
            seed,
            circulant_fallback: false,
        }
    }

    pub fn n_steps(&self) -> usize {
        self.spec.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.spec.dt()
    }

    pub fn horizon(&self) -> f64 {
        self.spec.horizon
    }

    /// Grid index of a time, within a relative tolerance of one millionth
    /// of a step.
    pub fn index_of_time(&self, t: f64) -> Result<usize> {
        let dt = self.dt();
        let idx = (t / dt).round();
        if idx < 0.0 || idx > self.n_steps() as f64 {
            return Err(Error::invalid(format!(
                "time {t} outside the grid [0, {}]",
                self.horizon()
            )));
        }
        let idx = idx as usize;
        if (self.times[idx] - t).abs() > dt * 1e-6 {
            return Err(Error::invalid(format!("time {t} is not a grid time")));
        }
        Ok(idx)
    }

    /// Time-shifted path theta_s: restricts to [s, T] and re-bases the time
    /// axis to start at 0. Values are untouched (the shift operator moves
    /// time, not space), so the result generally does not start at 0.
    pub fn shift(&self, s: f64) -> Result<PathGrid> {
        let k = self.index_of_time(s)?;
        let n_rem = self.n_steps() - k;
        if n_rem == 0 {
            return Err(Error::invalid(
                "shift by the full horizon leaves an empty path",
            ));
        }
        let dt = self.dt();
        let mut spec = self.spec;
        spec.n_steps = n_rem;
        spec.horizon = n_rem as f64 * dt;
        Ok(PathGrid {
            times: spec.times(),
            values: self.values[k..].to_vec(),
            spec,
            seed: self.seed,
            circulant_fallback: self.circulant_fallback,
        })
    }

    /// Spatially translated path: every value moved by z.
    pub fn translate(&self, z: f64) -> PathGrid {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v += z;
        }
        out
    }

    pub fn value_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }
}
