//! Additive functionals of a path: time quadratures of f(X(s)) for a small
//! library of test functions with known integrals and moments, residual
//! series against the local-time term, and the quantile rate regression
//! used to probe decay exponents.

use rand::Rng;

use crate::error::{Error, Result};
use crate::localtime::{local_time_curve, weighted_window_sum, LocalTimeField};
use crate::process::PathGrid;
use crate::quadrature::adaptive_simpson;
use crate::rng::path_rng;
use crate::stats::{linear_fit, quantile_sorted};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFunctionId {
    GaussianBump,
    CompactBump,
    IndicatorInterval,
    SignedDifference,
}

impl TestFunctionId {
    pub fn as_str(&self) -> &'static str {
        match self {
            TestFunctionId::GaussianBump => "gaussian_bump",
            TestFunctionId::CompactBump => "compact_bump",
            TestFunctionId::IndicatorInterval => "indicator_interval",
            TestFunctionId::SignedDifference => "signed_difference",
        }
    }
}

/// An integrable test function with analytically known mass.
///
/// * `GaussianBump(a, c, w)`: a exp(-(x-c)^2 / (2 w^2)), mass a w sqrt(2 pi).
/// * `CompactBump(a, c, w)`: triangular bump a (1 - |x-c|/w)+, mass a w.
/// * `IndicatorInterval(lo, hi)`: 1 on [lo, hi], mass hi - lo.
/// * `SignedDifference(a, d, w)`: Gaussian bump at +d minus the same bump
///   at -d; mass 0 (negative control only).
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    pub id: TestFunctionId,
    pub params: Vec<f64>,
}

impl TestFunction {
    pub fn gaussian_bump(amplitude: f64, center: f64, width: f64) -> Result<Self> {
        if width <= 0.0 || amplitude == 0.0 {
            return Err(Error::domain(
                "gaussian bump needs width > 0 and amplitude != 0",
            ));
        }
        Ok(TestFunction {
            id: TestFunctionId::GaussianBump,
            params: vec![amplitude, center, width],
        })
    }

    pub fn compact_bump(amplitude: f64, center: f64, width: f64) -> Result<Self> {
        if width <= 0.0 || amplitude == 0.0 {
            return Err(Error::domain(
                "compact bump needs width > 0 and amplitude != 0",
            ));
        }
        Ok(TestFunction {
            id: TestFunctionId::CompactBump,
            params: vec![amplitude, center, width],
        })
    }

    pub fn indicator_interval(lo: f64, hi: f64) -> Result<Self> {
        if hi <= lo {
            return Err(Error::domain("indicator interval needs lo < hi"));
        }
        Ok(TestFunction {
            id: TestFunctionId::IndicatorInterval,
            params: vec![lo, hi],
        })
    }

    pub fn signed_difference(amplitude: f64, offset: f64, width: f64) -> Result<Self> {
        if width <= 0.0 || amplitude == 0.0 || offset <= 0.0 {
            return Err(Error::domain(
                "signed difference needs width > 0, offset > 0 and amplitude != 0",
            ));
        }
        Ok(TestFunction {
            id: TestFunctionId::SignedDifference,
            params: vec![amplitude, offset, width],
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.id {
            TestFunctionId::GaussianBump => {
                let (a, c, w) = (self.params[0], self.params[1], self.params[2]);
                let z = (x - c) / w;
                a * (-0.5 * z * z).exp()
            }
            TestFunctionId::CompactBump => {
                let (a, c, w) = (self.params[0], self.params[1], self.params[2]);
                a * (1.0 - ((x - c) / w).abs()).max(0.0)
            }
            TestFunctionId::IndicatorInterval => {
                let (lo, hi) = (self.params[0], self.params[1]);
                if x >= lo && x <= hi {
                    1.0
                } else {
                    0.0
                }
            }
            TestFunctionId::SignedDifference => {
                let (a, d, w) = (self.params[0], self.params[1], self.params[2]);
                let zp = (x - d) / w;
                let zm = (x + d) / w;
                a * ((-0.5 * zp * zp).exp() - (-0.5 * zm * zm).exp())
            }
        }
    }

    /// Analytic integral over the real line.
    pub fn f_bar(&self) -> f64 {
        match self.id {
            TestFunctionId::GaussianBump => {
                self.params[0] * self.params[2] * (2.0 * std::f64::consts::PI).sqrt()
            }
            TestFunctionId::CompactBump => self.params[0] * self.params[2],
            TestFunctionId::IndicatorInterval => self.params[1] - self.params[0],
            TestFunctionId::SignedDifference => 0.0,
        }
    }

    /// k-th absolute moment of |f|: int |x|^k |f(x)| dx.
    ///
    /// Closed form for the indicator, quadrature over the effective
    /// support otherwise.
    pub fn k_moment(&self, k: f64) -> Result<f64> {
        if k < 0.0 {
            return Err(Error::domain("moment order must be nonnegative"));
        }
        match self.id {
            TestFunctionId::IndicatorInterval => {
                let (lo, hi) = (self.params[0], self.params[1]);
                Ok(abs_power_integral(lo, hi, k))
            }
            _ => {
                let (lo, hi) = self.support();
                let f = |x: f64| x.abs().powf(k) * self.eval(x).abs();
                Ok(adaptive_simpson(&f, lo, hi, 1e-10, 50))
            }
        }
    }

    /// Interval outside of which the function is zero or negligible.
    pub fn support(&self) -> (f64, f64) {
        match self.id {
            TestFunctionId::GaussianBump => {
                let (c, w) = (self.params[1], self.params[2]);
                (c - 12.0 * w, c + 12.0 * w)
            }
            TestFunctionId::CompactBump => {
                let (c, w) = (self.params[1], self.params[2]);
                (c - w, c + w)
            }
            TestFunctionId::IndicatorInterval => (self.params[0], self.params[1]),
            TestFunctionId::SignedDifference => {
                let (d, w) = (self.params[1], self.params[2]);
                (-d - 12.0 * w, d + 12.0 * w)
            }
        }
    }
}

/// int_lo^hi |x|^k dx.
fn abs_power_integral(lo: f64, hi: f64, k: f64) -> f64 {
    let p = k + 1.0;
    let antideriv = |x: f64| x.abs().powf(p) / p * x.signum();
    antideriv(hi) - antideriv(lo)
}

/// Additive functional int_0^t f(X(s)) ds by composite trapezoid on the
/// path grid (no subgrid interpolation of the rough path).
pub fn functional(path: &PathGrid, f: &TestFunction, t: f64) -> Result<f64> {
    weighted_window_sum(path, 0.0, t, &mut |v| f.eval(v))
}

/// Functional evaluated along a grid of times in one pass. Matches
/// [`functional`] at every snapshot.
pub fn functional_curve(path: &PathGrid, f: &TestFunction, t_grid: &[f64]) -> Result<Vec<f64>> {
    let indices: Vec<usize> = t_grid
        .iter()
        .map(|&t| path.index_of_time(t))
        .collect::<Result<_>>()?;
    if indices.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("t_grid must be strictly increasing"));
    }
    let dt = path.dt();
    let head = f.eval(path.values[0]);
    let mut out = Vec::with_capacity(t_grid.len());
    let mut acc = 0.0;
    let mut i = 0usize;
    for &k in &indices {
        while i <= k {
            acc += f.eval(path.values[i]) * dt;
            i += 1;
        }
        let tail = f.eval(path.values[k]);
        out.push(acc - 0.5 * dt * head - 0.5 * dt * tail);
    }
    Ok(out)
}

/// Residual of the strong approximation:
/// J(t) = int_0^t f(X(s)) ds - f_bar L(0, t).
#[derive(Debug, Clone)]
pub struct ResidualSeries {
    pub t_grid: Vec<f64>,
    pub j: Vec<f64>,
    pub tau: f64,
    pub f: TestFunction,
}

pub fn residual_series(
    path: &PathGrid,
    f: &TestFunction,
    t_grid: &[f64],
    lt_bandwidth: f64,
) -> Result<ResidualSeries> {
    let f_bar = f.f_bar();
    if f_bar == 0.0 {
        return Err(Error::invalid(
            "residual series needs f_bar != 0; zero-mass functions are negative controls",
        ));
    }
    let func = functional_curve(path, f, t_grid)?;
    let lt = local_time_curve(path, 0.0, t_grid, lt_bandwidth)?;
    let j = func
        .iter()
        .zip(lt.iter())
        .map(|(a, l)| a - f_bar * l)
        .collect();
    Ok(ResidualSeries {
        t_grid: t_grid.to_vec(),
        j,
        tau: path.spec.tau,
        f: f.clone(),
    })
}

/// Fit of log(0.9-quantile |J(t)|) against log t.
#[derive(Debug, Clone, Copy)]
pub struct RateFit {
    pub slope: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub n_points: usize,
    pub n_replicates: usize,
}

const RATE_QUANTILE: f64 = 0.9;
const BOOTSTRAP_RESAMPLES: usize = 500;

/// Quantile-envelope rate regression over an ensemble of residual series.
///
/// For each grid time in the fit window, takes the 0.9 quantile of |J(t)|
/// across replicates, then fits log-quantile against log-time by OLS. The
/// 95% confidence interval comes from a replicate bootstrap.
pub fn rate_regression(
    series: &[ResidualSeries],
    fit_window: (f64, f64),
    bootstrap_seed: u64,
) -> Result<RateFit> {
    if series.len() < 50 {
        return Err(Error::invalid(format!(
            "rate regression needs at least 50 replicates, got {}",
            series.len()
        )));
    }
    let t_grid = &series[0].t_grid;
    if series.iter().any(|s| s.t_grid != *t_grid) {
        return Err(Error::invalid("residual series must share one t_grid"));
    }
    let (lo, hi) = fit_window;
    let idx: Vec<usize> = t_grid
        .iter()
        .enumerate()
        .filter(|(_, &t)| t >= lo && t <= hi && t > 0.0)
        .map(|(i, _)| i)
        .collect();
    if idx.len() < 3 {
        return Err(Error::invalid(
            "degenerate fit window: fewer than 3 grid times",
        ));
    }
    let span = t_grid[*idx.last().unwrap()] / t_grid[idx[0]];
    if span < 10.0 * (1.0 - 1e-9) {
        return Err(Error::invalid(format!(
            "fit window spans {span:.2}x; need at least one decade"
        )));
    }

    let slope_of = |replicates: &[usize]| -> Result<f64> {
        let mut xs = Vec::with_capacity(idx.len());
        let mut ys = Vec::with_capacity(idx.len());
        let mut abs_j = vec![0.0f64; replicates.len()];
        for &i in &idx {
            for (slot, &r) in abs_j.iter_mut().zip(replicates.iter()) {
                *slot = series[r].j[i].abs();
            }
            abs_j.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
            let q = quantile_sorted(&abs_j, RATE_QUANTILE);
            if q > 0.0 {
                xs.push(t_grid[i].ln());
                ys.push(q.ln());
            }
        }
        if xs.len() < 3 {
            return Err(Error::invalid("quantile envelope is degenerate (all zero)"));
        }
        Ok(linear_fit(&xs, &ys)?.slope)
    };

    let all: Vec<usize> = (0..series.len()).collect();
    let slope = slope_of(&all)?;

    let mut rng = path_rng(bootstrap_seed);
    let mut slopes = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut resample = vec![0usize; series.len()];
    for _ in 0..BOOTSTRAP_RESAMPLES {
        for slot in resample.iter_mut() {
            *slot = rng.random_range(0..series.len());
        }
        if let Ok(s) = slope_of(&resample) {
            slopes.push(s);
        }
    }
    if slopes.len() < BOOTSTRAP_RESAMPLES / 2 {
        return Err(Error::numerical("bootstrap failed on most resamples"));
    }
    slopes.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let ci_lo = quantile_sorted(&slopes, 0.025);
    let ci_hi = quantile_sorted(&slopes, 0.975);

    Ok(RateFit {
        slope,
        ci_lo,
        ci_hi,
        n_points: idx.len(),
        n_replicates: series.len(),
    })
}

/// Both routes of the proof bookkeeping for the strong approximation:
/// the direct residual J(t) and its split J1 + J2 across the moving
/// threshold |x| > t^a with a = nu tau / (nu + k), recomputed from a
/// local-time field.
pub struct ResidualSplit {
    pub direct: f64,
    pub far: f64,
    pub near: f64,
    pub threshold: f64,
}

pub fn residual_split(
    path: &PathGrid,
    f: &TestFunction,
    field: &LocalTimeField,
    t: f64,
    nu: f64,
    k: f64,
) -> Result<ResidualSplit> {
    if nu <= 0.0 || k <= 0.0 {
        return Err(Error::domain("residual split needs nu > 0 and k > 0"));
    }
    let tau = path.spec.tau;
    let a = nu * tau / (nu + k);
    let threshold = t.powf(a);
    let it = field.time_index(t)?;

    // L(0, t) read from the same field so both routes share estimator bias.
    let zero_ix = field
        .x_grid
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.abs().partial_cmp(&b.abs()).unwrap())
        .map(|(i, _)| i)
        .ok_or_else(|| Error::invalid("empty level grid"))?;
    if field.x_grid[zero_ix].abs() > 1e-9 {
        return Err(Error::invalid(
            "level grid must contain x = 0 for the residual split",
        ));
    }
    let l0 = field.value(zero_ix, it);

    let dx = field.x_grid[1] - field.x_grid[0];
    let mut far = 0.0;
    let mut near = 0.0;
    for (jx, &x) in field.x_grid.iter().enumerate() {
        let contrib = f.eval(x) * (field.value(jx, it) - l0) * dx;
        if x.abs() > threshold {
            far += contrib;
        } else {
            near += contrib;
        }
    }

    let direct = functional(path, f, t)? - f.f_bar() * l0;
    Ok(ResidualSplit {
        direct,
        far,
        near,
        threshold,
    })
}
