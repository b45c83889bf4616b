//! Statistical primitives: two-sample Kolmogorov-Smirnov test, quantiles,
//! ordinary least squares, and moment helpers.
//!
//! The KS p-value uses the exact conditional null distribution (lattice-path
//! counting) when both samples have fewer than 1000 points and the
//! asymptotic Kolmogorov formula with the small-sample correction above
//! that.

use crate::error::{Error, Result};
use crate::special::ln_gamma;

/// Outcome of a two-sample KS comparison.
#[derive(Debug, Clone, Copy)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub m: usize,
}

/// Two-sample Kolmogorov-Smirnov test.
///
/// Returns the sup-distance between the empirical CDFs and the p-value of
/// observing a distance at least that large under the null that both
/// samples come from the same distribution.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    let n = a.len();
    let m = b.len();
    if n < 8 || m < 8 {
        return Err(Error::invalid(format!(
            "KS test needs at least 8 points per sample, got {n} and {m}"
        )));
    }
    if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("KS test input contains non-finite values"));
    }

    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_unstable_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_unstable_by(|p, q| p.partial_cmp(q).unwrap());

    // Integer lattice form: at (i, j) the CDF gap is |i/n - j/m|, tracked
    // exactly as |i*m - j*n| to avoid float comparisons. Ties advance both
    // indices before the gap is recorded.
    let (ni, mi) = (n as i64, m as i64);
    let mut i = 0usize;
    let mut j = 0usize;
    let mut d_int: i64 = 0;
    while i < n || j < m {
        let take_x = j >= m || (i < n && xs[i] <= ys[j]);
        let take_y = i >= n || (j < m && ys[j] <= xs[i]);
        if take_x {
            let v = xs[i];
            while i < n && xs[i] == v {
                i += 1;
            }
        }
        if take_y {
            let v = ys[j];
            while j < m && ys[j] == v {
                j += 1;
            }
        }
        d_int = d_int.max((i as i64 * mi - j as i64 * ni).abs());
    }

    let statistic = d_int as f64 / (n as f64 * m as f64);
    let p_value = if n.max(m) < 1000 {
        ks_exact_p(n, m, d_int)?
    } else {
        ks_asymptotic_p(n, m, statistic)
    };
    Ok(KsResult {
        statistic,
        p_value,
        n,
        m,
    })
}

/// Exact P(D >= d_obs) by counting lattice paths that stay strictly inside
/// the band |i*m - j*n| < d_int at every vertex, normalized by C(n+m, n).
fn ks_exact_p(n: usize, m: usize, d_int: i64) -> Result<f64> {
    if d_int == 0 {
        return Ok(1.0);
    }
    let (ni, mi) = (n as i64, m as i64);
    let inside = |i: i64, j: i64| (i * mi - j * ni).abs() < d_int;

    let mut dp = vec![0.0f64; m + 1];
    let mut log_scale = 0.0f64;
    dp[0] = 1.0;
    for i in 0..=n as i64 {
        for j in 0..=m as i64 {
            let ju = j as usize;
            if !inside(i, j) {
                dp[ju] = 0.0;
                continue;
            }
            // dp[ju] currently holds the count from (i-1, j); add (i, j-1).
            if i == 0 && j == 0 {
                continue;
            }
            let from_left = if ju > 0 { dp[ju - 1] } else { 0.0 };
            if i == 0 {
                dp[ju] = from_left;
            } else {
                dp[ju] += from_left;
            }
        }
        let row_max = dp.iter().cloned().fold(0.0f64, f64::max);
        if row_max > 1e270 {
            for v in dp.iter_mut() {
                *v *= 1e-270;
            }
            log_scale += 270.0 * std::f64::consts::LN_10;
        }
    }
    if dp[m] <= 0.0 {
        return Ok(1.0);
    }
    let ln_paths = dp[m].ln() + log_scale;
    let ln_total =
        ln_gamma((n + m + 1) as f64)? - ln_gamma((n + 1) as f64)? - ln_gamma((m + 1) as f64)?;
    let p = 1.0 - (ln_paths - ln_total).exp();
    Ok(p.clamp(0.0, 1.0))
}

/// Asymptotic P(D >= d) with the Stephens small-sample correction.
fn ks_asymptotic_p(n: usize, m: usize, d: f64) -> f64 {
    let ne = (n as f64 * m as f64) / ((n + m) as f64);
    let sqrt_ne = ne.sqrt();
    let lambda = (sqrt_ne + 0.12 + 0.11 / sqrt_ne) * d;
    kolmogorov_q(lambda)
}

/// Kolmogorov survival function Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2).
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-14 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Interpolating quantile (the common "type 7" definition).
pub fn quantile(xs: &[f64], q: f64) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::invalid("quantile of empty sample"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::domain(format!("quantile level {q} outside [0,1]")));
    }
    let mut sorted = xs.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(quantile_sorted(&sorted, q))
}

/// Quantile of an already ascending-sorted slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let w = h - lo as f64;
        sorted[lo] * (1.0 - w) + sorted[hi] * w
    }
}

/// Ordinary least squares line fit.
#[derive(Debug, Clone, Copy)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid("linear fit needs >= 2 matched points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (&xi, &yi) in x.iter().zip(y.iter()) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
        syy += (yi - my) * (yi - my);
    }
    if sxx == 0.0 {
        return Err(Error::invalid("linear fit with degenerate abscissa"));
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 {
        (sxy * sxy) / (sxx * syy)
    } else {
        1.0
    };
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}
