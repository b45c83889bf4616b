//! Analytic covariances of the two processes and the fBm moving-average
//! constant.

use nalgebra::DMatrix;

use super::{ProcessKind, ProcessSpec};
use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;
use crate::special::beta;

/// fBm covariance R(t,s) = (t^2H + s^2H - |t-s|^2H) / 2.
pub fn fbm_covariance(t: f64, s: f64, h: f64) -> Result<f64> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::domain(format!(
            "Hurst index must be in (0,1), got {h}"
        )));
    }
    if t < 0.0 || s < 0.0 {
        return Err(Error::domain(format!(
            "times must be nonnegative, got ({t}, {s})"
        )));
    }
    let h2 = 2.0 * h;
    Ok(0.5 * (t.powf(h2) + s.powf(h2) - (t - s).abs().powf(h2)))
}

/// Riemann-Liouville covariance
/// Cov(t,s) = int_0^min(s,t) (t-u)^(beta-1/2) (s-u)^(beta-1/2) du.
///
/// Closed form t^(2 beta) / (2 beta) on the diagonal. Off the diagonal the
/// integral is evaluated by adaptive quadrature after substituting away the
/// endpoint singularity: with w = min - u and q = beta + 1/2, writing
/// w = z^(1/q) gives w^(beta-1/2) dw = dz / q exactly, so
///   Cov = (1/q) int_0^(min^q) (max - min + z^(1/q))^(beta-1/2) dz
/// with a bounded integrand.
pub fn rl_covariance(t: f64, s: f64, beta_idx: f64) -> Result<f64> {
    if !(beta_idx > 0.0 && beta_idx.is_finite()) {
        return Err(Error::domain(format!(
            "RL index must be > 0, got {beta_idx}"
        )));
    }
    if t < 0.0 || s < 0.0 {
        return Err(Error::domain(format!(
            "times must be nonnegative, got ({t}, {s})"
        )));
    }
    let lo = t.min(s);
    let hi = t.max(s);
    if lo == 0.0 {
        return Ok(0.0);
    }
    if t == s {
        return Ok(t.powf(2.0 * beta_idx) / (2.0 * beta_idx));
    }
    let q = beta_idx + 0.5;
    let gap = hi - lo;
    let a = beta_idx - 0.5;
    let integral = adaptive_simpson(
        &|z: f64| (gap + z.powf(1.0 / q)).powf(a),
        0.0,
        lo.powf(q),
        1e-12,
        60,
    );
    Ok(integral / q)
}

/// Moving-average constant c_H = sqrt(2H) 2^H beta(1-H, H+1/2)^(-1/2)
/// linking fBm to its Riemann-Liouville component.
pub fn c_h_constant(h: f64) -> Result<f64> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::domain(format!(
            "Hurst index must be in (0,1), got {h}"
        )));
    }
    Ok((2.0 * h).sqrt() * 2f64.powf(h) / beta(1.0 - h, h + 0.5)?.sqrt())
}

/// Covariance matrix of a process on its full grid (including t = 0).
#[derive(Debug, Clone)]
pub struct CovarianceMatrix {
    pub times: Vec<f64>,
    pub entries: DMatrix<f64>,
}

impl CovarianceMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Eigenvalues in ascending order (symmetric eigendecomposition).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut eigs: Vec<f64> = self
            .entries
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .collect();
        eigs.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        eigs
    }
}

/// Assemble the analytic covariance on the spec's grid.
///
/// The result is symmetric by construction; positive semidefiniteness is
/// enforced downstream by the samplers (tiny negative eigenvalues from
/// round-off are clipped at -1e-10 * lambda_max, anything worse is an
/// error).
pub fn build_covariance(spec: &ProcessSpec) -> Result<CovarianceMatrix> {
    spec.validate()?;
    let times = spec.times();
    let n = times.len();
    let mut entries = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let c = match spec.kind {
                ProcessKind::Fbm => fbm_covariance(times[i], times[j], spec.tau)?,
                ProcessKind::Rl => rl_covariance(times[i], times[j], spec.tau)?,
            };
            entries[(i, j)] = c;
            entries[(j, i)] = c;
        }
    }
    Ok(CovarianceMatrix { times, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::SamplerKind;
    use approx::assert_relative_eq;

    #[test]
    fn fbm_covariance_trivial_anchors() {
        // R(t,t) = t^2H at t = 1.
        assert_relative_eq!(fbm_covariance(1.0, 1.0, 0.7).unwrap(), 1.0);
        // H = 1/2 reduces to min(t,s).
        assert_relative_eq!(fbm_covariance(2.0, 1.0, 0.5).unwrap(), 1.0);
        // Direct evaluation of the closed form at H = 0.75.
        assert_relative_eq!(
            fbm_covariance(2.0, 1.0, 0.75).unwrap(),
            2f64.sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn fbm_covariance_domain_errors() {
        assert!(fbm_covariance(1.0, 1.0, 1.0).is_err());
        assert!(fbm_covariance(-1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn rl_covariance_brownian_and_zero() {
        assert_relative_eq!(rl_covariance(1.0, 1.0, 0.5).unwrap(), 1.0);
        // beta = 1/2 reduces to min(t,s) even off the diagonal.
        assert_relative_eq!(
            rl_covariance(2.0, 1.0, 0.5).unwrap(),
            1.0,
            max_relative = 1e-10
        );
        assert_relative_eq!(rl_covariance(1.0, 0.0, 0.75).unwrap(), 0.0);
    }

    #[test]
    fn rl_diagonal_matches_quadrature() {
        // Closed form t^(2b)/(2b) against the generic quadrature route,
        // probed by evaluating at (t, s) with s -> t from below. The true
        // continuity gap is O(gap^(2b)), which dominates the comparison
        // for b < 1/2.
        for &(t, b) in &[(1.0f64, 0.75f64), (2.0, 0.3), (0.7, 1.2)] {
            let closed = rl_covariance(t, t, b).unwrap();
            let gap = t * 1e-9;
            let near = rl_covariance(t, t - gap, b).unwrap();
            let continuity = 4.0 * gap.powf((2.0 * b).min(1.0)) / closed + 1e-8;
            assert_relative_eq!(closed, near, max_relative = continuity);
            assert_relative_eq!(closed, t.powf(2.0 * b) / (2.0 * b));
        }
    }

    #[test]
    fn rl_offdiagonal_matches_riemann_oracle() {
        // Midpoint Riemann sum on the raw integrand as an independent,
        // slowly-converging oracle.
        for &(t, s, b) in &[(2.0f64, 1.0f64, 0.75f64), (1.0, 0.6, 0.3), (3.0, 0.5, 1.2)] {
            let m = t.min(s);
            let cells = 2_000_000usize;
            let du = m / cells as f64;
            let mut acc = 0.0;
            for i in 0..cells {
                let u = (i as f64 + 0.5) * du;
                acc += (t - u).powf(b - 0.5) * (s - u).powf(b - 0.5);
            }
            let oracle = acc * du;
            let got = rl_covariance(t, s, b).unwrap();
            assert_relative_eq!(got, oracle, max_relative = 2e-4);
            // Symmetry.
            assert_relative_eq!(got, rl_covariance(s, t, b).unwrap(), max_relative = 1e-13);
        }
    }

    #[test]
    fn c_h_constant_anchors() {
        // H = 1/2: sqrt(1) * sqrt(2) * beta(1/2, 1)^(-1/2) = sqrt(2)/sqrt(2) = 1.
        assert_relative_eq!(c_h_constant(0.5).unwrap(), 1.0, max_relative = 1e-12);
        // H = 0.25 against an independent quadrature of beta(0.75, 0.75).
        let b_quad = {
            let f = |u: f64| (1.0 - u.powf(1.0 / 0.75)).powf(-0.25);
            2.0 * adaptive_simpson(&f, 0.0, 0.5f64.powf(0.75), 1e-13, 60) / 0.75
        };
        let expected = (0.5f64).sqrt() * 2f64.powf(0.25) / b_quad.sqrt();
        assert_relative_eq!(c_h_constant(0.25).unwrap(), expected, max_relative = 1e-10);
        // Finite and positive across the range.
        for i in 1..10 {
            let h = i as f64 / 10.0;
            let c = c_h_constant(h).unwrap();
            assert!(c.is_finite() && c > 0.0);
        }
        assert!(c_h_constant(1.0).is_err());
    }

    #[test]
    fn build_covariance_brownian_cases() {
        // FBM H=1/2 and RL beta=1/2 are both Brownian motion: min(t_i, t_j).
        let fbm = ProcessSpec::new(ProcessKind::Fbm, 0.5, 1.0, 4, SamplerKind::Cholesky).unwrap();
        let rl = ProcessSpec::new(ProcessKind::Rl, 0.5, 1.0, 4, SamplerKind::Cholesky).unwrap();
        let a = build_covariance(&fbm).unwrap();
        let b = build_covariance(&rl).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let expect = a.times[i].min(a.times[j]);
                assert_relative_eq!(
                    a.entries[(i, j)],
                    expect,
                    max_relative = 1e-12,
                    epsilon = 1e-14
                );
                assert_relative_eq!(
                    b.entries[(i, j)],
                    expect,
                    max_relative = 1e-8,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn build_covariance_is_near_psd() {
        // All eigenvalues above -1e-10 * lambda_max before clipping.
        let spec =
            ProcessSpec::new(ProcessKind::Fbm, 0.75, 1.0, 64, SamplerKind::Cholesky).unwrap();
        let cov = build_covariance(&spec).unwrap();
        let eigs = cov.eigenvalues();
        let max = eigs.last().cloned().unwrap();
        assert!(eigs[0] > -1e-10 * max, "min eig {} vs max {}", eigs[0], max);
    }
}
