//! Adaptive Simpson quadrature.
//!
//! Used for the Riemann-Liouville covariance integral and for moment
//! integrals of test functions. Callers with endpoint singularities are
//! expected to substitute them away first (see `process::covariance`).

/// Panels of the coarse pre-pass that fixes the error scale. Without it a
/// peaked integrand can fool the first Simpson estimate into a near-zero
/// tolerance and an exhaustive refinement tree.
const PRE_PANELS: usize = 32;

/// Integrate `f` over `[a, b]` with adaptive Simpson refinement.
///
/// `rel_tol` is measured against the total absolute mass of a 32-panel
/// composite pre-pass; refinement also stops when the Richardson defect
/// falls to round-off, so the recursion terminates on any integrand.
pub fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
    max_depth: u32,
) -> f64 {
    if a == b {
        return 0.0;
    }
    let h = (b - a) / PRE_PANELS as f64;
    let mut mass = 0.0f64;
    let mut panels = Vec::with_capacity(PRE_PANELS);
    let mut fa = f(a);
    for i in 0..PRE_PANELS {
        let lo = a + i as f64 * h;
        let hi = if i + 1 == PRE_PANELS {
            b
        } else {
            a + (i + 1) as f64 * h
        };
        let m = 0.5 * (lo + hi);
        let fm = f(m);
        let fb = f(hi);
        let estimate = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        mass += estimate.abs();
        panels.push((lo, hi, fa, fm, fb, estimate));
        fa = fb;
    }
    if mass == 0.0 {
        return 0.0;
    }
    let tol_per_panel = (mass * rel_tol).max(1e-300) / PRE_PANELS as f64;
    panels
        .into_iter()
        .map(|(lo, hi, fa, fm, fb, whole)| {
            recurse(f, lo, hi, fa, fm, fb, whole, tol_per_panel, max_depth)
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // Round-off floor: once the defect is at rounding scale, further
    // splitting only chases noise.
    let noise = 4.0 * f64::EPSILON * (left.abs() + right.abs() + whole.abs());
    if depth == 0 || delta.abs() <= 15.0 * tol || delta.abs() <= noise {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn polynomial_is_exact() {
        let got = adaptive_simpson(&|x| 3.0 * x * x, 0.0, 2.0, 1e-12, 40);
        assert_relative_eq!(got, 8.0, max_relative = 1e-13);
    }

    #[test]
    fn transcendental() {
        let got = adaptive_simpson(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12, 50);
        assert_relative_eq!(got, 2.0, max_relative = 1e-11);
    }

    #[test]
    fn mild_endpoint_derivative_singularity() {
        // int_0^1 sqrt(x) dx = 2/3; integrand has unbounded derivative at 0.
        let got = adaptive_simpson(&|x: f64| x.sqrt(), 0.0, 1.0, 1e-12, 60);
        assert_relative_eq!(got, 2.0 / 3.0, max_relative = 1e-9);
    }

    #[test]
    fn narrow_peak_with_vanishing_coarse_samples() {
        // x^2 exp(-2 x^2) over [-6, 6]: the integrand is ~0 at the ends
        // and exactly 0 at the center, the regime that used to defeat the
        // tolerance scale. Analytic value: sqrt(2 pi)/16 per unit
        // amplitude... here int x^2 e^(-2x^2) = sqrt(pi/2)/8.
        let got = adaptive_simpson(&|x: f64| x * x * (-2.0 * x * x).exp(), -6.0, 6.0, 1e-10, 50);
        let expected = (std::f64::consts::PI / 2.0).sqrt() / 8.0 * 2.0;
        assert_relative_eq!(got, expected, max_relative = 1e-9);
    }

    #[test]
    fn zero_function_returns_zero() {
        assert_eq!(adaptive_simpson(&|_| 0.0, 0.0, 1.0, 1e-12, 40), 0.0);
    }

    #[test]
    fn empty_interval() {
        assert_eq!(adaptive_simpson(&|x| x, 1.0, 1.0, 1e-12, 40), 0.0);
    }
}
