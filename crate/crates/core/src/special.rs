//! Gamma and beta functions on the positive axis.
//!
//! Uses the Lanczos approximation with g = 607/128 and 15 coefficients
//! (Godfrey's set). Relative error is below 1e-13 for x > 0, which the
//! tests validate against direct quadrature of the beta integral.

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 607.0 / 128.0;

// Published table digits kept as-is.
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 15] = [
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
];

const HALF_LOG_2PI: f64 = 0.918_938_533_204_672_8;

/// Natural log of the gamma function for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    let mut sum = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        sum += c / (x + i as f64);
    }
    let tmp = x + LANCZOS_G + 0.5;
    Ok((x + 0.5) * tmp.ln() - tmp + HALF_LOG_2PI + (sum / x).ln())
}

/// Gamma function for x > 0.
pub fn gamma(x: f64) -> Result<f64> {
    ln_gamma(x).map(f64::exp)
}

/// Euler beta function B(a, b) for a, b > 0.
pub fn beta(a: f64, b: f64) -> Result<f64> {
    Ok((ln_gamma(a)? + ln_gamma(b)? - ln_gamma(a + b)?).exp())
}
