//! Student t distribution and Welch's unequal-variance t-test.

mod quad;
mod special;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use quad::integrate;
pub use special::{gamma, incomplete_beta, ln_beta, ln_gamma};

use crate::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with the `n − 1` denominator.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

fn check_nu(nu: f64) -> Result<()> {
    if nu > 0.0 && !nu.is_nan() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "degrees of freedom must be positive, got {nu}"
        )))
    }
}

/// `Γ((ν+1)/2) / Γ(ν/2)`
fn gamma_ratio(nu: f64) -> f64 {
    (ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu)).exp()
}

/// Density of the t distribution with `nu` degrees of freedom.
pub fn t_pdf(t: f64, nu: f64) -> Result<f64> {
    check_nu(nu)?;
    Ok(gamma_ratio(nu) / (PI * nu).sqrt() * (1.0 + t * t / nu).powf(-0.5 * (nu + 1.0)))
}

/// Two-sided tail `P(|T| ≥ |t|)` from the regularized incomplete beta.
pub fn two_sided_p(t: f64, nu: f64) -> Result<f64> {
    check_nu(nu)?;
    let x = nu / (nu + t * t);
    Ok(incomplete_beta(0.5 * nu, 0.5, x))
}

/// Upper tail `∫_{|t|}^∞ f(s, ν) ds` by quadrature.
///
/// With `s = √ν tan θ` the integrand becomes `cos^{ν−1} θ` on
/// `[atan(|t|/√ν), π/2]`, a finite interval. It is cut into pieces no wider
/// than the peak width `~1/√ν` so the adaptive rule sees the mass.
pub fn upper_tail_quadrature(t: f64, nu: f64) -> Result<f64> {
    check_nu(nu)?;
    let scale = gamma_ratio(nu) / PI.sqrt();
    let theta0 = (t.abs() / nu.sqrt()).atan();
    let span = 0.5 * PI - theta0;
    if span <= 0.0 {
        return Ok(0.0);
    }
    let width = (1.0 / (nu + 1.0).sqrt()).min(span);
    let pieces = (span / width).ceil() as usize;
    let step = span / pieces as f64;
    let integrand = |th: f64| th.cos().powf(nu - 1.0);
    let decreasing = nu >= 1.0;
    let mut total = 0.0;
    for k in 0..pieces {
        let a = theta0 + k as f64 * step;
        let b = if k + 1 == pieces { 0.5 * PI } else { a + step };
        let piece = integrate(integrand, a, b, 1e-16 / scale, 1e-13);
        total += piece;
        if decreasing && piece <= 1e-20 * total {
            break;
        }
    }
    Ok(scale * total)
}

/// Two-sided tail by quadrature.
pub fn two_sided_p_quadrature(t: f64, nu: f64) -> Result<f64> {
    Ok((2.0 * upper_tail_quadrature(t, nu)?).min(1.0))
}

/// Cumulative distribution `P(T ≤ t)`.
pub fn t_cdf(t: f64, nu: f64) -> Result<f64> {
    let half = 0.5 * two_sided_p(t, nu)?;
    Ok(if t >= 0.0 { 1.0 - half } else { half })
}

/// Two-sided critical value `t_{α/2,ν}`: the `t ≥ 0` with `2 ∫_t^∞ f = α`.
pub fn critical_t(alpha: f64, nu: f64) -> Result<f64> {
    check_nu(nu)?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "significance level must lie in (0, 1], got {alpha}"
        )));
    }
    if alpha == 1.0 {
        return Ok(0.0);
    }
    let excess = |t: f64| two_sided_p_quadrature(t, nu).map(|p| p - alpha);
    let mut lo = 0.0;
    let mut hi = 1.0;
    while excess(hi)? > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Undefined(format!(
                "critical value for alpha {alpha}, nu {nu} not bracketed"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Outcome of a two-sided Welch test on `sample1 − sample2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchResult {
    pub t0: f64,
    pub nu: f64,
    pub p_value: f64,
    /// The same p-value from direct quadrature of the density.
    pub p_value_quadrature: f64,
    pub mean1: f64,
    pub mean2: f64,
    pub std_err: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub alpha: f64,
}

impl WelchResult {
    pub fn mean_difference(&self) -> f64 {
        self.mean1 - self.mean2
    }
}

pub fn welch_t_test(sample1: &[f64], sample2: &[f64], alpha: f64) -> Result<WelchResult> {
    let (n1, n2) = (sample1.len(), sample2.len());
    if n1 < 2 || n2 < 2 {
        return Err(Error::InvalidParameter(format!(
            "each sample needs at least 2 values, got {n1} and {n2}"
        )));
    }
    if sample1.iter().chain(sample2).any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("samples must be finite".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "significance level must lie in (0, 1), got {alpha}"
        )));
    }
    let (m1, m2) = (mean(sample1), mean(sample2));
    let a = sample_variance(sample1) / n1 as f64;
    let b = sample_variance(sample2) / n2 as f64;
    let se2 = a + b;
    if !(se2 > 0.0) {
        return Err(Error::Undefined(
            "both samples have zero variance; the t statistic is undefined".into(),
        ));
    }
    let std_err = se2.sqrt();
    let t0 = (m1 - m2) / std_err;
    let nu = se2 * se2 / (a * a / (n1 as f64 - 1.0) + b * b / (n2 as f64 - 1.0));
    let p_value = two_sided_p(t0, nu)?;
    let p_value_quadrature = two_sided_p_quadrature(t0, nu)?;
    if (p_value - p_value_quadrature).abs() > 1e-9 {
        log::warn!("p-value paths disagree: beta {p_value:e}, quadrature {p_value_quadrature:e}");
    }
    let half_width = critical_t(alpha, nu)? * std_err;
    Ok(WelchResult {
        t0,
        nu,
        p_value,
        p_value_quadrature,
        mean1: m1,
        mean2: m2,
        std_err,
        ci_low: m1 - m2 - half_width,
        ci_high: m1 - m2 + half_width,
        alpha,
    })
}

/// Confidence interval on the mean difference as a percentage of `reference_mean`.
pub fn ci_of_mean_difference(result: &WelchResult, reference_mean: f64) -> Result<(f64, f64)> {
    if reference_mean == 0.0 || !reference_mean.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "reference mean must be finite and nonzero, got {reference_mean}"
        )));
    }
    let lo = 100.0 * result.ci_low / reference_mean;
    let hi = 100.0 * result.ci_high / reference_mean;
    Ok(if lo <= hi { (lo, hi) } else { (hi, lo) })
}
