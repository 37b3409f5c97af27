use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Least-squares fit of `A exp(−t/T1) + C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub t1: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub residual_rms: f64,
}

/// Samples with time rescaled to `u = t / t_max`.
struct Problem<'a> {
    u: Vec<f64>,
    y: &'a [f64],
}

impl Problem<'_> {
    /// Optimal `(A, C)` for a fixed rate and the resulting sum of squares.
    fn linear(&self, k: f64) -> (f64, f64, f64) {
        let n = self.u.len() as f64;
        let (mut se, mut see, mut sy, mut sey) = (0.0, 0.0, 0.0, 0.0);
        for (&u, &y) in self.u.iter().zip(self.y) {
            let e = (-k * u).exp();
            se += e;
            see += e * e;
            sy += y;
            sey += e * y;
        }
        let det = see * n - se * se;
        let (a, c) = if det.abs() <= 1e-300 {
            (0.0, sy / n)
        } else {
            ((n * sey - se * sy) / det, (see * sy - se * sey) / det)
        };
        (a, c, self.sum_sq(a, k, c))
    }

    fn sum_sq(&self, a: f64, k: f64, c: f64) -> f64 {
        self.u
            .iter()
            .zip(self.y)
            .map(|(&u, &y)| (a * (-k * u).exp() + c - y).powi(2))
            .sum()
    }

    /// Rate from a straight line through `ln|y − y_last|`.
    fn log_linear_guess(&self) -> f64 {
        let last = *self.y.last().unwrap_or(&0.0);
        let dev: Vec<f64> = self.y.iter().map(|y| (y - last).abs()).collect();
        let peak = dev.iter().cloned().fold(0.0, f64::max);
        let pts: Vec<(f64, f64)> = self
            .u
            .iter()
            .zip(&dev)
            .take(self.u.len() - 1)
            .filter(|(_, &d)| d > 0.05 * peak)
            .map(|(&u, &d)| (u, d.ln()))
            .collect();
        if pts.len() >= 2 {
            let m = pts.len() as f64;
            let mu = pts.iter().map(|p| p.0).sum::<f64>() / m;
            let ml = pts.iter().map(|p| p.1).sum::<f64>() / m;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mu) * (p.1 - ml)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mu).powi(2)).sum();
            if sxx > 0.0 && sxy < 0.0 {
                return -sxy / sxx;
            }
        }
        3.0
    }
}

/// Golden-section minimization of `f` on `[a, b]`.
fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        }
    }
    0.5 * (a + b)
}

/// Fit `A exp(−t/T1) + C` by least squares.
///
/// The rate is located by a scan and a line search over `ln k` with the
/// linear parameters eliminated, then all three parameters are polished by
/// damped Gauss–Newton.
pub fn fit_exponential(times: &[f64], signal: &[f64]) -> Result<DecayFit> {
    if times.len() != signal.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            found: signal.len(),
        });
    }
    if times.len() < 4 {
        return Err(Error::FitFailure(format!(
            "need at least 4 samples, got {}",
            times.len()
        )));
    }
    if times.iter().chain(signal).any(|x| !x.is_finite()) {
        return Err(Error::FitFailure("non-finite sample".into()));
    }
    let t_max = times.iter().cloned().fold(f64::MIN, f64::max);
    if !(t_max > 0.0) {
        return Err(Error::FitFailure("times must include a positive value".into()));
    }
    let hi = signal.iter().cloned().fold(f64::MIN, f64::max);
    let lo = signal.iter().cloned().fold(f64::MAX, f64::min);
    if hi - lo <= 1e-12 * hi.abs().max(lo.abs()) || hi == lo {
        return Err(Error::FitFailure("signal is constant".into()));
    }
    let problem = Problem {
        u: times.iter().map(|t| t / t_max).collect(),
        y: signal,
    };

    let ln_k0 = problem.log_linear_guess().ln();
    let cost = |lnk: f64| problem.linear(lnk.exp()).2;
    let step = 0.05;
    let span = 160;
    let (best, _) = (0..=span)
        .map(|i| ln_k0 - 4.0 + step * i as f64)
        .map(|x| (x, cost(x)))
        .fold(
            (ln_k0, f64::INFINITY),
            |acc, (x, c)| if c < acc.1 { (x, c) } else { acc },
        );
    let lnk = golden(cost, best - step, best + step, 1e-10);

    let (mut a, mut c, mut ss) = problem.linear(lnk.exp());
    let mut k = lnk.exp();
    let mut mu = 1e-3;
    for _ in 0..50 {
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for (&u, &y) in problem.u.iter().zip(problem.y) {
            let e = (-k * u).exp();
            let j = Vector3::new(e, -a * u * e, 1.0);
            let r = a * e + c - y;
            jtj += j * j.transpose();
            jtr += j * r;
        }
        let mut improved = false;
        for _ in 0..10 {
            let mut damped = jtj;
            for d in 0..3 {
                damped[(d, d)] *= 1.0 + mu;
            }
            let Some(delta) = damped.lu().solve(&(-jtr)) else {
                mu *= 10.0;
                continue;
            };
            let (na, nk, nc) = (a + delta[0], k + delta[1], c + delta[2]);
            let nss = if nk > 0.0 {
                problem.sum_sq(na, nk, nc)
            } else {
                f64::INFINITY
            };
            if nss < ss {
                let rel = (nss - ss).abs() / ss.max(f64::MIN_POSITIVE);
                a = na;
                k = nk;
                c = nc;
                ss = nss;
                mu = (mu * 0.3).max(1e-12);
                improved = rel > 1e-15;
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::FitFailure(format!("fitted rate {k} is not positive")));
    }
    Ok(DecayFit {
        t1: t_max / k,
        amplitude: a,
        offset: c,
        residual_rms: (ss / times.len() as f64).sqrt(),
    })
}
