//! Small statistics helpers: sample mean with standard error, and (weighted)
//! least-squares line fits with either estimated or known observation
//! variance. Used by the scaling module and the acceptance harness.

use crate::error::{CoreError, Result};

/// Sample mean and standard error of the mean.
#[derive(Clone, Copy, Debug)]
pub struct MeanStd {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

pub fn mean_stderr(xs: &[f64]) -> MeanStd {
    let n = xs.len();
    assert!(n >= 2, "need at least two samples");
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    MeanStd {
        mean,
        stderr: (var / n as f64).sqrt(),
        n,
    }
}

/// Straight-line fit y = intercept + slope * x.
#[derive(Clone, Copy, Debug)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
}

/// Weighted least squares. When `weights` is Some, entries are 1/variance of
/// each observation and the parameter covariance uses those known variances;
/// when None, unit weights are used and the observation variance is estimated
/// from the residuals (requires n > 2).
pub fn line_fit(x: &[f64], y: &[f64], weights: Option<&[f64]>) -> Result<LineFit> {
    let n = x.len();
    if n != y.len() || n < 2 {
        return Err(CoreError::Config(format!(
            "line fit needs matching x/y with at least 2 points, got {n} and {}",
            y.len()
        )));
    }
    if let Some(w) = weights {
        if w.len() != n || w.iter().any(|&wi| !(wi.is_finite() && wi > 0.0)) {
            return Err(CoreError::Config(
                "weights must be positive, finite, same length".into(),
            ));
        }
    }
    let w_of = |i: usize| weights.map_or(1.0, |w| w[i]);
    let (mut sw, mut swx, mut swy, mut swxx, mut swxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let w = w_of(i);
        sw += w;
        swx += w * x[i];
        swy += w * y[i];
        swxx += w * x[i] * x[i];
        swxy += w * x[i] * y[i];
    }
    let delta = sw * swxx - swx * swx;
    if delta <= 0.0 || !delta.is_finite() {
        return Err(CoreError::Numeric(
            "degenerate abscissae in line fit".into(),
        ));
    }
    let slope = (sw * swxy - swx * swy) / delta;
    let intercept = (swxx * swy - swx * swxy) / delta;
    let (var_slope, var_intercept) = if weights.is_some() {
        // Known observation variances: covariance = (X^T W X)^-1.
        (sw / delta, swxx / delta)
    } else {
        if n <= 2 {
            (0.0, 0.0)
        } else {
            let rss: f64 = (0..n)
                .map(|i| {
                    let r = y[i] - intercept - slope * x[i];
                    r * r
                })
                .sum();
            let s2 = rss / (n - 2) as f64;
            (s2 * sw / delta, s2 * swxx / delta)
        }
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_se: var_slope.sqrt(),
        intercept_se: var_intercept.sqrt(),
    })
}
