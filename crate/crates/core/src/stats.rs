//! Sample statistics and least-squares line fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean and standard error of the mean (0 for a single sample).
pub fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
    /// Weighted residual sum of squares per degree of freedom.
    pub chi2_dof: f64,
}

/// Weighted fit of `y = slope·x + intercept` with weights `1/σ²`.
///
/// Parameter errors come from the covariance implied by σ; they are not
/// rescaled by the residual scatter.
pub fn weighted_line_fit(x: &[f64], y: &[f64], sigma: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if y.len() != n || sigma.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: y.len().min(sigma.len()) });
    }
    if n < 2 {
        return Err(Error::InvalidParams("a line fit needs at least two points".into()));
    }
    if sigma.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::InvalidParams("fit uncertainties must be positive".into()));
    }
    let (mut s, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let w = 1.0 / (sigma[i] * sigma[i]);
        s += w;
        sx += w * x[i];
        sy += w * y[i];
        sxx += w * x[i] * x[i];
        sxy += w * x[i] * y[i];
    }
    let det = s * sxx - sx * sx;
    if !(det > 0.0) {
        return Err(Error::InvalidParams("abscissae are degenerate".into()));
    }
    let slope = (s * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    let chi2: f64 = (0..n)
        .map(|i| ((y[i] - slope * x[i] - intercept) / sigma[i]).powi(2))
        .sum();
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr: (s / det).sqrt(),
        intercept_stderr: (sxx / det).sqrt(),
        chi2_dof: if n > 2 { chi2 / (n - 2) as f64 } else { 0.0 },
    })
}
