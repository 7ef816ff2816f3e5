use log::warn;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::sweep::ConvergenceRecord;
use crate::error::{Error, Result};

/// Least-squares fit `log err = p log λ₂ + c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    /// Half-width of the 95% confidence interval of the exponent.
    pub ci95: f64,
    pub intercept: f64,
    pub n_points: usize,
}

impl std::fmt::Display for PowerLawFit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "exponent={:.4} ci95={:.4}", self.exponent, self.ci95)
    }
}

/// Fits `abs_error` against `lambda2`. Records with a non-positive error are
/// skipped with a warning.
pub fn fit_power_law(records: &[ConvergenceRecord]) -> Result<PowerLawFit> {
    let pts: Vec<(f64, f64)> = records.iter().map(|r| (r.lambda2, r.abs_error)).collect();
    fit_points(&pts)
}

/// Same fit on raw `(x, y)` pairs.
pub fn fit_points(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(x, y) in points {
        if x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite() {
            xs.push(x.ln());
            ys.push(y.ln());
        } else {
            warn!("excluding point ({x}, {y}) from the log-log fit");
        }
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::validation(format!("need at least 3 positive points for a fit, have {n}")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::validation("all abscissae coincide"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let dof = nf - 2.0;
    let se = (rss / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof)
        .map_err(|e| Error::numerical(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(PowerLawFit {
        exponent: slope,
        ci95: t * se,
        intercept,
        n_points: n,
    })
}
