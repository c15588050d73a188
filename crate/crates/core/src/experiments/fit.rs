//! Least-squares rate fits in log coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateModel {
    /// `c x^p`
    Power,
    /// `c exp(-A/x)`
    ExpReciprocal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub model: RateModel,
    pub c: f64,
    /// `p` for the power model, `A` for the exponential-reciprocal model.
    pub exponent: f64,
    /// Root-mean-square of the residuals of `ln value`, so that it can be
    /// compared with `log_range` whatever the number of points.
    pub residual: f64,
    /// Largest absolute residual of `ln value`.
    pub max_residual: f64,
    /// `max ln value - min ln value`, the scale against which `residual` is judged.
    pub log_range: f64,
    pub points: usize,
}

impl RateFit {
    pub fn predict(&self, x: f64) -> f64 {
        match self.model {
            RateModel::Power => self.c * x.powf(self.exponent),
            RateModel::ExpReciprocal => self.c * (-self.exponent / x).exp(),
        }
    }
}

/// Fits `ln v = ln c + p ln x` or `ln v = ln c - A/x` by ordinary least squares.
pub fn rate_fit(points: &[(f64, f64)], model: RateModel) -> Result<RateFit> {
    if points.len() < 3 {
        return invalid(format!("a rate fit needs at least 3 points, got {}", points.len()));
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(x, v) in points {
        if !(x > 0.0 && x.is_finite()) {
            return invalid(format!("abscissa must be positive, got {x}"));
        }
        if !(v > 0.0 && v.is_finite()) {
            return invalid(format!("log-model fit needs positive values, got {v}"));
        }
        xs.push(match model {
            RateModel::Power => x.ln(),
            RateModel::ExpReciprocal => -1.0 / x,
        });
        ys.push(v.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return invalid("rate fit needs at least two distinct abscissae");
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let res: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - intercept - slope * x).collect();
    let residual = (res.iter().map(|r| r * r).sum::<f64>() / n).sqrt();
    let max_residual = res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let (lo, hi) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
    Ok(RateFit { model, c: intercept.exp(), exponent: slope, residual, max_residual, log_range: hi - lo, points: points.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_data() {
        let pts: Vec<(f64, f64)> = [0.5f64, 0.1, 0.02, 0.004].iter().map(|&x| (x, 3.0 * x.sqrt())).collect();
        let f = rate_fit(&pts, RateModel::Power).unwrap();
        assert!((f.exponent - 0.5).abs() < 1e-12);
        assert!((f.c - 3.0).abs() < 1e-12);
        assert!(f.residual < 1e-12 && f.max_residual < 1e-12);
    }

    #[test]
    fn exact_exponential_data() {
        let pts: Vec<(f64, f64)> = [2.0f64, 1.0, 0.5, 0.25].iter().map(|&x| (x, 2.0 * (-4.0 / x).exp())).collect();
        let f = rate_fit(&pts, RateModel::ExpReciprocal).unwrap();
        assert!((f.exponent - 4.0).abs() < 1e-12);
        assert!((f.c - 2.0).abs() < 1e-11);
        assert!(f.residual < 1e-12);
        assert!((f.predict(0.5) - pts[2].1).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(rate_fit(&[(1.0, 1.0), (2.0, 2.0)], RateModel::Power).is_err());
        assert!(rate_fit(&[(1.0, 1.0), (2.0, -2.0), (3.0, 1.0)], RateModel::Power).is_err());
        assert!(rate_fit(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)], RateModel::Power).is_err());
    }
}
