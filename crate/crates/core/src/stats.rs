//! Correlation and least-squares fits used by the experiment harness.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

/// Pearson product-moment correlation with a two-sided p-value from the
/// t-distribution with `n - 2` degrees of freedom.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::Stats(format!("need at least 3 points, got {n}")));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Stats("zero variance".into()));
    }
    let mut r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    if 1.0 - r.abs() < 1e-12 {
        r = r.signum();
    }
    let df = (n - 2) as f64;
    let p = if r.abs() == 1.0 {
        0.0
    } else {
        let t2 = r * r * df / (1.0 - r * r);
        // two-sided tail of Student's t via the regularized incomplete beta
        beta_reg(df / 2.0, 0.5, df / (df + t2))
    };
    Ok((r, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitModel {
    Linear,
    Quadratic,
}

impl FitModel {
    fn degree(&self) -> usize {
        match self {
            FitModel::Linear => 1,
            FitModel::Quadratic => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    /// Polynomial coefficients, constant term first.
    pub coefficients: Vec<f64>,
    pub r_squared: f64,
}

impl FitResult {
    pub fn predict(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * x + c)
    }
}

/// Least-squares polynomial fit (via SVD) with R² on the fitted points.
pub fn fit_curve(x: &[f64], y: &[f64], model: FitModel) -> Result<FitResult> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::Stats(format!("need at least 3 points, got {n}")));
    }
    let terms = model.degree() + 1;
    let design = DMatrix::from_fn(n, terms, |i, j| x[i].powi(j as i32));
    let target = DVector::from_column_slice(y);
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smax.is_nan() || smax <= 0.0 || smin <= smax * 1e-12 {
        return Err(Error::Stats("degenerate design matrix".into()));
    }
    let coef = svd
        .solve(&target, 0.0)
        .map_err(|e| Error::Stats(format!("least squares failed: {e}")))?;
    let coefficients: Vec<f64> = coef.iter().copied().collect();

    let mean = y.iter().sum::<f64>() / n as f64;
    let fit = FitResult {
        model,
        coefficients,
        r_squared: 0.0,
    };
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| (b - fit.predict(a)).powi(2))
        .sum();
    let ss_tot: f64 = y.iter().map(|&b| (b - mean).powi(2)).sum();
    let scale = y.iter().map(|v| v * v).sum::<f64>().max(f64::MIN_POSITIVE);
    let r_squared = if ss_tot <= scale * 1e-24 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(FitResult { r_squared, ..fit })
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation; zero for fewer than two values.
pub fn stdev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn perfect_correlations() {
        let (r, p) = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert_relative_eq!(r, 1.0, epsilon = 1e-12);
        assert_eq!(p, 0.0);
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_relative_eq!(pearson(&x, &y).unwrap().0, -1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_variance_and_length_errors() {
        assert!(matches!(
            pearson(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]),
            Err(Error::Stats(_))
        ));
        assert!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
        assert!(pearson(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn pearson_against_covariance_oracle() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [10.0, 8.0, 9.0, 5.0];
        // hand expansion: mean x 2.5, mean y 8; sum dxdy = -7, sum dx2 = 5, sum dy2 = 14
        let r_hand = -7.0 / (5.0f64 * 14.0).sqrt();
        // brute force: population covariance over population stdevs
        let n = 4.0;
        let cov = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / n - 2.5 * 8.0;
        let sx = (x.iter().map(|a| a * a).sum::<f64>() / n - 2.5 * 2.5).sqrt();
        let sy = (y.iter().map(|b| b * b).sum::<f64>() / n - 64.0).sqrt();
        assert_relative_eq!(r_hand, cov / (sx * sy), epsilon = 1e-12);
        let (r, p) = pearson(&x, &y).unwrap();
        assert_relative_eq!(r, r_hand, epsilon = 1e-12);
        // r^2 = 0.7, t^2 = 14/3; with 2 dof the two-sided tail is 1 - |t| / sqrt(2 + t^2)
        assert_relative_eq!(p, 1.0 - 0.7f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn p_value_for_large_sample_is_tiny() {
        let x: Vec<f64> = (0..1000).map(|i| f64::from(i) / 1000.0).collect();
        let y: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, v)| v + if i % 2 == 0 { 0.3 } else { -0.3 })
            .collect();
        let (r, p) = pearson(&x, &y).unwrap();
        assert!(r > 0.6 && p > 0.0 && p < 1e-100, "r {r} p {p}");
    }

    #[test]
    fn exact_line() {
        let f = fit_curve(
            &[1.0, 2.0, 3.0, 4.0],
            &[3.0, 5.0, 7.0, 9.0],
            FitModel::Linear,
        )
        .unwrap();
        assert_relative_eq!(f.coefficients[0], 1.0, epsilon = 1e-9);
        assert_relative_eq!(f.coefficients[1], 2.0, epsilon = 1e-9);
        assert_relative_eq!(f.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_data_has_zero_slope() {
        let f = fit_curve(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0], FitModel::Linear).unwrap();
        assert!(f.coefficients[1].abs() < 1e-9);
        assert_eq!(f.r_squared, 1.0);
    }

    #[test]
    fn linear_fit_against_normal_equations() {
        let x = [1.0, 2.0, 3.0];
        let y = [2.1, 3.9, 6.2];
        // closed form: slope = Sxy / Sxx, intercept = my - slope * mx
        let (mx, my) = (2.0, 12.2 / 3.0);
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
        let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
        let slope = sxy / sxx;
        assert_relative_eq!(slope, 2.05, epsilon = 1e-12);
        let f = fit_curve(&x, &y, FitModel::Linear).unwrap();
        assert_relative_eq!(f.coefficients[1], slope, epsilon = 1e-9);
        assert_relative_eq!(f.coefficients[0], my - slope * mx, epsilon = 1e-9);
    }

    #[test]
    fn quadratic_recovers_parabola() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 0.5 + 0.25 * v + 3.0 * v * v).collect();
        let f = fit_curve(&x, &y, FitModel::Quadratic).unwrap();
        assert_relative_eq!(f.coefficients[2], 3.0, epsilon = 1e-8);
        assert_relative_eq!(f.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_design() {
        assert!(fit_curve(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0], FitModel::Linear).is_err());
        assert!(fit_curve(&[1.0, 2.0], &[1.0, 2.0], FitModel::Linear).is_err());
    }
}
