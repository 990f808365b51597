//! Synthetic arrays with controlled sparsity.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as StdNormal};

use crate::array::{CamArray, Cell};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsitySpec {
    pub lambda: f64,
    #[serde(default)]
    pub mu: f64,
    pub seed: u64,
    pub n_rows: usize,
    pub n_cols: usize,
}

impl SparsitySpec {
    pub fn new(n_rows: usize, n_cols: usize, lambda: f64, mu: f64, seed: u64) -> Self {
        SparsitySpec {
            lambda,
            mu,
            seed,
            n_rows,
            n_cols,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::InvalidArgument(format!(
                "lambda must lie in [0, 1], got {}",
                self.lambda
            )));
        }
        if !self.mu.is_finite() {
            return Err(Error::InvalidArgument("mu must be finite".into()));
        }
        check_dims(self.n_rows, self.n_cols)
    }
}

fn check_dims(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument(format!(
            "dimensions must be at least 1x1, got {rows}x{cols}"
        )));
    }
    Ok(())
}

/// Half-width of the don't-care band around the mean for a given lambda:
/// `P(|z - mu| <= w) = lambda` for `z ~ N(mu, 1)`.
pub fn dontcare_half_width(lambda: f64) -> f64 {
    if lambda >= 1.0 {
        f64::INFINITY
    } else if lambda <= 0.0 {
        0.0
    } else {
        StdNormal::standard().inverse_cdf((1.0 + lambda) / 2.0)
    }
}

fn random_interval(rng: &mut ChaCha8Rng) -> Cell {
    let a: f64 = rng.random();
    let b: f64 = rng.random();
    Cell::Active {
        lo: a.min(b),
        hi: a.max(b),
    }
}

fn round_robin_labels(n_rows: usize) -> Vec<u32> {
    (0..n_rows).map(|r| (r % 2) as u32).collect()
}

/// Samples one Gaussian draw per cell; a cell is don't-care when its draw
/// lands within [`dontcare_half_width`] of the mean, so the expected
/// don't-care fraction is `lambda`. Active cells get a random sub-interval
/// of `[0, 1]`.
pub fn generate(spec: &SparsitySpec) -> Result<CamArray> {
    spec.validate()?;
    let width = dontcare_half_width(spec.lambda);
    let normal = Normal::new(spec.mu, 1.0).expect("unit variance is valid");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let cells = (0..spec.n_rows * spec.n_cols)
        .map(|_| {
            let z = normal.sample(&mut rng);
            // strict at zero width so lambda = 0 gives a fully active array
            if (z - spec.mu).abs() <= width && width > 0.0 {
                Cell::DontCare
            } else {
                random_interval(&mut rng)
            }
        })
        .collect();
    CamArray::new(
        spec.n_rows,
        spec.n_cols,
        cells,
        round_robin_labels(spec.n_rows),
        vec![(0.0, 1.0); spec.n_cols],
    )
}

/// Places exactly `round(target * rows * cols)` don't-care cells uniformly at
/// random; the rest are active.
pub fn generate_with_empty_fraction(
    target: f64,
    n_rows: usize,
    n_cols: usize,
    seed: u64,
) -> Result<CamArray> {
    if !(0.0..=1.0).contains(&target) {
        return Err(Error::InvalidArgument(format!(
            "empty fraction must lie in [0, 1], got {target}"
        )));
    }
    check_dims(n_rows, n_cols)?;
    let total = n_rows * n_cols;
    let empty = (target * total as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_empty = vec![false; total];
    for i in sample(&mut rng, total, empty) {
        is_empty[i] = true;
    }
    let cells = is_empty
        .into_iter()
        .map(|e| {
            if e {
                Cell::DontCare
            } else {
                random_interval(&mut rng)
            }
        })
        .collect();
    CamArray::new(
        n_rows,
        n_cols,
        cells,
        round_robin_labels(n_rows),
        vec![(0.0, 1.0); n_cols],
    )
}

/// `count` queries drawn uniformly from the array's feature bounds.
pub fn random_queries(array: &CamArray, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            array
                .feature_bounds()
                .iter()
                .map(|&(lo, hi)| rng.random_range(lo..=hi))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda_extremes() {
        let dense = generate(&SparsitySpec::new(20, 30, 0.0, 0.0, 3)).unwrap();
        assert_eq!(dense.sparsity(), 0.0);
        let empty = generate(&SparsitySpec::new(20, 30, 1.0, 0.0, 3)).unwrap();
        assert_eq!(empty.sparsity(), 1.0);
    }

    #[test]
    fn half_width_matches_two_sided_mass() {
        let n = StdNormal::standard();
        for lambda in [0.1, 0.35, 0.6, 0.9] {
            let w = dontcare_half_width(lambda);
            assert!((n.cdf(w) - n.cdf(-w) - lambda).abs() < 1e-9);
        }
    }

    #[test]
    fn mean_shift_does_not_change_sparsity_law() {
        let a = generate(&SparsitySpec::new(160, 160, 0.6, 2.5, 8)).unwrap();
        assert!((a.sparsity() - 0.6).abs() < 0.02);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(generate(&SparsitySpec::new(0, 3, 0.5, 0.0, 0)).is_err());
        assert!(generate(&SparsitySpec::new(3, 3, 1.5, 0.0, 0)).is_err());
        assert!(generate_with_empty_fraction(-0.1, 3, 3, 0).is_err());
    }

    #[test]
    fn exact_empty_counts() {
        assert_eq!(
            generate_with_empty_fraction(0.95, 10, 4, 1)
                .unwrap()
                .dontcare_count(),
            38
        );
        assert_eq!(
            generate_with_empty_fraction(0.0, 10, 4, 1)
                .unwrap()
                .dontcare_count(),
            0
        );
        assert_eq!(
            generate_with_empty_fraction(0.8647, 135, 64, 1)
                .unwrap()
                .dontcare_count(),
            7471
        );
    }

    #[test]
    fn active_cells_hold_unit_subintervals() {
        let a = generate(&SparsitySpec::new(10, 10, 0.3, 0.0, 5)).unwrap();
        for c in a.cells() {
            if let Cell::Active { lo, hi } = *c {
                assert!((0.0..=1.0).contains(&lo) && lo <= hi && hi <= 1.0);
            }
        }
    }
}
