//! Tree-to-array compilation and conductance quantization.

use crate::array::{CamArray, Cell};
use crate::error::{Error, Result};
use crate::tree::{NodeKind, TreeModel};

/// Compiles one row per leaf (left-first depth-first order) and one column
/// per feature. Each cell holds the intersected `(lo, hi]` constraint along
/// the leaf's path, or don't-care when the path never tests that feature.
pub fn compile(model: &TreeModel, feature_bounds: &[(f64, f64)]) -> Result<CamArray> {
    let n_cols = model.n_features();
    if feature_bounds.len() != n_cols {
        return Err(Error::LengthMismatch {
            expected: n_cols,
            actual: feature_bounds.len(),
        });
    }
    check_bounds(feature_bounds)?;

    let mut cells = Vec::with_capacity(model.n_leaves() * n_cols);
    let mut labels = Vec::with_capacity(model.n_leaves());
    model.for_each_leaf_box(|leaf, boxes| {
        let NodeKind::Leaf { class_label } = leaf.kind else {
            unreachable!("for_each_leaf_box visits leaves only")
        };
        labels.push(class_label);
        cells.extend(boxes.iter().map(|&(lo, hi)| {
            if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
                Cell::DontCare
            } else {
                Cell::Active { lo, hi }
            }
        }));
        Ok(())
    })?;
    CamArray::new(labels.len(), n_cols, cells, labels, feature_bounds.to_vec())
}

fn check_bounds(bounds: &[(f64, f64)]) -> Result<()> {
    for (f, &(min, max)) in bounds.iter().enumerate() {
        if !min.is_finite() || !max.is_finite() || min >= max {
            return Err(Error::InvalidArgument(format!(
                "feature {f}: bounds must be finite with min < max, got [{min}, {max}]"
            )));
        }
    }
    Ok(())
}

// Values this close to a grid point (in grid units) count as on it.
const GRID_SNAP: f64 = 1e-9;

fn snap_down(x: f64, steps: f64) -> f64 {
    let scaled = x * steps;
    let nearest = scaled.round();
    let k = if (scaled - nearest).abs() < GRID_SNAP {
        nearest
    } else {
        scaled.floor()
    };
    (k / steps).clamp(0.0, 1.0)
}

fn snap_up(x: f64, steps: f64) -> f64 {
    let scaled = x * steps;
    let nearest = scaled.round();
    let k = if (scaled - nearest).abs() < GRID_SNAP {
        nearest
    } else {
        scaled.ceil()
    };
    (k / steps).clamp(0.0, 1.0)
}

/// Snaps every active interval onto `levels` evenly spaced conductance
/// levels over each feature's normalized domain, widening outward.
///
/// The result stores cells on `[0, 1]`; queries are normalized by
/// [`CamArray::encode_query`]. Infinite bounds snap to the domain ends.
pub fn quantize(array: &CamArray, levels: u32) -> Result<CamArray> {
    if levels < 2 {
        return Err(Error::InvalidArgument(format!(
            "quantization needs at least 2 levels, got {levels}"
        )));
    }
    if array.is_quantized() {
        return Err(Error::InvalidArgument("array is already quantized".into()));
    }
    check_bounds(array.feature_bounds())?;
    let steps = f64::from(levels - 1);
    let n_cols = array.n_cols();
    let cells = array
        .cells()
        .iter()
        .enumerate()
        .map(|(i, cell)| match *cell {
            Cell::DontCare => Cell::DontCare,
            Cell::Active { lo, hi } => {
                let (min, max) = array.feature_bounds()[i % n_cols];
                let span = max - min;
                let lo = if lo == f64::NEG_INFINITY {
                    0.0
                } else {
                    snap_down((lo - min) / span, steps)
                };
                let hi = if hi == f64::INFINITY {
                    1.0
                } else {
                    snap_up((hi - min) / span, steps)
                };
                Cell::Active { lo, hi }
            }
        })
        .collect();
    Ok(CamArray::new(
        array.n_rows(),
        n_cols,
        cells,
        array.row_labels().to_vec(),
        array.feature_bounds().to_vec(),
    )?
    .with_levels(levels))
}
