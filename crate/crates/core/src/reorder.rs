//! Feature Reordering: sort rows and columns by activity so active cells
//! gather in the bottom-left corner.

use serde::{Deserialize, Serialize};

use crate::array::CamArray;
use crate::error::{Error, Result};

/// Permutations mapping positions in the reordered array back to original
/// indices: `row_perm[new] = old`, `col_perm[new] = old`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reordering {
    pub row_perm: Vec<usize>,
    pub col_perm: Vec<usize>,
}

impl Reordering {
    pub fn identity(n_rows: usize, n_cols: usize) -> Self {
        Reordering {
            row_perm: (0..n_rows).collect(),
            col_perm: (0..n_cols).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, perm) in [("row_perm", &self.row_perm), ("col_perm", &self.col_perm)] {
            let mut seen = vec![false; perm.len()];
            for &i in perm {
                if i >= perm.len() || std::mem::replace(&mut seen[i], true) {
                    return Err(Error::Schema(format!("{name}: not a permutation")));
                }
            }
        }
        Ok(())
    }

    /// Rearranges an original-order query into the reordered column order.
    pub fn permute_query(&self, query: &[f64]) -> Result<Vec<f64>> {
        if query.len() != self.col_perm.len() {
            return Err(Error::LengthMismatch {
                expected: self.col_perm.len(),
                actual: query.len(),
            });
        }
        Ok(self.col_perm.iter().map(|&c| query[c]).collect())
    }

    /// Original row indices of reordered rows, sorted ascending.
    pub fn map_back(&self, rows: &[usize]) -> Result<Vec<usize>> {
        let mut out = rows
            .iter()
            .map(|&r| {
                self.row_perm.get(r).copied().ok_or(Error::IndexOutOfRange {
                    index: r,
                    len: self.row_perm.len(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.sort_unstable();
        Ok(out)
    }

    /// Reordered positions of original rows, sorted ascending.
    pub fn map_forward(&self, rows: &[usize]) -> Result<Vec<usize>> {
        let mut inverse = vec![0; self.row_perm.len()];
        for (new, &old) in self.row_perm.iter().enumerate() {
            inverse[old] = new;
        }
        let mut out = rows
            .iter()
            .map(|&r| {
                inverse.get(r).copied().ok_or(Error::IndexOutOfRange {
                    index: r,
                    len: inverse.len(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.sort_unstable();
        Ok(out)
    }
}

/// Columns by active count descending left to right; rows by active count
/// ascending top to bottom, so the busiest row ends up last. Ties keep the
/// original order.
pub fn feature_reorder(array: &CamArray) -> (CamArray, Reordering) {
    let cols = array.col_activity();
    let rows = array.row_activity();

    let mut col_perm: Vec<usize> = (0..array.n_cols()).collect();
    col_perm.sort_by_key(|&c| (std::cmp::Reverse(cols[c]), c));
    let mut row_perm: Vec<usize> = (0..array.n_rows()).collect();
    row_perm.sort_by_key(|&r| (rows[r], r));

    let reordered = array.permuted(&row_perm, &col_perm);
    (reordered, Reordering { row_perm, col_perm })
}
