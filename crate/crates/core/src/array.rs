//! CAM arrays of interval cells.

use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// One CAM cell: either a stored `(lo, hi]` range or a don't-care.
///
/// Empty, "X", inactive and deactivated cells are all represented by
/// [`Cell::DontCare`]: they match every input and need not be loaded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    DontCare,
    Active { lo: f64, hi: f64 },
}

impl Cell {
    pub fn is_active(&self) -> bool {
        matches!(self, Cell::Active { .. })
    }

    /// `lo < value <= hi`; with `closed_floor`, a bound sitting exactly on
    /// grid level 0 is inclusive.
    #[inline]
    pub fn matches(&self, value: f64, closed_floor: bool) -> bool {
        match *self {
            Cell::DontCare => true,
            Cell::Active { lo, hi } => {
                value <= hi && (value > lo || (closed_floor && lo == 0.0 && value >= 0.0))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CamArray {
    n_rows: usize,
    n_cols: usize,
    cells: Vec<Cell>,
    row_labels: Vec<u32>,
    feature_bounds: Vec<(f64, f64)>,
    levels: Option<u32>,
}

impl CamArray {
    /// `cells` is row-major and must hold exactly `n_rows * n_cols` entries.
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        cells: Vec<Cell>,
        row_labels: Vec<u32>,
        feature_bounds: Vec<(f64, f64)>,
    ) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "array dimensions must be positive, got {n_rows}x{n_cols}"
            )));
        }
        check_len(n_rows * n_cols, cells.len())?;
        check_len(n_rows, row_labels.len())?;
        check_len(n_cols, feature_bounds.len())?;
        for (i, cell) in cells.iter().enumerate() {
            if let Cell::Active { lo, hi } = *cell {
                if lo.is_nan() || hi.is_nan() || lo > hi {
                    return Err(Error::InvalidArgument(format!(
                        "cell ({}, {}) has an invalid interval ({lo}, {hi}]",
                        i / n_cols,
                        i % n_cols
                    )));
                }
            }
        }
        Ok(CamArray {
            n_rows,
            n_cols,
            cells,
            row_labels,
            feature_bounds,
            levels: None,
        })
    }

    pub(crate) fn with_levels(mut self, levels: u32) -> Self {
        self.levels = Some(levels);
        self
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    #[inline]
    pub fn cell(&self, row: usize, col: usize) -> &Cell {
        &self.cells[row * self.n_cols + col]
    }

    pub fn row(&self, row: usize) -> &[Cell] {
        &self.cells[row * self.n_cols..(row + 1) * self.n_cols]
    }

    pub fn row_labels(&self) -> &[u32] {
        &self.row_labels
    }

    pub fn feature_bounds(&self) -> &[(f64, f64)] {
        &self.feature_bounds
    }

    /// Number of conductance levels if the array has been quantized.
    pub fn levels(&self) -> Option<u32> {
        self.levels
    }

    pub fn is_quantized(&self) -> bool {
        self.levels.is_some()
    }

    /// Maps a query in feature units onto the array's stored coordinates.
    ///
    /// Quantized arrays live on the unit interval, so the query is scaled by
    /// the feature bounds and clamped to `[0, 1]`.
    pub fn encode_query(&self, query: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n_cols, query.len())?;
        if self.levels.is_none() {
            return Ok(query.to_vec());
        }
        Ok(query
            .iter()
            .zip(&self.feature_bounds)
            .map(|(&x, &(min, max))| ((x - min) / (max - min)).clamp(0.0, 1.0))
            .collect())
    }

    /// Matches an already-encoded query against one row.
    #[inline]
    pub(crate) fn row_matches_encoded(&self, row: usize, encoded: &[f64]) -> bool {
        let closed = self.levels.is_some();
        self.row(row)
            .iter()
            .zip(encoded)
            .all(|(c, &v)| c.matches(v, closed))
    }

    #[inline]
    pub(crate) fn cell_matches_encoded(&self, row: usize, col: usize, value: f64) -> bool {
        self.cell(row, col).matches(value, self.levels.is_some())
    }

    /// Brute-force reference match of `query` (feature units) against `row`.
    pub fn match_row(&self, row: usize, query: &[f64]) -> Result<bool> {
        if row >= self.n_rows {
            return Err(Error::IndexOutOfRange {
                index: row,
                len: self.n_rows,
            });
        }
        let encoded = self.encode_query(query)?;
        Ok(self.row_matches_encoded(row, &encoded))
    }

    /// All rows matching `query`, ascending.
    pub fn matching_rows(&self, query: &[f64]) -> Result<Vec<usize>> {
        let encoded = self.encode_query(query)?;
        Ok((0..self.n_rows)
            .filter(|&r| self.row_matches_encoded(r, &encoded))
            .collect())
    }

    /// Label of the lowest-indexed matching row.
    pub fn classify(&self, query: &[f64]) -> Result<Option<u32>> {
        let encoded = self.encode_query(query)?;
        Ok((0..self.n_rows)
            .find(|&r| self.row_matches_encoded(r, &encoded))
            .map(|r| self.row_labels[r]))
    }

    pub fn dontcare_count(&self) -> usize {
        self.cells.iter().filter(|c| !c.is_active()).count()
    }

    /// Fraction of don't-care cells.
    pub fn sparsity(&self) -> f64 {
        self.dontcare_count() as f64 / self.cells.len() as f64
    }

    pub fn row_activity(&self) -> Vec<usize> {
        (0..self.n_rows)
            .map(|r| self.row(r).iter().filter(|c| c.is_active()).count())
            .collect()
    }

    pub fn col_activity(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_cols];
        for (i, c) in self.cells.iter().enumerate() {
            if c.is_active() {
                counts[i % self.n_cols] += 1;
            }
        }
        counts
    }

    /// Copy with `new[r][c] = old[row_perm[r]][col_perm[c]]`.
    pub(crate) fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> CamArray {
        let mut cells = Vec::with_capacity(self.cells.len());
        for &r in row_perm {
            for &c in col_perm {
                cells.push(*self.cell(r, c));
            }
        }
        CamArray {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            cells,
            row_labels: row_perm.iter().map(|&r| self.row_labels[r]).collect(),
            feature_bounds: col_perm.iter().map(|&c| self.feature_bounds[c]).collect(),
            levels: self.levels,
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&ArrayDoc::from(self)).expect("array JSON is always valid")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: ArrayDoc = serde_json::from_str(text)?;
        doc.try_into()
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, actual })
    }
}

/// A bound that serializes `±∞` as the strings `"inf"` / `"-inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Bound(f64);

impl Serialize for Bound {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else if self.0 == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Bound {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct BoundVisitor;
        impl Visitor<'_> for BoundVisitor {
            type Value = Bound;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or one of \"inf\", \"-inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Bound, E> {
                Ok(Bound(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Bound, E> {
                Ok(Bound(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Bound, E> {
                Ok(Bound(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Bound, E> {
                match v {
                    "inf" => Ok(Bound(f64::INFINITY)),
                    "-inf" => Ok(Bound(f64::NEG_INFINITY)),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }
        d.deserialize_any(BoundVisitor)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind")]
enum CellDoc {
    #[serde(rename = "x")]
    DontCare,
    #[serde(rename = "a")]
    Active { lo: Bound, hi: Bound },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArrayDoc {
    n_rows: usize,
    n_cols: usize,
    row_labels: Vec<u32>,
    feature_bounds: Vec<[f64; 2]>,
    cells: Vec<Vec<CellDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    levels: Option<u32>,
}

impl From<&CamArray> for ArrayDoc {
    fn from(a: &CamArray) -> Self {
        ArrayDoc {
            n_rows: a.n_rows,
            n_cols: a.n_cols,
            row_labels: a.row_labels.clone(),
            feature_bounds: a.feature_bounds.iter().map(|&(l, h)| [l, h]).collect(),
            cells: (0..a.n_rows)
                .map(|r| {
                    a.row(r)
                        .iter()
                        .map(|c| match *c {
                            Cell::DontCare => CellDoc::DontCare,
                            Cell::Active { lo, hi } => CellDoc::Active {
                                lo: Bound(lo),
                                hi: Bound(hi),
                            },
                        })
                        .collect()
                })
                .collect(),
            levels: a.levels,
        }
    }
}

impl TryFrom<ArrayDoc> for CamArray {
    type Error = Error;

    fn try_from(doc: ArrayDoc) -> Result<Self> {
        if doc.cells.len() != doc.n_rows {
            return Err(Error::Schema(format!(
                "cells: expected {} rows, got {}",
                doc.n_rows,
                doc.cells.len()
            )));
        }
        let mut cells = Vec::with_capacity(doc.n_rows * doc.n_cols);
        for (r, row) in doc.cells.into_iter().enumerate() {
            if row.len() != doc.n_cols {
                return Err(Error::Schema(format!(
                    "cells[{r}]: expected {} cells, got {}",
                    doc.n_cols,
                    row.len()
                )));
            }
            cells.extend(row.into_iter().map(|c| match c {
                CellDoc::DontCare => Cell::DontCare,
                CellDoc::Active { lo, hi } => Cell::Active { lo: lo.0, hi: hi.0 },
            }));
        }
        let array = CamArray::new(
            doc.n_rows,
            doc.n_cols,
            cells,
            doc.row_labels,
            doc.feature_bounds
                .into_iter()
                .map(|[l, h]| (l, h))
                .collect(),
        )?;
        Ok(match doc.levels {
            Some(l) => array.with_levels(l),
            None => array,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stump_array(t: f64, n_cols: usize) -> CamArray {
        let mut cells = vec![Cell::DontCare; 2 * n_cols];
        cells[0] = Cell::Active {
            lo: f64::NEG_INFINITY,
            hi: t,
        };
        cells[n_cols] = Cell::Active {
            lo: t,
            hi: f64::INFINITY,
        };
        CamArray::new(2, n_cols, cells, vec![0, 1], vec![(0.0, 1.0); n_cols]).unwrap()
    }

    #[test]
    fn dontcare_row_matches_anything() {
        let a = CamArray::new(1, 3, vec![Cell::DontCare; 3], vec![0], vec![(0.0, 1.0); 3]).unwrap();
        assert!(a.match_row(0, &[-1e9, 0.5, 1e9]).unwrap());
        assert_eq!(a.sparsity(), 1.0);
    }

    #[test]
    fn boundary_belongs_to_lower_row() {
        let a = stump_array(0.25, 4);
        let q = [0.25, 0.0, 0.0, 0.0];
        assert!(a.match_row(0, &q).unwrap());
        assert!(!a.match_row(1, &q).unwrap());
        assert_eq!(a.sparsity(), 0.75);
    }

    #[test]
    fn match_row_checks_arguments() {
        let a = stump_array(0.5, 2);
        assert!(matches!(
            a.match_row(2, &[0.0, 0.0]),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            a.match_row(0, &[0.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn json_round_trip_with_infinities() {
        let a = stump_array(0.5, 3);
        let text = a.to_json_string();
        assert!(text.contains("\"-inf\""));
        assert!(text.contains("\"inf\""));
        assert!(text.contains("\"kind\": \"x\""));
        assert_eq!(CamArray::from_json_str(&text).unwrap(), a);
    }

    #[test]
    fn rejects_ragged_cells() {
        let text = r#"{"n_rows":1,"n_cols":2,"row_labels":[0],"feature_bounds":[[0,1],[0,1]],
            "cells":[[{"kind":"x"}]]}"#;
        assert!(matches!(
            CamArray::from_json_str(text),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn activity_counts() {
        let a = stump_array(0.5, 3);
        assert_eq!(a.row_activity(), vec![1, 1]);
        assert_eq!(a.col_activity(), vec![2, 0, 0]);
    }
}
