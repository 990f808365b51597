//! Experiment suite: sparsity sweeps, corners, scalability, tile shapes,
//! trained-model evaluation and the balance/sparsity study.
//!
//! Each experiment returns an [`Outcome`] holding CSV tables, SVG plots, a
//! JSON summary and any invariant violations found while running. Nothing
//! touches the filesystem until [`emit_report`] is called.

mod balance;
mod datasets;
mod hardware;
pub mod plot;
mod report;
pub mod table;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::energy::{Corner, EnergyParams};
use crate::engine::{simulate, SimReport, Strategy, TileConfig};
use crate::error::{Error, Result};
use crate::reorder::feature_reorder;
use crate::synthetic::{generate, random_queries, SparsitySpec};

pub use balance::{balance_correlation, random_corpus, BalanceRecord};
pub use datasets::{dataset_eval, dataset_tile, load_bundle, DatasetBundle, Metrics, Split};
pub use hardware::{corner_analysis, heatmap_classes, scalability, sweep_sparsity, tile_shapes};
pub use report::emit_report;
pub use table::{read_sim_csv, read_sim_csv_file, CsvRecord, Table, TableRows, CSV_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Sweep,
    Corner,
    Scale,
    Tiles,
    Datasets,
    Balance,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Corner => "corner",
            ExperimentKind::Scale => "scale",
            ExperimentKind::Tiles => "tiles",
            ExperimentKind::Datasets => "datasets",
            ExperimentKind::Balance => "balance",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(Value::String(s.to_ascii_lowercase())).map_err(|_| {
            Error::InvalidArgument(format!(
                "unknown experiment kind {s:?} (expected sweep, corner, scale, tiles, datasets or balance)"
            ))
        })
    }
}

/// Grid heatmap settings for the before/after-reordering figures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatmapSpec {
    pub rows: usize,
    pub cols: usize,
    pub lambda: f64,
    pub mu: f64,
    pub seed: u64,
    pub tile_rows: usize,
    pub tile_cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub rows: usize,
    pub cols: usize,
    pub tile_rows: usize,
    pub tile_cols: usize,
    pub lambdas: Vec<f64>,
    pub mu: f64,
    pub seeds: Vec<u64>,
    pub queries: usize,
    pub strategies: Vec<Strategy>,
    pub corners: Vec<Corner>,
    /// `[rows, cols]` per array size (scale).
    pub sizes: Vec<[usize; 2]>,
    /// `[tile_rows, tile_cols]` per tile shape (tiles).
    pub tiles: Vec<[usize; 2]>,
    pub datasets: Vec<String>,
    pub data_dir: PathBuf,
    pub levels: u32,
    pub corpus_size: usize,
    pub max_depth: usize,
    pub n_features: usize,
    /// Directory of tree JSON files to use instead of generated trees.
    pub corpus_dir: Option<PathBuf>,
    pub heatmap: Option<HeatmapSpec>,
    pub calibration: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl ExperimentSpec {
    /// Desk-scale defaults mirroring the reference setups for each kind.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let lambdas = match kind {
            ExperimentKind::Sweep => (1..=9).map(|i| f64::from(i) / 10.0).collect(),
            _ => vec![0.7],
        };
        let seeds = match kind {
            ExperimentKind::Tiles => (1..=20).collect(),
            _ => vec![1, 2, 3],
        };
        let (tile_rows, tile_cols) = match kind {
            ExperimentKind::Scale => (40, 24),
            _ => (24, 48),
        };
        ExperimentSpec {
            kind,
            rows: 240,
            cols: 320,
            tile_rows,
            tile_cols,
            lambdas,
            mu: 0.0,
            seeds,
            queries: 1,
            strategies: Strategy::ALL.to_vec(),
            corners: Corner::ALL.to_vec(),
            sizes: vec![[160, 120], [320, 240], [480, 360], [640, 480]],
            tiles: vec![[24, 48], [48, 24]],
            datasets: vec!["iris".into(), "breast_cancer".into(), "digits".into()],
            data_dir: PathBuf::from("data"),
            levels: 256,
            corpus_size: 500,
            max_depth: 10,
            n_features: 5,
            corpus_dir: None,
            heatmap: (kind == ExperimentKind::Sweep).then_some(HeatmapSpec {
                rows: 160,
                cols: 160,
                lambda: 0.6,
                mu: 0.0,
                seed: 1,
                tile_rows: 24,
                tile_cols: 48,
            }),
            calibration: None,
            output_dir: PathBuf::from("out").join(kind.as_str()),
        }
    }

    /// Overlays a JSON config object on the defaults of its `kind`.
    pub fn from_json_value(config: &Value) -> Result<Self> {
        let obj = config
            .as_object()
            .ok_or_else(|| Error::Schema("experiment config: expected a JSON object".into()))?;
        let kind: ExperimentKind = obj
            .get("kind")
            .ok_or_else(|| Error::Schema("kind: missing".into()))
            .and_then(|k| {
                serde_json::from_value(k.clone())
                    .map_err(|_| Error::Schema(format!("kind: unknown experiment kind {k}")))
            })?;
        Self::defaults(kind).merged(config)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::from_json_value(&serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    /// Returns a copy with every key of `overrides` replaced.
    pub fn merged(&self, overrides: &Value) -> Result<Self> {
        let mut base = serde_json::to_value(self)?;
        if let (Some(base), Some(over)) = (base.as_object_mut(), overrides.as_object()) {
            for (k, v) in over {
                base.insert(k.clone(), v.clone());
            }
        }
        let spec: ExperimentSpec = serde_json::from_value(base)
            .map_err(|e| Error::Schema(format!("experiment config: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.seeds.is_empty() {
            return bad("seeds: need at least one seed".into());
        }
        if self.queries == 0 {
            return bad("queries: must be at least 1".into());
        }
        if self.rows == 0 || self.cols == 0 || self.tile_rows == 0 || self.tile_cols == 0 {
            return bad("array and tile dimensions must be positive".into());
        }
        if self.strategies.is_empty() {
            return bad("strategies: need at least one strategy".into());
        }
        if let Some(l) = self.lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return bad(format!("lambdas: {l} is outside [0, 1]"));
        }
        match self.kind {
            ExperimentKind::Sweep | ExperimentKind::Corner | ExperimentKind::Tiles
                if self.lambdas.is_empty() =>
            {
                bad("lambdas: need at least one value".into())
            }
            ExperimentKind::Corner if self.corners.is_empty() => {
                bad("corners: need at least one corner".into())
            }
            ExperimentKind::Scale if self.sizes.len() < 4 => bad(format!(
                "sizes: need at least 4 sizes, got {}",
                self.sizes.len()
            )),
            ExperimentKind::Scale if self.lambdas.len() != 1 => {
                bad("lambdas: scale runs at exactly one lambda".into())
            }
            ExperimentKind::Tiles if self.tiles.is_empty() => {
                bad("tiles: need at least one tile shape".into())
            }
            ExperimentKind::Datasets if self.datasets.is_empty() => {
                bad("datasets: need at least one dataset".into())
            }
            ExperimentKind::Balance if self.corpus_dir.is_none() && self.corpus_size < 30 => {
                bad(format!(
                    "corpus_size: need at least 30 trees, got {}",
                    self.corpus_size
                ))
            }
            _ => Ok(()),
        }
    }

    pub fn tile(&self) -> TileConfig {
        TileConfig {
            tile_rows: self.tile_rows,
            tile_cols: self.tile_cols,
        }
    }

    /// Calibration from the configured path, or the bundled default.
    pub fn energy_params(&self) -> Result<EnergyParams> {
        match &self.calibration {
            Some(path) => EnergyParams::load(path),
            None => Ok(EnergyParams::default_calibration()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub file_name: String,
    pub svg: String,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub kind: ExperimentKind,
    pub tables: Vec<Table>,
    pub plots: Vec<Plot>,
    pub summary: Value,
    /// Invariant violations detected while running; empty on success.
    pub violations: Vec<String>,
}

impl Outcome {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// Runs the experiment named by `spec.kind`.
pub fn run(spec: &ExperimentSpec, params: &EnergyParams) -> Result<Outcome> {
    spec.validate()?;
    match spec.kind {
        ExperimentKind::Sweep => sweep_sparsity(spec, params),
        ExperimentKind::Corner => corner_analysis(spec, params),
        ExperimentKind::Scale => scalability(spec, params),
        ExperimentKind::Tiles => tile_shapes(spec, params),
        ExperimentKind::Datasets => dataset_eval(spec, params),
        ExperimentKind::Balance => balance_correlation(spec),
    }
}

/// All strategies on one synthetic array.
#[derive(Debug, Clone)]
pub struct Trial {
    pub lambda: f64,
    pub seed: u64,
    pub sparsity: f64,
    /// One report per requested strategy, in request order.
    pub reports: Vec<SimReport>,
    pub violations: Vec<String>,
}

impl Trial {
    pub fn report(&self, strategy: Strategy) -> Option<&SimReport> {
        self.reports.iter().find(|r| r.strategy == strategy)
    }
}

pub(crate) const QUERY_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Generates a Gaussian-sparsity array, reorders it once, and runs every
/// strategy on the reordered layout with the same column-permuted queries.
///
/// Matched rows are mapped back to original row indices and checked against
/// the brute-force row matcher; work dominance is checked on the spot.
#[allow(clippy::too_many_arguments)]
pub fn run_trial(
    dims: (usize, usize),
    tiles: TileConfig,
    lambda: f64,
    mu: f64,
    seed: u64,
    n_queries: usize,
    strategies: &[Strategy],
    params: &EnergyParams,
) -> Result<Trial> {
    let array = generate(&SparsitySpec::new(dims.0, dims.1, lambda, mu, seed))?;
    let queries = random_queries(&array, n_queries, seed ^ QUERY_SEED_SALT);
    let oracle: Vec<Vec<usize>> = queries
        .iter()
        .map(|q| array.matching_rows(q))
        .collect::<Result<_>>()?;
    let (layout, perm) = feature_reorder(&array);
    let permuted: Vec<Vec<f64>> = queries
        .iter()
        .map(|q| perm.permute_query(q))
        .collect::<Result<_>>()?;

    let mut violations = Vec::new();
    let mut reports = Vec::with_capacity(strategies.len());
    for &strategy in strategies {
        let mut report = simulate(&layout, tiles, &permuted, strategy, params)?.with_lambda(lambda);
        for (qi, rows) in report.matched_rows.iter_mut().enumerate() {
            *rows = perm.map_back(rows)?;
            if *rows != oracle[qi] {
                violations.push(format!(
                    "{strategy} at lambda {lambda} seed {seed} query {qi}: matched {rows:?}, oracle {:?}",
                    oracle[qi]
                ));
            }
        }
        reports.push(report);
    }
    violations.extend(dominance_violations(&reports));
    Ok(Trial {
        lambda,
        seed,
        sparsity: array.sparsity(),
        reports,
        violations,
    })
}

/// Checks `MonoSparse <= min(FR, Mono) <= Raw` and `FR <= Raw` for cells and
/// energy among whichever strategies are present.
pub fn dominance_violations(reports: &[SimReport]) -> Vec<String> {
    let find = |s: Strategy| reports.iter().find(|r| r.strategy == s);
    let pairs = [
        (Strategy::MonoSparse, Strategy::FeatureReorder),
        (Strategy::MonoSparse, Strategy::MonotonicOnly),
        (Strategy::FeatureReorder, Strategy::Raw),
        (Strategy::MonotonicOnly, Strategy::Raw),
        (Strategy::MonoSparse, Strategy::Raw),
    ];
    let mut out = Vec::new();
    for (lo, hi) in pairs {
        if let (Some(a), Some(b)) = (find(lo), find(hi)) {
            if a.op_counts.cells_energized > b.op_counts.cells_energized {
                out.push(format!(
                    "cells_energized({lo}) = {} > cells_energized({hi}) = {}",
                    a.op_counts.cells_energized, b.op_counts.cells_energized
                ));
            }
            if a.total_energy_uj > b.total_energy_uj {
                out.push(format!(
                    "energy({lo}) = {} > energy({hi}) = {}",
                    a.total_energy_uj, b.total_energy_uj
                ));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn config_overlays_kind_defaults() {
        let spec =
            ExperimentSpec::from_json_value(&json!({"kind": "scale", "seeds": [7]})).unwrap();
        assert_eq!(spec.tile(), TileConfig::new(40, 24).unwrap());
        assert_eq!(spec.seeds, vec![7]);
        assert_eq!(spec.lambdas, vec![0.7]);
        let sweep = ExperimentSpec::defaults(ExperimentKind::Sweep);
        assert_eq!(sweep.lambdas.len(), 9);
        assert!(sweep.heatmap.is_some());
    }

    #[test]
    fn config_errors() {
        assert!(ExperimentSpec::from_json_value(&json!({"seeds": [1]})).is_err());
        assert!(ExperimentSpec::from_json_value(&json!({"kind": "nope"})).is_err());
        assert!(ExperimentSpec::from_json_value(&json!({"kind": "sweep", "seeds": []})).is_err());
        assert!(ExperimentSpec::from_json_value(&json!({"kind": "sweep", "bogus": 1})).is_err());
        assert!(
            ExperimentSpec::from_json_value(&json!({"kind": "scale", "sizes": [[8, 8]]})).is_err()
        );
        assert!(
            ExperimentSpec::from_json_value(&json!({"kind": "balance", "corpus_size": 10}))
                .is_err()
        );
        assert!(
            ExperimentSpec::from_json_value(&json!({"kind": "sweep", "lambdas": [1.5]})).is_err()
        );
    }

    #[test]
    fn trial_is_consistent() {
        let t = run_trial(
            (30, 40),
            TileConfig::new(6, 8).unwrap(),
            0.5,
            0.0,
            4,
            3,
            &Strategy::ALL,
            &EnergyParams::default_calibration(),
        )
        .unwrap();
        assert!(t.violations.is_empty(), "{:?}", t.violations);
        assert_eq!(t.reports.len(), 4);
        let first = &t.reports[0].matched_rows;
        assert!(t.reports.iter().all(|r| &r.matched_rows == first));
    }
}
