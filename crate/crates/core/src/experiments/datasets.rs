//! Evaluation of exporter-trained trees on their held-out splits.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::compile::{compile, quantize};
use crate::energy::EnergyParams;
use crate::engine::{simulate, Strategy, TileConfig};
use crate::error::{Error, Result};
use crate::reorder::feature_reorder;
use crate::tree::TreeModel;

use super::plot::{line_chart, Chart, Series};
use super::table::{CsvRecord, Table};
use super::{dominance_violations, ExperimentKind, ExperimentSpec, Outcome, Plot};

/// Held-out samples (already scaled like the training data) and labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    #[serde(alias = "X_test", alias = "samples")]
    pub x: Vec<Vec<f64>>,
    #[serde(alias = "y_test", alias = "labels")]
    pub y: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Per-feature `[min, max]` of the scaled training data.
    pub feature_bounds: Vec<(f64, f64)>,
    #[serde(default)]
    pub train_accuracy: Option<f64>,
    #[serde(default)]
    pub test_accuracy: Option<f64>,
    /// The exporter's own prediction for each held-out sample.
    #[serde(default, alias = "test_predictions")]
    pub predictions: Option<Vec<u32>>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub split_ratio: Option<f64>,
    #[serde(default)]
    pub learner: Option<String>,
}

#[derive(Debug, Clone)]
pub struct DatasetBundle {
    pub name: String,
    pub tree: TreeModel,
    pub split: Split,
    pub metrics: Metrics,
}

fn read(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse<T: serde::de::DeserializeOwned>(path: &Path, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
}

/// Loads `<name>_tree.json`, `<name>_split.json` and `<name>_metrics.json`.
pub fn load_bundle(dir: &Path, name: &str) -> Result<DatasetBundle> {
    let file = |suffix: &str| -> PathBuf { dir.join(format!("{name}_{suffix}.json")) };
    let (tree_path, split_path, metrics_path) = (file("tree"), file("split"), file("metrics"));
    let tree = TreeModel::from_json_str(&read(&tree_path)?)?;
    let split: Split = parse(&split_path, &read(&split_path)?)?;
    let metrics: Metrics = parse(&metrics_path, &read(&metrics_path)?)?;
    if split.x.len() != split.y.len() {
        return Err(Error::LengthMismatch {
            expected: split.x.len(),
            actual: split.y.len(),
        });
    }
    if split.x.is_empty() {
        return Err(Error::Schema(format!(
            "{}: no samples",
            split_path.display()
        )));
    }
    if let Some(p) = &metrics.predictions {
        if p.len() != split.y.len() {
            return Err(Error::LengthMismatch {
                expected: split.y.len(),
                actual: p.len(),
            });
        }
    }
    Ok(DatasetBundle {
        name: name.to_string(),
        tree,
        split,
        metrics,
    })
}

/// Tile shape used for each reference dataset; others use the configured tile.
pub fn dataset_tile(name: &str, fallback: TileConfig) -> TileConfig {
    match name {
        "iris" => TileConfig {
            tile_rows: 2,
            tile_cols: 2,
        },
        "breast_cancer" => TileConfig {
            tile_rows: 5,
            tile_cols: 4,
        },
        "digits" => TileConfig {
            tile_rows: 8,
            tile_cols: 16,
        },
        _ => fallback,
    }
}

pub fn dataset_eval(spec: &ExperimentSpec, params: &EnergyParams) -> Result<Outcome> {
    let name = "dataset_eval";
    let mut records = Vec::new();
    let mut violations = Vec::new();
    let mut per_dataset = Vec::new();
    for ds in &spec.datasets {
        let b = load_bundle(&spec.data_dir, ds)?;
        let array = compile(&b.tree, &b.metrics.feature_bounds)?;
        let sparsity = array.sparsity();
        let quantized = quantize(&array, spec.levels)?;
        let n = b.split.y.len() as f64;

        let mut tree_hits = 0usize;
        let mut cam_hits = 0usize;
        let mut agree = 0usize;
        for (i, (x, &y)) in b.split.x.iter().zip(&b.split.y).enumerate() {
            let tree_pred = b.tree.predict(x)?;
            tree_hits += usize::from(tree_pred == y);
            cam_hits += usize::from(quantized.classify(x)? == Some(y));
            if let Some(p) = &b.metrics.predictions {
                agree += usize::from(p[i] == tree_pred);
            }
        }
        if let Some(p) = &b.metrics.predictions {
            if agree != p.len() {
                violations.push(format!(
                    "{ds}: tree predictions disagree with the exporter on {} of {} samples",
                    p.len() - agree,
                    p.len()
                ));
            }
        }
        let accuracy = cam_hits as f64 / n;

        let oracle: Vec<Vec<usize>> = b
            .split
            .x
            .iter()
            .map(|x| quantized.matching_rows(x))
            .collect::<Result<_>>()?;
        let (layout, perm) = feature_reorder(&quantized);
        let queries: Vec<Vec<f64>> = b
            .split
            .x
            .iter()
            .map(|x| perm.permute_query(x))
            .collect::<Result<_>>()?;
        let tiles = dataset_tile(ds, spec.tile());
        let mut reports = Vec::new();
        for &s in &spec.strategies {
            let mut r = simulate(&layout, tiles, &queries, s, params)?;
            for (qi, rows) in r.matched_rows.iter_mut().enumerate() {
                *rows = perm.map_back(rows)?;
                if *rows != oracle[qi] {
                    violations.push(format!(
                        "{ds}: {s} disagrees with the row oracle on sample {qi}"
                    ));
                }
            }
            records.push(CsvRecord {
                experiment: format!("{name}:{ds}"),
                accuracy: Some(accuracy),
                sparsity: Some(sparsity),
                ..CsvRecord::from_report(name, &r, None)
            });
            reports.push(r);
        }
        violations.extend(
            dominance_violations(&reports)
                .into_iter()
                .map(|v| format!("{ds}: {v}")),
        );
        per_dataset.push(json!({
            "dataset": ds,
            "rows": array.n_rows(),
            "cols": array.n_cols(),
            "tile": tiles.to_string(),
            "samples": b.split.y.len(),
            "accuracy": accuracy,
            "tree_accuracy": tree_hits as f64 / n,
            "exporter_test_accuracy": b.metrics.test_accuracy,
            "exporter_agreement": b.metrics.predictions.as_ref().map(|p| agree as f64 / p.len() as f64),
            "sparsity": sparsity,
            "learner": b.metrics.learner,
            "energy_uJ": reports
                .iter()
                .map(|r| (r.strategy.to_string(), json!(r.total_energy_uj)))
                .collect::<serde_json::Map<String, Value>>(),
        }));
    }

    let mut chart = Chart::new("Energy per dataset", "dataset", "energy (uJ)");
    chart.log_y = true;
    chart.x_ticks = Some(
        spec.datasets
            .iter()
            .enumerate()
            .map(|(i, d)| (i as f64, d.clone()))
            .collect(),
    );
    let series: Vec<Series> = spec
        .strategies
        .iter()
        .map(|&s: &Strategy| Series {
            label: s.to_string(),
            points: records
                .iter()
                .filter(|r| r.strategy == Some(s))
                .enumerate()
                .filter_map(|(i, r)| r.energy_uj.map(|e| (i as f64, e)))
                .collect(),
        })
        .collect();

    Ok(Outcome {
        kind: ExperimentKind::Datasets,
        tables: vec![Table::sim(name, records)],
        plots: vec![Plot {
            file_name: "energy_by_dataset.svg".into(),
            svg: line_chart(&chart, &series),
        }],
        summary: json!({"experiment": name, "levels": spec.levels, "per_dataset": per_dataset}),
        violations,
    })
}
