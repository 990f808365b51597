//! Correlation between tree balance and compiled-array sparsity.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::compile::compile;
use crate::error::{Error, Result};
use crate::stats::pearson;
use crate::tree::{random_tree, TreeModel};

use super::plot::{line_chart, Chart, Series};
use super::table::{Table, TableRows};
use super::{ExperimentKind, ExperimentSpec, Outcome, Plot};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceRecord {
    /// Generator seed or source file name.
    pub tree: String,
    /// Empty for trees loaded from disk.
    pub balance_bias: Option<f64>,
    pub balance: usize,
    pub sparsity: f64,
    pub n_leaves: usize,
    pub n_nodes: usize,
}

fn record(tree: String, bias: Option<f64>, model: &TreeModel) -> Result<BalanceRecord> {
    let bounds = vec![(0.0, 1.0); model.n_features()];
    let array = compile(model, &bounds)?;
    Ok(BalanceRecord {
        tree,
        balance_bias: bias,
        balance: model.balance(),
        sparsity: array.sparsity(),
        n_leaves: model.n_leaves(),
        n_nodes: model.nodes().len(),
    })
}

fn load_corpus(dir: &Path) -> Result<Vec<BalanceRecord>> {
    if !dir.is_dir() {
        return Err(Error::MissingFile(dir.to_path_buf()));
    }
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            let model = TreeModel::from_json_str(&text)
                .map_err(|e| Error::Schema(format!("{}: {e}", p.display())))?;
            let name = p
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            record(name, None, &model)
        })
        .collect()
}

/// Random trees with balance bias drawn uniformly from [0, 1].
pub fn random_corpus(
    n: usize,
    n_features: usize,
    max_depth: usize,
    seed: u64,
) -> Result<Vec<BalanceRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let bias: f64 = rng.random();
            let tree_seed: u64 = rng.random();
            record(
                tree_seed.to_string(),
                Some(bias),
                &random_tree(n_features, max_depth, bias, tree_seed),
            )
        })
        .collect()
}

pub fn balance_correlation(spec: &ExperimentSpec) -> Result<Outcome> {
    let name = "balance_correlation";
    let records = match &spec.corpus_dir {
        Some(dir) => load_corpus(dir)?,
        None => random_corpus(
            spec.corpus_size,
            spec.n_features,
            spec.max_depth,
            spec.seeds[0],
        )?,
    };
    if records.len() < 30 {
        return Err(Error::InvalidArgument(format!(
            "balance study needs at least 30 trees, got {}",
            records.len()
        )));
    }
    let x: Vec<f64> = records.iter().map(|r| r.balance as f64).collect();
    let y: Vec<f64> = records.iter().map(|r| r.sparsity).collect();
    let (r, p) = pearson(&x, &y)?;

    let mut chart = Chart::new(
        &format!("Balance vs sparsity (r = {r:.3})"),
        "|left - right| nodes",
        "sparsity",
    );
    chart.scatter = true;
    let series = [Series {
        label: "trees".into(),
        points: x.iter().copied().zip(y.iter().copied()).collect(),
    }];

    Ok(Outcome {
        kind: ExperimentKind::Balance,
        tables: vec![Table {
            name: name.into(),
            rows: TableRows::Balance(records.clone()),
        }],
        plots: vec![Plot {
            file_name: "balance_vs_sparsity.svg".into(),
            svg: line_chart(&chart, &series),
        }],
        summary: json!({
            "experiment": name,
            "n": records.len(),
            "r": r,
            "p": p,
            "source": spec.corpus_dir.as_ref().map_or("random_tree".to_string(), |d| d.display().to_string()),
            "max_depth": spec.max_depth,
            "n_features": spec.n_features,
        }),
        violations: Vec::new(),
    })
}
