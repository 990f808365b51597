//! Synthetic-array experiments: sparsity sweep, corners, scalability and
//! tile shape.

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::energy::{apply_corner, EnergyParams};
use crate::engine::{energized_mask, SimReport, Strategy, TileConfig};
use crate::error::Result;
use crate::reorder::feature_reorder;
use crate::stats::{fit_curve, mean, stdev, FitModel};
use crate::synthetic::{generate, random_queries, SparsitySpec};

use super::plot::{grid_heatmap, line_chart, CellClass, Chart, Series};
use super::table::{CsvRecord, Table};
use super::{
    run_trial, ExperimentKind, ExperimentSpec, HeatmapSpec, Outcome, Plot, Trial, QUERY_SEED_SALT,
};

fn run_grid(
    spec: &ExperimentSpec,
    dims: (usize, usize),
    tiles: TileConfig,
    lambdas: &[f64],
    params: &EnergyParams,
) -> Result<Vec<Trial>> {
    TileConfig::new(tiles.tile_rows, tiles.tile_cols)?;
    let jobs: Vec<(f64, u64)> = lambdas
        .iter()
        .flat_map(|&l| spec.seeds.iter().map(move |&s| (l, s)))
        .collect();
    jobs.par_iter()
        .map(|&(l, s)| {
            run_trial(
                dims,
                tiles,
                l,
                spec.mu,
                s,
                spec.queries,
                &spec.strategies,
                params,
            )
        })
        .collect()
}

/// Per-seed rows for every report of every trial.
fn run_rows(experiment: &str, trials: &[Trial]) -> Vec<CsvRecord> {
    trials
        .iter()
        .flat_map(|t| {
            t.reports.iter().map(move |r| CsvRecord {
                sparsity: Some(t.sparsity),
                ..CsvRecord::from_report(experiment, r, Some(t.seed))
            })
        })
        .collect()
}

fn column(runs: &[(&SimReport, f64)], f: impl Fn(&SimReport) -> f64) -> Vec<f64> {
    runs.iter().map(|(r, _)| f(r)).collect()
}

/// Seed-averaged row over runs of one strategy and configuration.
fn mean_record(experiment: &str, runs: &[(&SimReport, f64)]) -> CsvRecord {
    let first = runs[0].0;
    let gops: Option<Vec<f64>> = runs.iter().map(|(r, _)| r.gops_per_watt).collect();
    CsvRecord {
        seed: None,
        energy_uj: Some(mean(&column(runs, |r| r.total_energy_uj))),
        delay_us: Some(mean(&column(runs, |r| r.total_delay_us))),
        avg_power_w: Some(mean(&column(runs, |r| r.avg_power_w))),
        gops_per_w: gops.map(|g| mean(&g)),
        cells_energized: Some(mean(&column(runs, |r| r.op_counts.cells_energized as f64))),
        tiles_processed: Some(mean(&column(runs, |r| r.op_counts.tiles_processed as f64))),
        tiles_skipped: Some(mean(&column(runs, |r| r.op_counts.tiles_skipped as f64))),
        sparsity: Some(mean(&runs.iter().map(|(_, s)| *s).collect::<Vec<_>>())),
        ..CsvRecord::from_report(experiment, first, None)
    }
}

fn spread(runs: &[(&SimReport, f64)]) -> Value {
    let stat = |v: Vec<f64>| json!({"mean": mean(&v), "stdev": stdev(&v)});
    let gops: Option<Vec<f64>> = runs.iter().map(|(r, _)| r.gops_per_watt).collect();
    json!({
        "energy_uJ": stat(column(runs, |r| r.total_energy_uj)),
        "delay_us": stat(column(runs, |r| r.total_delay_us)),
        "gops_per_W": gops.map(stat),
        "cells_energized": stat(column(runs, |r| r.op_counts.cells_energized as f64)),
    })
}

/// Collects the runs of `strategy` across a slice of trials.
fn runs_of(trials: &[Trial], strategy: Strategy) -> Vec<(&SimReport, f64)> {
    trials
        .iter()
        .filter_map(|t| t.report(strategy).map(|r| (r, t.sparsity)))
        .collect()
}

fn mean_energy(trials: &[Trial], strategy: Strategy) -> Option<f64> {
    let runs = runs_of(trials, strategy);
    (!runs.is_empty()).then(|| mean(&column(&runs, |r| r.total_energy_uj)))
}

fn ratio(num: Option<f64>, den: Option<f64>) -> Value {
    match (num, den) {
        (Some(n), Some(d)) if d > 0.0 => json!(n / d),
        _ => Value::Null,
    }
}

fn trial_violations(trials: &[Trial]) -> Vec<String> {
    trials
        .iter()
        .flat_map(|t| t.violations.iter().cloned())
        .collect()
}

/// MonoSparse must have the lowest mean energy and highest mean GOPS/W.
fn ordering_violations(context: &str, records: &[&CsvRecord]) -> Vec<String> {
    let Some(ms) = records
        .iter()
        .find(|r| r.strategy == Some(Strategy::MonoSparse))
    else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for other in records
        .iter()
        .filter(|r| r.strategy != Some(Strategy::MonoSparse))
    {
        let name = other.strategy.map(|s| s.as_str()).unwrap_or("?");
        if ms.energy_uj > other.energy_uj {
            out.push(format!("{context}: monosparse energy exceeds {name}"));
        }
        if let (Some(a), Some(b)) = (ms.gops_per_w, other.gops_per_w) {
            if a < b {
                out.push(format!("{context}: monosparse GOPS/W below {name}"));
            }
        }
    }
    out
}

fn strategy_series(
    records: &[CsvRecord],
    strategies: &[Strategy],
    x: impl Fn(&CsvRecord) -> f64,
    y: impl Fn(&CsvRecord) -> Option<f64>,
) -> Vec<Series> {
    strategies
        .iter()
        .map(|&s| Series {
            label: s.to_string(),
            points: records
                .iter()
                .filter(|r| r.strategy == Some(s))
                .filter_map(|r| y(r).map(|v| (x(r), v)))
                .collect(),
        })
        .collect()
}

pub fn sweep_sparsity(spec: &ExperimentSpec, params: &EnergyParams) -> Result<Outcome> {
    let name = "sweep_sparsity";
    let trials = run_grid(
        spec,
        (spec.rows, spec.cols),
        spec.tile(),
        &spec.lambdas,
        params,
    )?;
    let mut violations = trial_violations(&trials);

    if spec.strategies.contains(&Strategy::Raw) {
        let raw: Vec<_> = trials
            .iter()
            .filter_map(|t| t.report(Strategy::Raw))
            .collect();
        if raw.iter().any(|r| r.op_counts != raw[0].op_counts) {
            violations.push("raw operation counts differ across lambda and seed".into());
        }
    }

    let mut records = Vec::new();
    let mut per_lambda = Vec::new();
    for (li, &lambda) in spec.lambdas.iter().enumerate() {
        let group = &trials[li * spec.seeds.len()..(li + 1) * spec.seeds.len()];
        let mut stats = Map::new();
        let first = records.len();
        for &s in &spec.strategies {
            let runs = runs_of(group, s);
            records.push(mean_record(name, &runs));
            stats.insert(s.to_string(), spread(&runs));
        }
        let here: Vec<&CsvRecord> = records[first..].iter().collect();
        violations.extend(ordering_violations(&format!("lambda {lambda}"), &here));
        let e = |s| mean_energy(group, s);
        per_lambda.push(json!({
            "lambda": lambda,
            "sparsity": mean(&group.iter().map(|t| t.sparsity).collect::<Vec<_>>()),
            "strategies": stats,
            "gain_raw_over_monosparse": ratio(e(Strategy::Raw), e(Strategy::MonoSparse)),
            "gain_raw_over_fr": ratio(e(Strategy::Raw), e(Strategy::FeatureReorder)),
            "gain_fr_over_monosparse": ratio(e(Strategy::FeatureReorder), e(Strategy::MonoSparse)),
        }));
    }

    let lam = |r: &CsvRecord| r.lambda.unwrap_or(f64::NAN);
    let mut energy = Chart::new("Energy vs sparsity", "lambda", "energy (uJ)");
    energy.log_y = true;
    let mut gops = Chart::new("GOPS/W vs sparsity", "lambda", "GOPS/W");
    gops.log_y = true;
    let mut plots = vec![
        Plot {
            file_name: "energy_vs_lambda.svg".into(),
            svg: line_chart(
                &energy,
                &strategy_series(&records, &spec.strategies, lam, |r| r.energy_uj),
            ),
        },
        Plot {
            file_name: "delay_vs_lambda.svg".into(),
            svg: line_chart(
                &Chart::new("Delay vs sparsity", "lambda", "delay (us)"),
                &strategy_series(&records, &spec.strategies, lam, |r| r.delay_us),
            ),
        },
        Plot {
            file_name: "gops_vs_lambda.svg".into(),
            svg: line_chart(
                &gops,
                &strategy_series(&records, &spec.strategies, lam, |r| r.gops_per_w),
            ),
        },
    ];
    if let Some(h) = &spec.heatmap {
        plots.extend(heatmaps(h)?);
    }

    Ok(Outcome {
        kind: ExperimentKind::Sweep,
        tables: vec![
            Table::sim(name, records),
            Table::sim("sweep_sparsity_runs", run_rows(name, &trials)),
        ],
        plots,
        summary: json!({
            "experiment": name,
            "rows": spec.rows,
            "cols": spec.cols,
            "tile": spec.tile().to_string(),
            "seeds": spec.seeds,
            "per_lambda": per_lambda,
        }),
        violations,
    })
}

/// Cell-class grids of one array: as generated, after reordering, and the
/// reordered array as seen by MonoSparse for one query.
pub fn heatmap_classes(h: &HeatmapSpec) -> Result<[Vec<CellClass>; 3]> {
    let array = generate(&SparsitySpec::new(h.rows, h.cols, h.lambda, h.mu, h.seed))?;
    let (layout, perm) = feature_reorder(&array);
    let query = perm.permute_query(&random_queries(&array, 1, h.seed ^ QUERY_SEED_SALT)[0])?;
    let tiles = TileConfig::new(h.tile_rows, h.tile_cols)?;
    let mask = energized_mask(&layout, tiles, &query, Strategy::MonoSparse)?;
    let plain = |a: &crate::CamArray| -> Vec<CellClass> {
        a.cells()
            .iter()
            .map(|c| {
                if c.is_active() {
                    CellClass::Active
                } else {
                    CellClass::DontCare
                }
            })
            .collect()
    };
    let processed = layout
        .cells()
        .iter()
        .zip(&mask)
        .map(|(c, &hit)| match (c.is_active(), hit) {
            (false, _) => CellClass::DontCare,
            (true, true) => CellClass::Active,
            (true, false) => CellClass::Skipped,
        })
        .collect();
    Ok([plain(&array), plain(&layout), processed])
}

fn heatmaps(h: &HeatmapSpec) -> Result<Vec<Plot>> {
    let [original, reordered, processed] = heatmap_classes(h)?;
    let dims = format!("{}x{}, lambda {}", h.rows, h.cols, h.lambda);
    Ok(vec![
        Plot {
            file_name: "grid_original.svg".into(),
            svg: grid_heatmap(
                &format!("Original grid ({dims})"),
                h.rows,
                h.cols,
                &original,
            ),
        },
        Plot {
            file_name: "grid_reordered.svg".into(),
            svg: grid_heatmap(
                &format!("Feature-reordered grid ({dims})"),
                h.rows,
                h.cols,
                &reordered,
            ),
        },
        Plot {
            file_name: "grid_monosparse.svg".into(),
            svg: grid_heatmap(
                &format!(
                    "MonoSparse processing, {}x{} tile ({dims})",
                    h.tile_rows, h.tile_cols
                ),
                h.rows,
                h.cols,
                &processed,
            ),
        },
    ])
}

fn categorical(labels: impl IntoIterator<Item = String>) -> Vec<(f64, String)> {
    labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| (i as f64, l))
        .collect()
}

pub fn corner_analysis(spec: &ExperimentSpec, params: &EnergyParams) -> Result<Outcome> {
    let name = "corner_analysis";
    let trials = run_grid(
        spec,
        (spec.rows, spec.cols),
        spec.tile(),
        &spec.lambdas,
        params,
    )?;
    let mut violations = trial_violations(&trials);
    let base = apply_corner(params, crate::energy::Corner::Tt);

    let mut records = Vec::new();
    let mut runs_out = Vec::new();
    let mut per_corner = Vec::new();
    for &corner in &spec.corners {
        let cp = apply_corner(&base, corner);
        let priced: Vec<Trial> = trials
            .iter()
            .map(|t| Trial {
                reports: t.reports.iter().map(|r| r.repriced(&cp)).collect(),
                ..t.clone()
            })
            .collect();
        runs_out.extend(run_rows(name, &priced));
        for (li, &lambda) in spec.lambdas.iter().enumerate() {
            let group = &priced[li * spec.seeds.len()..(li + 1) * spec.seeds.len()];
            let first = records.len();
            let mut energies = Map::new();
            for &s in &spec.strategies {
                records.push(mean_record(name, &runs_of(group, s)));
                energies.insert(s.to_string(), json!(mean_energy(group, s)));
            }
            let here: Vec<&CsvRecord> = records[first..].iter().collect();
            violations.extend(ordering_violations(
                &format!("corner {corner} lambda {lambda}"),
                &here,
            ));
            let ms = mean_energy(group, Strategy::MonoSparse);
            let best_other = spec
                .strategies
                .iter()
                .filter(|&&s| s != Strategy::MonoSparse)
                .filter_map(|&s| mean_energy(group, s))
                .fold(None, |acc: Option<f64>, e| {
                    Some(acc.map_or(e, |a| a.min(e)))
                });
            per_corner.push(json!({
                "corner": corner,
                "lambda": lambda,
                "energy_uJ": energies,
                "best_competitor_over_monosparse": ratio(best_other, ms),
                "fr_over_monosparse": ratio(mean_energy(group, Strategy::FeatureReorder), ms),
            }));
        }
    }

    // cross-strategy ratios must not depend on the corner
    for (li, _) in spec.lambdas.iter().enumerate() {
        let at = |ci: usize| &per_corner[ci * spec.lambdas.len() + li]["energy_uJ"];
        let reference = at(0);
        for ci in 1..spec.corners.len() {
            let here = at(ci);
            for a in &spec.strategies {
                for b in &spec.strategies {
                    let (Some(ra), Some(rb), Some(ha), Some(hb)) = (
                        reference[a.as_str()].as_f64(),
                        reference[b.as_str()].as_f64(),
                        here[a.as_str()].as_f64(),
                        here[b.as_str()].as_f64(),
                    ) else {
                        continue;
                    };
                    if rb > 0.0 && hb > 0.0 {
                        let (r0, r1) = (ra / rb, ha / hb);
                        if (r0 - r1).abs() > 1e-9 * r0.abs().max(r1.abs()) {
                            violations.push(format!(
                                "ratio {a}/{b} changes across corners: {r0} vs {r1}"
                            ));
                        }
                    }
                }
            }
        }
    }

    let mut chart = Chart::new("Energy by process corner", "corner", "energy (uJ)");
    chart.log_y = true;
    chart.x_ticks = Some(categorical(spec.corners.iter().map(|c| c.to_string())));
    let corner_x = |r: &CsvRecord| {
        spec.corners
            .iter()
            .position(|c| Some(*c) == r.corner)
            .unwrap_or(0) as f64
    };
    let first_lambda: Vec<CsvRecord> = records
        .iter()
        .filter(|r| r.lambda == spec.lambdas.first().copied())
        .cloned()
        .collect();
    let series = strategy_series(&first_lambda, &spec.strategies, corner_x, |r| r.energy_uj);

    Ok(Outcome {
        kind: ExperimentKind::Corner,
        tables: vec![
            Table::sim(name, records),
            Table::sim("corner_analysis_runs", runs_out),
        ],
        plots: vec![Plot {
            file_name: "energy_by_corner.svg".into(),
            svg: line_chart(&chart, &series),
        }],
        summary: json!({"experiment": name, "seeds": spec.seeds, "per_corner": per_corner}),
        violations,
    })
}

pub fn scalability(spec: &ExperimentSpec, params: &EnergyParams) -> Result<Outcome> {
    let name = "scalability";
    let lambda = spec.lambdas[0];
    let mut violations = Vec::new();
    let mut records = Vec::new();
    let mut runs_out = Vec::new();
    let mut per_size = Vec::new();
    let mut gains = Vec::new();
    for &[rows, cols] in &spec.sizes {
        let trials = run_grid(spec, (rows, cols), spec.tile(), &[lambda], params)?;
        violations.extend(trial_violations(&trials));
        runs_out.extend(run_rows(name, &trials));
        for &s in &spec.strategies {
            records.push(mean_record(name, &runs_of(&trials, s)));
        }
        let gain = ratio(
            mean_energy(&trials, Strategy::Raw),
            mean_energy(&trials, Strategy::MonoSparse),
        );
        if let Some(g) = gain.as_f64() {
            gains.push(((rows, cols), g));
        }
        per_size.push(json!({"rows": rows, "cols": cols, "cells": rows * cols, "gain_raw_over_monosparse": gain}));
    }
    for w in gains.windows(2) {
        if w[1].1 < w[0].1 {
            violations.push(format!(
                "raw/monosparse gain drops from {} at {:?} to {} at {:?}",
                w[0].1, w[0].0, w[1].1, w[1].0
            ));
        }
    }

    let mut fits = Map::new();
    for &s in &spec.strategies {
        let pts: Vec<&CsvRecord> = records.iter().filter(|r| r.strategy == Some(s)).collect();
        let cells: Vec<f64> = pts
            .iter()
            .map(|r| (r.rows.unwrap() * r.cols.unwrap()) as f64)
            .collect();
        let dim: Vec<f64> = cells.iter().map(|c| c.sqrt()).collect();
        let energy: Vec<f64> = pts.iter().map(|r| r.energy_uj.unwrap()).collect();
        fits.insert(
            s.to_string(),
            json!({
                "linear_in_cells": fit_curve(&cells, &energy, FitModel::Linear)?,
                "quadratic_in_dimension": fit_curve(&dim, &energy, FitModel::Quadratic)?,
                "linear_in_dimension": fit_curve(&dim, &energy, FitModel::Linear)?,
            }),
        );
    }

    let mut chart = Chart::new("Energy vs array size", "cells", "energy (uJ)");
    chart.log_y = true;
    let cells_x = |r: &CsvRecord| (r.rows.unwrap_or(0) * r.cols.unwrap_or(0)) as f64;
    let series = strategy_series(&records, &spec.strategies, cells_x, |r| r.energy_uj);

    Ok(Outcome {
        kind: ExperimentKind::Scale,
        tables: vec![
            Table::sim(name, records),
            Table::sim("scalability_runs", runs_out),
        ],
        plots: vec![Plot {
            file_name: "energy_vs_size.svg".into(),
            svg: line_chart(&chart, &series),
        }],
        summary: json!({
            "experiment": name,
            "lambda": lambda,
            "tile": spec.tile().to_string(),
            "seeds": spec.seeds,
            "per_size": per_size,
            "fits": fits,
        }),
        violations,
    })
}

pub fn tile_shapes(spec: &ExperimentSpec, params: &EnergyParams) -> Result<Outcome> {
    let name = "tile_shapes";
    let mut violations = Vec::new();
    let mut records = Vec::new();
    let mut runs_out = Vec::new();
    let mut per_tile = Vec::new();
    for &[tr, tc] in &spec.tiles {
        let tiles = TileConfig::new(tr, tc)?;
        let trials = run_grid(spec, (spec.rows, spec.cols), tiles, &spec.lambdas, params)?;
        violations.extend(trial_violations(&trials));
        runs_out.extend(run_rows(name, &trials));
        for (li, &lambda) in spec.lambdas.iter().enumerate() {
            let group = &trials[li * spec.seeds.len()..(li + 1) * spec.seeds.len()];
            for &s in &spec.strategies {
                records.push(mean_record(name, &runs_of(group, s)));
            }
            let ms = runs_of(group, Strategy::MonoSparse);
            per_tile.push(json!({
                "tile_rows": tr,
                "tile_cols": tc,
                "lambda": lambda,
                "monosparse_cells_energized": (!ms.is_empty())
                    .then(|| mean(&column(&ms, |r| r.op_counts.cells_energized as f64))),
                "monosparse_energy_uJ": mean_energy(group, Strategy::MonoSparse),
            }));
        }
    }

    let labels: Vec<String> = spec.tiles.iter().map(|[r, c]| format!("{r}x{c}")).collect();
    let mut chart = Chart::new("Cells energized by tile shape", "tile", "cells energized");
    chart.log_y = true;
    chart.x_ticks = Some(categorical(labels.clone()));
    let first_lambda: Vec<CsvRecord> = records
        .iter()
        .filter(|r| r.lambda == spec.lambdas.first().copied())
        .cloned()
        .collect();
    let tile_x = |r: &CsvRecord| {
        spec.tiles
            .iter()
            .position(|t| Some(t[0]) == r.tile_rows && Some(t[1]) == r.tile_cols)
            .unwrap_or(0) as f64
    };
    let series = strategy_series(&first_lambda, &spec.strategies, tile_x, |r| {
        r.cells_energized
    });

    Ok(Outcome {
        kind: ExperimentKind::Tiles,
        tables: vec![
            Table::sim(name, records),
            Table::sim("tile_shapes_runs", runs_out),
        ],
        plots: vec![Plot {
            file_name: "cells_by_tile.svg".into(),
            svg: line_chart(&chart, &series),
        }],
        summary: json!({"experiment": name, "seeds": spec.seeds, "per_tile": per_tile}),
        violations,
    })
}
