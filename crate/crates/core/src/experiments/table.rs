//! CSV tables emitted by the experiment suite.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::energy::Corner;
use crate::engine::{SimReport, Strategy};
use crate::error::{Error, Result};

use super::balance::BalanceRecord;

pub const CSV_HEADER: &str = "experiment,strategy,corner,lambda,rows,cols,tile_rows,tile_cols,seed,queries,energy_uJ,delay_us,avg_power_W,gops_per_W,cells_energized,tiles_processed,tiles_skipped,accuracy,sparsity";

/// One row of the shared simulation schema. Aggregated rows leave `seed`
/// empty and hold means over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRecord {
    pub experiment: String,
    pub strategy: Option<Strategy>,
    pub corner: Option<Corner>,
    pub lambda: Option<f64>,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub tile_rows: Option<usize>,
    pub tile_cols: Option<usize>,
    pub seed: Option<u64>,
    pub queries: Option<usize>,
    #[serde(rename = "energy_uJ")]
    pub energy_uj: Option<f64>,
    pub delay_us: Option<f64>,
    #[serde(rename = "avg_power_W")]
    pub avg_power_w: Option<f64>,
    #[serde(rename = "gops_per_W")]
    pub gops_per_w: Option<f64>,
    pub cells_energized: Option<f64>,
    pub tiles_processed: Option<f64>,
    pub tiles_skipped: Option<f64>,
    pub accuracy: Option<f64>,
    pub sparsity: Option<f64>,
}

impl CsvRecord {
    pub fn empty(experiment: &str) -> Self {
        CsvRecord {
            experiment: experiment.to_string(),
            strategy: None,
            corner: None,
            lambda: None,
            rows: None,
            cols: None,
            tile_rows: None,
            tile_cols: None,
            seed: None,
            queries: None,
            energy_uj: None,
            delay_us: None,
            avg_power_w: None,
            gops_per_w: None,
            cells_energized: None,
            tiles_processed: None,
            tiles_skipped: None,
            accuracy: None,
            sparsity: None,
        }
    }

    /// A per-run row taken straight from a simulation report.
    pub fn from_report(experiment: &str, report: &SimReport, seed: Option<u64>) -> Self {
        let c = &report.op_counts;
        CsvRecord {
            strategy: Some(report.strategy),
            corner: Some(report.corner),
            lambda: report.lambda,
            rows: Some(report.rows),
            cols: Some(report.cols),
            tile_rows: Some(report.tile_rows),
            tile_cols: Some(report.tile_cols),
            seed,
            queries: Some(report.queries),
            energy_uj: Some(report.total_energy_uj),
            delay_us: Some(report.total_delay_us),
            avg_power_w: Some(report.avg_power_w),
            gops_per_w: report.gops_per_watt,
            cells_energized: Some(c.cells_energized as f64),
            tiles_processed: Some(c.tiles_processed as f64),
            tiles_skipped: Some(c.tiles_skipped as f64),
            ..CsvRecord::empty(experiment)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TableRows {
    Sim(Vec<CsvRecord>),
    Balance(Vec<BalanceRecord>),
}

impl TableRows {
    pub fn len(&self) -> usize {
        match self {
            TableRows::Sim(r) => r.len(),
            TableRows::Balance(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A named table; `name` is the CSV file stem.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub rows: TableRows,
}

impl Table {
    pub fn sim(name: &str, rows: Vec<CsvRecord>) -> Self {
        Table {
            name: name.to_string(),
            rows: TableRows::Sim(rows),
        }
    }

    pub fn records(&self) -> &[CsvRecord] {
        match &self.rows {
            TableRows::Sim(r) => r,
            TableRows::Balance(_) => &[],
        }
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        match &self.rows {
            TableRows::Sim(rows) => {
                if rows.is_empty() {
                    w.write_record(CSV_HEADER.split(','))?;
                }
                for r in rows {
                    w.serialize(r)?;
                }
            }
            TableRows::Balance(rows) => {
                for r in rows {
                    w.serialize(r)?;
                }
            }
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::InvalidArgument(format!("csv flush: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Parses a simulation-schema CSV, checking the header exactly.
pub fn read_sim_csv(text: &str) -> Result<Vec<CsvRecord>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<&str> = r.headers()?.iter().collect();
    if header.join(",") != CSV_HEADER {
        return Err(Error::Schema(format!(
            "csv header mismatch: got {:?}",
            header.join(",")
        )));
    }
    r.deserialize()
        .map(|rec| rec.map_err(Error::from))
        .collect()
}

pub fn read_sim_csv_file(path: &Path) -> Result<Vec<CsvRecord>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_sim_csv(&text)
}
