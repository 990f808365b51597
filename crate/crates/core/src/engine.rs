//! Tiled CAM processing with matchline aliveness tracking.
//!
//! A logical array is streamed through one physical tile in row-group-major
//! order: for every group of `tile_rows` rows, column blocks of `tile_cols`
//! columns are visited left to right. Each row's partial match result is held
//! in a per-group register between column blocks. Strategies differ only in
//! which tiles are skipped, which rows are evaluated and which cells are
//! energized; the final match sets are the same for all of them.

use std::fmt;
use std::ops::{Add, AddAssign, Range};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::CamArray;
use crate::energy::{self, Corner, EnergyParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TileConfig {
    pub tile_rows: usize,
    pub tile_cols: usize,
}

impl TileConfig {
    pub fn new(tile_rows: usize, tile_cols: usize) -> Result<Self> {
        if tile_rows == 0 || tile_cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "tile dimensions must be positive, got {tile_rows}x{tile_cols}"
            )));
        }
        Ok(TileConfig {
            tile_rows,
            tile_cols,
        })
    }
}

impl fmt::Display for TileConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.tile_rows, self.tile_cols)
    }
}

impl FromStr for TileConfig {
    type Err = Error;

    /// Parses `RxC`, e.g. `24x48`.
    fn from_str(s: &str) -> Result<Self> {
        let bad =
            || Error::InvalidArgument(format!("tile must look like RxC (e.g. 24x48), got {s:?}"));
        let (r, c) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        let r = r.trim().parse().map_err(|_| bad())?;
        let c = c.trim().parse().map_err(|_| bad())?;
        TileConfig::new(r, c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "raw")]
    Raw,
    #[serde(rename = "fr")]
    FeatureReorder,
    #[serde(rename = "mono")]
    MonotonicOnly,
    #[serde(rename = "monosparse")]
    MonoSparse,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Raw,
        Strategy::FeatureReorder,
        Strategy::MonotonicOnly,
        Strategy::MonoSparse,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Raw => "raw",
            Strategy::FeatureReorder => "fr",
            Strategy::MonotonicOnly => "mono",
            Strategy::MonoSparse => "monosparse",
        }
    }

    /// Skips tiles whose cells are all don't-care and loads active cells only.
    pub fn exploits_sparsity(&self) -> bool {
        matches!(self, Strategy::FeatureReorder | Strategy::MonoSparse)
    }

    /// Bypasses dead matchlines and tiles whose rows are all dead.
    pub fn exploits_monotonicity(&self) -> bool {
        matches!(self, Strategy::MonotonicOnly | Strategy::MonoSparse)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "raw" => Ok(Strategy::Raw),
            "fr" => Ok(Strategy::FeatureReorder),
            "mono" => Ok(Strategy::MonotonicOnly),
            "monosparse" => Ok(Strategy::MonoSparse),
            other => Err(Error::InvalidArgument(format!(
                "unknown strategy {other:?} (expected raw, fr, mono or monosparse)"
            ))),
        }
    }
}

/// One physical tile placement over the logical array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileExtent {
    pub row_group: usize,
    pub col_block: usize,
    pub rows: Range<usize>,
    pub cols: Range<usize>,
}

/// Row groups outermost, column blocks left to right; edge tiles are
/// truncated to the array.
pub fn schedule(n_rows: usize, n_cols: usize, tiles: TileConfig) -> Vec<TileExtent> {
    let groups = n_rows.div_ceil(tiles.tile_rows);
    let blocks = n_cols.div_ceil(tiles.tile_cols);
    let mut out = Vec::with_capacity(groups * blocks);
    for g in 0..groups {
        let rows = g * tiles.tile_rows..((g + 1) * tiles.tile_rows).min(n_rows);
        for b in 0..blocks {
            out.push(TileExtent {
                row_group: g,
                col_block: b,
                rows: rows.clone(),
                cols: b * tiles.tile_cols..((b + 1) * tiles.tile_cols).min(n_cols),
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounts {
    pub cells_energized: u64,
    pub matchlines_evaluated: u64,
    pub tiles_processed: u64,
    pub tiles_skipped: u64,
    pub register_bits_accessed: u64,
}

impl Add for OpCounts {
    type Output = OpCounts;

    fn add(self, o: OpCounts) -> OpCounts {
        OpCounts {
            cells_energized: self.cells_energized + o.cells_energized,
            matchlines_evaluated: self.matchlines_evaluated + o.matchlines_evaluated,
            tiles_processed: self.tiles_processed + o.tiles_processed,
            tiles_skipped: self.tiles_skipped + o.tiles_skipped,
            register_bits_accessed: self.register_bits_accessed + o.register_bits_accessed,
        }
    }
}

impl AddAssign for OpCounts {
    fn add_assign(&mut self, o: OpCounts) {
        *self = *self + o;
    }
}

impl std::iter::Sum for OpCounts {
    fn sum<I: Iterator<Item = OpCounts>>(iter: I) -> OpCounts {
        iter.fold(OpCounts::default(), Add::add)
    }
}

/// Per-row partial match state of the current row group.
///
/// Bits only go from alive to dead; the register is reset once per
/// (query, row group).
#[derive(Debug, Clone)]
pub struct MatchlineRegister {
    alive: Vec<bool>,
    n_alive: usize,
}

impl MatchlineRegister {
    pub fn new(len: usize) -> Self {
        MatchlineRegister {
            alive: vec![true; len],
            n_alive: len,
        }
    }

    pub fn reset(&mut self, len: usize) {
        self.alive.clear();
        self.alive.resize(len, true);
        self.n_alive = len;
    }

    #[inline]
    pub fn is_alive(&self, i: usize) -> bool {
        self.alive[i]
    }

    pub fn kill(&mut self, i: usize) {
        if std::mem::replace(&mut self.alive[i], false) {
            self.n_alive -= 1;
        }
    }

    pub fn any_alive(&self) -> bool {
        self.n_alive > 0
    }

    pub fn n_alive(&self) -> usize {
        self.n_alive
    }

    pub fn bits(&self) -> &[bool] {
        &self.alive
    }
}

/// Static per-array facts the scheduler needs for every query.
struct TilePlan<'a> {
    array: &'a CamArray,
    tiles: TileConfig,
    n_groups: usize,
    n_blocks: usize,
    /// active cells of `row` inside column block `b`: `[row * n_blocks + b]`
    row_block_active: Vec<u32>,
    /// `[g * n_blocks + b]`: tile holds no active cell
    tile_empty: Vec<bool>,
}

impl<'a> TilePlan<'a> {
    fn new(array: &'a CamArray, tiles: TileConfig) -> Self {
        let (n_rows, n_cols) = array.dims();
        let n_groups = n_rows.div_ceil(tiles.tile_rows);
        let n_blocks = n_cols.div_ceil(tiles.tile_cols);
        let mut row_block_active = vec![0u32; n_rows * n_blocks];
        for r in 0..n_rows {
            for (c, cell) in array.row(r).iter().enumerate() {
                if cell.is_active() {
                    row_block_active[r * n_blocks + c / tiles.tile_cols] += 1;
                }
            }
        }
        let mut tile_empty = vec![true; n_groups * n_blocks];
        for r in 0..n_rows {
            let g = r / tiles.tile_rows;
            for b in 0..n_blocks {
                if row_block_active[r * n_blocks + b] > 0 {
                    tile_empty[g * n_blocks + b] = false;
                }
            }
        }
        TilePlan {
            array,
            tiles,
            n_groups,
            n_blocks,
            row_block_active,
            tile_empty,
        }
    }

    fn group_rows(&self, g: usize) -> Range<usize> {
        g * self.tiles.tile_rows..((g + 1) * self.tiles.tile_rows).min(self.array.n_rows())
    }

    fn block_cols(&self, b: usize) -> Range<usize> {
        b * self.tiles.tile_cols..((b + 1) * self.tiles.tile_cols).min(self.array.n_cols())
    }
}

/// What happened to one tile for one query.
#[derive(Debug, Clone)]
pub struct TileEvent {
    pub row_group: usize,
    pub col_block: usize,
    pub processed: bool,
    /// Register contents after the tile, one bit per group row.
    pub alive_after: Vec<bool>,
    /// Rows whose matchline was evaluated (absolute indices).
    pub evaluated_rows: Vec<usize>,
    /// Cells energized in this tile.
    pub cells_energized: u64,
}

fn run_query(
    plan: &TilePlan<'_>,
    encoded: &[f64],
    strategy: Strategy,
    counts: &mut OpCounts,
    mut observe: Option<&mut dyn FnMut(TileEvent)>,
) -> Vec<usize> {
    let array = plan.array;
    let sparse = strategy.exploits_sparsity();
    let mono = strategy.exploits_monotonicity();
    let mut matched = Vec::new();
    let mut reg = MatchlineRegister::new(0);

    for g in 0..plan.n_groups {
        let rows = plan.group_rows(g);
        reg.reset(rows.len());
        for b in 0..plan.n_blocks {
            let empty = plan.tile_empty[g * plan.n_blocks + b];
            if (sparse && empty) || (mono && !reg.any_alive()) {
                counts.tiles_skipped += 1;
                if let Some(obs) = observe.as_deref_mut() {
                    obs(TileEvent {
                        row_group: g,
                        col_block: b,
                        processed: false,
                        alive_after: reg.bits().to_vec(),
                        evaluated_rows: Vec::new(),
                        cells_energized: 0,
                    });
                }
                continue;
            }

            let cols = plan.block_cols(b);
            let before = counts.cells_energized;
            let mut evaluated = Vec::new();
            counts.tiles_processed += 1;
            counts.register_bits_accessed += 2 * rows.len() as u64;
            for (i, r) in rows.clone().enumerate() {
                if mono && !reg.is_alive(i) {
                    continue;
                }
                counts.matchlines_evaluated += 1;
                counts.cells_energized += if sparse {
                    u64::from(plan.row_block_active[r * plan.n_blocks + b])
                } else {
                    cols.len() as u64
                };
                if observe.is_some() {
                    evaluated.push(r);
                }
                if reg.is_alive(i)
                    && !cols
                        .clone()
                        .all(|c| array.cell_matches_encoded(r, c, encoded[c]))
                {
                    reg.kill(i);
                }
            }
            if let Some(obs) = observe.as_deref_mut() {
                obs(TileEvent {
                    row_group: g,
                    col_block: b,
                    processed: true,
                    alive_after: reg.bits().to_vec(),
                    evaluated_rows: evaluated,
                    cells_energized: counts.cells_energized - before,
                });
            }
        }
        matched.extend(
            rows.enumerate()
                .filter(|&(i, _)| reg.is_alive(i))
                .map(|(_, r)| r),
        );
    }
    matched
}

/// Result of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub strategy: Strategy,
    pub rows: usize,
    pub cols: usize,
    pub tile_rows: usize,
    pub tile_cols: usize,
    pub lambda: Option<f64>,
    pub corner: Corner,
    pub queries: usize,
    pub total_energy_uj: f64,
    pub total_delay_us: f64,
    pub avg_power_w: f64,
    /// `None` when every tile was skipped (zero delay).
    pub gops_per_watt: Option<f64>,
    pub op_counts: OpCounts,
    /// Matched rows per query, ascending, in the simulated array's indices.
    pub matched_rows: Vec<Vec<usize>>,
}

impl SimReport {
    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }

    /// Re-prices the same operation counts under different parameters.
    pub fn repriced(&self, params: &EnergyParams) -> SimReport {
        let mut out = self.clone();
        out.fill_costs(params);
        out
    }

    fn fill_costs(&mut self, params: &EnergyParams) {
        let (energy, delay) = energy::account(&self.op_counts, params);
        self.corner = params.corner;
        self.total_energy_uj = energy;
        self.total_delay_us = delay;
        self.avg_power_w = if delay > 0.0 { energy / delay } else { 0.0 };
        self.gops_per_watt = if delay > 0.0 && energy > 0.0 {
            energy::gops_per_watt(
                self.rows * self.queries,
                self.cols,
                delay * 1e-6,
                self.avg_power_w,
            )
            .ok()
        } else {
            None
        };
    }
}

fn check_inputs(array: &CamArray, queries: &[Vec<f64>]) -> Result<()> {
    if queries.is_empty() {
        return Err(Error::InvalidArgument("query list is empty".into()));
    }
    for q in queries {
        if q.len() != array.n_cols() {
            return Err(Error::LengthMismatch {
                expected: array.n_cols(),
                actual: q.len(),
            });
        }
    }
    Ok(())
}

/// Runs every query through the tiled array and prices the work.
///
/// Queries are given in feature units and in the array's column order (for a
/// reordered array, permute them first). Queries run in parallel; counts are
/// merged by summation, so results do not depend on thread count.
pub fn simulate(
    array: &CamArray,
    tiles: TileConfig,
    queries: &[Vec<f64>],
    strategy: Strategy,
    params: &EnergyParams,
) -> Result<SimReport> {
    TileConfig::new(tiles.tile_rows, tiles.tile_cols)?;
    check_inputs(array, queries)?;
    let plan = TilePlan::new(array, tiles);
    let per_query: Vec<(OpCounts, Vec<usize>)> = queries
        .par_iter()
        .map(|q| {
            let encoded = array.encode_query(q)?;
            let mut counts = OpCounts::default();
            let matched = run_query(&plan, &encoded, strategy, &mut counts, None);
            Ok((counts, matched))
        })
        .collect::<Result<_>>()?;

    let op_counts = per_query.iter().map(|(c, _)| *c).sum();
    let mut report = SimReport {
        strategy,
        rows: array.n_rows(),
        cols: array.n_cols(),
        tile_rows: tiles.tile_rows,
        tile_cols: tiles.tile_cols,
        lambda: None,
        corner: params.corner,
        queries: queries.len(),
        total_energy_uj: 0.0,
        total_delay_us: 0.0,
        avg_power_w: 0.0,
        gops_per_watt: None,
        op_counts,
        matched_rows: per_query.into_iter().map(|(_, m)| m).collect(),
    };
    report.fill_costs(params);
    Ok(report)
}

/// Per-tile trace of one query, in schedule order.
pub fn trace_query(
    array: &CamArray,
    tiles: TileConfig,
    query: &[f64],
    strategy: Strategy,
) -> Result<Vec<TileEvent>> {
    TileConfig::new(tiles.tile_rows, tiles.tile_cols)?;
    let encoded = array.encode_query(query)?;
    let plan = TilePlan::new(array, tiles);
    let mut events = Vec::new();
    let mut sink = |e: TileEvent| events.push(e);
    run_query(
        &plan,
        &encoded,
        strategy,
        &mut OpCounts::default(),
        Some(&mut sink),
    );
    Ok(events)
}

/// Row-major mask of the cells energized while processing one query.
pub fn energized_mask(
    array: &CamArray,
    tiles: TileConfig,
    query: &[f64],
    strategy: Strategy,
) -> Result<Vec<bool>> {
    let n_cols = array.n_cols();
    let mut mask = vec![false; array.n_rows() * n_cols];
    let sparse = strategy.exploits_sparsity();
    for event in trace_query(array, tiles, query, strategy)? {
        let cols = event.col_block * tiles.tile_cols
            ..((event.col_block + 1) * tiles.tile_cols).min(n_cols);
        for &r in &event.evaluated_rows {
            for c in cols.clone() {
                if !sparse || array.cell(r, c).is_active() {
                    mask[r * n_cols + c] = true;
                }
            }
        }
    }
    Ok(mask)
}
