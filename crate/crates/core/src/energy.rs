//! Behavioral energy and delay accounting.
//!
//! Energies are per-event constants in picojoules; the default set is
//! calibrated so that raw processing of a 240x320 array through a 24x48 tile
//! costs 3.77 µJ, with peripheral circuitry a small share of the total.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::OpCounts;
use crate::error::{Error, Result};

const DEFAULT_CALIBRATION: &str = include_str!("../calib/default.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Corner {
    Tt,
    Ff,
    Ss,
}

impl Corner {
    pub const ALL: [Corner; 3] = [Corner::Tt, Corner::Ff, Corner::Ss];

    pub fn as_str(&self) -> &'static str {
        match self {
            Corner::Tt => "tt",
            Corner::Ff => "ff",
            Corner::Ss => "ss",
        }
    }
}

impl fmt::Display for Corner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Corner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tt" => Ok(Corner::Tt),
            "ff" => Ok(Corner::Ff),
            "ss" => Ok(Corner::Ss),
            other => Err(Error::InvalidArgument(format!(
                "unknown corner {other:?} (expected tt, ff or ss)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CornerScale {
    pub tt: f64,
    pub ff: f64,
    pub ss: f64,
}

impl CornerScale {
    pub fn get(&self, corner: Corner) -> f64 {
        match corner {
            Corner::Tt => self.tt,
            Corner::Ff => self.ff,
            Corner::Ss => self.ss,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyParams {
    /// Per energized cell comparison.
    #[serde(rename = "e_cell_pj")]
    pub e_cell: f64,
    /// Per matchline precharge; every evaluated matchline is precharged once.
    #[serde(rename = "e_precharge_pj")]
    pub e_precharge: f64,
    /// Per matchline sense-amplifier evaluation.
    #[serde(rename = "e_senseamp_pj")]
    pub e_senseamp: f64,
    /// Per register bit read or write.
    #[serde(rename = "e_reg_bit_pj")]
    pub e_reg_bit: f64,
    #[serde(rename = "t_tile_ns")]
    pub t_tile: f64,
    pub corner: Corner,
    pub corner_scale: CornerScale,
}

impl EnergyParams {
    /// The calibration shipped in `calib/default.json`.
    pub fn default_calibration() -> Self {
        Self::from_json_str(DEFAULT_CALIBRATION).expect("bundled calibration is valid")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let params: EnergyParams = serde_json::from_str(text)?;
        params.validate()?;
        Ok(params)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("params serialize")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("e_cell_pj", self.e_cell),
            ("e_precharge_pj", self.e_precharge),
            ("e_senseamp_pj", self.e_senseamp),
            ("e_reg_bit_pj", self.e_reg_bit),
            ("t_tile_ns", self.t_tile),
            ("corner_scale.tt", self.corner_scale.tt),
            ("corner_scale.ff", self.corner_scale.ff),
            ("corner_scale.ss", self.corner_scale.ss),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.corner_scale.tt != 1.0 {
            return Err(Error::InvalidArgument(format!(
                "corner_scale.tt must be 1.0, got {}",
                self.corner_scale.tt
            )));
        }
        Ok(())
    }

    /// Multiplier of the active corner.
    pub fn scale(&self) -> f64 {
        self.corner_scale.get(self.corner)
    }

    /// Per-event energies with the corner multiplier folded in, in the order
    /// cell, precharge, sense amplifier, register bit.
    pub fn effective_energies(&self) -> [f64; 4] {
        let s = self.scale();
        [
            self.e_cell * s,
            self.e_precharge * s,
            self.e_senseamp * s,
            self.e_reg_bit * s,
        ]
    }

    /// Solves `e_cell` so that `counts` cost `target_uj` at the active corner.
    pub fn calibrate_cell_energy(&self, counts: &OpCounts, target_uj: f64) -> Result<Self> {
        if counts.cells_energized == 0 {
            return Err(Error::InvalidArgument(
                "calibration run energized no cells".into(),
            ));
        }
        let peripheral = counts.matchlines_evaluated as f64 * (self.e_precharge + self.e_senseamp)
            + counts.register_bits_accessed as f64 * self.e_reg_bit;
        let e_cell = (target_uj * 1e6 / self.scale() - peripheral) / counts.cells_energized as f64;
        let params = EnergyParams { e_cell, ..*self };
        params.validate()?;
        Ok(params)
    }
}

/// Returns a copy with `corner` selected. `tt` leaves energies unchanged.
pub fn apply_corner(params: &EnergyParams, corner: Corner) -> EnergyParams {
    EnergyParams { corner, ..*params }
}

/// Energy in µJ and delay in µs for a set of operation counts.
///
/// Skipped tiles cost nothing; processed tiles run back to back.
pub fn account(counts: &OpCounts, params: &EnergyParams) -> (f64, f64) {
    let pj = counts.cells_energized as f64 * params.e_cell
        + counts.matchlines_evaluated as f64 * params.e_precharge
        + counts.matchlines_evaluated as f64 * params.e_senseamp
        + counts.register_bits_accessed as f64 * params.e_reg_bit;
    let energy_uj = params.scale() * pj * 1e-6;
    let delay_us = counts.tiles_processed as f64 * params.t_tile * 1e-3;
    (energy_uj, delay_us)
}

/// Throughput per watt: `(h * w / delay) / power`, in giga-operations.
pub fn gops_per_watt(
    h_large: usize,
    w_large: usize,
    delay_s: f64,
    avg_power_w: f64,
) -> Result<f64> {
    if delay_s.is_nan() || delay_s <= 0.0 || avg_power_w.is_nan() || avg_power_w <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "delay and power must be positive (delay {delay_s} s, power {avg_power_w} W)"
        )));
    }
    Ok((h_large as f64 * w_large as f64 / delay_s) / avg_power_w * 1e-9)
}
