//! Simulation of decision-tree inference on tiled analog CAM arrays.
//!
//! Trees compile to arrays of interval cells (one row per root-to-leaf path,
//! one column per feature). Large arrays are streamed through a smaller
//! physical tile; the [`engine`] compares four processing strategies that
//! differ in how they exploit don't-care cells and matchline monotonicity,
//! and [`energy`] prices the resulting operation counts.

pub mod array;
pub mod compile;
pub mod energy;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod reorder;
pub mod stats;
pub mod synthetic;
pub mod tree;

pub use array::{CamArray, Cell};
pub use compile::{compile, quantize};
pub use energy::{account, apply_corner, gops_per_watt, Corner, CornerScale, EnergyParams};
pub use engine::{
    energized_mask, schedule, simulate, trace_query, MatchlineRegister, OpCounts, SimReport,
    Strategy, TileConfig, TileEvent, TileExtent,
};
pub use error::{Error, Result};
pub use reorder::{feature_reorder, Reordering};
pub use stats::{fit_curve, pearson, FitModel, FitResult};
pub use synthetic::{generate, generate_with_empty_fraction, random_queries, SparsitySpec};
pub use tree::{random_tree, NodeKind, TreeModel, TreeNode};
