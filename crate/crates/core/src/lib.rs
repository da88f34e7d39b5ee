//! Analytic performance simulator for blocked GEMM on processors with
//! software-managed (scratchpad) memory hierarchies.
//!
//! The crate is organised bottom-up:
//!
//! - [`hierarchy`]: memory levels, transfer channels and the calibrated
//!   machine profile.
//! - [`variants`]: the three loop-nest variants, micro-kernel register
//!   budgets and tile-size derivation.
//! - [`cost`]: exact per-channel transfer volumes and the time breakdown
//!   derived from them.
//! - [`oracle`]: an interpreter that executes the blocked algorithms over a
//!   simulated scratchpad and counts every element it moves.
//! - [`explorer`]: micro-kernel sweeps and per-layer ranking.

pub mod cost;
mod error;
pub mod explorer;
pub mod hierarchy;
pub mod oracle;
pub mod variants;

pub use cost::{
    arithmetic_time, channel_volumes, estimate, ComponentCost, ComponentId, ComponentVolume,
    CostBreakdown, VolumeTable,
};
pub use error::{CalibrationError, Error, Result};
pub use explorer::{
    best_per_layer, sweep, sweep_kernels, CellBest, LayerResult, LayerSpec, SweepEntry, SweepResult,
};
pub use hierarchy::{CalibrationProfile, MemoryLevel, TransferChannel, TransferKind};
pub use oracle::{naive_gemm, run_oracle, Matrix, OracleResult};
pub use variants::{
    default_tiles, microkernel_menu, register_footprint, validate_config, GemmShape, MicroKernel,
    Operand, Residency, TileConfig, Variant, Violation,
};
