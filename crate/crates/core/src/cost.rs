//! Transfer volumes per channel and the resulting time breakdown.
//!
//! Volumes are exact: every loop level is split into full blocks plus one
//! partial block, and each block contributes its true size. Times assume
//! computation and data movement never overlap, so the total is a plain sum.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{CalibrationProfile, TransferChannel};
use crate::variants::{validate_config, GemmShape, MicroKernel, TileConfig, Variant, Violation};

/// Named cost component. Declaration order is the accumulation order of
/// [`CostBreakdown::total_seconds`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentId {
    /// Pack into the main-memory buffer (the "L3" role).
    PackM,
    /// Pack into the L2 buffer.
    PackL2,
    /// Unpack of a C buffer back into C.
    UnpackL2orM,
    /// Copy of a slice into L1.
    CopyL1,
    /// Write-back of the L1 slice to its parent buffer.
    WritebackL1,
    /// Micro-kernel loads of the operand streamed from main memory.
    StreamResidentLoad,
    /// Micro-kernel stores of a register-resident C tile.
    StreamResidentStore,
    /// Register traffic against the L1 slice.
    StreamL1,
    /// Register traffic against the L2 buffer.
    StreamL2,
}

impl ComponentId {
    pub const ALL: [ComponentId; 9] = [
        Self::PackM,
        Self::PackL2,
        Self::UnpackL2orM,
        Self::CopyL1,
        Self::WritebackL1,
        Self::StreamResidentLoad,
        Self::StreamResidentStore,
        Self::StreamL1,
        Self::StreamL2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::PackM => "pack_m",
            Self::PackL2 => "pack_l2",
            Self::UnpackL2orM => "unpack_l2_or_m",
            Self::CopyL1 => "copy_l1",
            Self::WritebackL1 => "writeback_l1",
            Self::StreamResidentLoad => "stream_resident_load",
            Self::StreamResidentStore => "stream_resident_store",
            Self::StreamL1 => "stream_l1",
            Self::StreamL2 => "stream_l2",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ComponentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Elements moved by one component. `chunk` is the reorganisation width for
/// pack/unpack components, 1 for copies and streams, 0 when absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentVolume {
    pub component: ComponentId,
    pub channel: Option<TransferChannel>,
    pub volume: u64,
    pub chunk: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VolumeTable {
    entries: Vec<ComponentVolume>,
}

impl Default for VolumeTable {
    fn default() -> Self {
        Self {
            entries: ComponentId::ALL
                .iter()
                .map(|&component| ComponentVolume {
                    component,
                    channel: None,
                    volume: 0,
                    chunk: 0,
                })
                .collect(),
        }
    }
}

impl VolumeTable {
    pub fn get(&self, component: ComponentId) -> &ComponentVolume {
        &self.entries[component.index()]
    }

    pub fn volume(&self, component: ComponentId) -> u64 {
        self.get(component).volume
    }

    pub fn iter(&self) -> impl Iterator<Item = &ComponentVolume> {
        self.entries.iter()
    }

    /// Adds `elements` to `component`, binding it to `channel` and `chunk`
    /// on first use.
    ///
    /// # Panics
    ///
    /// If the component was already bound to a different channel or chunk.
    pub fn add(
        &mut self,
        component: ComponentId,
        channel: TransferChannel,
        elements: u64,
        chunk: usize,
    ) {
        let entry = &mut self.entries[component.index()];
        match entry.channel {
            None => {
                entry.channel = Some(channel);
                entry.chunk = chunk;
            }
            Some(bound) => assert!(
                bound == channel && entry.chunk == chunk,
                "{component} bound to {bound} (chunk {}), got {channel} (chunk {chunk})",
                entry.chunk
            ),
        }
        entry.volume += elements;
    }

    /// Components whose volume or channel differ between the two tables.
    pub fn differences(&self, other: &VolumeTable) -> Vec<(ComponentVolume, ComponentVolume)> {
        self.entries
            .iter()
            .zip(&other.entries)
            .filter(|(a, b)| a != b)
            .map(|(a, b)| (*a, *b))
            .collect()
    }
}

fn ceil_div(d: u64, s: u64) -> u64 {
    d.div_ceil(s)
}

/// Splits `d` into blocks of `s`: yields `(block size, block count)` for the
/// full blocks and the trailing partial block.
fn segments(d: usize, s: usize) -> impl Iterator<Item = (u64, u64)> {
    let (d, s) = (d as u64, s as u64);
    let full = (d / s > 0).then_some((s, d / s));
    let tail = (d % s > 0).then_some((d % s, 1));
    full.into_iter().chain(tail)
}

pub(crate) fn geometry_violations(
    shape: GemmShape,
    mk: MicroKernel,
    tiles: TileConfig,
) -> Vec<Violation> {
    let mut out = Vec::new();
    if mk.first == 0 || mk.second == 0 {
        out.push(Violation::VectorMultiple {
            first: mk.first,
            second: mk.second,
            width: 0,
        });
    }
    for (param, value, dim) in [
        ("mc", tiles.mc, shape.m),
        ("nc", tiles.nc, shape.n),
        ("kc", tiles.kc, shape.k),
    ] {
        if value == 0 {
            out.push(Violation::ZeroTile { param });
        } else if value > dim {
            out.push(Violation::ExceedsProblem { param, value, dim });
        }
    }
    out
}

/// Exact element counts per component for one configuration.
pub fn channel_volumes(
    variant: Variant,
    shape: GemmShape,
    mk: MicroKernel,
    tiles: TileConfig,
) -> Result<VolumeTable> {
    let violations = geometry_violations(shape, mk, tiles);
    if !violations.is_empty() {
        return Err(Error::InvalidConfig(violations));
    }
    let GemmShape { m, n, k } = shape;
    let TileConfig { mc, nc, kc } = tiles;
    let mr = mk.first as u64;
    let second = mk.second as u64;

    use ComponentId::*;
    let mut v = [0u64; 9];
    let mut bump = |c: ComponentId, x: u64| v[c.index()] += x;

    // Packs into the outermost buffer happen once per block pair of the two
    // outer loops.
    match variant {
        Variant::B3A2C0 | Variant::B3C2A0 => {
            for (ncb, cn) in segments(n, nc) {
                for (kcb, ck) in segments(k, kc) {
                    bump(PackM, cn * ck * kcb * ncb);
                }
            }
        }
        Variant::C3B2A0 => {
            for (ncb, cn) in segments(n, nc) {
                for (mcb, cm) in segments(m, mc) {
                    bump(PackM, cn * cm * mcb * ncb);
                    bump(UnpackL2orM, cn * cm * mcb * ncb);
                }
            }
        }
    }

    for (ncb, cn) in segments(n, nc) {
        for (kcb, ck) in segments(k, kc) {
            for (mcb, cm) in segments(m, mc) {
                let w = cn * ck * cm;
                match variant {
                    Variant::B3A2C0 => {
                        bump(PackL2, w * mcb * kcb);
                        bump(CopyL1, w * kcb * ncb);
                        bump(StreamResidentLoad, w * mcb * ncb);
                        bump(StreamResidentStore, w * mcb * ncb);
                        bump(StreamL2, w * ceil_div(ncb, second) * mcb * kcb);
                        bump(StreamL1, w * ceil_div(mcb, mr) * kcb * ncb);
                    }
                    Variant::C3B2A0 => {
                        bump(PackL2, w * kcb * ncb);
                        bump(CopyL1, w * mcb * ncb);
                        bump(WritebackL1, w * mcb * ncb);
                        bump(StreamResidentLoad, w * mcb * kcb);
                        bump(StreamL1, w * 2 * ceil_div(kcb, second) * mcb * ncb);
                        bump(StreamL2, w * ceil_div(mcb, mr) * kcb * ncb);
                    }
                    Variant::B3C2A0 => {
                        bump(PackL2, w * mcb * ncb);
                        bump(UnpackL2orM, w * mcb * ncb);
                        bump(CopyL1, w * kcb * ncb);
                        bump(StreamResidentLoad, w * mcb * kcb);
                        bump(StreamL2, w * 2 * ceil_div(kcb, second) * mcb * ncb);
                        bump(StreamL1, w * ceil_div(mcb, mr) * kcb * ncb);
                    }
                }
            }
        }
    }

    let mut table = VolumeTable::default();
    for (component, channel, chunk) in channel_map(variant, mk) {
        table.add(component, channel, v[component.index()], chunk);
    }
    Ok(table)
}

/// The channel and chunk width each present component uses.
pub fn channel_map(
    variant: Variant,
    mk: MicroKernel,
) -> Vec<(ComponentId, TransferChannel, usize)> {
    use ComponentId::*;
    let (mr, second) = (mk.first, mk.second);
    match variant {
        Variant::B3A2C0 => vec![
            (PackM, TransferChannel::PACK_M_M, second),
            (PackL2, TransferChannel::PACK_M_L2, mr),
            (CopyL1, TransferChannel::COPY_M_L1, 1),
            (StreamResidentLoad, TransferChannel::STREAM_M_R, 1),
            (StreamResidentStore, TransferChannel::STORE_R_M, 1),
            (StreamL1, TransferChannel::STREAM_L1_R, 1),
            (StreamL2, TransferChannel::STREAM_L2_R, 1),
        ],
        Variant::C3B2A0 => vec![
            (PackM, TransferChannel::PACK_M_M, mr),
            (PackL2, TransferChannel::PACK_M_L2, second),
            (UnpackL2orM, TransferChannel::UNPACK_M_M, mr),
            (CopyL1, TransferChannel::COPY_M_L1, 1),
            (WritebackL1, TransferChannel::COPY_L1_M, 1),
            (StreamResidentLoad, TransferChannel::STREAM_M_R, 1),
            (StreamL1, TransferChannel::STREAM_L1_R, 1),
            (StreamL2, TransferChannel::STREAM_L2_R, 1),
        ],
        Variant::B3C2A0 => vec![
            (PackM, TransferChannel::PACK_M_M, second),
            (PackL2, TransferChannel::PACK_M_L2, mr),
            (UnpackL2orM, TransferChannel::UNPACK_L2_M, mr),
            (CopyL1, TransferChannel::COPY_M_L1, 1),
            (StreamResidentLoad, TransferChannel::STREAM_M_R, 1),
            (StreamL1, TransferChannel::STREAM_L1_R, 1),
            (StreamL2, TransferChannel::STREAM_L2_R, 1),
        ],
    }
}

/// Seconds of arithmetic for `shape`: 2mnk operations at the profile's rate.
pub fn arithmetic_time(profile: &CalibrationProfile, shape: GemmShape) -> f64 {
    shape.flops() as f64 / (profile.arith_gops() * 1e9)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentCost {
    pub component: ComponentId,
    pub channel: Option<TransferChannel>,
    pub elements: u64,
    pub bytes: u64,
    pub chunk: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub variant: Variant,
    pub shape: GemmShape,
    pub kernel: MicroKernel,
    pub tiles: TileConfig,
    /// One entry per [`ComponentId`], in declaration order.
    pub components: Vec<ComponentCost>,
    pub arithmetic_seconds: f64,
    pub total_seconds: f64,
}

impl CostBreakdown {
    pub fn seconds(&self, component: ComponentId) -> f64 {
        self.components[component.index()].seconds
    }

    pub fn transfer_seconds(&self) -> f64 {
        self.components.iter().map(|c| c.seconds).sum()
    }
}

/// Validated time breakdown of one configuration.
pub fn estimate(
    profile: &CalibrationProfile,
    variant: Variant,
    shape: GemmShape,
    mk: MicroKernel,
    tiles: TileConfig,
) -> Result<CostBreakdown> {
    validate_config(variant, shape, mk, tiles, profile).map_err(Error::InvalidConfig)?;
    let volumes = channel_volumes(variant, shape, mk, tiles)?;
    estimate_from_volumes(profile, variant, shape, mk, tiles, &volumes)
}

/// Times an arbitrary volume table. The total accumulates components in
/// declaration order, then arithmetic.
pub fn estimate_from_volumes(
    profile: &CalibrationProfile,
    variant: Variant,
    shape: GemmShape,
    mk: MicroKernel,
    tiles: TileConfig,
    volumes: &VolumeTable,
) -> Result<CostBreakdown> {
    let elem = profile.element_size() as u64;
    let mut components = Vec::with_capacity(ComponentId::ALL.len());
    let mut total = 0.0;
    for entry in volumes.iter() {
        let bytes = entry.volume * elem;
        let seconds = match entry.channel {
            Some(channel) if bytes > 0 => profile.transfer_time(channel, bytes, entry.chunk)?,
            _ => 0.0,
        };
        total += seconds;
        components.push(ComponentCost {
            component: entry.component,
            channel: entry.channel,
            elements: entry.volume,
            bytes,
            chunk: entry.chunk,
            seconds,
        });
    }
    let arithmetic_seconds = arithmetic_time(profile, shape);
    total += arithmetic_seconds;
    Ok(CostBreakdown {
        variant,
        shape,
        kernel: mk,
        tiles,
        components,
        arithmetic_seconds,
        total_seconds: total,
    })
}
