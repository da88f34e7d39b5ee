//! Memory hierarchy model and calibrated machine profile.
//!
//! The machine has four levels (registers, L1, L2, main memory). L1 and L2
//! are scratchpads: every transfer between levels is explicit and timed with
//! a calibrated rate for its channel.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{CalibrationError, Error, Result};

/// Memory level, ordered by distance from the arithmetic unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MemoryLevel {
    R,
    L1,
    L2,
    M,
}

impl MemoryLevel {
    pub const ALL: [MemoryLevel; 4] = [Self::R, Self::L1, Self::L2, Self::M];
}

impl fmt::Display for MemoryLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::R => "R",
            Self::L1 => "L1",
            Self::L2 => "L2",
            Self::M => "M",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TransferKind {
    Pack,
    Unpack,
    Copy,
    StreamLoad,
    StreamStore,
}

/// A directed transfer between two memory levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TransferChannel {
    pub origin: MemoryLevel,
    pub destination: MemoryLevel,
    pub kind: TransferKind,
}

impl TransferChannel {
    pub const fn new(origin: MemoryLevel, destination: MemoryLevel, kind: TransferKind) -> Self {
        Self {
            origin,
            destination,
            kind,
        }
    }

    pub const PACK_M_M: Self = Self::new(MemoryLevel::M, MemoryLevel::M, TransferKind::Pack);
    pub const PACK_M_L2: Self = Self::new(MemoryLevel::M, MemoryLevel::L2, TransferKind::Pack);
    pub const UNPACK_L2_M: Self = Self::new(MemoryLevel::L2, MemoryLevel::M, TransferKind::Unpack);
    pub const COPY_M_L1: Self = Self::new(MemoryLevel::M, MemoryLevel::L1, TransferKind::Copy);
    pub const STREAM_M_R: Self =
        Self::new(MemoryLevel::M, MemoryLevel::R, TransferKind::StreamLoad);
    pub const STREAM_L1_R: Self =
        Self::new(MemoryLevel::L1, MemoryLevel::R, TransferKind::StreamLoad);
    pub const STREAM_L2_R: Self =
        Self::new(MemoryLevel::L2, MemoryLevel::R, TransferKind::StreamLoad);

    /// Unpack of a C buffer that lives in main memory (Cc to C).
    pub const UNPACK_M_M: Self = Self::new(MemoryLevel::M, MemoryLevel::M, TransferKind::Unpack);
    /// Write-back of an L1-resident block to its main-memory buffer.
    pub const COPY_L1_M: Self = Self::new(MemoryLevel::L1, MemoryLevel::M, TransferKind::Copy);
    /// Store of a register-resident C micro-tile to main memory.
    pub const STORE_R_M: Self =
        Self::new(MemoryLevel::R, MemoryLevel::M, TransferKind::StreamStore);

    /// Channels measured directly by calibration, with their file keys.
    pub const CALIBRATED: [(Self, &'static str); 7] = [
        (Self::PACK_M_M, "t_mm"),
        (Self::PACK_M_L2, "t_ml2"),
        (Self::UNPACK_L2_M, "t_l2m"),
        (Self::COPY_M_L1, "t_ml1"),
        (Self::STREAM_M_R, "t_mr"),
        (Self::STREAM_L1_R, "t_l1r"),
        (Self::STREAM_L2_R, "t_l2r"),
    ];

    /// Write-back channels, each falling back to the rate of its calibrated
    /// counterpart unless the calibration file overrides it.
    pub const WRITE_BACK: [(Self, &'static str, Self); 3] = [
        (Self::UNPACK_M_M, "t_mm_unpack", Self::PACK_M_M),
        (Self::COPY_L1_M, "t_l1m", Self::COPY_M_L1),
        (Self::STORE_R_M, "t_rm", Self::STREAM_M_R),
    ];

    /// Pack and unpack transfers reorganise elements in chunks; their rate
    /// scales with the chunk width.
    pub fn is_chunked(&self) -> bool {
        matches!(self.kind, TransferKind::Pack | TransferKind::Unpack)
    }

    pub fn is_known(&self) -> bool {
        Self::CALIBRATED.iter().any(|(c, _)| c == self)
            || Self::WRITE_BACK.iter().any(|(c, _, _)| c == self)
    }

    fn fallback(&self) -> Option<Self> {
        Self::WRITE_BACK
            .iter()
            .find(|(c, _, _)| c == self)
            .map(|(_, _, fb)| *fb)
    }
}

impl fmt::Display for TransferChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} {}->{}", self.kind, self.origin, self.destination)
    }
}

/// Calibrated machine description. Immutable once constructed.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationProfile {
    rates: BTreeMap<TransferChannel, f64>,
    reference_chunk: usize,
    arith_gops: f64,
    cap_l1: usize,
    cap_l2: usize,
    vreg_count: usize,
    vreg_width: usize,
    element_size: usize,
}

const GAP8: &str = include_str!("../data/gap8.cal");

const COUNT_KEYS: [&str; 6] = [
    "cap_l1",
    "cap_l2",
    "vregs",
    "vreg_width",
    "elem_size",
    "ref_chunk",
];

impl CalibrationProfile {
    /// The bundled GAP8 fabric-controller profile.
    pub fn gap8() -> Self {
        Self::parse(GAP8).expect("bundled calibration is valid")
    }

    /// The bundled GAP8 calibration file, verbatim.
    pub fn gap8_text() -> &'static str {
        GAP8
    }

    /// Parses line-oriented `key = value` text. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, CalibrationError> {
        let mut rates = BTreeMap::new();
        let mut counts: BTreeMap<&'static str, usize> = BTreeMap::new();
        let mut gops = None;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .filter(|(k, v)| !k.is_empty() && !v.is_empty())
                .ok_or_else(|| CalibrationError::Malformed {
                    line,
                    text: raw.trim().to_string(),
                })?;

            let duplicate = || CalibrationError::DuplicateKey {
                line,
                key: key.to_string(),
            };
            if let Some(channel) = channel_for_key(key) {
                let rate = parse_rate(line, key, value)?;
                if rates.insert(channel, rate).is_some() {
                    return Err(duplicate());
                }
            } else if key == "gops" {
                let rate = parse_rate(line, key, value)?;
                if gops.replace(rate).is_some() {
                    return Err(duplicate());
                }
            } else if let Some(&name) = COUNT_KEYS.iter().find(|k| **k == key) {
                let count = value
                    .parse::<usize>()
                    .map_err(|_| CalibrationError::BadNumber {
                        line,
                        key: key.to_string(),
                        value: value.to_string(),
                    })?;
                if count == 0 {
                    return Err(CalibrationError::NonPositiveCount {
                        line,
                        key: key.to_string(),
                    });
                }
                if counts.insert(name, count).is_some() {
                    return Err(duplicate());
                }
            } else {
                return Err(CalibrationError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            }
        }

        let missing = |key: &str| CalibrationError::MissingKey {
            key: key.to_string(),
        };
        for (channel, key) in TransferChannel::CALIBRATED {
            if !rates.contains_key(&channel) {
                return Err(missing(key));
            }
        }
        let arith_gops = gops.ok_or_else(|| missing("gops"))?;
        let count = |key: &str| counts.get(key).copied().ok_or_else(|| missing(key));

        Ok(Self {
            rates,
            reference_chunk: counts.get("ref_chunk").copied().unwrap_or(4),
            arith_gops,
            cap_l1: count("cap_l1")?,
            cap_l2: count("cap_l2")?,
            vreg_count: count("vregs")?,
            vreg_width: count("vreg_width")?,
            element_size: count("elem_size")?,
        })
    }

    /// Serialises the profile back into calibration-file text.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (key, value) in self.entries() {
            out.push_str(&format!("{key} = {value}\n"));
        }
        out
    }

    /// Every key of the profile with its value, in calibration-file order.
    /// Write-back overrides appear only when present.
    pub fn entries(&self) -> Vec<(&'static str, f64)> {
        let mut out = Vec::new();
        for (channel, key) in TransferChannel::CALIBRATED {
            out.push((key, self.rates[&channel]));
        }
        for (channel, key, _) in TransferChannel::WRITE_BACK {
            if let Some(rate) = self.rates.get(&channel) {
                out.push((key, *rate));
            }
        }
        out.push(("gops", self.arith_gops));
        out.push(("cap_l1", self.cap_l1 as f64));
        out.push(("cap_l2", self.cap_l2 as f64));
        out.push(("vregs", self.vreg_count as f64));
        out.push(("vreg_width", self.vreg_width as f64));
        out.push(("elem_size", self.element_size as f64));
        out.push(("ref_chunk", self.reference_chunk as f64));
        out
    }

    /// Same machine with different scratchpad capacities (bytes).
    pub fn with_capacities(&self, cap_l1: usize, cap_l2: usize) -> Self {
        assert!(cap_l1 > 0 && cap_l2 > 0, "capacities must be positive");
        Self {
            cap_l1,
            cap_l2,
            ..self.clone()
        }
    }

    /// Same machine with a different vector register file.
    pub fn with_registers(&self, vreg_count: usize, vreg_width: usize) -> Self {
        assert!(
            vreg_count > 0 && vreg_width > 0,
            "register file must be non-empty"
        );
        Self {
            vreg_count,
            vreg_width,
            ..self.clone()
        }
    }

    /// Same machine with a different arithmetic rate.
    pub fn with_arith_gops(&self, gops: f64) -> Self {
        assert!(gops > 0.0, "arithmetic rate must be positive");
        Self {
            arith_gops: gops,
            ..self.clone()
        }
    }

    /// Rate (MB/s) of `channel` at the reference chunk width.
    pub fn base_rate(&self, channel: TransferChannel) -> Result<f64> {
        if let Some(rate) = self.rates.get(&channel) {
            return Ok(*rate);
        }
        channel
            .fallback()
            .and_then(|fb| self.rates.get(&fb).copied())
            .ok_or(Error::UnknownChannel(channel))
    }

    pub fn reference_chunk(&self) -> usize {
        self.reference_chunk
    }

    /// INT8 giga-operations per second.
    pub fn arith_gops(&self) -> f64 {
        self.arith_gops
    }

    pub fn cap_l1(&self) -> usize {
        self.cap_l1
    }

    pub fn cap_l2(&self) -> usize {
        self.cap_l2
    }

    pub fn vreg_count(&self) -> usize {
        self.vreg_count
    }

    pub fn vreg_width(&self) -> usize {
        self.vreg_width
    }

    pub fn element_size(&self) -> usize {
        self.element_size
    }

    /// Rate of `channel` (MB/s) when moving chunks of `chunk` elements.
    ///
    /// Pack and unpack rates scale linearly with the chunk width relative to
    /// the reference chunk; copy and stream rates are fixed.
    pub fn effective_rate(&self, channel: TransferChannel, chunk: usize) -> Result<f64> {
        if chunk == 0 {
            return Err(Error::ZeroChunk);
        }
        let base = self.base_rate(channel)?;
        if channel.is_chunked() {
            Ok(base * (chunk as f64 / self.reference_chunk as f64))
        } else {
            Ok(base)
        }
    }

    /// Seconds needed to move `bytes` over `channel` in chunks of `chunk`
    /// elements. Rates are decimal megabytes per second.
    pub fn transfer_time(&self, channel: TransferChannel, bytes: u64, chunk: usize) -> Result<f64> {
        let rate = self.effective_rate(channel, chunk)?;
        if bytes == 0 {
            return Ok(0.0);
        }
        Ok(bytes as f64 / (rate * 1e6))
    }
}

fn channel_for_key(key: &str) -> Option<TransferChannel> {
    TransferChannel::CALIBRATED
        .iter()
        .find(|(_, k)| *k == key)
        .map(|(c, _)| *c)
        .or_else(|| {
            TransferChannel::WRITE_BACK
                .iter()
                .find(|(_, k, _)| *k == key)
                .map(|(c, _, _)| *c)
        })
}

fn parse_rate(line: usize, key: &str, value: &str) -> Result<f64, CalibrationError> {
    let rate: f64 = value.parse().map_err(|_| CalibrationError::BadNumber {
        line,
        key: key.to_string(),
        value: value.to_string(),
    })?;
    if !rate.is_finite() {
        return Err(CalibrationError::BadNumber {
            line,
            key: key.to_string(),
            value: value.to_string(),
        });
    }
    if rate <= 0.0 {
        return Err(CalibrationError::NonPositiveRate {
            line,
            key: key.to_string(),
            value: rate,
        });
    }
    Ok(rate)
}
