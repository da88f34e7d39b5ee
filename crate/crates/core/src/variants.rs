//! The three algorithmic variants, their micro-kernels and blocking.
//!
//! A variant name lists each operand with the level its buffer occupies:
//! `B3A2C0` keeps the packed `Bc` in main memory (the "L3" role), `Ac` in
//! L2, a slice `Br` of `Bc` in L1 and the `C` micro-tile in registers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{CalibrationProfile, MemoryLevel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variant {
    B3A2C0,
    C3B2A0,
    B3C2A0,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Operand {
    A,
    B,
    C,
}

/// Which operand occupies each level during the inner loops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Residency {
    /// Packed outer buffer kept in main memory.
    pub main: Operand,
    pub l2: Operand,
    pub l1: Operand,
    /// Operand streamed from main memory into the registers.
    pub registers: Operand,
}

impl Residency {
    /// Level from which the micro-kernel reads `operand`.
    pub fn kernel_level(&self, operand: Operand) -> MemoryLevel {
        if operand == self.registers {
            MemoryLevel::M
        } else if operand == self.l2 {
            MemoryLevel::L2
        } else {
            MemoryLevel::L1
        }
    }
}

impl Variant {
    pub const ALL: [Variant; 3] = [Self::B3A2C0, Self::C3B2A0, Self::B3C2A0];

    pub fn residency(self) -> Residency {
        use Operand::*;
        match self {
            Self::B3A2C0 => Residency {
                main: B,
                l2: A,
                l1: B,
                registers: C,
            },
            Self::C3B2A0 => Residency {
                main: C,
                l2: B,
                l1: C,
                registers: A,
            },
            Self::B3C2A0 => Residency {
                main: B,
                l2: C,
                l1: B,
                registers: A,
            },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::B3A2C0 => "B3A2C0",
            Self::C3B2A0 => "C3B2A0",
            Self::B3C2A0 => "B3C2A0",
        }
    }

    /// Name of the micro-kernel's second dimension: `nr` when C is register
    /// resident, `kr` when A is.
    pub fn second_dim_name(self) -> &'static str {
        match self {
            Self::B3A2C0 => "nr",
            Self::C3B2A0 | Self::B3C2A0 => "kr",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown variant `{s}` (expected B3A2C0, C3B2A0 or B3C2A0)"))
    }
}

/// Problem dimensions: A is m x k, B is k x n, C is m x n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GemmShape {
    pub m: usize,
    pub n: usize,
    pub k: usize,
}

impl GemmShape {
    pub fn new(m: usize, n: usize, k: usize) -> Result<Self> {
        if m == 0 || n == 0 || k == 0 {
            return Err(Error::InvalidShape { m, n, k });
        }
        Ok(Self { m, n, k })
    }

    pub fn flops(&self) -> u64 {
        2 * self.m as u64 * self.n as u64 * self.k as u64
    }
}

impl fmt::Display for GemmShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.m, self.n, self.k)
    }
}

/// Register tile: `(mr, nr)` for B3A2C0, `(mr, kr)` for the A-resident
/// variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MicroKernel {
    pub first: usize,
    pub second: usize,
}

impl MicroKernel {
    pub const fn new(first: usize, second: usize) -> Self {
        Self { first, second }
    }

    /// Builds a kernel and checks it against the profile's register file.
    pub fn checked(
        variant: Variant,
        first: usize,
        second: usize,
        profile: &CalibrationProfile,
    ) -> Result<Self> {
        let mk = Self::new(first, second);
        let needed = register_footprint(variant, mk, profile.vreg_width())?;
        if needed > profile.vreg_count() {
            return Err(Error::RegisterBudget {
                needed,
                available: profile.vreg_count(),
            });
        }
        Ok(mk)
    }

    pub fn mr(&self) -> usize {
        self.first
    }
}

impl fmt::Display for MicroKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.first, self.second)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TileConfig {
    pub mc: usize,
    pub nc: usize,
    pub kc: usize,
}

impl TileConfig {
    pub const fn new(mc: usize, nc: usize, kc: usize) -> Self {
        Self { mc, nc, kc }
    }
}

impl fmt::Display for TileConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "mc={} nc={} kc={}", self.mc, self.nc, self.kc)
    }
}

/// A broken configuration invariant, with the numbers that break it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    VectorMultiple {
        first: usize,
        second: usize,
        width: usize,
    },
    RegisterBudget {
        needed: usize,
        available: usize,
    },
    ZeroTile {
        param: &'static str,
    },
    ExceedsProblem {
        param: &'static str,
        value: usize,
        dim: usize,
    },
    L1Capacity {
        needed: usize,
        capacity: usize,
    },
    L2Capacity {
        needed: usize,
        capacity: usize,
    },
    Multiplicity {
        param: &'static str,
        value: usize,
        step_name: &'static str,
        step: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::VectorMultiple {
                first,
                second,
                width,
            } => write!(
                f,
                "micro-kernel {first}x{second} not a multiple of vector width {width}"
            ),
            Self::RegisterBudget { needed, available } => {
                write!(f, "register budget exceeded: {needed} > {available}")
            }
            Self::ZeroTile { param } => write!(f, "{param} must be at least 1"),
            Self::ExceedsProblem { param, value, dim } => {
                write!(f, "{param}={value} exceeds problem dimension {dim}")
            }
            Self::L1Capacity { needed, capacity } => {
                write!(f, "L1 capacity: {needed} bytes > {capacity} bytes")
            }
            Self::L2Capacity { needed, capacity } => {
                write!(f, "L2 capacity: {needed} bytes > {capacity} bytes")
            }
            Self::Multiplicity {
                param,
                value,
                step_name,
                step,
            } => write!(
                f,
                "{param} multiplicity: {param}={value} is not a multiple of {step_name}={step}"
            ),
        }
    }
}

/// Vector registers needed by the micro-kernel.
///
/// B3A2C0 holds the `mr x nr` C micro-tile plus one column of A and one row
/// of B. The A-resident variants hold the `mr x kr` A micro-tile plus one
/// column of C and one column of B.
pub fn register_footprint(variant: Variant, mk: MicroKernel, vreg_width: usize) -> Result<usize> {
    let (a, b) = (mk.first, mk.second);
    if vreg_width == 0 || a == 0 || b == 0 || a % vreg_width != 0 || b % vreg_width != 0 {
        return Err(Error::NotVectorMultiple {
            first: a,
            second: b,
            width: vreg_width,
        });
    }
    let elements = match variant {
        // C tile + A column (mr) + B row (nr)
        Variant::B3A2C0 => a * b + a + b,
        // A tile + C column (mr) + B column (kr)
        Variant::C3B2A0 | Variant::B3C2A0 => a * b + a + b,
    };
    Ok(elements / vreg_width)
}

/// Every legal micro-kernel for `variant`, sorted by (first, second).
pub fn microkernel_menu(variant: Variant, profile: &CalibrationProfile) -> Vec<MicroKernel> {
    let w = profile.vreg_width();
    let fits = |a, b| {
        register_footprint(variant, MicroKernel::new(a, b), w)
            .map(|r| r <= profile.vreg_count())
            .unwrap_or(false)
    };
    let mut menu = Vec::new();
    let mut first = w;
    while fits(first, w) {
        let mut second = w;
        while fits(first, second) {
            menu.push(MicroKernel::new(first, second));
            second += w;
        }
        first += w;
    }
    menu
}

fn largest_fitting(raw: usize, full: usize, step: usize) -> Option<usize> {
    if raw >= full {
        return Some(full);
    }
    let v = raw / step * step;
    (v > 0).then_some(v)
}

/// Blocking that fills L1 first, then L2, leaving the main-memory buffer's
/// free dimension at the full problem size.
pub fn default_tiles(
    variant: Variant,
    shape: GemmShape,
    mk: MicroKernel,
    profile: &CalibrationProfile,
) -> Result<TileConfig> {
    MicroKernel::checked(variant, mk.first, mk.second, profile)?;
    let elem = profile.element_size();
    let (l1, l2) = (profile.cap_l1(), profile.cap_l2());
    let (mr, second) = (mk.first, mk.second);
    let infeasible = |level, reason: String| Error::Infeasible { level, reason };

    let tiles = match variant {
        Variant::B3A2C0 => {
            let kc_raw = l1 / (second * elem);
            if kc_raw == 0 {
                return Err(infeasible(
                    MemoryLevel::L1,
                    format!("one row of Br needs {} bytes", second * elem),
                ));
            }
            let kc = kc_raw.min(shape.k);
            let mc = largest_fitting(l2 / (kc * elem), shape.m, mr).ok_or_else(|| {
                infeasible(
                    MemoryLevel::L2,
                    format!("an {mr}x{kc} micro-panel of Ac does not fit"),
                )
            })?;
            TileConfig::new(mc, shape.n, kc)
        }
        Variant::C3B2A0 => {
            let nc_raw = l1 / (mr * elem);
            if nc_raw == 0 {
                return Err(infeasible(
                    MemoryLevel::L1,
                    format!("one column of Cr needs {} bytes", mr * elem),
                ));
            }
            let nc = nc_raw.min(shape.n);
            let kc = largest_fitting(l2 / (nc * elem), shape.k, second).ok_or_else(|| {
                infeasible(
                    MemoryLevel::L2,
                    format!("a {second}x{nc} micro-panel of Bc does not fit"),
                )
            })?;
            TileConfig::new(shape.m, nc, kc)
        }
        Variant::B3C2A0 => {
            let nc_raw = l1 / (second * elem);
            if nc_raw == 0 {
                return Err(infeasible(
                    MemoryLevel::L1,
                    format!("one column of Br needs {} bytes", second * elem),
                ));
            }
            let nc = nc_raw.min(shape.n);
            let mc = largest_fitting(l2 / (nc * elem), shape.m, mr).ok_or_else(|| {
                infeasible(
                    MemoryLevel::L2,
                    format!("an {mr}x{nc} micro-panel of Cc does not fit"),
                )
            })?;
            TileConfig::new(mc, nc, shape.k)
        }
    };
    debug_assert!(validate_config(variant, shape, mk, tiles, profile).is_ok());
    Ok(tiles)
}

/// Checks every configuration invariant and reports all that fail.
pub fn validate_config(
    variant: Variant,
    shape: GemmShape,
    mk: MicroKernel,
    tiles: TileConfig,
    profile: &CalibrationProfile,
) -> std::result::Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    match register_footprint(variant, mk, profile.vreg_width()) {
        Ok(needed) if needed > profile.vreg_count() => out.push(Violation::RegisterBudget {
            needed,
            available: profile.vreg_count(),
        }),
        Ok(_) => {}
        Err(_) => out.push(Violation::VectorMultiple {
            first: mk.first,
            second: mk.second,
            width: profile.vreg_width(),
        }),
    }

    let params = [
        ("mc", tiles.mc, shape.m),
        ("nc", tiles.nc, shape.n),
        ("kc", tiles.kc, shape.k),
    ];
    for (param, value, dim) in params {
        if value == 0 {
            out.push(Violation::ZeroTile { param });
        } else if value > dim {
            out.push(Violation::ExceedsProblem { param, value, dim });
        }
    }

    let elem = profile.element_size();
    let TileConfig { mc, nc, kc } = tiles;
    let (mr, second) = (mk.first, mk.second);
    let (l1_bytes, l2_bytes) = match variant {
        Variant::B3A2C0 => (kc * second * elem, mc * kc * elem),
        Variant::C3B2A0 => (mr * nc * elem, kc * nc * elem),
        Variant::B3C2A0 => (second * nc * elem, mc * nc * elem),
    };
    if l1_bytes > profile.cap_l1() {
        out.push(Violation::L1Capacity {
            needed: l1_bytes,
            capacity: profile.cap_l1(),
        });
    }
    if l2_bytes > profile.cap_l2() {
        out.push(Violation::L2Capacity {
            needed: l2_bytes,
            capacity: profile.cap_l2(),
        });
    }

    let mut multiple = |param, value: usize, dim, step_name, step: usize| {
        if step > 0 && value > 0 && value < dim && !value.is_multiple_of(step) {
            out.push(Violation::Multiplicity {
                param,
                value,
                step_name,
                step,
            });
        }
    };
    multiple("mc", mc, shape.m, "mr", mr);
    match variant {
        Variant::B3A2C0 => multiple("nc", nc, shape.n, "nr", second),
        Variant::C3B2A0 | Variant::B3C2A0 => multiple("kc", kc, shape.k, "kr", second),
    }

    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}
