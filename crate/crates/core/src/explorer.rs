//! Micro-kernel sweeps and per-layer ranking.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::cost::{estimate, CostBreakdown};
use crate::error::{Error, Result};
use crate::hierarchy::CalibrationProfile;
use crate::variants::{
    default_tiles, microkernel_menu, GemmShape, MicroKernel, TileConfig, Variant,
};

/// One GEMM from a workload table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub id: String,
    pub m: usize,
    pub n: usize,
    pub k: usize,
}

impl LayerSpec {
    pub fn new(id: impl Into<String>, m: usize, n: usize, k: usize) -> Self {
        Self {
            id: id.into(),
            m,
            n,
            k,
        }
    }

    pub fn shape(&self) -> Result<GemmShape> {
        GemmShape::new(self.m, self.n, self.k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub kernel: MicroKernel,
    pub tiles: TileConfig,
    pub breakdown: CostBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub variant: Variant,
    pub shape: GemmShape,
    /// Feasible configurations, fastest first.
    pub entries: Vec<SweepEntry>,
    /// Kernels without a feasible blocking, with the reason.
    pub infeasible: Vec<(MicroKernel, String)>,
}

impl SweepResult {
    pub fn best(&self) -> &SweepEntry {
        &self.entries[0]
    }
}

/// Ascending total time; ties go to the smaller first, then second dimension.
fn rank(a: &SweepEntry, b: &SweepEntry) -> Ordering {
    a.breakdown
        .total_seconds
        .total_cmp(&b.breakdown.total_seconds)
        .then(a.kernel.first.cmp(&b.kernel.first))
        .then(a.kernel.second.cmp(&b.kernel.second))
}

/// Evaluates every kernel of the variant's menu with its default blocking.
pub fn sweep(
    profile: &CalibrationProfile,
    variant: Variant,
    shape: GemmShape,
) -> Result<SweepResult> {
    sweep_kernels(profile, variant, shape, &microkernel_menu(variant, profile))
}

/// Like [`sweep`] over an explicit kernel list. The ranking does not depend
/// on the order of `kernels`.
pub fn sweep_kernels(
    profile: &CalibrationProfile,
    variant: Variant,
    shape: GemmShape,
    kernels: &[MicroKernel],
) -> Result<SweepResult> {
    let mut entries = Vec::new();
    let mut infeasible = Vec::new();
    for &kernel in kernels {
        let evaluated = default_tiles(variant, shape, kernel, profile).and_then(|tiles| {
            estimate(profile, variant, shape, kernel, tiles).map(|breakdown| SweepEntry {
                kernel,
                tiles,
                breakdown,
            })
        });
        match evaluated {
            Ok(entry) => entries.push(entry),
            Err(e) => infeasible.push((kernel, e.to_string())),
        }
    }
    if entries.is_empty() {
        return Err(Error::NoFeasibleKernel(variant));
    }
    entries.sort_by(rank);
    infeasible.sort_by_key(|(k, _)| *k);
    Ok(SweepResult {
        variant,
        shape,
        entries,
        infeasible,
    })
}

/// Best kernel of one (layer, variant) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellBest {
    pub kernel: MicroKernel,
    pub tiles: TileConfig,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerResult {
    pub layer: LayerSpec,
    /// Indexed like [`Variant::ALL`]; failed cells carry the error message.
    pub cells: Vec<(Variant, std::result::Result<CellBest, String>)>,
    /// Fastest variant; `None` if every cell failed.
    pub winner: Option<Variant>,
}

impl LayerResult {
    pub fn cell(&self, variant: Variant) -> std::result::Result<&CellBest, &str> {
        let (_, cell) = self
            .cells
            .iter()
            .find(|(v, _)| *v == variant)
            .expect("every variant has a cell");
        cell.as_ref().map_err(String::as_str)
    }
}

/// Sweeps all three variants for every layer. A failing cell does not abort
/// the others.
pub fn best_per_layer(profile: &CalibrationProfile, layers: &[LayerSpec]) -> Vec<LayerResult> {
    layers
        .iter()
        .map(|layer| {
            let cells: Vec<_> = Variant::ALL
                .iter()
                .map(|&v| {
                    let cell = layer
                        .shape()
                        .and_then(|s| sweep(profile, v, s))
                        .map(|r| {
                            let best = r.best();
                            CellBest {
                                kernel: best.kernel,
                                tiles: best.tiles,
                                total_seconds: best.breakdown.total_seconds,
                            }
                        })
                        .map_err(|e| e.to_string());
                    (v, cell)
                })
                .collect();
            let mut winner: Option<(Variant, f64)> = None;
            for (v, cell) in &cells {
                if let Ok(c) = cell {
                    if winner.is_none_or(|(_, t)| c.total_seconds < t) {
                        winner = Some((*v, c.total_seconds));
                    }
                }
            }
            LayerResult {
                layer: layer.clone(),
                cells,
                winner: winner.map(|(v, _)| v),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::arithmetic_time;
    use proptest::prelude::*;

    fn shape(m: usize, n: usize, k: usize) -> GemmShape {
        GemmShape::new(m, n, k).unwrap()
    }

    #[test]
    fn singleton_menu() {
        let p = CalibrationProfile::gap8().with_registers(6, 4);
        for v in Variant::ALL {
            let r = sweep(&p, v, shape(8, 8, 8)).unwrap();
            assert_eq!(r.entries.len(), 1, "{v}");
            assert_eq!(r.best().kernel, MicroKernel::new(4, 4));
        }
    }

    #[test]
    fn empty_menu_is_an_error() {
        let p = CalibrationProfile::gap8().with_registers(2, 4);
        let err = sweep(&p, Variant::B3A2C0, shape(8, 8, 8)).unwrap_err();
        assert_eq!(err, Error::NoFeasibleKernel(Variant::B3A2C0));
    }

    #[test]
    fn infeasible_kernels_are_recorded() {
        // One 4-wide row of Br fits in 16 bytes of L1, a 28-wide row does not.
        let p = CalibrationProfile::gap8().with_capacities(16, 4096);
        let r = sweep(&p, Variant::B3A2C0, shape(32, 32, 32)).unwrap();
        assert!(!r.infeasible.is_empty());
        assert_eq!(
            r.entries.len() + r.infeasible.len(),
            microkernel_menu(Variant::B3A2C0, &p).len()
        );
        assert!(r.infeasible.iter().all(|(_, why)| !why.is_empty()));
    }

    #[test]
    fn arithmetic_is_constant_across_sweep() {
        let p = CalibrationProfile::gap8();
        let s = shape(64, 96, 80);
        for v in Variant::ALL {
            let r = sweep(&p, v, s).unwrap();
            for e in &r.entries {
                assert_eq!(e.breakdown.arithmetic_seconds, arithmetic_time(&p, s));
            }
        }
    }

    #[test]
    fn degenerate_layer_uses_tie_break() {
        let p = CalibrationProfile::gap8();
        let out = best_per_layer(&p, &[LayerSpec::new("one", 1, 1, 1)]);
        let row = &out[0];
        for v in Variant::ALL {
            assert!(row.cell(v).is_ok(), "{v}");
        }
        let totals: Vec<f64> = Variant::ALL
            .iter()
            .map(|&v| row.cell(v).unwrap().total_seconds)
            .collect();
        let min = totals.iter().cloned().fold(f64::INFINITY, f64::min);
        let first_min = Variant::ALL[totals.iter().position(|&t| t == min).unwrap()];
        assert_eq!(row.winner, Some(first_min));
    }

    #[test]
    fn failing_cell_does_not_abort_others() {
        let p = CalibrationProfile::gap8();
        let out = best_per_layer(
            &p,
            &[
                LayerSpec::new("bad", 0, 4, 4),
                LayerSpec::new("ok", 8, 8, 8),
            ],
        );
        assert!(out[0].cells.iter().all(|(_, c)| c.is_err()));
        assert_eq!(out[0].winner, None);
        assert!(out[1].cells.iter().all(|(_, c)| c.is_ok()));
        assert!(out[1].winner.is_some());
    }

    #[test]
    fn wide_output_prefers_tall_kernels_for_a0_variants() {
        let p = CalibrationProfile::gap8();
        let out = best_per_layer(&p, &[LayerSpec::new("29", 1024, 1000, 1)]);
        for v in [Variant::C3B2A0, Variant::B3C2A0] {
            let best = out[0].cell(v).unwrap();
            assert!(
                best.kernel.first > best.kernel.second,
                "{v}: {}",
                best.kernel
            );
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn argmin_is_optimal(m in 1usize..200, n in 1usize..200, k in 1usize..200, vi in 0usize..3) {
            let p = CalibrationProfile::gap8();
            let r = sweep(&p, Variant::ALL[vi], shape(m, n, k)).unwrap();
            let best = r.best().breakdown.total_seconds;
            for e in &r.entries {
                prop_assert!(best <= e.breakdown.total_seconds);
            }
            for w in r.entries.windows(2) {
                prop_assert_ne!(rank(&w[0], &w[1]), Ordering::Greater);
            }
        }

        #[test]
        fn rank_stable_under_permutation(
            m in 1usize..120, n in 1usize..120, k in 1usize..120, vi in 0usize..3, seed in any::<u64>()
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let p = CalibrationProfile::gap8();
            let v = Variant::ALL[vi];
            let mut menu = microkernel_menu(v, &p);
            let base = sweep_kernels(&p, v, shape(m, n, k), &menu).unwrap();
            menu.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let shuffled = sweep_kernels(&p, v, shape(m, n, k), &menu).unwrap();
            prop_assert_eq!(base, shuffled);
        }
    }
}
