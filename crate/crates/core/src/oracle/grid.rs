//! Randomized analytic-vs-interpreter equivalence grid.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::run_oracle;
use crate::cost::{channel_volumes, ComponentVolume};
use crate::error::{Error, Result};
use crate::hierarchy::CalibrationProfile;
use crate::variants::{
    default_tiles, microkernel_menu, GemmShape, MicroKernel, TileConfig, Variant,
};

/// One point of the grid. Capacities are shrunk so that small shapes still
/// exercise every blocking loop, including partial edge blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridCase {
    pub index: usize,
    pub variant: Variant,
    pub shape: GemmShape,
    pub kernel: MicroKernel,
    pub tiles: TileConfig,
    pub cap_l1: usize,
    pub cap_l2: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseOutcome {
    pub case: GridCase,
    pub correct: bool,
    /// (analytic, interpreted) pairs that disagree.
    pub mismatches: Vec<(ComponentVolume, ComponentVolume)>,
}

impl CaseOutcome {
    pub fn passed(&self) -> bool {
        self.correct && self.mismatches.is_empty()
    }
}

/// Draws `cases` feasible tuples with every dimension in `1..=max_dim`.
/// Variants rotate so each gets an equal share.
pub fn grid(
    base: &CalibrationProfile,
    cases: usize,
    max_dim: usize,
    seed: u64,
) -> Result<Vec<GridCase>> {
    if max_dim == 0 {
        return Err(Error::InvalidShape { m: 0, n: 0, k: 0 });
    }
    let elem = base.element_size();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(cases);
    while out.len() < cases {
        let variant = Variant::ALL[out.len() % Variant::ALL.len()];
        let menu = microkernel_menu(variant, base);
        let kernel = *menu
            .choose(&mut rng)
            .ok_or(Error::NoFeasibleKernel(variant))?;
        let dim = |rng: &mut ChaCha8Rng| rng.gen_range(1..=max_dim);
        let shape = GemmShape::new(dim(&mut rng), dim(&mut rng), dim(&mut rng))?;

        // L1 holds between one and a few dozen kernel-wide slivers; L2 holds
        // between one and `max_dim` of the L1-sized panels.
        let sliver = kernel.first.max(kernel.second) * elem;
        let cap_l1 = (sliver * rng.gen_range(1..=max_dim)).min(base.cap_l1());
        let cap_l2 = (cap_l1 * rng.gen_range(1..=max_dim)).min(base.cap_l2());
        let profile = base.with_capacities(cap_l1, cap_l2);
        let tiles = match default_tiles(variant, shape, kernel, &profile) {
            Ok(t) => t,
            Err(Error::Infeasible { .. }) => continue,
            Err(e) => return Err(e),
        };
        out.push(GridCase {
            index: out.len(),
            variant,
            shape,
            kernel,
            tiles,
            cap_l1,
            cap_l2,
            seed: rng.gen(),
        });
    }
    Ok(out)
}

/// Runs the interpreter on one case and compares against the closed forms.
pub fn check_case(base: &CalibrationProfile, case: &GridCase) -> Result<CaseOutcome> {
    let profile = base.with_capacities(case.cap_l1, case.cap_l2);
    let run = run_oracle(
        case.variant,
        case.shape,
        case.kernel,
        case.tiles,
        &profile,
        case.seed,
    )?;
    let analytic = channel_volumes(case.variant, case.shape, case.kernel, case.tiles)?;
    Ok(CaseOutcome {
        case: case.clone(),
        correct: run.correct,
        mismatches: analytic.differences(&run.counters),
    })
}
