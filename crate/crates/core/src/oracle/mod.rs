//! Instrumented interpreter for the blocked GEMM variants.
//!
//! Each variant's loop nest is executed literally on small integer matrices:
//! operands are packed into micro-panel buffers, slices are copied into the
//! scratchpads, and the micro-kernel moves data through a bounded register
//! file. Every movement is counted, giving transfer volumes that are
//! independent of the closed forms in [`crate::cost`].
//!
//! Matrices are column-major. Packed layouts:
//!
//! - A-role and C-role buffers: micro-panels of `mr` rows; each panel is
//!   stored column by column, `mr` contiguous elements per column.
//! - B-role buffer of B3A2C0: micro-panels of `nr` columns; each panel is
//!   stored row by row, `nr` contiguous elements per row.
//! - B-role buffers of the A-resident variants: micro-panels of `kr` rows,
//!   laid out like the A-role buffers.

mod grid;
mod sim;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::{ComponentId, VolumeTable};
use crate::error::{Error, Result};
use crate::hierarchy::{CalibrationProfile, MemoryLevel, TransferKind};
use crate::variants::{validate_config, GemmShape, MicroKernel, Operand, TileConfig, Variant};

pub use grid::{check_case, grid, CaseOutcome, GridCase};
pub use sim::{Buffer, ScratchpadSim};

/// Dense column-major integer matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<i32>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    /// Builds a matrix from rows given in reading order.
    pub fn from_rows(rows: &[&[i32]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, &x) in row.iter().enumerate() {
                m.set(i, j, x);
            }
        }
        m
    }

    /// Entries drawn uniformly from [-8, 7].
    pub fn random(rows: usize, cols: usize, rng: &mut impl Rng) -> Self {
        Self {
            rows,
            cols,
            data: (0..rows * cols).map(|_| rng.gen_range(-8..=7)).collect(),
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i32 {
        self.data[i + j * self.rows]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: i32) {
        self.data[i + j * self.rows] = x;
    }
}

/// Reference `C + A * B` with a plain triple loop.
pub fn naive_gemm(a: &Matrix, b: &Matrix, c_in: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows || c_in.rows != a.rows || c_in.cols != b.cols {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{}, B is {}x{}, C is {}x{}",
            a.rows, a.cols, b.rows, b.cols, c_in.rows, c_in.cols
        )));
    }
    let mut c = c_in.clone();
    for i in 0..a.rows {
        for j in 0..b.cols {
            let mut acc = c.get(i, j);
            for p in 0..a.cols {
                acc += a.get(i, p) * b.get(p, j);
            }
            c.set(i, j, acc);
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleResult {
    pub counters: VolumeTable,
    /// Interpreted result equals the reference product.
    pub correct: bool,
    pub elements_checked: usize,
}

/// Runs the interpreter on seeded random operands with a nonzero input C.
pub fn run_oracle(
    variant: Variant,
    shape: GemmShape,
    mk: MicroKernel,
    tiles: TileConfig,
    profile: &CalibrationProfile,
    seed: u64,
) -> Result<OracleResult> {
    validate_config(variant, shape, mk, tiles, profile).map_err(Error::InvalidConfig)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = Matrix::random(shape.m, shape.k, &mut rng);
    let b = Matrix::random(shape.k, shape.n, &mut rng);
    let mut c_in = Matrix::random(shape.m, shape.n, &mut rng);
    if c_in.data.iter().all(|&x| x == 0) {
        c_in.data[0] = 1;
    }
    let (c_out, counters) = interpret(variant, mk, tiles, profile, &a, &b, &c_in)?;
    let reference = naive_gemm(&a, &b, &c_in)?;
    Ok(OracleResult {
        counters,
        correct: c_out == reference,
        elements_checked: reference.data.len(),
    })
}

/// Executes `variant` on explicit operands, returning the updated C and the
/// transfer counters.
pub fn interpret(
    variant: Variant,
    mk: MicroKernel,
    tiles: TileConfig,
    profile: &CalibrationProfile,
    a: &Matrix,
    b: &Matrix,
    c_in: &Matrix,
) -> Result<(Matrix, VolumeTable)> {
    if a.cols != b.rows || c_in.rows != a.rows || c_in.cols != b.cols {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{}, B is {}x{}, C is {}x{}",
            a.rows, a.cols, b.rows, b.cols, c_in.rows, c_in.cols
        )));
    }
    let mut run = Interpreter {
        sim: ScratchpadSim::new(profile),
        variant,
        mk,
        tiles,
        m: a.rows,
        n: b.cols,
        k: a.cols,
        a: ScratchpadSim::main_memory("A", a.data.clone()),
        b: ScratchpadSim::main_memory("B", b.data.clone()),
        c: ScratchpadSim::main_memory("C", c_in.data.clone()),
    };
    match variant {
        Variant::B3A2C0 => run.b3a2c0()?,
        Variant::C3B2A0 => run.c3b2a0()?,
        Variant::B3C2A0 => run.b3c2a0()?,
    }
    let c = Matrix {
        rows: run.m,
        cols: run.n,
        data: run.c.data,
    };
    Ok((c, run.sim.into_counters()))
}

/// Start offsets and lengths of the blocks of `step` covering `0..len`.
fn blocks(len: usize, step: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..len).step_by(step).map(move |s| (s, step.min(len - s)))
}

struct Interpreter<'p> {
    sim: ScratchpadSim<'p>,
    variant: Variant,
    mk: MicroKernel,
    tiles: TileConfig,
    m: usize,
    n: usize,
    k: usize,
    a: Buffer,
    b: Buffer,
    c: Buffer,
}

impl Interpreter<'_> {
    fn level(&self, operand: Operand) -> MemoryLevel {
        self.variant.residency().kernel_level(operand)
    }

    /// Packs `rows x cols` of the column-major `src` (leading dimension
    /// `ld`, origin `(r0, c0)`) into `dst` as micro-panels of `panel` rows.
    #[allow(clippy::too_many_arguments)]
    fn pack_row_panels(
        &mut self,
        component: ComponentId,
        src: &Buffer,
        ld: usize,
        (r0, c0): (usize, usize),
        (rows, cols): (usize, usize),
        panel: usize,
        dst: &mut Buffer,
    ) {
        for (ir, rb) in blocks(rows, panel) {
            let base = ir * cols;
            for j in 0..cols {
                let from = r0 + ir + (c0 + j) * ld;
                dst.data[base + j * rb..base + (j + 1) * rb]
                    .copy_from_slice(&src.data[from..from + rb]);
                self.sim
                    .transfer(component, TransferKind::Pack, src, dst, rb, panel);
            }
        }
    }

    /// Inverse of [`Self::pack_row_panels`].
    #[allow(clippy::too_many_arguments)]
    fn unpack_row_panels(
        &mut self,
        component: ComponentId,
        src: &Buffer,
        (rows, cols): (usize, usize),
        panel: usize,
        dst: &mut Buffer,
        ld: usize,
        (r0, c0): (usize, usize),
    ) {
        for (ir, rb) in blocks(rows, panel) {
            let base = ir * cols;
            for j in 0..cols {
                let to = r0 + ir + (c0 + j) * ld;
                dst.data[to..to + rb]
                    .copy_from_slice(&src.data[base + j * rb..base + (j + 1) * rb]);
                self.sim
                    .transfer(component, TransferKind::Unpack, src, dst, rb, panel);
            }
        }
    }

    /// B3A2C0: Bc (M) <- jc, pc; Ac (L2) <- ic; Br (L1) <- jr; C tile in
    /// registers for each (jr, ir), updated by kc outer products.
    fn b3a2c0(&mut self) -> Result<()> {
        let TileConfig { mc, nc, kc } = self.tiles;
        let (mr, nr) = (self.mk.first, self.mk.second);
        let (m, n, k) = (self.m, self.n, self.k);
        let b_src = std::mem::replace(&mut self.b, ScratchpadSim::main_memory("B", Vec::new()));
        let a_src = std::mem::replace(&mut self.a, ScratchpadSim::main_memory("A", Vec::new()));

        for (jc, ncb) in blocks(n, nc) {
            for (pc, kcb) in blocks(k, kc) {
                // Bc: micro-panels of nr columns, each stored row by row.
                let mut bc = self.sim.alloc("Bc", MemoryLevel::M, kcb * ncb)?;
                for (jr, nrb) in blocks(ncb, nr) {
                    let base = jr * kcb;
                    for p in 0..kcb {
                        for j in 0..nrb {
                            bc.data[base + p * nrb + j] = b_src.data[pc + p + (jc + jr + j) * k];
                        }
                        self.sim.transfer(
                            ComponentId::PackM,
                            TransferKind::Pack,
                            &b_src,
                            &bc,
                            nrb,
                            nr,
                        );
                    }
                }

                for (ic, mcb) in blocks(m, mc) {
                    let mut ac = self.sim.alloc("Ac", MemoryLevel::L2, mcb * kcb)?;
                    self.pack_row_panels(
                        ComponentId::PackL2,
                        &a_src,
                        m,
                        (ic, pc),
                        (mcb, kcb),
                        mr,
                        &mut ac,
                    );

                    for (jr, nrb) in blocks(ncb, nr) {
                        let mut br = self.sim.alloc("Br", MemoryLevel::L1, kcb * nrb)?;
                        br.data
                            .copy_from_slice(&bc.data[jr * kcb..jr * kcb + kcb * nrb]);
                        self.sim.transfer(
                            ComponentId::CopyL1,
                            TransferKind::Copy,
                            &bc,
                            &br,
                            kcb * nrb,
                            1,
                        );

                        for (ir, mrb) in blocks(mcb, mr) {
                            let mut c_tile = self.sim.alloc("C tile", MemoryLevel::R, mrb * nrb)?;
                            let mut a_col = self.sim.alloc("A column", MemoryLevel::R, mrb)?;
                            let mut b_row = self.sim.alloc("B row", MemoryLevel::R, nrb)?;

                            let c_level = self.level(Operand::C);
                            for j in 0..nrb {
                                for i in 0..mrb {
                                    c_tile.data[i + j * mrb] =
                                        self.c.data[ic + ir + i + (jc + jr + j) * m];
                                }
                            }
                            self.sim.stream_load(
                                ComponentId::StreamResidentLoad,
                                &self.c,
                                c_level,
                                mrb * nrb,
                            )?;

                            for p in 0..kcb {
                                let a_off = ir * kcb + p * mrb;
                                a_col.data.copy_from_slice(&ac.data[a_off..a_off + mrb]);
                                self.sim.stream_load(
                                    ComponentId::StreamL2,
                                    &ac,
                                    self.level(Operand::A),
                                    mrb,
                                )?;
                                b_row.data.copy_from_slice(&br.data[p * nrb..(p + 1) * nrb]);
                                self.sim.stream_load(
                                    ComponentId::StreamL1,
                                    &br,
                                    self.level(Operand::B),
                                    nrb,
                                )?;
                                for j in 0..nrb {
                                    for i in 0..mrb {
                                        c_tile.data[i + j * mrb] += a_col.data[i] * b_row.data[j];
                                    }
                                }
                            }

                            for j in 0..nrb {
                                for i in 0..mrb {
                                    self.c.data[ic + ir + i + (jc + jr + j) * m] =
                                        c_tile.data[i + j * mrb];
                                }
                            }
                            self.sim.stream_store(
                                ComponentId::StreamResidentStore,
                                &self.c,
                                c_level,
                                mrb * nrb,
                            )?;
                            self.sim.free(b_row);
                            self.sim.free(a_col);
                            self.sim.free(c_tile);
                        }
                        self.sim.free(br);
                    }
                    self.sim.free(ac);
                }
                self.sim.free(bc);
            }
        }
        self.a = a_src;
        self.b = b_src;
        Ok(())
    }

    /// C3B2A0: Cc (M) <- jc, ic; Bc (L2) <- pc; Cr (L1) <- ir; A micro-tile
    /// in registers for each (ir, pr), one matrix-vector product per column.
    fn c3b2a0(&mut self) -> Result<()> {
        let TileConfig { mc, nc, kc } = self.tiles;
        let (mr, kr) = (self.mk.first, self.mk.second);
        let (m, n, k) = (self.m, self.n, self.k);
        let b_src = std::mem::replace(&mut self.b, ScratchpadSim::main_memory("B", Vec::new()));
        let mut c_dst = std::mem::replace(&mut self.c, ScratchpadSim::main_memory("C", Vec::new()));

        for (jc, ncb) in blocks(n, nc) {
            for (ic, mcb) in blocks(m, mc) {
                let mut cc = self.sim.alloc("Cc", MemoryLevel::M, mcb * ncb)?;
                self.pack_row_panels(
                    ComponentId::PackM,
                    &c_dst,
                    m,
                    (ic, jc),
                    (mcb, ncb),
                    mr,
                    &mut cc,
                );

                for (pc, kcb) in blocks(k, kc) {
                    let mut bc = self.sim.alloc("Bc", MemoryLevel::L2, kcb * ncb)?;
                    self.pack_row_panels(
                        ComponentId::PackL2,
                        &b_src,
                        k,
                        (pc, jc),
                        (kcb, ncb),
                        kr,
                        &mut bc,
                    );

                    for (ir, mrb) in blocks(mcb, mr) {
                        let panel = ir * ncb..ir * ncb + mrb * ncb;
                        let mut cr = self.sim.alloc("Cr", MemoryLevel::L1, mrb * ncb)?;
                        cr.data.copy_from_slice(&cc.data[panel.clone()]);
                        self.sim.transfer(
                            ComponentId::CopyL1,
                            TransferKind::Copy,
                            &cc,
                            &cr,
                            mrb * ncb,
                            1,
                        );

                        for (pr, krb) in blocks(kcb, kr) {
                            self.a_tile_mat_vec(
                                (ic + ir, pc + pr),
                                (mrb, krb),
                                &mut cr,
                                &bc,
                                pr * ncb,
                                ncb,
                            )?;
                        }

                        cc.data[panel].copy_from_slice(&cr.data);
                        self.sim.transfer(
                            ComponentId::WritebackL1,
                            TransferKind::Copy,
                            &cr,
                            &cc,
                            mrb * ncb,
                            1,
                        );
                        self.sim.free(cr);
                    }
                    self.sim.free(bc);
                }

                self.unpack_row_panels(
                    ComponentId::UnpackL2orM,
                    &cc,
                    (mcb, ncb),
                    mr,
                    &mut c_dst,
                    m,
                    (ic, jc),
                );
                self.sim.free(cc);
            }
        }
        self.b = b_src;
        self.c = c_dst;
        Ok(())
    }

    /// B3C2A0: Bc (M) <- jc, pc; Cc (L2) <- ic; Br (L1) <- pr; A micro-tile
    /// in registers for each (pr, ir), one matrix-vector product per column.
    fn b3c2a0(&mut self) -> Result<()> {
        let TileConfig { mc, nc, kc } = self.tiles;
        let (mr, kr) = (self.mk.first, self.mk.second);
        let (m, n, k) = (self.m, self.n, self.k);
        let b_src = std::mem::replace(&mut self.b, ScratchpadSim::main_memory("B", Vec::new()));
        let mut c_dst = std::mem::replace(&mut self.c, ScratchpadSim::main_memory("C", Vec::new()));

        for (jc, ncb) in blocks(n, nc) {
            for (pc, kcb) in blocks(k, kc) {
                let mut bc = self.sim.alloc("Bc", MemoryLevel::M, kcb * ncb)?;
                self.pack_row_panels(
                    ComponentId::PackM,
                    &b_src,
                    k,
                    (pc, jc),
                    (kcb, ncb),
                    kr,
                    &mut bc,
                );

                for (ic, mcb) in blocks(m, mc) {
                    let mut cc = self.sim.alloc("Cc", MemoryLevel::L2, mcb * ncb)?;
                    self.pack_row_panels(
                        ComponentId::PackL2,
                        &c_dst,
                        m,
                        (ic, jc),
                        (mcb, ncb),
                        mr,
                        &mut cc,
                    );

                    for (pr, krb) in blocks(kcb, kr) {
                        let mut br = self.sim.alloc("Br", MemoryLevel::L1, krb * ncb)?;
                        br.data
                            .copy_from_slice(&bc.data[pr * ncb..pr * ncb + krb * ncb]);
                        self.sim.transfer(
                            ComponentId::CopyL1,
                            TransferKind::Copy,
                            &bc,
                            &br,
                            krb * ncb,
                            1,
                        );

                        for (ir, mrb) in blocks(mcb, mr) {
                            // Cc panel rows ir..ir+mrb, viewed as its own mrb x ncb block.
                            let panel = ir * ncb..ir * ncb + mrb * ncb;
                            let mut c_panel = Buffer {
                                name: cc.name,
                                level: cc.level,
                                data: cc.data[panel.clone()].to_vec(),
                            };
                            self.a_tile_mat_vec(
                                (ic + ir, pc + pr),
                                (mrb, krb),
                                &mut c_panel,
                                &br,
                                0,
                                ncb,
                            )?;
                            cc.data[panel].copy_from_slice(&c_panel.data);
                        }
                        self.sim.free(br);
                    }

                    self.unpack_row_panels(
                        ComponentId::UnpackL2orM,
                        &cc,
                        (mcb, ncb),
                        mr,
                        &mut c_dst,
                        m,
                        (ic, jc),
                    );
                    self.sim.free(cc);
                }
                self.sim.free(bc);
            }
        }
        self.b = b_src;
        self.c = c_dst;
        Ok(())
    }

    /// Micro-kernel of the A-resident variants: loads the `mrb x krb` tile of
    /// A at `(row, col)` into registers, then for each of `ncb` columns
    /// streams one C column (`mrb` elements of `c_buf`) and one B column
    /// (`krb` elements of `b_buf` at `b_base`) through the registers.
    fn a_tile_mat_vec(
        &mut self,
        (row, col): (usize, usize),
        (mrb, krb): (usize, usize),
        c_buf: &mut Buffer,
        b_buf: &Buffer,
        b_base: usize,
        ncb: usize,
    ) -> Result<()> {
        let (c_component, b_component) = match self.variant {
            Variant::C3B2A0 => (ComponentId::StreamL1, ComponentId::StreamL2),
            _ => (ComponentId::StreamL2, ComponentId::StreamL1),
        };
        let mut a_tile = self.sim.alloc("A tile", MemoryLevel::R, mrb * krb)?;
        let mut c_col = self.sim.alloc("C column", MemoryLevel::R, mrb)?;
        let mut b_col = self.sim.alloc("B column", MemoryLevel::R, krb)?;

        for p in 0..krb {
            for i in 0..mrb {
                a_tile.data[i + p * mrb] = self.a.get_col_major(row + i, col + p, self.m);
            }
        }
        self.sim.stream_load(
            ComponentId::StreamResidentLoad,
            &self.a,
            self.level(Operand::A),
            mrb * krb,
        )?;

        let c_level = self.level(Operand::C);
        let b_level = self.level(Operand::B);
        for j in 0..ncb {
            c_col
                .data
                .copy_from_slice(&c_buf.data[j * mrb..(j + 1) * mrb]);
            self.sim.stream_load(c_component, c_buf, c_level, mrb)?;
            let b_off = b_base + j * krb;
            b_col.data.copy_from_slice(&b_buf.data[b_off..b_off + krb]);
            self.sim.stream_load(b_component, b_buf, b_level, krb)?;
            for p in 0..krb {
                for i in 0..mrb {
                    c_col.data[i] += a_tile.data[i + p * mrb] * b_col.data[p];
                }
            }
            c_buf.data[j * mrb..(j + 1) * mrb].copy_from_slice(&c_col.data);
            self.sim.stream_store(c_component, c_buf, c_level, mrb)?;
        }

        self.sim.free(b_col);
        self.sim.free(c_col);
        self.sim.free(a_tile);
        Ok(())
    }
}

impl Buffer {
    fn get_col_major(&self, i: usize, j: usize, ld: usize) -> i32 {
        self.data[i + j * ld]
    }
}
