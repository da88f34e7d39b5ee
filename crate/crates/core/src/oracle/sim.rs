//! Simulated scratchpad hierarchy with per-component transfer counters.

use crate::cost::{ComponentId, VolumeTable};
use crate::error::{Error, Result};
use crate::hierarchy::{CalibrationProfile, MemoryLevel, TransferChannel, TransferKind};

/// A buffer resident at one memory level. Column-major when it holds a
/// plain matrix; packed buffers use the micro-panel layouts of the
/// interpreter.
#[derive(Debug, Clone)]
pub struct Buffer {
    pub name: &'static str,
    pub level: MemoryLevel,
    pub data: Vec<i32>,
}

impl Buffer {
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Tracks occupancy of L1, L2 and the register file, and counts every
/// element that crosses a level boundary.
#[derive(Debug)]
pub struct ScratchpadSim<'p> {
    profile: &'p CalibrationProfile,
    used: [usize; 4],
    counters: VolumeTable,
}

impl<'p> ScratchpadSim<'p> {
    pub fn new(profile: &'p CalibrationProfile) -> Self {
        Self {
            profile,
            used: [0; 4],
            counters: VolumeTable::default(),
        }
    }

    /// Capacity of `level` in bytes; registers are counted in elements.
    fn capacity(&self, level: MemoryLevel) -> Option<usize> {
        match level {
            MemoryLevel::R => Some(self.profile.vreg_count() * self.profile.vreg_width()),
            MemoryLevel::L1 => Some(self.profile.cap_l1()),
            MemoryLevel::L2 => Some(self.profile.cap_l2()),
            MemoryLevel::M => None,
        }
    }

    fn footprint(&self, level: MemoryLevel, elements: usize) -> usize {
        match level {
            MemoryLevel::R => elements,
            _ => elements * self.profile.element_size(),
        }
    }

    /// Reserves a zeroed buffer, failing if the level would overflow.
    pub fn alloc(
        &mut self,
        name: &'static str,
        level: MemoryLevel,
        elements: usize,
    ) -> Result<Buffer> {
        let bytes = self.footprint(level, elements);
        let slot = level as usize;
        if let Some(capacity) = self.capacity(level) {
            let needed = self.used[slot] + bytes;
            if needed > capacity {
                return Err(Error::CapacityOverflow {
                    buffer: name,
                    level,
                    needed,
                    capacity,
                });
            }
        }
        self.used[slot] += bytes;
        Ok(Buffer {
            name,
            level,
            data: vec![0; elements],
        })
    }

    pub fn free(&mut self, buffer: Buffer) {
        let bytes = self.footprint(buffer.level, buffer.len());
        self.used[buffer.level as usize] -= bytes;
    }

    /// Wraps an operand that lives in main memory.
    pub fn main_memory(name: &'static str, data: Vec<i32>) -> Buffer {
        Buffer {
            name,
            level: MemoryLevel::M,
            data,
        }
    }

    /// Records a block transfer from `from` to `to`.
    pub fn transfer(
        &mut self,
        component: ComponentId,
        kind: TransferKind,
        from: &Buffer,
        to: &Buffer,
        elements: usize,
        chunk: usize,
    ) {
        let channel = TransferChannel::new(from.level, to.level, kind);
        self.counters
            .add(component, channel, elements as u64, chunk);
    }

    /// Records a micro-kernel read of `from` into the registers. The read is
    /// rejected unless `from` sits at the level the variant prescribes.
    pub fn stream_load(
        &mut self,
        component: ComponentId,
        from: &Buffer,
        expected: MemoryLevel,
        elements: usize,
    ) -> Result<()> {
        self.check_level(from, expected)?;
        let channel = TransferChannel::new(from.level, MemoryLevel::R, TransferKind::StreamLoad);
        self.counters.add(component, channel, elements as u64, 1);
        Ok(())
    }

    /// Records a micro-kernel write from the registers into `to`.
    ///
    /// Stores into main memory use the StreamStore channel; stores into a
    /// scratchpad are booked on the same channel as the matching load.
    pub fn stream_store(
        &mut self,
        component: ComponentId,
        to: &Buffer,
        expected: MemoryLevel,
        elements: usize,
    ) -> Result<()> {
        self.check_level(to, expected)?;
        let channel = match to.level {
            MemoryLevel::M => {
                TransferChannel::new(MemoryLevel::R, MemoryLevel::M, TransferKind::StreamStore)
            }
            level => TransferChannel::new(level, MemoryLevel::R, TransferKind::StreamLoad),
        };
        self.counters.add(component, channel, elements as u64, 1);
        Ok(())
    }

    fn check_level(&self, buffer: &Buffer, expected: MemoryLevel) -> Result<()> {
        if buffer.level != expected {
            return Err(Error::OffLevelRead {
                buffer: buffer.name,
                expected,
                actual: buffer.level,
            });
        }
        Ok(())
    }

    pub fn counters(&self) -> &VolumeTable {
        &self.counters
    }

    pub fn into_counters(self) -> VolumeTable {
        self.counters
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacity_overflow_names_buffer() {
        let p = CalibrationProfile::gap8().with_capacities(64, 128);
        let mut sim = ScratchpadSim::new(&p);
        let a = sim.alloc("Ac", MemoryLevel::L2, 100).unwrap();
        let err = sim.alloc("Cc", MemoryLevel::L2, 29).unwrap_err();
        assert_eq!(
            err,
            Error::CapacityOverflow {
                buffer: "Cc",
                level: MemoryLevel::L2,
                needed: 129,
                capacity: 128
            }
        );
        sim.free(a);
        assert!(sim.alloc("Cc", MemoryLevel::L2, 128).is_ok());
        assert!(sim.alloc("huge", MemoryLevel::M, 1 << 20).is_ok());
    }

    #[test]
    fn register_file_is_bounded() {
        let p = CalibrationProfile::gap8();
        let mut sim = ScratchpadSim::new(&p);
        let tile = sim.alloc("tile", MemoryLevel::R, 120).unwrap();
        assert!(sim.alloc("extra", MemoryLevel::R, 9).is_err());
        sim.free(tile);
    }

    #[test]
    fn off_level_read_fails() {
        let p = CalibrationProfile::gap8();
        let mut sim = ScratchpadSim::new(&p);
        let br = sim.alloc("Br", MemoryLevel::L1, 16).unwrap();
        let err = sim
            .stream_load(ComponentId::StreamL2, &br, MemoryLevel::L2, 4)
            .unwrap_err();
        assert_eq!(
            err,
            Error::OffLevelRead {
                buffer: "Br",
                expected: MemoryLevel::L2,
                actual: MemoryLevel::L1
            }
        );
        assert_eq!(sim.counters().volume(ComponentId::StreamL2), 0);
    }

    #[test]
    fn transfers_count_exact_elements() {
        let p = CalibrationProfile::gap8();
        let mut sim = ScratchpadSim::new(&p);
        let b = ScratchpadSim::main_memory("B", vec![0; 64]);
        let bc = sim.alloc("Bc", MemoryLevel::M, 64).unwrap();
        sim.transfer(ComponentId::PackM, TransferKind::Pack, &b, &bc, 4, 4);
        sim.transfer(ComponentId::PackM, TransferKind::Pack, &b, &bc, 2, 4);
        let entry = sim.counters().get(ComponentId::PackM);
        assert_eq!(entry.volume, 6);
        assert_eq!(entry.channel, Some(TransferChannel::PACK_M_M));
        assert_eq!(entry.chunk, 4);

        let cr = sim.alloc("Cr", MemoryLevel::L1, 8).unwrap();
        sim.stream_load(ComponentId::StreamL1, &cr, MemoryLevel::L1, 4)
            .unwrap();
        sim.stream_store(ComponentId::StreamL1, &cr, MemoryLevel::L1, 4)
            .unwrap();
        assert_eq!(sim.counters().volume(ComponentId::StreamL1), 8);
    }
}
