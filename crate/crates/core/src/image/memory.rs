use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::layout::{AreaKind, Layout, RegionMap, PAGE_SHIFT, PAGE_SIZE};
use super::page_table::PageTableSet;
use crate::mode::Region;

type Page = Box<[u8; PAGE_SIZE as usize]>;

/// Sparse byte-addressable 4 GiB space indexed by virtual address.
/// Unwritten bytes read as zero.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SparseMemory {
    pages: BTreeMap<u32, Page>,
}

impl SparseMemory {
    pub fn read_u8(&self, addr: u32) -> u8 {
        self.pages.get(&(addr >> PAGE_SHIFT)).map_or(0, |p| p[(addr & (PAGE_SIZE - 1)) as usize])
    }

    pub fn write_u8(&mut self, addr: u32, value: u8) {
        let page = self.pages.entry(addr >> PAGE_SHIFT).or_insert_with(|| Box::new([0; PAGE_SIZE as usize]));
        page[(addr & (PAGE_SIZE - 1)) as usize] = value;
    }

    /// Little-endian read of `N` bytes starting at `addr` (wrapping).
    pub fn read_le<const N: usize>(&self, addr: u32) -> u32 {
        (0..N).rev().fold(0u32, |acc, i| (acc << 8) | self.read_u8(addr.wrapping_add(i as u32)) as u32)
    }

    pub fn write_le<const N: usize>(&mut self, addr: u32, value: u32) {
        for i in 0..N {
            self.write_u8(addr.wrapping_add(i as u32), (value >> (8 * i)) as u8);
        }
    }

    pub fn read_u32(&self, addr: u32) -> u32 {
        self.read_le::<4>(addr)
    }

    pub fn write_u32(&mut self, addr: u32, value: u32) {
        self.write_le::<4>(addr, value)
    }

    pub fn write_bytes(&mut self, addr: u32, bytes: &[u8]) {
        for (i, &b) in bytes.iter().enumerate() {
            self.write_u8(addr.wrapping_add(i as u32), b);
        }
    }

    /// Addresses of every non-zero word, in address order.
    pub fn nonzero_words(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.pages.iter().flat_map(|(&pn, page)| {
            page.chunks_exact(4).enumerate().filter_map(move |(i, w)| {
                let v = u32::from_le_bytes([w[0], w[1], w[2], w[3]]);
                (v != 0).then_some(((pn << PAGE_SHIFT) + 4 * i as u32, v))
            })
        })
    }
}

/// An annotated area of the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Area {
    pub region: Region,
    pub kind: AreaKind,
    pub base: u32,
    pub limit: u32,
}

/// The guest memory: VA-indexed bytes, area annotations and the shadow
/// page tables used by the timing model.
#[derive(Debug, Clone)]
pub struct MemoryImage {
    pub mem: SparseMemory,
    pub layout: Layout,
    pub tables: PageTableSet,
    /// Placed blobs as `(region, base, length in bytes)`.
    pub placements: Vec<(Region, u32, u32)>,
}

impl MemoryImage {
    pub fn region_map(&self) -> &RegionMap {
        self.tables.region_map()
    }

    /// Area containing `va`, if any.
    pub fn area_of(&self, va: u32) -> Option<(Region, AreaKind)> {
        self.layout.area_of(self.region_map(), va)
    }

    pub fn areas(&self) -> Vec<Area> {
        self.layout
            .all_areas(self.region_map())
            .into_iter()
            .map(|(region, kind, r)| Area { region, kind, base: r.base, limit: r.limit })
            .collect()
    }

    /// Address-sorted hex dump of non-zero words, one `addr: word` per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (addr, w) in self.mem.nonzero_words() {
            let _ = writeln!(out, "{addr:08x}: {w:08x}");
        }
        out
    }
}
