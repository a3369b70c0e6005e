//! Memory image construction: region layout, ELF loading, shadow page
//! tables and blob placement.

mod elf;
mod layout;
mod memory;
mod page_table;

pub use elf::{load_elf, ElfImage, Segment};
pub use layout::{
    AddrRange, AreaKind, AreaSet, Layout, LayoutError, RegionMap, RegionRanges, PAGE_SHIFT, PAGE_SIZE, STACK_SIZE,
};
pub use memory::{Area, MemoryImage, SparseMemory};
pub use page_table::{
    build_page_tables, make_pte, pte_ppn, MappingRule, PageTable, PageTableSet, DEFAULT_TABLE_BASES, PTE_SIZE,
    PTE_VALID,
};

use crate::asm::CodeBlob;
use crate::mode::Region;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ImageError {
    #[error("not an ELF file (bad magic)")]
    BadMagic,
    #[error("ELF class is not 32-bit")]
    WrongClass,
    #[error("ELF data encoding is not little-endian")]
    WrongEndianness,
    #[error("ELF machine is not RISC-V")]
    WrongMachine,
    #[error("ELF file is not an executable")]
    NotExecutable,
    #[error("ELF header or segment truncated")]
    Truncated,
    #[error("placements at {0:#010x} and {1:#010x} overlap")]
    Overlap(u32, u32),
    #[error("placement at {base:#010x} ({len} bytes) is outside the {region} areas")]
    OutsideRegion { region: Region, base: u32, len: u32 },
    #[error("code placement at {0:#010x} is not word aligned")]
    Misaligned(u32),
    #[error("{region} vpn {vpn:#x} maps to ppn {ppn:#x} outside the region's host-physical range")]
    MappingOutsideRange { region: Region, vpn: u32, ppn: u32 },
    #[error("{region} page-table base {base:#010x} is misaligned or overlaps another table")]
    TableBase { region: Region, base: u32 },
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

/// Bytes destined for one region of the image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    pub region: Region,
    pub kind: AreaKind,
    pub base: u32,
    pub bytes: Vec<u8>,
}

impl Placement {
    pub fn code(region: Region, blob: &CodeBlob) -> Self {
        Placement { region, kind: AreaKind::Code, base: blob.base, bytes: blob.to_bytes() }
    }

    /// ELF segments count as code when they start in the code area.
    pub fn from_segment(region: Region, layout: &Layout, seg: &Segment) -> Self {
        let kind = if layout.areas(region).code.contains(seg.vaddr) { AreaKind::Code } else { AreaKind::Data };
        let mut bytes = seg.data.clone();
        if kind == AreaKind::Code {
            bytes.resize(bytes.len().div_ceil(4) * 4, 0);
        }
        Placement { region, kind, base: seg.vaddr, bytes }
    }

    fn len(&self) -> u32 {
        self.bytes.len() as u32
    }
}

/// Places every blob into a fresh image. Each placement must lie entirely
/// inside one area of its region and placements must not overlap.
pub fn compose_image(
    placements: &[Placement],
    tables: PageTableSet,
    layout: &Layout,
) -> Result<MemoryImage, ImageError> {
    let map = tables.region_map().clone();
    layout.validate(&map)?;
    for p in placements {
        let outside = ImageError::OutsideRegion { region: p.region, base: p.base, len: p.len() };
        if !map.ranges(p.region).va.contains(p.base) {
            return Err(outside);
        }
        let inside_area = layout.areas(p.region).iter().iter().any(|(_, r)| r.contains_span(p.base, p.len() as u64));
        if !inside_area {
            return Err(outside);
        }
        if p.kind == AreaKind::Code && (p.base % 4 != 0 || p.len() % 4 != 0) {
            return Err(ImageError::Misaligned(p.base));
        }
    }
    for (i, a) in placements.iter().enumerate() {
        for b in &placements[i + 1..] {
            let a_end = a.base as u64 + a.len() as u64;
            let b_end = b.base as u64 + b.len() as u64;
            if (a.base as u64) < b_end && (b.base as u64) < a_end {
                return Err(ImageError::Overlap(a.base, b.base));
            }
        }
    }
    let mut mem = SparseMemory::default();
    for p in placements {
        mem.write_bytes(p.base, &p.bytes);
    }
    Ok(MemoryImage {
        mem,
        layout: layout.clone(),
        tables,
        placements: placements.iter().map(|p| (p.region, p.base, p.len())).collect(),
    })
}

/// Page tables for `layout` under the fixed-offset rule and default bases.
pub fn default_tables(map: &RegionMap, layout: &Layout) -> Result<PageTableSet, ImageError> {
    build_page_tables(map, layout, MappingRule::FixedOffset, DEFAULT_TABLE_BASES)
}
