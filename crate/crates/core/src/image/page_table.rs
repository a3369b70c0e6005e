//! Single-level shadow page tables: one 4-byte PTE per 4 KiB page, stored
//! as a VPN-indexed array at a host-physical base per region.

use std::collections::BTreeMap;

use super::layout::{Layout, RegionMap, PAGE_SHIFT};
use super::ImageError;
use crate::mode::Region;

pub const PTE_SIZE: u32 = 4;
pub const PTE_VALID: u32 = 1;
const PPN_SHIFT: u32 = 10;

pub fn make_pte(ppn: u32) -> u32 {
    (ppn << PPN_SHIFT) | PTE_VALID
}

/// Host PPN of a valid PTE.
pub fn pte_ppn(pte: u32) -> Option<u32> {
    (pte & PTE_VALID != 0).then_some(pte >> PPN_SHIFT)
}

/// How virtual pages map to host-physical pages.
pub enum MappingRule<'a> {
    /// `hpa = va - va_base + hpa_base` within each region.
    FixedOffset,
    /// Caller-supplied `(region, vpn) -> ppn`.
    Custom(&'a dyn Fn(Region, u32) -> u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageTable {
    pub base: u32,
    pub first_vpn: u32,
    pub num_entries: u32,
    entries: BTreeMap<u32, u32>,
}

impl PageTable {
    /// Host-physical address of the PTE for `vpn`.
    pub fn pte_address(&self, vpn: u32) -> u32 {
        self.base.wrapping_add(PTE_SIZE * (vpn.wrapping_sub(self.first_vpn)))
    }

    /// Raw PTE; unmapped pages read as an invalid (zero) entry.
    pub fn pte(&self, vpn: u32) -> u32 {
        self.entries.get(&vpn).copied().unwrap_or(0)
    }

    pub fn valid_entries(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.entries.iter().map(|(&v, &p)| (v, p))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageTableSet {
    tables: [PageTable; 4],
    map: RegionMap,
}

/// Default table bases: the top 4 MiB of the M-mode host-physical range,
/// 1 MiB per region.
pub const DEFAULT_TABLE_BASES: [u32; 4] = [0x3FF0_0000, 0x3FE0_0000, 0x3FD0_0000, 0x3FC0_0000];

impl PageTableSet {
    pub fn table(&self, region: Region) -> &PageTable {
        &self.tables[region.index()]
    }

    pub fn region_map(&self) -> &RegionMap {
        &self.map
    }

    /// Region, PTE address and PTE value consulted when translating `va`.
    pub fn walk(&self, va: u32) -> (Region, u32, u32) {
        let region = self.map.region_of(va);
        let table = self.table(region);
        let vpn = va >> PAGE_SHIFT;
        (region, table.pte_address(vpn), table.pte(vpn))
    }

    pub fn translate(&self, va: u32) -> Option<u32> {
        let (_, _, pte) = self.walk(va);
        pte_ppn(pte).map(|ppn| (ppn << PAGE_SHIFT) | (va & 0xFFF))
    }
}

/// Maps every page of every area in `layout`. Unlisted pages stay invalid.
pub fn build_page_tables(
    map: &RegionMap,
    layout: &Layout,
    rule: MappingRule<'_>,
    bases: [u32; 4],
) -> Result<PageTableSet, ImageError> {
    let mut tables = Region::ALL.map(|region| {
        let va = map.ranges(region).va;
        PageTable {
            base: bases[region.index()],
            first_vpn: va.base >> PAGE_SHIFT,
            num_entries: (va.size() >> PAGE_SHIFT) as u32,
            entries: BTreeMap::new(),
        }
    });

    for (i, t) in tables.iter().enumerate() {
        if t.base % PTE_SIZE != 0 {
            return Err(ImageError::TableBase { region: Region::ALL[i], base: t.base });
        }
        let end = t.base as u64 + (t.num_entries * PTE_SIZE) as u64;
        if end > 1 << 32 {
            return Err(ImageError::TableBase { region: Region::ALL[i], base: t.base });
        }
        for (j, u) in tables.iter().enumerate().skip(i + 1) {
            let u_end = u.base as u64 + (u.num_entries * PTE_SIZE) as u64;
            if (t.base as u64) < u_end && (u.base as u64) < end {
                return Err(ImageError::TableBase { region: Region::ALL[j], base: u.base });
            }
        }
    }

    for (region, _, range) in layout.all_areas(map) {
        let hpa_range = map.ranges(region).hpa;
        for vpn in (range.base >> PAGE_SHIFT)..=(range.limit >> PAGE_SHIFT) {
            let ppn = match &rule {
                MappingRule::FixedOffset => map.fixed_hpa(vpn << PAGE_SHIFT) >> PAGE_SHIFT,
                MappingRule::Custom(f) => f(region, vpn),
            };
            if ppn >= 1 << 20 || !hpa_range.contains(ppn << PAGE_SHIFT) {
                return Err(ImageError::MappingOutsideRange { region, vpn, ppn });
            }
            tables[region.index()].entries.insert(vpn, make_pte(ppn));
        }
    }
    Ok(PageTableSet { tables, map: map.clone() })
}
