use std::fmt;

use crate::mode::Region;

/// Inclusive address range `[base, limit]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AddrRange {
    pub base: u32,
    pub limit: u32,
}

impl AddrRange {
    pub const fn new(base: u32, limit: u32) -> Self {
        AddrRange { base, limit }
    }

    pub fn contains(&self, addr: u32) -> bool {
        self.base <= addr && addr <= self.limit
    }

    /// True if `[start, start+len)` lies inside the range.
    pub fn contains_span(&self, start: u32, len: u64) -> bool {
        len == 0 && self.contains(start) || self.contains(start) && (start as u64 + len - 1) <= self.limit as u64
    }

    pub fn size(&self) -> u64 {
        self.limit as u64 - self.base as u64 + 1
    }

    /// One past the last address, as a 64-bit value.
    pub fn end(&self) -> u64 {
        self.limit as u64 + 1
    }

    pub fn overlaps(&self, other: &AddrRange) -> bool {
        self.base <= other.limit && other.base <= self.limit
    }

    pub fn parse(s: &str) -> Option<AddrRange> {
        let (a, b) = s.split_once('-')?;
        let a = crate::asm::parse_int(a)?;
        let b = crate::asm::parse_int(b)?;
        if !(0..=u32::MAX as i64).contains(&a) || !(0..=u32::MAX as i64).contains(&b) || a > b {
            return None;
        }
        Some(AddrRange::new(a as u32, b as u32))
    }
}

impl fmt::Display for AddrRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#010x}-{:#010x}", self.base, self.limit)
    }
}

/// Virtual, guest-physical and host-physical ranges of one region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionRanges {
    pub va: AddrRange,
    pub gpa: AddrRange,
    pub hpa: AddrRange,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMap {
    ranges: [RegionRanges; 4],
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LayoutError {
    #[error("virtual ranges do not partition the 32-bit address space")]
    NotAPartition,
    #[error("{region} ranges differ in size")]
    SizeMismatch { region: Region },
    #[error("{region} {what} area {range} lies outside the region's virtual range")]
    AreaOutsideRegion { region: Region, what: &'static str, range: AddrRange },
    #[error("{region} areas are not page aligned or overlap")]
    BadAreas { region: Region },
    #[error("console address {0:#010x} is not word aligned")]
    BadConsole(u32),
}

impl Default for RegionMap {
    /// The address-range table from the default parameter set.
    fn default() -> Self {
        let r = AddrRange::new;
        RegionMap {
            ranges: [
                RegionRanges {
                    va: r(0x0000_0000, 0x3FFF_FFFF),
                    gpa: r(0xC000_0000, 0xFFFF_FFFF),
                    hpa: r(0xC000_0000, 0xFFFF_FFFF),
                },
                RegionRanges {
                    va: r(0x4000_0000, 0x7FFF_FFFF),
                    gpa: r(0x8000_0000, 0xBFFF_FFFF),
                    hpa: r(0x8000_0000, 0xBFFF_FFFF),
                },
                RegionRanges {
                    va: r(0x8000_0000, 0xBFFF_FFFF),
                    gpa: r(0x4000_0000, 0x7FFF_FFFF),
                    hpa: r(0x4000_0000, 0x7FFF_FFFF),
                },
                RegionRanges {
                    va: r(0xC000_0000, 0xFFFF_FFFF),
                    gpa: r(0x0000_0000, 0x3FFF_FFFF),
                    hpa: r(0x0000_0000, 0x3FFF_FFFF),
                },
            ],
        }
    }
}

impl RegionMap {
    pub fn new(ranges: [RegionRanges; 4]) -> Result<Self, LayoutError> {
        let map = RegionMap { ranges };
        map.validate()?;
        Ok(map)
    }

    pub fn ranges(&self, region: Region) -> &RegionRanges {
        &self.ranges[region.index()]
    }

    pub fn ranges_mut(&mut self, region: Region) -> &mut RegionRanges {
        &mut self.ranges[region.index()]
    }

    /// Virtual ranges must tile 0..=0xFFFFFFFF exactly; each region's three
    /// ranges must have equal size so a linear mapping exists.
    pub fn validate(&self) -> Result<(), LayoutError> {
        let mut vas: Vec<AddrRange> = self.ranges.iter().map(|r| r.va).collect();
        vas.sort_by_key(|r| r.base);
        let mut next = 0u64;
        for r in &vas {
            if r.base as u64 != next {
                return Err(LayoutError::NotAPartition);
            }
            next = r.end();
        }
        if next != 1 << 32 {
            return Err(LayoutError::NotAPartition);
        }
        for region in Region::ALL {
            let r = self.ranges(region);
            if r.va.size() != r.hpa.size() || r.va.size() != r.gpa.size() {
                return Err(LayoutError::SizeMismatch { region });
            }
        }
        Ok(())
    }

    /// The unique region whose virtual range contains `va`.
    pub fn region_of(&self, va: u32) -> Region {
        Region::ALL
            .into_iter()
            .find(|&r| self.ranges(r).va.contains(va))
            .expect("validated region map partitions the address space")
    }

    /// Fixed-offset translation `va - va.base + hpa.base`.
    pub fn fixed_hpa(&self, va: u32) -> u32 {
        let r = self.ranges(self.region_of(va));
        va.wrapping_sub(r.va.base).wrapping_add(r.hpa.base)
    }

    /// Fixed-offset translation into the guest-physical space.
    pub fn fixed_gpa(&self, va: u32) -> u32 {
        let r = self.ranges(self.region_of(va));
        va.wrapping_sub(r.va.base).wrapping_add(r.gpa.base)
    }
}

/// Kind of an annotated area.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AreaKind {
    Code,
    Data,
    Stack,
    /// Memory-mapped console page.
    Io,
}

impl AreaKind {
    pub fn name(self) -> &'static str {
        match self {
            AreaKind::Code => "code",
            AreaKind::Data => "data",
            AreaKind::Stack => "stack",
            AreaKind::Io => "io",
        }
    }
}

/// Code, data and stack areas of one region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AreaSet {
    pub code: AddrRange,
    pub data: AddrRange,
    pub stack: AddrRange,
}

impl AreaSet {
    /// Areas for a region starting at `base`: code in the first MiB
    /// (starting at `base + code_offset`), data in the second MiB with its
    /// top 64 KiB reserved for the stack.
    pub const fn standard(base: u32, code_offset: u32) -> Self {
        AreaSet {
            code: AddrRange::new(base + code_offset, base + 0x000F_FFFF),
            data: AddrRange::new(base + 0x0010_0000, base + 0x001E_FFFF),
            stack: AddrRange::new(base + 0x001F_0000, base + 0x001F_FFFF),
        }
    }

    pub fn stack_top(&self) -> u32 {
        self.stack.limit.wrapping_add(1)
    }

    pub fn iter(&self) -> [(AreaKind, AddrRange); 3] {
        [(AreaKind::Code, self.code), (AreaKind::Data, self.data), (AreaKind::Stack, self.stack)]
    }
}

pub const STACK_SIZE: u32 = 64 * 1024;
pub const PAGE_SIZE: u32 = 4096;
pub const PAGE_SHIFT: u32 = 12;

/// Placement of every area in the virtual address space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub areas: [AreaSet; 4],
    /// Word-aligned console output port; its page is mapped as an I/O area
    /// of the region that contains it.
    pub console: u32,
}

impl Default for Layout {
    fn default() -> Self {
        Layout {
            areas: [
                AreaSet::standard(0x0000_0000, 0x0001_0000),
                AreaSet::standard(0x4000_0000, 0),
                AreaSet::standard(0x8000_0000, 0),
                AreaSet::standard(0xC000_0000, 0),
            ],
            console: 0xBFFF_F000,
        }
    }
}

impl Layout {
    pub fn areas(&self, region: Region) -> &AreaSet {
        &self.areas[region.index()]
    }

    pub fn areas_mut(&mut self, region: Region) -> &mut AreaSet {
        &mut self.areas[region.index()]
    }

    pub fn console_page(&self) -> AddrRange {
        let base = self.console & !(PAGE_SIZE - 1);
        AddrRange::new(base, base + PAGE_SIZE - 1)
    }

    /// Every annotated area, including the console page.
    pub fn all_areas(&self, map: &RegionMap) -> Vec<(Region, AreaKind, AddrRange)> {
        let mut out = Vec::new();
        for region in Region::ALL {
            for (kind, range) in self.areas(region).iter() {
                out.push((region, kind, range));
            }
        }
        out.push((map.region_of(self.console), AreaKind::Io, self.console_page()));
        out
    }

    pub fn validate(&self, map: &RegionMap) -> Result<(), LayoutError> {
        if !self.console.is_multiple_of(4) {
            return Err(LayoutError::BadConsole(self.console));
        }
        let all = self.all_areas(map);
        for &(region, kind, range) in &all {
            if !map.ranges(region).va.contains(range.base) || !map.ranges(region).va.contains(range.limit) {
                return Err(LayoutError::AreaOutsideRegion { region, what: kind.name(), range });
            }
            if range.base % PAGE_SIZE != 0 || (range.limit + 1) % PAGE_SIZE != 0 {
                return Err(LayoutError::BadAreas { region });
            }
        }
        for (i, a) in all.iter().enumerate() {
            for b in &all[i + 1..] {
                if a.2.overlaps(&b.2) {
                    return Err(LayoutError::BadAreas { region: b.0 });
                }
            }
        }
        Ok(())
    }

    /// Finds the area containing `va`.
    pub fn area_of(&self, map: &RegionMap, va: u32) -> Option<(Region, AreaKind)> {
        let region = map.region_of(va);
        if self.console_page().contains(va) {
            return Some((region, AreaKind::Io));
        }
        self.areas(region).iter().into_iter().find(|(_, r)| r.contains(va)).map(|(k, _)| (region, k))
    }
}
