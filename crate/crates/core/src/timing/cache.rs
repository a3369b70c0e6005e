/// Direct-mapped, one-word-per-block cache holding tags only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheModel {
    /// Line address (`pa >> 2`) held by each block.
    blocks: Vec<Option<u32>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Access {
    Read,
    Write,
}

impl CacheModel {
    /// `blocks` must be a power of two.
    pub fn new(blocks: usize) -> Self {
        assert!(blocks.is_power_of_two(), "cache block count must be a power of two");
        CacheModel { blocks: vec![None; blocks] }
    }

    pub fn blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn index(&self, pa: u32) -> usize {
        (pa >> 2) as usize & (self.blocks.len() - 1)
    }

    pub fn probe(&self, pa: u32) -> bool {
        self.blocks[self.index(pa)] == Some(pa >> 2)
    }

    /// Returns `true` on a hit. Read misses fill the block; writes never
    /// allocate (write-through, no write-allocate).
    pub fn access(&mut self, pa: u32, op: Access) -> bool {
        let hit = self.probe(pa);
        if !hit && op == Access::Read {
            let i = self.index(pa);
            self.blocks[i] = Some(pa >> 2);
        }
        hit
    }

    pub fn fill(&mut self, pa: u32) {
        let i = self.index(pa);
        self.blocks[i] = Some(pa >> 2);
    }
}

/// Direct-mapped, virtually-indexed TLB.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TlbModel {
    /// `(vpn, ppn)` per entry.
    entries: Vec<Option<(u32, u32)>>,
}

impl TlbModel {
    pub fn new(entries: usize) -> Self {
        assert!(entries.is_power_of_two(), "TLB entry count must be a power of two");
        TlbModel { entries: vec![None; entries] }
    }

    pub fn entries(&self) -> usize {
        self.entries.len()
    }

    pub fn index(&self, vpn: u32) -> usize {
        vpn as usize & (self.entries.len() - 1)
    }

    /// Hit returns the cached PPN. Never mutates.
    pub fn lookup(&self, vpn: u32) -> Option<u32> {
        match self.entries[self.index(vpn)] {
            Some((tag, ppn)) if tag == vpn => Some(ppn),
            _ => None,
        }
    }

    pub fn refill(&mut self, vpn: u32, ppn: u32) {
        let i = self.index(vpn);
        self.entries[i] = Some((vpn, ppn));
    }
}
