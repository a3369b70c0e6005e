use serde::{Deserialize, Serialize};

use super::cache::{Access, CacheModel, TlbModel};
use super::{TimingConfig, TimingError};
use crate::image::{pte_ppn, PageTableSet, PAGE_SHIFT};
use crate::trace::TraceRecord;

/// The nine fine-grained miss counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CounterSet {
    pub itlb_miss_if: u64,
    pub icache_miss_if: u64,
    pub dcache_pte_miss_if: u64,
    pub dtlb_miss_load: u64,
    pub dcache_data_miss_load: u64,
    pub dcache_pte_miss_load: u64,
    pub dtlb_miss_store: u64,
    pub dcache_data_miss_store: u64,
    pub dcache_pte_miss_store: u64,
}

impl CounterSet {
    pub fn total_itlb(&self) -> u64 {
        self.itlb_miss_if
    }

    pub fn total_dtlb(&self) -> u64 {
        self.dtlb_miss_load + self.dtlb_miss_store
    }

    pub fn total_icache(&self) -> u64 {
        self.icache_miss_if
    }

    pub fn total_dcache(&self) -> u64 {
        self.dcache_data_miss_load
            + self.dcache_pte_miss_load
            + self.dcache_data_miss_store
            + self.dcache_pte_miss_store
            + self.dcache_pte_miss_if
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Instruction,
    Data,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Fetch,
    Load,
    Store,
}

/// Outcome of one timed translation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Translation {
    pub hpa: u32,
    pub extra_cycles: u64,
    pub tlb_miss: bool,
    pub pte_miss: bool,
}

/// Caches, TLBs and the shadow page tables they walk.
#[derive(Debug, Clone)]
pub struct MemorySystem {
    pub icache: CacheModel,
    pub dcache: CacheModel,
    pub itlb: TlbModel,
    pub dtlb: TlbModel,
    pub counters: CounterSet,
    tables: PageTableSet,
    cfg: TimingConfig,
}

impl MemorySystem {
    pub fn new(cfg: &TimingConfig, tables: PageTableSet) -> Self {
        MemorySystem {
            icache: CacheModel::new(cfg.icache_blocks),
            dcache: CacheModel::new(cfg.dcache_blocks),
            itlb: TlbModel::new(cfg.itlb_entries),
            dtlb: TlbModel::new(cfg.dtlb_entries),
            counters: CounterSet::default(),
            tables,
            cfg: cfg.clone(),
        }
    }

    fn tlb(&self, side: Side) -> &TlbModel {
        match side {
            Side::Instruction => &self.itlb,
            Side::Data => &self.dtlb,
        }
    }

    /// Whether translating `va` would need a PTE read.
    pub fn would_walk(&self, va: u32, side: Side) -> bool {
        self.tlb(side).lookup(va >> PAGE_SHIFT).is_none()
    }

    /// Translates `va`, reading the PTE through the D-cache on a TLB miss
    /// and refilling the TLB. Counters are left to the caller.
    pub fn translate_timed(&mut self, va: u32, side: Side) -> Result<Translation, TimingError> {
        let vpn = va >> PAGE_SHIFT;
        let offset = va & ((1 << PAGE_SHIFT) - 1);
        if let Some(ppn) = self.tlb(side).lookup(vpn) {
            return Ok(Translation {
                hpa: (ppn << PAGE_SHIFT) | offset,
                extra_cycles: 0,
                tlb_miss: false,
                pte_miss: false,
            });
        }
        let (_, pte_addr, pte) = self.tables.walk(va);
        let ppn = pte_ppn(pte).ok_or(TimingError::Unmapped { va })?;
        let pte_hit = self.dcache.access(pte_addr, Access::Read);
        match side {
            Side::Instruction => self.itlb.refill(vpn, ppn),
            Side::Data => self.dtlb.refill(vpn, ppn),
        }
        Ok(Translation {
            hpa: (ppn << PAGE_SHIFT) | offset,
            extra_cycles: if pte_hit { 1 } else { self.cfg.dcache_pte_read_miss_penalty },
            tlb_miss: true,
            pte_miss: !pte_hit,
        })
    }

    fn count(&mut self, stage: Stage, t: &Translation) {
        let c = &mut self.counters;
        let (tlb, pte) = match stage {
            Stage::Fetch => (&mut c.itlb_miss_if, &mut c.dcache_pte_miss_if),
            Stage::Load => (&mut c.dtlb_miss_load, &mut c.dcache_pte_miss_load),
            Stage::Store => (&mut c.dtlb_miss_store, &mut c.dcache_pte_miss_store),
        };
        *tlb += t.tlb_miss as u64;
        *pte += t.pte_miss as u64;
    }

    /// Cycles IF spends fetching the instruction at `pc`.
    pub fn if_stage_cycles(&mut self, pc: u32) -> Result<u64, TimingError> {
        let t = self.translate_timed(pc, Side::Instruction)?;
        self.count(Stage::Fetch, &t);
        let hit = self.icache.access(t.hpa, Access::Read);
        self.counters.icache_miss_if += !hit as u64;
        Ok(1 + t.extra_cycles + if hit { 0 } else { self.cfg.icache_miss_penalty })
    }

    /// Cycles MEM spends on `rec`; non-memory instructions take one cycle.
    pub fn mem_stage_cycles(&mut self, rec: &TraceRecord) -> Result<u64, TimingError> {
        if rec.is_load() {
            let t = self.translate_timed(rec.dva, Side::Data)?;
            self.count(Stage::Load, &t);
            let hit = self.dcache.access(t.hpa, Access::Read);
            self.counters.dcache_data_miss_load += !hit as u64;
            Ok(1 + t.extra_cycles + if hit { 0 } else { self.cfg.dcache_data_read_miss_penalty })
        } else if rec.is_store() {
            let t = self.translate_timed(rec.dva, Side::Data)?;
            self.count(Stage::Store, &t);
            let hit = self.dcache.access(t.hpa, Access::Write);
            self.counters.dcache_data_miss_store += !hit as u64;
            let write = if hit { self.cfg.main_memory_write_cycles } else { self.cfg.dcache_write_miss_penalty };
            Ok(t.extra_cycles + write)
        } else {
            Ok(1)
        }
    }

    /// Fills TLBs and caches so every access made by `records` hits.
    pub fn prewarm<'a>(&mut self, records: impl IntoIterator<Item = &'a TraceRecord>) -> Result<(), TimingError> {
        for r in records {
            let (hpa, ppn) = self.resolve(r.pc)?;
            self.itlb.refill(r.pc >> PAGE_SHIFT, ppn);
            self.icache.fill(hpa);
            if r.is_memory() {
                let (hpa, ppn) = self.resolve(r.dva)?;
                self.dtlb.refill(r.dva >> PAGE_SHIFT, ppn);
                self.dcache.fill(hpa);
            }
        }
        Ok(())
    }

    fn resolve(&self, va: u32) -> Result<(u32, u32), TimingError> {
        let (_, _, pte) = self.tables.walk(va);
        let ppn = pte_ppn(pte).ok_or(TimingError::Unmapped { va })?;
        Ok(((ppn << PAGE_SHIFT) | (va & 0xFFF), ppn))
    }
}
