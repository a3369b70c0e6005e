//! Trace-driven timing model: split direct-mapped caches and TLBs, shadow
//! page-table walks through the D-cache, and a five-stage in-order
//! pipeline with locking, forwarding, ID-stage branch resolution and
//! assume-not-taken fetch.

mod cache;
mod memory;

pub use cache::{Access, CacheModel, TlbModel};
pub use memory::{CounterSet, MemorySystem, Side, Stage, Translation};

use crate::image::PageTableSet;
use crate::trace::{StreamError, TraceRecord};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimingConfig {
    pub icache_miss_penalty: u64,
    pub dcache_pte_read_miss_penalty: u64,
    pub dcache_data_read_miss_penalty: u64,
    pub dcache_write_miss_penalty: u64,
    pub main_memory_write_cycles: u64,
    pub icache_blocks: usize,
    pub dcache_blocks: usize,
    pub itlb_entries: usize,
    pub dtlb_entries: usize,
    pub id_stage_cycles: u64,
    pub ex_stage_cycles: u64,
    pub wb_stage_cycles: u64,
    /// Bypass paths into ID and EX. Disabling them is a test hook.
    pub forwarding: bool,
    /// Keep `(instr_no, cycle)` for every retirement.
    pub record_retirement: bool,
}

impl Default for TimingConfig {
    fn default() -> Self {
        TimingConfig {
            icache_miss_penalty: 100,
            dcache_pte_read_miss_penalty: 100,
            dcache_data_read_miss_penalty: 100,
            dcache_write_miss_penalty: 100,
            main_memory_write_cycles: 100,
            icache_blocks: 4096,
            dcache_blocks: 4096,
            itlb_entries: 16,
            dtlb_entries: 16,
            id_stage_cycles: 1,
            ex_stage_cycles: 1,
            wb_stage_cycles: 1,
            forwarding: true,
            record_retirement: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TimingError {
    #[error("no valid page-table entry for {va:#010x}")]
    Unmapped { va: u32 },
    #[error("trace stream closed before an exit record")]
    Truncated,
    #[error("trace out of order: expected instruction {expected}, found {found}")]
    OutOfOrder { expected: u64, found: u64 },
}

impl From<StreamError> for TimingError {
    fn from(_: StreamError) -> Self {
        TimingError::Truncated
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Retired {
    pub instr_no: u64,
    pub cycle: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimingResult {
    pub counters: CounterSet,
    pub cycles: u64,
    pub instret: u64,
    pub retire_log: Vec<Retired>,
}

const IF: usize = 0;
const ID: usize = 1;
const EX: usize = 2;
const MEM: usize = 3;
const WB: usize = 4;

#[derive(Debug, Clone)]
struct Inflight {
    rec: TraceRecord,
    remaining: u64,
    ex_done: Option<u64>,
    mem_done: Option<u64>,
    wb_done: Option<u64>,
    /// Fetched on the wrong side of a taken control transfer.
    flushed: bool,
}

impl Inflight {
    fn new(rec: TraceRecord, remaining: u64) -> Self {
        Inflight { rec, remaining, ex_done: None, mem_done: None, wb_done: None, flushed: false }
    }

    fn done(&self) -> bool {
        self.remaining == 0
    }
}

/// Cycle-stepped pipeline state.
pub struct Pipeline {
    cfg: TimingConfig,
    mem: MemorySystem,
    slots: [Option<Inflight>; 5],
    cycle: u64,
    instret: u64,
    next_no: u64,
    pending: Option<TraceRecord>,
    fetched_exit: bool,
    exhausted: bool,
    finished: bool,
    log: Vec<Retired>,
}

impl Pipeline {
    pub fn new(cfg: TimingConfig, tables: PageTableSet) -> Self {
        Pipeline {
            mem: MemorySystem::new(&cfg, tables),
            cfg,
            slots: Default::default(),
            cycle: 0,
            instret: 0,
            next_no: 0,
            pending: None,
            fetched_exit: false,
            exhausted: false,
            finished: false,
            log: Vec::new(),
        }
    }

    pub fn memory(&self) -> &MemorySystem {
        &self.mem
    }

    pub fn memory_mut(&mut self) -> &mut MemorySystem {
        &mut self.mem
    }

    /// Consumes the stream until the exit record retires or the stream
    /// ends and the pipeline drains.
    pub fn run<I>(mut self, records: I) -> Result<TimingResult, TimingError>
    where
        I: IntoIterator<Item = Result<TraceRecord, StreamError>>,
    {
        let mut source = records.into_iter();
        while !self.finished {
            self.tick(&mut source)?;
        }
        Ok(TimingResult {
            counters: self.mem.counters,
            cycles: self.cycle,
            instret: self.instret,
            retire_log: self.log,
        })
    }

    fn next_record<I>(&mut self, source: &mut I) -> Result<Option<TraceRecord>, TimingError>
    where
        I: Iterator<Item = Result<TraceRecord, StreamError>>,
    {
        if let Some(r) = self.pending.take() {
            return Ok(Some(r));
        }
        if self.exhausted || self.fetched_exit {
            return Ok(None);
        }
        match source.next() {
            None => {
                self.exhausted = true;
                Ok(None)
            }
            Some(r) => {
                let r = r?;
                if r.instr_no != self.next_no {
                    return Err(TimingError::OutOfOrder { expected: self.next_no, found: r.instr_no });
                }
                self.next_no += 1;
                Ok(Some(r))
            }
        }
    }

    fn dcache_busy(&self) -> bool {
        self.slots[MEM].as_ref().is_some_and(|s| s.rec.is_memory() && !s.done())
    }

    fn tick<I>(&mut self, source: &mut I) -> Result<(), TimingError>
    where
        I: Iterator<Item = Result<TraceRecord, StreamError>>,
    {
        self.cycle += 1;
        let c = self.cycle;

        if self.slots[IF].is_none() {
            if let Some(rec) = self.next_record(source)? {
                if self.mem.would_walk(rec.pc, Side::Instruction) && self.dcache_busy() {
                    self.pending = Some(rec);
                } else {
                    let cost = self.mem.if_stage_cycles(rec.pc)?;
                    self.fetched_exit |= rec.is_exit();
                    self.slots[IF] = Some(Inflight::new(rec, cost));
                }
            }
        }

        for (stage, slot) in self.slots.iter_mut().enumerate() {
            if let Some(s) = slot.as_mut().filter(|s| s.remaining > 0) {
                s.remaining -= 1;
                if s.remaining == 0 {
                    match stage {
                        EX => s.ex_done = Some(c),
                        MEM => s.mem_done = Some(c),
                        WB => s.wb_done = Some(c),
                        _ => {}
                    }
                }
            }
        }

        if self.slots[WB].as_ref().is_some_and(Inflight::done) {
            let s = self.slots[WB].take().unwrap();
            self.instret += 1;
            if self.cfg.record_retirement {
                self.log.push(Retired { instr_no: s.rec.instr_no, cycle: c });
            }
            if s.rec.is_exit() {
                self.finished = true;
                return Ok(());
            }
        }
        if self.slots[WB].is_none() && self.slots[MEM].as_ref().is_some_and(Inflight::done) {
            let mut s = self.slots[MEM].take().unwrap();
            s.remaining = self.cfg.wb_stage_cycles;
            self.slots[WB] = Some(s);
        }
        if self.slots[MEM].is_none() && self.slots[EX].as_ref().is_some_and(Inflight::done) {
            let mut s = self.slots[EX].take().unwrap();
            s.remaining = self.mem.mem_stage_cycles(&s.rec)?;
            self.slots[MEM] = Some(s);
        }
        if self.slots[EX].is_none()
            && self.slots[ID].as_ref().is_some_and(|s| s.done() && self.operands_ready(&s.rec, c))
        {
            let mut s = self.slots[ID].take().unwrap();
            s.remaining = self.cfg.ex_stage_cycles;
            if s.rec.redirects() {
                if let Some(f) = self.slots[IF].as_mut() {
                    f.flushed = true;
                }
            }
            self.slots[EX] = Some(s);
        }
        if self.slots[IF].as_ref().is_some_and(Inflight::done) {
            if self.slots[IF].as_ref().unwrap().flushed {
                let s = self.slots[IF].take().unwrap();
                self.fetched_exit = false;
                self.pending = Some(s.rec);
            } else if self.slots[ID].is_none() {
                let mut s = self.slots[IF].take().unwrap();
                s.remaining = self.cfg.id_stage_cycles;
                self.slots[ID] = Some(s);
            }
        }

        if self.exhausted && self.pending.is_none() && self.slots.iter().all(Option::is_none) {
            self.finished = true;
        }
        Ok(())
    }

    /// Whether every source of `rec` (in ID) can be read or forwarded so
    /// that it may leave ID at the end of cycle `c`.
    fn operands_ready(&self, rec: &TraceRecord, c: u64) -> bool {
        [rec.rs1, rec.rs2].into_iter().filter(|&r| r != 0).all(|r| {
            let producer = [EX, MEM, WB].into_iter().filter_map(|i| self.slots[i].as_ref()).find(|p| p.rec.rd == r);
            match producer {
                None => true,
                Some(p) if !self.cfg.forwarding => p.wb_done.is_some_and(|d| d <= c),
                Some(p) => {
                    let avail = if p.rec.is_load() { p.mem_done } else { p.ex_done };
                    // branches and jumps consume their operands during ID
                    avail.is_some_and(|d| if rec.is_control() { d < c } else { d <= c })
                }
            }
        })
    }
}

/// Runs a stream through a fresh pipeline.
pub fn simulate<I>(records: I, tables: PageTableSet, cfg: TimingConfig) -> Result<TimingResult, TimingError>
where
    I: IntoIterator<Item = Result<TraceRecord, StreamError>>,
{
    Pipeline::new(cfg, tables).run(records)
}

/// Runs an in-memory trace.
pub fn simulate_records(
    records: &[TraceRecord],
    tables: PageTableSet,
    cfg: TimingConfig,
) -> Result<TimingResult, TimingError> {
    simulate(records.iter().copied().map(Ok), tables, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::{default_tables, Layout, RegionMap};
    use crate::mode::HartMode;
    use crate::trace::TraceFlags;

    fn tables() -> PageTableSet {
        default_tables(&RegionMap::default(), &Layout::default()).unwrap()
    }

    fn alu(i: u64, rd: u8, rs1: u8) -> TraceRecord {
        let mut r = TraceRecord::new(i, 0x0001_0000 + 4 * i as u32, HartMode::U);
        r.rd = rd;
        r.rs1 = rs1;
        r
    }

    fn warm_cycles(trace: &[TraceRecord], cfg: TimingConfig) -> TimingResult {
        let mut p = Pipeline::new(cfg, tables());
        p.memory_mut().prewarm(trace).unwrap();
        p.run(trace.iter().copied().map(Ok)).unwrap()
    }

    fn independent(n: u64) -> Vec<TraceRecord> {
        (0..n).map(|i| alu(i, 5 + (i % 20) as u8, 0)).collect()
    }

    #[test]
    fn fill_plus_completions() {
        for n in [1, 5, 100] {
            assert_eq!(warm_cycles(&independent(n), TimingConfig::default()).cycles, n + 4);
        }
    }

    #[test]
    fn load_use_bubble() {
        let mut t = independent(5);
        t[0].flags = TraceFlags::LOAD;
        t[0].dva = 0x0010_0000;
        t[0].rd = 1;
        t[1].rs1 = 1;
        t[1].rs2 = 1;
        t[1].rd = 2;
        assert_eq!(warm_cycles(&t, TimingConfig::default()).cycles, 10);
    }

    #[test]
    fn taken_branch_flushes_one() {
        let mut t = independent(5);
        t[1].flags = TraceFlags::COND_BRANCH | TraceFlags::TAKEN;
        t[1].rd = 0;
        assert_eq!(warm_cycles(&t, TimingConfig::default()).cycles, 10);
        t[1].flags = TraceFlags::COND_BRANCH;
        assert_eq!(warm_cycles(&t, TimingConfig::default()).cycles, 9);
    }

    #[test]
    fn branch_after_alu_and_load() {
        let mut t = independent(5);
        t[0].rd = 1;
        t[1].flags = TraceFlags::COND_BRANCH;
        t[1].rd = 0;
        t[1].rs1 = 1;
        assert_eq!(warm_cycles(&t, TimingConfig::default()).cycles, 10);
        t[0].flags = TraceFlags::LOAD;
        t[0].dva = 0x0010_0000;
        assert_eq!(warm_cycles(&t, TimingConfig::default()).cycles, 11);
    }

    #[test]
    fn store_adds_99() {
        let mut t = independent(5);
        t[2].flags = TraceFlags::STORE;
        t[2].dva = 0x0010_0000;
        t[2].rd = 0;
        assert_eq!(warm_cycles(&t, TimingConfig::default()).cycles, 9 + 99);
    }

    #[test]
    fn exit_stops_the_clock_and_log_is_in_order() {
        let mut t = independent(4);
        t[3].flags = TraceFlags::EXIT;
        let cfg = TimingConfig { record_retirement: true, ..TimingConfig::default() };
        let r = warm_cycles(&t, cfg);
        assert_eq!(r.cycles, 8);
        assert_eq!(
            r.retire_log.iter().map(|x| (x.instr_no, x.cycle)).collect::<Vec<_>>(),
            vec![(0, 5), (1, 6), (2, 7), (3, 8)]
        );
    }

    #[test]
    fn cold_single_instruction() {
        // IF: I-TLB miss + PTE miss + I-cache miss
        let r = simulate_records(&independent(1), tables(), TimingConfig::default()).unwrap();
        assert_eq!(r.cycles, 201 + 4);
        assert_eq!(r.counters.itlb_miss_if, 1);
    }

    #[test]
    fn truncated_and_out_of_order() {
        let t = independent(2);
        let stream = vec![Ok(t[0]), Err(StreamError::Truncated)];
        assert_eq!(simulate(stream, tables(), TimingConfig::default()), Err(TimingError::Truncated));
        assert_eq!(
            simulate_records(&[t[1]], tables(), TimingConfig::default()),
            Err(TimingError::OutOfOrder { expected: 0, found: 1 })
        );
    }

    #[test]
    fn no_forwarding_is_slower() {
        let mut t = independent(5);
        t[0].rd = 1;
        t[1].rs1 = 1;
        let fwd = warm_cycles(&t, TimingConfig::default()).cycles;
        let slow = warm_cycles(&t, TimingConfig { forwarding: false, ..TimingConfig::default() }).cycles;
        assert_eq!(fwd, 9);
        assert_eq!(slow, 11);
    }
}
