#![allow(dead_code)]

use hvsim::asm::{assemble, disassemble};
use hvsim::functional::csr::{MCAUSE, MEPC, SCAUSE, SEPC, SSCRATCH, VSCAUSE, VSEPC};
use hvsim::functional::{Boot, ExecError, MachineState};
use hvsim::guest::{build_default, Fixture, FixtureName};
use hvsim::image::{compose_image, default_tables, Layout, PageTableSet, Placement, RegionMap};
use hvsim::mode::HartMode;
use hvsim::stats::{finalize, Stats};
use hvsim::timing::{simulate_records, Pipeline, TimingConfig, TimingResult};
use hvsim::trace::{TraceFlags, TraceRecord};

pub const DATA: u32 = 0x0010_0000;

pub fn tables() -> PageTableSet {
    default_tables(&RegionMap::default(), &Layout::default()).unwrap()
}

pub fn code_base(mode: HartMode) -> u32 {
    match mode {
        HartMode::VS => 0x4000_0000,
        HartMode::HS => 0x8000_0000,
        HartMode::M => 0xC000_0000,
        _ => 0x0001_0000,
    }
}

/// A hart in `mode` about to execute `src` at the mode's code base, with
/// the default trap vectors.
pub fn machine(mode: HartMode, src: &str) -> MachineState {
    let base = code_base(mode);
    let blob = assemble(src, base).unwrap();
    let image = compose_image(&[Placement::code(mode.region(), &blob)], tables(), &Layout::default()).unwrap();
    let mut m = MachineState::new(image, Boot::new(mode.virtualized(), base));
    m.mode = mode;
    m
}

pub enum Expect {
    Ok { pc: u32, mode: HartMode, regs: &'static [(u8, u32)], mem: &'static [(u32, u32)], csrs: &'static [(u16, u32)] },
    Err(fn(&ExecError) -> bool),
}

/// One instruction with hand-computed effects.
pub struct IsaCase {
    pub name: &'static str,
    pub src: &'static str,
    pub mode: HartMode,
    pub regs: &'static [(u8, u32)],
    pub mem: &'static [(u32, u32)],
    pub csrs: &'static [(u16, u32)],
    pub setup: fn(&mut MachineState),
    pub expect: Expect,
}

fn nothing(_: &mut MachineState) {}

const U: HartMode = HartMode::U;
const PC: u32 = 0x0001_0000;

const fn ok(pc: u32, regs: &'static [(u8, u32)]) -> Expect {
    Expect::Ok { pc, mode: U, regs, mem: &[], csrs: &[] }
}

const fn user(name: &'static str, src: &'static str, regs: &'static [(u8, u32)], expect: Expect) -> IsaCase {
    IsaCase { name, src, mode: U, regs, mem: &[], csrs: &[], setup: nothing, expect }
}

const WORD: &[(u32, u32)] = &[(DATA, 0x8081_82F3)];

const fn load(name: &'static str, src: &'static str, want: &'static [(u8, u32)]) -> IsaCase {
    IsaCase {
        name,
        src,
        mode: U,
        regs: &[(2, DATA)],
        mem: WORD,
        csrs: &[],
        setup: nothing,
        expect: Expect::Ok { pc: PC + 4, mode: U, regs: want, mem: WORD, csrs: &[] },
    }
}

const fn store(name: &'static str, src: &'static str, want: &'static [(u32, u32)]) -> IsaCase {
    IsaCase {
        name,
        src,
        mode: U,
        regs: &[(2, DATA), (3, 0xAABB_CCDD)],
        mem: &[(DATA, 0x1122_3344)],
        csrs: &[],
        setup: nothing,
        expect: Expect::Ok { pc: PC + 4, mode: U, regs: &[], mem: want, csrs: &[] },
    }
}

const fn csr_case(
    name: &'static str,
    src: &'static str,
    regs: &'static [(u8, u32)],
    csrs: &'static [(u16, u32)],
    want_regs: &'static [(u8, u32)],
    want_csrs: &'static [(u16, u32)],
) -> IsaCase {
    IsaCase {
        name,
        src,
        mode: HartMode::HS,
        regs,
        mem: &[],
        csrs,
        setup: nothing,
        expect: Expect::Ok { pc: 0x8000_0004, mode: HartMode::HS, regs: want_regs, mem: &[], csrs: want_csrs },
    }
}

/// Every implemented instruction, each with effects worked out by hand.
pub fn isa_cases() -> Vec<IsaCase> {
    vec![
        user("lui", "lui x1, 0x12345", &[], ok(PC + 4, &[(1, 0x1234_5000)])),
        user("auipc", "auipc x1, 0x1", &[], ok(PC + 4, &[(1, 0x0001_1000)])),
        user("jal", "jal x1, 16", &[], ok(PC + 16, &[(1, PC + 4)])),
        user(
            "jalr clears bit 0",
            "jalr x1, 5(x2)",
            &[(2, 0x0001_0020)],
            ok(0x0001_0024, &[(1, PC + 4), (2, 0x0001_0020)]),
        ),
        user("beq taken", "beq x1, x2, 8", &[(1, 5), (2, 5)], ok(PC + 8, &[])),
        user("beq not taken", "beq x1, x2, 8", &[(1, 5), (2, 6)], ok(PC + 4, &[])),
        user("bne taken", "bne x1, x2, 20", &[(1, 5), (2, 6)], ok(PC + 20, &[])),
        user("bne not taken", "bne x1, x2, 8", &[(1, 5), (2, 5)], ok(PC + 4, &[])),
        user("blt signed", "blt x1, x2, 12", &[(1, 0xFFFF_FFFF), (2, 1)], ok(PC + 12, &[])),
        user("blt not taken", "blt x1, x2, 12", &[(1, 1), (2, 0xFFFF_FFFF)], ok(PC + 4, &[])),
        user("bge signed", "bge x1, x2, 12", &[(1, 1), (2, 0xFFFF_FFFF)], ok(PC + 12, &[])),
        user("bge equal", "bge x1, x2, 12", &[(1, 7), (2, 7)], ok(PC + 12, &[])),
        user("bltu unsigned", "bltu x1, x2, 12", &[(1, 1), (2, 0xFFFF_FFFF)], ok(PC + 12, &[])),
        user("bltu not taken", "bltu x1, x2, 12", &[(1, 0xFFFF_FFFF), (2, 1)], ok(PC + 4, &[])),
        user("bgeu unsigned", "bgeu x1, x2, 12", &[(1, 0xFFFF_FFFF), (2, 1)], ok(PC + 12, &[])),
        user("bgeu not taken", "bgeu x1, x2, 12", &[(1, 1), (2, 0xFFFF_FFFF)], ok(PC + 4, &[])),
        load("lb sign-extends", "lb x1, 0(x2)", &[(1, 0xFFFF_FFF3)]),
        load("lb high byte", "lb x1, 3(x2)", &[(1, 0xFFFF_FF80)]),
        load("lh sign-extends", "lh x1, 0(x2)", &[(1, 0xFFFF_82F3)]),
        load("lh upper half", "lh x1, 2(x2)", &[(1, 0xFFFF_8081)]),
        load("lw", "lw x1, 0(x2)", &[(1, 0x8081_82F3)]),
        load("lbu zero-extends", "lbu x1, 0(x2)", &[(1, 0x0000_00F3)]),
        load("lhu zero-extends", "lhu x1, 2(x2)", &[(1, 0x0000_8081)]),
        store("sb", "sb x3, 1(x2)", &[(DATA, 0x1122_DD44)]),
        store("sh", "sh x3, 2(x2)", &[(DATA, 0xCCDD_3344)]),
        store("sw", "sw x3, 0(x2)", &[(DATA, 0xAABB_CCDD)]),
        user("addi", "addi x1, x2, -1", &[(2, 0)], ok(PC + 4, &[(1, 0xFFFF_FFFF)])),
        user("slti", "slti x1, x2, -1", &[(2, 0xFFFF_FFFE)], ok(PC + 4, &[(1, 1)])),
        user("sltiu", "sltiu x1, x2, -1", &[(2, 5)], ok(PC + 4, &[(1, 1)])),
        user("xori", "xori x1, x2, -1", &[(2, 0x0F0F_0F0F)], ok(PC + 4, &[(1, 0xF0F0_F0F0)])),
        user("ori", "ori x1, x2, 0xf0", &[(2, 0x0F00)], ok(PC + 4, &[(1, 0x0FF0)])),
        user("andi", "andi x1, x2, 0xf0", &[(2, 0xFFFF)], ok(PC + 4, &[(1, 0xF0)])),
        user("slli", "slli x1, x2, 4", &[(2, 0x8000_0001)], ok(PC + 4, &[(1, 0x10)])),
        user("srli", "srli x1, x2, 4", &[(2, 0x8000_0000)], ok(PC + 4, &[(1, 0x0800_0000)])),
        user("srai", "srai x1, x2, 4", &[(2, 0x8000_0000)], ok(PC + 4, &[(1, 0xF800_0000)])),
        user("add wraps", "add x1, x2, x3", &[(2, 0xFFFF_FFFF), (3, 2)], ok(PC + 4, &[(1, 1)])),
        user("sub wraps", "sub x1, x2, x3", &[(2, 1), (3, 2)], ok(PC + 4, &[(1, 0xFFFF_FFFF)])),
        user("sll uses low 5 bits", "sll x1, x2, x3", &[(2, 1), (3, 33)], ok(PC + 4, &[(1, 2)])),
        user("slt", "slt x1, x2, x3", &[(2, 0xFFFF_FFFF), (3, 1)], ok(PC + 4, &[(1, 1)])),
        user("sltu", "sltu x1, x2, x3", &[(2, 0xFFFF_FFFF), (3, 1)], ok(PC + 4, &[(1, 0)])),
        user("xor", "xor x1, x2, x3", &[(2, 0xF0F0), (3, 0xFF00)], ok(PC + 4, &[(1, 0x0FF0)])),
        user("srl", "srl x1, x2, x3", &[(2, 0x8000_0000), (3, 4)], ok(PC + 4, &[(1, 0x0800_0000)])),
        user("sra", "sra x1, x2, x3", &[(2, 0x8000_0000), (3, 4)], ok(PC + 4, &[(1, 0xF800_0000)])),
        user("or", "or x1, x2, x3", &[(2, 0xF000), (3, 0x000F)], ok(PC + 4, &[(1, 0xF00F)])),
        user("and", "and x1, x2, x3", &[(2, 0xF0F0), (3, 0xFF00)], ok(PC + 4, &[(1, 0xF000)])),
        user("x0 stays zero", "addi x0, x0, 5", &[], ok(PC + 4, &[(0, 0)])),
        user("fence is a no-op", "fence", &[(1, 9)], ok(PC + 4, &[(1, 9)])),
        user("ebreak halts", "ebreak", &[], Expect::Err(|e| matches!(e, ExecError::Ebreak { .. }))),
        IsaCase {
            name: "ecall U -> HS",
            src: "ecall",
            mode: U,
            regs: &[(17, 64)],
            mem: &[],
            csrs: &[],
            setup: nothing,
            expect: Expect::Ok {
                pc: 0x8000_0000,
                mode: HartMode::HS,
                regs: &[],
                mem: &[],
                csrs: &[(SEPC, PC), (SCAUSE, 8)],
            },
        },
        IsaCase {
            name: "ecall VU -> VS",
            src: "ecall",
            mode: HartMode::VU,
            regs: &[(17, 64)],
            mem: &[],
            csrs: &[],
            setup: nothing,
            expect: Expect::Ok {
                pc: 0x4000_0000,
                mode: HartMode::VS,
                regs: &[],
                mem: &[],
                csrs: &[(VSEPC, PC), (VSCAUSE, 8)],
            },
        },
        IsaCase {
            name: "ecall VS -> HS",
            src: "ecall",
            mode: HartMode::VS,
            regs: &[(17, 64)],
            mem: &[],
            csrs: &[],
            setup: nothing,
            expect: Expect::Ok {
                pc: 0x8000_0000,
                mode: HartMode::HS,
                regs: &[],
                mem: &[],
                csrs: &[(SEPC, 0x4000_0000), (SCAUSE, 10)],
            },
        },
        IsaCase {
            name: "ecall HS -> M",
            src: "ecall",
            mode: HartMode::HS,
            regs: &[(17, 64)],
            mem: &[],
            csrs: &[],
            setup: nothing,
            expect: Expect::Ok {
                pc: 0xC000_0000,
                mode: HartMode::M,
                regs: &[],
                mem: &[],
                csrs: &[(MEPC, 0x8000_0000), (MCAUSE, 9)],
            },
        },
        IsaCase {
            name: "ecall exit stays put",
            src: "ecall",
            mode: U,
            regs: &[(17, 93), (10, 3)],
            mem: &[],
            csrs: &[],
            setup: nothing,
            expect: Expect::Ok { pc: PC, mode: U, regs: &[(10, 3)], mem: &[], csrs: &[] },
        },
        IsaCase {
            name: "ecall from M is an error",
            src: "ecall",
            mode: HartMode::M,
            regs: &[(17, 64)],
            mem: &[],
            csrs: &[],
            setup: nothing,
            expect: Expect::Err(|e| matches!(e, ExecError::EcallFromMachine { .. })),
        },
        IsaCase {
            name: "sret HS -> U",
            src: "sret",
            mode: HartMode::HS,
            regs: &[],
            mem: &[],
            csrs: &[(SEPC, PC)],
            setup: |m| m.csrs.s_prev = HartMode::U,
            expect: Expect::Ok { pc: PC + 4, mode: U, regs: &[], mem: &[], csrs: &[] },
        },
        IsaCase {
            name: "sret HS -> VS",
            src: "sret",
            mode: HartMode::HS,
            regs: &[],
            mem: &[],
            csrs: &[(SEPC, 0x4000_0010)],
            setup: |m| m.csrs.s_prev = HartMode::VS,
            expect: Expect::Ok { pc: 0x4000_0014, mode: HartMode::VS, regs: &[], mem: &[], csrs: &[] },
        },
        IsaCase {
            name: "sret VS -> VU",
            src: "sret",
            mode: HartMode::VS,
            regs: &[],
            mem: &[],
            csrs: &[(VSEPC, PC)],
            setup: |m| m.csrs.vs_prev = HartMode::VU,
            expect: Expect::Ok { pc: PC + 4, mode: HartMode::VU, regs: &[], mem: &[], csrs: &[] },
        },
        IsaCase {
            name: "mret M -> HS",
            src: "mret",
            mode: HartMode::M,
            regs: &[],
            mem: &[],
            csrs: &[(MEPC, 0x8000_0000)],
            setup: |m| m.csrs.m_prev = HartMode::HS,
            expect: Expect::Ok { pc: 0x8000_0004, mode: HartMode::HS, regs: &[], mem: &[], csrs: &[] },
        },
        user("sret from U is illegal", "sret", &[], Expect::Err(|e| matches!(e, ExecError::IllegalReturn { .. }))),
        IsaCase {
            name: "mret from HS is illegal",
            src: "mret",
            mode: HartMode::HS,
            regs: &[],
            mem: &[],
            csrs: &[],
            setup: nothing,
            expect: Expect::Err(|e| matches!(e, ExecError::IllegalReturn { .. })),
        },
        csr_case(
            "csrrw",
            "csrrw x1, sscratch, x2",
            &[(2, 0x55)],
            &[(SSCRATCH, 0x1234)],
            &[(1, 0x1234)],
            &[(SSCRATCH, 0x55)],
        ),
        csr_case("csrrw epc swap", "csrrw x1, sepc, x2", &[(2, 0xB)], &[(SEPC, 0xA)], &[(1, 0xA)], &[(SEPC, 0xB)]),
        csr_case("csrrs", "csrrs x1, sepc, x2", &[(2, 0x0F)], &[(SEPC, 0xF0)], &[(1, 0xF0)], &[(SEPC, 0xFF)]),
        csr_case("csrrs x0 reads only", "csrrs x1, sepc, x0", &[], &[(SEPC, 0xF0)], &[(1, 0xF0)], &[(SEPC, 0xF0)]),
        csr_case("csrrc", "csrrc x1, scause, x2", &[(2, 0x0F)], &[(SCAUSE, 0xFF)], &[(1, 0xFF)], &[(SCAUSE, 0xF0)]),
        csr_case("csrrwi", "csrrwi x1, sscratch, 5", &[], &[(SSCRATCH, 9)], &[(1, 9)], &[(SSCRATCH, 5)]),
        csr_case("csrrsi", "csrrsi x1, sepc, 3", &[], &[(SEPC, 0x10)], &[(1, 0x10)], &[(SEPC, 0x13)]),
        csr_case("csrrci", "csrrci x1, scause, 1", &[], &[(SCAUSE, 3)], &[(1, 3)], &[(SCAUSE, 2)]),
        csr_case(
            "csr write to rd x0",
            "csrrw x0, sscratch, x2",
            &[(2, 7)],
            &[(SSCRATCH, 1)],
            &[(0, 0)],
            &[(SSCRATCH, 7)],
        ),
        IsaCase {
            name: "M-level csr from HS faults",
            src: "csrrs x1, mepc, x0",
            mode: HartMode::HS,
            regs: &[],
            mem: &[],
            csrs: &[],
            setup: nothing,
            expect: Expect::Err(|e| matches!(e, ExecError::CsrPrivilege { .. })),
        },
        user(
            "S-level csr from U faults",
            "csrrs x1, sscratch, x0",
            &[],
            Expect::Err(|e| matches!(e, ExecError::CsrPrivilege { .. })),
        ),
    ]
}

/// Runs one case; `Err` describes the first mismatch.
pub fn run_case(case: &IsaCase) -> Result<(), String> {
    let mut m = machine(case.mode, case.src);
    for &(r, v) in case.regs {
        m.set_reg(r, v);
    }
    for &(a, v) in case.mem {
        m.mem.mem.write_u32(a, v);
    }
    for &(c, v) in case.csrs {
        m.csrs.write(c, v).ok_or_else(|| format!("{}: unknown csr {c:#x}", case.name))?;
    }
    (case.setup)(&mut m);
    let before = m.x;
    let result = m.step();
    match (&case.expect, result) {
        (Expect::Err(pred), Err(e)) if pred(&e) => Ok(()),
        (Expect::Err(_), other) => Err(format!("{}: expected a specific error, got {other:?}", case.name)),
        (Expect::Ok { .. }, Err(e)) => Err(format!("{}: unexpected error {e}", case.name)),
        (Expect::Ok { pc, mode, regs, mem, csrs }, Ok(_)) => {
            let mut want = before;
            for &(r, v) in *regs {
                want[r as usize] = v;
            }
            if m.x != want {
                return Err(format!("{}: registers {:x?}, expected {:x?}", case.name, m.x, want));
            }
            if m.pc != *pc || m.mode != *mode {
                return Err(format!("{}: pc/mode {:#x}/{} expected {:#x}/{}", case.name, m.pc, m.mode, pc, mode));
            }
            for &(a, v) in *mem {
                let got = m.mem.mem.read_u32(a);
                if got != v {
                    return Err(format!("{}: mem[{a:#x}] = {got:#x}, expected {v:#x}", case.name));
                }
            }
            for &(c, v) in *csrs {
                let got = m.csrs.read(c);
                if got != Some(v) {
                    return Err(format!("{}: csr {c:#x} = {got:x?}, expected {v:#x}", case.name));
                }
            }
            Ok(())
        }
    }
}

/// `(word, statement)` pairs produced by an external RISC-V assembler.
pub fn isa_vectors() -> Vec<(u32, String)> {
    include_str!("../data/isa_vectors.txt")
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let (w, stmt) = l.split_once(' ').unwrap();
            (u32::from_str_radix(w.trim_start_matches("0x"), 16).unwrap(), stmt.to_owned())
        })
        .collect()
}

/// Assembles and disassembles every vector; `Err` lists the mismatches.
pub fn check_isa_vectors() -> Result<usize, String> {
    let vectors = isa_vectors();
    let mut bad = Vec::new();
    for (word, stmt) in &vectors {
        let got = assemble(stmt, 0x0001_0000).map(|b| b.words[0]);
        if got.as_ref().ok() != Some(word) {
            bad.push(format!("assemble `{stmt}` = {got:x?}, expected {word:#010x}"));
        }
        let text = disassemble(*word);
        if &text != stmt {
            bad.push(format!("disassemble {word:#010x} = `{text}`, expected `{stmt}`"));
        }
    }
    if bad.is_empty() {
        Ok(vectors.len())
    } else {
        Err(bad.join("; "))
    }
}

pub fn alu(i: u64, rd: u8, rs1: u8) -> TraceRecord {
    let mut r = TraceRecord::new(i, 0x0001_0000 + 4 * i as u32, HartMode::U);
    r.rd = rd;
    r.rs1 = rs1;
    r
}

pub fn independent(n: u64) -> Vec<TraceRecord> {
    (0..n).map(|i| alu(i, 5 + (i % 20) as u8, 0)).collect()
}

/// Cycles with every cache and TLB pre-filled for the trace.
pub fn warm(trace: &[TraceRecord]) -> TimingResult {
    let mut p = Pipeline::new(TimingConfig::default(), tables());
    p.memory_mut().prewarm(trace).unwrap();
    p.run(trace.iter().copied().map(Ok)).unwrap()
}

pub fn with_load_use(n: u64) -> Vec<TraceRecord> {
    let mut t = independent(n);
    t[0].flags = TraceFlags::LOAD;
    t[0].dva = DATA;
    t[0].rd = 1;
    t[1].rs1 = 1;
    t
}

pub fn with_taken_branch(n: u64) -> Vec<TraceRecord> {
    let mut t = independent(n);
    t[1].flags = TraceFlags::COND_BRANCH | TraceFlags::TAKEN;
    t[1].rd = 0;
    t
}

pub fn with_store(n: u64, at: usize) -> Vec<TraceRecord> {
    let mut t = independent(n);
    t[at].flags = TraceFlags::STORE;
    t[at].dva = DATA;
    t[at].rd = 0;
    t
}

/// Functional trace and stats of a fixture under the default config.
pub fn fixture_run(fixture: &Fixture, virtualized: bool) -> (Vec<u8>, Vec<TraceRecord>, Stats) {
    let built = build_default(fixture, virtualized).unwrap();
    let tables = built.image.tables.clone();
    let mut m = MachineState::new(built.image, built.boot);
    let trace = m.run(10_000_000).unwrap();
    let r = simulate_records(&trace, tables, TimingConfig::default()).unwrap();
    let stats = finalize(r.counters, r.cycles, r.instret).unwrap();
    (m.console, trace, stats)
}

pub fn default_fixtures() -> Vec<Fixture> {
    FixtureName::ALL.into_iter().map(Fixture::default_for).collect()
}

/// Counter-coupling invariants on one set of statistics.
pub fn check_coupling(s: &Stats) -> Result<(), String> {
    let c = &s.counters;
    let pairs = [
        ("IF", c.dcache_pte_miss_if, c.itlb_miss_if),
        ("load", c.dcache_pte_miss_load, c.dtlb_miss_load),
        ("store", c.dcache_pte_miss_store, c.dtlb_miss_store),
    ];
    for (stage, pte, tlb) in pairs {
        if pte > tlb {
            return Err(format!("{stage}: {pte} PTE misses exceed {tlb} TLB misses"));
        }
    }
    let t = &s.totals;
    if t.itlb != c.itlb_miss_if
        || t.icache != c.icache_miss_if
        || t.dtlb != c.dtlb_miss_load + c.dtlb_miss_store
        || t.dcache
            != c.dcache_data_miss_load
                + c.dcache_pte_miss_load
                + c.dcache_data_miss_store
                + c.dcache_pte_miss_store
                + c.dcache_pte_miss_if
    {
        return Err(format!("totals {t:?} disagree with counters {c:?}"));
    }
    if s.cycles < s.instret + 4 {
        return Err(format!("{} cycles for {} instructions", s.cycles, s.instret));
    }
    Ok(())
}

/// A random record satisfying every trace-format invariant.
pub fn random_record(rng: &mut impl rand::Rng) -> TraceRecord {
    let mode = HartMode::ALL[rng.gen_range(0..HartMode::ALL.len())];
    let mut r = TraceRecord::new(rng.gen(), rng.gen(), mode);
    r.pid = rng.gen();
    r.osid = rng.gen();
    r.rs1 = rng.gen_range(0..32);
    r.rs2 = rng.gen_range(0..32);
    r.rd = rng.gen_range(0..32);
    let mut flags = TraceFlags::from_bits_truncate(rng.gen_range(0..32));
    if flags.contains(TraceFlags::LOAD | TraceFlags::STORE) {
        flags.remove(if rng.gen() { TraceFlags::LOAD } else { TraceFlags::STORE });
    }
    r.flags = flags;
    if r.is_memory() {
        r.dva = rng.gen();
    }
    r
}

pub type ErrorMatcher = fn(&hvsim::trace::TraceParseError) -> bool;

/// One malformed line per documented error class.
pub fn malformed_lines() -> [(&'static str, ErrorMatcher); 6] {
    use hvsim::trace::TraceParseError as E;
    [
        ("0 0 0 00010000 00000000 0 0 0 0 00", |e| matches!(e, E::FieldCount(10))),
        ("0 0 0 00010000 00000000 0 0 0 0 00 00000 7", |e| matches!(e, E::FieldCount(12))),
        ("0 0 0 0001000g 00000000 0 0 0 0 00 00000", |e| matches!(e, E::BadField { index: 3, .. })),
        ("0 0 0 00010000 00000000 32 0 0 0 00 00000", |e| matches!(e, E::BadField { index: 5, .. })),
        ("0 0 0 00010000 00000000 0 0 0 1 11 00000", |e| matches!(e, E::BadField { index: 9, .. })),
        ("0 0 0 00010000 00100000 0 0 0 0 00 11000", |e| matches!(e, E::Inconsistent(_))),
    ]
}

/// Hit/miss sequences of `CacheModel` and `TlbModel` against a reference
/// keyed by set number, over `n` uniform word addresses below `span`.
pub fn check_cache_oracle(seed: u64, n: usize, span: u64) -> Result<(), String> {
    use hvsim::timing::{Access, CacheModel, TlbModel};
    use rand::{Rng, SeedableRng};
    use std::collections::HashMap;

    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    for (blocks, entries) in [(4096usize, 16usize), (1, 1), (64, 4)] {
        let mut cache = CacheModel::new(blocks);
        let mut tlb = TlbModel::new(entries);
        let mut cache_ref: HashMap<u64, u64> = HashMap::new();
        let mut tlb_ref: HashMap<u64, u64> = HashMap::new();
        for i in 0..n {
            let addr = (rng.gen_range(0..span / 4) * 4) as u32;
            let write = rng.gen_bool(0.25);
            let line = u64::from(addr) / 4;
            let set = line % blocks as u64;
            let want = cache_ref.get(&set) == Some(&line);
            if !want && !write {
                cache_ref.insert(set, line);
            }
            let got = cache.access(addr, if write { Access::Write } else { Access::Read });
            if got != want {
                return Err(format!("cache({blocks}) access {i} at {addr:#010x}: model {got}, reference {want}"));
            }

            let vpn = u64::from(addr) >> 12;
            let slot = vpn % entries as u64;
            let want = tlb_ref.get(&slot) == Some(&vpn);
            let got = tlb.lookup(vpn as u32);
            if got.is_some() != want {
                return Err(format!("tlb({entries}) access {i} vpn {vpn:#x}: model {got:?}, reference {want}"));
            }
            if let Some(ppn) = got {
                if ppn != (vpn as u32 ^ 0xA5) {
                    return Err(format!("tlb({entries}) returned ppn {ppn:#x} for vpn {vpn:#x}"));
                }
            } else {
                tlb.refill(vpn as u32, vpn as u32 ^ 0xA5);
                tlb_ref.insert(slot, vpn);
            }
        }
    }
    Ok(())
}

/// Mode changes `(from, to)` in trace order.
pub fn transitions(trace: &[TraceRecord]) -> Vec<(HartMode, HartMode)> {
    trace.windows(2).filter(|w| w[0].mode != w[1].mode).map(|w| (w[0].mode, w[1].mode)).collect()
}

/// Every user trap in the virtualized trace is one VU->VS entry, exactly
/// one VS->HS hypercall with its return, and one VS->VU return. Returns
/// the number of user traps.
pub fn check_trap_chain(virt: &[TraceRecord], native: &[TraceRecord]) -> Result<usize, String> {
    use HartMode as H;
    let expected = transitions(native).iter().filter(|t| **t == (H::U, H::HS)).count();
    let mut traps = 0;
    let mut hypercalls_in_trap = None;
    for t in transitions(virt) {
        match (t, hypercalls_in_trap) {
            ((H::VU, H::VS), None) => {
                traps += 1;
                hypercalls_in_trap = Some(0);
            }
            ((H::VS, H::HS), Some(n)) => hypercalls_in_trap = Some(n + 1),
            ((H::HS, H::VS), Some(_)) => {}
            ((H::VS, H::VU), Some(1)) => hypercalls_in_trap = None,
            (other, state) => return Err(format!("unexpected transition {other:?} with {state:?} hypercalls")),
        }
    }
    if hypercalls_in_trap.is_some() {
        return Err("trace ends inside a trap".into());
    }
    if traps != expected {
        return Err(format!("{traps} user traps virtualized, {expected} native"));
    }
    Ok(traps)
}

/// Direction properties for one fixture; `Err` names the failures.
pub fn check_directions(fixture: &Fixture) -> Result<(Stats, Stats), String> {
    let (_, _, n) = fixture_run(fixture, false);
    let (_, _, v) = fixture_run(fixture, true);
    let failed: Vec<String> = hvsim::guest::expected_properties(fixture.name)
        .into_iter()
        .filter(|p| !p.holds(&n, &v))
        .map(|p| {
            format!(
                "{}: {} fails (instret {}/{}, cycles {}/{}, CPI {:.3}/{:.3})",
                fixture.name,
                p.describe(),
                n.instret,
                v.instret,
                n.cycles,
                v.cycles,
                n.cpi,
                v.cpi
            )
        })
        .collect();
    if failed.is_empty() {
        Ok((n, v))
    } else {
        Err(failed.join("; "))
    }
}

pub fn hvsim() -> std::process::Command {
    let mut cmd = std::process::Command::new(env!("CARGO_BIN_EXE_hvsim"));
    cmd.env_remove(hvsim::config::CONFIG_ENV);
    cmd
}

fn run_ok(cmd: &mut std::process::Command) -> Result<std::process::Output, String> {
    let out = cmd.output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{cmd:?} exited {:?}: {}", out.status.code(), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out)
}

/// Two identical CLI runs give byte-identical trace and stats files, and a
/// replay of the trace gives the same stats file.
pub fn check_cli_determinism(dir: &std::path::Path, fixture: &str, mode: &str) -> Result<(), String> {
    let read = |name: &str| std::fs::read(dir.join(name)).map_err(|e| format!("{name}: {e}"));
    for i in 0..2 {
        run_ok(hvsim().args(["run", "--fixture", fixture, "--mode", mode]).args([
            "--trace-out".as_ref(),
            dir.join(format!("trace{i}.txt")).as_os_str(),
            "--stats-out".as_ref(),
            dir.join(format!("stats{i}.json")).as_os_str(),
        ]))?;
    }
    run_ok(
        hvsim()
            .args(["replay".as_ref(), "--trace-in".as_ref(), dir.join("trace0.txt").as_os_str()])
            .args(["--stats-out".as_ref(), dir.join("replay.json").as_os_str()]),
    )?;
    if read("trace0.txt")? != read("trace1.txt")? {
        return Err(format!("{fixture}/{mode}: trace files differ"));
    }
    if read("stats0.json")? != read("stats1.json")? {
        return Err(format!("{fixture}/{mode}: stats files differ"));
    }
    if read("stats0.json")? != read("replay.json")? {
        return Err(format!("{fixture}/{mode}: replay stats differ from the live run"));
    }
    Ok(())
}

/// Every decodable instruction has at least one hand-checked case.
pub fn check_isa_coverage() -> Result<usize, String> {
    use hvsim::functional::decode::{decode, Op};
    let covered: std::collections::BTreeSet<&str> =
        isa_cases().iter().map(|c| decode(assemble(c.src, 0x0001_0000).unwrap().words[0]).op.mnemonic()).collect();
    let required: Vec<&str> = Op::ALL.iter().filter(|op| **op != Op::Illegal).map(|op| op.mnemonic()).collect();
    let missing: Vec<&str> = required.iter().copied().filter(|m| !covered.contains(m)).collect();
    if missing.is_empty() {
        Ok(required.len())
    } else {
        Err(format!("no case for {missing:?}"))
    }
}
