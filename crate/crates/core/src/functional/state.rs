use super::csr::{self, CsrFile};
use super::decode::{decode, DecodedInstr, Format, Op};
use crate::image::{AreaKind, MemoryImage};
use crate::mode::{HartMode, Region};
use crate::trace::{TraceFlags, TraceRecord};

/// System-call numbers understood by the bundled handlers.
pub const SYS_WRITE: u32 = 64;
pub const SYS_EXIT: u32 = 93;

const A0: usize = 10;
const A7: usize = 17;
const SP: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExecError {
    #[error("fetch from {pc:#010x} is outside every code area")]
    FetchFault { pc: u32 },
    #[error("misaligned control transfer to {target:#010x} at pc {pc:#010x}")]
    MisalignedTarget { pc: u32, target: u32 },
    #[error("illegal instruction {word:#010x} at pc {pc:#010x}")]
    Illegal { pc: u32, word: u32 },
    #[error("ebreak at pc {pc:#010x}")]
    Ebreak { pc: u32 },
    #[error("misaligned {size}-byte access to {addr:#010x} at pc {pc:#010x}")]
    MisalignedAccess { pc: u32, addr: u32, size: u32 },
    #[error("access to unmapped address {addr:#010x} at pc {pc:#010x}")]
    AccessFault { pc: u32, addr: u32 },
    #[error("ecall from M-mode at pc {pc:#010x}")]
    EcallFromMachine { pc: u32 },
    #[error("{instr} is illegal in {mode} at pc {pc:#010x}")]
    IllegalReturn { pc: u32, instr: &'static str, mode: HartMode },
    #[error("unimplemented CSR {csr:#05x} at pc {pc:#010x}")]
    UnknownCsr { pc: u32, csr: u16 },
    #[error("CSR {csr:#05x} not accessible from {mode} at pc {pc:#010x}")]
    CsrPrivilege { pc: u32, csr: u16, mode: HartMode },
    #[error("hart is halted")]
    Halted,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Program(#[from] ExecError),
    #[error("instruction limit of {limit} reached without exit")]
    LimitExhausted { limit: u64 },
    #[error("trace consumer disconnected")]
    Disconnected,
}

/// Initial trap vectors and entry point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Boot {
    pub virtualized: bool,
    pub entry: u32,
    pub vstvec: u32,
    pub stvec: u32,
    pub mtvec: u32,
}

impl Boot {
    pub fn new(virtualized: bool, entry: u32) -> Self {
        Boot { virtualized, entry, vstvec: 0x4000_0000, stvec: 0x8000_0000, mtvec: 0xC000_0000 }
    }
}

/// Program state plus hardware state of the single simulated hart.
#[derive(Debug, Clone)]
pub struct MachineState {
    pub x: [u32; 32],
    pub pc: u32,
    pub csrs: CsrFile,
    pub mode: HartMode,
    pub mem: MemoryImage,
    pub instret: u64,
    pub console: Vec<u8>,
    pub halted: bool,
    pub virtualized: bool,
    pub exit_code: Option<u32>,
}

impl MachineState {
    /// Hart at `boot.entry` in VU (virtualized) or U mode, with every
    /// mode's stack pointer preloaded: `sp` for user code and the scratch
    /// CSRs for the trap handlers.
    pub fn new(mem: MemoryImage, boot: Boot) -> Self {
        let top = |r: Region| mem.layout.areas(r).stack_top();
        let csrs = CsrFile {
            vstvec: boot.vstvec & !3,
            stvec: boot.stvec & !3,
            mtvec: boot.mtvec & !3,
            vsscratch: top(Region::GuestKernel),
            sscratch: top(Region::Hypervisor),
            mscratch: top(Region::Machine),
            vs_prev: HartMode::VU,
            s_prev: if boot.virtualized { HartMode::VS } else { HartMode::U },
            ..CsrFile::default()
        };
        let mut x = [0; 32];
        x[SP] = top(Region::User);
        MachineState {
            x,
            pc: boot.entry,
            csrs,
            mode: if boot.virtualized { HartMode::VU } else { HartMode::U },
            mem,
            instret: 0,
            console: Vec::new(),
            halted: false,
            virtualized: boot.virtualized,
            exit_code: None,
        }
    }

    pub fn reg(&self, r: u8) -> u32 {
        self.x[r as usize]
    }

    pub fn set_reg(&mut self, r: u8, value: u32) {
        if r != 0 {
            self.x[r as usize] = value;
        }
    }

    fn fetch(&self) -> Result<u32, ExecError> {
        let pc = self.pc;
        match self.mem.area_of(pc) {
            Some((_, AreaKind::Code)) if pc.is_multiple_of(4) => Ok(self.mem.mem.read_u32(pc)),
            _ => Err(ExecError::FetchFault { pc }),
        }
    }

    fn check_data(&self, addr: u32, size: u32) -> Result<(), ExecError> {
        let pc = self.pc;
        if !addr.is_multiple_of(size) {
            return Err(ExecError::MisalignedAccess { pc, addr, size });
        }
        if self.mem.area_of(addr).is_none() {
            return Err(ExecError::AccessFault { pc, addr });
        }
        Ok(())
    }

    /// Executes one dynamic instruction and returns its trace record.
    /// On error the state is left at the faulting instruction.
    pub fn step(&mut self) -> Result<TraceRecord, ExecError> {
        if self.halted {
            return Err(ExecError::Halted);
        }
        let word = self.fetch()?;
        let d = decode(word);
        let pc = self.pc;
        let mut rec = TraceRecord::new(self.instret, pc, self.mode);
        let (rs1, rs2) = source_regs(&d);
        rec.rs1 = rs1;
        rec.rs2 = rs2;
        rec.rd = dest_reg(&d);

        let a = self.reg(d.rs1);
        let b = self.reg(d.rs2);
        let imm = d.imm as u32;
        let mut next = pc.wrapping_add(4);
        let mut jump = |target: u32, flags: &mut TraceFlags| -> Result<(), ExecError> {
            if !target.is_multiple_of(4) {
                return Err(ExecError::MisalignedTarget { pc, target });
            }
            next = target;
            flags.insert(TraceFlags::TAKEN);
            Ok(())
        };

        use Op::*;
        match d.op {
            Lui => self.set_reg(d.rd, imm),
            Auipc => self.set_reg(d.rd, pc.wrapping_add(imm)),
            Jal => {
                jump(pc.wrapping_add(imm), &mut rec.flags)?;
                self.set_reg(d.rd, pc.wrapping_add(4));
            }
            Jalr => {
                jump(a.wrapping_add(imm) & !1, &mut rec.flags)?;
                self.set_reg(d.rd, pc.wrapping_add(4));
            }
            Beq | Bne | Blt | Bge | Bltu | Bgeu => {
                rec.flags.insert(TraceFlags::COND_BRANCH);
                let taken = match d.op {
                    Beq => a == b,
                    Bne => a != b,
                    Blt => (a as i32) < (b as i32),
                    Bge => (a as i32) >= (b as i32),
                    Bltu => a < b,
                    _ => a >= b,
                };
                if taken {
                    jump(pc.wrapping_add(imm), &mut rec.flags)?;
                }
            }
            Lb | Lh | Lw | Lbu | Lhu => {
                let addr = a.wrapping_add(imm);
                let size = match d.op {
                    Lb | Lbu => 1,
                    Lh | Lhu => 2,
                    _ => 4,
                };
                self.check_data(addr, size)?;
                let m = &self.mem.mem;
                let v = match d.op {
                    Lb => m.read_u8(addr) as i8 as i32 as u32,
                    Lbu => m.read_u8(addr) as u32,
                    Lh => m.read_le::<2>(addr) as u16 as i16 as i32 as u32,
                    Lhu => m.read_le::<2>(addr),
                    _ => m.read_u32(addr),
                };
                self.set_reg(d.rd, v);
                rec.dva = addr;
                rec.flags.insert(TraceFlags::LOAD);
            }
            Sb | Sh | Sw => {
                let addr = a.wrapping_add(imm);
                let size = match d.op {
                    Sb => 1,
                    Sh => 2,
                    _ => 4,
                };
                self.check_data(addr, size)?;
                self.store(addr, size, b);
                rec.dva = addr;
                rec.flags.insert(TraceFlags::STORE);
            }
            Addi => self.set_reg(d.rd, a.wrapping_add(imm)),
            Slti => self.set_reg(d.rd, ((a as i32) < d.imm) as u32),
            Sltiu => self.set_reg(d.rd, (a < imm) as u32),
            Xori => self.set_reg(d.rd, a ^ imm),
            Ori => self.set_reg(d.rd, a | imm),
            Andi => self.set_reg(d.rd, a & imm),
            Slli => self.set_reg(d.rd, a << (imm & 31)),
            Srli => self.set_reg(d.rd, a >> (imm & 31)),
            Srai => self.set_reg(d.rd, ((a as i32) >> (imm & 31)) as u32),
            Add => self.set_reg(d.rd, a.wrapping_add(b)),
            Sub => self.set_reg(d.rd, a.wrapping_sub(b)),
            Sll => self.set_reg(d.rd, a << (b & 31)),
            Slt => self.set_reg(d.rd, ((a as i32) < (b as i32)) as u32),
            Sltu => self.set_reg(d.rd, (a < b) as u32),
            Xor => self.set_reg(d.rd, a ^ b),
            Srl => self.set_reg(d.rd, a >> (b & 31)),
            Sra => self.set_reg(d.rd, ((a as i32) >> (b & 31)) as u32),
            Or => self.set_reg(d.rd, a | b),
            And => self.set_reg(d.rd, a & b),
            Fence => {}
            Csrrw | Csrrs | Csrrc | Csrrwi | Csrrsi | Csrrci => {
                let src = if d.op.format() == Format::CsrImm { imm & 0x1F } else { a };
                let writes = match d.op {
                    Csrrw | Csrrwi => true,
                    Csrrs | Csrrc => d.rs1 != 0,
                    _ => src != 0,
                };
                let old = self.csr_op(d.op, d.csr, src, writes)?;
                self.set_reg(d.rd, old);
            }
            Ecall => {
                if self.reg(A7 as u8) == SYS_EXIT {
                    rec.flags.insert(TraceFlags::EXIT);
                    self.exit_code = Some(self.x[A0]);
                    self.halted = true;
                    next = pc;
                } else {
                    next = self.take_ecall_trap()?;
                    rec.flags.insert(TraceFlags::TAKEN);
                }
            }
            Sret | Mret => {
                next = self.trap_return(d.op)?;
                rec.flags.insert(TraceFlags::TAKEN);
            }
            Ebreak => return Err(ExecError::Ebreak { pc }),
            Illegal => return Err(ExecError::Illegal { pc, word }),
        }
        self.pc = next;
        self.instret += 1;
        Ok(rec)
    }

    /// Stores the low `size` bytes of `value`. A store to exactly the
    /// console address appends the low byte to the console instead.
    pub fn store(&mut self, addr: u32, size: u32, value: u32) {
        if addr == self.mem.layout.console {
            self.console.push(value as u8);
            return;
        }
        match size {
            1 => self.mem.mem.write_u8(addr, value as u8),
            2 => self.mem.mem.write_le::<2>(addr, value),
            _ => self.mem.mem.write_u32(addr, value),
        }
    }

    /// Redirects the current ECALL to the next trap level and returns the
    /// handler address.
    pub fn take_ecall_trap(&mut self) -> Result<u32, ExecError> {
        let pc = self.pc;
        let from = self.mode;
        let c = &mut self.csrs;
        let (to, target) = match from {
            HartMode::VU => {
                c.vsepc = pc;
                c.vscause = csr::CAUSE_ECALL_FROM_USER;
                c.vs_prev = from;
                (HartMode::VS, c.vstvec)
            }
            HartMode::VS => {
                c.sepc = pc;
                c.scause = csr::CAUSE_ECALL_FROM_VS;
                c.s_prev = from;
                (HartMode::HS, c.stvec)
            }
            HartMode::U => {
                c.sepc = pc;
                c.scause = csr::CAUSE_ECALL_FROM_USER;
                c.s_prev = from;
                (HartMode::HS, c.stvec)
            }
            HartMode::HS => {
                c.mepc = pc;
                c.mcause = csr::CAUSE_ECALL_FROM_HS;
                c.m_prev = from;
                (HartMode::M, c.mtvec)
            }
            _ => return Err(ExecError::EcallFromMachine { pc }),
        };
        self.mode = to;
        Ok(target)
    }

    /// Performs SRET or MRET and returns the resume address.
    pub fn trap_return(&mut self, op: Op) -> Result<u32, ExecError> {
        let c = &self.csrs;
        let (to, epc) = match (op, self.mode) {
            (Op::Sret, HartMode::VS) => (c.vs_prev, c.vsepc),
            (Op::Sret, HartMode::HS) => (c.s_prev, c.sepc),
            (Op::Mret, HartMode::M) => (c.m_prev, c.mepc),
            _ => return Err(ExecError::IllegalReturn { pc: self.pc, instr: op.mnemonic(), mode: self.mode }),
        };
        self.mode = to;
        Ok(epc.wrapping_add(4))
    }

    /// Read-modify-write of `addr`; returns the old value.
    pub fn csr_op(&mut self, op: Op, addr: u16, src: u32, write: bool) -> Result<u32, ExecError> {
        let pc = self.pc;
        let level = csr::csr_min_level(addr).ok_or(ExecError::UnknownCsr { pc, csr: addr })?;
        if self.mode.level() < level {
            return Err(ExecError::CsrPrivilege { pc, csr: addr, mode: self.mode });
        }
        let old = self.csrs.read(addr).ok_or(ExecError::UnknownCsr { pc, csr: addr })?;
        if write {
            let new = match op {
                Op::Csrrw | Op::Csrrwi => src,
                Op::Csrrs | Op::Csrrsi => old | src,
                _ => old & !src,
            };
            self.csrs.write(addr, new);
        }
        Ok(old)
    }

    /// Steps until an exit record or `limit` records, handing each record
    /// to `emit`. `emit` returns `false` to abort (consumer gone).
    pub fn run_with(&mut self, limit: u64, mut emit: impl FnMut(TraceRecord) -> bool) -> Result<(), RunError> {
        let mut n = 0;
        while n < limit {
            let rec = self.step()?;
            n += 1;
            if !emit(rec) {
                return Err(RunError::Disconnected);
            }
            if rec.is_exit() {
                return Ok(());
            }
        }
        Err(RunError::LimitExhausted { limit })
    }

    /// Collects the whole trace of a run.
    pub fn run(&mut self, limit: u64) -> Result<Vec<TraceRecord>, RunError> {
        let mut out = Vec::new();
        self.run_with(limit, |r| {
            out.push(r);
            true
        })?;
        Ok(out)
    }
}

/// Register sources an instruction reads, as carried in its trace record.
pub fn source_regs(d: &DecodedInstr) -> (u8, u8) {
    match d.op.format() {
        Format::R | Format::S | Format::B => (d.rs1, d.rs2),
        Format::I | Format::Shift | Format::Csr => (d.rs1, 0),
        _ => (0, 0),
    }
}

pub fn dest_reg(d: &DecodedInstr) -> u8 {
    match d.op.format() {
        Format::R | Format::I | Format::Shift | Format::U | Format::J | Format::Csr | Format::CsrImm => d.rd,
        _ => 0,
    }
}
