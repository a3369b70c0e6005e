//! Control and status registers.

use crate::mode::HartMode;

pub const MEDELEG: u16 = 0x302;
pub const MTVEC: u16 = 0x305;
pub const MSCRATCH: u16 = 0x340;
pub const MEPC: u16 = 0x341;
pub const MCAUSE: u16 = 0x342;
pub const STVEC: u16 = 0x105;
pub const SSCRATCH: u16 = 0x140;
pub const SEPC: u16 = 0x141;
pub const SCAUSE: u16 = 0x142;
pub const VSTVEC: u16 = 0x205;
pub const VSSCRATCH: u16 = 0x240;
pub const VSEPC: u16 = 0x241;
pub const VSCAUSE: u16 = 0x242;

/// Symbolic name, address, and minimum mode level for every implemented CSR.
pub const CSR_TABLE: [(&str, u16, u8); 13] = [
    ("medeleg", MEDELEG, 3),
    ("mtvec", MTVEC, 3),
    ("mscratch", MSCRATCH, 3),
    ("mepc", MEPC, 3),
    ("mcause", MCAUSE, 3),
    ("stvec", STVEC, 2),
    ("sscratch", SSCRATCH, 2),
    ("sepc", SEPC, 2),
    ("scause", SCAUSE, 2),
    ("vstvec", VSTVEC, 1),
    ("vsscratch", VSSCRATCH, 1),
    ("vsepc", VSEPC, 1),
    ("vscause", VSCAUSE, 1),
];

pub fn csr_name(addr: u16) -> Option<&'static str> {
    CSR_TABLE.iter().find(|e| e.1 == addr).map(|e| e.0)
}

pub fn csr_addr(name: &str) -> Option<u16> {
    CSR_TABLE.iter().find(|e| e.0 == name).map(|e| e.1)
}

/// Minimum mode level (see [`HartMode::level`]) that may access `addr`.
pub fn csr_min_level(addr: u16) -> Option<u8> {
    CSR_TABLE.iter().find(|e| e.1 == addr).map(|e| e.2)
}

/// Cause codes written on environment calls.
pub const CAUSE_ECALL_FROM_USER: u32 = 8;
pub const CAUSE_ECALL_FROM_HS: u32 = 9;
pub const CAUSE_ECALL_FROM_VS: u32 = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsrFile {
    pub mtvec: u32,
    pub medeleg: u32,
    pub mscratch: u32,
    pub mepc: u32,
    pub mcause: u32,
    pub stvec: u32,
    pub sscratch: u32,
    pub sepc: u32,
    pub scause: u32,
    pub vstvec: u32,
    pub vsscratch: u32,
    pub vsepc: u32,
    pub vscause: u32,
    /// Mode each trap level was entered from; consumed by SRET/MRET.
    pub vs_prev: HartMode,
    pub s_prev: HartMode,
    pub m_prev: HartMode,
}

impl Default for CsrFile {
    fn default() -> Self {
        CsrFile {
            mtvec: 0,
            medeleg: 0,
            mscratch: 0,
            mepc: 0,
            mcause: 0,
            stvec: 0,
            sscratch: 0,
            sepc: 0,
            scause: 0,
            vstvec: 0,
            vsscratch: 0,
            vsepc: 0,
            vscause: 0,
            vs_prev: HartMode::VU,
            s_prev: HartMode::U,
            m_prev: HartMode::HS,
        }
    }
}

impl CsrFile {
    pub fn read(&self, addr: u16) -> Option<u32> {
        Some(match addr {
            MEDELEG => self.medeleg,
            MTVEC => self.mtvec,
            MSCRATCH => self.mscratch,
            MEPC => self.mepc,
            MCAUSE => self.mcause,
            STVEC => self.stvec,
            SSCRATCH => self.sscratch,
            SEPC => self.sepc,
            SCAUSE => self.scause,
            VSTVEC => self.vstvec,
            VSSCRATCH => self.vsscratch,
            VSEPC => self.vsepc,
            VSCAUSE => self.vscause,
            _ => return None,
        })
    }

    /// Writes `value`; tvec low bits are forced to zero (direct mode).
    pub fn write(&mut self, addr: u16, value: u32) -> Option<()> {
        let slot = match addr {
            MEDELEG => &mut self.medeleg,
            MTVEC => &mut self.mtvec,
            MSCRATCH => &mut self.mscratch,
            MEPC => &mut self.mepc,
            MCAUSE => &mut self.mcause,
            STVEC => &mut self.stvec,
            SSCRATCH => &mut self.sscratch,
            SEPC => &mut self.sepc,
            SCAUSE => &mut self.scause,
            VSTVEC => &mut self.vstvec,
            VSSCRATCH => &mut self.vsscratch,
            VSEPC => &mut self.vsepc,
            VSCAUSE => &mut self.vscause,
            _ => return None,
        };
        *slot = match addr {
            MTVEC | STVEC | VSTVEC => value & !0b11,
            _ => value,
        };
        Some(())
    }
}
