use crate::functional::csr::csr_name;
use crate::functional::decode::{decode, DecodedInstr, Format, Op};

/// Prefix of the text returned for words outside the implemented subset.
pub const ILLEGAL_MARKER: &str = "illegal instruction";

pub fn fence_set(bits: u32) -> String {
    if bits == 0 {
        return "0".to_owned();
    }
    "iorw".chars().enumerate().filter(|(i, _)| bits & (8 >> i) != 0).map(|(_, c)| c).collect()
}

fn csr_operand(addr: u16) -> String {
    match csr_name(addr) {
        Some(name) => name.to_owned(),
        None => format!("{addr:#x}"),
    }
}

/// Canonical text for an already-decoded instruction.
pub fn format_instr(d: &DecodedInstr) -> String {
    let m = d.op.mnemonic();
    match d.op.format() {
        Format::R => format!("{m} x{}, x{}, x{}", d.rd, d.rs1, d.rs2),
        Format::I if d.op.is_load() || d.op == Op::Jalr => format!("{m} x{}, {}(x{})", d.rd, d.imm, d.rs1),
        Format::I | Format::Shift => format!("{m} x{}, x{}, {}", d.rd, d.rs1, d.imm),
        Format::S => format!("{m} x{}, {}(x{})", d.rs2, d.imm, d.rs1),
        Format::B => format!("{m} x{}, x{}, {}", d.rs1, d.rs2, d.imm),
        Format::U => format!("{m} x{}, {:#x}", d.rd, (d.imm as u32) >> 12),
        Format::J => format!("{m} x{}, {}", d.rd, d.imm),
        Format::Csr => format!("{m} x{}, {}, x{}", d.rd, csr_operand(d.csr), d.rs1),
        Format::CsrImm => format!("{m} x{}, {}, {}", d.rd, csr_operand(d.csr), d.imm),
        Format::Fence => {
            let bits = d.imm as u32;
            format!("{m} {}, {}", fence_set(bits >> 4), fence_set(bits & 0xF))
        }
        Format::Bare => m.to_owned(),
    }
}

/// Disassembles one word. Undecodable words yield text starting with
/// [`ILLEGAL_MARKER`].
pub fn disassemble(word: u32) -> String {
    let d = decode(word);
    if d.op == Op::Illegal {
        format!("{ILLEGAL_MARKER} ({word:#010x})")
    } else {
        format_instr(&d)
    }
}
