//! Instruction encoding: the inverse of [`decode`](crate::functional::decode::decode).

use crate::functional::decode::{DecodedInstr, Format, Op};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("immediate {value} out of range [{min}, {max}]")]
    ImmediateOutOfRange { value: i64, min: i64, max: i64 },
    #[error("branch/jump offset {0} is not a multiple of 2")]
    MisalignedTarget(i64),
    #[error("register index {0} out of range")]
    BadRegister(u8),
    #[error("CSR address {0:#x} exceeds 12 bits")]
    BadCsr(u16),
    #[error("illegal instruction cannot be encoded")]
    Illegal,
}

fn check_range(value: i64, min: i64, max: i64) -> Result<(), EncodeError> {
    if value < min || value > max {
        Err(EncodeError::ImmediateOutOfRange { value, min, max })
    } else {
        Ok(())
    }
}

/// `(opcode, funct3, funct7)` for every encodable op.
fn fields(op: Op) -> (u32, u32, u32) {
    use Op::*;
    match op {
        Lui => (0b0110111, 0, 0),
        Auipc => (0b0010111, 0, 0),
        Jal => (0b1101111, 0, 0),
        Jalr => (0b1100111, 0, 0),
        Beq => (0b1100011, 0b000, 0),
        Bne => (0b1100011, 0b001, 0),
        Blt => (0b1100011, 0b100, 0),
        Bge => (0b1100011, 0b101, 0),
        Bltu => (0b1100011, 0b110, 0),
        Bgeu => (0b1100011, 0b111, 0),
        Lb => (0b0000011, 0b000, 0),
        Lh => (0b0000011, 0b001, 0),
        Lw => (0b0000011, 0b010, 0),
        Lbu => (0b0000011, 0b100, 0),
        Lhu => (0b0000011, 0b101, 0),
        Sb => (0b0100011, 0b000, 0),
        Sh => (0b0100011, 0b001, 0),
        Sw => (0b0100011, 0b010, 0),
        Addi => (0b0010011, 0b000, 0),
        Slti => (0b0010011, 0b010, 0),
        Sltiu => (0b0010011, 0b011, 0),
        Xori => (0b0010011, 0b100, 0),
        Ori => (0b0010011, 0b110, 0),
        Andi => (0b0010011, 0b111, 0),
        Slli => (0b0010011, 0b001, 0),
        Srli => (0b0010011, 0b101, 0),
        Srai => (0b0010011, 0b101, 0b0100000),
        Add => (0b0110011, 0b000, 0),
        Sub => (0b0110011, 0b000, 0b0100000),
        Sll => (0b0110011, 0b001, 0),
        Slt => (0b0110011, 0b010, 0),
        Sltu => (0b0110011, 0b011, 0),
        Xor => (0b0110011, 0b100, 0),
        Srl => (0b0110011, 0b101, 0),
        Sra => (0b0110011, 0b101, 0b0100000),
        Or => (0b0110011, 0b110, 0),
        And => (0b0110011, 0b111, 0),
        Fence => (0b0001111, 0, 0),
        Ecall | Ebreak | Sret | Mret => (0b1110011, 0, 0),
        Csrrw => (0b1110011, 0b001, 0),
        Csrrs => (0b1110011, 0b010, 0),
        Csrrc => (0b1110011, 0b011, 0),
        Csrrwi => (0b1110011, 0b101, 0),
        Csrrsi => (0b1110011, 0b110, 0),
        Csrrci => (0b1110011, 0b111, 0),
        Illegal => (0, 0, 0),
    }
}

pub fn encode(d: &DecodedInstr) -> Result<u32, EncodeError> {
    for r in [d.rd, d.rs1, d.rs2] {
        if r >= 32 {
            return Err(EncodeError::BadRegister(r));
        }
    }
    let (opcode, funct3, funct7) = fields(d.op);
    let rd = (d.rd as u32) << 7;
    let rs1 = (d.rs1 as u32) << 15;
    let rs2 = (d.rs2 as u32) << 20;
    let f3 = funct3 << 12;
    let imm = d.imm as i64;
    let word = match d.op.format() {
        Format::R => (funct7 << 25) | rs2 | rs1 | f3 | rd | opcode,
        Format::I => {
            check_range(imm, -2048, 2047)?;
            ((d.imm as u32) << 20) | rs1 | f3 | rd | opcode
        }
        Format::Shift => {
            check_range(imm, 0, 31)?;
            (funct7 << 25) | ((d.imm as u32) << 20) | rs1 | f3 | rd | opcode
        }
        Format::S => {
            check_range(imm, -2048, 2047)?;
            let u = d.imm as u32;
            (((u >> 5) & 0x7F) << 25) | rs2 | rs1 | f3 | ((u & 0x1F) << 7) | opcode
        }
        Format::B => {
            if imm & 1 != 0 {
                return Err(EncodeError::MisalignedTarget(imm));
            }
            check_range(imm, -4096, 4094)?;
            let u = d.imm as u32;
            (((u >> 12) & 1) << 31)
                | (((u >> 5) & 0x3F) << 25)
                | rs2
                | rs1
                | f3
                | (((u >> 1) & 0xF) << 8)
                | (((u >> 11) & 1) << 7)
                | opcode
        }
        Format::U => {
            if d.imm & 0xFFF != 0 {
                return Err(EncodeError::ImmediateOutOfRange { value: imm, min: 0, max: 0xFFFFF000 });
            }
            (d.imm as u32) | rd | opcode
        }
        Format::J => {
            if imm & 1 != 0 {
                return Err(EncodeError::MisalignedTarget(imm));
            }
            check_range(imm, -(1 << 20), (1 << 20) - 2)?;
            let u = d.imm as u32;
            (((u >> 20) & 1) << 31)
                | (((u >> 1) & 0x3FF) << 21)
                | (((u >> 11) & 1) << 20)
                | (((u >> 12) & 0xFF) << 12)
                | rd
                | opcode
        }
        Format::Csr | Format::CsrImm => {
            if d.csr > 0xFFF {
                return Err(EncodeError::BadCsr(d.csr));
            }
            let src = if d.op.format() == Format::CsrImm {
                check_range(imm, 0, 31)?;
                (d.imm as u32) << 15
            } else {
                rs1
            };
            ((d.csr as u32) << 20) | src | f3 | rd | opcode
        }
        Format::Fence => {
            check_range(imm, 0, 0xFF)?;
            ((d.imm as u32) << 20) | opcode
        }
        Format::Bare => match d.op {
            Op::Ecall => 0x0000_0073,
            Op::Ebreak => 0x0010_0073,
            Op::Sret => 0x1020_0073,
            Op::Mret => 0x3020_0073,
            _ => return Err(EncodeError::Illegal),
        },
    };
    Ok(word)
}
