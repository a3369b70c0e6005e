//! RV32I instruction decoding.

/// Operation class of a decoded word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Lui,
    Auipc,
    Jal,
    Jalr,
    Beq,
    Bne,
    Blt,
    Bge,
    Bltu,
    Bgeu,
    Lb,
    Lh,
    Lw,
    Lbu,
    Lhu,
    Sb,
    Sh,
    Sw,
    Addi,
    Slti,
    Sltiu,
    Xori,
    Ori,
    Andi,
    Slli,
    Srli,
    Srai,
    Add,
    Sub,
    Sll,
    Slt,
    Sltu,
    Xor,
    Srl,
    Sra,
    Or,
    And,
    Fence,
    Ecall,
    Ebreak,
    Csrrw,
    Csrrs,
    Csrrc,
    Csrrwi,
    Csrrsi,
    Csrrci,
    Sret,
    Mret,
    Illegal,
}

/// Instruction format, which determines operand layout and immediate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    R,
    I,
    /// I-type with a 5-bit shift amount.
    Shift,
    S,
    B,
    U,
    J,
    Csr,
    CsrImm,
    Fence,
    /// No operands (ECALL, EBREAK, SRET, MRET).
    Bare,
}

impl Op {
    pub const ALL: [Op; 48] = [
        Op::Lui,
        Op::Auipc,
        Op::Jal,
        Op::Jalr,
        Op::Beq,
        Op::Bne,
        Op::Blt,
        Op::Bge,
        Op::Bltu,
        Op::Bgeu,
        Op::Lb,
        Op::Lh,
        Op::Lw,
        Op::Lbu,
        Op::Lhu,
        Op::Sb,
        Op::Sh,
        Op::Sw,
        Op::Addi,
        Op::Slti,
        Op::Sltiu,
        Op::Xori,
        Op::Ori,
        Op::Andi,
        Op::Slli,
        Op::Srli,
        Op::Srai,
        Op::Add,
        Op::Sub,
        Op::Sll,
        Op::Slt,
        Op::Sltu,
        Op::Xor,
        Op::Srl,
        Op::Sra,
        Op::Or,
        Op::And,
        Op::Fence,
        Op::Ecall,
        Op::Ebreak,
        Op::Csrrw,
        Op::Csrrs,
        Op::Csrrc,
        Op::Csrrwi,
        Op::Csrrsi,
        Op::Csrrci,
        Op::Sret,
        Op::Mret,
    ];

    pub fn mnemonic(self) -> &'static str {
        use Op::*;
        match self {
            Lui => "lui",
            Auipc => "auipc",
            Jal => "jal",
            Jalr => "jalr",
            Beq => "beq",
            Bne => "bne",
            Blt => "blt",
            Bge => "bge",
            Bltu => "bltu",
            Bgeu => "bgeu",
            Lb => "lb",
            Lh => "lh",
            Lw => "lw",
            Lbu => "lbu",
            Lhu => "lhu",
            Sb => "sb",
            Sh => "sh",
            Sw => "sw",
            Addi => "addi",
            Slti => "slti",
            Sltiu => "sltiu",
            Xori => "xori",
            Ori => "ori",
            Andi => "andi",
            Slli => "slli",
            Srli => "srli",
            Srai => "srai",
            Add => "add",
            Sub => "sub",
            Sll => "sll",
            Slt => "slt",
            Sltu => "sltu",
            Xor => "xor",
            Srl => "srl",
            Sra => "sra",
            Or => "or",
            And => "and",
            Fence => "fence",
            Ecall => "ecall",
            Ebreak => "ebreak",
            Csrrw => "csrrw",
            Csrrs => "csrrs",
            Csrrc => "csrrc",
            Csrrwi => "csrrwi",
            Csrrsi => "csrrsi",
            Csrrci => "csrrci",
            Sret => "sret",
            Mret => "mret",
            Illegal => "illegal",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<Op> {
        Op::ALL.iter().copied().find(|op| op.mnemonic() == s)
    }

    pub fn format(self) -> Format {
        use Op::*;
        match self {
            Lui | Auipc => Format::U,
            Jal => Format::J,
            Jalr | Lb | Lh | Lw | Lbu | Lhu | Addi | Slti | Sltiu | Xori | Ori | Andi => Format::I,
            Slli | Srli | Srai => Format::Shift,
            Beq | Bne | Blt | Bge | Bltu | Bgeu => Format::B,
            Sb | Sh | Sw => Format::S,
            Add | Sub | Sll | Slt | Sltu | Xor | Srl | Sra | Or | And => Format::R,
            Csrrw | Csrrs | Csrrc => Format::Csr,
            Csrrwi | Csrrsi | Csrrci => Format::CsrImm,
            Fence => Format::Fence,
            Ecall | Ebreak | Sret | Mret | Illegal => Format::Bare,
        }
    }

    pub fn is_load(self) -> bool {
        matches!(self, Op::Lb | Op::Lh | Op::Lw | Op::Lbu | Op::Lhu)
    }

    pub fn is_store(self) -> bool {
        matches!(self, Op::Sb | Op::Sh | Op::Sw)
    }

    pub fn is_branch(self) -> bool {
        self.format() == Format::B
    }
}

/// One decoded instruction. Fields an instruction does not use are zero:
/// `rs2` is zero for I-type, `rs1` is zero for U/J-type and for the
/// immediate CSR forms (whose 5-bit source lives in `imm`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DecodedInstr {
    pub op: Op,
    pub rd: u8,
    pub rs1: u8,
    pub rs2: u8,
    /// Sign-extended immediate. For U-type this is the full `imm << 12`
    /// value; for FENCE it holds `pred << 4 | succ`.
    pub imm: i32,
    pub csr: u16,
}

impl DecodedInstr {
    pub const ILLEGAL: DecodedInstr = DecodedInstr { op: Op::Illegal, rd: 0, rs1: 0, rs2: 0, imm: 0, csr: 0 };

    fn new(op: Op) -> Self {
        DecodedInstr { op, ..Self::ILLEGAL }
    }
}

fn bits(word: u32, hi: u32, lo: u32) -> u32 {
    (word >> lo) & ((1 << (hi - lo + 1)) - 1)
}

fn sext(value: u32, width: u32) -> i32 {
    let shift = 32 - width;
    ((value << shift) as i32) >> shift
}

pub fn imm_i(word: u32) -> i32 {
    (word as i32) >> 20
}

pub fn imm_s(word: u32) -> i32 {
    sext((bits(word, 31, 25) << 5) | bits(word, 11, 7), 12)
}

pub fn imm_b(word: u32) -> i32 {
    let v =
        (bits(word, 31, 31) << 12) | (bits(word, 7, 7) << 11) | (bits(word, 30, 25) << 5) | (bits(word, 11, 8) << 1);
    sext(v, 13)
}

pub fn imm_u(word: u32) -> i32 {
    (word & 0xFFFF_F000) as i32
}

pub fn imm_j(word: u32) -> i32 {
    let v = (bits(word, 31, 31) << 20)
        | (bits(word, 19, 12) << 12)
        | (bits(word, 20, 20) << 11)
        | (bits(word, 30, 21) << 1);
    sext(v, 21)
}

/// Total decoder: anything outside the implemented subset is `Op::Illegal`.
pub fn decode(word: u32) -> DecodedInstr {
    let opcode = word & 0x7F;
    let rd = bits(word, 11, 7) as u8;
    let rs1 = bits(word, 19, 15) as u8;
    let rs2 = bits(word, 24, 20) as u8;
    let funct3 = bits(word, 14, 12);
    let funct7 = bits(word, 31, 25);

    let mut d = DecodedInstr::ILLEGAL;
    match opcode {
        0b0110111 | 0b0010111 => {
            d = DecodedInstr::new(if opcode == 0b0110111 { Op::Lui } else { Op::Auipc });
            d.rd = rd;
            d.imm = imm_u(word);
        }
        0b1101111 => {
            d = DecodedInstr::new(Op::Jal);
            d.rd = rd;
            d.imm = imm_j(word);
        }
        0b1100111 if funct3 == 0 => {
            d = DecodedInstr::new(Op::Jalr);
            d.rd = rd;
            d.rs1 = rs1;
            d.imm = imm_i(word);
        }
        0b1100011 => {
            let op = match funct3 {
                0b000 => Op::Beq,
                0b001 => Op::Bne,
                0b100 => Op::Blt,
                0b101 => Op::Bge,
                0b110 => Op::Bltu,
                0b111 => Op::Bgeu,
                _ => return d,
            };
            d = DecodedInstr::new(op);
            d.rs1 = rs1;
            d.rs2 = rs2;
            d.imm = imm_b(word);
        }
        0b0000011 => {
            let op = match funct3 {
                0b000 => Op::Lb,
                0b001 => Op::Lh,
                0b010 => Op::Lw,
                0b100 => Op::Lbu,
                0b101 => Op::Lhu,
                _ => return d,
            };
            d = DecodedInstr::new(op);
            d.rd = rd;
            d.rs1 = rs1;
            d.imm = imm_i(word);
        }
        0b0100011 => {
            let op = match funct3 {
                0b000 => Op::Sb,
                0b001 => Op::Sh,
                0b010 => Op::Sw,
                _ => return d,
            };
            d = DecodedInstr::new(op);
            d.rs1 = rs1;
            d.rs2 = rs2;
            d.imm = imm_s(word);
        }
        0b0010011 => {
            let op = match (funct3, funct7) {
                (0b000, _) => Op::Addi,
                (0b010, _) => Op::Slti,
                (0b011, _) => Op::Sltiu,
                (0b100, _) => Op::Xori,
                (0b110, _) => Op::Ori,
                (0b111, _) => Op::Andi,
                (0b001, 0) => Op::Slli,
                (0b101, 0) => Op::Srli,
                (0b101, 0b0100000) => Op::Srai,
                _ => return d,
            };
            d = DecodedInstr::new(op);
            d.rd = rd;
            d.rs1 = rs1;
            d.imm = if op.format() == Format::Shift { rs2 as i32 } else { imm_i(word) };
        }
        0b0110011 => {
            let op = match (funct3, funct7) {
                (0b000, 0) => Op::Add,
                (0b000, 0b0100000) => Op::Sub,
                (0b001, 0) => Op::Sll,
                (0b010, 0) => Op::Slt,
                (0b011, 0) => Op::Sltu,
                (0b100, 0) => Op::Xor,
                (0b101, 0) => Op::Srl,
                (0b101, 0b0100000) => Op::Sra,
                (0b110, 0) => Op::Or,
                (0b111, 0) => Op::And,
                _ => return d,
            };
            d = DecodedInstr::new(op);
            d.rd = rd;
            d.rs1 = rs1;
            d.rs2 = rs2;
        }
        0b0001111 => {
            // Plain FENCE only: fm=0, rd=rs1=0.
            if funct3 == 0 && rd == 0 && rs1 == 0 && bits(word, 31, 28) == 0 {
                d = DecodedInstr::new(Op::Fence);
                d.imm = bits(word, 27, 20) as i32;
            }
        }
        0b1110011 => match funct3 {
            0 => {
                d = match word {
                    0x0000_0073 => DecodedInstr::new(Op::Ecall),
                    0x0010_0073 => DecodedInstr::new(Op::Ebreak),
                    0x1020_0073 => DecodedInstr::new(Op::Sret),
                    0x3020_0073 => DecodedInstr::new(Op::Mret),
                    _ => DecodedInstr::ILLEGAL,
                };
            }
            0b001..=0b011 => {
                d = DecodedInstr::new(match funct3 {
                    0b001 => Op::Csrrw,
                    0b010 => Op::Csrrs,
                    _ => Op::Csrrc,
                });
                d.rd = rd;
                d.rs1 = rs1;
                d.csr = bits(word, 31, 20) as u16;
            }
            0b101..=0b111 => {
                d = DecodedInstr::new(match funct3 {
                    0b101 => Op::Csrrwi,
                    0b110 => Op::Csrrsi,
                    _ => Op::Csrrci,
                });
                d.rd = rd;
                d.imm = rs1 as i32;
                d.csr = bits(word, 31, 20) as u16;
            }
            _ => {}
        },
        _ => {}
    }
    d
}
