//! Two-pass assembler and disassembler for the simulated RV32I subset.
//!
//! Source is line oriented: `[label:]... [mnemonic operands] [# comment]`.
//! Registers may be written as `x<N>` or by ABI name, CSRs by name or as a
//! 12-bit number. Branch and jump targets are either labels or signed byte
//! offsets relative to the instruction. Directives: `.org <addr>`,
//! `.word <value|label>[, ...]`, `.space <bytes>`, `.ascii "<text>"` (zero
//! padded to a word boundary). Pseudo-instructions: `nop`, `li`, `j`, `ret`.

mod disasm;
mod encode;
mod regs;

use std::collections::BTreeMap;
use std::fmt::Write as _;

pub use disasm::{disassemble, format_instr, ILLEGAL_MARKER};
pub use encode::{encode, EncodeError};
pub use regs::{parse_register, ABI_NAMES};

use crate::functional::csr::csr_addr;
use crate::functional::decode::{DecodedInstr, Format, Op};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AsmErrorKind {
    #[error("undefined label `{0}`")]
    UndefinedLabel(String),
    #[error("label `{0}` defined more than once")]
    DuplicateLabel(String),
    #[error("unknown mnemonic `{0}`")]
    UnknownMnemonic(String),
    #[error("unknown directive `{0}`")]
    UnknownDirective(String),
    #[error("`{mnemonic}` expects {expected} operand(s), got {got}")]
    OperandCount { mnemonic: String, expected: usize, got: usize },
    #[error("bad operand `{0}`")]
    BadOperand(String),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(".org {0:#x} is not word aligned or moves backwards")]
    BadOrg(u64),
    #[error(".space size {0} is not a multiple of 4")]
    BadSpace(u64),
    #[error("program emits no words")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {kind}")]
pub struct AsmError {
    pub line: usize,
    pub kind: AsmErrorKind,
}

/// Output of [`assemble`]: contiguous little-endian words starting at `base`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeBlob {
    pub base: u32,
    pub words: Vec<u32>,
    pub symbols: BTreeMap<String, u32>,
}

impl CodeBlob {
    pub fn len_bytes(&self) -> u32 {
        (self.words.len() * 4) as u32
    }

    pub fn end(&self) -> u64 {
        self.base as u64 + self.len_bytes() as u64
    }

    pub fn symbol(&self, name: &str) -> Option<u32> {
        self.symbols.get(name).copied()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.words.iter().flat_map(|w| w.to_le_bytes()).collect()
    }

    /// `address: word  disassembly` per line.
    pub fn listing(&self) -> String {
        let mut out = String::new();
        for (i, &w) in self.words.iter().enumerate() {
            let addr = self.base.wrapping_add(4 * i as u32);
            let _ = writeln!(out, "{addr:08x}: {w:08x}  {}", disassemble(w));
        }
        out
    }
}

#[derive(Debug)]
enum Body {
    Instr { mnemonic: String, operands: Vec<String> },
    Org(u64),
    Words(Vec<String>),
    Space(u64),
    Ascii(Vec<u8>),
}

#[derive(Debug)]
struct Statement {
    line: usize,
    addr: u32,
    body: Body,
}

fn err(line: usize, kind: AsmErrorKind) -> AsmError {
    AsmError { line, kind }
}

pub fn parse_int(s: &str) -> Option<i64> {
    let s = s.trim();
    let (neg, digits) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let v = if let Some(hex) = digits.strip_prefix("0x").or_else(|| digits.strip_prefix("0X")) {
        i64::from_str_radix(&hex.replace('_', ""), 16).ok()?
    } else if let Some(bin) = digits.strip_prefix("0b") {
        i64::from_str_radix(&bin.replace('_', ""), 2).ok()?
    } else if !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit() || c == '_') {
        digits.replace('_', "").parse().ok()?
    } else {
        return None;
    };
    Some(if neg { -v } else { v })
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_' || c == '.')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

/// Removes a trailing `#` comment, ignoring `#` inside double quotes.
fn strip_comment(line: &str) -> &str {
    let mut in_str = false;
    let mut prev = '\0';
    for (i, c) in line.char_indices() {
        match c {
            '"' if prev != '\\' => in_str = !in_str,
            '#' if !in_str => return &line[..i],
            _ => {}
        }
        prev = c;
    }
    line
}

fn split_operands(s: &str) -> Vec<String> {
    let s = s.trim();
    if s.is_empty() {
        return Vec::new();
    }
    s.split(',').map(|op| op.trim().to_owned()).collect()
}

fn parse_ascii(line: usize, s: &str) -> Result<Vec<u8>, AsmError> {
    let s = s.trim();
    let inner = s
        .strip_prefix('"')
        .and_then(|r| r.strip_suffix('"'))
        .ok_or_else(|| err(line, AsmErrorKind::BadOperand(s.to_owned())))?;
    let mut out = Vec::new();
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push(b'\n'),
                Some('t') => out.push(b'\t'),
                Some('0') => out.push(0),
                Some('\\') => out.push(b'\\'),
                Some('"') => out.push(b'"'),
                other => return Err(err(line, AsmErrorKind::BadOperand(format!("\\{}", other.unwrap_or(' '))))),
            }
        } else {
            let mut buf = [0u8; 4];
            out.extend_from_slice(c.encode_utf8(&mut buf).as_bytes());
        }
    }
    Ok(out)
}

/// Number of words `li` expands to for a known constant.
fn li_words(value: i64) -> u32 {
    if (-2048..=2047).contains(&value) {
        1
    } else {
        2
    }
}

fn instr_words(mnemonic: &str, operands: &[String]) -> u32 {
    if mnemonic == "li" {
        match operands.get(1).and_then(|s| parse_int(s)) {
            Some(v) => li_words(v),
            None => 2,
        }
    } else {
        1
    }
}

/// Splits a 32-bit constant into `lui`/`addi` parts.
fn hi_lo(value: u32) -> (u32, i32) {
    let hi = value.wrapping_add(0x800) & 0xFFFF_F000;
    let lo = value.wrapping_sub(hi) as i32;
    (hi, lo)
}

struct Pass2<'a> {
    symbols: &'a BTreeMap<String, u32>,
    line: usize,
    pc: u32,
}

impl Pass2<'_> {
    fn fail(&self, kind: AsmErrorKind) -> AsmError {
        err(self.line, kind)
    }

    fn reg(&self, s: &str) -> Result<u8, AsmError> {
        parse_register(s).ok_or_else(|| self.fail(AsmErrorKind::BadOperand(s.to_owned())))
    }

    fn int(&self, s: &str) -> Result<i64, AsmError> {
        parse_int(s).ok_or_else(|| self.fail(AsmErrorKind::BadOperand(s.to_owned())))
    }

    fn value(&self, s: &str) -> Result<i64, AsmError> {
        if let Some(v) = parse_int(s) {
            return Ok(v);
        }
        if is_ident(s) {
            return self
                .symbols
                .get(s)
                .map(|&a| a as i64)
                .ok_or_else(|| self.fail(AsmErrorKind::UndefinedLabel(s.to_owned())));
        }
        Err(self.fail(AsmErrorKind::BadOperand(s.to_owned())))
    }

    /// Numeric targets are offsets; labels resolve relative to `pc`.
    fn target(&self, s: &str) -> Result<i32, AsmError> {
        if let Some(v) = parse_int(s) {
            return i32::try_from(v).map_err(|_| {
                self.fail(
                    EncodeError::ImmediateOutOfRange { value: v, min: i32::MIN as i64, max: i32::MAX as i64 }.into(),
                )
            });
        }
        let addr = self.value(s)?;
        Ok((addr as u32).wrapping_sub(self.pc) as i32)
    }

    fn csr(&self, s: &str) -> Result<u16, AsmError> {
        if let Some(a) = csr_addr(s) {
            return Ok(a);
        }
        match parse_int(s) {
            Some(v) if (0..=0xFFF).contains(&v) => Ok(v as u16),
            _ => Err(self.fail(AsmErrorKind::BadOperand(s.to_owned()))),
        }
    }

    /// Parses `imm(reg)`; a bare `(reg)` means offset 0.
    fn mem(&self, s: &str) -> Result<(i32, u8), AsmError> {
        let bad = || self.fail(AsmErrorKind::BadOperand(s.to_owned()));
        let open = s.find('(').ok_or_else(bad)?;
        let inner = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        let off_text = s[..open].trim();
        let off = if off_text.is_empty() { 0 } else { self.int(off_text)? };
        let off = i32::try_from(off).map_err(|_| bad())?;
        Ok((off, self.reg(inner.trim())?))
    }

    fn fence_set(&self, s: &str) -> Result<i32, AsmError> {
        if s == "0" {
            return Ok(0);
        }
        let mut bits = 0;
        for c in s.chars() {
            let bit = match c {
                'i' => 8,
                'o' => 4,
                'r' => 2,
                'w' => 1,
                _ => return Err(self.fail(AsmErrorKind::BadOperand(s.to_owned()))),
            };
            bits |= bit;
        }
        Ok(bits)
    }

    fn expect(&self, mnemonic: &str, ops: &[String], n: usize) -> Result<(), AsmError> {
        if ops.len() != n {
            Err(self.fail(AsmErrorKind::OperandCount { mnemonic: mnemonic.to_owned(), expected: n, got: ops.len() }))
        } else {
            Ok(())
        }
    }

    fn enc(&self, d: DecodedInstr) -> Result<u32, AsmError> {
        encode(&d).map_err(|e| self.fail(e.into()))
    }

    fn instr(&self, mnemonic: &str, ops: &[String]) -> Result<Vec<u32>, AsmError> {
        let mut d = DecodedInstr { op: Op::Illegal, rd: 0, rs1: 0, rs2: 0, imm: 0, csr: 0 };
        match mnemonic {
            "nop" => {
                self.expect(mnemonic, ops, 0)?;
                d.op = Op::Addi;
                return Ok(vec![self.enc(d)?]);
            }
            "ret" => {
                self.expect(mnemonic, ops, 0)?;
                d.op = Op::Jalr;
                d.rs1 = 1;
                return Ok(vec![self.enc(d)?]);
            }
            "j" => {
                self.expect(mnemonic, ops, 1)?;
                d.op = Op::Jal;
                d.imm = self.target(&ops[0])?;
                return Ok(vec![self.enc(d)?]);
            }
            "li" => {
                self.expect(mnemonic, ops, 2)?;
                let rd = self.reg(&ops[0])?;
                let literal = parse_int(&ops[1]);
                let value = self.value(&ops[1])?;
                if !(i32::MIN as i64..=u32::MAX as i64).contains(&value) {
                    return Err(self.fail(
                        EncodeError::ImmediateOutOfRange { value, min: i32::MIN as i64, max: u32::MAX as i64 }.into(),
                    ));
                }
                if literal.is_some() && li_words(value) == 1 {
                    let addi = DecodedInstr { op: Op::Addi, rd, imm: value as i32, ..d };
                    return Ok(vec![self.enc(addi)?]);
                }
                let (hi, lo) = hi_lo(value as u32);
                let lui = DecodedInstr { op: Op::Lui, rd, imm: hi as i32, ..d };
                let addi = DecodedInstr { op: Op::Addi, rd, rs1: rd, imm: lo, ..d };
                return Ok(vec![self.enc(lui)?, self.enc(addi)?]);
            }
            _ => {}
        }

        let op =
            Op::from_mnemonic(mnemonic).ok_or_else(|| self.fail(AsmErrorKind::UnknownMnemonic(mnemonic.to_owned())))?;
        d.op = op;
        match op.format() {
            Format::R => {
                self.expect(mnemonic, ops, 3)?;
                d.rd = self.reg(&ops[0])?;
                d.rs1 = self.reg(&ops[1])?;
                d.rs2 = self.reg(&ops[2])?;
            }
            Format::I if op.is_load() || op == Op::Jalr => {
                if op == Op::Jalr && ops.len() == 1 {
                    d.rd = 1;
                    d.rs1 = self.reg(&ops[0])?;
                } else {
                    self.expect(mnemonic, ops, 2)?;
                    d.rd = self.reg(&ops[0])?;
                    (d.imm, d.rs1) = self.mem(&ops[1])?;
                }
            }
            Format::I | Format::Shift => {
                self.expect(mnemonic, ops, 3)?;
                d.rd = self.reg(&ops[0])?;
                d.rs1 = self.reg(&ops[1])?;
                d.imm = self.small(&ops[2])?;
            }
            Format::S => {
                self.expect(mnemonic, ops, 2)?;
                d.rs2 = self.reg(&ops[0])?;
                (d.imm, d.rs1) = self.mem(&ops[1])?;
            }
            Format::B => {
                self.expect(mnemonic, ops, 3)?;
                d.rs1 = self.reg(&ops[0])?;
                d.rs2 = self.reg(&ops[1])?;
                d.imm = self.target(&ops[2])?;
            }
            Format::U => {
                self.expect(mnemonic, ops, 2)?;
                d.rd = self.reg(&ops[0])?;
                let v = self.int(&ops[1])?;
                if !(0..=0xFFFFF).contains(&v) {
                    return Err(self.fail(EncodeError::ImmediateOutOfRange { value: v, min: 0, max: 0xFFFFF }.into()));
                }
                d.imm = (v << 12) as u32 as i32;
            }
            Format::J => {
                if ops.len() == 1 {
                    d.rd = 1;
                    d.imm = self.target(&ops[0])?;
                } else {
                    self.expect(mnemonic, ops, 2)?;
                    d.rd = self.reg(&ops[0])?;
                    d.imm = self.target(&ops[1])?;
                }
            }
            Format::Csr => {
                self.expect(mnemonic, ops, 3)?;
                d.rd = self.reg(&ops[0])?;
                d.csr = self.csr(&ops[1])?;
                d.rs1 = self.reg(&ops[2])?;
            }
            Format::CsrImm => {
                self.expect(mnemonic, ops, 3)?;
                d.rd = self.reg(&ops[0])?;
                d.csr = self.csr(&ops[1])?;
                d.imm = self.small(&ops[2])?;
            }
            Format::Fence => {
                if ops.is_empty() {
                    d.imm = 0xFF;
                } else {
                    self.expect(mnemonic, ops, 2)?;
                    d.imm = (self.fence_set(&ops[0])? << 4) | self.fence_set(&ops[1])?;
                }
            }
            Format::Bare => self.expect(mnemonic, ops, 0)?,
        }
        Ok(vec![self.enc(d)?])
    }

    /// Immediate for I/shift/CSR-immediate operands; range is checked by
    /// the encoder.
    fn small(&self, s: &str) -> Result<i32, AsmError> {
        let v = self.int(s)?;
        i32::try_from(v).map_err(|_| {
            self.fail(EncodeError::ImmediateOutOfRange { value: v, min: i32::MIN as i64, max: i32::MAX as i64 }.into())
        })
    }
}

/// Assembles `source` with the location counter starting at `origin`. A
/// `.org` that precedes all emitted content rebases the blob.
pub fn assemble(source: &str, origin: u32) -> Result<CodeBlob, AsmError> {
    if !origin.is_multiple_of(4) {
        return Err(err(0, AsmErrorKind::BadOrg(origin as u64)));
    }
    let mut statements = Vec::new();
    let mut symbols = BTreeMap::new();
    let mut base = origin as u64;
    let mut pc = origin as u64;
    let mut emitted = false;

    for (idx, raw) in source.lines().enumerate() {
        let line = idx + 1;
        let mut rest = strip_comment(raw).trim();
        // leading labels
        while let Some(colon) = rest.find(':') {
            let name = rest[..colon].trim();
            if !is_ident(name) || name.contains('"') {
                break;
            }
            if symbols.insert(name.to_owned(), pc as u32).is_some() {
                return Err(err(line, AsmErrorKind::DuplicateLabel(name.to_owned())));
            }
            rest = rest[colon + 1..].trim();
        }
        if rest.is_empty() {
            continue;
        }
        let (head, tail) = match rest.find(char::is_whitespace) {
            Some(i) => (&rest[..i], rest[i..].trim()),
            None => (rest, ""),
        };
        let head = head.to_ascii_lowercase();
        let body = if let Some(directive) = head.strip_prefix('.') {
            match directive {
                "org" => {
                    let v = parse_int(tail).ok_or_else(|| err(line, AsmErrorKind::BadOperand(tail.to_owned())))?;
                    if v < 0 || v > u32::MAX as i64 || v % 4 != 0 || (emitted && (v as u64) < pc) {
                        return Err(err(line, AsmErrorKind::BadOrg(v as u64)));
                    }
                    if !emitted {
                        base = v as u64;
                        // labels seen so far belong to the new base
                        for addr in symbols.values_mut() {
                            if *addr as u64 == pc {
                                *addr = v as u32;
                            }
                        }
                    }
                    Body::Org(v as u64)
                }
                "word" => Body::Words(split_operands(tail)),
                "space" => {
                    let v = parse_int(tail).ok_or_else(|| err(line, AsmErrorKind::BadOperand(tail.to_owned())))?;
                    if v < 0 || v % 4 != 0 {
                        return Err(err(line, AsmErrorKind::BadSpace(v as u64)));
                    }
                    Body::Space(v as u64)
                }
                "ascii" => Body::Ascii(parse_ascii(line, tail)?),
                _ => return Err(err(line, AsmErrorKind::UnknownDirective(head.clone()))),
            }
        } else {
            Body::Instr { mnemonic: head, operands: split_operands(tail) }
        };
        let size = match &body {
            Body::Org(v) => {
                if emitted {
                    *v - pc
                } else {
                    pc = *v;
                    0
                }
            }
            Body::Words(ws) => 4 * ws.len() as u64,
            Body::Space(n) => *n,
            Body::Ascii(bytes) => (bytes.len() as u64).div_ceil(4) * 4,
            Body::Instr { mnemonic, operands } => 4 * instr_words(mnemonic, operands) as u64,
        };
        statements.push(Statement { line, addr: pc as u32, body });
        if size > 0 {
            emitted = true;
        }
        pc += size;
        if pc > 1 << 32 {
            return Err(err(line, AsmErrorKind::BadOrg(pc)));
        }
    }

    let mut words = Vec::new();
    for st in &statements {
        let p2 = Pass2 { symbols: &symbols, line: st.line, pc: st.addr };
        match &st.body {
            Body::Org(v) => {
                let fill = (*v).saturating_sub(base + 4 * words.len() as u64) / 4;
                words.extend(std::iter::repeat_n(0, fill as usize));
            }
            Body::Words(items) => {
                for item in items {
                    let v = p2.value(item)?;
                    if !(i32::MIN as i64..=u32::MAX as i64).contains(&v) {
                        return Err(p2.fail(
                            EncodeError::ImmediateOutOfRange { value: v, min: i32::MIN as i64, max: u32::MAX as i64 }
                                .into(),
                        ));
                    }
                    words.push(v as u32);
                }
            }
            Body::Space(n) => words.extend(std::iter::repeat_n(0, (*n / 4) as usize)),
            Body::Ascii(bytes) => {
                for chunk in bytes.chunks(4) {
                    let mut b = [0u8; 4];
                    b[..chunk.len()].copy_from_slice(chunk);
                    words.push(u32::from_le_bytes(b));
                }
            }
            Body::Instr { mnemonic, operands } => words.extend(p2.instr(mnemonic, operands)?),
        }
    }
    if words.is_empty() {
        return Err(err(0, AsmErrorKind::Empty));
    }
    Ok(CodeBlob { base: base as u32, words, symbols })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(src: &str) -> u32 {
        let blob = assemble(src, 0x100).unwrap();
        assert_eq!(blob.words.len(), 1, "{src}");
        blob.words[0]
    }

    #[test]
    fn spec_examples() {
        assert_eq!(one("addi x0, x0, 0"), 0x0000_0013);
        assert_eq!(one("ecall"), 0x0000_0073);
        assert_eq!(one("loop: beq x1, x2, loop"), 0x0020_8063);
    }

    #[test]
    fn abi_names_and_pseudos() {
        assert_eq!(one("addi ra, zero, 5"), one("addi x1, x0, 5"));
        assert_eq!(one("nop"), 0x13);
        assert_eq!(one("ret"), 0x0000_8067);
        assert_eq!(one("csrrw ra, sepc, sp"), 0x1411_10f3);
        assert_eq!(one("csrrw ra, 0x141, sp"), 0x1411_10f3);
    }

    #[test]
    fn li_expansion() {
        let b = assemble("li a0, 5", 0).unwrap();
        assert_eq!(b.words, vec![0x0050_0513]);
        let b = assemble("li a0, 0x12345FFF", 0).unwrap();
        assert_eq!(b.words.len(), 2);
        // lui a0, 0x12346 ; addi a0, a0, -1
        assert_eq!(b.words, vec![0x1234_6537, 0xfff5_0513]);
        let b = assemble("li t0, target\ntarget: nop", 0x1000).unwrap();
        assert_eq!(b.words.len(), 3);
        assert_eq!(b.symbol("target"), Some(0x1008));
    }

    #[test]
    fn forward_and_backward_labels() {
        let src = "start: beq x0, x0, end\n nop\nend: j start";
        let b = assemble(src, 0x2000).unwrap();
        assert_eq!(disassemble(b.words[0]), "beq x0, x0, 8");
        assert_eq!(disassemble(b.words[2]), "jal x0, -8");
    }

    #[test]
    fn directives() {
        let b = assemble(".org 0x40000000\nnop\n.word 7, lbl\n.space 8\nlbl: .ascii \"hi\\n\"", 0).unwrap();
        assert_eq!(b.base, 0x4000_0000);
        assert_eq!(b.words, vec![0x13, 7, 0x4000_0014, 0, 0, 0x000a_6968]);
        let b = assemble("nop\n.org 0x10\nnop", 0).unwrap();
        assert_eq!(b.words, vec![0x13, 0, 0, 0, 0x13]);
    }

    #[test]
    fn error_classes() {
        let e = assemble("beq x1, x2, nowhere", 0).unwrap_err();
        assert_eq!(e.kind, AsmErrorKind::UndefinedLabel("nowhere".into()));
        let e = assemble("nop\naddi x1, x1, 5000", 0).unwrap_err();
        assert_eq!(e.line, 2);
        assert!(matches!(e.kind, AsmErrorKind::Encode(EncodeError::ImmediateOutOfRange { .. })));
        let e = assemble("mul x1, x2, x3", 0).unwrap_err();
        assert_eq!(e.kind, AsmErrorKind::UnknownMnemonic("mul".into()));
        let e = assemble("beq x1, x2, 7", 0).unwrap_err();
        assert_eq!(e.kind, AsmErrorKind::Encode(EncodeError::MisalignedTarget(7)));
        let e = assemble("a: nop\na: nop", 0).unwrap_err();
        assert_eq!(e.kind, AsmErrorKind::DuplicateLabel("a".into()));
        assert_eq!(assemble("# nothing", 0).unwrap_err().kind, AsmErrorKind::Empty);
    }

    #[test]
    fn deterministic() {
        let src = "l: addi a0, a0, 1\n bne a0, a1, l\n ecall";
        assert_eq!(assemble(src, 0x10000), assemble(src, 0x10000));
    }

    #[test]
    fn hi_lo_reconstructs() {
        for v in [0u32, 0x7FF, 0x800, 0xFFF, 0x8000_0000, 0xFFFF_FFFF, 0x1234_5678] {
            let (hi, lo) = hi_lo(v);
            assert_eq!(hi.wrapping_add(lo as u32), v);
            assert!((-2048..=2047).contains(&lo));
        }
    }
}
