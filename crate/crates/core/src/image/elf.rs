//! Minimal ELF32 little-endian executable loader.

use super::ImageError;

const EM_RISCV: u16 = 243;
const ET_EXEC: u16 = 2;
const PT_LOAD: u32 = 1;
const EHDR_SIZE: usize = 52;
const PHDR_SIZE: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub vaddr: u32,
    /// File bytes followed by zero fill up to the segment's memory size.
    pub data: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElfImage {
    pub entry: u32,
    pub segments: Vec<Segment>,
}

fn u16_at(b: &[u8], off: usize) -> Result<u16, ImageError> {
    b.get(off..off + 2).map(|s| u16::from_le_bytes([s[0], s[1]])).ok_or(ImageError::Truncated)
}

fn u32_at(b: &[u8], off: usize) -> Result<u32, ImageError> {
    b.get(off..off + 4).map(|s| u32::from_le_bytes([s[0], s[1], s[2], s[3]])).ok_or(ImageError::Truncated)
}

/// Returns the entry point and every PT_LOAD segment.
pub fn load_elf(bytes: &[u8]) -> Result<ElfImage, ImageError> {
    if bytes.len() < 4 || &bytes[..4] != b"\x7fELF" {
        return Err(ImageError::BadMagic);
    }
    if bytes.len() < EHDR_SIZE {
        return Err(ImageError::Truncated);
    }
    if bytes[4] != 1 {
        return Err(ImageError::WrongClass);
    }
    if bytes[5] != 1 {
        return Err(ImageError::WrongEndianness);
    }
    if u16_at(bytes, 18)? != EM_RISCV {
        return Err(ImageError::WrongMachine);
    }
    if u16_at(bytes, 16)? != ET_EXEC {
        return Err(ImageError::NotExecutable);
    }
    let entry = u32_at(bytes, 24)?;
    let phoff = u32_at(bytes, 28)? as usize;
    let phentsize = u16_at(bytes, 42)? as usize;
    let phnum = u16_at(bytes, 44)? as usize;
    if phnum > 0 && phentsize < PHDR_SIZE {
        return Err(ImageError::Truncated);
    }

    let mut segments = Vec::new();
    for i in 0..phnum {
        let ph = phoff + i * phentsize;
        if u32_at(bytes, ph)? != PT_LOAD {
            continue;
        }
        let offset = u32_at(bytes, ph + 4)? as usize;
        let vaddr = u32_at(bytes, ph + 8)?;
        let filesz = u32_at(bytes, ph + 16)? as usize;
        let memsz = u32_at(bytes, ph + 20)? as usize;
        if memsz < filesz {
            return Err(ImageError::Truncated);
        }
        let file =
            bytes.get(offset..offset.checked_add(filesz).ok_or(ImageError::Truncated)?).ok_or(ImageError::Truncated)?;
        let mut data = file.to_vec();
        data.resize(memsz, 0);
        segments.push(Segment { vaddr, data });
    }
    Ok(ElfImage { entry, segments })
}
