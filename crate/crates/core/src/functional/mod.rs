//! The functional simulator: executes RV32I instructions over a VA-indexed
//! memory image, routes environment calls through the trap levels and
//! emits one trace record per dynamic instruction.

pub mod csr;
pub mod decode;
mod state;

pub use state::{dest_reg, source_regs, Boot, ExecError, MachineState, RunError, SYS_EXIT, SYS_WRITE};
