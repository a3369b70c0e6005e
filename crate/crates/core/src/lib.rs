pub mod asm;
pub mod config;
pub mod functional;
pub mod guest;
pub mod image;
pub mod mode;
pub mod runner;
pub mod stats;
pub mod timing;
pub mod trace;
