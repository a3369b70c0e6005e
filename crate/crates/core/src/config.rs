//! Simulator configuration: a flat `key = value` file with `#` comments,
//! one key per parameter of the default parameter table.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::asm::parse_int;
use crate::guest::Vectors;
use crate::image::{
    build_page_tables, AddrRange, AreaSet, Layout, MappingRule, PageTableSet, RegionMap, DEFAULT_TABLE_BASES,
};
use crate::mode::Region;
use crate::timing::TimingConfig;

pub const CONFIG_ENV: &str = "HVSIM_CONFIG";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("{0}")]
    Invariant(String),
    #[error("no program given (use --program, --fixture or the `program` key)")]
    MissingProgram,
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {source}")]
    At { line: usize, source: Box<ConfigError> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub virtualized: bool,
    pub timing: TimingConfig,
    pub region_map: RegionMap,
    pub console: u32,
    pub table_bases: [u32; 4],
    pub vectors: Vectors,
    pub max_instructions: u64,
    pub channel_capacity: usize,
    pub program: Option<PathBuf>,
    pub trace_out: Option<PathBuf>,
    pub trace_in: Option<PathBuf>,
    pub stats_out: Option<PathBuf>,
    pub retire_log: Option<PathBuf>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            virtualized: false,
            timing: TimingConfig::default(),
            region_map: RegionMap::default(),
            console: Layout::default().console,
            table_bases: DEFAULT_TABLE_BASES,
            vectors: Vectors::default(),
            max_instructions: 10_000_000,
            channel_capacity: 1024,
            program: None,
            trace_out: None,
            trace_in: None,
            stats_out: None,
            retire_log: None,
        }
    }
}

/// Fixed architectural parameters: accepted only at their one legal value.
const FIXED: [(&str, u64); 4] = [("data_size", 32), ("byte_offset_size", 2), ("page_offset_size", 12), ("pte_size", 4)];

const REGION_KEYS: [(&str, Region); 4] =
    [("u", Region::User), ("vs", Region::GuestKernel), ("hs", Region::Hypervisor), ("m", Region::Machine)];

fn bad(key: &str, value: &str) -> ConfigError {
    ConfigError::BadValue { key: key.to_owned(), value: value.to_owned() }
}

fn num(key: &str, value: &str) -> Result<u64, ConfigError> {
    let v = value.replace('_', "");
    parse_int(&v).filter(|n| *n >= 0).map(|n| n as u64).ok_or_else(|| bad(key, value))
}

fn addr(key: &str, value: &str) -> Result<u32, ConfigError> {
    u32::try_from(num(key, value)?).map_err(|_| bad(key, value))
}

fn flag(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(bad(key, value)),
    }
}

fn range(key: &str, value: &str) -> Result<AddrRange, ConfigError> {
    let v = value.replace(" to ", "-").replace(' ', "");
    AddrRange::parse(&v).ok_or_else(|| bad(key, value))
}

impl SimConfig {
    /// Parses a config file body on top of the defaults and validates it.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = SimConfig::default();
        cfg.apply(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        SimConfig::parse(&text)
    }

    /// Applies every `key = value` line without validating.
    pub fn apply(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) =
                line.split_once('=').ok_or_else(|| ConfigError::Syntax { line: i + 1, text: raw.to_owned() })?;
            self.set(key.trim(), value.trim()).map_err(|e| ConfigError::At { line: i + 1, source: Box::new(e) })?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let t = &mut self.timing;
        match key {
            "icache_miss_penalty" => t.icache_miss_penalty = num(key, value)?,
            "dcache_pte_read_miss_penalty" => t.dcache_pte_read_miss_penalty = num(key, value)?,
            "dcache_data_read_miss_penalty" => t.dcache_data_read_miss_penalty = num(key, value)?,
            "dcache_write_miss_penalty" => t.dcache_write_miss_penalty = num(key, value)?,
            "main_memory_write_cycles" => t.main_memory_write_cycles = num(key, value)?,
            "icache_blocks" => t.icache_blocks = num(key, value)? as usize,
            "dcache_blocks" => t.dcache_blocks = num(key, value)? as usize,
            "itlb_blocks" => t.itlb_entries = num(key, value)? as usize,
            "dtlb_blocks" => t.dtlb_entries = num(key, value)? as usize,
            "id_stage_cycles" => t.id_stage_cycles = num(key, value)?,
            "ex_stage_cycles" => t.ex_stage_cycles = num(key, value)?,
            "wb_stage_cycles" => t.wb_stage_cycles = num(key, value)?,
            "forwarding" => t.forwarding = flag(key, value)?,
            "virtualized" => self.virtualized = flag(key, value)?,
            "console_address" => self.console = addr(key, value)?,
            "vstvec" => self.vectors.vstvec = addr(key, value)?,
            "stvec" => self.vectors.stvec = addr(key, value)?,
            "mtvec" => self.vectors.mtvec = addr(key, value)?,
            "max_instructions" => self.max_instructions = num(key, value)?,
            "channel_capacity" => self.channel_capacity = num(key, value)? as usize,
            "program" => self.program = Some(value.into()),
            "trace_out" => self.trace_out = Some(value.into()),
            "trace_in" => self.trace_in = Some(value.into()),
            "stats_out" => self.stats_out = Some(value.into()),
            "retire_log" => self.retire_log = Some(value.into()),
            _ => return self.set_structured(key, value),
        }
        Ok(())
    }

    fn set_structured(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if let Some(&(_, fixed)) = FIXED.iter().find(|(k, _)| *k == key) {
            return if num(key, value)? == fixed {
                Ok(())
            } else {
                Err(ConfigError::Invariant(format!("{key} is fixed at {fixed}")))
            };
        }
        for (prefix, region) in REGION_KEYS {
            let Some(rest) = key.strip_prefix(prefix).and_then(|r| r.strip_prefix('_')) else { continue };
            let ranges = self.region_map.ranges_mut(region);
            match rest {
                "va_range" => ranges.va = range(key, value)?,
                "gpa_range" => ranges.gpa = range(key, value)?,
                "hpa_range" => ranges.hpa = range(key, value)?,
                "page_table_base" => self.table_bases[region.index()] = addr(key, value)?,
                _ => continue,
            }
            return Ok(());
        }
        Err(ConfigError::UnknownKey(key.to_owned()))
    }

    /// Code, data and stack areas placed at each region's virtual base.
    pub fn layout(&self) -> Layout {
        let base = |r: Region| self.region_map.ranges(r).va.base;
        Layout {
            areas: [
                AreaSet::standard(base(Region::User), 0x0001_0000),
                AreaSet::standard(base(Region::GuestKernel), 0),
                AreaSet::standard(base(Region::Hypervisor), 0),
                AreaSet::standard(base(Region::Machine), 0),
            ],
            console: self.console,
        }
    }

    pub fn tables(&self) -> Result<PageTableSet, ConfigError> {
        build_page_tables(&self.region_map, &self.layout(), MappingRule::FixedOffset, self.table_bases)
            .map_err(|e| ConfigError::Invariant(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let inv = |m: String| Err(ConfigError::Invariant(m));
        let t = &self.timing;
        for (name, n) in [
            ("icache_blocks", t.icache_blocks),
            ("dcache_blocks", t.dcache_blocks),
            ("itlb_blocks", t.itlb_entries),
            ("dtlb_blocks", t.dtlb_entries),
        ] {
            if !n.is_power_of_two() {
                return inv(format!("{name} = {n} is not a power of two"));
            }
        }
        for (name, n) in [
            ("id_stage_cycles", t.id_stage_cycles),
            ("ex_stage_cycles", t.ex_stage_cycles),
            ("wb_stage_cycles", t.wb_stage_cycles),
        ] {
            if n == 0 {
                return inv(format!("{name} must be at least 1"));
            }
        }
        if self.max_instructions == 0 {
            return inv("max_instructions must be positive".into());
        }
        if self.channel_capacity == 0 {
            return inv("channel_capacity must be positive".into());
        }
        self.region_map.validate().map_err(|e| ConfigError::Invariant(e.to_string()))?;
        for region in Region::ALL {
            if self.region_map.ranges(region).va.size() < 0x0020_0000 {
                return inv(format!("{region} virtual range is smaller than 2 MiB"));
            }
        }
        let layout = self.layout();
        layout.validate(&self.region_map).map_err(|e| ConfigError::Invariant(e.to_string()))?;
        for (name, v, region) in [
            ("vstvec", self.vectors.vstvec, Region::GuestKernel),
            ("stvec", self.vectors.stvec, Region::Hypervisor),
            ("mtvec", self.vectors.mtvec, Region::Machine),
        ] {
            if v % 4 != 0 || !layout.areas(region).code.contains(v) {
                return inv(format!("{name} = {v:#010x} is not a word-aligned address in the {region} code area"));
            }
        }
        self.tables()?;
        Ok(())
    }

    pub fn require_program(&self) -> Result<&Path, ConfigError> {
        self.program.as_deref().ok_or(ConfigError::MissingProgram)
    }

    /// The effective configuration in file syntax.
    pub fn to_text(&self) -> String {
        let t = &self.timing;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("icache_miss_penalty", t.icache_miss_penalty.to_string());
        kv("dcache_pte_read_miss_penalty", t.dcache_pte_read_miss_penalty.to_string());
        kv("dcache_data_read_miss_penalty", t.dcache_data_read_miss_penalty.to_string());
        kv("dcache_write_miss_penalty", t.dcache_write_miss_penalty.to_string());
        kv("main_memory_write_cycles", t.main_memory_write_cycles.to_string());
        kv("icache_blocks", t.icache_blocks.to_string());
        kv("dcache_blocks", t.dcache_blocks.to_string());
        kv("itlb_blocks", t.itlb_entries.to_string());
        kv("dtlb_blocks", t.dtlb_entries.to_string());
        for (k, v) in FIXED {
            kv(k, v.to_string());
        }
        for (prefix, region) in REGION_KEYS.iter().rev() {
            let r = self.region_map.ranges(*region);
            kv(&format!("{prefix}_va_range"), r.va.to_string());
            kv(&format!("{prefix}_gpa_range"), r.gpa.to_string());
            kv(&format!("{prefix}_hpa_range"), r.hpa.to_string());
        }
        kv("id_stage_cycles", t.id_stage_cycles.to_string());
        kv("ex_stage_cycles", t.ex_stage_cycles.to_string());
        kv("wb_stage_cycles", t.wb_stage_cycles.to_string());
        kv("forwarding", (t.forwarding as u8).to_string());
        kv("virtualized", (self.virtualized as u8).to_string());
        kv("console_address", format!("{:#010x}", self.console));
        for (prefix, region) in REGION_KEYS {
            kv(&format!("{prefix}_page_table_base"), format!("{:#010x}", self.table_bases[region.index()]));
        }
        kv("vstvec", format!("{:#010x}", self.vectors.vstvec));
        kv("stvec", format!("{:#010x}", self.vectors.stvec));
        kv("mtvec", format!("{:#010x}", self.vectors.mtvec));
        kv("max_instructions", self.max_instructions.to_string());
        kv("channel_capacity", self.channel_capacity.to_string());
        for (k, p) in [
            ("program", &self.program),
            ("trace_out", &self.trace_out),
            ("trace_in", &self.trace_in),
            ("stats_out", &self.stats_out),
            ("retire_log", &self.retire_log),
        ] {
            if let Some(p) = p {
                kv(k, p.display().to_string());
            }
        }
        out
    }
}
