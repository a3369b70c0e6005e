//! Statistics block, virtualization-overhead comparison and report
//! rendering.

mod render;

pub use render::{parse_csv, parse_json, render_report, render_stats, Format};

use serde::{Deserialize, Serialize};

use crate::timing::CounterSet;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StatsError {
    #[error("no instructions retired")]
    EmptyRun,
    #[error("malformed statistics: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub itlb: u64,
    pub icache: u64,
    pub dtlb: u64,
    pub dcache: u64,
}

impl Totals {
    pub fn derive(c: &CounterSet) -> Self {
        Totals { itlb: c.total_itlb(), icache: c.total_icache(), dtlb: c.total_dtlb(), dcache: c.total_dcache() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub counters: CounterSet,
    pub totals: Totals,
    pub cycles: u64,
    pub instret: u64,
    pub cpi: f64,
    pub ipc: f64,
}

pub fn finalize(counters: CounterSet, cycles: u64, instret: u64) -> Result<Stats, StatsError> {
    if instret == 0 {
        return Err(StatsError::EmptyRun);
    }
    Ok(Stats {
        counters,
        totals: Totals::derive(&counters),
        cycles,
        instret,
        cpi: cycles as f64 / instret as f64,
        ipc: instret as f64 / cycles as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Count(u64),
    Ratio(f64),
}

impl Value {
    pub fn as_f64(self) -> f64 {
        match self {
            Value::Count(n) => n as f64,
            Value::Ratio(r) => r,
        }
    }

    pub fn render(self) -> String {
        match self {
            Value::Count(n) => n.to_string(),
            Value::Ratio(r) => sig4(r),
        }
    }
}

/// One statistic: machine key, report label, value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub key: &'static str,
    pub label: &'static str,
    pub value: Value,
}

pub const ROW_LABELS: [(&str, &str); 17] = [
    ("itlb_miss_if", "Number of I-TLB misses while reading PTE in IF stage"),
    ("icache_miss_if", "Number of I-cache misses while reading instruction in IF stage"),
    ("dcache_pte_miss_if", "Number of D-cache misses while reading PTE in IF stage"),
    ("dtlb_miss_load", "Number of D-TLB misses while reading PTE in MEM stage during load"),
    ("dcache_data_miss_load", "Number of D-cache misses while reading data in MEM stage during load"),
    ("dcache_pte_miss_load", "Number of D-cache misses while reading PTE in MEM stage during load"),
    ("dtlb_miss_store", "Number of D-TLB misses while reading PTE in MEM stage during store"),
    ("dcache_data_miss_store", "Number of D-cache misses while writing data in MEM stage during store"),
    ("dcache_pte_miss_store", "Number of D-cache misses while reading PTE in MEM stage during store"),
    ("total_itlb_misses", "Total number of I-TLB misses"),
    ("total_icache_misses", "Total number of I-cache misses"),
    ("total_dtlb_misses", "Total number of D-TLB misses"),
    ("total_dcache_misses", "Total number of D-cache misses"),
    ("cycles", "Clock cycle count"),
    ("instret", "Number of dynamic instructions executed (simulated)"),
    ("cpi", "Cycles per instruction (CPI)"),
    ("ipc", "Instructions per cycle (IPC)"),
];

impl Stats {
    pub fn rows(&self) -> Vec<Row> {
        let c = &self.counters;
        let t = &self.totals;
        let values = [
            Value::Count(c.itlb_miss_if),
            Value::Count(c.icache_miss_if),
            Value::Count(c.dcache_pte_miss_if),
            Value::Count(c.dtlb_miss_load),
            Value::Count(c.dcache_data_miss_load),
            Value::Count(c.dcache_pte_miss_load),
            Value::Count(c.dtlb_miss_store),
            Value::Count(c.dcache_data_miss_store),
            Value::Count(c.dcache_pte_miss_store),
            Value::Count(t.itlb),
            Value::Count(t.icache),
            Value::Count(t.dtlb),
            Value::Count(t.dcache),
            Value::Count(self.cycles),
            Value::Count(self.instret),
            Value::Ratio(self.cpi),
            Value::Ratio(self.ipc),
        ];
        ROW_LABELS.iter().zip(values).map(|(&(key, label), value)| Row { key, label, value }).collect()
    }

    pub fn cpi_text(&self) -> String {
        sig4(self.cpi)
    }

    pub fn ipc_text(&self) -> String {
        sig4(self.ipc)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverheadRow {
    pub key: &'static str,
    pub label: &'static str,
    pub n: Value,
    pub v: Value,
    /// `(V - N) / N * 100`; `None` when N is zero.
    pub overhead_pct: Option<f64>,
    /// `(V - N) / V * 100`; `None` when V is zero.
    pub overhead_vs_v_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverheadReport {
    pub rows: Vec<OverheadRow>,
}

impl OverheadReport {
    pub fn row(&self, key: &str) -> Option<&OverheadRow> {
        self.rows.iter().find(|r| r.key == key)
    }
}

fn pct(delta: f64, base: f64) -> Option<f64> {
    (base != 0.0).then(|| delta / base * 100.0)
}

pub fn compare(n: &Stats, v: &Stats) -> OverheadReport {
    let rows = n
        .rows()
        .into_iter()
        .zip(v.rows())
        .map(|(a, b)| {
            let (x, y) = (a.value.as_f64(), b.value.as_f64());
            OverheadRow {
                key: a.key,
                label: a.label,
                n: a.value,
                v: b.value,
                overhead_pct: pct(y - x, x),
                overhead_vs_v_pct: pct(y - x, y),
            }
        })
        .collect();
    OverheadReport { rows }
}

/// Formats `x` with four significant digits in positional notation.
pub fn sig4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() { "0".into() } else { x.to_string() };
    }
    let sci = format!("{:.3e}", x.abs());
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let body = if exp >= 3 {
        format!("{digits}{}", "0".repeat(exp as usize - 3))
    } else if exp >= 0 {
        let (int, frac) = digits.split_at(exp as usize + 1);
        format!("{int}.{frac}")
    } else {
        format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
    };
    if x < 0.0 {
        format!("-{body}")
    } else {
        body
    }
}
