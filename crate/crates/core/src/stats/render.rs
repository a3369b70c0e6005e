use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{finalize, sig4, OverheadReport, Stats, StatsError, Value, ROW_LABELS};
use crate::timing::CounterSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Json,
    Csv,
}

impl Format {
    /// `.json` and `.csv` select those formats; anything else is a table.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Format::Json,
            Some("csv") => Format::Csv,
            _ => Format::Table,
        }
    }
}

const LABEL_WIDTH: usize = 72;

fn machine(v: Value) -> String {
    match v {
        Value::Count(n) => n.to_string(),
        Value::Ratio(r) => r.to_string(),
    }
}

fn pct_text(p: Option<f64>) -> String {
    p.map_or_else(|| "n/a".to_owned(), |p| format!("{} %", sig4(p)))
}

pub fn render_stats(stats: &Stats, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(stats).expect("stats serialize");
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut out = String::from("statistic,value\n");
            for r in stats.rows() {
                let _ = writeln!(out, "{},{}", r.key, machine(r.value));
            }
            out
        }
        Format::Table => {
            let mut out = format!("{:<LABEL_WIDTH$} {:>12}\n", "Performance Statistics", "Value");
            for r in stats.rows() {
                let _ = writeln!(out, "{:<LABEL_WIDTH$} {:>12}", r.label, r.value.render());
            }
            out
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ReportRowJson {
    key: String,
    label: String,
    n: Value,
    v: Value,
    overhead_pct: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    overhead_vs_v_pct: Option<Option<f64>>,
}

#[derive(Serialize, Deserialize)]
struct ReportJson {
    rows: Vec<ReportRowJson>,
}

/// Renders an N-vs-V comparison. `with_alt` adds the `(V - N) / V`
/// column next to the `(V - N) / N` one.
pub fn render_report(report: &OverheadReport, format: Format, with_alt: bool) -> String {
    match format {
        Format::Json => {
            let doc = ReportJson {
                rows: report
                    .rows
                    .iter()
                    .map(|r| ReportRowJson {
                        key: r.key.to_owned(),
                        label: r.label.to_owned(),
                        n: r.n,
                        v: r.v,
                        overhead_pct: r.overhead_pct,
                        overhead_vs_v_pct: with_alt.then_some(r.overhead_vs_v_pct),
                    })
                    .collect(),
            };
            let mut s = serde_json::to_string_pretty(&doc).expect("report serialize");
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut out = String::from("statistic,n,v,overhead_pct");
            out.push_str(if with_alt { ",overhead_vs_v_pct\n" } else { "\n" });
            let num = |p: Option<f64>| p.map_or_else(|| "n/a".to_owned(), |p| p.to_string());
            for r in &report.rows {
                let _ = write!(out, "{},{},{},{}", r.key, machine(r.n), machine(r.v), num(r.overhead_pct));
                if with_alt {
                    let _ = write!(out, ",{}", num(r.overhead_vs_v_pct));
                }
                out.push('\n');
            }
            out
        }
        Format::Table => {
            let mut out =
                format!("{:<LABEL_WIDTH$} {:>12} {:>12} {:>12}", "Performance Statistics", "N", "V", "(V-N)/N");
            if with_alt {
                let _ = write!(out, " {:>12}", "(V-N)/V");
            }
            out.push('\n');
            for r in &report.rows {
                let _ = write!(
                    out,
                    "{:<LABEL_WIDTH$} {:>12} {:>12} {:>12}",
                    r.label,
                    r.n.render(),
                    r.v.render(),
                    pct_text(r.overhead_pct)
                );
                if with_alt {
                    let _ = write!(out, " {:>12}", pct_text(r.overhead_vs_v_pct));
                }
                out.push('\n');
            }
            out
        }
    }
}

fn check(parsed: Stats) -> Result<Stats, StatsError> {
    let expect = finalize(parsed.counters, parsed.cycles, parsed.instret)?;
    if expect != parsed {
        return Err(StatsError::Malformed("derived fields disagree with counters".into()));
    }
    Ok(parsed)
}

pub fn parse_json(text: &str) -> Result<Stats, StatsError> {
    let s: Stats = serde_json::from_str(text).map_err(|e| StatsError::Malformed(e.to_string()))?;
    check(s)
}

pub fn parse_csv(text: &str) -> Result<Stats, StatsError> {
    let bad = |m: &str| StatsError::Malformed(m.to_owned());
    let mut lines = text.lines();
    if lines.next() != Some("statistic,value") {
        return Err(bad("missing header"));
    }
    let mut values = Vec::new();
    for (line, &(key, _)) in lines.by_ref().zip(ROW_LABELS.iter()) {
        let (k, v) = line.split_once(',').ok_or_else(|| bad(line))?;
        if k != key {
            return Err(bad(line));
        }
        values.push(v.to_owned());
    }
    if values.len() != ROW_LABELS.len() || lines.next().is_some() {
        return Err(bad("wrong row count"));
    }
    let int = |i: usize| values[i].parse::<u64>().map_err(|_| bad(&values[i]));
    let counters = CounterSet {
        itlb_miss_if: int(0)?,
        icache_miss_if: int(1)?,
        dcache_pte_miss_if: int(2)?,
        dtlb_miss_load: int(3)?,
        dcache_data_miss_load: int(4)?,
        dcache_pte_miss_load: int(5)?,
        dtlb_miss_store: int(6)?,
        dcache_data_miss_store: int(7)?,
        dcache_pte_miss_store: int(8)?,
    };
    let totals = super::Totals { itlb: int(9)?, icache: int(10)?, dtlb: int(11)?, dcache: int(12)? };
    let real = |i: usize| values[i].parse::<f64>().map_err(|_| bad(&values[i]));
    check(Stats { counters, totals, cycles: int(13)?, instret: int(14)?, cpi: real(15)?, ipc: real(16)? })
}
