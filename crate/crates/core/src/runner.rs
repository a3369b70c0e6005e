//! Experiment orchestration: image building, the functional producer and
//! timing consumer joined over a bounded trace channel, and the artifacts
//! written afterwards.

use std::fs;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::thread;

use crate::asm::{assemble, AsmError};
use crate::config::{ConfigError, SimConfig};
use crate::functional::{Boot, ExecError, MachineState, RunError};
use crate::guest::{build_fixture, handler_sources, Fixture, GuestError};
use crate::image::{compose_image, load_elf, ImageError, MemoryImage, Placement};
use crate::mode::Region;
use crate::stats::{self, compare, render_report, render_stats, Format, OverheadReport, Stats, StatsError};
use crate::timing::{simulate, simulate_records, Retired, TimingError, TimingResult};
use crate::trace::{channel, read_trace, write_trace, TraceFileError, TraceRecord};

#[derive(Debug, thiserror::Error)]
pub enum RunnerError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Guest(#[from] GuestError),
    #[error("{path}: {source}")]
    Image { path: PathBuf, source: ImageError },
    #[error("{path}: {source}")]
    Asm { path: PathBuf, source: AsmError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    TraceFile { path: PathBuf, source: TraceFileError },
    #[error("program error: {0}")]
    Program(ExecError),
    #[error("instruction limit of {limit} reached without exit")]
    LimitExhausted { limit: u64 },
    #[error("timing model: {0}")]
    Timing(#[from] TimingError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

impl RunnerError {
    /// Process exit status: 1 I/O, 2 configuration or usage, 3 limit
    /// exhausted, 4 program or timing error.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunnerError::Io { .. } | RunnerError::TraceFile { .. } => 1,
            RunnerError::Config(_)
            | RunnerError::Usage(_)
            | RunnerError::Guest(_)
            | RunnerError::Image { .. }
            | RunnerError::Asm { .. } => 2,
            RunnerError::LimitExhausted { .. } => 3,
            RunnerError::Program(_) | RunnerError::Timing(_) | RunnerError::Stats(_) => 4,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunnerError + '_ {
    move |source| RunnerError::Io { path: path.to_owned(), source }
}

/// Where the guest software comes from.
#[derive(Debug, Clone)]
pub enum ProgramSource {
    Fixture(Fixture),
    /// A user program (`.s` or ELF) run on the bundled handlers, or a
    /// `.layout` manifest naming one program per mode.
    Path(PathBuf),
}

/// A built image ready to run.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub image: MemoryImage,
    pub boot: Boot,
    pub expected_console: Option<Vec<u8>>,
}

fn region_key(key: &str) -> Option<Region> {
    match key {
        "u" => Some(Region::User),
        "vs" => Some(Region::GuestKernel),
        "hs" => Some(Region::Hypervisor),
        "m" => Some(Region::Machine),
        _ => None,
    }
}

struct Loaded {
    placements: Vec<Placement>,
    entry: u32,
}

fn load_part(path: &Path, region: Region, origin: u32, cfg: &SimConfig) -> Result<Loaded, RunnerError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    if bytes.starts_with(b"\x7fELF") {
        let elf = load_elf(&bytes).map_err(|source| RunnerError::Image { path: path.to_owned(), source })?;
        let layout = cfg.layout();
        let placements = elf.segments.iter().map(|s| Placement::from_segment(region, &layout, s)).collect();
        return Ok(Loaded { placements, entry: elf.entry });
    }
    let text = String::from_utf8(bytes)
        .map_err(|_| RunnerError::Usage(format!("{}: neither an ELF file nor UTF-8 assembly", path.display())))?;
    let blob = assemble(&text, origin).map_err(|source| RunnerError::Asm { path: path.to_owned(), source })?;
    Ok(Loaded { placements: vec![Placement::code(region, &blob)], entry: blob.base })
}

fn origin(region: Region, cfg: &SimConfig) -> u32 {
    cfg.vectors.origin(region, &cfg.layout())
}

fn bundled_handler(region: Region, cfg: &SimConfig) -> Result<Vec<Placement>, RunnerError> {
    let mut out = Vec::new();
    for (r, src) in handler_sources(cfg.virtualized, &cfg.layout()) {
        if r == region {
            let blob =
                assemble(&src, origin(r, cfg)).map_err(|source| GuestError::Asm { part: "bundled handler", source })?;
            out.push(Placement::code(r, &blob));
        }
    }
    Ok(out)
}

fn prepare_path(path: &Path, cfg: &SimConfig) -> Result<Prepared, RunnerError> {
    let mut parts: Vec<(Region, PathBuf)> = Vec::new();
    if path.extension().and_then(|e| e.to_str()) == Some("layout") {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = || RunnerError::Usage(format!("{}:{}: expected `u|vs|hs|m = <path>`", path.display(), i + 1));
            let (k, v) = line.split_once('=').ok_or_else(bad)?;
            let region = region_key(k.trim()).ok_or_else(bad)?;
            if parts.iter().any(|(r, _)| *r == region) {
                return Err(bad());
            }
            parts.push((region, dir.join(v.trim())));
        }
        if !parts.iter().any(|(r, _)| *r == Region::User) {
            return Err(RunnerError::Usage(format!("{}: no `u` program", path.display())));
        }
    } else {
        parts.push((Region::User, path.to_owned()));
    }

    let mut placements = Vec::new();
    let mut entry = None;
    for (region, p) in &parts {
        let loaded = load_part(p, *region, origin(*region, cfg), cfg)?;
        if *region == Region::User {
            entry = Some(loaded.entry);
        }
        placements.extend(loaded.placements);
    }
    for region in [Region::GuestKernel, Region::Hypervisor] {
        if !parts.iter().any(|(r, _)| *r == region) {
            placements.extend(bundled_handler(region, cfg)?);
        }
    }
    let image = compose_image(&placements, cfg.tables()?, &cfg.layout())
        .map_err(|source| RunnerError::Image { path: path.to_owned(), source })?;
    let boot = Boot {
        virtualized: cfg.virtualized,
        entry: entry.expect("user part present"),
        vstvec: cfg.vectors.vstvec,
        stvec: cfg.vectors.stvec,
        mtvec: cfg.vectors.mtvec,
    };
    Ok(Prepared { image, boot, expected_console: None })
}

pub fn prepare(source: &ProgramSource, cfg: &SimConfig) -> Result<Prepared, RunnerError> {
    match source {
        ProgramSource::Fixture(f) => {
            let built = build_fixture(f, cfg.virtualized, cfg.tables()?, &cfg.layout(), cfg.vectors)?;
            Ok(Prepared { image: built.image, boot: built.boot, expected_console: Some(f.expected_console.clone()) })
        }
        ProgramSource::Path(p) => prepare_path(p, cfg),
    }
}

/// Everything a run produced, gathered after both activities joined.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub console: Vec<u8>,
    pub trace: Vec<TraceRecord>,
    pub timing: TimingResult,
    pub stats: Stats,
    pub exit_code: Option<u32>,
    pub expected_console: Option<Vec<u8>>,
}

/// Runs the functional model and the timing model concurrently: the
/// producer streams trace records through a bounded channel while the
/// consumer simulates them.
pub fn execute(prepared: Prepared, cfg: &SimConfig) -> Result<RunOutcome, RunnerError> {
    let tables = prepared.image.tables.clone();
    let mut machine = MachineState::new(prepared.image, prepared.boot);
    let (tx, rx) = channel(cfg.channel_capacity).map_err(|e| RunnerError::Usage(e.to_string()))?;
    let mut timing_cfg = cfg.timing.clone();
    timing_cfg.record_retirement |= cfg.retire_log.is_some();
    let limit = cfg.max_instructions;

    let (produced, consumed) = thread::scope(|s| {
        let consumer = s.spawn(move || simulate(rx, tables, timing_cfg));
        let mut trace = Vec::new();
        let produced = machine.run_with(limit, |rec| {
            trace.push(rec);
            tx.send(rec).is_ok()
        });
        tx.close();
        let consumed = consumer.join().expect("timing thread panicked");
        (produced.map(|()| trace), consumed)
    });

    let trace = match produced {
        Ok(t) => t,
        Err(RunError::Program(e)) => return Err(RunnerError::Program(e)),
        Err(RunError::LimitExhausted { limit }) => return Err(RunnerError::LimitExhausted { limit }),
        Err(RunError::Disconnected) => return Err(consumed.err().unwrap_or(TimingError::Truncated).into()),
    };
    let timing = consumed?;
    let stats = stats::finalize(timing.counters, timing.cycles, timing.instret)?;
    Ok(RunOutcome {
        console: machine.console,
        trace,
        timing,
        stats,
        exit_code: machine.exit_code,
        expected_console: prepared.expected_console,
    })
}

pub fn run_experiment(source: &ProgramSource, cfg: &SimConfig) -> Result<RunOutcome, RunnerError> {
    execute(prepare(source, cfg)?, cfg)
}

/// Non-virtualized then virtualized run of the same program.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub native: RunOutcome,
    pub virtualized: RunOutcome,
    pub report: OverheadReport,
}

pub fn run_compare(source: &ProgramSource, cfg: &SimConfig) -> Result<Comparison, RunnerError> {
    let mut n_cfg = cfg.clone();
    n_cfg.virtualized = false;
    let mut v_cfg = cfg.clone();
    v_cfg.virtualized = true;
    let native = run_experiment(source, &n_cfg)?;
    let virtualized = run_experiment(source, &v_cfg)?;
    let report = compare(&native.stats, &virtualized.stats);
    Ok(Comparison { native, virtualized, report })
}

/// Timing-only run of a recorded trace.
pub fn replay(path: &Path, cfg: &SimConfig) -> Result<(TimingResult, Stats), RunnerError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let records =
        read_trace(BufReader::new(file)).map_err(|source| RunnerError::TraceFile { path: path.to_owned(), source })?;
    let mut timing_cfg = cfg.timing.clone();
    timing_cfg.record_retirement |= cfg.retire_log.is_some();
    let timing = simulate_records(&records, cfg.tables()?, timing_cfg)?;
    let stats = stats::finalize(timing.counters, timing.cycles, timing.instret)?;
    Ok((timing, stats))
}

fn write_file(path: &Path, write: impl FnOnce(&mut BufWriter<fs::File>) -> io::Result<()>) -> Result<(), RunnerError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    write(&mut out).and_then(|()| out.flush()).map_err(io_err(path))
}

pub fn write_trace_file(path: &Path, records: &[TraceRecord]) -> Result<(), RunnerError> {
    write_file(path, |w| write_trace(w, records))
}

pub fn write_stats_file(path: &Path, stats: &Stats) -> Result<(), RunnerError> {
    let text = render_stats(stats, Format::from_path(path));
    write_file(path, |w| w.write_all(text.as_bytes()))
}

pub fn write_report_file(path: &Path, report: &OverheadReport, with_alt: bool) -> Result<(), RunnerError> {
    let text = render_report(report, Format::from_path(path), with_alt);
    write_file(path, |w| w.write_all(text.as_bytes()))
}

/// One `instr_no cycle` line per retirement.
pub fn write_retire_log(path: &Path, log: &[Retired]) -> Result<(), RunnerError> {
    write_file(path, |w| {
        for r in log {
            writeln!(w, "{} {}", r.instr_no, r.cycle)?;
        }
        Ok(())
    })
}
