use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hvsim::asm::assemble;
use hvsim::config::{SimConfig, CONFIG_ENV};
use hvsim::guest::{build_fixture, Fixture, FixtureName};
use hvsim::runner::{
    replay, run_compare, run_experiment, write_report_file, write_retire_log, write_stats_file, write_trace_file,
    ProgramSource, RunnerError,
};
use hvsim::stats::{render_report, render_stats, Format};

/// RV32I hypervisor-extension simulator with a cache/TLB/pipeline timing model.
#[derive(Parser)]
#[command(name = "hvsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a program on the functional and timing models.
    Run(RunArgs),
    /// Run a program non-virtualized and virtualized and report the overhead.
    Compare(CompareArgs),
    /// Assemble a source file or a bundled fixture and print the listing.
    Asm(AsmArgs),
    /// Timing-only run of a recorded trace.
    Replay(ReplayArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Virt,
    Nonvirt,
}

#[derive(Args)]
struct ConfigArgs {
    /// Configuration file (`key = value` lines).
    #[arg(long, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    max_instructions: Option<u64>,
}

#[derive(Args)]
struct ProgramArgs {
    /// User program (.s or ELF) or a .layout manifest.
    #[arg(long, conflicts_with = "fixture")]
    program: Option<PathBuf>,
    /// Bundled fixture: search or sort.
    #[arg(long)]
    fixture: Option<FixtureName>,
    /// Fixture input words, comma separated.
    #[arg(long, value_delimiter = ',', requires = "fixture")]
    input: Option<Vec<u32>>,
    /// Search key (search fixture only).
    #[arg(long, requires = "fixture")]
    key: Option<u32>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[command(flatten)]
    program: ProgramArgs,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Statistics file; .json, .csv or anything else for a table.
    #[arg(long)]
    stats_out: Option<PathBuf>,
    #[arg(long)]
    retire_log: Option<PathBuf>,
    /// Run both modes and report the overhead instead.
    #[arg(long)]
    compare: bool,
    /// With --compare, add the (V-N)/V column.
    #[arg(long)]
    alt_overhead: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[command(flatten)]
    program: ProgramArgs,
    /// Report file; .json, .csv or anything else for a table.
    #[arg(long)]
    stats_out: Option<PathBuf>,
    #[arg(long)]
    alt_overhead: bool,
}

#[derive(Args)]
struct AsmArgs {
    /// Assembly source to assemble.
    #[arg(conflicts_with = "fixture", required_unless_present = "fixture")]
    source: Option<PathBuf>,
    #[arg(long, value_parser = parse_addr, default_value = "0x10000")]
    origin: u32,
    /// Build a bundled fixture image instead.
    #[arg(long)]
    fixture: Option<FixtureName>,
    #[arg(long, value_enum, default_value = "nonvirt")]
    mode: Mode,
    /// Print the populated memory words rather than the listing.
    #[arg(long)]
    dump: bool,
    #[command(flatten)]
    cfg: ConfigArgs,
}

#[derive(Args)]
struct ReplayArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long)]
    trace_in: Option<PathBuf>,
    #[arg(long)]
    stats_out: Option<PathBuf>,
    #[arg(long)]
    retire_log: Option<PathBuf>,
}

fn parse_addr(s: &str) -> Result<u32, String> {
    hvsim::asm::parse_int(s).and_then(|v| u32::try_from(v).ok()).ok_or_else(|| format!("bad address `{s}`"))
}

fn load_config(args: &ConfigArgs) -> Result<SimConfig, RunnerError> {
    let mut cfg = match &args.config {
        Some(p) => SimConfig::load(p)?,
        None => SimConfig::default(),
    };
    for kv in &args.set {
        let (k, v) =
            kv.split_once('=').ok_or_else(|| RunnerError::Usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(n) = args.max_instructions {
        cfg.max_instructions = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn program_source(args: &ProgramArgs, cfg: &SimConfig) -> Result<ProgramSource, RunnerError> {
    if let Some(name) = args.fixture {
        let fixture = match (name, &args.input) {
            (FixtureName::Search, Some(input)) => Fixture::search(input, args.key.unwrap_or(0)),
            (FixtureName::Search, None) if args.key.is_some() => {
                Fixture::search(&hvsim::guest::DEFAULT_SEARCH_ARRAY, args.key.unwrap_or(0))
            }
            (FixtureName::Sort, Some(input)) => Fixture::sort(input),
            (_, _) => Fixture::default_for(name),
        };
        return Ok(ProgramSource::Fixture(fixture));
    }
    let path = args.program.clone().or_else(|| cfg.program.clone());
    path.map(ProgramSource::Path).ok_or_else(|| hvsim::config::ConfigError::MissingProgram.into())
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), RunnerError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| RunnerError::Io { path: p.to_owned(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn compare_cmd(cfg: &SimConfig, program: &ProgramArgs, stats_out: Option<&Path>, alt: bool) -> Result<(), RunnerError> {
    let source = program_source(program, cfg)?;
    let cmp = run_compare(&source, cfg)?;
    match stats_out {
        Some(p) => write_report_file(p, &cmp.report, alt),
        None => emit(None, &render_report(&cmp.report, Format::Table, alt)),
    }
}

fn run_cmd(args: RunArgs) -> Result<(), RunnerError> {
    let mut cfg = load_config(&args.cfg)?;
    if let Some(mode) = args.mode {
        cfg.virtualized = matches!(mode, Mode::Virt);
    }
    let stats_out = args.stats_out.or_else(|| cfg.stats_out.clone());
    if args.compare {
        return compare_cmd(&cfg, &args.program, stats_out.as_deref(), args.alt_overhead);
    }
    let trace_out = args.trace_out.or_else(|| cfg.trace_out.clone());
    let retire_log = args.retire_log.or_else(|| cfg.retire_log.clone());
    cfg.retire_log = retire_log.clone();
    let source = program_source(&args.program, &cfg)?;
    let out = run_experiment(&source, &cfg)?;

    let mut stdout = std::io::stdout().lock();
    stdout
        .write_all(&out.console)
        .and_then(|()| stdout.flush())
        .map_err(|source| RunnerError::Io { path: "<stdout>".into(), source })?;
    if let Some(p) = &trace_out {
        write_trace_file(p, &out.trace)?;
    }
    if let Some(p) = &retire_log {
        write_retire_log(p, &out.timing.retire_log)?;
    }
    match &stats_out {
        Some(p) => write_stats_file(p, &out.stats)?,
        None => eprint!("{}", render_stats(&out.stats, Format::Table)),
    }
    Ok(())
}

fn asm_cmd(args: AsmArgs) -> Result<(), RunnerError> {
    if let Some(name) = args.fixture {
        let mut cfg = load_config(&args.cfg)?;
        cfg.virtualized = matches!(args.mode, Mode::Virt);
        let fixture = Fixture::default_for(name);
        let built = build_fixture(&fixture, cfg.virtualized, cfg.tables()?, &cfg.layout(), cfg.vectors)?;
        if args.dump {
            return emit(None, &built.image.dump());
        }
        let mut text = String::new();
        for (region, blob) in &built.blobs {
            text.push_str(&format!("# {region}\n{}", blob.listing()));
        }
        return emit(None, &text);
    }
    let path = args.source.expect("clap enforces source or fixture");
    let src = std::fs::read_to_string(&path).map_err(|source| RunnerError::Io { path: path.clone(), source })?;
    let blob = assemble(&src, args.origin).map_err(|source| RunnerError::Asm { path, source })?;
    if args.dump {
        let words: String = blob.words.iter().map(|w| format!("{w:08x}\n")).collect();
        return emit(None, &words);
    }
    emit(None, &blob.listing())
}

fn replay_cmd(args: ReplayArgs) -> Result<(), RunnerError> {
    let mut cfg = load_config(&args.cfg)?;
    let trace_in = args
        .trace_in
        .or_else(|| cfg.trace_in.clone())
        .ok_or_else(|| RunnerError::Usage("replay needs --trace-in".into()))?;
    cfg.retire_log = args.retire_log.or_else(|| cfg.retire_log.clone());
    let (timing, stats) = replay(&trace_in, &cfg)?;
    if let Some(p) = &cfg.retire_log {
        write_retire_log(p, &timing.retire_log)?;
    }
    match args.stats_out.or_else(|| cfg.stats_out.clone()) {
        Some(p) => write_stats_file(&p, &stats),
        None => emit(None, &render_stats(&stats, Format::Table)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run_cmd(a),
        Command::Compare(a) => load_config(&a.cfg).and_then(|cfg| {
            compare_cmd(&cfg, &a.program, a.stats_out.or(cfg.stats_out.clone()).as_deref(), a.alt_overhead)
        }),
        Command::Asm(a) => asm_cmd(a),
        Command::Replay(a) => replay_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hvsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
