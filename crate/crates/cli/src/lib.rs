//! Command-line front end: `run`, `check`, `explain`, `gen` and `oracle`.

pub mod gen;
pub mod metrics;
pub mod sink;
pub mod source;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};
use sreason_core::analysis::{check_stratifiable, plan, NotStratifiedError};
use sreason_core::engine::{self, Engine, EngineConfig, EngineError, FailurePolicy, Mode, RunError, RunSummary};
use sreason_core::ground::GroundError;
use sreason_core::lang::{check_safety, load_program, parse_facts, ParseErrors, SafetyError};
use sreason_core::oracle::{OracleError, StreamingOracle};
use sreason_core::rewrite::flatten;
use sreason_core::{GroundAtom, Program};
use thiserror::Error;

use crate::gen::Fault;
use crate::metrics::{summary_line, MetricsWriter};
use crate::sink::{sorted_atoms, OutputFormat, OutputSpec, Sink};
use crate::source::{SourceError, SourceSpec};

pub mod exit {
    pub const OK: i32 = 0;
    pub const EVAL: i32 = 1;
    pub const PARSE: i32 = 2;
    pub const SAFETY: i32 = 3;
    pub const STRATIFICATION: i32 = 4;
    pub const IO: i32 = 5;
    pub const DIVERGENCE: i32 = 6;
    pub const RESOURCE: i32 = 7;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {errors}")]
    Parse { path: String, errors: ParseErrors },
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Safety(#[from] SafetyError),
    #[error(transparent)]
    NotStratified(#[from] NotStratifiedError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("tick {tick}: engine and oracle disagree\n  engine only: {engine_only:?}\n  oracle only: {oracle_only:?}")]
    Divergence {
        tick: usize,
        engine_only: Vec<String>,
        oracle_only: Vec<String>,
    },
    #[error("{0}")]
    Resource(String),
    #[error("{0}")]
    Eval(String),
    #[error(transparent)]
    Gen(#[from] gen::GenError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Input(_) | CliError::Gen(_) => exit::PARSE,
            CliError::Safety(_) => exit::SAFETY,
            CliError::NotStratified(_) => exit::STRATIFICATION,
            CliError::Io(_) => exit::IO,
            CliError::Divergence { .. } => exit::DIVERGENCE,
            CliError::Resource(_) => exit::RESOURCE,
            CliError::Eval(_) => exit::EVAL,
        }
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> CliError {
        match e {
            EngineError::Safety(e) => CliError::Safety(e),
            EngineError::NotStratified(e) | EngineError::Ground(GroundError::NotStratified(e)) => {
                CliError::NotStratified(e)
            }
            EngineError::Ground(e @ GroundError::ResourceLimit { .. }) => CliError::Resource(e.to_string()),
            e => CliError::Eval(e.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> CliError {
        match e {
            OracleError::NotStratified(e) => CliError::NotStratified(e),
            e => CliError::Eval(e.to_string()),
        }
    }
}

impl From<SourceError> for CliError {
    fn from(e: SourceError) -> CliError {
        match e {
            SourceError::Io(e) => CliError::Io(e),
            e => CliError::Input(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "sreason", version, about = "Stream reasoning over tick-ordered fact streams")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Incremental,
    Scratch,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate a program over a stream of ticks.
    Run(RunArgs),
    /// Parse, check safety and stratification.
    Check { program: PathBuf },
    /// Dump the dependency graphs, the split, the flat program and τ.
    Explain {
        program: PathBuf,
        /// Emit the component graph in Graphviz format instead.
        #[arg(long)]
        dot: bool,
    },
    /// Generate a benchmark workload into a directory.
    Gen(GenArgs),
    /// Reference evaluation of a finite stream file.
    Oracle {
        program: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        background: Option<PathBuf>,
        #[arg(long, default_value = "stdout")]
        output: OutputSpec,
        #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
        output_format: OutputFormat,
    },
}

#[derive(clap::Args, Debug)]
pub struct RunArgs {
    pub program: PathBuf,
    /// file:PATH, stdin or tcp:PORT
    #[arg(long)]
    pub input: SourceSpec,
    #[arg(long)]
    pub background: Option<PathBuf>,
    /// stdout or file:PATH
    #[arg(long, default_value = "stdout")]
    pub output: OutputSpec,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub output_format: OutputFormat,
    /// Per-tick metrics CSV.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModeArg::Incremental)]
    pub mode: ModeArg,
    /// Evaluate every tick with the reference semantics too and stop on
    /// the first difference.
    #[arg(long)]
    pub oracle_check: bool,
    /// Release file ticks every MS milliseconds.
    #[arg(long)]
    pub period: Option<u64>,
    /// Record failing ticks and continue instead of stopping.
    #[arg(long)]
    pub skip_failed_ticks: bool,
    /// Abort on a malformed input line.
    #[arg(long)]
    pub strict: bool,
    /// Cap on stored ground rule instances per evaluator.
    #[arg(long)]
    pub ground_limit: Option<usize>,
    /// Warn when this many ticks are queued.
    #[arg(long, default_value_t = 1000)]
    pub queue_warn: usize,
}

#[derive(clap::Args, Debug)]
pub struct GenArgs {
    #[command(subcommand)]
    pub workload: Workload,
    /// Output directory; receives program.idlvsr, input.stream and, for
    /// grids, background.bg.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
pub enum Workload {
    HeavyJoin {
        #[arg(long, default_value_t = 2)]
        w: u32,
        #[arg(long, default_value_t = 50)]
        events: usize,
        #[arg(long, default_value_t = 30)]
        ticks: usize,
    },
    Pvs {
        #[arg(long, default_value_t = 5)]
        rows: usize,
        #[arg(long, default_value_t = 5)]
        cols: usize,
        #[arg(long, default_value_t = 60)]
        ticks: usize,
        /// R:C[,R:C...]@FROM-TO; repeatable.
        #[arg(long)]
        fault: Vec<Fault>,
    },
    Caching {
        #[arg(long, default_value_t = 50)]
        contents: usize,
        #[arg(long, default_value_t = 60)]
        ticks: usize,
        #[arg(long, default_value_t = 10)]
        window: u32,
    },
    Random {
        #[arg(long, default_value_t = 15)]
        ticks: usize,
    },
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

/// Parses, desugars and checks safety and stratification.
pub fn load_checked(path: &Path) -> Result<Program, CliError> {
    let src = read_file(path)?;
    let program = load_program(&src).map_err(|errors| CliError::Parse {
        path: path.display().to_string(),
        errors,
    })?;
    check_safety(&program)?;
    check_stratifiable(&program)?;
    Ok(program)
}

pub fn load_background(path: Option<&Path>) -> Result<Vec<GroundAtom>, CliError> {
    let Some(path) = path else { return Ok(Vec::new()) };
    let src = read_file(path)?;
    if src.trim().is_empty() {
        return Ok(Vec::new());
    }
    parse_facts(&src).map_err(|errors| CliError::Parse {
        path: path.display().to_string(),
        errors,
    })
}

/// Divergence between engine and oracle atoms of one tick.
pub fn compare(tick: usize, engine: &[String], oracle: &[String]) -> Result<(), CliError> {
    if engine == oracle {
        return Ok(());
    }
    let e: std::collections::BTreeSet<&String> = engine.iter().collect();
    let o: std::collections::BTreeSet<&String> = oracle.iter().collect();
    Err(CliError::Divergence {
        tick,
        engine_only: e.difference(&o).map(|s| s.to_string()).collect(),
        oracle_only: o.difference(&e).map(|s| s.to_string()).collect(),
    })
}

/// `sreason run`. Returns the summary after the source is exhausted.
pub fn cmd_run(args: &RunArgs) -> Result<RunSummary, CliError> {
    let program = load_checked(&args.program)?;
    let background = load_background(args.background.as_deref())?;
    let config = EngineConfig {
        mode: match args.mode {
            ModeArg::Incremental => Mode::Incremental,
            ModeArg::Scratch => Mode::Scratch,
        },
        ground_limit: args.ground_limit,
        ordering: None,
    };
    let mut engine = Engine::init(&program, &background, config)?;
    let mut oracle = if args.oracle_check {
        Some(StreamingOracle::new(&program, &background)?)
    } else {
        None
    };
    let mut sink = Sink::open(&args.output, args.output_format)?;
    let mut metrics = args.metrics.as_deref().map(MetricsWriter::create).transpose()?;

    let (tx, rx) = crossbeam_channel::unbounded();
    let start = Instant::now();
    let period = args.period.map(Duration::from_millis);
    let ingest = source::spawn(args.input.clone(), tx, args.strict, period, start)?;
    let policy = if args.skip_failed_ticks {
        FailurePolicy::Skip
    } else {
        FailurePolicy::FailFast
    };

    let mut divergence: Option<CliError> = None;
    let queue_warn = args.queue_warn;
    let outcome = engine::run(&mut engine, rx, start, policy, |out| {
        let r = &out.record;
        if r.queue_len >= queue_warn {
            log::warn!("{} ticks queued", r.queue_len);
        }
        let atoms = out.atoms.as_ref().map(|a| sorted_atoms(&a.to_set()));
        if let Some(o) = oracle.as_mut() {
            match &atoms {
                None => o.skip(out.input.iter().cloned()),
                Some(got) => {
                    let want = o
                        .step(out.input.iter().cloned())
                        .map(|w| sorted_atoms(&w))
                        .map_err(|e| CliError::Eval(format!("oracle at tick {}: {e}", r.tick)));
                    if let Err(e) = want.and_then(|w| compare(r.tick, got, &w)) {
                        divergence = Some(e);
                        return Err(io::Error::other("oracle check failed"));
                    }
                }
            }
        }
        sink.write_tick(r.tick, atoms.as_deref())?;
        if let Some(m) = metrics.as_mut() {
            m.record(r)?;
        }
        Ok(())
    });
    let flushed = sink
        .flush()
        .and_then(|()| metrics.as_mut().map_or(Ok(()), MetricsWriter::flush));
    let summary = match outcome {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{}", summary_line(e.summary()));
            return Err(match (e, divergence) {
                (_, Some(d)) => d,
                (RunError::Tick { tick, source, .. }, None) => {
                    let err = CliError::from(source);
                    log::error!("tick {tick}: {err}");
                    err
                }
                (RunError::Sink { source, .. }, None) => CliError::Io(source),
            });
        }
    };
    flushed?;
    match ingest.join() {
        Ok(Ok(report)) => log::info!("source: {} ticks, {} lines skipped", report.ticks, report.skipped_lines),
        Ok(Err(e)) => {
            eprintln!("{}", summary_line(&summary));
            return Err(e.into());
        }
        Err(_) => return Err(CliError::Io(io::Error::other("input thread panicked"))),
    }
    eprintln!("{}", summary_line(&summary));
    Ok(summary)
}

/// `sreason check`: a one-line report.
pub fn cmd_check(path: &Path) -> Result<String, CliError> {
    let program = load_checked(path)?;
    let strat = check_stratifiable(&program)?;
    let (_, tau) = flatten(&program);
    Ok(format!(
        "ok: {} rules, {} strata, {} window operators",
        program.len(),
        strat.strata.len(),
        tau.len()
    ))
}

/// `sreason explain`.
pub fn cmd_explain(path: &Path, dot: bool) -> Result<String, CliError> {
    let program = load_checked(path)?;
    let plan = plan(&program)?;
    if dot {
        return Ok(plan.to_dot());
    }
    let (flat, tau) = flatten(&program);
    let mut s = plan.describe(&program);
    s.push_str("# flat program\n");
    s.push_str(&flat.program.to_string());
    s.push_str("# window operators\n");
    for (sig, aux) in tau.entries() {
        s.push_str(&format!("{aux} = {sig}\n"));
    }
    Ok(s)
}

/// `sreason gen`: writes the workload files and returns their paths.
pub fn cmd_gen(args: &GenArgs) -> Result<Vec<PathBuf>, CliError> {
    let w = match &args.workload {
        Workload::HeavyJoin { w, events, ticks } => gen::heavy_join(*w, *events, *ticks, args.seed)?,
        Workload::Pvs {
            rows,
            cols,
            ticks,
            fault,
        } => gen::pvs(*rows, *cols, *ticks, fault, args.seed)?,
        Workload::Caching {
            contents,
            ticks,
            window,
        } => gen::caching(*contents, *ticks, *window, args.seed)?,
        Workload::Random { ticks } => gen::random(*ticks, args.seed),
    };
    fs::create_dir_all(&args.out)?;
    let mut written = Vec::new();
    let mut put = |name: &str, text: &str| -> io::Result<()> {
        let p = args.out.join(name);
        fs::write(&p, text)?;
        written.push(p);
        Ok(())
    };
    put("program.idlvsr", &w.program)?;
    put("input.stream", &w.stream_text())?;
    if let Some(bg) = &w.background {
        put("background.bg", bg)?;
    }
    Ok(written)
}

/// `sreason oracle`: streaming models of a finite stream.
pub fn cmd_oracle(
    program: &Path,
    input: &Path,
    background: Option<&Path>,
    output: &OutputSpec,
    format: OutputFormat,
) -> Result<(), CliError> {
    let program = load_checked(program)?;
    let background = load_background(background)?;
    let ticks = source::parse_stream(&read_file(input)?, true)?;
    let mut oracle = StreamingOracle::new(&program, &background)?;
    let mut sink = Sink::open(output, format)?;
    for (n, tick) in ticks.into_iter().enumerate() {
        let model = oracle.step(tick)?;
        sink.write_tick(n, Some(&sorted_atoms(&model)))?;
    }
    sink.flush()?;
    Ok(())
}

/// Runs a parsed command line and returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Run(args) => cmd_run(&args).map(|_| ()),
        Command::Check { program } => cmd_check(&program).map(|s| println!("{s}")),
        Command::Explain { program, dot } => cmd_explain(&program, dot).map(|s| print!("{s}")),
        Command::Gen(args) => cmd_gen(&args).map(|paths| {
            for p in paths {
                println!("{}", p.display());
            }
        }),
        Command::Oracle {
            program,
            input,
            background,
            output,
            output_format,
        } => cmd_oracle(&program, &input, background.as_deref(), &output, output_format),
    };
    match result {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn divergence_exit_code() {
        let e = compare(3, &["a".into(), "b".into()], &["b".into(), "c".into()]).unwrap_err();
        assert_eq!(e.exit_code(), exit::DIVERGENCE);
        let CliError::Divergence {
            tick,
            engine_only,
            oracle_only,
        } = e
        else {
            unreachable!()
        };
        assert_eq!(
            (tick, engine_only, oracle_only),
            (3, vec!["a".into()], vec!["c".into()])
        );
        assert!(compare(0, &[], &[]).is_ok());
    }

    #[test]
    fn cli_parses() {
        let cli = Cli::try_parse_from([
            "sreason", "run", "p.idlvsr", "--input", "tcp:9000", "--mode", "scratch", "--period", "100",
        ])
        .unwrap();
        let Command::Run(args) = cli.command else {
            unreachable!()
        };
        assert_eq!(args.input, SourceSpec::Tcp(9000));
        assert!(matches!(args.mode, ModeArg::Scratch));
        assert_eq!(args.period, Some(100));
        assert!(Cli::try_parse_from(["sreason", "run", "p.idlvsr", "--input", "ftp:x"]).is_err());
    }
}
