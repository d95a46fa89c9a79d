//! `gazedoc` command-line entry point.
//!
//! Exit status: 0 on success, 1 when a run, replay diff or file fails, 2 on
//! usage errors (bad flags, unknown `--set` keys).

mod serve;

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use gazedoc::reader::generate_trace;
use gazedoc::scenario::{build_task_scenario, parse_override};
use gazedoc::sim::{compare_modes, run, RunOutput};
use gazedoc::trace::{read_events, read_trace, write_events, write_trace};
use gazedoc::{EngineConfig, InteractionEvent, MetricsReport, Mode, ReaderModel, Scenario, Task};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Parser)]
#[command(name = "gazedoc", version, about = "Gaze-driven document interaction engine and simulation harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a task scenario (T1-T4) and write it as JSON.
    Scenario {
        #[arg(long)]
        task: Task,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Synthesize a reader's gaze trace (JSON lines) for a scenario.
    GenTrace {
        #[command(flatten)]
        engine: EngineArgs,
        /// Reader model JSON; defaults apply to missing fields.
        #[arg(long)]
        reader: Option<PathBuf>,
        /// Reader RNG seed (overrides the reader file).
        #[arg(long)]
        reader_seed: Option<u64>,
        /// Total angular noise in degrees: 0 or 0.5-1.1.
        #[arg(long)]
        noise: Option<f64>,
        /// Document index to re-read after the first pass; repeatable.
        #[arg(long = "reread")]
        rereads: Vec<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Feed a trace through the engine, writing the event log and metrics.
    Run(RunArgs),
    /// Re-run a trace and diff against an existing event log.
    Replay {
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(short, long)]
        trace: PathBuf,
        /// Event log to compare against.
        #[arg(short, long)]
        events: PathBuf,
    },
    /// Compute metrics for a trace.
    Metrics {
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(short, long)]
        trace: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Paired metrics of one reader under both modes.
    Compare {
        #[arg(short, long)]
        scenario: PathBuf,
        #[arg(long)]
        reader: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Serve live sessions: line-delimited JSON over TCP, and WebSocket at /ws.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// 0 picks a free port; the bound address is printed on stdout.
        #[arg(long, default_value_t = 7878)]
        port: u16,
        /// Directory of static files served over HTTP.
        #[arg(long)]
        demo: Option<PathBuf>,
        /// Write each finished session (scenario, trace, events) here.
        #[arg(long)]
        record: Option<PathBuf>,
    },
}

#[derive(Args, Clone)]
struct EngineArgs {
    #[arg(short, long)]
    scenario: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::Vrdoc)]
    mode: ModeArg,
    /// Engine config override, applied after the scenario's own config; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(short, long, required_unless_present = "batch")]
    scenario: Option<PathBuf>,
    #[arg(short, long, required_unless_present = "batch")]
    trace: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModeArg::Vrdoc)]
    mode: ModeArg,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Event log output; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Metrics output (a JSON array for batches).
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Batch manifest; see docs/scenario-format.md.
    #[arg(long, conflicts_with_all = ["scenario", "trace", "output"])]
    batch: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    #[value(alias = "gaze")]
    Vrdoc,
    Baseline,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Vrdoc => Mode::Gaze,
            ModeArg::Baseline => Mode::Baseline,
        }
    }
}

/// Failure with its exit status.
enum Failure {
    Usage(anyhow::Error),
    Run(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Run(e)
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Command) -> CmdResult {
    match cmd {
        Command::Scenario { task, seed, output } => {
            let s = build_task_scenario(task, seed);
            write_text(output.as_deref(), &(s.to_json() + "\n"))?;
        }
        Command::GenTrace { engine, reader, reader_seed, noise, rereads, output } => {
            let overrides = parse_overrides(&engine.overrides)?;
            let scenario = load_scenario(&engine.scenario)?;
            let cfg = scenario.engine_config(engine.mode.into(), &overrides).map_err(|e| Failure::Run(e.into()))?;
            let mut model: ReaderModel = match reader {
                Some(p) => serde_json::from_str(&read_to_string(&p)?).with_context(|| format!("{}", p.display()))?,
                None => ReaderModel::default(),
            };
            if let Some(seed) = reader_seed {
                model.seed = seed;
            }
            if let Some(n) = noise {
                model.noise_std_deg = n;
            }
            if !rereads.is_empty() {
                model.rereads = rereads;
            }
            let trace = generate_trace(&scenario, &model, &cfg).context("gen-trace")?;
            let mut buf = Vec::new();
            write_trace(&mut buf, &trace).context("writing trace")?;
            write_bytes(output.as_deref(), &buf)?;
        }
        Command::Run(args) => return cmd_run(args),
        Command::Replay { engine, trace, events } => {
            let out = run_files(&engine.scenario, &trace, engine.mode, &parse_overrides(&engine.overrides)?)?;
            let expected = load_events(&events)?;
            match first_divergence(&expected, &out.events) {
                None => println!("replay ok: {} events identical", expected.len()),
                Some(report) => {
                    return Err(Failure::Run(anyhow::anyhow!("replay diverged from {}\n{report}", events.display())))
                }
            }
        }
        Command::Metrics { engine, trace, output } => {
            let out = run_files(&engine.scenario, &trace, engine.mode, &parse_overrides(&engine.overrides)?)?;
            write_text(output.as_deref(), &json_pretty(&out.metrics)?)?;
        }
        Command::Compare { scenario, reader, overrides, output } => {
            let overrides = parse_overrides(&overrides)?;
            let s = load_scenario(&scenario)?;
            let base = s.engine_config(Mode::Gaze, &overrides).map_err(|e| Failure::Run(e.into()))?;
            let model: ReaderModel = match reader {
                Some(p) => serde_json::from_str(&read_to_string(&p)?).with_context(|| format!("{}", p.display()))?,
                None => ReaderModel::default(),
            };
            let (vrdoc, baseline) = compare_modes(&s, &model, &base).context("compare")?;
            #[derive(Serialize)]
            struct Paired {
                scenario: String,
                vrdoc: MetricsReport,
                baseline: MetricsReport,
            }
            write_text(output.as_deref(), &json_pretty(&Paired { scenario: s.name, vrdoc, baseline })?)?;
        }
        Command::Serve { host, port, demo, record } => {
            if let Some(d) = &demo {
                if !d.is_dir() {
                    return Err(Failure::Usage(anyhow::anyhow!("--demo {} is not a directory", d.display())));
                }
            }
            if let Some(r) = &record {
                std::fs::create_dir_all(r).with_context(|| format!("creating {}", r.display()))?;
            }
            serve::serve(&host, port, demo, record)?;
        }
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> CmdResult {
    let overrides = parse_overrides(&args.overrides)?;
    if args.jobs == 0 {
        return Err(Failure::Usage(anyhow::anyhow!("--jobs must be at least 1")));
    }
    if let Some(batch) = &args.batch {
        let reports = run_batch(batch, args.jobs, &overrides)?;
        let text = json_pretty(&reports)?;
        match &args.metrics {
            Some(p) => write_text(Some(p), &text)?,
            None => write_text(None, &text)?,
        }
        return Ok(());
    }
    let (Some(scenario), Some(trace)) = (&args.scenario, &args.trace) else {
        return Err(Failure::Usage(anyhow::anyhow!("run needs --scenario and --trace, or --batch")));
    };
    let out = run_files(scenario, trace, args.mode, &overrides)?;
    let mut buf = Vec::new();
    write_events(&mut buf, &out.events).context("writing events")?;
    write_bytes(args.output.as_deref(), &buf)?;
    if let Some(m) = &args.metrics {
        write_text(Some(m), &json_pretty(&out.metrics)?)?;
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BatchEntry {
    scenario: PathBuf,
    trace: PathBuf,
    #[serde(default = "default_mode")]
    mode: ModeArg,
    #[serde(default)]
    events: Option<PathBuf>,
}

fn default_mode() -> ModeArg {
    ModeArg::Vrdoc
}

#[derive(Serialize)]
struct BatchReport {
    scenario: PathBuf,
    trace: PathBuf,
    mode: ModeArg,
    metrics: MetricsReport,
}

/// Runs every manifest entry on `jobs` threads; results keep manifest order.
fn run_batch(manifest: &Path, jobs: usize, overrides: &Map<String, Value>) -> Result<Vec<BatchReport>, Failure> {
    let text = read_to_string(manifest)?;
    let entries: Vec<BatchEntry> =
        serde_json::from_str(&text).with_context(|| format!("batch manifest {}", manifest.display()))?;
    let base = manifest.parent().unwrap_or(Path::new("."));
    let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<anyhow::Result<MetricsReport>>>> =
        Mutex::new((0..entries.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(entries.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(e) = entries.get(i) else { break };
                let r = (|| -> anyhow::Result<MetricsReport> {
                    let out =
                        run_files(&resolve(&e.scenario), &resolve(&e.trace), e.mode, overrides).map_err(
                            |f| match f {
                                Failure::Usage(e) | Failure::Run(e) => e,
                            },
                        )?;
                    if let Some(ev) = &e.events {
                        let mut w = BufWriter::new(File::create(resolve(ev))?);
                        write_events(&mut w, &out.events)?;
                        w.flush()?;
                    }
                    Ok(out.metrics)
                })();
                results.lock().unwrap()[i] = Some(r.with_context(|| format!("batch entry {i}")));
            });
        }
    });
    let mut reports = Vec::with_capacity(entries.len());
    for (e, r) in entries.into_iter().zip(results.into_inner().unwrap()) {
        let metrics = r.expect("every entry ran")?;
        reports.push(BatchReport { scenario: e.scenario, trace: e.trace, mode: e.mode, metrics });
    }
    Ok(reports)
}

fn run_files(
    scenario: &Path,
    trace: &Path,
    mode: ModeArg,
    overrides: &Map<String, Value>,
) -> Result<RunOutput, Failure> {
    let s = load_scenario(scenario)?;
    let cfg: EngineConfig = s.engine_config(mode.into(), overrides).map_err(|e| Failure::Run(e.into()))?;
    let samples = read_trace(open(trace)?).with_context(|| format!("trace {}", trace.display()))?;
    Ok(run(&s, cfg, &samples).with_context(|| format!("running {}", trace.display()))?)
}

/// First index where the logs differ, with both sides, or `None` if equal.
fn first_divergence(expected: &[InteractionEvent], actual: &[InteractionEvent]) -> Option<String> {
    let show = |e: Option<&InteractionEvent>| match e {
        Some(e) => serde_json::to_string(e).unwrap_or_default(),
        None => "<end of log>".to_string(),
    };
    let n = expected.len().max(actual.len());
    (0..n).find(|&i| expected.get(i) != actual.get(i)).map(|i| {
        format!(
            "first divergence at event {} (line {})\n  expected: {}\n  actual:   {}\n  ({} expected, {} actual events)",
            i,
            i + 1,
            show(expected.get(i)),
            show(actual.get(i)),
            expected.len(),
            actual.len()
        )
    })
}

fn parse_overrides(items: &[String]) -> Result<Map<String, Value>, Failure> {
    let mut map = Map::new();
    for item in items {
        let (k, v) = parse_override(item).map_err(|e| Failure::Usage(anyhow::anyhow!("--set {item}: {e}")))?;
        map.insert(k, v);
    }
    Ok(map)
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    let text = read_to_string(path)?;
    Ok(Scenario::from_json(&text).with_context(|| format!("scenario {}", path.display()))?)
}

fn load_events(path: &Path) -> Result<Vec<InteractionEvent>, Failure> {
    Ok(read_events(open(path)?).with_context(|| format!("event log {}", path.display()))?)
}

fn open(path: &Path) -> anyhow::Result<impl BufRead> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))
}

fn read_to_string(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn json_pretty<T: Serialize>(v: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn write_text(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    write_bytes(path, text.as_bytes())
}

fn write_bytes(path: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}
