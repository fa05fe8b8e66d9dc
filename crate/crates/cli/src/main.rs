//! `packclass`: exact packing, defragmentation and scenario simulation for
//! column-reconfigurable devices.
//!
//! Exit codes: 0 success or feasible, 1 infeasible, 2 search budget
//! exhausted, 64 bad input, 70 internal error.

mod svg;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use packclass_core::harness::format_table;
use packclass_core::{
    compute_bounds, defragment, generate_scenario, run_scenario, solve_opp, Error, Layout, OppVerdict,
    ReportRow, RunOptions, Scenario, ScenarioParams, SearchLimits,
};
use serde::Serialize;

const EXIT_INFEASIBLE: u8 = 1;
const EXIT_UNKNOWN: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_INTERNAL: u8 = 70;

#[derive(Parser, Debug)]
#[command(
    name = "packclass",
    version,
    about = "Exact module packing and FPGA layout defragmentation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write the primary output here instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Also write an SVG rendering (defrag writes FILE-before.svg and FILE-after.svg).
    #[arg(long, global = true, value_name = "FILE")]
    svg: Option<PathBuf>,

    /// Node budget per packing decision.
    #[arg(long, global = true, default_value_t = 10_000_000)]
    node_budget: u64,

    /// Time budget per packing decision, in seconds.
    #[arg(long, global = true, default_value_t = 60.0)]
    time_budget: f64,

    /// Seed for a generated scenario (simulate without files).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Remove modules used fewer times than this before each defragmentation.
    #[arg(long, global = true)]
    usage_threshold: Option<u64>,

    /// Suppress logs and the summary on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide whether the modules of a layout file fit its container.
    SolveOpp { input: PathBuf },
    /// Print the area lower bound and shelf upper bound on strip width.
    Bounds { input: PathBuf },
    /// Repack a layout into the fewest leftmost columns.
    Defrag { input: PathBuf },
    /// Run scenario files, or a generated scenario with --seed.
    Simulate {
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Render a layout as SVG.
    Render { input: PathBuf },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Table,
    Json,
}

/// Failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::BudgetExhausted { .. } => EXIT_UNKNOWN,
            Error::InvalidLayout(_)
            | Error::TooTall { .. }
            | Error::TooManyModules(_)
            | Error::MalformedEvent { .. }
            | Error::InvalidParams(_)
            | Error::Json(_) => EXIT_USAGE,
            _ => EXIT_INTERNAL,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let mut logger = env_logger::Builder::from_env(env_logger::Env::new().filter_or("PACKCLASS_LOG", "warn"));
    if cli.quiet {
        logger.filter_level(log::LevelFilter::Off);
    }
    logger.format_timestamp(None).init();

    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    if !(cli.time_budget > 0.0 && cli.time_budget.is_finite()) {
        return Err(Failure::usage(
            "--time-budget must be a positive number of seconds",
        ));
    }
    let limits = SearchLimits {
        max_nodes: Some(cli.node_budget),
        max_time: Some(Duration::from_secs_f64(cli.time_budget)),
    };
    match &cli.command {
        Command::SolveOpp { input } => solve(cli, input, &limits),
        Command::Bounds { input } => bounds(cli, input),
        Command::Defrag { input } => defrag(cli, input, &limits),
        Command::Simulate { inputs, format } => simulate(cli, inputs, *format, &limits),
        Command::Render { input } => {
            let layout = read_layout(input)?;
            emit(cli.out.as_deref(), &svg::render(&layout))?;
            Ok(0)
        }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn read_layout(path: &Path) -> Result<Layout, Failure> {
    Layout::from_json(&read_text(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output types serialize") + "\n"
}

/// Writes to `path` through a temporary file in the same directory, so a
/// failed run never leaves a partial file; stdout when `path` is `None`.
fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure {
        code: EXIT_INTERNAL,
        message: e.to_string(),
    };
    match path {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(io)
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
            tmp.write_all(text.as_bytes()).map_err(io)?;
            tmp.persist(path).map_err(|e| io(e.error))?;
            Ok(())
        }
    }
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map_or_else(|| "layout".into(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}-{suffix}.svg"))
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    verdict: &'static str,
    container: packclass_core::Container,
    #[serde(skip_serializing_if = "Option::is_none")]
    layout: Option<&'a Layout>,
    stats: &'a packclass_core::SearchStats,
}

fn solve(cli: &Cli, input: &Path, limits: &SearchLimits) -> Outcome {
    let instance = read_layout(input)?;
    let result = solve_opp(&instance.modules, instance.container, limits)?;
    let layout = result.layout();
    emit(
        cli.out.as_deref(),
        &to_json(&SolveOutput {
            verdict: result.verdict.label(),
            container: instance.container,
            layout,
            stats: &result.stats,
        }),
    )?;
    if let (Some(path), Some(layout)) = (&cli.svg, layout) {
        emit(Some(path), &svg::render(layout))?;
    }
    if !cli.quiet {
        eprintln!("{} after {} nodes", result.verdict.label(), result.stats.nodes);
    }
    Ok(match result.verdict {
        OppVerdict::Feasible { .. } => 0,
        OppVerdict::Infeasible => EXIT_INFEASIBLE,
        OppVerdict::Unknown => EXIT_UNKNOWN,
    })
}

fn bounds(cli: &Cli, input: &Path) -> Outcome {
    let instance = read_layout(input)?;
    let b = compute_bounds(&instance.modules, instance.container.height)?;
    emit(cli.out.as_deref(), &to_json(&b))?;
    if !cli.quiet {
        eprintln!("strip width in [{}, {}]", b.lower, b.upper);
    }
    Ok(0)
}

#[derive(Serialize)]
struct DefragOutput<'a> {
    optimal_width: u32,
    lower_bound: u32,
    upper_bound: u32,
    probes: &'a [packclass_core::strip::Probe],
    before: &'a packclass_core::MetricsReport,
    after: &'a packclass_core::MetricsReport,
    row: ReportRow,
    layout: &'a Layout,
}

fn defrag(cli: &Cli, input: &Path, limits: &SearchLimits) -> Outcome {
    let layout = read_layout(input)?;
    let d = defragment(&layout, limits)?;
    let label = input
        .file_stem()
        .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    let row = ReportRow::between(label, &layout, &d.layout);
    if !cli.quiet {
        eprint!("{}", format_table(std::slice::from_ref(&row)));
    }
    emit(
        cli.out.as_deref(),
        &to_json(&DefragOutput {
            optimal_width: d.strip.optimal_width,
            lower_bound: d.strip.lower_bound,
            upper_bound: d.strip.upper_bound,
            probes: &d.strip.probes,
            before: &d.before,
            after: &d.after,
            row,
            layout: &d.layout,
        }),
    )?;
    if let Some(path) = &cli.svg {
        emit(Some(&with_suffix(path, "before")), &svg::render(&layout))?;
        emit(Some(&with_suffix(path, "after")), &svg::render(&d.layout))?;
    }
    Ok(0)
}

#[derive(Serialize)]
struct SimulateOutput {
    scenarios: Vec<ScenarioOutput>,
}

#[derive(Serialize)]
struct ScenarioOutput {
    name: String,
    rows: Vec<ReportRow>,
    initial: Layout,
    steps: Vec<packclass_core::harness::StepRecord>,
}

fn simulate(cli: &Cli, inputs: &[PathBuf], format: Format, limits: &SearchLimits) -> Outcome {
    let scenarios: Vec<(String, Scenario)> = match (inputs.is_empty(), cli.seed) {
        (true, Some(seed)) => vec![(
            format!("seed-{seed}"),
            generate_scenario(seed, &ScenarioParams::default())?,
        )],
        (true, None) => return Err(Failure::usage("simulate needs scenario files or --seed")),
        (false, Some(_)) => {
            return Err(Failure::usage(
                "--seed generates a scenario; do not pass files with it",
            ))
        }
        (false, None) => inputs
            .iter()
            .map(|p| {
                let name = p
                    .file_stem()
                    .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
                Scenario::from_json(&read_text(p)?)
                    .map(|s| (name, s))
                    .map_err(|e| Failure::usage(format!("{}: {e}", p.display())))
            })
            .collect::<Result<_, _>>()?,
    };
    let options = RunOptions {
        limits: *limits,
        usage_threshold: cli.usage_threshold,
    };
    let single = scenarios.len() == 1;
    let mut outputs = Vec::new();
    let mut table_rows = Vec::new();
    for (name, scenario) in scenarios {
        info!("simulating {name}");
        let report = run_scenario(&scenario.initial_layout(), &scenario.events, &options)
            .map_err(|e| with_context(&name, e))?;
        let rows = report.rows();
        if single {
            table_rows.extend(rows.iter().cloned());
        } else {
            // One row per defragmentation, named after the scenario.
            let defrags: Vec<&ReportRow> = rows.iter().filter(|r| r.after_max_rect.is_some()).collect();
            for r in &defrags {
                let mut r = (*r).clone();
                r.label = if defrags.len() == 1 {
                    name.clone()
                } else {
                    format!("{name}:{}", r.label)
                };
                table_rows.push(r);
            }
        }
        outputs.push(ScenarioOutput {
            name,
            rows,
            initial: report.initial,
            steps: report.steps,
        });
    }
    let text = match format {
        Format::Table => format_table(&table_rows),
        Format::Json => to_json(&SimulateOutput { scenarios: outputs }),
    };
    emit(cli.out.as_deref(), &text)?;
    Ok(0)
}

fn with_context(name: &str, e: Error) -> Failure {
    let mut f = Failure::from(e);
    f.message = format!("{name}: {}", f.message);
    f
}
