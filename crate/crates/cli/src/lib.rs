//! Command-line front end: runs the histories and ABL analyses side by side on
//! a built-in or file-defined scenario and prints a report.
//!
//! Exit codes: 0 on success (including a histories refusal), 1 when an
//! analysis fails, 2 on usage or scenario-file errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use prepost::histories::ConsistencyCondition;
use prepost::report::{build_report, quantize, ReportOptions, Timing};
use prepost::spec::ScenarioSpec;
use prepost::{hm_scenario_with_order, spin_scenario, Scenario, SlotOrder, DEFAULT_TOL};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ANALYSIS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "prepost",
    version,
    about = "Consistent histories and ABL probabilities side by side"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Analyze a scenario and print the report.
    Run(RunArgs),
    /// Check a scenario file without running any analysis.
    Validate {
        /// Scenario file (JSON).
        file: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BuiltIn {
    Spin,
    Hm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Condition {
    Full,
    Real,
}

impl From<Condition> for ConsistencyCondition {
    fn from(c: Condition) -> Self {
        match c {
            Condition::Full => ConsistencyCondition::FullDiagonality,
            Condition::Real => ConsistencyCondition::RealPartOnly,
        }
    }
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// Built-in scenario.
    #[arg(
        long,
        value_enum,
        required_unless_present = "spec",
        conflicts_with = "spec"
    )]
    scenario: Option<BuiltIn>,
    /// Scenario file (JSON).
    #[arg(long, value_name = "FILE")]
    spec: Option<PathBuf>,
    /// Subsystem dimension for the black hole model.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Consistency tolerance.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Condition that must hold before histories probabilities are assigned.
    #[arg(long, value_enum, default_value_t = Condition::Full)]
    condition: Condition,
    /// Measure (bt_b, b) before (r_b, b) in the black hole model.
    #[arg(long)]
    swap_order: bool,
    /// Largest accepted --d.
    #[arg(long, default_value_t = 8)]
    max_d: usize,
    /// Add wall-clock time to the report (makes output run-dependent).
    #[arg(long)]
    timing: bool,
}

struct Usage(String);

fn usage(msg: impl Into<String>) -> Usage {
    Usage(msg.into())
}

/// Parses `args` (including the program name) and executes the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{text}")
            } else {
                write!(out, "{text}")
            };
            return code;
        }
    };
    match cli.command {
        Command::Run(args) => run_analysis(&args, out, err),
        Command::Validate { file } => validate(&file, out, err),
    }
}

fn load_spec(path: &Path, err: &mut dyn Write) -> Option<ScenarioSpec> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: cannot read {}: {e}", path.display());
            return None;
        }
    };
    match ScenarioSpec::from_json(&text) {
        Ok(spec) => Some(spec),
        Err(d) => {
            let _ = writeln!(err, "{}: {d}", path.display());
            None
        }
    }
}

fn build_scenario(args: &RunArgs, err: &mut dyn Write) -> Result<Scenario, Usage> {
    if let Some(path) = &args.spec {
        if args.d.is_some() || args.swap_order {
            return Err(usage("--d and --swap-order apply only to --scenario hm"));
        }
        let spec = load_spec(path, err).ok_or_else(|| usage("invalid scenario file"))?;
        return spec.build().map_err(|diags| {
            for d in &diags {
                let _ = writeln!(err, "{}: {d}", path.display());
            }
            usage(format!("{} diagnostic(s) in scenario file", diags.len()))
        });
    }
    match args.scenario {
        Some(BuiltIn::Spin) => {
            if args.d.is_some() || args.swap_order {
                return Err(usage("--d and --swap-order apply only to --scenario hm"));
            }
            Ok(spin_scenario())
        }
        Some(BuiltIn::Hm) => {
            let d = args.d.unwrap_or(2);
            if d < 2 || d > args.max_d {
                return Err(usage(format!(
                    "--d {d} out of range 2..={} (raise the limit with --max-d)",
                    args.max_d
                )));
            }
            let order = if args.swap_order {
                SlotOrder::Swapped
            } else {
                SlotOrder::Standard
            };
            hm_scenario_with_order(d, order).map_err(|e| usage(e.to_string()))
        }
        None => Err(usage("one of --scenario or --spec is required")),
    }
}

fn run_analysis(args: &RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if !(args.tol.is_finite() && args.tol >= 0.0) {
        let _ = writeln!(err, "error: --tol must be a finite non-negative number");
        return EXIT_USAGE;
    }
    let start = Instant::now();
    let scenario = match build_scenario(args, err) {
        Ok(s) => s,
        Err(Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            return EXIT_USAGE;
        }
    };
    let opts = ReportOptions {
        tol: args.tol,
        condition: args.condition.into(),
    };
    let mut report = build_report(&scenario, &opts);
    if args.timing {
        report.timing = Some(Timing {
            elapsed_ms: quantize(start.elapsed().as_secs_f64() * 1e3),
        });
    }
    let text = match args.format {
        Format::Text => report.to_text(),
        Format::Json => report.to_json(),
    };
    if out.write_all(text.as_bytes()).is_err() {
        return EXIT_ANALYSIS;
    }
    if report.has_errors() {
        let _ = writeln!(err, "error: analysis failed; see report");
        return EXIT_ANALYSIS;
    }
    EXIT_OK
}

fn validate(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let Some(spec) = load_spec(path, err) else {
        return EXIT_USAGE;
    };
    let diags = spec.validate();
    if diags.is_empty() {
        let _ = writeln!(out, "{}: ok", path.display());
        return EXIT_OK;
    }
    for d in &diags {
        let _ = writeln!(err, "{}: {d}", path.display());
    }
    EXIT_USAGE
}
