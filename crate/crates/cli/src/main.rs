use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qfib_core::json::{self, format_f64};
use qfib_core::metrics::MetricOptions;
use qfib_core::report::{metric_report, sweep, MetricReport, SweepRow, SweepSpec, SWEEP_HEADER};
use qfib_core::state::resolve_model;
use qfib_core::verify::{run_suite, Suite};
use qfib_core::{Error, ParameterPoint, ToleranceConfig};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "qfib",
    version,
    about = "Quantum Fisher information and Bures-metric numerics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// QFI, forward and centered Bures metrics and the rank-change correction at one point.
    Compute {
        #[command(flatten)]
        common: Common,
        /// Parameter point, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x: Vec<f64>,
    },
    /// The same quantities along a grid on one parameter axis.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        axis: usize,
        #[arg(long, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, allow_hyphen_values = true)]
        hi: f64,
        #[arg(long)]
        steps: usize,
        /// Values of the fixed parameters (defaults to the origin).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Option<Vec<f64>>,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs a verification suite; exit status 0 iff every check passes.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Restrict the state-family checks to this model.
        #[arg(long)]
        model: Option<String>,
        #[arg(long, default_value_t = ToleranceConfig::default().rank_tol)]
        rank_tol: f64,
        /// Report file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// `builtin:NAME` or a path to a model JSON document.
    #[arg(long, default_value = "builtin:paper-example")]
    model: String,
    #[arg(long, default_value_t = MetricOptions::default().eps)]
    eps: f64,
    #[arg(long, default_value_t = MetricOptions::default().richardson, action = clap::ArgAction::Set)]
    richardson: bool,
    #[arg(long, default_value_t = ToleranceConfig::default().rank_tol)]
    rank_tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

impl Common {
    fn options(&self) -> MetricOptions {
        MetricOptions {
            eps: self.eps,
            richardson: self.richardson,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Failure with its exit status.
enum Failure {
    Checks,
    Config(Error),
    Io(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Config(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: String,
}

fn tolerances(rank_tol: f64) -> Result<ToleranceConfig, Failure> {
    if !(rank_tol.is_finite() && rank_tol > 0.0) {
        return Err(Error::InvalidArgument(format!("rank-tol must be positive, got {rank_tol}")).into());
    }
    Ok(ToleranceConfig::default().with_rank_tol(rank_tol))
}

fn emit(out: Option<&Path>, text: &str) -> io::Result<()> {
    match out {
        Some(path) => fs::write(path, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = json::to_string(value).expect("reports serialize");
    text.push('\n');
    text
}

fn csv_text<'a>(header: &[&str], rows: impl Iterator<Item = Vec<String>> + 'a) -> io::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

fn row_strings(row: &SweepRow) -> Vec<String> {
    row.fields().iter().map(|&v| format_f64(v)).collect()
}

fn compute_csv(r: &MetricReport) -> io::Result<String> {
    let header: Vec<&str> = std::iter::once("axis").chain(SWEEP_HEADER).collect();
    let rows = (0..r.x.len()).map(|a| {
        let row = SweepRow {
            x: r.x[a],
            fisher: r.fisher[(a, a)],
            four_g: r.four_g[(a, a)],
            four_h: r.four_h[(a, a)],
            correction: r.correction[(a, a)],
            eq5_residual: r.eq5_residual[(a, a)],
            thm1_residual: r.thm1_residual[(a, a)],
        };
        std::iter::once(a.to_string()).chain(row_strings(&row)).collect()
    });
    csv_text(&header, rows)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Compute { common, x } => {
            let tol = tolerances(common.rank_tol)?;
            let model = resolve_model(&common.model)?;
            let report = metric_report(&*model, &ParameterPoint::new(x)?, common.options(), &tol)?;
            let text = match common.format {
                Format::Json => to_json(&report),
                Format::Csv => compute_csv(&report)?,
            };
            emit(None, &text)?;
        }
        Command::Sweep {
            common,
            axis,
            lo,
            hi,
            steps,
            x,
            out,
        } => {
            let tol = tolerances(common.rank_tol)?;
            let model = resolve_model(&common.model)?;
            let spec = SweepSpec {
                axis,
                lo,
                hi,
                steps,
                base: x.unwrap_or_else(|| vec![0.0; model.param_count()]),
            };
            // every row is computed before anything is written
            let rows = sweep(&*model, &spec, common.options(), &tol)?;
            let text = match common.format {
                Format::Json => to_json(&rows),
                Format::Csv => csv_text(&SWEEP_HEADER, rows.iter().map(row_strings))?,
            };
            emit(out.as_deref(), &text)?;
        }
        Command::Verify {
            suite,
            seed,
            model,
            rank_tol,
            out,
        } => {
            let tol = tolerances(rank_tol)?;
            let suite: Suite = suite.parse()?;
            let model = model.as_deref().map(resolve_model).transpose()?;
            let report = run_suite(suite, seed, model, &tol)?;
            emit(out.as_deref(), &to_json(&report))?;
            if !report.pass {
                return Err(Failure::Checks);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.render().to_string();
            return report_error("InvalidArgument", message.trim().to_string());
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(failure) => {
            let (kind, message) = match failure {
                Failure::Config(e) => (e.kind(), e.to_string()),
                Failure::Io(e) => ("Io", e.to_string()),
                Failure::Checks => unreachable!(),
            };
            report_error(kind, message)
        }
    }
}

fn report_error(kind: &str, message: String) -> ExitCode {
    let err = ErrorReport { error: kind, message };
    eprintln!("{}", serde_json::to_string(&err).expect("error report serializes"));
    ExitCode::from(2)
}
