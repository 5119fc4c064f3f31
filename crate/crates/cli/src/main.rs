use std::fs;
use std::io::{self, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use ddmeas::config::{ExperimentConfig, OutputFormat};
use ddmeas::protocol::dd_expansion;
use ddmeas::report::{Timing, VerificationReport};
use ddmeas::simulate::simulate;
use ddmeas::verify::{run_scope, Scope};

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "ddmeas", version, about = "Pulse-sequence / measurement duality checks and simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite and write a JSON report.
    Verify {
        #[arg(long, default_value = "all", value_parser = parse_scope)]
        scope: Scope,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report destination; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Evaluate one protocol family from an experiment config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output.path`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `output.format`.
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Print the signed measurement expansion of n segments with n - 1 x pulses.
    Expand {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=6))]
        n: u8,
    },
}

fn parse_scope(s: &str) -> Result<Scope, String> {
    s.parse().map_err(|e: ddmeas::Error| e.to_string())
}

fn use_color() -> bool {
    std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty()) && io::stderr().is_terminal()
}

fn write_output(path: Option<&Path>, text: &str) -> io::Result<()> {
    match path {
        Some(p) => fs::write(p, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn report_csv(report: &VerificationReport) -> String {
    let mut out = String::from("check_id,parameters,max_abs_error,threshold,status\n");
    for r in &report.records {
        let params: Vec<String> = r.parameters.iter().map(|(k, v)| format!("{k}={v}")).collect();
        out.push_str(&format!(
            "{},{},{:.16e},{:.16e},{}\n",
            r.check_id,
            params.join(";"),
            r.max_abs_error,
            r.threshold,
            r.status.label()
        ));
    }
    out
}

fn verify(scope: Scope, seed: u64, out: Option<PathBuf>, format: Format) -> ExitCode {
    let start = Instant::now();
    let mut report = run_scope(scope, seed);
    report.timing = Some(Timing {
        wall_seconds: start.elapsed().as_secs_f64(),
        finished_unix_seconds: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    });
    let text = match format {
        Format::Json => match report.to_json() {
            Ok(mut s) => {
                s.push('\n');
                s
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_USAGE);
            }
        },
        Format::Csv => report_csv(&report),
    };
    if let Err(e) = write_output(out.as_deref(), &text) {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(EXIT_USAGE);
    }
    eprint!("{}", report.render_text(use_color()));
    if report.all_ok() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY_FAILED)
    }
}

fn run_simulate(config: &Path, out: Option<PathBuf>, format: Option<Format>) -> Result<(), String> {
    let text = fs::read_to_string(config).map_err(|e| format!("cannot read {}: {e}", config.display()))?;
    let cfg: ExperimentConfig = text.parse().map_err(|e: ddmeas::Error| e.to_string())?;
    let experiment = cfg.resolve().map_err(|e| e.to_string())?;
    let table = simulate(&experiment).map_err(|e| e.to_string())?;
    let format = match format {
        Some(Format::Json) => OutputFormat::Json,
        Some(Format::Csv) => OutputFormat::Csv,
        None => cfg.output.format,
    };
    let body = match format {
        OutputFormat::Csv => table.to_csv_string().map_err(|e| e.to_string())?,
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&table).map_err(|e| e.to_string())?;
            s.push('\n');
            s
        }
    };
    let path = out.or_else(|| cfg.output.path.as_ref().map(PathBuf::from));
    write_output(path.as_deref(), &body).map_err(|e| format!("cannot write output: {e}"))
}

fn expand(n: usize) -> String {
    let terms = dd_expansion(n).expect("n is in range");
    let line: Vec<String> = terms.iter().map(|t| t.to_string()).collect();
    let mut out = line.join(" ");
    out.push('\n');
    for t in &terms {
        let slots: Vec<String> = t.measurements.iter().map(|(k, m)| format!("t_{k}: {m}")).collect();
        out.push_str(&format!("{:>+4}  measured at {{{}}}\n", t.coefficient, slots.join(", ")));
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify { scope, seed, out, format } => verify(scope, seed, out, format),
        Command::Simulate { config, out, format } => match run_simulate(&config, out, format) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(EXIT_USAGE)
            }
        },
        Command::Expand { n } => {
            print!("{}", expand(n as usize));
            ExitCode::SUCCESS
        }
    }
}
