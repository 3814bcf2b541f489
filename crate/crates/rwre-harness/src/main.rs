use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use rwre_harness::commands::{self, CommandOutput, CommonOpts, OutputFormat};
use rwre_harness::config::parse_config;
use rwre_harness::error::{HarnessError, Result};
use rwre_harness::verify::{self, FaultInjection};

/// Simulation and numerical-verification toolkit for random walks in random
/// environment on Galton-Watson trees.
#[derive(Parser)]
#[command(name = "rwre", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the `seed` key of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Replicate fan-out width (results are worker-count independent).
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Write the command's table/stream artifact here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Artifact format: CSV tables or JSON lines.
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyLevel {
    Quick,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic exponents: sublevel-set exponent, one-dimensional exponent,
    /// transience verdict, and the variational table.
    Lambda(RunArgs),
    /// Tree-walk estimators: speed, escape exponent, regenerations.
    Simulate(RunArgs),
    /// One-dimensional estimators and the circuit/oracle report.
    Line(RunArgs),
    /// Reinforced-walk estimators and the representation tests.
    Lerrw(RunArgs),
    /// Run the invariant suites of all modules.
    Verify {
        #[arg(value_enum)]
        level: VerifyLevel,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Write check results as JSON lines.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Deliberately perturb a named computation to exercise the failure
        /// path (testing aid). Known faults: circuit.
        #[arg(long, default_value = "none")]
        inject_fault: String,
    },
}

fn run_command(args: &RunArgs, run: impl FnOnce(&rwre_harness::Config, &CommonOpts) -> Result<CommandOutput>) -> Result<()> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        HarnessError::config(format!("cannot read {}: {e}", args.config.display()))
    })?;
    let cfg = parse_config(&text)?;
    let opts = CommonOpts {
        seed: args.seed,
        workers: args.workers.max(1),
        format: match args.format {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Jsonl => OutputFormat::Jsonl,
        },
    };
    let start = Instant::now();
    let mut output = run(&cfg, &opts)?;
    let wall = start.elapsed().as_millis() as u64;
    output.report.wall_clock_ms = Some(wall);

    // The report JSON goes to stdout; artifacts go to --out; timing and a
    // human summary go to stderr so artifacts stay byte-deterministic.
    println!("{}", output.report.to_json()?);
    if let (Some(path), Some(artifact)) = (&args.out, &output.artifact) {
        std::fs::write(path, artifact)?;
        eprintln!("wrote {}", path.display());
    }
    eprintln!("{} finished in {wall} ms", output.report.command);
    Ok(())
}

fn run_verify(
    level: VerifyLevel,
    workers: usize,
    out: Option<&PathBuf>,
    inject: &str,
) -> Result<()> {
    let fault = FaultInjection::parse(inject)
        .ok_or_else(|| HarnessError::config(format!("unknown fault `{inject}`")))?;
    let results = match level {
        VerifyLevel::Quick => verify::quick_checks(workers.max(1), fault),
        VerifyLevel::Full => verify::full_checks(workers.max(1), fault),
    };
    let mut failed = 0usize;
    let mut lines = String::new();
    for check in &results {
        let status = if check.passed { "PASS" } else { "FAIL" };
        println!("{status} {}: {}", check.name, check.details);
        if !check.passed {
            failed += 1;
        }
        lines.push_str(&serde_json::json!({
            "name": check.name,
            "passed": check.passed,
            "details": check.details,
        }).to_string());
        lines.push('\n');
    }
    if let Some(path) = out {
        std::fs::write(path, lines)?;
    }
    if failed > 0 {
        return Err(HarnessError::VerificationFailed { failed, total: results.len() });
    }
    println!("all {} checks passed", results.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Lambda(args) => run_command(args, commands::cmd_lambda),
        Command::Simulate(args) => run_command(args, commands::cmd_simulate),
        Command::Line(args) => run_command(args, commands::cmd_line),
        Command::Lerrw(args) => run_command(args, commands::cmd_lerrw),
        Command::Verify { level, workers, out, inject_fault } => {
            run_verify(*level, *workers, out.as_ref(), inject_fault)
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let _ = writeln!(std::io::stderr(), "error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
