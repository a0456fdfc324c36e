use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use l1dev::cli::config::{build_config, RawBlock};
use l1dev::cli::{
    emit_plot_data, emit_report, exit_code_for_error, exit_code_for_report, ExperimentConfig, Format, Report,
    TaskKind, Workers, WORKERS_ENV,
};
use l1dev::montecarlo::run_experiment;
use l1dev::{Error, Result};

/// Monte Carlo checks of l1 deviation bounds for empirical multinomial distributions.
#[derive(Parser, Debug)]
#[command(name = "l1dev", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exceedance probabilities P(deviation >= threshold).
    Tail(TaskArgs),
    /// Empirical CDF on a threshold grid with a DKW band.
    Quantiles(TaskArgs),
    /// Tests a claimed bound against simulated exceedance.
    Falsify(TaskArgs),
    /// Monte Carlo mean of the limit law against its closed form.
    AsymptoticMean(TaskArgs),
    /// Runs every task of a config file.
    Run(RunArgs),
    /// Re-emits a saved JSON report.
    Report(ReportArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct OutputArgs {
    /// csv or json
    #[arg(long, default_value = "csv")]
    format: String,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Emit plot data for this task id instead of the report.
    #[arg(long)]
    plot: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    workers: Option<String>,
    /// Record wall-clock runtime in the report (breaks byte-identical output).
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
struct TaskArgs {
    /// Config file; only tasks of this command's kind are run.
    #[arg(long, conflicts_with_all = ["s", "n", "delta", "seed", "bound", "threshold", "grid"])]
    config: Option<PathBuf>,
    /// Alphabet size(s), comma list or start:stop:count.
    #[arg(long = "S")]
    s: Option<String>,
    /// Sample size(s); omit for the n -> infinity limit (tail, quantiles).
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long = "D")]
    d: Option<String>,
    /// multinomial or dirichlet
    #[arg(long)]
    family: Option<String>,
    /// weissman-union, weissman-exact, devroye or agrawal (falsify)
    #[arg(long)]
    bound: Option<String>,
    #[arg(long)]
    threshold: Option<String>,
    #[arg(long)]
    grid: Option<String>,
    /// Also compute the exact tail by enumeration (tail, multinomial).
    #[arg(long)]
    exact: bool,
    #[arg(long = "ci-level")]
    ci_level: Option<String>,
    #[arg(long)]
    id: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
struct ReportArgs {
    /// Saved JSON report.
    input: PathBuf,
    #[command(flatten)]
    output: OutputArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { l1dev::cli::EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("l1dev: {e}");
            ExitCode::from(exit_code_for_error(&e) as u8)
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Tail(a) => run_task_command(TaskKind::Tail, a),
        Command::Quantiles(a) => run_task_command(TaskKind::Quantiles, a),
        Command::Falsify(a) => run_task_command(TaskKind::Falsify, a),
        Command::AsymptoticMean(a) => run_task_command(TaskKind::AsymptoticMean, a),
        Command::Run(a) => {
            let config = l1dev::cli::parse_config(&std::fs::read_to_string(&a.config)?)?;
            execute(config, a.workers.as_deref(), a.timing, &a.output)
        }
        Command::Report(a) => {
            let report = Report::from_json(&std::fs::read_to_string(&a.input)?)?;
            write_output(&report, &a.output)?;
            Ok(exit_code_for_report(&report))
        }
    }
}

fn run_task_command(kind: TaskKind, a: TaskArgs) -> Result<i32> {
    let config = match &a.config {
        Some(path) => {
            let mut config = l1dev::cli::parse_config(&std::fs::read_to_string(path)?)?;
            config.tasks.retain(|t| t.kind == kind);
            if config.tasks.is_empty() {
                return Err(Error::Usage(format!("{} has no {kind} tasks", path.display())));
            }
            config
        }
        None => config_from_flags(kind, &a)?,
    };
    execute(config, a.workers.as_deref(), a.timing, &a.output)
}

fn config_from_flags(kind: TaskKind, a: &TaskArgs) -> Result<ExperimentConfig> {
    let mut global = RawBlock::default();
    if let Some(seed) = &a.seed {
        global.set("master_seed", seed.as_str());
    }
    if let Some(level) = &a.ci_level {
        global.set("ci_level", level.as_str());
    }
    let mut task = RawBlock::default();
    task.set("kind", kind.as_str());
    let pairs = [
        ("id", &a.id),
        ("S", &a.s),
        ("n", &a.n),
        ("delta", &a.delta),
        ("trials", &a.trials),
        ("D", &a.d),
        ("family", &a.family),
        ("bound", &a.bound),
        ("threshold", &a.threshold),
        ("grid", &a.grid),
    ];
    for (key, value) in pairs {
        if let Some(v) = value {
            task.set(key, v.as_str());
        }
    }
    if a.exact {
        task.set("exact", "true");
    }
    build_config(&global, &[task])
}

/// Flag, then config, then environment; `auto` defers to the next source.
fn resolve_workers(flag: Option<&str>, config: Workers) -> Result<Workers> {
    if let Some(v) = flag {
        return v.parse().map_err(|e: Error| Error::Usage(format!("--workers: {e}")));
    }
    if config != Workers::Auto {
        return Ok(config);
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) if !v.trim().is_empty() => v.parse().map_err(|e: Error| Error::Usage(format!("{WORKERS_ENV}: {e}"))),
        _ => Ok(Workers::Auto),
    }
}

fn execute(mut config: ExperimentConfig, workers: Option<&str>, timing: bool, output: &OutputArgs) -> Result<i32> {
    config.workers = resolve_workers(workers, config.workers)?;
    let start = Instant::now();
    let mut report = run_experiment(&config)?;
    let elapsed = start.elapsed();
    if timing {
        report.runtime_ms = Some(elapsed.as_millis() as u64);
    }
    write_output(&report, output)?;
    let violated = report.rows.iter().filter(|r| r.outcome == Some(l1dev::montecarlo::Outcome::Violated)).count();
    eprintln!("l1dev: {} rows, {violated} violated, {:.2}s", report.rows.len(), elapsed.as_secs_f64());
    Ok(exit_code_for_report(&report))
}

fn write_output(report: &Report, output: &OutputArgs) -> Result<()> {
    let bytes = match &output.plot {
        Some(task_id) => emit_plot_data(report, task_id)?,
        None => emit_report(report, output.format.parse::<Format>()?),
    };
    match &output.out {
        Some(path) => std::fs::write(path, bytes)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(&bytes)?;
        }
    }
    Ok(())
}
