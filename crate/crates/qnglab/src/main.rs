//! Command-line front end: seeded experiment runs, optimizer comparisons,
//! metric dumps, and depth/shot sweeps.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qng_core::{
    fubini_study_metric, qgt_block_diagonal, qgt_diagonal, qgt_exact, CircuitSpec, EvalSession,
    ShotBudget,
};
use qnglab::{
    compare_optimizers, emit_results, run_experiment, sweep, ExperimentConfig, ExperimentTrace,
    HarnessError, OptimizerChoice, OutputFormat, SweepAxis,
};

#[derive(Parser)]
#[command(name = "qnglab", about = "Statevector experiments for natural gradient optimizers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configured optimization and emit its trace.
    Run(RunArgs),
    /// Run several optimizers against the same seed and emit aligned traces.
    Compare(CompareArgs),
    /// Evaluate a metric tensor for a circuit file and dump it as JSON.
    Metric(MetricArgs),
    /// Repeat a comparison across a swept axis (layers=.. or shots=..).
    Sweep(SweepArgs),
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; stdout when omitted (and no config output is set).
    #[arg(long)]
    output: Option<PathBuf>,
    /// csv or json; inferred from the output extension when omitted.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated list, e.g. gd,adam,qng-block,qng-diag.
    #[arg(long)]
    optimizers: String,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct MetricArgs {
    /// Circuit JSON file ({"n_qubits": .., "gates": [..]}).
    #[arg(long)]
    circuit: PathBuf,
    /// JSON array of parameter angles.
    #[arg(long)]
    params: PathBuf,
    /// full | block | diag, or qgt for the complex tensor.
    #[arg(long)]
    mode: String,
    /// Estimate block/diag entries from this many shots instead of exactly.
    #[arg(long)]
    shots: Option<u64>,
    /// Seed for sampled estimation (required with --shots).
    #[arg(long)]
    sample_seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Swept axis, e.g. layers=3,4,5,6 or shots=analytic,1024,8192.
    #[arg(long)]
    vary: String,
    /// Optimizers to compare at each value; defaults to the config's one.
    #[arg(long)]
    optimizers: Option<String>,
    #[command(flatten)]
    out: OutputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn read_to_string(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn load_config(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    ExperimentConfig::from_json(&read_to_string(path)?)
}

fn resolve_format(out: &OutputArgs, path: Option<&Path>) -> Result<OutputFormat, HarnessError> {
    if let Some(f) = &out.format {
        return f.parse();
    }
    Ok(match path.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some("json") => OutputFormat::Json,
        _ => OutputFormat::Csv,
    })
}

fn emit(
    traces: &[ExperimentTrace],
    out: &OutputArgs,
    config_output: Option<&Path>,
) -> Result<(), HarnessError> {
    let path = out.output.as_deref().or(config_output);
    let format = resolve_format(out, path)?;
    match path {
        Some(path) => emit_results(traces, path, format),
        None => {
            let mut stdout = std::io::stdout().lock();
            qnglab::emit_results_to_writer(&mut stdout, traces, format)
        }
    }
}

fn execute(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Run(args) => {
            let config = load_config(&args.config)?;
            match run_experiment(&config) {
                Ok(trace) => emit(&[trace], &args.out, config.output.as_deref()),
                Err(HarnessError::Numerical {
                    run_id,
                    iteration,
                    trace,
                }) => {
                    // surface the partial trace, then report the failure
                    emit(&[*trace.clone()], &args.out, config.output.as_deref())?;
                    Err(HarnessError::Numerical {
                        run_id,
                        iteration,
                        trace,
                    })
                }
                Err(e) => Err(e),
            }
        }
        Command::Compare(args) => {
            let config = load_config(&args.config)?;
            let choices = OptimizerChoice::parse_list(&args.optimizers)?;
            let traces = compare_optimizers(&config, &choices)?;
            emit(&traces, &args.out, config.output.as_deref())
        }
        Command::Sweep(args) => {
            let config = load_config(&args.config)?;
            let axis = SweepAxis::parse(&args.vary)?;
            let choices = match &args.optimizers {
                Some(list) => OptimizerChoice::parse_list(list)?,
                None => vec![config.choice()?],
            };
            let traces = sweep(&config, &axis, &choices)?;
            emit(&traces, &args.out, config.output.as_deref())
        }
        Command::Metric(args) => {
            let spec: CircuitSpec = serde_json::from_str(&read_to_string(&args.circuit)?)
                .map_err(|e| HarnessError::Config(format!("bad circuit file: {e}")))?;
            let circuit = spec.to_circuit()?;
            let params: Vec<f64> = serde_json::from_str(&read_to_string(&args.params)?)
                .map_err(|e| HarnessError::Config(format!("bad params file: {e}")))?;
            let budget = match (args.shots, args.sample_seed) {
                (None, _) => ShotBudget::Analytic,
                (Some(shots), Some(seed)) => ShotBudget::sampled(shots, seed)
                    .map_err(|e| HarnessError::Config(e.to_string()))?,
                (Some(_), None) => {
                    return Err(HarnessError::Config(
                        "--shots requires --sample-seed".into(),
                    ))
                }
            };
            let session = EvalSession::new();
            let value = match args.mode.as_str() {
                "full" => fubini_study_metric(&circuit, &params)?.to_json(),
                "block" => qgt_block_diagonal(&circuit, &params, &budget, &session)?.to_json(),
                "diag" => qgt_diagonal(&circuit, &params, &budget, &session)?.to_json(),
                "qgt" => qgt_exact(&circuit, &params)?.to_json(),
                other => {
                    return Err(HarnessError::Config(format!(
                        "unknown metric mode {other:?} (expected full, block, diag, or qgt)"
                    )))
                }
            };
            let text = serde_json::to_string_pretty(&value)
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            match &args.output {
                Some(path) => fs::write(path, text + "\n").map_err(|e| HarnessError::Io {
                    path: path.clone(),
                    source: e,
                }),
                None => {
                    let mut stdout = std::io::stdout().lock();
                    writeln!(stdout, "{text}").map_err(|e| HarnessError::Io {
                        path: PathBuf::from("<stdout>"),
                        source: e,
                    })
                }
            }
        }
    }
}
