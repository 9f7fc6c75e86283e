use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};
use mmtmlp_cli::{
    cmd_bench, cmd_normalize, cmd_reference_lengths, cmd_sweep, cmd_synth, cmd_train, CliError,
    NormalizeArgs, RunConfig, CONFIG_REFERENCE,
};

/// Multimodal Temporal MLP: synthetic data, training, rate sweeps and CPU benchmarks.
#[derive(Parser)]
#[command(name = "mmtmlp", version, after_long_help = CONFIG_REFERENCE)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. --set train.epochs=5. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// More logging (-v info, -vv debug). RUST_LOG takes precedence.
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic dataset at dataset.path.
    Synth {
        /// Replace an existing dataset directory.
        #[arg(long)]
        force: bool,
    },
    /// Train model.kind at rates.f_rgb / rates.f_hp; writes checkpoint.json and history.csv.
    Train,
    /// Train and measure every grid point; writes results.csv, results.json and pareto.csv.
    Sweep {
        /// Discard completed rows in an existing results.csv instead of reusing them.
        #[arg(long)]
        restart: bool,
    },
    /// Normalize a hand-pose file (wrist origin, reference bone lengths, canonical rotation).
    Normalize(NormalizeCmd),
    /// Measure one-second-window inference CPU time; no training. Writes bench.csv.
    Bench,
    /// Print the resolved configuration as TOML.
    Config,
}

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true)]
struct NormalizeCmd {
    #[command(subcommand)]
    sub: Option<NormalizeSub>,
    /// Input hand-pose file.
    #[arg(short, long)]
    input: Option<PathBuf>,
    /// Output hand-pose file.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Reference bone lengths (`parent child length` lines).
    #[arg(long, conflicts_with = "unit_lengths")]
    lengths: Option<PathBuf>,
    /// Standardize every bone to length 1.
    #[arg(long)]
    unit_lengths: bool,
    /// Fail on the first degenerate hand instead of zeroing it.
    #[arg(long)]
    strict: bool,
    /// Keep left hands in their own chirality. By default they are mirrored
    /// across x, so normalizing an output again flips their z coordinates.
    #[arg(long)]
    no_mirror: bool,
}

#[derive(Subcommand)]
enum NormalizeSub {
    /// Write per-edge mean bone lengths over the training takes of dataset.path.
    ReferenceLengths {
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let load = || RunConfig::load(cli.config.as_deref(), &cli.overrides);
    match cli.command {
        Command::Synth { force } => {
            let out = cmd_synth(&load()?, force)?;
            println!("dataset written to {}", out.display());
        }
        Command::Train => {
            let r = cmd_train(&load()?)?;
            println!(
                "best epoch {}: action F1 {:.4}, verb F1 {:.4}\ncheckpoint {}\nhistory {}",
                r.best_epoch,
                r.evaluation.f1_action,
                r.evaluation.f1_verb,
                r.checkpoint.display(),
                r.history.display()
            );
        }
        Command::Sweep { restart } => {
            let r = cmd_sweep(&load()?, restart)?;
            println!(
                "model_kind,f_rgb,f_hp,macro_f1_action,macro_f1_verb,median_cpu_seconds,status"
            );
            for row in &r.rows {
                println!(
                    "{},{},{},{:.4},{:.4},{:.4e},{}",
                    row.model_kind,
                    row.f_rgb,
                    row.f_hp,
                    row.macro_f1_action,
                    row.macro_f1_verb,
                    row.cpu.median_cpu_seconds,
                    row.status
                );
            }
            println!(
                "{} of {} rows on the Pareto front",
                r.pareto.len(),
                r.rows.len()
            );
        }
        Command::Normalize(n) => match n.sub {
            Some(NormalizeSub::ReferenceLengths { output }) => {
                let lengths = cmd_reference_lengths(&load()?, &output)?;
                println!(
                    "{} bone lengths written to {}",
                    lengths.len(),
                    output.display()
                );
            }
            None => {
                let (Some(input), Some(output)) = (n.input.as_deref(), n.output.as_deref()) else {
                    return Err(CliError::Usage(
                        "normalize needs --input and --output".into(),
                    ));
                };
                let dropped = cmd_normalize(&NormalizeArgs {
                    input,
                    output,
                    lengths: n.lengths.as_deref(),
                    unit_lengths: n.unit_lengths,
                    strict: n.strict,
                    mirror_left: !n.no_mirror,
                })?;
                println!(
                    "wrote {} ({dropped} degenerate hands zeroed)",
                    output.display()
                );
            }
        },
        Command::Bench => {
            println!("model_kind,f_rgb,f_hp,median_cpu_seconds,p10,p90");
            for r in cmd_bench(&load()?)? {
                println!(
                    "{},{},{},{:.4e},{:.4e},{:.4e}",
                    r.point.kind,
                    r.point.f_rgb,
                    r.point.f_hp,
                    r.cpu.median_cpu_seconds,
                    r.cpu.p10,
                    r.cpu.p90
                );
            }
        }
        Command::Config => print!("{}", load()?.to_toml()),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
