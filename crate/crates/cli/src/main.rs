use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qsgd_cli::config::ExperimentConfig;
use qsgd_cli::{acceptance, experiment, plot, CliError};

#[derive(Parser)]
#[command(name = "qsgd", version, about = "Randomized quantum SGD experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a network and write trace.csv, checkpoint.txt and summary.txt.
    Run(RunArgs),
    /// Split a trace CSV into one `batch value` file per curve.
    PlotData {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Dump labelled samples as CSV.
    Dataset {
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run the acceptance checks, optionally only the listed ones.
    Acceptance { only: Vec<u8> },
}

#[derive(Args)]
struct RunArgs {
    /// Flat key = value file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    total_samples: Option<String>,
    #[arg(long)]
    batch_size: Option<String>,
    #[arg(long)]
    copies_per_component: Option<String>,
    #[arg(long)]
    architecture: Option<String>,
    #[arg(long)]
    output: Option<String>,
}

fn experiment_config(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        cfg.apply_file(&text)?;
    }
    let overrides = [
        ("mode", &args.mode),
        ("seed", &args.seed),
        ("alpha", &args.alpha),
        ("total_samples", &args.total_samples),
        ("batch_size", &args.batch_size),
        ("copies_per_component", &args.copies_per_component),
        ("architecture", &args.architecture),
        ("output", &args.output),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    Ok(cfg)
}

fn dump_dataset(count: usize, seed: u64, output: &PathBuf) -> Result<(), CliError> {
    let samples: Vec<_> = qnn_core::dataset::SampleStream::new(qnn_core::trainer::stream_rng(
        seed,
        experiment::DATA_STREAM,
    ))
    .take(count)
    .collect();
    let file = std::fs::File::create(output)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", output.display())))?;
    let mut out = std::io::BufWriter::new(file);
    qnn_core::dataset::write_csv(&samples, &mut out)?;
    std::io::Write::flush(&mut out)?;
    Ok(())
}

fn dispatch(command: Command) -> Result<ExitCode, CliError> {
    match command {
        Command::Run(args) => {
            let cfg = experiment_config(&args)?;
            let summary = experiment::run_experiment(&cfg)?;
            print!("{}", summary.to_text());
            println!("output={}", cfg.output.display());
        }
        Command::PlotData { trace, output } => {
            for path in plot::emit_plot_data(&trace, &output)? {
                println!("{}", path.display());
            }
        }
        Command::Dataset {
            count,
            seed,
            output,
        } => dump_dataset(count, seed, &output)?,
        Command::Acceptance { only } => {
            let results = acceptance::run(&only, |r| println!("{r}"));
            let failed = results.iter().filter(|r| !r.passed).count();
            println!("{} passed, {failed} failed", results.len() - failed);
            if failed > 0 {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("qsgd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
