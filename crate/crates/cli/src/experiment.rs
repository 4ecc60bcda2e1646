//! One training run: trace CSV, final checkpoint and a summary file.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use qnn_core::dataset::{self, LabeledSample, SampleStream};
use qnn_core::qnn::Network;
use qnn_core::trainer::{self, stream_rng, BatchRecord, Evaluation, TrainingTrace};

use crate::config::ExperimentConfig;
use crate::CliError;

/// Generator streams of the experiment seed. The trainer itself uses
/// streams 0 and 1.
pub const INIT_STREAM: u64 = 2;
pub const DATA_STREAM: u64 = 3;
pub const TEST_STREAM: u64 = 4;
pub const EVAL_STREAM: u64 = 5;

pub const TEST_BATCH: usize = 100;

pub const TRACE_HEADER: &str = "batch,empirical_loss,expected_loss,optimal_loss";

pub fn write_trace<W: Write>(records: &[BatchRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e}",
            r.batch, r.empirical_loss, r.expected_loss, r.optimal_loss
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub mode: String,
    pub seed: u64,
    pub steps: usize,
    pub samples_consumed: usize,
    pub copies_consumed: Option<usize>,
    /// Fraction of one-shot predictions on the test batch that were correct.
    pub test_accuracy: f64,
    /// `1 −` average expected 0-1 loss on the test batch.
    pub test_expected_accuracy: f64,
    /// `1 −` Helstrom loss of the test batch.
    pub helstrom_accuracy: f64,
}

impl Summary {
    pub fn to_text(&self) -> String {
        let copies = self
            .copies_consumed
            .map_or_else(|| "exact".to_string(), |c| c.to_string());
        format!(
            "mode={}\nseed={}\nsteps={}\nsamples_consumed={}\ncopies_consumed={copies}\n\
             test_accuracy={:.16e}\ntest_expected_accuracy={:.16e}\nhelstrom_accuracy={:.16e}\n",
            self.mode,
            self.seed,
            self.steps,
            self.samples_consumed,
            self.test_accuracy,
            self.test_expected_accuracy,
            self.helstrom_accuracy
        )
    }
}

pub struct Outcome {
    pub network: Network,
    pub trace: TrainingTrace,
    pub summary: Summary,
}

fn runtime(e: qnn_core::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Train and score without touching the filesystem.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let mut network = cfg.network()?;
    let trainer_cfg = cfg.trainer(&network)?;
    trainer::init_parameters(&mut network, &mut stream_rng(cfg.seed, INIT_STREAM));
    let samples = SampleStream::new(stream_rng(cfg.seed, DATA_STREAM));
    let trace = trainer::train(&mut network, samples, &trainer_cfg).map_err(runtime)?;

    let test: Vec<LabeledSample> = SampleStream::new(stream_rng(cfg.seed, TEST_STREAM))
        .take(TEST_BATCH)
        .collect();
    let Evaluation {
        accuracy,
        expected_loss,
    } = trainer::evaluate(
        &network,
        &test,
        &trainer_cfg.loss,
        &mut stream_rng(cfg.seed, EVAL_STREAM),
        1,
    )
    .map_err(runtime)?;
    let helstrom =
        dataset::helstrom_optimal_loss(test.iter().map(LabeledSample::pair)).map_err(runtime)?;

    let summary = Summary {
        mode: trainer_cfg.mode.name().to_string(),
        seed: cfg.seed,
        steps: trace.steps,
        samples_consumed: trace.samples_consumed,
        copies_consumed: trace.copies_consumed,
        test_accuracy: accuracy,
        test_expected_accuracy: 1.0 - expected_loss,
        helstrom_accuracy: 1.0 - helstrom,
    };
    Ok(Outcome {
        network,
        trace,
        summary,
    })
}

pub struct Artifacts {
    pub trace: PathBuf,
    pub checkpoint: PathBuf,
    pub summary: PathBuf,
}

impl Artifacts {
    pub fn in_dir(dir: &Path) -> Self {
        Artifacts {
            trace: dir.join("trace.csv"),
            checkpoint: dir.join("checkpoint.txt"),
            summary: dir.join("summary.txt"),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, CliError> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

/// Run and write `trace.csv`, `checkpoint.txt` and `summary.txt` under the
/// configured output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Summary, CliError> {
    // Validate before creating anything on disk.
    cfg.trainer(&cfg.network()?)?;
    fs::create_dir_all(&cfg.output)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", cfg.output.display())))?;
    let outcome = execute(cfg)?;
    let paths = Artifacts::in_dir(&cfg.output);

    let mut trace = create(&paths.trace)?;
    write_trace(&outcome.trace.records, &mut trace)?;
    trace.flush()?;
    let mut checkpoint = create(&paths.checkpoint)?;
    checkpoint.write_all(qnn_core::checkpoint::to_text(&outcome.network).as_bytes())?;
    checkpoint.flush()?;
    let mut summary = create(&paths.summary)?;
    summary.write_all(outcome.summary.to_text().as_bytes())?;
    summary.flush()?;
    Ok(outcome.summary)
}
