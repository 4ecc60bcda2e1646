//! Randomized QSGD and the gradient-based baselines.
//!
//! Every step consumes one fresh sample. In randomized mode a single
//! coefficient is chosen (perceptron uniformly, then word uniformly), one
//! derivative shot is measured and only that coefficient moves by `−η_t z`
//! with `η_t = α/√t`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{LabeledSample, SignedSum};
use crate::error::{Error, Result};
use crate::gradient::{self, GradientShot};
use crate::qnn::{LossFunction, Network, ParameterIndex};
use crate::state::DensityOperator;

pub const DEFAULT_ALPHA: f64 = 0.77;

/// A generator on stream `stream` of `seed`, so independent consumers of one
/// seed never share random numbers.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Streams used inside [`train`].
const STEP_STREAM: u64 = 0;
const METRIC_STREAM: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    RandomizedQsgd,
    ExactGradient,
    /// Full gradient estimated from `copies_per_component` copies of each
    /// sample per coefficient.
    CopyApprox {
        copies_per_component: usize,
    },
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::RandomizedQsgd => "randomized-qsgd",
            Mode::ExactGradient => "exact-gradient",
            Mode::CopyApprox { .. } => "copy-approx",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainerConfig {
    pub alpha: f64,
    /// Samples to consume; in copy-approx mode, copies.
    pub total_samples: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub mode: Mode,
    pub loss: LossFunction,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            alpha: DEFAULT_ALPHA,
            total_samples: 30_000,
            batch_size: 100,
            seed: 0,
            mode: Mode::RandomizedQsgd,
            loss: LossFunction::ZeroOne,
        }
    }
}

impl TrainerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::domain(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if self.total_samples == 0 {
            return Err(Error::domain("total_samples must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::domain("batch_size must be at least 1"));
        }
        if let Mode::CopyApprox {
            copies_per_component: 0,
        } = self.mode
        {
            return Err(Error::domain("copies_per_component must be at least 1"));
        }
        Ok(())
    }

    /// `η_t = α/√t` for `t ≥ 1`.
    pub fn learning_rate(&self, t: usize) -> f64 {
        self.alpha / (t as f64).sqrt()
    }

    /// Gradient steps this configuration performs for `net`.
    pub fn steps(&self, net: &Network) -> usize {
        match self.mode {
            Mode::CopyApprox {
                copies_per_component,
            } => self.total_samples / (copies_per_component * net.parameter_count()),
            _ => self.total_samples,
        }
    }
}

/// Every coefficient drawn independently from `U[−1, 1]`, in canonical order.
pub fn init_parameters<R: Rng + ?Sized>(net: &mut Network, rng: &mut R) {
    for qp in net.perceptrons_mut() {
        for a in qp.coefficients_mut() {
            *a = rng.random_range(-1.0..=1.0);
        }
    }
}

/// Perceptron uniformly among all perceptrons, then word uniformly among its
/// coefficients.
pub fn select_parameter<R: Rng + ?Sized>(net: &Network, rng: &mut R) -> ParameterIndex {
    let m = net.perceptron_count();
    let mut pick = rng.random_range(0..m);
    for (layer, qps) in net.layers().iter().enumerate() {
        if pick < qps.len() {
            let qp = &qps[pick];
            let code = rng.random_range(0..qp.coefficients().len());
            return ParameterIndex {
                layer,
                perceptron: pick,
                word: crate::pauli::PauliString::from_code(code, qp.support().len()),
            };
        }
        pick -= qps.len();
    }
    unreachable!("pick is below the perceptron count")
}

/// One randomized step at time `t ≥ 1`; the sample is consumed.
pub fn qsgd_step<R: Rng + ?Sized>(
    net: &mut Network,
    sample: LabeledSample,
    t: usize,
    cfg: &TrainerConfig,
    rng: &mut R,
) -> Result<GradientShot> {
    if t == 0 {
        return Err(Error::domain("steps are counted from 1"));
    }
    let param = select_parameter(net, rng);
    let shot =
        gradient::measure_derivative(net, &sample.rho, sample.label, &param, &cfg.loss, rng)?;
    let value = net.parameter(&param)?;
    net.set_parameter(&param, value - cfg.learning_rate(t) * shot.z)?;
    Ok(shot)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchRecord {
    pub batch: usize,
    pub empirical_loss: f64,
    pub expected_loss: f64,
    pub optimal_loss: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingTrace {
    pub records: Vec<BatchRecord>,
    pub final_parameters: Vec<f64>,
    /// Mean of the iterates `a^(1), …, a^(T)` seen before each update.
    pub averaged_parameters: Vec<f64>,
    pub steps: usize,
    /// Distinct samples drawn from the stream.
    pub samples_consumed: usize,
    /// Sample copies measured; `None` when gradients are computed exactly.
    pub copies_consumed: Option<usize>,
}

/// Per-batch diagnostics. The snapshot is simulator bookkeeping: training
/// never reads it, and it is scored with the parameters in force once the
/// batch's updates are done.
struct BatchMetrics {
    snapshot: Vec<(DensityOperator, i32)>,
    signed: SignedSum,
}

impl BatchMetrics {
    fn new() -> Self {
        BatchMetrics {
            snapshot: Vec::new(),
            signed: SignedSum::new(),
        }
    }

    fn push(&mut self, sample: &LabeledSample) -> Result<()> {
        self.signed.add(&sample.rho, sample.label)?;
        self.snapshot.push((sample.rho.clone(), sample.label));
        Ok(())
    }

    fn close<R: Rng>(
        &mut self,
        batch: usize,
        net: &Network,
        loss: &LossFunction,
        rng: &mut R,
    ) -> Result<BatchRecord> {
        let expected =
            net.average_expected_loss(self.snapshot.iter().map(|(r, y)| (r, *y)), loss)?;
        let mut empirical = 0.0;
        for (rho, y) in &self.snapshot {
            empirical += loss.eval(*y, net.predict(rho, rng)?);
        }
        let record = BatchRecord {
            batch,
            empirical_loss: empirical / self.snapshot.len() as f64,
            expected_loss: expected,
            optimal_loss: self.signed.optimal_loss()?,
        };
        *self = BatchMetrics::new();
        Ok(record)
    }
}

/// Train `net` in place from a stream of fresh samples.
pub fn train<I>(net: &mut Network, samples: I, cfg: &TrainerConfig) -> Result<TrainingTrace>
where
    I: IntoIterator<Item = LabeledSample>,
{
    cfg.validate()?;
    let steps = cfg.steps(net);
    if steps == 0 {
        return Err(Error::domain(format!(
            "a budget of {} copies does not cover one copy-approx step",
            cfg.total_samples
        )));
    }
    let mut step_rng = stream_rng(cfg.seed, STEP_STREAM);
    let mut metric_rng = stream_rng(cfg.seed, METRIC_STREAM);
    let c = net.parameter_count();
    let mut averaged = vec![0.0; c];
    let mut records = Vec::with_capacity(steps.div_ceil(cfg.batch_size));
    let mut metrics = BatchMetrics::new();
    let mut copies = 0usize;
    let mut stream = samples.into_iter();

    for t in 1..=steps {
        let sample = stream.next().ok_or(Error::StreamExhausted {
            step: t,
            required: steps,
        })?;
        for (acc, a) in averaged.iter_mut().zip(net.parameters()) {
            *acc += (a - *acc) / t as f64;
        }
        metrics.push(&sample)?;
        let eta = cfg.learning_rate(t);
        match cfg.mode {
            Mode::RandomizedQsgd => {
                qsgd_step(net, sample, t, cfg, &mut step_rng)?;
                copies += 1;
            }
            Mode::ExactGradient => {
                let grad = gradient::exact_gradient(net, &sample.rho, sample.label, &cfg.loss)?;
                descend(net, &grad, eta)?;
            }
            Mode::CopyApprox {
                copies_per_component,
            } => {
                let est = gradient::approx_gradient_copies(
                    net,
                    &sample.rho,
                    sample.label,
                    copies_per_component,
                    &cfg.loss,
                    &mut step_rng,
                )?;
                copies += est.copies;
                descend(net, &est.gradient, eta)?;
            }
        }
        if t % cfg.batch_size == 0 || t == steps {
            records.push(metrics.close(records.len(), net, &cfg.loss, &mut metric_rng)?);
        }
    }

    Ok(TrainingTrace {
        records,
        final_parameters: net.parameters(),
        averaged_parameters: averaged,
        steps,
        samples_consumed: steps,
        copies_consumed: match cfg.mode {
            Mode::ExactGradient => None,
            _ => Some(copies),
        },
    })
}

fn descend(net: &mut Network, grad: &[f64], eta: f64) -> Result<()> {
    let updated: Vec<f64> = net
        .parameters()
        .iter()
        .zip(grad)
        .map(|(a, g)| a - eta * g)
        .collect();
    net.set_parameters(&updated)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    /// Fraction of predictions equal to the label.
    pub accuracy: f64,
    pub expected_loss: f64,
}

/// Accuracy from `shots_per_sample` predictions per sample, and the batch's
/// average expected loss.
pub fn evaluate<R: Rng + ?Sized>(
    net: &Network,
    test_batch: &[LabeledSample],
    loss: &LossFunction,
    rng: &mut R,
    shots_per_sample: usize,
) -> Result<Evaluation> {
    if test_batch.is_empty() {
        return Err(Error::domain("evaluation needs a non-empty batch"));
    }
    if shots_per_sample == 0 {
        return Err(Error::domain(
            "evaluation needs at least one shot per sample",
        ));
    }
    let mut correct = 0usize;
    for s in test_batch {
        for _ in 0..shots_per_sample {
            if net.predict(&s.rho, rng)? == s.label {
                correct += 1;
            }
        }
    }
    Ok(Evaluation {
        accuracy: correct as f64 / (test_batch.len() * shots_per_sample) as f64,
        expected_loss: net
            .average_expected_loss(test_batch.iter().map(LabeledSample::pair), loss)?,
    })
}
