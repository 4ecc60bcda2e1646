//! WebAssembly entry points for the demo page in `www/`.
//!
//! Each export returns a flat `Float64Array`; the layout is documented on
//! the plain Rust function it wraps.

use qnn_core::dataset::{self, SampleStream, SignedSum};
use qnn_core::gradient::GradientCircuit;
use qnn_core::qnn::{BandLimitedQp, LossFunction, Network, Readout};
use qnn_core::state::DensityOperator;
use qnn_core::trainer::{self, stream_rng, Mode, TrainerConfig};
use qnn_core::Result;
use wasm_bindgen::prelude::*;

fn toy_network(a: f64) -> Result<Network> {
    let qp = BandLimitedQp::new(vec![0], vec![0.0, a, 0.0, 0.0])?;
    let readout = Readout::Computational {
        qubit: 0,
        zero: -1,
        one: 1,
    };
    Network::new(1, 1, 1, vec![vec![qp]], readout)
}

/// For `points` angles evenly spread over `[−π/2, π/2]`, rows of
/// `(a, L(a), dL/da, mean of shots)` for the one-qubit loss `sin²(a)`.
pub fn toy_landscape(points: usize, shots: usize, seed: u64) -> Result<Vec<f64>> {
    let rho = DensityOperator::basis(1, 0);
    let loss = LossFunction::ZeroOne;
    let mut rng = stream_rng(seed, 0);
    let mut out = Vec::with_capacity(4 * points);
    for i in 0..points {
        let a = -std::f64::consts::FRAC_PI_2
            + std::f64::consts::PI * i as f64 / (points.max(2) - 1) as f64;
        let net = toy_network(a)?;
        let param = &net.parameter_indices()[1];
        let circuit = GradientCircuit::new(&net)?;
        out.extend([
            a,
            net.expected_loss(&rho, -1, &loss)?,
            circuit.expectation(&rho, -1, param, &loss)?,
            circuit.mean_of_shots(&rho, -1, param, &loss, shots.max(1), &mut rng)?,
        ]);
    }
    Ok(out)
}

/// Rows of `(m, optimal accuracy of one batch of m samples)` for each size,
/// followed by a final row `(0, population optimum)`.
pub fn helstrom_by_batch_size(sizes: &[usize], seed: u64) -> Result<Vec<f64>> {
    let mut samples = SampleStream::new(stream_rng(seed, 3));
    let mut out = Vec::with_capacity(2 * sizes.len() + 2);
    for &m in sizes {
        let mut signed = SignedSum::new();
        for s in samples.by_ref().take(m.max(1)) {
            signed.add(&s.rho, s.label)?;
        }
        out.extend([m as f64, 1.0 - signed.optimal_loss()?]);
    }
    out.extend([0.0, 1.0 - dataset::population_optimal_loss()]);
    Ok(out)
}

/// Train the default network and return rows of
/// `(batch, empirical loss, expected loss, Helstrom loss)`.
pub fn training_curve(
    exact: bool,
    seed: u64,
    total_samples: usize,
    alpha: f64,
) -> Result<Vec<f64>> {
    let mut net = Network::discrimination_default();
    trainer::init_parameters(&mut net, &mut stream_rng(seed, 2));
    let cfg = TrainerConfig {
        alpha,
        total_samples,
        seed,
        mode: if exact {
            Mode::ExactGradient
        } else {
            Mode::RandomizedQsgd
        },
        ..TrainerConfig::default()
    };
    let trace = trainer::train(&mut net, SampleStream::new(stream_rng(seed, 3)), &cfg)?;
    Ok(trace
        .records
        .iter()
        .flat_map(|r| {
            [
                r.batch as f64,
                r.empirical_loss,
                r.expected_loss,
                r.optimal_loss,
            ]
        })
        .collect())
}

fn js(r: Result<Vec<f64>>) -> std::result::Result<Vec<f64>, JsValue> {
    r.map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen(js_name = toyLandscape)]
pub fn toy_landscape_js(
    points: usize,
    shots: usize,
    seed: u32,
) -> std::result::Result<Vec<f64>, JsValue> {
    js(toy_landscape(points, shots, seed as u64))
}

#[wasm_bindgen(js_name = helstromByBatchSize)]
pub fn helstrom_by_batch_size_js(
    sizes: Vec<u32>,
    seed: u32,
) -> std::result::Result<Vec<f64>, JsValue> {
    let sizes: Vec<usize> = sizes.into_iter().map(|m| m as usize).collect();
    js(helstrom_by_batch_size(&sizes, seed as u64))
}

#[wasm_bindgen(js_name = trainingCurve)]
pub fn training_curve_js(
    exact: bool,
    seed: u32,
    total_samples: usize,
    alpha: f64,
) -> std::result::Result<Vec<f64>, JsValue> {
    js(training_curve(exact, seed as u64, total_samples, alpha))
}
