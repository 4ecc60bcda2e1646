//! Single-shot derivative measurement and its exact counterparts.
//!
//! For a coefficient `a_s` of a perceptron in layer `l`, the sample is pushed
//! through layers `0..=l`, an ancilla in `|+⟩` is attached as the last qubit,
//! `V_s†` is applied with
//! `V_s = e^{iπ/4 σ^s} ⊗ |0⟩⟨0| + e^{−iπ/4 σ^s} ⊗ |1⟩⟨1|`,
//! the remaining layers act with the ancilla idle, and the register is
//! measured with `Λ_{ŷ,b} = M_ŷ ⊗ |b⟩⟨b|`. The shot value is
//! `z = −2 (−1)^b ℓ(y, ŷ)`, whose mean is
//! `Σ_ŷ i ℓ(y, ŷ) tr(M_ŷ' [σ^s, ρ_mid])` with `M_ŷ'` the readout propagated
//! back through the later layers.

use std::f64::consts::FRAC_1_SQRT_2;
use std::io::{self, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, I};
use crate::pauli::PauliString;
use crate::qnn::{Label, LossFunction, Network, ParameterIndex, Propagator};
use crate::state::{self, DensityOperator, Povm, PovmElement};

#[derive(Clone, Debug, PartialEq)]
pub struct GradientShot {
    pub param: ParameterIndex,
    pub z: f64,
    pub outcome: Label,
    pub ancilla_bit: u8,
}

/// `V_s` for a word on the full register, ancilla appended last.
pub fn build_vs(word: &PauliString) -> CMatrix {
    let sigma = word.matrix();
    let dim = sigma.nrows();
    let id = CMatrix::identity(dim, dim);
    let rotation = |sign: f64| (&id + &sigma * (I * sign)).scale(FRAC_1_SQRT_2);
    let mut out = CMatrix::zeros(2 * dim, 2 * dim);
    let forward = rotation(1.0);
    let backward = rotation(-1.0);
    for r in 0..dim {
        for c in 0..dim {
            out[(2 * r, 2 * c)] = forward[(r, c)];
            out[(2 * r + 1, 2 * c + 1)] = backward[(r, c)];
        }
    }
    out
}

/// `Λ_{ŷ,b} = M_ŷ ⊗ |b⟩⟨b|`, ordered by readout element and then `b = 0, 1`.
pub fn gradient_povm(readout: &Povm<Label>) -> Povm<(Label, u8)> {
    let mut elements = Vec::with_capacity(2 * readout.len());
    for e in readout.elements() {
        for b in 0..2u8 {
            let mut ket = CMatrix::zeros(2, 2);
            ket[(b as usize, b as usize)] = linalg::ONE;
            elements.push(PovmElement {
                label: (e.label, b),
                operator: linalg::kron(&e.operator, &ket),
            });
        }
    }
    Povm::from_elements_unchecked(readout.qubits() + 1, elements)
}

/// The shot value for outcome `(ŷ, b)`.
pub fn shot_value(loss: &LossFunction, y: Label, y_hat: Label, b: u8) -> f64 {
    let sign = if b == 0 { 1.0 } else { -1.0 };
    -2.0 * sign * loss.eval(y, y_hat)
}

fn embedded_word(net: &Network, param: &ParameterIndex) -> Result<PauliString> {
    net.parameter(param)?;
    let qp = net
        .qp(param.layer, param.perceptron)
        .expect("parameter lookup checked the perceptron");
    param.word.embed(qp.support(), net.total_qubits())
}

/// The measurement circuit for one network configuration. Building it once
/// and reusing it across parameters avoids recomputing layer unitaries.
#[derive(Clone, Debug)]
pub struct GradientCircuit<'a> {
    net: &'a Network,
    propagator: Propagator,
    povm: Povm<(Label, u8)>,
}

impl<'a> GradientCircuit<'a> {
    pub fn new(net: &'a Network) -> Result<Self> {
        Ok(GradientCircuit {
            net,
            propagator: net.propagator()?,
            povm: gradient_povm(net.readout_povm()),
        })
    }

    pub fn povm(&self) -> &Povm<(Label, u8)> {
        &self.povm
    }

    /// The ancilla-extended state right before `Λ` is measured.
    pub fn measured_state(
        &self,
        rho: &DensityOperator,
        param: &ParameterIndex,
    ) -> Result<DensityOperator> {
        let word = embedded_word(self.net, param)?;
        let padded = self.net.pad(rho)?;
        let l = param.layer;
        let mid = self.propagator.apply(&padded, 0..l + 1);
        let tilde = state::attach_plus(&mid);
        let rotated = tilde.conjugated_by(&build_vs(&word).adjoint());
        let rest = self.propagator.product(l + 1..self.propagator.len());
        Ok(rotated.conjugated_by(&linalg::kron(&rest, &CMatrix::identity(2, 2))))
    }

    /// Probabilities of every `(ŷ, b)` outcome, in [`gradient_povm`] order.
    pub fn outcome_distribution(
        &self,
        rho: &DensityOperator,
        param: &ParameterIndex,
    ) -> Result<Vec<f64>> {
        state::outcome_distribution(&self.povm, &self.measured_state(rho, param)?)
    }

    fn shot_from(
        &self,
        index: usize,
        y: Label,
        param: &ParameterIndex,
        loss: &LossFunction,
    ) -> GradientShot {
        let (outcome, b) = self.povm.elements()[index].label;
        GradientShot {
            param: param.clone(),
            z: shot_value(loss, y, outcome, b),
            outcome,
            ancilla_bit: b,
        }
    }

    pub fn measure<R: Rng + ?Sized>(
        &self,
        rho: &DensityOperator,
        y: Label,
        param: &ParameterIndex,
        loss: &LossFunction,
        rng: &mut R,
    ) -> Result<GradientShot> {
        let probs = self.outcome_distribution(rho, param)?;
        Ok(self.shot_from(state::sample_index(&probs, rng), y, param, loss))
    }

    /// `E[z]` by summing over all outcomes.
    pub fn expectation(
        &self,
        rho: &DensityOperator,
        y: Label,
        param: &ParameterIndex,
        loss: &LossFunction,
    ) -> Result<f64> {
        let probs = self.outcome_distribution(rho, param)?;
        Ok(probs
            .iter()
            .enumerate()
            .map(|(i, p)| p * self.shot_from(i, y, param, loss).z)
            .sum())
    }

    /// Mean of `shots` independent measurements on identical copies, which
    /// all share one outcome distribution.
    pub fn mean_of_shots<R: Rng + ?Sized>(
        &self,
        rho: &DensityOperator,
        y: Label,
        param: &ParameterIndex,
        loss: &LossFunction,
        shots: usize,
        rng: &mut R,
    ) -> Result<f64> {
        let probs = self.outcome_distribution(rho, param)?;
        let values: Vec<f64> = (0..probs.len())
            .map(|i| self.shot_from(i, y, param, loss).z)
            .collect();
        let total: f64 = (0..shots)
            .map(|_| values[state::sample_index(&probs, rng)])
            .sum();
        Ok(total / shots as f64)
    }
}

pub fn measure_derivative<R: Rng + ?Sized>(
    net: &Network,
    rho: &DensityOperator,
    y: Label,
    param: &ParameterIndex,
    loss: &LossFunction,
    rng: &mut R,
) -> Result<GradientShot> {
    GradientCircuit::new(net)?.measure(rho, y, param, loss, rng)
}

pub fn derivative_expectation(
    net: &Network,
    rho: &DensityOperator,
    y: Label,
    param: &ParameterIndex,
    loss: &LossFunction,
) -> Result<f64> {
    GradientCircuit::new(net)?.expectation(rho, y, param, loss)
}

/// Per layer `l`, the commutator `[ρ_mid, O]` where `O = Σ_ŷ ℓ(y, ŷ) M_ŷ'`.
/// Every derivative in that layer is `i tr(σ^s [ρ_mid, O])`.
fn layer_commutators(
    net: &Network,
    rho: &DensityOperator,
    y: Label,
    loss: &LossFunction,
) -> Result<Vec<CMatrix>> {
    let prop = net.propagator()?;
    let padded = net.pad(rho)?;
    let dim = padded.dim();
    let mut observable = CMatrix::zeros(dim, dim);
    for e in net.readout_povm().elements() {
        let weight = loss.eval(y, e.label);
        if weight != 0.0 {
            observable += e.operator.scale(weight);
        }
    }
    let mut mids = Vec::with_capacity(prop.len());
    let mut current = padded;
    for l in 0..prop.len() {
        current = current.conjugated_by(prop.layer(l));
        mids.push(current.clone());
    }
    // Walk backwards so `observable` is always propagated through the layers
    // after `l`.
    let mut out = vec![CMatrix::zeros(dim, dim); prop.len()];
    for l in (0..prop.len()).rev() {
        let rho_mid = mids[l].matrix();
        out[l] = rho_mid * &observable - &observable * rho_mid;
        let u = prop.layer(l);
        observable = u.adjoint() * &observable * u;
    }
    Ok(out)
}

fn commutator_derivative(commutator: &CMatrix, word: &PauliString) -> f64 {
    let value: C64 = I * word.trace_with(commutator);
    debug_assert!(
        value.im.abs() < 1e-8,
        "derivative has imaginary part {}",
        value.im
    );
    value.re
}

pub fn exact_derivative(
    net: &Network,
    rho: &DensityOperator,
    y: Label,
    param: &ParameterIndex,
    loss: &LossFunction,
) -> Result<f64> {
    let word = embedded_word(net, param)?;
    let commutators = layer_commutators(net, rho, y, loss)?;
    Ok(commutator_derivative(&commutators[param.layer], &word))
}

/// Every derivative, in canonical parameter order.
pub fn exact_gradient(
    net: &Network,
    rho: &DensityOperator,
    y: Label,
    loss: &LossFunction,
) -> Result<Vec<f64>> {
    let commutators = layer_commutators(net, rho, y, loss)?;
    let total = net.total_qubits();
    let mut out = Vec::with_capacity(net.parameter_count());
    for (l, layer) in net.layers().iter().enumerate() {
        for qp in layer {
            for word in qp.words() {
                let embedded = word.embed(qp.support(), total)?;
                out.push(commutator_derivative(&commutators[l], &embedded));
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CopyEstimate {
    pub gradient: Vec<f64>,
    /// Sample copies measured, `n_c · c_QNN`.
    pub copies: usize,
}

/// Every component estimated from `copies_per_component` shots.
pub fn approx_gradient_copies<R: Rng + ?Sized>(
    net: &Network,
    rho: &DensityOperator,
    y: Label,
    copies_per_component: usize,
    loss: &LossFunction,
    rng: &mut R,
) -> Result<CopyEstimate> {
    if copies_per_component == 0 {
        return Err(Error::domain("at least one copy per component is needed"));
    }
    let circuit = GradientCircuit::new(net)?;
    let gradient = net
        .parameter_indices()
        .iter()
        .map(|p| circuit.mean_of_shots(rho, y, p, loss, copies_per_component, rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(CopyEstimate {
        copies: copies_per_component * gradient.len(),
        gradient,
    })
}

/// Shots per component so every component of a `c`-dimensional estimate is
/// within `ε` with probability at least `1 − δ`: each shot lies in
/// `[−2γ, 2γ]`, so Hoeffding with a union bound over the `c` components gives
/// `n_c = ⌈8 γ² ln(2c/δ) / ε²⌉`.
pub fn copies_per_component(epsilon: f64, delta: f64, gamma: f64, c: usize) -> Result<usize> {
    let positive = |x: f64| x > 0.0 && x.is_finite();
    if !positive(epsilon) || !positive(delta) || delta >= 1.0 || !positive(gamma) || c == 0 {
        return Err(Error::domain(format!(
            "need ε > 0, 0 < δ < 1, γ > 0 and c ≥ 1 (got {epsilon}, {delta}, {gamma}, {c})"
        )));
    }
    let n = 8.0 * gamma * gamma * (2.0 * c as f64 / delta).ln() / (epsilon * epsilon);
    Ok(n.ceil() as usize)
}

/// Streams shots as CSV rows `layer,perceptron,word,outcome,ancilla,z`.
pub struct ShotLog<W: Write> {
    out: W,
}

impl<W: Write> ShotLog<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        writeln!(out, "layer,perceptron,word,outcome,ancilla,z")?;
        Ok(ShotLog { out })
    }

    pub fn record(&mut self, shot: &GradientShot) -> io::Result<()> {
        writeln!(
            self.out,
            "{},{},{},{},{},{}",
            shot.param.layer,
            shot.param.perceptron,
            shot.param.word,
            shot.outcome,
            shot.ancilla_bit,
            shot.z
        )
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qnn::tests::{random_density, randomize, single_pauli_net};
    use crate::qnn::{BandLimitedQp, Readout};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn x_param() -> ParameterIndex {
        ParameterIndex {
            layer: 0,
            perceptron: 0,
            word: "1".parse().unwrap(),
        }
    }

    fn random_net(rng: &mut ChaCha8Rng) -> Network {
        let mut net = Network::discrimination_default();
        randomize(&mut net, rng);
        net
    }

    /// Networks on up to four qubits with one or two layers and overlapping
    /// supports.
    fn random_small_net(rng: &mut ChaCha8Rng) -> Network {
        let total = rng.random_range(2..=4usize);
        let layers = rng.random_range(1..=2usize);
        let mut out = Vec::new();
        for _ in 0..layers {
            let count = rng.random_range(1..=2usize);
            let mut layer = Vec::new();
            for _ in 0..count {
                let a = rng.random_range(0..total);
                let mut b = rng.random_range(0..total);
                while b == a {
                    b = rng.random_range(0..total);
                }
                let support = if rng.random_bool(0.3) {
                    vec![a]
                } else {
                    vec![a, b]
                };
                let coeffs = (0..1 << (2 * support.len()))
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect();
                layer.push(BandLimitedQp::new(support, coeffs).unwrap());
            }
            out.push(layer);
        }
        Network::new(2, total, 2, out, Readout::parity(0, 1)).unwrap()
    }

    #[test]
    fn vs_structure() {
        let word: PauliString = "00".parse().unwrap();
        let v = build_vs(&word);
        let phase = C64::from_polar(1.0, PI / 4.0);
        for i in 0..8 {
            let expected = if i % 2 == 0 { phase } else { phase.conj() };
            assert_abs_diff_eq!((v[(i, i)] - expected).norm(), 0.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(
            (v.clone() - CMatrix::from_diagonal(&v.diagonal())).norm(),
            0.0
        );

        let word: PauliString = "213".parse().unwrap();
        let v = build_vs(&word);
        assert!(linalg::unitarity_defect(&v) < 1e-12);
        for r in (0..16).step_by(2) {
            for c in (1..16).step_by(2) {
                assert_eq!(v[(r, c)], linalg::ZERO);
                assert_eq!(v[(c, r)], linalg::ZERO);
            }
        }
    }

    #[test]
    fn gradient_povm_shape() {
        let readout = Readout::parity(0, 1).povm(3).unwrap();
        let povm = gradient_povm(&readout);
        assert_eq!(povm.len(), 4);
        assert_eq!(povm.qubits(), 4);
        let sum = povm
            .elements()
            .iter()
            .fold(CMatrix::zeros(16, 16), |acc, e| acc + &e.operator);
        assert!((sum - CMatrix::identity(16, 16)).norm() < 1e-12);
        assert!(Povm::new(
            povm.elements()
                .iter()
                .map(|e| (e.label, e.operator.clone()))
                .collect()
        )
        .is_ok());
        let with_one = state::tensor(
            &DensityOperator::maximally_mixed(3),
            &DensityOperator::basis(1, 1),
        );
        let probs = state::outcome_distribution(&povm, &with_one).unwrap();
        assert_eq!(probs[0], 0.0);
        assert_eq!(probs[2], 0.0);
    }

    #[test]
    fn toy_derivative() {
        let net = single_pauli_net(PI / 8.0);
        let rho = DensityOperator::basis(1, 0);
        let loss = LossFunction::ZeroOne;
        let target = (PI / 4.0).sin();
        let exact = exact_derivative(&net, &rho, 0, &x_param(), &loss).unwrap();
        let enumerated = derivative_expectation(&net, &rho, 0, &x_param(), &loss).unwrap();
        assert_abs_diff_eq!(exact, target, epsilon = 1e-12);
        assert_abs_diff_eq!(enumerated, target, epsilon = 1e-12);

        let h = 1e-6;
        let at = |a: f64| single_pauli_net(a).expected_loss(&rho, 0, &loss).unwrap();
        let fd = (at(PI / 8.0 + h) - at(PI / 8.0 - h)) / (2.0 * h);
        assert_abs_diff_eq!(fd, exact, epsilon = 1e-5);
    }

    #[test]
    fn toy_shots_are_unbiased() {
        let net = single_pauli_net(PI / 8.0);
        let rho = DensityOperator::basis(1, 0);
        let loss = LossFunction::ZeroOne;
        let circuit = GradientCircuit::new(&net).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..n {
            let shot = circuit
                .measure(&rho, 0, &x_param(), &loss, &mut rng)
                .unwrap();
            assert!(shot.z.abs() <= 2.0);
            assert_eq!(shot.z, shot_value(&loss, 0, shot.outcome, shot.ancilla_bit));
            sum += shot.z;
            sq += shot.z * shot.z;
        }
        let mean = sum / n as f64;
        let sd = (sq / n as f64 - mean * mean).sqrt();
        assert!((mean - (PI / 4.0).sin()).abs() <= 3.0 * sd / (n as f64).sqrt());
    }

    #[test]
    fn vanishing_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let net = random_net(&mut rng);
        let rho = random_density(2, &mut rng);
        let zero = LossFunction::Constant(0.0);
        let constant = LossFunction::Constant(0.7);
        let circuit = GradientCircuit::new(&net).unwrap();
        for param in net.parameter_indices() {
            let shot = circuit.measure(&rho, 1, &param, &zero, &mut rng).unwrap();
            assert_eq!(shot.z.abs(), 0.0);
            assert_abs_diff_eq!(
                circuit.expectation(&rho, 1, &param, &constant).unwrap(),
                0.0,
                epsilon = 1e-12
            );
            if param.word.is_identity() {
                let e = circuit
                    .expectation(&rho, 1, &param, &LossFunction::ZeroOne)
                    .unwrap();
                assert_abs_diff_eq!(e, 0.0, epsilon = 1e-12);
            }
        }
        let grad = exact_gradient(&net, &rho, 1, &LossFunction::ZeroOne).unwrap();
        assert_eq!(grad.len(), 48);
        for (p, g) in net.parameter_indices().iter().zip(&grad) {
            if p.word.is_identity() {
                assert_abs_diff_eq!(*g, 0.0, epsilon = 1e-12);
            }
        }
        assert!(exact_gradient(&net, &rho, 1, &zero)
            .unwrap()
            .iter()
            .all(|g| *g == 0.0));
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let net = Network::discrimination_default();
        let rho = DensityOperator::basis(2, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let bad = ParameterIndex {
            layer: 0,
            perceptron: 5,
            word: "00".parse().unwrap(),
        };
        let loss = LossFunction::ZeroOne;
        assert!(measure_derivative(&net, &rho, 1, &bad, &loss, &mut rng).is_err());
        assert!(derivative_expectation(&net, &rho, 1, &bad, &loss).is_err());
        assert!(exact_derivative(&net, &rho, 1, &bad, &loss).is_err());
        assert!(approx_gradient_copies(&net, &rho, 1, 0, &loss, &mut rng).is_err());
    }

    #[test]
    fn enumeration_matches_commutator_on_default_network() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..5 {
            let net = random_net(&mut rng);
            let rho = random_density(2, &mut rng);
            let y = if rng.random_bool(0.5) { 1 } else { -1 };
            let loss = LossFunction::ZeroOne;
            let grad = exact_gradient(&net, &rho, y, &loss).unwrap();
            let circuit = GradientCircuit::new(&net).unwrap();
            for (p, g) in net.parameter_indices().iter().zip(&grad) {
                let e = circuit.expectation(&rho, y, p, &loss).unwrap();
                assert_abs_diff_eq!(e, *g, epsilon = 1e-10);
                assert_abs_diff_eq!(
                    exact_derivative(&net, &rho, y, p, &loss).unwrap(),
                    *g,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn readout_marginal_averages_plain_and_conjugated_states() {
        // Summing over b, the circuit sees ½(ρ_mid + σ ρ_mid σ).
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let net = random_net(&mut rng);
        let rho = random_density(2, &mut rng);
        let circuit = GradientCircuit::new(&net).unwrap();
        let prop = net.propagator().unwrap();
        let padded = net.pad(&rho).unwrap();
        for p in net.parameter_indices().iter().step_by(7) {
            let sigma = embedded_word(&net, p).unwrap().matrix();
            let mid = prop.apply(&padded, 0..p.layer + 1);
            let flipped = DensityOperator::new(&sigma * mid.matrix() * &sigma).unwrap();
            let rest = prop.product(p.layer + 1..prop.len());
            let plain =
                state::outcome_distribution(net.readout_povm(), &mid.conjugated_by(&rest)).unwrap();
            let conj =
                state::outcome_distribution(net.readout_povm(), &flipped.conjugated_by(&rest))
                    .unwrap();
            let joint = circuit.outcome_distribution(&rho, p).unwrap();
            for k in 0..plain.len() {
                let marginal = joint[2 * k] + joint[2 * k + 1];
                assert_abs_diff_eq!(marginal, 0.5 * (plain[k] + conj[k]), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn randomized_selection_averages_the_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let net = random_net(&mut rng);
        let rho = random_density(2, &mut rng);
        let loss = LossFunction::ZeroOne;
        let circuit = GradientCircuit::new(&net).unwrap();
        let params = net.parameter_indices();
        let mean: f64 = params
            .iter()
            .map(|p| circuit.expectation(&rho, -1, p, &loss).unwrap())
            .sum::<f64>()
            / params.len() as f64;
        let grad = exact_gradient(&net, &rho, -1, &loss).unwrap();
        assert_abs_diff_eq!(
            mean,
            grad.iter().sum::<f64>() / grad.len() as f64,
            epsilon = 1e-12
        );
    }

    #[test]
    fn single_word_generators_match_finite_differences() {
        // Each perceptron carries one nonzero word, so ∂U/∂a = iσU exactly.
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let loss = LossFunction::ZeroOne;
        for _ in 0..4 {
            let mut net = Network::discrimination_default();
            for qp in net.perceptrons_mut() {
                let code = rng.random_range(1..16);
                qp.coefficients_mut()[code] = rng.random_range(-1.0..1.0);
            }
            let rho = random_density(2, &mut rng);
            let grad = exact_gradient(&net, &rho, 1, &loss).unwrap();
            for (p, g) in net.parameter_indices().iter().zip(&grad) {
                if net.parameter(p).unwrap() == 0.0 {
                    continue;
                }
                let h = 1e-6;
                let shifted = |delta: f64| {
                    let mut n = net.clone();
                    n.set_parameter(p, n.parameter(p).unwrap() + delta).unwrap();
                    n.expected_loss(&rho, 1, &loss).unwrap()
                };
                let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
                assert_abs_diff_eq!(fd, *g, epsilon = 1e-5);
            }
        }
    }

    #[test]
    fn copy_estimates_concentrate() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let net = random_net(&mut rng);
        let rho = random_density(2, &mut rng);
        let loss = LossFunction::ZeroOne;
        let n = 100_000;
        let est = approx_gradient_copies(&net, &rho, 1, n, &loss, &mut rng).unwrap();
        assert_eq!(est.copies, n * 48);
        let exact = exact_gradient(&net, &rho, 1, &loss).unwrap();
        let bound = 3.0 * 2.0 / (n as f64).sqrt();
        for (a, b) in est.gradient.iter().zip(&exact) {
            assert!((a - b).abs() <= bound, "{a} vs {b}");
        }
        let zero = approx_gradient_copies(&net, &rho, 1, 3, &LossFunction::Constant(0.0), &mut rng)
            .unwrap();
        assert!(zero.gradient.iter().all(|g| *g == 0.0));
        assert_eq!(zero.copies, 3 * 48);
    }

    #[test]
    fn hoeffding_budget() {
        let n = copies_per_component(0.1, 0.1, 1.0, 48).unwrap();
        assert_eq!(n, (800.0 * 960f64.ln()).ceil() as usize);
        assert!(n as f64 * 48.0 >= 48.0 / 0.01);
        assert!(copies_per_component(0.0, 0.1, 1.0, 48).is_err());
        assert!(copies_per_component(0.1, 1.0, 1.0, 48).is_err());
    }

    #[test]
    fn shot_log_rows() {
        let shot = GradientShot {
            param: ParameterIndex {
                layer: 1,
                perceptron: 0,
                word: "31".parse().unwrap(),
            },
            z: -2.0,
            outcome: 1,
            ancilla_bit: 0,
        };
        let mut log = ShotLog::new(Vec::new()).unwrap();
        log.record(&shot).unwrap();
        let text = String::from_utf8(log.into_inner()).unwrap();
        assert_eq!(
            text,
            "layer,perceptron,word,outcome,ancilla,z\n1,0,31,1,0,-2\n"
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::{any, prop_assert, proptest, ProptestConfig};

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn circuit_mean_is_the_commutator_derivative(seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let net = random_small_net(&mut rng);
                let rho = random_density(2, &mut rng);
                let loss = LossFunction::Table(vec![((1, -1), 1.5), ((1, 1), 0.25), ((-1, 1), 1.0)]);
                let y = if rng.random_bool(0.5) { 1 } else { -1 };
                let grad = exact_gradient(&net, &rho, y, &loss).unwrap();
                let circuit = GradientCircuit::new(&net).unwrap();
                for (p, g) in net.parameter_indices().iter().zip(&grad) {
                    let e = circuit.expectation(&rho, y, p, &loss).unwrap();
                    prop_assert!((e - g).abs() < 1e-10, "{} {} {}", p, e, g);
                    prop_assert!(g.abs() <= 2.0 * loss.bound() + 1e-12);
                }
            }
        }
    }
}
