//! Band-limited quantum perceptrons and the feed-forward networks built from
//! them.
//!
//! A perceptron is `U = exp(i Σ_s a_s σ^s)` where the words `s` live on a
//! support `J` of at most `k` qubits. A layer applies its perceptrons in
//! declaration order and the network applies its layers in order, so
//! `U_QNN = U_L ⋯ U_1` with `U_l = U_{l,m_l} ⋯ U_{l,1}`. The sample occupies
//! the leading qubits and is padded with `|0⟩` auxiliaries up to the full
//! register before the first layer.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ONE};
use crate::pauli::{FourierSpectrum, PauliString};
use crate::state::{self, DensityOperator, Povm};

/// Classical label carried by samples and readout outcomes.
pub type Label = i32;

#[derive(Clone, Debug, PartialEq)]
pub struct BandLimitedQp {
    support: Vec<usize>,
    coefficients: Vec<f64>,
}

impl BandLimitedQp {
    /// `coefficients[c]` is the coefficient of `PauliString::from_code(c, |J|)`.
    pub fn new(support: Vec<usize>, coefficients: Vec<f64>) -> Result<Self> {
        let expected = 1usize << (2 * support.len());
        if coefficients.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: coefficients.len(),
            });
        }
        // Only distinctness here; the register bound is checked by `Network`.
        linalg::check_support(&support, usize::MAX)?;
        Ok(BandLimitedQp {
            support,
            coefficients,
        })
    }

    pub fn zeros(support: Vec<usize>) -> Result<Self> {
        let n = 1usize << (2 * support.len());
        Self::new(support, vec![0.0; n])
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coefficients
    }

    pub fn coefficient(&self, word: &PauliString) -> f64 {
        self.coefficients[word.code()]
    }

    pub fn words(&self) -> impl Iterator<Item = PauliString> {
        PauliString::all(self.support.len())
    }

    pub fn spectrum(&self) -> FourierSpectrum {
        FourierSpectrum::from_coefficients(self.support.len(), self.coefficients.clone())
            .expect("coefficient count checked at construction")
    }

    /// The local `2^|J|` Hermitian generator `Σ_s a_s σ^s`.
    pub fn generator(&self) -> CMatrix {
        let n = self.support.len();
        let dim = linalg::dim_of(n);
        let mut h = CMatrix::zeros(dim, dim);
        for (code, &a) in self.coefficients.iter().enumerate() {
            if a != 0.0 {
                h += PauliString::from_code(code, n).matrix().scale(a);
            }
        }
        h
    }

    pub fn local_unitary(&self) -> CMatrix {
        linalg::exp_i_hermitian(&self.generator())
    }
}

/// `exp(i Σ_s a_s σ^s)` on the perceptron's support, identity elsewhere.
pub fn qp_unitary(qp: &BandLimitedQp, total_qubits: usize) -> Result<CMatrix> {
    linalg::embed(&qp.local_unitary(), &qp.support, total_qubits)
}

/// The classification measurement applied after the last layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Readout {
    /// `{|00⟩⟨00| + |11⟩⟨11|, |01⟩⟨01| + |10⟩⟨10|}` on two qubits.
    Parity {
        qubits: [usize; 2],
        even: Label,
        odd: Label,
    },
    /// `{|0⟩⟨0|, |1⟩⟨1|}` on one qubit.
    Computational {
        qubit: usize,
        zero: Label,
        one: Label,
    },
}

impl Readout {
    /// Parity of qubits `a` and `b`, even parity reported as −1 and odd as +1.
    pub fn parity(a: usize, b: usize) -> Self {
        Readout::Parity {
            qubits: [a, b],
            even: -1,
            odd: 1,
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Readout::Parity { qubits, .. } => qubits.to_vec(),
            Readout::Computational { qubit, .. } => vec![*qubit],
        }
    }

    pub fn povm(&self, total_qubits: usize) -> Result<Povm<Label>> {
        let projector = |support: &[usize], diag: &[f64]| -> Result<CMatrix> {
            let local = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                diag.len(),
                diag.iter().map(|&x| ONE * x),
            ));
            linalg::embed(&local, support, total_qubits)
        };
        let elements = match self {
            Readout::Parity { qubits, even, odd } => {
                if even == odd {
                    return Err(Error::domain("parity readout labels must differ"));
                }
                vec![
                    (*even, projector(qubits, &[1.0, 0.0, 0.0, 1.0])?),
                    (*odd, projector(qubits, &[0.0, 1.0, 1.0, 0.0])?),
                ]
            }
            Readout::Computational { qubit, zero, one } => {
                if zero == one {
                    return Err(Error::domain("computational readout labels must differ"));
                }
                vec![
                    (*zero, projector(&[*qubit], &[1.0, 0.0])?),
                    (*one, projector(&[*qubit], &[0.0, 1.0])?),
                ]
            }
        };
        Povm::new(elements)
    }
}

/// `ℓ(y, ŷ)` over a finite label set.
#[derive(Clone, Debug, Default, PartialEq)]
pub enum LossFunction {
    #[default]
    ZeroOne,
    Constant(f64),
    /// Explicit `((y, ŷ), ℓ)` entries; pairs not listed cost nothing.
    Table(Vec<((Label, Label), f64)>),
}

impl LossFunction {
    pub fn eval(&self, y: Label, y_hat: Label) -> f64 {
        match self {
            LossFunction::ZeroOne => {
                if y == y_hat {
                    0.0
                } else {
                    1.0
                }
            }
            LossFunction::Constant(c) => *c,
            LossFunction::Table(entries) => entries
                .iter()
                .find(|((a, b), _)| *a == y && *b == y_hat)
                .map_or(0.0, |(_, v)| *v),
        }
    }

    /// `γ = max |ℓ|`.
    pub fn bound(&self) -> f64 {
        match self {
            LossFunction::ZeroOne => 1.0,
            LossFunction::Constant(c) => c.abs(),
            LossFunction::Table(entries) => entries.iter().fold(0.0f64, |m, (_, v)| m.max(v.abs())),
        }
    }
}

/// Address of one Fourier coefficient: perceptron `perceptron` of layer
/// `layer` (both zero-based), word local to that perceptron's support.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParameterIndex {
    pub layer: usize,
    pub perceptron: usize,
    pub word: PauliString,
}

impl fmt::Display for ParameterIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.layer, self.perceptron, self.word)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    sample_qubits: usize,
    total_qubits: usize,
    bandwidth: usize,
    layers: Vec<Vec<BandLimitedQp>>,
    readout: Readout,
    povm: Povm<Label>,
}

impl Network {
    pub fn new(
        sample_qubits: usize,
        total_qubits: usize,
        bandwidth: usize,
        layers: Vec<Vec<BandLimitedQp>>,
        readout: Readout,
    ) -> Result<Self> {
        if total_qubits < sample_qubits {
            return Err(Error::domain(format!(
                "register of {total_qubits} qubits cannot hold a {sample_qubits}-qubit sample"
            )));
        }
        for (l, layer) in layers.iter().enumerate() {
            for (j, qp) in layer.iter().enumerate() {
                if qp.support.len() > bandwidth {
                    return Err(Error::domain(format!(
                        "perceptron ({l}, {j}) acts on {} qubits, bandwidth is {bandwidth}",
                        qp.support.len()
                    )));
                }
                linalg::check_support(&qp.support, total_qubits)?;
            }
        }
        linalg::check_support(&readout.qubits(), total_qubits)?;
        let povm = readout.povm(total_qubits)?;
        Ok(Network {
            sample_qubits,
            total_qubits,
            bandwidth,
            layers,
            readout,
            povm,
        })
    }

    /// The two-sample-qubit discrimination network: two `|0⟩` auxiliaries,
    /// layer 1 couples each sample qubit to its own auxiliary (qubits {0, 2}
    /// and {1, 3}), layer 2 couples the two sample qubits, and the parity of
    /// qubits {0, 1} is read out. `k = 2`, so `c_QNN = 3 · 16 = 48`. All
    /// coefficients start at zero.
    pub fn discrimination_default() -> Self {
        let qp = |s: &[usize]| BandLimitedQp::zeros(s.to_vec()).expect("valid support");
        Network::new(
            2,
            4,
            2,
            vec![vec![qp(&[0, 2]), qp(&[1, 3])], vec![qp(&[0, 1])]],
            Readout::parity(0, 1),
        )
        .expect("default architecture is valid")
    }

    pub fn sample_qubits(&self) -> usize {
        self.sample_qubits
    }

    pub fn total_qubits(&self) -> usize {
        self.total_qubits
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn layers(&self) -> &[Vec<BandLimitedQp>] {
        &self.layers
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn perceptron_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn readout(&self) -> &Readout {
        &self.readout
    }

    pub fn readout_povm(&self) -> &Povm<Label> {
        &self.povm
    }

    pub fn labels(&self) -> Vec<Label> {
        self.povm.labels().copied().collect()
    }

    pub fn qp(&self, layer: usize, perceptron: usize) -> Option<&BandLimitedQp> {
        self.layers.get(layer)?.get(perceptron)
    }

    /// Total number of addressable coefficients, `c_QNN`.
    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .flatten()
            .map(|qp| qp.coefficients.len())
            .sum()
    }

    /// Every parameter in canonical `(layer, perceptron, word)` order.
    pub fn parameter_indices(&self) -> Vec<ParameterIndex> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for (layer, qps) in self.layers.iter().enumerate() {
            for (perceptron, qp) in qps.iter().enumerate() {
                out.extend(qp.words().map(|word| ParameterIndex {
                    layer,
                    perceptron,
                    word,
                }));
            }
        }
        out
    }

    fn locate(&self, idx: &ParameterIndex) -> Result<&BandLimitedQp> {
        let qp = self.qp(idx.layer, idx.perceptron).ok_or_else(|| {
            Error::domain(format!(
                "no perceptron at layer {} index {}",
                idx.layer, idx.perceptron
            ))
        })?;
        if idx.word.len() != qp.support.len() {
            return Err(Error::domain(format!(
                "word {} does not fit a perceptron on {} qubits",
                idx.word,
                qp.support.len()
            )));
        }
        Ok(qp)
    }

    pub fn parameter(&self, idx: &ParameterIndex) -> Result<f64> {
        Ok(self.locate(idx)?.coefficient(&idx.word))
    }

    pub fn set_parameter(&mut self, idx: &ParameterIndex, value: f64) -> Result<()> {
        self.locate(idx)?;
        self.layers[idx.layer][idx.perceptron].coefficients[idx.word.code()] = value;
        Ok(())
    }

    /// Canonical position of `idx` in [`Network::parameters`].
    pub fn flat_position(&self, idx: &ParameterIndex) -> Result<usize> {
        self.locate(idx)?;
        let before: usize = self
            .layers
            .iter()
            .enumerate()
            .flat_map(|(l, layer)| layer.iter().enumerate().map(move |(j, qp)| (l, j, qp)))
            .take_while(|(l, j, _)| (*l, *j) < (idx.layer, idx.perceptron))
            .map(|(_, _, qp)| qp.coefficients.len())
            .sum();
        Ok(before + idx.word.code())
    }

    /// All coefficients, flattened in canonical order.
    pub fn parameters(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flatten()
            .flat_map(|qp| qp.coefficients.iter().copied())
            .collect()
    }

    pub fn set_parameters(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.parameter_count() {
            return Err(Error::DimensionMismatch {
                expected: self.parameter_count(),
                found: values.len(),
            });
        }
        let mut rest = values;
        for qp in self.layers.iter_mut().flatten() {
            let (head, tail) = rest.split_at(qp.coefficients.len());
            qp.coefficients.copy_from_slice(head);
            rest = tail;
        }
        Ok(())
    }

    pub fn perceptrons_mut(&mut self) -> impl Iterator<Item = &mut BandLimitedQp> {
        self.layers.iter_mut().flatten()
    }

    /// `U_l = U_{l,m_l} ⋯ U_{l,1}`.
    pub fn layer_unitary(&self, layer: usize) -> Result<CMatrix> {
        let qps = self
            .layers
            .get(layer)
            .ok_or_else(|| Error::domain(format!("no layer {layer}")))?;
        let dim = linalg::dim_of(self.total_qubits);
        qps.iter().try_fold(CMatrix::identity(dim, dim), |acc, qp| {
            Ok(qp_unitary(qp, self.total_qubits)? * acc)
        })
    }

    /// All layer unitaries, evaluated once.
    pub fn propagator(&self) -> Result<Propagator> {
        let layers = (0..self.layers.len())
            .map(|l| self.layer_unitary(l))
            .collect::<Result<Vec<_>>>()?;
        Ok(Propagator { layers })
    }

    /// `U_QNN = U_L ⋯ U_1`.
    pub fn network_unitary(&self) -> Result<CMatrix> {
        Ok(self.propagator()?.product(0..self.layers.len()))
    }

    /// `ρ ⊗ |0…0⟩⟨0…0|` up to the full register.
    pub fn pad(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        if rho.qubits() != self.sample_qubits {
            return Err(Error::DimensionMismatch {
                expected: linalg::dim_of(self.sample_qubits),
                found: rho.dim(),
            });
        }
        Ok(state::pad_sample(
            rho,
            self.total_qubits - self.sample_qubits,
        ))
    }

    fn check_register(&self, rho: &DensityOperator) -> Result<()> {
        if rho.qubits() != self.total_qubits {
            return Err(Error::DimensionMismatch {
                expected: linalg::dim_of(self.total_qubits),
                found: rho.dim(),
            });
        }
        Ok(())
    }

    /// Output of the first `layers` layers on an already padded state.
    pub fn forward_through(
        &self,
        padded: &DensityOperator,
        layers: usize,
    ) -> Result<DensityOperator> {
        self.check_register(padded)?;
        if layers > self.layers.len() {
            return Err(Error::domain(format!(
                "network has {} layers, asked for {layers}",
                self.layers.len()
            )));
        }
        Ok(self.propagator()?.apply(padded, 0..layers))
    }

    pub fn forward(&self, padded: &DensityOperator) -> Result<DensityOperator> {
        self.forward_through(padded, self.layers.len())
    }

    /// Readout outcome probabilities for an unpadded sample, in readout order.
    pub fn outcome_distribution(&self, rho: &DensityOperator) -> Result<Vec<f64>> {
        let out = self.forward(&self.pad(rho)?)?;
        state::outcome_distribution(&self.povm, &out)
    }

    /// Sample a predicted label for an unpadded sample.
    pub fn predict<R: Rng + ?Sized>(&self, rho: &DensityOperator, rng: &mut R) -> Result<Label> {
        let out = self.forward(&self.pad(rho)?)?;
        state::measure(&self.povm, &out, rng)
    }

    /// `L(a, ρ, y) = Σ_ŷ ℓ(y, ŷ) tr(M_ŷ U ρ' U†)`.
    pub fn expected_loss(
        &self,
        rho: &DensityOperator,
        y: Label,
        loss: &LossFunction,
    ) -> Result<f64> {
        let probs = self.outcome_distribution(rho)?;
        Ok(self.weigh(&probs, y, loss))
    }

    fn weigh(&self, probs: &[f64], y: Label, loss: &LossFunction) -> f64 {
        self.povm
            .labels()
            .zip(probs)
            .map(|(&y_hat, p)| loss.eval(y, y_hat) * p)
            .sum()
    }

    /// Mean of [`Network::expected_loss`] over a non-empty batch.
    pub fn average_expected_loss<'a, I>(&self, batch: I, loss: &LossFunction) -> Result<f64>
    where
        I: IntoIterator<Item = (&'a DensityOperator, Label)>,
    {
        let prop = self.propagator()?;
        let u = prop.product(0..self.layers.len());
        let mut total = 0.0;
        let mut count = 0usize;
        for (rho, y) in batch {
            let out = self.pad(rho)?.conjugated_by(&u);
            let probs = state::outcome_distribution(&self.povm, &out)?;
            total += self.weigh(&probs, y, loss);
            count += 1;
        }
        if count == 0 {
            return Err(Error::domain("average expected loss of an empty batch"));
        }
        Ok(total / count as f64)
    }
}

/// Layer unitaries of a network at fixed parameters.
#[derive(Clone, Debug)]
pub struct Propagator {
    layers: Vec<CMatrix>,
}

impl Propagator {
    pub fn layer(&self, l: usize) -> &CMatrix {
        &self.layers[l]
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    /// Product of the layers in `range`, the last one leftmost.
    pub fn product(&self, range: std::ops::Range<usize>) -> CMatrix {
        let dim = self.layers.first().map_or(1, CMatrix::nrows);
        self.layers[range]
            .iter()
            .fold(CMatrix::identity(dim, dim), |acc, u| u * acc)
    }

    pub fn apply(&self, rho: &DensityOperator, range: std::ops::Range<usize>) -> DensityOperator {
        self.layers[range]
            .iter()
            .fold(rho.clone(), |acc, u| acc.conjugated_by(u))
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::pauli::single_pauli;
    use crate::state::from_ket;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        a.shape() == b.shape() && (a - b).iter().all(|z| z.norm() < tol)
    }

    /// One qubit, one perceptron with only the σ^x coefficient set.
    pub(crate) fn single_pauli_net(a: f64) -> Network {
        let mut coeffs = vec![0.0; 4];
        coeffs[1] = a;
        let qp = BandLimitedQp::new(vec![0], coeffs).unwrap();
        let readout = Readout::Computational {
            qubit: 0,
            zero: 0,
            one: 1,
        };
        Network::new(1, 1, 1, vec![vec![qp]], readout).unwrap()
    }

    pub(crate) fn randomize(net: &mut Network, rng: &mut ChaCha8Rng) {
        let values: Vec<f64> = (0..net.parameter_count())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        net.set_parameters(&values).unwrap();
    }

    pub(crate) fn random_density(qubits: usize, rng: &mut ChaCha8Rng) -> DensityOperator {
        let dim = linalg::dim_of(qubits);
        let g = CMatrix::from_fn(dim, dim, |_, _| {
            crate::linalg::C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let m = &g * g.adjoint();
        let tr = linalg::trace(&m).re;
        DensityOperator::new(m.unscale(tr)).unwrap()
    }

    #[test]
    fn qp_shapes_are_validated() {
        assert!(BandLimitedQp::new(vec![0, 1], vec![0.0; 15]).is_err());
        assert!(BandLimitedQp::new(vec![1, 1], vec![0.0; 16]).is_err());
        let qp = BandLimitedQp::zeros(vec![0, 5]).unwrap();
        assert!(qp_unitary(&qp, 4).is_err());
        let wide = BandLimitedQp::zeros(vec![0, 1, 2]).unwrap();
        assert!(Network::new(2, 4, 2, vec![vec![wide]], Readout::parity(0, 1)).is_err());
        assert!(Network::new(3, 2, 2, vec![], Readout::parity(0, 1)).is_err());
    }

    #[test]
    fn zero_coefficients_give_identity() {
        let qp = BandLimitedQp::zeros(vec![1, 3]).unwrap();
        assert!(close(
            &qp_unitary(&qp, 4).unwrap(),
            &CMatrix::identity(16, 16),
            1e-15
        ));
        let net = Network::discrimination_default();
        assert!(close(
            &net.network_unitary().unwrap(),
            &CMatrix::identity(16, 16),
            1e-15
        ));
    }

    #[test]
    fn single_pauli_exponential() {
        let a = 0.37;
        let qp = BandLimitedQp::new(vec![0], vec![0.0, a, 0.0, 0.0]).unwrap();
        let x = single_pauli(1).unwrap();
        let expected = CMatrix::identity(2, 2).scale(a.cos()) + x * (linalg::I * a.sin());
        assert!(close(&qp_unitary(&qp, 1).unwrap(), &expected, 1e-14));
    }

    #[test]
    fn identity_word_is_a_global_phase() {
        let c = 0.8;
        let mut coeffs = vec![0.0; 16];
        coeffs[0] = c;
        let qp = BandLimitedQp::new(vec![0, 1], coeffs).unwrap();
        let u = qp_unitary(&qp, 2).unwrap();
        let expected = CMatrix::identity(4, 4) * crate::linalg::C64::from_polar(1.0, c);
        assert!(close(&u, &expected, 1e-14));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_density(2, &mut rng);
        assert!(close(rho.conjugated_by(&u).matrix(), rho.matrix(), 1e-14));
    }

    #[test]
    fn one_layer_one_qp_network_is_the_qp() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let coeffs = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
        let qp = BandLimitedQp::new(vec![2, 0], coeffs).unwrap();
        let net = Network::new(1, 3, 2, vec![vec![qp.clone()]], Readout::parity(0, 1)).unwrap();
        assert!(close(
            &net.network_unitary().unwrap(),
            &qp_unitary(&qp, 3).unwrap(),
            1e-14
        ));
    }

    #[test]
    fn disjoint_supports_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = Network::discrimination_default();
        randomize(&mut net, &mut rng);
        let first = net.layers()[0].clone();
        let swapped = Network::new(
            2,
            4,
            2,
            vec![
                vec![first[1].clone(), first[0].clone()],
                net.layers()[1].clone(),
            ],
            Readout::parity(0, 1),
        )
        .unwrap();
        assert!(close(
            &net.network_unitary().unwrap(),
            &swapped.network_unitary().unwrap(),
            1e-10
        ));
    }

    #[test]
    fn forward_matches_whole_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let mut net = Network::discrimination_default();
            randomize(&mut net, &mut rng);
            let rho = net.pad(&random_density(2, &mut rng)).unwrap();
            let direct = state::apply_unitary(&net.network_unitary().unwrap(), &rho).unwrap();
            assert!(close(
                net.forward(&rho).unwrap().matrix(),
                direct.matrix(),
                1e-10
            ));
            assert_eq!(net.forward_through(&rho, 0).unwrap(), rho);
        }
        let net = Network::discrimination_default();
        let rho = net.pad(&DensityOperator::basis(2, 1)).unwrap();
        assert!(close(
            net.forward(&rho).unwrap().matrix(),
            rho.matrix(),
            1e-15
        ));
        assert!(net.forward(&DensityOperator::basis(2, 1)).is_err());
        assert!(net.forward_through(&rho, 3).is_err());
    }

    #[test]
    fn identity_network_predicts_even_parity_label() {
        let net = Network::discrimination_default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = DensityOperator::basis(2, 0);
        assert!((0..100).all(|_| net.predict(&rho, &mut rng).unwrap() == -1));
    }

    #[test]
    fn prediction_frequencies_follow_born_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut net = Network::discrimination_default();
        randomize(&mut net, &mut rng);
        let rho = random_density(2, &mut rng);
        let probs = net.outcome_distribution(&rho).unwrap();
        let n = 100_000;
        let minus = (0..n)
            .filter(|_| net.predict(&rho, &mut rng).unwrap() == -1)
            .count();
        let sigma = (probs[0] * (1.0 - probs[0]) / n as f64).sqrt();
        assert!((minus as f64 / n as f64 - probs[0]).abs() <= 3.0 * sigma);
    }

    #[test]
    fn predictions_are_seed_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut net = Network::discrimination_default();
        randomize(&mut net, &mut rng);
        let rho = random_density(2, &mut rng);
        let run = |seed| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| net.predict(&rho, &mut r).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(1), run(1));
    }

    #[test]
    fn expected_loss_examples() {
        let rho = DensityOperator::basis(1, 0);
        let net = single_pauli_net(PI / 8.0);
        assert_eq!(
            net.expected_loss(&rho, 0, &LossFunction::Constant(0.0))
                .unwrap(),
            0.0
        );
        // Closed form sin²(a) from the Born rule on cos(a)|0⟩ + i sin(a)|1⟩.
        let value = net.expected_loss(&rho, 0, &LossFunction::ZeroOne).unwrap();
        assert_abs_diff_eq!(value, (PI / 8.0).sin().powi(2), epsilon = 1e-14);
        assert_abs_diff_eq!(value, 0.146_446_609_406_726_24, epsilon = 1e-12);

        let identity = single_pauli_net(0.0);
        assert_eq!(
            identity
                .expected_loss(&rho, 0, &LossFunction::ZeroOne)
                .unwrap(),
            0.0
        );
    }

    #[test]
    fn batch_averages() {
        let net = single_pauli_net(0.3);
        let loss = LossFunction::ZeroOne;
        let zero = DensityOperator::basis(1, 0);
        let one = DensityOperator::basis(1, 1);
        let single = net.expected_loss(&zero, 0, &loss).unwrap();
        assert_abs_diff_eq!(
            net.average_expected_loss([(&zero, 0)], &loss).unwrap(),
            single
        );
        assert_abs_diff_eq!(
            net.average_expected_loss([(&zero, 0), (&zero, 0)], &loss)
                .unwrap(),
            single,
            epsilon = 1e-15
        );
        // Direct summation: sin²(0.3) for |0⟩ labelled 0, and for |1⟩
        // labelled 0 the loss is the probability of reading 1, cos²(0.3).
        let mixed = net
            .average_expected_loss([(&zero, 0), (&one, 0), (&zero, 1)], &loss)
            .unwrap();
        let s2 = 0.3f64.sin().powi(2);
        let expected = (s2 + (1.0 - s2) + (1.0 - s2)) / 3.0;
        assert_abs_diff_eq!(mixed, expected, epsilon = 1e-14);
        assert!(net
            .average_expected_loss(std::iter::empty(), &loss)
            .is_err());
    }

    #[test]
    fn parameter_addressing() {
        let mut net = Network::discrimination_default();
        assert_eq!(net.parameter_count(), 48);
        let indices = net.parameter_indices();
        assert_eq!(indices.len(), 48);
        assert!(indices.windows(2).all(|w| w[0] < w[1]));
        for (pos, idx) in indices.iter().enumerate() {
            assert_eq!(net.flat_position(idx).unwrap(), pos);
        }
        let idx = ParameterIndex {
            layer: 1,
            perceptron: 0,
            word: "13".parse().unwrap(),
        };
        net.set_parameter(&idx, 0.25).unwrap();
        assert_eq!(net.parameter(&idx).unwrap(), 0.25);
        assert_eq!(net.parameters()[32 + 7], 0.25);
        let bad = ParameterIndex {
            layer: 2,
            perceptron: 0,
            word: "00".parse().unwrap(),
        };
        assert!(net.parameter(&bad).is_err());
        let short = ParameterIndex {
            layer: 0,
            perceptron: 0,
            word: "1".parse().unwrap(),
        };
        assert!(net.set_parameter(&short, 1.0).is_err());
    }

    #[test]
    fn readout_povms() {
        let povm = Readout::parity(0, 1).povm(2).unwrap();
        let labels: Vec<_> = povm.labels().copied().collect();
        assert_eq!(labels, vec![-1, 1]);
        let plus_plus =
            from_ket(&crate::state::PureState::from_real(&[0.5, 0.5, 0.5, 0.5]).unwrap());
        let p = state::outcome_distribution(&povm, &plus_plus).unwrap();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-15);
        let same = Readout::Parity {
            qubits: [0, 1],
            even: 1,
            odd: 1,
        };
        assert!(same.povm(2).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn perceptrons_are_unitary(coeffs in prop::collection::vec(-1.0f64..1.0, 16), k in 1usize..=2) {
                let support: Vec<usize> = (0..k).collect();
                let qp = BandLimitedQp::new(support, coeffs[..1 << (2 * k)].to_vec()).unwrap();
                prop_assert!(linalg::unitarity_defect(&qp_unitary(&qp, 3).unwrap()) < 1e-9);
            }

            #[test]
            fn identity_word_does_not_change_outputs(seed in any::<u64>(), shift in -3.0f64..3.0) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut net = Network::discrimination_default();
                randomize(&mut net, &mut rng);
                let rho = random_density(2, &mut rng);
                let before = net.outcome_distribution(&rho).unwrap();
                let out_before = net.forward(&net.pad(&rho).unwrap()).unwrap();
                for idx in net.parameter_indices().into_iter().filter(|i| i.word.is_identity()) {
                    let v = net.parameter(&idx).unwrap();
                    net.set_parameter(&idx, v + shift).unwrap();
                }
                let after = net.outcome_distribution(&rho).unwrap();
                let out_after = net.forward(&net.pad(&rho).unwrap()).unwrap();
                for (a, b) in before.iter().zip(&after) {
                    prop_assert!((a - b).abs() < 1e-10);
                }
                prop_assert!(close(out_before.matrix(), out_after.matrix(), 1e-10));
            }

            #[test]
            fn forward_preserves_states_and_loss_is_bounded(seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut net = Network::discrimination_default();
                randomize(&mut net, &mut rng);
                let rho = random_density(2, &mut rng);
                let out = net.forward(&net.pad(&rho).unwrap()).unwrap();
                prop_assert!(DensityOperator::new(out.into_matrix()).is_ok());
                let loss = LossFunction::Table(vec![((1, -1), 2.5), ((-1, 1), -0.5)]);
                for y in [-1, 1] {
                    let l = net.expected_loss(&rho, y, &loss).unwrap();
                    prop_assert!((-0.5 - 1e-12..=2.5 + 1e-12).contains(&l));
                }
            }
        }
    }
}
