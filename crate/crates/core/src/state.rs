//! Density operators, POVMs and Born-rule sampling.

use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, ONE, TOLERANCE, ZERO};

/// Normalized state vector on `qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    qubits: usize,
    amplitudes: DVector<C64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let qubits = linalg::qubits_of(amplitudes.len()).ok_or_else(|| {
            Error::domain(format!(
                "{} amplitudes is not a power of two",
                amplitudes.len()
            ))
        })?;
        let amplitudes = DVector::from_vec(amplitudes);
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() >= TOLERANCE {
            return Err(Error::domain(format!(
                "state vector has norm {norm}, expected 1"
            )));
        }
        Ok(PureState { qubits, amplitudes })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(qubits: usize, index: usize) -> Self {
        let mut amplitudes = DVector::zeros(linalg::dim_of(qubits));
        amplitudes[index] = ONE;
        PureState { qubits, amplitudes }
    }

    /// `(|0⟩ + |1⟩)/√2`.
    pub fn plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        PureState {
            qubits: 1,
            amplitudes: DVector::from_vec(vec![C64::new(h, 0.0), C64::new(h, 0.0)]),
        }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }
}

/// Hermitian, positive-semidefinite, unit-trace operator on `2^qubits`
/// dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    qubits: usize,
    matrix: CMatrix,
}

impl DensityOperator {
    /// Validates Hermiticity, unit trace and PSD, each within `1e-9`.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let qubits = linalg::ensure_square(&matrix)?;
        linalg::ensure_hermitian(&matrix)?;
        let tr = linalg::trace(&matrix);
        if (tr - ONE).norm() >= TOLERANCE {
            return Err(Error::domain(format!("density operator has trace {tr}")));
        }
        let min = linalg::hermitian_eigenvalues(&matrix)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min < -TOLERANCE {
            return Err(Error::domain(format!(
                "density operator has negative eigenvalue {min:.3e}"
            )));
        }
        Ok(DensityOperator { qubits, matrix })
    }

    /// Skips validation; callers guarantee the invariants (e.g. the result of
    /// a unitary conjugation of a valid state).
    pub(crate) fn from_matrix_unchecked(matrix: CMatrix) -> Self {
        let qubits = linalg::qubits_of(matrix.nrows()).expect("power-of-two dimension");
        DensityOperator { qubits, matrix }
    }

    /// The 1x1 state `[1]` on zero qubits; neutral element of [`tensor`].
    pub fn scalar() -> Self {
        DensityOperator {
            qubits: 0,
            matrix: CMatrix::identity(1, 1),
        }
    }

    pub fn maximally_mixed(qubits: usize) -> Self {
        let dim = linalg::dim_of(qubits);
        DensityOperator {
            qubits,
            matrix: CMatrix::identity(dim, dim).unscale(dim as f64),
        }
    }

    /// `|index⟩⟨index|`.
    pub fn basis(qubits: usize, index: usize) -> Self {
        from_ket(&PureState::basis(qubits, index))
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.matrix).re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.matrix)
    }

    /// Numerical rank: eigenvalues above `1e-9`.
    pub fn rank(&self) -> usize {
        self.eigenvalues()
            .into_iter()
            .filter(|&l| l > TOLERANCE)
            .count()
    }

    /// `u ρ u†` with no unitarity check.
    pub(crate) fn conjugated_by(&self, u: &CMatrix) -> Self {
        DensityOperator {
            qubits: self.qubits,
            matrix: linalg::conjugate(u, &self.matrix),
        }
    }
}

/// `|ψ⟩⟨ψ|`.
pub fn from_ket(psi: &PureState) -> DensityOperator {
    let a = psi.amplitudes();
    DensityOperator {
        qubits: psi.qubits(),
        matrix: a * a.adjoint(),
    }
}

/// Kronecker product `a ⊗ b`; `a` occupies the leading qubits.
pub fn tensor(a: &DensityOperator, b: &DensityOperator) -> DensityOperator {
    DensityOperator {
        qubits: a.qubits + b.qubits,
        matrix: linalg::kron(&a.matrix, &b.matrix),
    }
}

/// `ρ ⊗ |0…0⟩⟨0…0|` with `num_aux` trailing auxiliary qubits.
pub fn pad_sample(rho: &DensityOperator, num_aux: usize) -> DensityOperator {
    if num_aux == 0 {
        return rho.clone();
    }
    tensor(rho, &DensityOperator::basis(num_aux, 0))
}

/// `ρ ⊗ |+⟩⟨+|`, the ancilla becoming the last qubit.
pub fn attach_plus(rho: &DensityOperator) -> DensityOperator {
    tensor(rho, &from_ket(&PureState::plus()))
}

/// `U ρ U†` after checking that `U` is unitary within `1e-9`.
pub fn apply_unitary(u: &CMatrix, rho: &DensityOperator) -> Result<DensityOperator> {
    if u.nrows() != rho.dim() || u.ncols() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: u.nrows(),
        });
    }
    let defect = linalg::unitarity_defect(u);
    if defect >= TOLERANCE {
        return Err(Error::domain(format!(
            "operator is not unitary (defect {defect:.3e})"
        )));
    }
    Ok(rho.conjugated_by(u))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PovmElement<L> {
    pub label: L,
    pub operator: CMatrix,
}

/// A finite POVM whose elements are kept in declaration order; that order is
/// the sampling order used by [`measure`].
#[derive(Clone, Debug, PartialEq)]
pub struct Povm<L> {
    qubits: usize,
    elements: Vec<PovmElement<L>>,
}

impl<L: Clone> Povm<L> {
    /// Checks each element is PSD and that they sum to the identity, both
    /// within `1e-9`.
    pub fn new(elements: Vec<(L, CMatrix)>) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::domain("a POVM needs at least one element"))?;
        let qubits = linalg::ensure_square(&first.1)?;
        let dim = linalg::dim_of(qubits);
        let mut sum = CMatrix::zeros(dim, dim);
        for (_, op) in &elements {
            if op.nrows() != dim || op.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: op.nrows(),
                });
            }
            linalg::ensure_hermitian(op)?;
            let min = linalg::hermitian_eigenvalues(op)
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            if min < -TOLERANCE {
                return Err(Error::domain(format!(
                    "POVM element has negative eigenvalue {min:.3e}"
                )));
            }
            sum += op;
        }
        let defect = (sum - CMatrix::identity(dim, dim))
            .iter()
            .fold(0.0f64, |m, z| m.max(z.norm()));
        if defect >= TOLERANCE {
            return Err(Error::domain(format!(
                "POVM elements do not sum to identity (defect {defect:.3e})"
            )));
        }
        Ok(Povm {
            qubits,
            elements: elements
                .into_iter()
                .map(|(label, operator)| PovmElement { label, operator })
                .collect(),
        })
    }

    /// For element sets that are a POVM by construction.
    pub(crate) fn from_elements_unchecked(qubits: usize, elements: Vec<PovmElement<L>>) -> Self {
        Povm { qubits, elements }
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn elements(&self) -> &[PovmElement<L>] {
        &self.elements
    }

    pub fn labels(&self) -> impl Iterator<Item = &L> {
        self.elements.iter().map(|e| &e.label)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

impl Povm<usize> {
    /// Projective measurement of every qubit; label = basis index.
    pub fn computational_basis(qubits: usize) -> Self {
        let dim = linalg::dim_of(qubits);
        let elements = (0..dim)
            .map(|i| {
                let mut m = CMatrix::zeros(dim, dim);
                m[(i, i)] = ONE;
                PovmElement {
                    label: i,
                    operator: m,
                }
            })
            .collect();
        Povm { qubits, elements }
    }
}

/// Born-rule probabilities `p_i = tr(M_i ρ)` in element order.
///
/// Values in `(-1e-9, 0)` are clamped to zero and the vector renormalized;
/// anything more negative is reported as an error.
pub fn outcome_distribution<L: Clone>(povm: &Povm<L>, rho: &DensityOperator) -> Result<Vec<f64>> {
    if povm.qubits != rho.qubits {
        return Err(Error::DimensionMismatch {
            expected: linalg::dim_of(povm.qubits),
            found: rho.dim(),
        });
    }
    let mut probs = Vec::with_capacity(povm.len());
    for e in &povm.elements {
        let p = linalg::trace_of_product(&e.operator, &rho.matrix);
        if p.im.abs() >= TOLERANCE {
            return Err(Error::domain(format!("complex outcome probability {p}")));
        }
        if p.re < -TOLERANCE {
            return Err(Error::domain(format!(
                "negative outcome probability {:.3e}",
                p.re
            )));
        }
        probs.push(p.re.max(0.0));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() >= TOLERANCE {
        return Err(Error::domain(format!(
            "outcome probabilities sum to {total}"
        )));
    }
    probs.iter_mut().for_each(|p| *p /= total);
    Ok(probs)
}

/// Inverse-CDF draw of an index from `probs`; a uniform draw landing exactly
/// on a cumulative boundary goes to the lower index.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut cumulative = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        cumulative += p;
        if u <= cumulative && p > 0.0 {
            return i;
        }
    }
    // Round-off left `u` above the final cumulative sum.
    probs
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(probs.len() - 1)
}

/// Sample one outcome label of `povm` on `rho`.
pub fn measure<L: Clone, R: Rng + ?Sized>(
    povm: &Povm<L>,
    rho: &DensityOperator,
    rng: &mut R,
) -> Result<L> {
    let probs = outcome_distribution(povm, rho)?;
    Ok(povm.elements[sample_index(&probs, rng)].label.clone())
}

/// `‖A‖₁`, the sum of absolute eigenvalues of a Hermitian operator.
pub fn trace_norm(a: &CMatrix) -> Result<f64> {
    linalg::ensure_hermitian(a)?;
    Ok(linalg::hermitian_eigenvalues(a)
        .iter()
        .map(|l| l.abs())
        .sum())
}

/// Reduced state on the qubits in `keep`, listed in ascending order in the
/// output regardless of the order given.
pub fn partial_trace(rho: &DensityOperator, keep: &[usize]) -> Result<DensityOperator> {
    if keep.is_empty() {
        return Err(Error::domain("partial trace must keep at least one qubit"));
    }
    linalg::check_support(keep, rho.qubits)?;
    let n = rho.qubits;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    let traced: Vec<usize> = (0..n).filter(|q| !kept.contains(q)).collect();

    let compose = |kept_bits: usize, traced_bits: usize| -> usize {
        let mut full = 0usize;
        for (pos, &q) in kept.iter().enumerate() {
            let bit = (kept_bits >> (kept.len() - 1 - pos)) & 1;
            full |= bit << (n - 1 - q);
        }
        for (pos, &q) in traced.iter().enumerate() {
            let bit = (traced_bits >> (traced.len() - 1 - pos)) & 1;
            full |= bit << (n - 1 - q);
        }
        full
    };

    let kd = linalg::dim_of(kept.len());
    let td = linalg::dim_of(traced.len());
    let mut out = CMatrix::zeros(kd, kd);
    for r in 0..kd {
        for c in 0..kd {
            let mut acc = ZERO;
            for t in 0..td {
                acc += rho.matrix[(compose(r, t), compose(c, t))];
            }
            out[(r, c)] = acc;
        }
    }
    Ok(DensityOperator::from_matrix_unchecked(out))
}
