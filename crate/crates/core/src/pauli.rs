//! Pauli strings and the Pauli-basis (quantum Fourier) expansion of operators.
//!
//! Any operator `A` on `d` qubits expands uniquely as `A = Σ_s a_s σ^s` with
//! `a_s = 2^-d tr(A σ^s)`; for Hermitian `A` every `a_s` is real.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64, I, ONE, ZERO};

/// One tensor factor of a Pauli string. The discriminants are the usual
/// letter indices: 0 = identity, 1 = σ^x, 2 = σ^y, 3 = σ^z.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I = 0,
    X = 1,
    Y = 2,
    Z = 3,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_index(idx: u8) -> Result<Self> {
        Self::ALL
            .get(idx as usize)
            .copied()
            .ok_or_else(|| Error::domain(format!("Pauli index {idx} not in 0..=3")))
    }

    pub fn index(self) -> u8 {
        self as u8
    }

    fn flips(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    fn phases(self) -> bool {
        matches!(self, Pauli::Y | Pauli::Z)
    }

    pub fn matrix(self) -> CMatrix {
        let m = |a: C64, b: C64, c: C64, d: C64| CMatrix::from_row_slice(2, 2, &[a, b, c, d]);
        match self {
            Pauli::I => m(ONE, ZERO, ZERO, ONE),
            Pauli::X => m(ZERO, ONE, ONE, ZERO),
            Pauli::Y => m(ZERO, -I, I, ZERO),
            Pauli::Z => m(ONE, ZERO, ZERO, -ONE),
        }
    }
}

/// The 2x2 identity or Pauli matrix for letter index `idx`.
pub fn single_pauli(idx: u8) -> Result<CMatrix> {
    Ok(Pauli::from_index(idx)?.matrix())
}

/// A word `s ∈ {0,1,2,3}^d`, letter `j` acting on qubit `j`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString(Vec<Pauli>);

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Self {
        PauliString(letters)
    }

    pub fn from_indices(letters: &[u8]) -> Result<Self> {
        letters
            .iter()
            .map(|&l| Pauli::from_index(l))
            .collect::<Result<Vec<_>>>()
            .map(PauliString)
    }

    pub fn identity(len: usize) -> Self {
        PauliString(vec![Pauli::I; len])
    }

    /// The word whose base-4 digits (first letter most significant) spell `code`.
    pub fn from_code(code: usize, len: usize) -> Self {
        let letters = (0..len)
            .map(|pos| Pauli::ALL[(code >> (2 * (len - 1 - pos))) & 3])
            .collect();
        PauliString(letters)
    }

    /// Inverse of [`PauliString::from_code`]; also the position of the word in
    /// lexicographic order.
    pub fn code(&self) -> usize {
        self.0
            .iter()
            .fold(0usize, |acc, p| (acc << 2) | p.index() as usize)
    }

    /// All `4^len` words in lexicographic order.
    pub fn all(len: usize) -> impl Iterator<Item = PauliString> {
        (0..1usize << (2 * len)).map(move |c| PauliString::from_code(c, len))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.0
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&p| p != Pauli::I).count()
    }

    pub fn is_identity(&self) -> bool {
        self.weight() == 0
    }

    /// Lift a word defined on `support` to a `total`-qubit word.
    pub fn embed(&self, support: &[usize], total: usize) -> Result<PauliString> {
        if support.len() != self.len() {
            return Err(Error::domain(format!(
                "word of length {} cannot be placed on {} support qubits",
                self.len(),
                support.len()
            )));
        }
        linalg::check_support(support, total)?;
        let mut letters = vec![Pauli::I; total];
        for (&q, &p) in support.iter().zip(&self.0) {
            letters[q] = p;
        }
        Ok(PauliString(letters))
    }

    fn masks(&self) -> (usize, usize, u32) {
        let n = self.len();
        let mut flip = 0usize;
        let mut phase = 0usize;
        let mut ys = 0u32;
        for (q, &p) in self.0.iter().enumerate() {
            let bit = 1usize << (n - 1 - q);
            if p.flips() {
                flip |= bit;
            }
            if p.phases() {
                phase |= bit;
            }
            if p == Pauli::Y {
                ys += 1;
            }
        }
        (flip, phase, ys)
    }

    /// `σ^s |col⟩ = coefficient · |row⟩`; returns `(row, coefficient)`.
    ///
    /// σ^s is a signed permutation: it flips the X/Y bits and picks up
    /// `i^{#Y} (-1)^{|col ∧ (Y|Z mask)|}`.
    fn column_entry(&self, col: usize, masks: (usize, usize, u32)) -> (usize, C64) {
        let (flip, phase, ys) = masks;
        let base = match ys % 4 {
            0 => ONE,
            1 => I,
            2 => -ONE,
            _ => -I,
        };
        let sign = if (col & phase).count_ones() % 2 == 1 {
            -1.0
        } else {
            1.0
        };
        (col ^ flip, base * sign)
    }

    /// Dense `2^d` matrix of σ^s, built from its signed-permutation structure.
    pub fn matrix(&self) -> CMatrix {
        let dim = linalg::dim_of(self.len());
        let masks = self.masks();
        let mut out = CMatrix::zeros(dim, dim);
        for col in 0..dim {
            let (row, c) = self.column_entry(col, masks);
            out[(row, col)] = c;
        }
        out
    }

    /// `tr(A σ^s)` in `O(2^d)`.
    pub fn trace_with(&self, a: &CMatrix) -> C64 {
        let masks = self.masks();
        (0..a.nrows())
            .map(|col| {
                let (row, c) = self.column_entry(col, masks);
                a[(col, row)] * c
            })
            .sum()
    }

    /// `σ^s · m` without a dense product.
    pub fn left_multiply(&self, m: &CMatrix) -> CMatrix {
        let masks = self.masks();
        let mut out = CMatrix::zeros(m.nrows(), m.ncols());
        for col in 0..m.nrows() {
            let (row, c) = self.column_entry(col, masks);
            for k in 0..m.ncols() {
                out[(row, k)] = c * m[(col, k)];
            }
        }
        out
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.0 {
            write!(f, "{}", p.index())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s
            .chars()
            .map(|c| {
                c.to_digit(4)
                    .map(|d| d as u8)
                    .ok_or_else(|| Error::domain(format!("invalid Pauli letter {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        PauliString::from_indices(&digits)
    }
}

/// σ^s placed on `support` inside a `total_qubits` register, built as an
/// explicit tensor product of 2x2 factors.
pub fn pauli_operator(s: &PauliString, total_qubits: usize, support: &[usize]) -> Result<CMatrix> {
    let full = s.embed(support, total_qubits)?;
    Ok(full
        .letters()
        .iter()
        .fold(CMatrix::identity(1, 1), |acc, p| {
            linalg::kron(&acc, &p.matrix())
        }))
}

/// Real Pauli-basis coefficients of a Hermitian operator on `qubits` qubits,
/// stored densely in lexicographic word order.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierSpectrum {
    qubits: usize,
    coefficients: Vec<f64>,
}

impl FourierSpectrum {
    pub fn zeros(qubits: usize) -> Self {
        FourierSpectrum {
            qubits,
            coefficients: vec![0.0; 1 << (2 * qubits)],
        }
    }

    pub fn from_coefficients(qubits: usize, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != 1 << (2 * qubits) {
            return Err(Error::DimensionMismatch {
                expected: 1 << (2 * qubits),
                found: coefficients.len(),
            });
        }
        Ok(FourierSpectrum {
            qubits,
            coefficients,
        })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn get(&self, s: &PauliString) -> f64 {
        assert_eq!(s.len(), self.qubits, "word length must match spectrum");
        self.coefficients[s.code()]
    }

    pub fn set(&mut self, s: &PauliString, value: f64) {
        assert_eq!(s.len(), self.qubits, "word length must match spectrum");
        self.coefficients[s.code()] = value;
    }

    pub fn iter(&self) -> impl Iterator<Item = (PauliString, f64)> + '_ {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(code, &a)| (PauliString::from_code(code, self.qubits), a))
    }

    /// True when every coefficient on a word with a non-identity letter
    /// outside `support` is exactly zero.
    pub fn is_supported_on(&self, support: &[usize]) -> bool {
        self.iter().all(|(s, a)| {
            a == 0.0
                || s.letters()
                    .iter()
                    .enumerate()
                    .all(|(q, &p)| p == Pauli::I || support.contains(&q))
        })
    }
}

/// `a_s = 2^-d tr(A σ^s)` for every word. Imaginary parts (round-off for
/// Hermitian input) are dropped.
pub fn fourier_coefficients(a: &CMatrix) -> Result<FourierSpectrum> {
    let qubits = linalg::ensure_square(a)?;
    linalg::ensure_hermitian(a)?;
    let norm = 1.0 / linalg::dim_of(qubits) as f64;
    let coefficients = PauliString::all(qubits)
        .map(|s| s.trace_with(a).re * norm)
        .collect();
    Ok(FourierSpectrum {
        qubits,
        coefficients,
    })
}

/// `Σ_s a_s σ^s`.
pub fn synthesize(spectrum: &FourierSpectrum) -> CMatrix {
    let dim = linalg::dim_of(spectrum.qubits);
    let mut out = CMatrix::zeros(dim, dim);
    for (s, a) in spectrum.iter() {
        if a != 0.0 {
            out += s.matrix().scale(a);
        }
    }
    out
}
