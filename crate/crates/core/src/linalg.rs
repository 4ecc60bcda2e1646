//! Dense complex matrix helpers shared by the simulator.
//!
//! Qubit 0 is the leftmost tensor factor, so in a `2^n` basis index the bit
//! belonging to qubit `q` is `(index >> (n - 1 - q)) & 1`.

use nalgebra::{Complex, DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = Complex { re: 0.0, im: 0.0 };
pub const ONE: C64 = Complex { re: 1.0, im: 0.0 };
pub const I: C64 = Complex { re: 0.0, im: 1.0 };

/// Tolerance used for Hermiticity, unitarity and trace validation.
pub const TOLERANCE: f64 = 1e-9;

pub fn dim_of(qubits: usize) -> usize {
    1usize << qubits
}

/// Number of qubits for a matrix of side `dim`, if `dim` is a power of two.
pub fn qubits_of(dim: usize) -> Option<usize> {
    dim.is_power_of_two().then(|| dim.trailing_zeros() as usize)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// `tr(a * b)` without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> C64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    let mut acc = ZERO;
    for i in 0..a.nrows() {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Largest entry of `|m - m†|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Largest entry of `|u u† - I|`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let prod = u * u.adjoint();
    let mut worst = 0.0f64;
    for i in 0..prod.nrows() {
        for j in 0..prod.ncols() {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((prod[(i, j)] - target).norm());
        }
    }
    worst
}

pub fn ensure_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::domain(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    qubits_of(m.nrows())
        .ok_or_else(|| Error::domain(format!("side {} is not a power of two", m.nrows())))
}

pub fn ensure_hermitian(m: &CMatrix) -> Result<()> {
    ensure_square(m)?;
    let defect = hermiticity_defect(m);
    if defect >= TOLERANCE {
        return Err(Error::domain(format!(
            "operator is not Hermitian (max |A - A^dagger| = {defect:.3e})"
        )));
    }
    Ok(())
}

/// Real eigenvalues and orthonormal eigenvectors (as columns) of a Hermitian
/// matrix. The input is symmetrized first so round-off in the lower triangle
/// does not leak into the result.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(sym);
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let sym = (m + m.adjoint()).scale(0.5);
    sym.symmetric_eigenvalues().iter().copied().collect()
}

/// `exp(i h)` for Hermitian `h`, by diagonalization.
pub fn exp_i_hermitian(h: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(h);
    let mut scaled = vectors.clone();
    for (j, lambda) in values.iter().enumerate() {
        let phase = C64::from_polar(1.0, *lambda);
        scaled.column_mut(j).iter_mut().for_each(|x| *x *= phase);
    }
    &scaled * vectors.adjoint()
}

/// Validate that `support` lists distinct qubits below `total`.
pub fn check_support(support: &[usize], total: usize) -> Result<()> {
    for (i, &q) in support.iter().enumerate() {
        if q >= total {
            return Err(Error::domain(format!(
                "qubit {q} out of range for a {total}-qubit register"
            )));
        }
        if support[..i].contains(&q) {
            return Err(Error::domain(format!("qubit {q} repeated in support")));
        }
    }
    Ok(())
}

/// Place a `2^|support|` operator on the listed qubits of a `total`-qubit
/// register, identity elsewhere. `support[0]` is the most significant local
/// qubit.
pub fn embed(local: &CMatrix, support: &[usize], total: usize) -> Result<CMatrix> {
    check_support(support, total)?;
    let k = support.len();
    if local.nrows() != dim_of(k) || local.ncols() != dim_of(k) {
        return Err(Error::DimensionMismatch {
            expected: dim_of(k),
            found: local.nrows(),
        });
    }
    let dim = dim_of(total);
    let support_mask: usize = support.iter().map(|&q| 1usize << (total - 1 - q)).sum();
    let local_index = |full: usize| -> usize {
        support.iter().fold(0usize, |acc, &q| {
            (acc << 1) | ((full >> (total - 1 - q)) & 1)
        })
    };
    let mut out = CMatrix::zeros(dim, dim);
    for row in 0..dim {
        let rest = row & !support_mask;
        let lr = local_index(row);
        for lc in 0..dim_of(k) {
            // Scatter the local column index back onto the support bits.
            let mut col = rest;
            for (pos, &q) in support.iter().enumerate() {
                let bit = (lc >> (k - 1 - pos)) & 1;
                col |= bit << (total - 1 - q);
            }
            out[(row, col)] = local[(lr, lc)];
        }
    }
    Ok(out)
}

/// `u * m * u†`.
pub fn conjugate(u: &CMatrix, m: &CMatrix) -> CMatrix {
    u * m * u.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(rows: usize, data: &[f64]) -> CMatrix {
        CMatrix::from_row_iterator(rows, rows, data.iter().map(|&x| C64::new(x, 0.0)))
    }

    #[test]
    fn embed_matches_kronecker_on_contiguous_support() {
        let x = real(2, &[0.0, 1.0, 1.0, 0.0]);
        let id = CMatrix::identity(2, 2);
        let expected = kron(&kron(&id, &x), &id);
        assert_eq!(embed(&x, &[1], 3).unwrap(), expected);
    }

    #[test]
    fn embed_reorders_support() {
        // CNOT with control on qubit 1, target on qubit 0.
        let cnot = real(
            4,
            &[
                1.0, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, 0.0, 1.0, //
                0.0, 0.0, 1.0, 0.0,
            ],
        );
        let flipped = embed(&cnot, &[1, 0], 2).unwrap();
        // |01> -> |11>
        assert_eq!(flipped[(3, 1)], ONE);
        assert_eq!(flipped[(1, 1)], ZERO);
    }

    #[test]
    fn embed_rejects_bad_support() {
        let x = CMatrix::identity(2, 2);
        assert!(embed(&x, &[3], 3).is_err());
        assert!(embed(&CMatrix::identity(4, 4), &[1, 1], 3).is_err());
        assert!(embed(&x, &[0, 1], 3).is_err());
    }

    #[test]
    fn exp_i_of_zero_is_identity() {
        let u = exp_i_hermitian(&CMatrix::zeros(4, 4));
        assert!(unitarity_defect(&u) < 1e-14);
        assert!((u - CMatrix::identity(4, 4)).norm() < 1e-14);
    }
}
