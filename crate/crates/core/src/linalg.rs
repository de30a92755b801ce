//! Small dense complex matrices and Hermitian exponentials.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Structural property recorded with an [`Operator`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    General,
    Hermitian,
    Unitary,
    Diagonal,
}

/// A square complex matrix acting on a spin multiplet, tagged with the
/// property it was constructed to have.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    matrix: CMatrix,
    kind: OperatorKind,
}

impl Operator {
    pub fn new(matrix: CMatrix, kind: OperatorKind) -> Self {
        assert!(matrix.is_square(), "operators are square");
        Operator { matrix, kind }
    }

    pub fn identity(dim: usize) -> Self {
        Operator::new(CMatrix::identity(dim, dim), OperatorKind::Unitary)
    }

    pub fn diagonal(entries: impl IntoIterator<Item = Complex64>) -> Self {
        let d: Vec<Complex64> = entries.into_iter().collect();
        Operator::new(
            CMatrix::from_diagonal(&nalgebra::DVector::from_vec(d)),
            OperatorKind::Diagonal,
        )
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    pub fn adjoint(&self) -> Operator {
        Operator::new(self.matrix.adjoint(), self.kind)
    }

    /// Product `self · rhs`; unitarity survives only if both factors are unitary.
    pub fn compose(&self, rhs: &Operator) -> Operator {
        let kind = match (self.kind, rhs.kind) {
            (OperatorKind::Unitary, OperatorKind::Unitary) => OperatorKind::Unitary,
            (OperatorKind::Diagonal, OperatorKind::Diagonal) => OperatorKind::Diagonal,
            _ => OperatorKind::General,
        };
        Operator::new(&self.matrix * &rhs.matrix, kind)
    }

    pub fn with_kind(mut self, kind: OperatorKind) -> Operator {
        self.kind = kind;
        self
    }

    /// `max |A_ij - B_ij|`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        max_abs_diff(&self.matrix, &other.matrix)
    }

    /// `max |U†U - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        max_abs_diff(&(self.matrix.adjoint() * &self.matrix), &CMatrix::identity(n, n))
    }

    /// `max |A - A†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        max_abs_diff(&self.matrix, &self.matrix.adjoint())
    }

    /// Largest entry magnitude.
    pub fn max_norm(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `exp(i·t·H)` for Hermitian `H`, via the eigendecomposition `H = V D V†`.
pub fn expi_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let eig = nalgebra::SymmetricEigen::new(h.clone());
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, lambda * t);
        for i in 0..scaled.nrows() {
            scaled[(i, j)] *= phase;
        }
    }
    scaled * v.adjoint()
}

/// `exp(i·t·D)` for a real diagonal `D` given by its entries.
pub fn expi_diagonal(diag: &[f64], t: f64) -> Vec<Complex64> {
    diag.iter().map(|&d| Complex64::from_polar(1.0, d * t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_of_zero_is_identity() {
        let h = CMatrix::zeros(3, 3);
        let u = expi_hermitian(&h, 1.0);
        assert!(max_abs_diff(&u, &CMatrix::identity(3, 3)) < 1e-15);
    }

    #[test]
    fn pauli_x_exponential() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let sx = CMatrix::from_row_slice(2, 2, &[zero, one, one, zero]);
        let t = 0.37;
        let u = expi_hermitian(&sx, t);
        // exp(i t X) = cos t I + i sin t X
        let expected = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(t.cos(), 0.0),
                Complex64::new(0.0, t.sin()),
                Complex64::new(0.0, t.sin()),
                Complex64::new(t.cos(), 0.0),
            ],
        );
        assert!(max_abs_diff(&u, &expected) < 1e-14);
    }
}
