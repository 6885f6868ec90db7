//! Small dense helpers on top of nalgebra for symmetric matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Applies `f` to the spectrum of a symmetric matrix.
pub fn sym_apply(a: &Matrix, f: impl Fn(f64) -> f64) -> Matrix {
    let sym = symmetrize(a);
    let eig = SymmetricEigen::new(sym);
    let mapped = eig.eigenvalues.map(f);
    let v = &eig.eigenvectors;
    symmetrize(&(v * Matrix::from_diagonal(&mapped) * v.transpose()))
}

pub fn sym_exp(a: &Matrix) -> Matrix {
    sym_apply(a, f64::exp)
}

/// Principal square root of a symmetric positive semi-definite matrix.
pub fn sym_sqrt(a: &Matrix) -> Matrix {
    sym_apply(a, |x| x.max(0.0).sqrt())
}

pub fn symmetrize(a: &Matrix) -> Matrix {
    (a + a.transpose()) * 0.5
}

pub fn sym_eigenvalues(a: &Matrix) -> Vector {
    SymmetricEigen::new(symmetrize(a)).eigenvalues
}

pub fn frobenius(a: &Matrix) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn frobenius_inner(a: &Matrix, b: &Matrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn inverse(a: &Matrix) -> Result<Matrix> {
    let det = a.determinant();
    if !det.is_finite() || det.abs() < 1e-300 {
        return Err(Error::SingularMatrix);
    }
    a.clone().try_inverse().ok_or(Error::SingularMatrix)
}

/// Removes the trace part, `A - (tr A / n) I`.
pub fn traceless_part(a: &Matrix) -> Matrix {
    let n = a.nrows();
    let shift = a.trace() / n as f64;
    let mut out = a.clone();
    for i in 0..n {
        out[(i, i)] -= shift;
    }
    out
}

pub fn rotation2(angle: f64) -> Matrix {
    let (s, c) = angle.sin_cos();
    Matrix::from_row_slice(2, 2, &[c, -s, s, c])
}

pub fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    let m = rows[0].len();
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::InvalidArgument("ragged matrix rows".into()));
    }
    Ok(Matrix::from_fn(n, m, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_of_diagonal() {
        let a = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, -1.0]));
        let e = sym_exp(&a);
        assert!((e[(0, 0)] - 1f64.exp()).abs() < 1e-14);
        assert!((e[(1, 1)] - (-1f64).exp()).abs() < 1e-14);
        assert!(e[(0, 1)].abs() < 1e-15);
    }

    #[test]
    fn sqrt_squares_back() {
        let a = Matrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let s = sym_sqrt(&a);
        assert!(frobenius(&(&s * &s - &a)) < 1e-12);
    }

    #[test]
    fn traceless_part_has_zero_trace() {
        let a = Matrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 5.0]);
        assert!(traceless_part(&a).trace().abs() < 1e-15);
    }
}
