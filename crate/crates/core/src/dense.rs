//! Dense LU solves with a residual check.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative residual above which a dense solve is reported as failed.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

pub struct DenseLu {
    matrix: DMatrix<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl DenseLu {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Precondition(format!(
                "cannot factor a {}x{} matrix",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let lu = matrix.clone().lu();
        if !lu.is_invertible() {
            return Err(Error::Numerical("singular matrix in dense solve".into()));
        }
        Ok(DenseLu { matrix, lu })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let b = DVector::from_column_slice(rhs);
        let x = self
            .lu
            .solve(&b)
            .ok_or_else(|| Error::Numerical("LU solve failed".into()))?;
        let r = (&self.matrix * &x - &b).norm();
        let scale = b.norm().max(self.matrix.norm() * x.norm()).max(f64::MIN_POSITIVE);
        if !(r <= SOLVE_TOLERANCE * scale) {
            return Err(Error::Numerical(format!(
                "dense solve residual {:.3e} exceeds {SOLVE_TOLERANCE:e} relative",
                r / scale
            )));
        }
        Ok(x.as_slice().to_vec())
    }

    /// Smallest singular value of the factored matrix.
    pub fn smallest_singular_value(&self) -> f64 {
        self.matrix.clone().singular_values().min()
    }
}

/// Smallest singular value of `m` restricted to the orthogonal complement
/// of the direction `e`.
pub fn min_singular_value_orthogonal_to(m: &DMatrix<f64>, e: &DVector<f64>) -> f64 {
    let n = e.len();
    assert_eq!(m.ncols(), n);
    // Householder reflector sending e to a multiple of the first basis
    // vector; its remaining columns span the complement.
    let mut v = e.normalize();
    v[0] += if v[0] >= 0.0 { 1.0 } else { -1.0 };
    let vv = v.norm_squared();
    let q = DMatrix::from_fn(n, n - 1, |i, j| {
        let id = if i == j + 1 { 1.0 } else { 0.0 };
        id - 2.0 * v[i] * v[j + 1] / vv
    });
    (m * q).singular_values().min()
}

/// `sum_i w_i u_i v_i`.
pub fn weighted_dot(w: &[f64], u: &[f64], v: &[f64]) -> f64 {
    w.iter().zip(u).zip(v).map(|((w, u), v)| w * u * v).sum()
}

/// `sqrt(sum_i w_i u_i^2)`.
pub fn weighted_norm(w: &[f64], u: &[f64]) -> f64 {
    weighted_dot(w, u, u).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_and_checks() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let lu = DenseLu::new(a).unwrap();
        let x = lu.solve(&[1.0, 2.0]).unwrap();
        assert!((4.0 * x[0] + x[1] - 1.0).abs() < 1e-14);
        assert!((x[0] + 3.0 * x[1] - 2.0).abs() < 1e-14);
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(DenseLu::new(s).is_err());
    }

    #[test]
    fn restricted_singular_value() {
        // diag(0, 2, 3) restricted away from e1 has smallest value 2.
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 2.0, 3.0]));
        let e = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert!((min_singular_value_orthogonal_to(&m, &e) - 2.0).abs() < 1e-12);
        let e2 = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        assert!(min_singular_value_orthogonal_to(&m, &e2).abs() < 1e-12);
    }
}
