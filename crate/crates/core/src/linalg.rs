//! Dense least-squares and nullspace helpers built on the SVD.

use nalgebra::{ComplexField, DMatrix, DVector};

use crate::num::Real;

/// Minimum-norm least-squares solution with rank diagnostics.
#[derive(Debug, Clone)]
pub struct Lstsq<F: ComplexField> {
    pub solution: DVector<F>,
    /// Numerical rank: singular values above `max(rows, cols) · eps · σ_max`.
    pub rank: usize,
    /// `σ_max / σ_min` over all `min(rows, cols)` singular values (infinite if any is zero).
    pub condition: F::RealField,
    pub singular_values: DVector<F::RealField>,
}

pub fn rank_tolerance<T: Real>(rows: usize, cols: usize, sigma_max: T) -> T {
    T::from_usize_lossy(rows.max(cols)) * T::eps() * sigma_max
}

/// Solves `min ‖A x − b‖` returning the minimum-norm minimiser.
pub fn lstsq<T, F>(a: &DMatrix<F>, b: &DVector<F>) -> Lstsq<F>
where
    T: Real,
    F: ComplexField<RealField = T>,
{
    let (rows, cols) = a.shape();
    assert_eq!(rows, b.len(), "lstsq: rhs length must match row count");
    if rows == 0 || cols == 0 {
        return Lstsq {
            solution: DVector::zeros(cols),
            rank: 0,
            condition: T::zero(),
            singular_values: DVector::zeros(0),
        };
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let sv = svd.singular_values.clone();
    let sigma_max = sv.iter().copied().fold(T::zero(), |m, s| m.max(s));
    let sigma_min = sv.iter().copied().fold(sigma_max, |m, s| m.min(s));
    let tol = rank_tolerance(rows, cols, sigma_max);

    let utb = u.adjoint() * b;
    let mut scaled = DVector::<F>::zeros(sv.len());
    let mut rank = 0;
    for (i, &s) in sv.iter().enumerate() {
        if s > tol {
            scaled[i] = utb[i].clone() * F::from_real(T::one() / s);
            rank += 1;
        }
    }
    let solution = v_t.adjoint() * scaled;
    let condition = if sigma_min > T::zero() {
        sigma_max / sigma_min
    } else {
        T::max_value().unwrap_or(T::zero())
    };
    Lstsq {
        solution,
        rank,
        condition,
        singular_values: sv,
    }
}

/// Unit-norm right singular vector belonging to the smallest singular value.
///
/// Rows are zero-padded up to the column count so the full right basis exists.
/// Returns the vector together with all singular values in descending order.
pub fn smallest_right_singular_vector<T, F>(a: &DMatrix<F>) -> (DVector<F>, DVector<T>)
where
    T: Real,
    F: ComplexField<RealField = T>,
{
    let (rows, cols) = a.shape();
    let padded = if rows < cols {
        let mut m = DMatrix::<F>::zeros(cols, cols);
        m.view_mut((0, 0), (rows, cols)).copy_from(a);
        m
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let sv = svd.singular_values;
    let (idx, _) =
        sv.iter()
            .enumerate()
            .fold((0, T::max_value().unwrap_or(sv[0])), |(bi, bs), (i, &s)| {
                if s <= bs {
                    (i, s)
                } else {
                    (bi, bs)
                }
            });
    let v = v_t.row(idx).adjoint();
    let norm = v.norm();
    (v / F::from_real(norm), sv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;

    #[test]
    fn square_system_exact() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let b = DVector::from_vec(vec![3.0, 5.0]);
        let s = lstsq(&a, &b);
        assert_eq!(s.rank, 2);
        assert!((s.solution[0] - 0.8).abs() < 1e-14);
        assert!((s.solution[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn wide_system_is_minimum_norm() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let b = DVector::from_vec(vec![2.0]);
        let s = lstsq(&a, &b);
        assert_eq!(s.rank, 1);
        assert!((s.solution[0] - 1.0).abs() < 1e-14);
        assert!((s.solution[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn null_vector_of_wide_complex_matrix() {
        let a = DMatrix::from_row_slice(1, 2, &[Complex::new(1.0, 0.0), Complex::new(0.0, 1.0)]);
        let (v, _) = smallest_right_singular_vector(&a);
        let r = &a * &v;
        assert!(r[0].norm() < 1e-14);
        assert!((v.norm() - 1.0).abs() < 1e-14);
    }
}
