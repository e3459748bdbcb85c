//! Weight-reconstruction errors, with hidden-unit permutation alignment for
//! two-layer networks.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::num::Real;

/// Largest hidden layer handled by the exhaustive permutation search.
pub const MAX_EXHAUSTIVE_HIDDEN: usize = 10;

/// `‖estimate − truth‖_F`.
pub fn frobenius_error<T: Real>(estimate: &DMatrix<T>, truth: &DMatrix<T>) -> Result<T> {
    if estimate.shape() != truth.shape() {
        return Err(Error::DimensionMismatch(format!(
            "{:?} vs {:?}",
            estimate.shape(),
            truth.shape()
        )));
    }
    Ok((estimate - truth).norm())
}

/// `‖estimate − truth‖_F / ‖truth‖_F` (absolute error when the truth is zero).
pub fn relative_frobenius_error<T: Real>(estimate: &DMatrix<T>, truth: &DMatrix<T>) -> Result<T> {
    let abs = frobenius_error(estimate, truth)?;
    let norm = truth.norm();
    Ok(if norm > T::zero() { abs / norm } else { abs })
}

/// Best joint relabelling of hidden units and the errors under it.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult<T> {
    /// `permutation[i]` is the estimated hidden unit matched to true unit `i`.
    pub permutation: Vec<usize>,
    pub w1_error: T,
    pub w2_error: T,
    pub w1_relative: T,
    pub w2_relative: T,
}

fn permute_rows<T: Real>(m: &DMatrix<T>, perm: &[usize]) -> DMatrix<T> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(perm[i], j)])
}

fn permute_cols<T: Real>(m: &DMatrix<T>, perm: &[usize]) -> DMatrix<T> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, perm[j])])
}

/// Heap's algorithm; calls `visit` once per permutation of `0..n`.
fn for_each_permutation(n: usize, mut visit: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut c = vec![0usize; n];
    visit(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Searches every permutation `σ` of the hidden units for the one minimising
/// `‖P_σ Ŵ1 − W1‖² + ‖Ŵ2 P_σᵀ − W2‖²`, a single `σ` shared by both layers.
pub fn permutation_aligned_errors<T: Real>(
    w1_hat: &DMatrix<T>,
    w2_hat: &DMatrix<T>,
    w1: &DMatrix<T>,
    w2: &DMatrix<T>,
) -> Result<AlignmentResult<T>> {
    if w1_hat.shape() != w1.shape() || w2_hat.shape() != w2.shape() {
        return Err(Error::DimensionMismatch(format!(
            "estimates {:?}/{:?} vs truths {:?}/{:?}",
            w1_hat.shape(),
            w2_hat.shape(),
            w1.shape(),
            w2.shape()
        )));
    }
    let n1 = w1.nrows();
    if w2.ncols() != n1 {
        return Err(Error::DimensionMismatch(format!(
            "W1 has {n1} rows but W2 has {} columns",
            w2.ncols()
        )));
    }
    if n1 > MAX_EXHAUSTIVE_HIDDEN {
        return Err(Error::PermutationSearchTooLarge {
            n: n1,
            max: MAX_EXHAUSTIVE_HIDDEN,
        });
    }
    let mut best: Option<(T, Vec<usize>)> = None;
    for_each_permutation(n1, |perm| {
        let e1 = (permute_rows(w1_hat, perm) - w1).norm_squared();
        let e2 = (permute_cols(w2_hat, perm) - w2).norm_squared();
        let score = e1 + e2;
        if best.as_ref().is_none_or(|(s, _)| score < *s) {
            best = Some((score, perm.to_vec()));
        }
    });
    let (_, permutation) = best.expect("at least one permutation");
    let a1 = permute_rows(w1_hat, &permutation);
    let a2 = permute_cols(w2_hat, &permutation);
    Ok(AlignmentResult {
        w1_error: frobenius_error(&a1, w1)?,
        w2_error: frobenius_error(&a2, w2)?,
        w1_relative: relative_frobenius_error(&a1, w1)?,
        w2_relative: relative_frobenius_error(&a2, w2)?,
        permutation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn frobenius_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = random(3, 4, &mut rng);
        assert_eq!(frobenius_error(&w, &w).unwrap(), 0.0);
        let mut e = w.clone();
        e[(1, 2)] += 3.0;
        assert!((frobenius_error(&e, &w).unwrap() - 3.0).abs() < 1e-14);
        let v = random(3, 4, &mut rng);
        let mut ss = 0.0;
        for i in 0..3 {
            for j in 0..4 {
                ss += (w[(i, j)] - v[(i, j)]).powi(2);
            }
        }
        assert!((frobenius_error(&w, &v).unwrap() - ss.sqrt()).abs() < 1e-12);
        assert!(frobenius_error(&w, &random(4, 3, &mut rng)).is_err());
    }

    #[test]
    fn relative_error_scales() {
        let w = DMatrix::<f64>::from_row_slice(1, 2, &[3.0, 4.0]);
        let e = DMatrix::from_row_slice(1, 2, &[3.0, 5.0]);
        assert!((relative_frobenius_error(&e, &w).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn swapped_hidden_units_align() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w1 = random(2, 3, &mut rng);
        let w2 = random(4, 2, &mut rng);
        let swap = [1, 0];
        let r = permutation_aligned_errors(
            &permute_rows(&w1, &swap),
            &permute_cols(&w2, &swap),
            &w1,
            &w2,
        )
        .unwrap();
        assert_eq!(r.permutation, vec![1, 0]);
        assert_eq!(r.w1_error, 0.0);
        assert_eq!(r.w2_error, 0.0);
        let id = permutation_aligned_errors(&w1, &w2, &w1, &w2).unwrap();
        assert_eq!(id.permutation, vec![0, 1]);
        assert_eq!(id.w1_error + id.w2_error, 0.0);
    }

    #[test]
    fn heap_visits_every_permutation_once() {
        let mut seen = std::collections::HashSet::new();
        for_each_permutation(4, |p| {
            assert!(seen.insert(p.to_vec()));
        });
        assert_eq!(seen.len(), 24);
    }

    #[test]
    fn too_many_hidden_units() {
        let w1 = DMatrix::<f64>::zeros(11, 2);
        let w2 = DMatrix::<f64>::zeros(2, 11);
        assert!(matches!(
            permutation_aligned_errors(&w1, &w2, &w1, &w2),
            Err(Error::PermutationSearchTooLarge { .. })
        ));
    }

    /// Independent brute force: enumerate permutations by recursion.
    fn brute_force(
        w1h: &DMatrix<f64>,
        w2h: &DMatrix<f64>,
        w1: &DMatrix<f64>,
        w2: &DMatrix<f64>,
    ) -> f64 {
        fn rec(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
            if prefix.len() == n {
                out.push(prefix.clone());
                return;
            }
            for i in 0..n {
                if !prefix.contains(&i) {
                    prefix.push(i);
                    rec(prefix, n, out);
                    prefix.pop();
                }
            }
        }
        let mut perms = Vec::new();
        rec(&mut Vec::new(), w1.nrows(), &mut perms);
        perms
            .iter()
            .map(|p| {
                let mut s = 0.0;
                for i in 0..w1.nrows() {
                    for j in 0..w1.ncols() {
                        s += (w1h[(p[i], j)] - w1[(i, j)]).powi(2);
                    }
                    for r in 0..w2.nrows() {
                        s += (w2h[(r, p[i])] - w2[(r, i)]).powi(2);
                    }
                }
                s
            })
            .fold(f64::INFINITY, f64::min)
    }

    proptest! {
        #[test]
        fn matches_brute_force_and_never_worse_than_unaligned(seed in any::<u64>(), n1 in 1usize..5, eps in 0.0f64..0.3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w1 = random(n1, 3, &mut rng);
            let w2 = random(4, n1, &mut rng);
            let mut perm: Vec<usize> = (0..n1).collect();
            perm.reverse();
            let w1h = permute_rows(&w1, &perm) + random(n1, 3, &mut rng) * eps;
            let w2h = permute_cols(&w2, &perm) + random(4, n1, &mut rng) * eps;
            let r = permutation_aligned_errors(&w1h, &w2h, &w1, &w2).unwrap();
            let total = r.w1_error.powi(2) + r.w2_error.powi(2);
            prop_assert!((total - brute_force(&w1h, &w2h, &w1, &w2)).abs() <= 1e-10);
            let unaligned = frobenius_error(&w1h, &w1).unwrap().powi(2) + frobenius_error(&w2h, &w2).unwrap().powi(2);
            prop_assert!(total <= unaligned + 1e-12);
        }

        #[test]
        fn relabelling_both_sides_is_invariant(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (w1, w2) = (random(3, 2, &mut rng), random(4, 3, &mut rng));
            let (w1h, w2h) = (random(3, 2, &mut rng), random(4, 3, &mut rng));
            let p = [2, 0, 1];
            let a = permutation_aligned_errors(&w1h, &w2h, &w1, &w2).unwrap();
            let b = permutation_aligned_errors(&permute_rows(&w1h, &p), &permute_cols(&w2h, &p),
                                               &permute_rows(&w1, &p), &permute_cols(&w2, &p)).unwrap();
            prop_assert!((a.w1_error - b.w1_error).abs() < 1e-12 && (a.w2_error - b.w2_error).abs() < 1e-12);
        }

        #[test]
        fn triangle_inequality(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (a, b, c) = (random(3, 3, &mut rng), random(3, 3, &mut rng), random(3, 3, &mut rng));
            let ab = frobenius_error(&a, &b).unwrap();
            let bc = frobenius_error(&b, &c).unwrap();
            let ac = frobenius_error(&a, &c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-10);
        }
    }
}
