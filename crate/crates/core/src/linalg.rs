//! Rank and nullspace by Gaussian elimination with a relative pivot
//! threshold.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::algebra::CMatrix;

/// Default relative pivot threshold.
pub const DEFAULT_PIVOT_THRESHOLD: f64 = 1e-8;

/// Rank of a real matrix by column-pivoted elimination. A pivot is accepted
/// when its modulus exceeds `rel_threshold` times the largest entry of the
/// input.
pub fn rank_real(m: &DMatrix<f64>, rel_threshold: f64) -> usize {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return 0;
    }
    let scale = m.amax();
    if scale == 0.0 {
        return 0;
    }
    let cutoff = rel_threshold * scale;
    // Row-major working copy; each row is eliminated against the pivot rows.
    let mut a: Vec<Vec<f64>> = (0..rows).map(|i| m.row(i).iter().copied().collect()).collect();
    let mut rank = 0;
    let mut active: Vec<usize> = (0..rows).collect();
    for _ in 0..rows.min(cols) {
        // Column pivoting: largest remaining entry over the active rows.
        let mut best = (0.0, 0, 0);
        for (slot, &r) in active.iter().enumerate() {
            for (j, &v) in a[r].iter().enumerate() {
                if v.abs() > best.0 {
                    best = (v.abs(), slot, j);
                }
            }
        }
        if best.0 <= cutoff {
            break;
        }
        let (_, slot, pc) = best;
        let pr = active.swap_remove(slot);
        let pivot_row = std::mem::take(&mut a[pr]);
        let pv = pivot_row[pc];
        for &r in &active {
            let factor = a[r][pc] / pv;
            if factor != 0.0 {
                for (x, &p) in a[r].iter_mut().zip(&pivot_row) {
                    if p != 0.0 {
                        *x -= factor * p;
                    }
                }
                a[r][pc] = 0.0;
            }
        }
        rank += 1;
    }
    rank
}

/// Real representation `[[Re, −Im], [Im, Re]]` of a complex matrix.
pub fn split_complex(m: &CMatrix) -> DMatrix<f64> {
    let (r, c) = m.shape();
    DMatrix::from_fn(2 * r, 2 * c, |i, j| {
        let z = m[(i % r, j % c)];
        match (i < r, j < c) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Complex rank, computed on the real split (whose rank is twice the
/// complex rank).
pub fn rank_complex(m: &CMatrix, rel_threshold: f64) -> usize {
    rank_real(&split_complex(m), rel_threshold) / 2
}

/// Basis of the nullspace `{x : m x = 0}` of a complex matrix, from the
/// reduced row echelon form with partial pivoting.
pub fn nullspace(m: &CMatrix, rel_threshold: f64) -> Vec<Vec<Complex64>> {
    let (rows, cols) = m.shape();
    let scale = m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    if scale == 0.0 {
        return (0..cols)
            .map(|j| {
                let mut v = vec![Complex64::default(); cols];
                v[j] = Complex64::new(1.0, 0.0);
                v
            })
            .collect();
    }
    let cutoff = rel_threshold * scale;
    let mut a = m.clone();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        if row == rows {
            break;
        }
        let (best, val) = (row..rows)
            .map(|r| (r, a[(r, col)].norm()))
            .fold((row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= cutoff {
            continue;
        }
        a.swap_rows(row, best);
        let pv = a[(row, col)];
        for j in 0..cols {
            a[(row, j)] /= pv;
        }
        for r in 0..rows {
            if r != row {
                let factor = a[(r, col)];
                if factor != Complex64::default() {
                    for j in 0..cols {
                        let p = a[(row, j)];
                        a[(r, j)] -= factor * p;
                    }
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Complex64::default(); cols];
            v[f] = Complex64::new(1.0, 0.0);
            for (r, &p) in pivots.iter().enumerate() {
                v[p] = -a[(r, f)];
            }
            v
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::random_matrix;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn rank_of_products() {
        let mut rng = StdRng::seed_from_u64(1);
        for k in 0..5 {
            let a = random_matrix(7, k, &mut rng);
            let b = random_matrix(k, 6, &mut rng);
            let m = &a * &b;
            assert_eq!(rank_complex(&m, DEFAULT_PIVOT_THRESHOLD), k);
            assert_eq!(nullspace(&m, DEFAULT_PIVOT_THRESHOLD).len(), 6 - k);
        }
    }

    #[test]
    fn rank_of_zero_and_empty() {
        assert_eq!(rank_real(&DMatrix::zeros(3, 4), 1e-8), 0);
        assert_eq!(rank_real(&DMatrix::zeros(0, 4), 1e-8), 0);
        assert_eq!(nullspace(&CMatrix::zeros(2, 3), 1e-8).len(), 3);
    }

    #[test]
    fn nullspace_vectors_are_annihilated() {
        let mut rng = StdRng::seed_from_u64(2);
        let a = random_matrix(4, 2, &mut rng);
        let b = random_matrix(2, 5, &mut rng);
        let m = &a * &b;
        for v in nullspace(&m, DEFAULT_PIVOT_THRESHOLD) {
            let x = nalgebra::DVector::from_vec(v);
            assert!((&m * x).iter().all(|z| z.norm() < 1e-12));
        }
    }

    #[test]
    fn split_rank_is_twice_complex_rank() {
        let mut rng = StdRng::seed_from_u64(3);
        let a = random_matrix(5, 3, &mut rng);
        let m = &a * a.adjoint();
        assert_eq!(rank_real(&split_complex(&m), 1e-8), 6);
    }

    #[test]
    fn small_pivots_are_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-12]);
        assert_eq!(rank_real(&m, 1e-8), 1);
        assert_eq!(rank_real(&m, 1e-14), 2);
    }
}
