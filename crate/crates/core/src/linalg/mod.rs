//! Dense linear-algebra primitives for small symmetric problems:
//! cyclic-Jacobi eigendecomposition, thin SVD through the smaller Gram
//! matrix, and Perron (leading, sign-normalized) eigenpair extraction.
//!
//! All tolerances are relative to the Frobenius norm of the input.

mod mat;

pub use mat::{dot, norm2, Mat};

use thiserror::Error;

/// Default relative tolerance for symmetry checks and residual tests.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Default relative rank cutoff for [`thin_svd`] (applied to Gram
/// eigenvalues, relative to the largest).
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// Off-diagonal Frobenius threshold at which Jacobi sweeps stop,
/// relative to ‖A‖_F.
const JACOBI_OFF_TOL: f64 = 1e-13;

/// Maximum number of cyclic Jacobi sweeps.
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not symmetric: max |A_ij - A_ji| = {deviation:.3e} exceeds {allowed:.3e}")]
    NotSymmetric { deviation: f64, allowed: f64 },
    #[error("Jacobi iteration did not converge within {JACOBI_MAX_SWEEPS} sweeps")]
    NoConvergence,
    #[error("degenerate input: zero matrix has no singular value decomposition")]
    DegenerateInput,
}

/// Full eigendecomposition of a real symmetric matrix: `A = Q Λ Qᵀ`
/// with eigenvalues sorted in nonincreasing order and the columns of
/// `vectors` paired with them.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

/// Thin singular value decomposition `X = left · diag(singulars) · rightᵀ`
/// truncated at the numerical rank.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub left: Mat,
    pub singulars: Vec<f64>,
    pub right: Mat,
}

impl ThinSvd {
    pub fn rank(&self) -> usize {
        self.singulars.len()
    }

    pub fn reconstruct(&self) -> Mat {
        let mut out = Mat::zeros(self.left.rows(), self.right.rows());
        for r in 0..self.rank() {
            let s = self.singulars[r];
            for i in 0..out.rows() {
                let lir = self.left[(i, r)] * s;
                for j in 0..out.cols() {
                    out[(i, j)] += lir * self.right[(j, r)];
                }
            }
        }
        out
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// `tol` bounds the accepted symmetry deviation, relative to ‖A‖_F.
/// Sweeps stop once the off-diagonal Frobenius mass falls below
/// 1e-13·‖A‖_F; ties in the spectrum keep the stable order produced by
/// the rotations.
pub fn sym_eig(a: &Mat, tol: f64) -> Result<SymEig, LinalgError> {
    assert_eq!(a.rows(), a.cols(), "sym_eig requires a square matrix");
    let n = a.rows();
    let norm = a.frobenius_norm();
    let sym_dev = a.symmetry_deviation();
    if sym_dev > tol * norm {
        return Err(LinalgError::NotSymmetric { deviation: sym_dev, allowed: tol * norm });
    }

    let mut w = a.clone();
    // Symmetrize exactly so rotations act on a perfectly symmetric matrix.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (w[(i, j)] + w[(j, i)]);
            w[(i, j)] = avg;
            w[(j, i)] = avg;
        }
    }
    let mut q = Mat::identity(n);

    if norm == 0.0 {
        return Ok(sorted_eig(vec![0.0; n], q));
    }

    let off_target = JACOBI_OFF_TOL * norm;
    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for r in (p + 1)..n {
                off += w[(p, r)] * w[(p, r)];
            }
        }
        if (2.0 * off).sqrt() <= off_target {
            converged = true;
            break;
        }

        for p in 0..n - 1 {
            for r in (p + 1)..n {
                let apq = w[(p, r)];
                if apq == 0.0 {
                    continue;
                }
                // Rotation angle choosing the smaller root, |t| <= 1.
                let tau = (w[(r, r)] - w[(p, p)]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // W <- Jᵀ W J over rows/columns p and r.
                for k in 0..n {
                    let wkp = w[(k, p)];
                    let wkr = w[(k, r)];
                    w[(k, p)] = c * wkp - s * wkr;
                    w[(k, r)] = s * wkp + c * wkr;
                }
                for k in 0..n {
                    let wpk = w[(p, k)];
                    let wrk = w[(r, k)];
                    w[(p, k)] = c * wpk - s * wrk;
                    w[(r, k)] = s * wpk + c * wrk;
                }
                w[(p, r)] = 0.0;
                w[(r, p)] = 0.0;

                // Accumulate Q <- Q J.
                for k in 0..n {
                    let qkp = q[(k, p)];
                    let qkr = q[(k, r)];
                    q[(k, p)] = c * qkp - s * qkr;
                    q[(k, r)] = s * qkp + c * qkr;
                }
            }
        }
    }
    if !converged {
        return Err(LinalgError::NoConvergence);
    }

    let values = (0..n).map(|i| w[(i, i)]).collect();
    Ok(sorted_eig(values, q))
}

fn sorted_eig(values: Vec<f64>, q: Mat) -> SymEig {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort: exact ties keep the Jacobi output order.
    order.sort_by(|&i, &j| values[j].partial_cmp(&values[i]).unwrap());
    let sorted_values: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let vectors = Mat::from_fn(n, n, |i, j| q[(i, order[j])]);
    SymEig { values: sorted_values, vectors }
}

/// Thin SVD computed through the eigendecomposition of the smaller Gram
/// matrix. `rank_tol` truncates Gram eigenvalues below
/// `rank_tol · (largest eigenvalue)`.
///
/// Column signs are fixed deterministically: the entry of largest
/// magnitude in each left singular vector is made positive (the matching
/// right vector is flipped along with it).
pub fn thin_svd(x: &Mat, rank_tol: f64) -> Result<ThinSvd, LinalgError> {
    if x.is_zero() {
        return Err(LinalgError::DegenerateInput);
    }
    let (k, l) = (x.rows(), x.cols());

    // Eigendecompose the smaller of X·Xᵀ and Xᵀ·X, recover the other side.
    let use_rows = k <= l;
    let gram = if use_rows { x.gram_rows() } else { x.gram_cols() };
    let eig = sym_eig(&gram, DEFAULT_TOL)?;

    let lambda_max = eig.values[0].max(0.0);
    let cutoff = rank_tol * lambda_max;
    let rank = eig.values.iter().take_while(|&&v| v > cutoff).count();
    if rank == 0 {
        return Err(LinalgError::DegenerateInput);
    }

    let singulars: Vec<f64> = eig.values[..rank].iter().map(|&v| v.sqrt()).collect();
    let small = Mat::from_fn(gram.rows(), rank, |i, j| eig.vectors[(i, j)]);

    let (mut left, mut right);
    if use_rows {
        left = small;
        // right_j = Xᵀ · left_j / σ_j
        right = Mat::zeros(l, rank);
        for j in 0..rank {
            let lj = left.col(j);
            for i in 0..l {
                let mut s = 0.0;
                for r in 0..k {
                    s += x[(r, i)] * lj[r];
                }
                right[(i, j)] = s / singulars[j];
            }
        }
    } else {
        right = small;
        left = Mat::zeros(k, rank);
        for j in 0..rank {
            let rj = right.col(j);
            for i in 0..k {
                let mut s = 0.0;
                for c in 0..l {
                    s += x[(i, c)] * rj[c];
                }
                left[(i, j)] = s / singulars[j];
            }
        }
    }

    for j in 0..rank {
        let mut best = 0usize;
        for i in 1..k {
            if left[(i, j)].abs() > left[(best, j)].abs() {
                best = i;
            }
        }
        if left[(best, j)] < 0.0 {
            for i in 0..k {
                left[(i, j)] = -left[(i, j)];
            }
            for i in 0..l {
                right[(i, j)] = -right[(i, j)];
            }
        }
    }

    Ok(ThinSvd { left, singulars, right })
}

/// Leading eigenpair of an entrywise-nonnegative symmetric matrix, with
/// the eigenvector sign-normalized to the nonnegative orthant.
pub fn perron_vector(a: &Mat, tol: f64) -> Result<(f64, Vec<f64>), LinalgError> {
    let eig = sym_eig(a, tol)?;
    let value = eig.values[0];
    let mut v = eig.vectors.col(0);
    if v.iter().sum::<f64>() < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
    // Entries of a true Perron vector are nonnegative; rotation noise can
    // leave values like -1e-17 which we clamp to keep the orthant exact.
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    for x in v.iter_mut() {
        if *x < 0.0 && x.abs() <= 1e-12 * scale {
            *x = 0.0;
        }
    }
    Ok((value, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_symmetric(n: usize, rng: &mut StdRng) -> Mat {
        let mut a = Mat::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = rng.gen_range(-1.0..1.0);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        a
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let eig = sym_eig(&Mat::identity(3), DEFAULT_TOL).unwrap();
        assert_eq!(eig.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_matrix_sorts_descending() {
        let a = Mat::from_rows(&[
            vec![3.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 2.0],
        ]);
        let eig = sym_eig(&a, DEFAULT_TOL).unwrap();
        assert_eq!(eig.values, vec![3.0, 2.0, 1.0]);
        // Eigenvectors are signed unit basis vectors.
        for j in 0..3 {
            let col = eig.vectors.col(j);
            let ones = col.iter().filter(|x| x.abs() == 1.0).count();
            let zeros = col.iter().filter(|&&x| x == 0.0).count();
            assert_eq!((ones, zeros), (1, 2));
        }
    }

    #[test]
    fn two_by_two_hand_computed_spectrum() {
        // Characteristic polynomial of [[2,1],[1,2]]: λ² - 4λ + 3 = (λ-3)(λ-1).
        let a = Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let eig = sym_eig(&a, DEFAULT_TOL).unwrap();
        assert!((eig.values[0] - 3.0).abs() < 1e-14);
        assert!((eig.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_asymmetric_input() {
        let mut a = Mat::identity(3);
        a[(0, 1)] = 0.5;
        match sym_eig(&a, DEFAULT_TOL) {
            Err(LinalgError::NotSymmetric { .. }) => {}
            other => panic!("expected NotSymmetric, got {other:?}"),
        }
    }

    #[test]
    fn random_symmetric_residuals() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..20 {
            let a = random_symmetric(8, &mut rng);
            let eig = sym_eig(&a, DEFAULT_TOL).unwrap();
            // ‖AQ - QΛ‖_F <= 1e-10 ‖A‖_F
            let aq = a.matmul(&eig.vectors);
            let mut ql = eig.vectors.clone();
            for j in 0..8 {
                for i in 0..8 {
                    ql[(i, j)] *= eig.values[j];
                }
            }
            assert!(aq.sub(&ql).frobenius_norm() <= 1e-10 * a.frobenius_norm());
            // Qᵀ Q = I
            let qtq = eig.vectors.gram_cols();
            assert!(qtq.sub(&Mat::identity(8)).frobenius_norm() < 1e-12);
            // nonincreasing
            for w in eig.values.windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn svd_identity() {
        let svd = thin_svd(&Mat::identity(2), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(svd.rank(), 2);
        assert!((svd.singulars[0] - 1.0).abs() < 1e-14);
        assert!((svd.singulars[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn svd_rank_one_diagonal() {
        let x = Mat::from_rows(&[vec![3.0, 0.0], vec![0.0, 0.0]]);
        let svd = thin_svd(&x, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(svd.rank(), 1);
        assert!((svd.singulars[0] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn svd_rejects_zero_matrix() {
        let x = Mat::zeros(3, 4);
        assert!(matches!(thin_svd(&x, DEFAULT_RANK_TOL), Err(LinalgError::DegenerateInput)));
    }

    #[test]
    fn svd_of_the_classical_6x10_matrix_has_uniform_spectrum() {
        // Rank 5 with every singular value √12 (= √(k·l/m)).
        let x = crate::gf2::known_6x10();
        let svd = thin_svd(x.entries(), DEFAULT_RANK_TOL).unwrap();
        assert_eq!(svd.rank(), 5);
        let target = 12.0_f64.sqrt();
        for s in &svd.singulars {
            assert!((s - target).abs() < 1e-12, "singular value {s} vs {target}");
        }
    }

    #[test]
    fn svd_reconstruction_is_idempotent_on_low_rank_inputs() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..10 {
            // Random rank-2 5x7 matrix.
            let a = Mat::from_fn(5, 2, |_, _| rng.gen_range(-1.0..1.0));
            let b = Mat::from_fn(2, 7, |_, _| rng.gen_range(-1.0..1.0));
            let x = a.matmul(&b);
            let svd = thin_svd(&x, DEFAULT_RANK_TOL).unwrap();
            assert_eq!(svd.rank(), 2);
            let once = svd.reconstruct();
            assert!(once.sub(&x).frobenius_norm() <= 1e-10 * x.frobenius_norm());
            let twice = thin_svd(&once, DEFAULT_RANK_TOL).unwrap().reconstruct();
            assert!(twice.sub(&once).frobenius_norm() <= 1e-10 * x.frobenius_norm());
        }
    }

    #[test]
    fn svd_factors_have_orthonormal_columns() {
        let mut rng = StdRng::seed_from_u64(13);
        let x = Mat::from_fn(6, 9, |_, _| rng.gen_range(-1.0..1.0));
        let svd = thin_svd(&x, DEFAULT_RANK_TOL).unwrap();
        let r = svd.rank();
        assert!(svd.left.gram_cols().sub(&Mat::identity(r)).frobenius_norm() < 1e-11);
        assert!(svd.right.gram_cols().sub(&Mat::identity(r)).frobenius_norm() < 1e-11);
    }

    #[test]
    fn perron_all_ones_matrix() {
        let a = Mat::from_fn(4, 4, |_, _| 1.0);
        let (value, v) = perron_vector(&a, DEFAULT_TOL).unwrap();
        assert!((value - 4.0).abs() < 1e-12);
        for x in &v {
            assert!((x - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn perron_identity_returns_a_basis_vector() {
        let (value, v) = perron_vector(&Mat::identity(5), DEFAULT_TOL).unwrap();
        assert_eq!(value, 1.0);
        assert!((norm2(&v) - 1.0).abs() < 1e-14);
        assert!(v.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn perron_matches_top_pair_and_stays_nonnegative() {
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..20 {
            let n = 6;
            let mut a = Mat::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let v = rng.gen_range(0.01..1.0);
                    a[(i, j)] = v;
                    a[(j, i)] = v;
                }
            }
            let (value, v) = perron_vector(&a, DEFAULT_TOL).unwrap();
            assert!(v.iter().all(|&x| x >= 0.0), "negative entry in Perron vector");
            let eig = sym_eig(&a, DEFAULT_TOL).unwrap();
            assert!((value - eig.values[0]).abs() < 1e-12);
            let top = eig.vectors.col(0);
            let align = dot(&v, &top).abs();
            assert!((align - 1.0).abs() < 1e-10);
        }
    }
}
