//! Symmetric eigendecomposition by cyclic Jacobi rotations.
//!
//! Adequate and robust for the small dense matrices this crate deals with
//! (block dimensions of a dozen or so). Deterministic: fixed sweep order,
//! no pivot selection.

use nalgebra::{DMatrix, DVector};

use crate::error::SdpError;

/// Input asymmetry tolerated before the matrix is rejected.
const SYMMETRY_TOL: f64 = 1e-10;
/// Convergence threshold on the off-diagonal Frobenius norm, relative to ‖M‖_F.
const OFF_DIAG_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 100;

/// Eigendecomposition of a symmetric matrix.
///
/// Returns `(eigenvalues, eigenvectors)` with eigenvalues sorted ascending and
/// eigenvectors as the corresponding orthonormal columns, so that
/// `M ≈ V diag(λ) Vᵀ`. The input is symmetrized internally; asymmetry beyond
/// `1e-10` (relative to the largest entry) is an error.
pub fn sym_eig(m: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>), SdpError> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(SdpError::DimensionMismatch {
            context: format!("sym_eig expects a square matrix, got {}x{}", n, m.ncols()),
        });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(SdpError::NonFinite);
    }
    let scale = m.amax().max(1.0);
    let mut max_asym = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            max_asym = max_asym.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if max_asym > SYMMETRY_TOL * scale {
        return Err(SdpError::NotSymmetric {
            max_asymmetry: max_asym,
        });
    }

    let mut a = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let mut v = DMatrix::<f64>::identity(n, n);
    let fro = a.norm().max(f64::MIN_POSITIVE);
    let stop = OFF_DIAG_TOL * fro;

    let mut off = off_diagonal_norm(&a);
    let mut sweeps = 0;
    while off > stop && sweeps < MAX_SWEEPS {
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= stop / (n as f64 * n as f64) {
                    continue;
                }
                // Stable rotation angle (Numerical Recipes convention).
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // A <- Jᵀ A J on rows/columns p, q.
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = c * aip - s * aiq;
                    a[(i, q)] = s * aip + c * aiq;
                }
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = c * apj - s * aqj;
                    a[(q, j)] = s * apj + c * aqj;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip - s * viq;
                    v[(i, q)] = s * vip + c * viq;
                }
            }
        }
        off = off_diagonal_norm(&a);
        sweeps += 1;
    }
    if off > 1e-10 * fro {
        return Err(SdpError::EigenNoConvergence { residual: off });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap());
    let values = DVector::from_fn(n, |i, _| a[(order[i], order[i])]);
    let vectors = DMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok((values, vectors))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eig(m: &DMatrix<f64>) -> Result<f64, SdpError> {
    let (values, _) = sym_eig(m)?;
    Ok(values[0])
}

fn off_diagonal_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[(i, j)] * a[(i, j)];
            }
        }
    }
    acc.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_has_unit_eigenvalues() {
        let (vals, _) = sym_eig(&DMatrix::identity(4, 4)).unwrap();
        for v in vals.iter() {
            assert_relative_eq!(*v, 1.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn diagonal_is_sorted_ascending() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let (vals, _) = sym_eig(&m).unwrap();
        assert_eq!(vals.as_slice(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn reconstructs_random_symmetric_matrix() {
        // Deterministic pseudo-random symmetric 8x8.
        let mut seed = 0x2545F4914F6CDD1Du64;
        let mut next = || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let n = 8;
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let x = next();
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
        }
        let (vals, vecs) = sym_eig(&m).unwrap();
        let recon = &vecs * DMatrix::from_diagonal(&vals) * vecs.transpose();
        assert!((&recon - &m).norm() < 1e-10 * m.norm());
        let gram = vecs.transpose() * &vecs;
        assert!((gram - DMatrix::<f64>::identity(n, n)).norm() < 1e-10);
    }

    #[test]
    fn min_eig_basics() {
        assert_relative_eq!(min_eig(&DMatrix::identity(3, 3)).unwrap(), 1.0);
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![-2.0, 5.0]));
        assert_relative_eq!(min_eig(&m).unwrap(), -2.0);
    }

    #[test]
    fn rank_one_psd_has_zero_min_eig() {
        let v = DVector::from_vec(vec![0.3, -1.2, 0.7, 2.1]);
        let m = &v * v.transpose();
        let min = min_eig(&m).unwrap();
        assert!(min.abs() < 1e-10, "min eig {min}");
    }

    #[test]
    fn rejects_asymmetric_input() {
        let mut m = DMatrix::identity(3, 3);
        m[(0, 1)] = 1.0;
        assert!(matches!(sym_eig(&m), Err(SdpError::NotSymmetric { .. })));
    }

    #[test]
    fn rejects_non_finite() {
        let mut m = DMatrix::identity(2, 2);
        m[(0, 0)] = f64::NAN;
        assert!(matches!(sym_eig(&m), Err(SdpError::NonFinite)));
    }
}
