//! Dense symmetric linear algebra: cyclic Jacobi eigendecomposition,
//! eigenvalue-clipping PSD repair and a semidefinite-tolerant Cholesky.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default eigenvalue floor for [`psd_repair`].
pub const DEFAULT_PSD_FLOOR: f64 = 1e-10;

const MAX_JACOBI_SWEEPS: usize = 100;
const JACOBI_OFF_TOL: f64 = 1e-13;
const SYMMETRY_TOL: f64 = 1e-12;

/// Eigenpairs of a real symmetric matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: DVector<f64>,
    /// Orthonormal eigenvectors stored as columns.
    pub eigenvectors: DMatrix<f64>,
}

impl EigenDecomposition {
    /// `U diag(lambda) U^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let u = &self.eigenvectors;
        let scaled = u * DMatrix::from_diagonal(&self.eigenvalues);
        scaled * u.transpose()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Largest |a_ij - a_ji|.
pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

fn check_square(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    Ok(())
}

fn off_diagonal_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
pub fn sym_eigen(m: &DMatrix<f64>) -> Result<EigenDecomposition> {
    check_square(m)?;
    let asym = max_asymmetry(m);
    if asym > SYMMETRY_TOL {
        return Err(Error::Asymmetric(asym));
    }
    let n = m.nrows();
    // Work on the exactly symmetrised input.
    let mut a = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = a.norm().max(1.0);

    let mut converged = n <= 1;
    for _ in 0..MAX_JACOBI_SWEEPS {
        if off_diagonal_norm(&a) < JACOBI_OFF_TOL * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let s = if theta >= 0.0 { 1.0 } else { -1.0 };
                    s / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged && off_diagonal_norm(&a) < JACOBI_OFF_TOL * scale {
        converged = true;
    }
    if !converged {
        return Err(Error::EigenNoConvergence(MAX_JACOBI_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| a[(i, i)]));
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Nearest-correlation-style repair: clip eigenvalues to at least `floor`,
/// rescale back to a unit diagonal and repeat until the smallest computed
/// eigenvalue clears `floor`. A matrix that already satisfies the floor is
/// returned unchanged, which makes the map idempotent.
pub fn psd_repair(m: &DMatrix<f64>, floor: f64) -> Result<DMatrix<f64>> {
    check_square(m)?;
    if !(floor >= 0.0 && floor.is_finite()) {
        return Err(Error::domain("psd_repair", format!("floor must be >= 0, got {floor}")));
    }
    let asym = max_asymmetry(m);
    if asym > SYMMETRY_TOL {
        return Err(Error::Asymmetric(asym));
    }
    let n = m.nrows();
    if let Some(i) = (0..n).find(|&i| (m[(i, i)] - 1.0).abs() > 1e-9) {
        return Err(Error::domain(
            "psd_repair",
            format!("diagonal entry {i} is {} (expected 1)", m[(i, i)]),
        ));
    }

    // Clip slightly above the floor so a single pass usually suffices after
    // the diagonal rescaling pulls the spectrum down.
    let target = floor * (1.0 + 1e-6) + 64.0 * f64::EPSILON * (n as f64);
    let mut cur = m.clone();
    for _ in 0..100 {
        let eig = sym_eigen(&cur)?;
        if eig.min_eigenvalue() >= floor {
            return Ok(cur);
        }
        let clipped = EigenDecomposition {
            eigenvalues: eig.eigenvalues.map(|l| l.max(target)),
            eigenvectors: eig.eigenvectors,
        };
        let a = clipped.reconstruct();
        let d: Vec<f64> = (0..n).map(|i| a[(i, i)].sqrt()).collect();
        let mut next = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                1.0
            } else {
                (a[(i, j)] / (d[i] * d[j])).clamp(-1.0, 1.0)
            }
        });
        for i in 0..n {
            for j in (i + 1)..n {
                let s = 0.5 * (next[(i, j)] + next[(j, i)]);
                next[(i, j)] = s;
                next[(j, i)] = s;
            }
        }
        cur = next;
    }
    Ok(cur)
}

/// Lower-triangular Cholesky factor of a positive semidefinite matrix.
///
/// Pivots that collapse to rounding level are treated as exact zeros (the
/// corresponding column of the factor is zeroed); a clearly negative pivot
/// is an error.
pub fn cholesky_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square(m)?;
    let n = m.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        let scale = m[(j, j)].abs().max(1.0);
        if d < -1e-8 * scale {
            return Err(Error::Cholesky { pivot: j, value: d });
        }
        if d <= 1e-14 * scale {
            continue;
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    fn lcg_matrix(n: usize, seed: u64) -> DMatrix<f64> {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        let raw = DMatrix::from_fn(n, n, |_, _| next());
        &raw + raw.transpose()
    }

    #[test]
    fn identity_eigenvalues() {
        let e = sym_eigen(&DMatrix::identity(4, 4)).unwrap();
        assert!(e.eigenvalues.iter().all(|&l| (l - 1.0).abs() < 1e-15));
    }

    #[test]
    fn two_by_two_closed_form() {
        let rho = 0.37;
        let m = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
        let e = sym_eigen(&m).unwrap();
        assert!((e.eigenvalues[0] - (1.0 + rho)).abs() < 1e-14);
        assert!((e.eigenvalues[1] - (1.0 - rho)).abs() < 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let u0 = e.eigenvectors.column(0);
        let u1 = e.eigenvectors.column(1);
        assert!((u0[0].abs() - h).abs() < 1e-12 && (u0[0] - u0[1]).abs() < 1e-12);
        assert!((u1[0].abs() - h).abs() < 1e-12 && (u1[0] + u1[1]).abs() < 1e-12);
    }

    #[test]
    fn random_symmetric_reconstruction() {
        for seed in 1..6 {
            let m = lcg_matrix(5, seed);
            let e = sym_eigen(&m).unwrap();
            assert!(max_abs_diff(&e.reconstruct(), &m) < 1e-10);
            let gram = e.eigenvectors.transpose() * &e.eigenvectors;
            assert!(max_abs_diff(&gram, &DMatrix::identity(5, 5)) < 1e-10);
            assert!((e.eigenvalues.sum() - m.trace()).abs() < 1e-10);
            assert!(e.eigenvalues.as_slice().windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn agrees_with_nalgebra_spectrum() {
        let m = lcg_matrix(8, 42);
        let ours = sym_eigen(&m).unwrap();
        let mut theirs: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        theirs.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in ours.eigenvalues.iter().zip(&theirs) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn asymmetric_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(sym_eigen(&m), Err(Error::Asymmetric(_))));
    }

    #[test]
    fn repair_identity_is_noop() {
        let i = DMatrix::<f64>::identity(3, 3);
        assert_eq!(psd_repair(&i, DEFAULT_PSD_FLOOR).unwrap(), i);
    }

    #[test]
    fn repair_slightly_indefinite_pair() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.000001, 1.000001, 1.0]);
        let r = psd_repair(&m, DEFAULT_PSD_FLOOR).unwrap();
        assert!(max_abs_diff(&r, &DMatrix::from_element(2, 2, 1.0)) < 1e-5);
        assert_eq!(r[(0, 0)], 1.0);
        assert!(sym_eigen(&r).unwrap().min_eigenvalue() >= DEFAULT_PSD_FLOOR);
    }

    #[test]
    fn repair_is_idempotent_and_keeps_psd_inputs() {
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0],
        );
        let once = psd_repair(&m, DEFAULT_PSD_FLOOR).unwrap();
        let twice = psd_repair(&once, DEFAULT_PSD_FLOOR).unwrap();
        assert!(max_abs_diff(&once, &twice) < 1e-12);

        let good = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]);
        assert!(max_abs_diff(&psd_repair(&good, DEFAULT_PSD_FLOOR).unwrap(), &good) < 1e-12);
    }

    #[test]
    fn repair_rejects_bad_diagonal() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        assert!(psd_repair(&m, 0.0).is_err());
    }

    #[test]
    fn cholesky_reconstructs_and_tolerates_singular() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.2, 0.5, 1.0, 0.3, 0.2, 0.3, 1.0]);
        let l = cholesky_psd(&m).unwrap();
        assert!(max_abs_diff(&(&l * l.transpose()), &m) < 1e-14);

        let ones = DMatrix::from_element(3, 3, 1.0);
        let l = cholesky_psd(&ones).unwrap();
        assert!(max_abs_diff(&(&l * l.transpose()), &ones) < 1e-14);

        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(cholesky_psd(&bad).is_err());
    }
}
