//! Complex dense matrix routines shared by every other module.
//!
//! Matrices are `nalgebra` dynamic matrices over `Complex<f64>`; this module
//! adds the factorizations the pipeline needs (SVD, Hermitian log-det and
//! solve) with explicit error reporting instead of panics.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

/// Dense complex matrix, double precision.
pub type CMat = DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVec = DVector<Complex64>;

pub const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("SVD did not converge within the iteration cap")]
    SvdNonConvergence,
    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

/// Singular value decomposition `m = u * diag(s) * v^H` with `s` descending.
pub struct Svd {
    pub u: CMat,
    pub s: DVector<f64>,
    pub v: CMat,
}

const SVD_SWEEP_CAP: usize = 64;

/// Thin SVD with singular values sorted in descending order.
///
/// One-sided Jacobi: rotations orthogonalize column pairs of a working
/// copy while accumulating into V; singular values are the final column
/// norms. Fails explicitly if the off-diagonal coupling has not vanished
/// after [`SVD_SWEEP_CAP`] sweeps.
pub fn svd(m: &CMat) -> Result<Svd, LinalgError> {
    if m.nrows() < m.ncols() {
        let t = svd(&m.adjoint())?;
        return Ok(Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        });
    }
    let n = m.ncols();
    let mut a = m.clone();
    let mut v = CMat::identity(n, n);
    let mut converged = false;
    for _ in 0..SVD_SWEEP_CAP {
        let mut rotated = false;
        for i in 0..n.saturating_sub(1) {
            for j in i + 1..n {
                let alpha: f64 = a.column(i).norm_squared();
                let beta: f64 = a.column(j).norm_squared();
                let gamma: Complex64 = a
                    .column(i)
                    .iter()
                    .zip(a.column(j).iter())
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                let g = gamma.norm();
                if g <= 1e-15 * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                // Fold the phase of the coupling into column j (and V),
                // then apply the real Jacobi rotation.
                let phase = gamma / g;
                let tau = (beta - alpha) / (2.0 * g);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..a.nrows() {
                    let ai = a[(r, i)];
                    let aj = a[(r, j)] * phase.conj();
                    a[(r, i)] = ai.scale(c) - aj.scale(s);
                    a[(r, j)] = ai.scale(s) + aj.scale(c);
                }
                for r in 0..n {
                    let vi = v[(r, i)];
                    let vj = v[(r, j)] * phase.conj();
                    v[(r, i)] = vi.scale(c) - vj.scale(s);
                    v[(r, j)] = vi.scale(s) + vj.scale(c);
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(LinalgError::SvdNonConvergence);
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|k| a.column(k).norm()).collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap());
    let s = DVector::from_iterator(n, order.iter().map(|&k| norms[k]));
    let v_sorted = CMat::from_columns(&order.iter().map(|&k| v.column(k)).collect::<Vec<_>>());

    // Left vectors: normalized columns, with numerically null directions
    // completed to an orthonormal set by Gram-Schmidt over unit vectors.
    let sigma_max = s[0];
    let mut u = CMat::zeros(m.nrows(), n);
    for (out_col, &k) in order.iter().enumerate() {
        if norms[k] > sigma_max * 1e-12 && norms[k] > 0.0 {
            u.set_column(out_col, &(a.column(k) / Complex64::new(norms[k], 0.0)));
        }
    }
    for out_col in 0..n {
        if u.column(out_col).norm() > 0.5 {
            continue;
        }
        'basis: for b in 0..m.nrows() {
            let mut cand = CMat::zeros(m.nrows(), 1);
            cand[(b, 0)] = Complex64::new(1.0, 0.0);
            for other in 0..n {
                if other == out_col {
                    continue;
                }
                let proj: Complex64 = u
                    .column(other)
                    .iter()
                    .zip(cand.column(0).iter())
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                let col = u.column(other).into_owned();
                cand.set_column(0, &(cand.column(0) - col * proj));
            }
            let nrm = cand.norm();
            if nrm > 0.5 {
                u.set_column(out_col, &(cand.column(0) / Complex64::new(nrm, 0.0)));
                break 'basis;
            }
        }
    }
    Ok(Svd {
        u,
        s,
        v: v_sorted,
    })
}

fn max_asymmetry(m: &CMat) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            worst = worst.max(d);
        }
    }
    worst
}

/// Lower-triangular Cholesky factor of a Hermitian positive definite
/// matrix. Hand-rolled because nalgebra's complex Cholesky does not
/// reject indefinite input; a non-positive pivot is an explicit error.
fn cholesky_hermitian(m: &CMat) -> Result<CMat, LinalgError> {
    if m.nrows() != m.ncols() {
        return Err(LinalgError::ShapeMismatch(format!(
            "{}x{} not square",
            m.nrows(),
            m.ncols()
        )));
    }
    let asym = max_asymmetry(m);
    if asym > HERMITIAN_TOL {
        return Err(LinalgError::NotHermitian(asym));
    }
    let n = m.nrows();
    let mut l = CMat::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(LinalgError::NotPositiveDefinite);
        }
        let dj = d.sqrt();
        l[(j, j)] = Complex64::new(dj, 0.0);
        for i in j + 1..n {
            let mut s = (m[(i, j)] + m[(j, i)].conj()).scale(0.5);
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / dj;
        }
    }
    Ok(l)
}

/// log2 det of a Hermitian positive definite matrix, via Cholesky.
pub fn logdet_hermitian_pd(m: &CMat) -> Result<f64, LinalgError> {
    let l = cholesky_hermitian(m)?;
    let acc: f64 = (0..l.nrows()).map(|k| l[(k, k)].re.log2()).sum();
    Ok(2.0 * acc)
}

/// Solves `a x = b` for Hermitian positive definite `a`.
pub fn hermitian_solve(a: &CMat, b: &CMat) -> Result<CMat, LinalgError> {
    if a.nrows() != b.nrows() {
        return Err(LinalgError::ShapeMismatch(format!(
            "a is {}x{}, b is {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    let l = cholesky_hermitian(a)?;
    let n = l.nrows();
    let mut x = b.clone();
    // forward: L y = b
    for col in 0..x.ncols() {
        for i in 0..n {
            let mut s = x[(i, col)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)];
        }
        // backward: L^H x = y
        for i in (0..n).rev() {
            let mut s = x[(i, col)];
            for k in i + 1..n {
                s -= l[(k, i)].conj() * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)];
        }
    }
    Ok(x)
}

/// One draw of a circularly-symmetric complex Gaussian, unit variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with i.i.d. CN(0,1) entries.
pub fn random_cmat<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn svd_identity_2x2() {
        let m = CMat::identity(2, 2);
        let d = svd(&m).unwrap();
        assert!((d.s[0] - 1.0).abs() < 1e-12);
        assert!((d.s[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn svd_diagonal_sorted() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![c(3.0, 0.0), c(4.0, 0.0)]));
        let d = svd(&m).unwrap();
        assert!((d.s[0] - 4.0).abs() < 1e-12);
        assert!((d.s[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn svd_reconstructs_random_8x4() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = random_cmat(8, 4, &mut rng);
        let d = svd(&m).unwrap();
        let rebuilt = &d.u * CMat::from_diagonal(&d.s.map(|x| c(x, 0.0))) * d.v.adjoint();
        assert!((&rebuilt - &m).norm() / m.norm() < 1e-9);
        // orthonormal columns
        let gram_u = d.u.adjoint() * &d.u;
        let gram_v = d.v.adjoint() * &d.v;
        assert!((gram_u - CMat::identity(4, 4)).norm() < 1e-9);
        assert!((gram_v - CMat::identity(4, 4)).norm() < 1e-9);
    }

    #[test]
    fn svd_invariant_under_unitary_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let m = random_cmat(5, 5, &mut rng);
        let q = svd(&random_cmat(5, 5, &mut rng)).unwrap().u; // random unitary
        let s0 = svd(&m).unwrap().s;
        let s1 = svd(&(&q * &m)).unwrap().s;
        let s2 = svd(&(&m * &q)).unwrap().s;
        for k in 0..5 {
            assert!((s0[k] - s1[k]).abs() < 1e-9);
            assert!((s0[k] - s2[k]).abs() < 1e-9);
        }
    }

    #[test]
    fn logdet_identity_is_zero() {
        assert!(logdet_hermitian_pd(&CMat::identity(3, 3)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn logdet_diagonal() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![c(2.0, 0.0), c(4.0, 0.0)]));
        assert!((logdet_hermitian_pd(&m).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn logdet_rank_one_update() {
        // det(I + v v^H) = 1 + ||v||^2 = 2 for unit v.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut v = random_cmat(4, 1, &mut rng);
        let n = v.norm();
        v.apply(|z| *z /= c(n, 0.0));
        let m = CMat::identity(4, 4) + &v * v.adjoint();
        assert!((logdet_hermitian_pd(&m).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn logdet_inverse_cancels() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_cmat(4, 4, &mut rng);
        let pd = &a * a.adjoint() + CMat::identity(4, 4);
        let inv = hermitian_solve(&pd, &CMat::identity(4, 4)).unwrap();
        let sum = logdet_hermitian_pd(&pd).unwrap() + logdet_hermitian_pd(&inv).unwrap();
        assert!(sum.abs() < 1e-8);
    }

    #[test]
    fn logdet_rejects_indefinite() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![c(1.0, 0.0), c(-1.0, 0.0)]));
        assert!(matches!(
            logdet_hermitian_pd(&m),
            Err(LinalgError::NotPositiveDefinite)
        ));
    }

    #[test]
    fn logdet_rejects_non_hermitian() {
        let mut m = CMat::identity(2, 2);
        m[(0, 1)] = c(1.0, 0.0);
        assert!(matches!(
            logdet_hermitian_pd(&m),
            Err(LinalgError::NotHermitian(_))
        ));
    }

    #[test]
    fn solve_identity_and_scalar() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b = random_cmat(3, 2, &mut rng);
        let x = hermitian_solve(&CMat::identity(3, 3), &b).unwrap();
        assert!((&x - &b).norm() < 1e-12);
        let a2 = CMat::identity(3, 3).scale(2.0);
        let x2 = hermitian_solve(&a2, &CMat::identity(3, 3)).unwrap();
        assert!((&x2 - CMat::identity(3, 3).scale(0.5)).norm() < 1e-12);
    }

    #[test]
    fn solve_residual_random_pd() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let g = random_cmat(6, 6, &mut rng);
        let a = &g * g.adjoint() + CMat::identity(6, 6);
        let b = random_cmat(6, 3, &mut rng);
        let x = hermitian_solve(&a, &b).unwrap();
        assert!((&a * &x - &b).norm() / b.norm() < 1e-9);
    }

    #[test]
    fn trace_gram_equals_frobenius_squared() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let m = random_cmat(5, 3, &mut rng);
            let tr = (m.adjoint() * &m).trace().re;
            let f2 = m.norm().powi(2);
            assert!((tr - f2).abs() / f2 < 1e-12);
        }
    }

    #[test]
    fn adjoint_involution_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let m = random_cmat(4, 7, &mut rng);
        let back = m.adjoint().adjoint();
        assert_eq!(m, back);
    }
}
