//! Stabilizing solution of the continuous-time algebraic Riccati equation
//!
//! `AᵀX + XA − XB(DᵀD)⁻¹BᵀX + CᵀC = 0`
//!
//! and the associated centralized H2-optimal `Q = (A − BL, F, −L, 0)`,
//! `L = (DᵀD)⁻¹BᵀX`, for the problem `min ‖H11 + H12 Q‖` over stable `Q`.
//!
//! The stable invariant subspace of the Hamiltonian matrix is obtained from
//! its matrix sign function; the resulting `X` is then polished with a few
//! Newton–Kleinman steps.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{self, hstack, to_complex, vstack};
use crate::statespace::{self, StateSpace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiccatiError {
    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),
    #[error("NotStabilizable: (A, B) fails the Hautus test")]
    NotStabilizable,
    #[error("CrossTermNonzero: |CᵀD| = {0:.3e}")]
    CrossTermNonzero(f64),
    #[error("InputWeightSingular: DᵀD is not positive definite")]
    InputWeightSingular,
    #[error("SubspaceExtractionFailure: {0}")]
    SubspaceExtractionFailure(String),
}

/// Solution triple of the centralized problem.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    /// Stabilizing Riccati solution, symmetric positive semidefinite.
    pub x: DMatrix<f64>,
    /// State-feedback gain `L = (DᵀD)⁻¹BᵀX`.
    pub gain: DMatrix<f64>,
    /// Optimal `Q = (A − BL, F, −L, 0)`.
    pub q: StateSpace,
    /// Frobenius norm of the Riccati residual.
    pub residual: f64,
}

const CROSS_TERM_TOL: f64 = 1e-9;
const SYMMETRY_TOL: f64 = 1e-6;
const PSD_FLOOR: f64 = -1e-9;

/// PBH test: `rank [A − λI, B] = n` at every eigenvalue with `Re λ >= 0`.
pub fn hautus_stabilizable(a: &DMatrix<f64>, b: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n {
        return false;
    }
    let Some(eig) = linalg::eigenvalues(a) else {
        return false;
    };
    let bc = to_complex(b);
    eig.iter().filter(|z| z.re >= -1e-12).all(|&lambda| {
        let shifted = to_complex(a) - linalg::CMatrix::identity(n, n) * lambda;
        let mut pencil = linalg::CMatrix::zeros(n, n + b.ncols());
        pencil.view_mut((0, 0), (n, n)).copy_from(&shifted);
        pencil.view_mut((0, n), (n, b.ncols())).copy_from(&bc);
        linalg::rank_c(&pencil) == n
    })
}

/// `‖AᵀX + XA − XB R⁻¹ BᵀX + CᵀC‖_F` with `R = DᵀD`.
pub fn care_residual(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
    x: &DMatrix<f64>,
) -> f64 {
    let r = d.transpose() * d;
    let Some(r_inv) = r.try_inverse() else {
        return f64::INFINITY;
    };
    (a.transpose() * x + x * a - x * b * r_inv * b.transpose() * x + c.transpose() * c).norm()
}

/// Matrix sign function by scaled Newton iteration.
fn matrix_sign(h: &DMatrix<f64>) -> Result<DMatrix<f64>, RiccatiError> {
    let dim = h.nrows() as f64;
    let mut z = h.clone();
    let mut scale = true;
    let mut change = f64::INFINITY;
    for _ in 0..200 {
        let lu = z.clone().lu();
        let log_det: f64 = lu.u().diagonal().iter().map(|x| x.abs().ln()).sum();
        let z_inv = lu.try_inverse().filter(|m| m.iter().all(|x| x.is_finite())).ok_or_else(|| {
            RiccatiError::SubspaceExtractionFailure(
                "Hamiltonian matrix has eigenvalues on the imaginary axis".into(),
            )
        })?;
        let c = if scale { (log_det / dim).exp() } else { 1.0 };
        let next = (&z / c + z_inv * c) * 0.5;
        change = (&next - &z).abs().row_sum().max() / next.abs().row_sum().max();
        z = next;
        if change < 1e-2 {
            scale = false;
        }
        if change < 1e-13 {
            return Ok(z);
        }
    }
    // a slowly converging iterate is still good enough for Newton polishing
    if change < 1e-6 {
        log::debug!("matrix sign iteration stopped at relative change {change:.3e}");
        return Ok(z);
    }
    Err(RiccatiError::SubspaceExtractionFailure(
        "matrix sign iteration did not converge".into(),
    ))
}

fn newton_step(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    r_inv: &DMatrix<f64>,
    x: &DMatrix<f64>,
) -> Option<DMatrix<f64>> {
    let l = r_inv * b.transpose() * x;
    let ac = a - b * &l;
    let w = q + l.transpose() * r * &l;
    statespace::lyapunov(&ac.transpose(), &w).ok()
}

/// Solves the centralized problem for `H = [A | F  B ; C | 0  D]`.
pub fn ric(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
    f: &DMatrix<f64>,
) -> Result<RiccatiSolution, RiccatiError> {
    let n = a.nrows();
    let m = b.ncols();
    if a.ncols() != n || b.nrows() != n || c.ncols() != n || f.nrows() != n || d.nrows() != c.nrows() || d.ncols() != m {
        return Err(RiccatiError::DimensionMismatch(format!(
            "A {:?}, B {:?}, C {:?}, D {:?}, F {:?}",
            a.shape(),
            b.shape(),
            c.shape(),
            d.shape(),
            f.shape()
        )));
    }
    let cross = (c.transpose() * d).amax();
    if cross > CROSS_TERM_TOL * (1.0 + c.amax() * d.amax()) {
        return Err(RiccatiError::CrossTermNonzero(cross));
    }
    let r = d.transpose() * d;
    if m > 0 {
        let eig = SymmetricEigen::new(r.clone()).eigenvalues;
        let hi = eig.max().max(1.0);
        if eig.min() <= 1e-12 * hi {
            return Err(RiccatiError::InputWeightSingular);
        }
    }
    if !hautus_stabilizable(a, b) {
        return Err(RiccatiError::NotStabilizable);
    }
    let r_inv = r.clone().try_inverse().ok_or(RiccatiError::InputWeightSingular)?;
    let qw = c.transpose() * c;

    let x = if n == 0 {
        DMatrix::zeros(0, 0)
    } else {
        let g = b * &r_inv * b.transpose();
        let top = hstack(&[a, &(-&g)]);
        let bottom = hstack(&[&(-&qw), &(-a.transpose())]);
        let ham = vstack(&[&top, &bottom]);
        let s = matrix_sign(&ham)?;

        let eye = DMatrix::<f64>::identity(n, n);
        let s11 = s.view((0, 0), (n, n));
        let s12 = s.view((0, n), (n, n));
        let s21 = s.view((n, 0), (n, n));
        let s22 = s.view((n, n), (n, n));
        // (S + I) annihilates the stable subspace span [I; X]
        let lhs = vstack(&[&s12.into_owned(), &(s22 + &eye)]);
        let rhs = -vstack(&[&(s11 + &eye), &s21.into_owned()]);
        let x = lhs
            .svd(true, true)
            .solve(&rhs, 1e-14)
            .map_err(|e| RiccatiError::SubspaceExtractionFailure(e.to_string()))?;
        let asym = (&x - x.transpose()).norm();
        if asym > SYMMETRY_TOL * x.norm().max(1e-300) {
            return Err(RiccatiError::SubspaceExtractionFailure(format!(
                "extracted solution is not symmetric (|X - Xᵀ| = {asym:.3e})"
            )));
        }
        let mut x = (&x + x.transpose()) * 0.5;

        let mut res = care_residual(a, b, c, d, &x);
        for _ in 0..4 {
            let scale = 1.0 + x.norm();
            if res <= 1e-13 * scale {
                break;
            }
            let Some(next) = newton_step(a, b, &qw, &r, &r_inv, &x) else {
                break;
            };
            let next = (&next + next.transpose()) * 0.5;
            let next_res = care_residual(a, b, c, d, &next);
            if !(next_res < res) {
                break;
            }
            x = next;
            res = next_res;
        }
        x
    };

    if n > 0 {
        let min_eig = SymmetricEigen::new(x.clone()).eigenvalues.min();
        if min_eig < PSD_FLOOR * (1.0 + x.norm()) {
            return Err(RiccatiError::SubspaceExtractionFailure(format!(
                "solution is indefinite (smallest eigenvalue {min_eig:.3e})"
            )));
        }
    }

    let gain = &r_inv * b.transpose() * &x;
    let a_cl = a - b * &gain;
    let abscissa = statespace::spectral_abscissa(&a_cl)
        .map_err(|e| RiccatiError::SubspaceExtractionFailure(e.to_string()))?;
    if n > 0 && abscissa >= 0.0 {
        return Err(RiccatiError::SubspaceExtractionFailure(format!(
            "closed loop is not stable (spectral abscissa {abscissa:.3e})"
        )));
    }
    let residual = care_residual(a, b, c, d, &x);
    let q = StateSpace::new(a_cl, f.clone(), -&gain, DMatrix::zeros(m, f.ncols()))
        .map_err(|e| RiccatiError::DimensionMismatch(e.to_string()))?;
    Ok(RiccatiSolution { x, gain, q, residual })
}

/// Closed-loop spectrum `eig(A − BL)` of a solution.
pub fn closed_loop_poles(sol: &RiccatiSolution) -> Vec<Complex64> {
    linalg::eigenvalues(sol.q.a()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(x: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, x)
    }

    fn col(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(v.len(), 1, v)
    }

    #[test]
    fn integrator() {
        let sol = ric(&scalar(0.0), &scalar(1.0), &col(&[1.0, 0.0]), &col(&[0.0, 1.0]), &scalar(1.0)).unwrap();
        assert!((sol.x[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((sol.gain[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((sol.q.a()[(0, 0)] + 1.0).abs() < 1e-12);
        assert_eq!(sol.q.b()[(0, 0)], 1.0);
        assert!((sol.q.c()[(0, 0)] + 1.0).abs() < 1e-12);
        assert_eq!(sol.q.d()[(0, 0)], 0.0);
    }

    #[test]
    fn unstable_scalar_takes_positive_root() {
        // 2X - X² + 1 = 0
        let sol = ric(&scalar(1.0), &scalar(1.0), &col(&[1.0, 0.0]), &col(&[0.0, 1.0]), &scalar(1.0)).unwrap();
        let want = 1.0 + 2.0_f64.sqrt();
        assert!((sol.x[(0, 0)] - want).abs() < 1e-12);
        assert!((sol.gain[(0, 0)] - want).abs() < 1e-12);
        assert!(sol.residual < 1e-12);
    }

    #[test]
    fn hautus_examples() {
        assert!(!hautus_stabilizable(&scalar(1.0), &scalar(0.0)));
        assert!(hautus_stabilizable(&scalar(-1.0), &scalar(0.0)));
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(hautus_stabilizable(&a, &col(&[0.0, 1.0])));
        assert!(!hautus_stabilizable(&a, &col(&[1.0, 0.0])));
    }

    #[test]
    fn rejects_bad_weights() {
        let e = ric(&scalar(0.0), &scalar(1.0), &col(&[1.0, 1.0]), &col(&[0.0, 1.0]), &scalar(1.0)).unwrap_err();
        assert!(matches!(e, RiccatiError::CrossTermNonzero(_)));
        let e = ric(&scalar(0.0), &scalar(1.0), &col(&[1.0, 0.0]), &col(&[0.0, 0.0]), &scalar(1.0)).unwrap_err();
        assert_eq!(e, RiccatiError::InputWeightSingular);
        let e = ric(&scalar(1.0), &scalar(0.0), &col(&[1.0, 0.0]), &col(&[0.0, 1.0]), &scalar(1.0)).unwrap_err();
        assert_eq!(e, RiccatiError::NotStabilizable);
    }

    #[test]
    fn double_integrator_matches_closed_form() {
        // X = [[√3, 1], [1, √3]] for A = [[0,1],[0,0]], B = e2, Q = I, R = 1
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let b = col(&[0.0, 1.0]);
        let mut c = DMatrix::zeros(3, 2);
        c.view_mut((0, 0), (2, 2)).fill_with_identity();
        let d = col(&[0.0, 0.0, 1.0]);
        let sol = ric(&a, &b, &c, &d, &DMatrix::identity(2, 2)).unwrap();
        let s3 = 3.0_f64.sqrt();
        let want = DMatrix::from_row_slice(2, 2, &[s3, 1.0, 1.0, s3]);
        assert!((&sol.x - want).amax() < 1e-12);
        assert!(closed_loop_poles(&sol).iter().all(|z| z.re < 0.0));
    }

    #[test]
    fn undetectable_imaginary_mode_fails_extraction() {
        // oscillator with zero state weight: Hamiltonian has imaginary eigenvalues
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let b = col(&[0.0, 1.0]);
        let c = DMatrix::zeros(1, 2);
        let d = col(&[1.0]);
        let e = ric(&a, &b, &c, &d, &DMatrix::identity(2, 2)).unwrap_err();
        assert!(matches!(e, RiccatiError::SubspaceExtractionFailure(_)), "{e:?}");
    }
}
