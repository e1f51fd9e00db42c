//! Continuous-time LQR synthesis.
//!
//! The Riccati solution is obtained from the matrix sign function of the
//! Hamiltonian and then polished with Newton-Kleinman iterations until the
//! residual drops below [`RESIDUAL_TOL`].

use nalgebra::DMatrix;
use serde::Serialize;

use super::ControlError;

pub const RESIDUAL_TOL: f64 = 1e-8;
const SIGN_MAX_ITER: usize = 100;
const NEWTON_MAX_ITER: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LqrGains {
    /// Gain mapping stabilizing states onto input corrections (m x n).
    pub k: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    /// Stabilizing Riccati solution.
    pub p: DMatrix<f64>,
    pub residual: f64,
    pub closed_loop: Vec<Eigenvalue>,
}

impl LqrGains {
    pub fn spectral_abscissa(&self) -> f64 {
        self.closed_loop.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    m.is_square() && max_abs(&(m - m.transpose())) <= 1e-12 * (1.0 + max_abs(m))
}

/// Frobenius norm of `A'P + PA - P B R^-1 B' P + Q`.
pub fn care_residual(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>, p: &DMatrix<f64>) -> f64 {
    let r_inv = match r.clone().try_inverse() {
        Some(m) => m,
        None => return f64::INFINITY,
    };
    let res = a.transpose() * p + p * a - p * b * r_inv * b.transpose() * p + q;
    res.norm()
}

/// Solves `A'X + XA + Q = 0` through the Kronecker-product linear system.
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let at = a.transpose();
    let lhs = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = DMatrix::from_column_slice(n * n, 1, (-q).as_slice());
    let vec_x = lhs.lu().solve(&rhs)?;
    let x = DMatrix::from_column_slice(n, n, vec_x.as_slice());
    Some((&x + x.transpose()) * 0.5)
}

fn matrix_sign(mut z: DMatrix<f64>) -> Result<DMatrix<f64>, ControlError> {
    let dim = z.nrows() as f64;
    for _ in 0..SIGN_MAX_ITER {
        let lu = z.clone().lu();
        let det = lu.determinant();
        if !det.is_finite() || det == 0.0 {
            return Err(ControlError::NotStabilizable(
                "Hamiltonian has eigenvalues on the imaginary axis".into(),
            ));
        }
        let inv = lu
            .try_inverse()
            .ok_or_else(|| ControlError::NotStabilizable("Hamiltonian iterate is singular".into()))?;
        let scale = det.abs().powf(-1.0 / dim);
        let next = (&z * scale + inv / scale) * 0.5;
        let delta = (&next - &z).norm();
        let size = next.norm();
        z = next;
        if delta <= 1e-13 * size {
            return Ok(z);
        }
    }
    Ok(z)
}

/// Stabilizing solution of the continuous algebraic Riccati equation.
pub fn solve_care(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<DMatrix<f64>, ControlError> {
    let n = a.nrows();
    let r_inv = r
        .clone()
        .try_inverse()
        .ok_or_else(|| ControlError::InvalidWeights("R is singular".into()))?;
    let g = b * &r_inv * b.transpose();

    let mut ham = DMatrix::<f64>::zeros(2 * n, 2 * n);
    ham.view_mut((0, 0), (n, n)).copy_from(a);
    ham.view_mut((0, n), (n, n)).copy_from(&(-&g));
    ham.view_mut((n, 0), (n, n)).copy_from(&(-q));
    ham.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));

    let w = matrix_sign(ham)?;
    let eye = DMatrix::<f64>::identity(n, n);
    let w11 = w.view((0, 0), (n, n)).into_owned();
    let w12 = w.view((0, n), (n, n)).into_owned();
    let w21 = w.view((n, 0), (n, n)).into_owned();
    let w22 = w.view((n, n), (n, n)).into_owned();

    let mut lhs = DMatrix::<f64>::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&w12);
    lhs.view_mut((n, 0), (n, n)).copy_from(&(w22 + &eye));
    let mut rhs = DMatrix::<f64>::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n)).copy_from(&(-(&eye + w11)));
    rhs.view_mut((n, 0), (n, n)).copy_from(&(-w21));

    let p = lhs
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| ControlError::Synthesis {
            reason: format!("invariant subspace solve failed: {e}"),
            residual: f64::INFINITY,
        })?;
    let mut p = (&p + p.transpose()) * 0.5;

    // Newton-Kleinman polishing from the (stabilizing) sign-function estimate.
    let mut residual = care_residual(a, b, q, r, &p);
    for _ in 0..NEWTON_MAX_ITER {
        if residual < 1e-13 * (1.0 + p.norm()) {
            break;
        }
        let k = &r_inv * b.transpose() * &p;
        let a_cl = a - b * &k;
        let rhs = q + k.transpose() * r * &k;
        let Some(next) = solve_lyapunov(&a_cl, &rhs) else {
            break;
        };
        let next_residual = care_residual(a, b, q, r, &next);
        if !(next_residual < residual) {
            break;
        }
        p = next;
        residual = next_residual;
    }

    if !(residual < RESIDUAL_TOL) {
        return Err(ControlError::Synthesis {
            reason: "Riccati iteration did not converge".into(),
            residual,
        });
    }
    Ok(p)
}

pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Eigenvalue> {
    m.complex_eigenvalues()
        .iter()
        .map(|c| Eigenvalue { re: c.re, im: c.im })
        .collect()
}

/// Characteristic polynomial coefficients `[1, c1, ..., cn]` of a square
/// matrix by the Faddeev-LeVerrier recursion.
pub fn characteristic_polynomial(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let mut coeffs = vec![1.0];
    let mut mk = DMatrix::<f64>::zeros(n, n);
    let mut c_prev = 1.0;
    for k in 1..=n {
        mk = m * &mk + &eye * c_prev;
        let c = -(m * &mk).trace() / k as f64;
        coeffs.push(c);
        c_prev = c;
    }
    coeffs
}

/// Routh-Hurwitz test: true iff every eigenvalue of `m` has a negative real
/// part. Independent of the Schur-based [`eigenvalues`].
pub fn hurwitz_stable(m: &DMatrix<f64>) -> bool {
    let coeffs = characteristic_polynomial(m);
    let n = coeffs.len() - 1;
    if n == 0 {
        return true;
    }
    if coeffs.iter().any(|c| !(*c > 0.0)) {
        return false;
    }
    let width = n / 2 + 1;
    let mut prev: Vec<f64> = (0..width).map(|i| *coeffs.get(2 * i).unwrap_or(&0.0)).collect();
    let mut cur: Vec<f64> = (0..width).map(|i| *coeffs.get(2 * i + 1).unwrap_or(&0.0)).collect();
    for _ in 1..n {
        if !(cur[0] > 0.0) {
            return false;
        }
        let next: Vec<f64> = (0..width)
            .map(|i| {
                let a = prev.get(i + 1).copied().unwrap_or(0.0);
                let b = cur.get(i + 1).copied().unwrap_or(0.0);
                (cur[0] * a - prev[0] * b) / cur[0]
            })
            .collect();
        prev = cur;
        cur = next;
    }
    cur[0] > 0.0
}

fn check_weights(q: &DMatrix<f64>, r: &DMatrix<f64>, n: usize, m: usize) -> Result<(), ControlError> {
    if q.shape() != (n, n) {
        return Err(ControlError::InvalidWeights(format!(
            "Q must be {n}x{n}, got {:?}",
            q.shape()
        )));
    }
    if r.shape() != (m, m) {
        return Err(ControlError::InvalidWeights(format!(
            "R must be {m}x{m}, got {:?}",
            r.shape()
        )));
    }
    if !is_symmetric(q) || !is_symmetric(r) {
        return Err(ControlError::InvalidWeights("Q and R must be symmetric".into()));
    }
    let q_min = q.clone().symmetric_eigenvalues().min();
    if q_min < -1e-12 * (1.0 + max_abs(q)) {
        return Err(ControlError::InvalidWeights(format!(
            "Q must be positive semidefinite (min eigenvalue {q_min})"
        )));
    }
    if r.clone().cholesky().is_none() {
        return Err(ControlError::InvalidWeights("R must be positive definite".into()));
    }
    Ok(())
}

/// LQR gain `K = R^-1 B' P` for the pair `(a, b)`, with closed-loop stability
/// asserted.
pub fn synthesize_lqr(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<LqrGains, ControlError> {
    let n = a.nrows();
    if !a.is_square() || b.nrows() != n {
        return Err(ControlError::InvalidWeights(format!(
            "incompatible shapes A {:?}, B {:?}",
            a.shape(),
            b.shape()
        )));
    }
    check_weights(q, r, n, b.ncols())?;
    let p = solve_care(a, b, q, r)?;
    let r_inv = r.clone().try_inverse().expect("R checked positive definite");
    let k = &r_inv * b.transpose() * &p;
    let a_cl = a - b * &k;
    let closed_loop = eigenvalues(&a_cl);
    let worst = closed_loop.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
    if !(worst < 0.0) {
        return Err(ControlError::Unstable { max_real: worst });
    }
    let residual = care_residual(a, b, q, r, &p);
    Ok(LqrGains {
        k,
        q: q.clone(),
        r: r.clone(),
        p,
        residual,
        closed_loop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_care_closed_form() {
        let one = DMatrix::from_element(1, 1, 1.0);
        let zero = DMatrix::from_element(1, 1, 0.0);
        let g = synthesize_lqr(&zero, &one, &one, &one).unwrap();
        assert!((g.p[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((g.k[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn integrator_bank_gives_identity() {
        let n = 3;
        let a = DMatrix::zeros(n, n);
        let eye = DMatrix::identity(n, n);
        let g = synthesize_lqr(&a, &eye, &eye, &eye).unwrap();
        assert!(max_abs(&(&g.p - &eye)) < 1e-10);
        assert!(max_abs(&(&g.k - &eye)) < 1e-10);
    }

    #[test]
    fn double_integrator_known_gain() {
        // p11 = sqrt(3), p12 = 1, p22 = sqrt(3); K = [1, sqrt(3)].
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let q = DMatrix::identity(2, 2);
        let r = DMatrix::identity(1, 1);
        let g = synthesize_lqr(&a, &b, &q, &r).unwrap();
        assert!((g.k[(0, 0)] - 1.0).abs() < 1e-10);
        assert!((g.k[(0, 1)] - 3f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn unstabilizable_pair_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let q = DMatrix::identity(2, 2);
        let r = DMatrix::identity(1, 1);
        assert!(synthesize_lqr(&a, &b, &q, &r).is_err());
    }

    #[test]
    fn bad_weights_rejected() {
        let a = DMatrix::zeros(2, 2);
        let b = DMatrix::identity(2, 2);
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let r = DMatrix::identity(2, 2);
        assert!(matches!(
            synthesize_lqr(&a, &b, &q, &r),
            Err(ControlError::InvalidWeights(_))
        ));
        let q = DMatrix::identity(2, 2);
        let r = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(synthesize_lqr(&a, &b, &q, &r).is_err());
    }

    #[test]
    fn lyapunov_scalar() {
        let a = DMatrix::from_element(1, 1, -2.0);
        let q = DMatrix::from_element(1, 1, 4.0);
        let x = solve_lyapunov(&a, &q).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn hurwitz_agrees_on_simple_cases() {
        let stable = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -2.0, -3.0]);
        let unstable = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, -1.0]);
        let marginal = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -4.0, 0.0]);
        assert!(hurwitz_stable(&stable));
        assert!(!hurwitz_stable(&unstable));
        assert!(!hurwitz_stable(&marginal));
        assert_eq!(characteristic_polynomial(&stable), vec![1.0, 3.0, 2.0]);
    }
}
