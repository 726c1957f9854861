//! First Lyapunov coefficient at an Andronov-Hopf point, by the projection
//! method on the multilinear forms B and C of the reduced field.
//!
//! Convention: J q = i omega q with q of unit norm, J^T p = -i omega p with
//! <p, q> = sum conj(p_i) q_i = 1, omega > 0, and
//!
//!   l1 = Re[ <p, C(q,q,qbar)> - 2 <p, B(q, J^-1 B(q,qbar))>
//!            + <p, B(qbar, (2 i omega I - J)^-1 B(q,q))> ] / (2 omega).
//!
//! For the planar normal form xdot = -w y + a x (x^2+y^2),
//! ydot = w x + a y (x^2+y^2) this evaluates to exactly 2a/w; only the sign
//! is used for super/subcriticality decisions.

use nalgebra::{Complex, DMatrix, DVector};

use crate::bifurcation::{eigenvalues, Tolerances};
use crate::error::AnalysisError;
use crate::massaction::ReducedField;

type C64 = Complex<f64>;
type CVector = DVector<C64>;

#[derive(Debug, Clone)]
pub struct LyapunovReport {
    pub l1: f64,
    pub omega: f64,
}

/// Compute the first Lyapunov coefficient at a Hopf point (theta, kappa).
pub fn first_lyapunov(
    field: &ReducedField,
    theta: &[f64],
    kappa: &[f64],
    tol: &Tolerances,
) -> Result<LyapunovReport, AnalysisError> {
    let jac = field.jac_state(theta, kappa);
    let (omega, _) = imaginary_pair(&jac, tol)?;
    let q = right_eigenvector(&jac, omega)?;
    let p = left_eigenvector(&jac, omega, &q)?;
    let l1 = l1_with_vectors(field, theta, kappa, omega, &q, &p)?;
    Ok(LyapunovReport { l1, omega })
}

/// Find the near-imaginary pair; returns (omega, real part) with omega > 0.
fn imaginary_pair(jac: &DMatrix<f64>, tol: &Tolerances) -> Result<(f64, f64), AnalysisError> {
    let ev = eigenvalues(jac);
    let scale = jac.norm().max(1.0);
    let re_tol = tol.hopf_re_tol.max(1e-7 * scale);
    let candidates: Vec<&Complex<f64>> = ev
        .iter()
        .filter(|l| l.im >= tol.hopf_im_tol && l.re.abs() <= re_tol)
        .collect();
    match candidates.len() {
        0 => Err(AnalysisError::NoImaginaryPair {
            re_tol,
            im_tol: tol.hopf_im_tol,
        }),
        1 => {
            let l = candidates[0];
            if l.im <= tol.hopf_im_tol {
                Err(AnalysisError::OmegaTooSmall { omega: l.im })
            } else {
                Ok((l.im, l.re))
            }
        }
        _ => Err(AnalysisError::NonSimplePair),
    }
}

/// Null vector of (J - i omega I) via complex SVD, unit norm, deterministic
/// phase (largest component rotated to the positive real axis).
fn right_eigenvector(jac: &DMatrix<f64>, omega: f64) -> Result<CVector, AnalysisError> {
    let n = jac.nrows();
    let a = DMatrix::from_fn(n, n, |i, j| {
        C64::new(jac[(i, j)], 0.0)
            - if i == j {
                C64::new(0.0, omega)
            } else {
                C64::new(0.0, 0.0)
            }
    });
    null_vector(&a)
}

fn left_eigenvector(jac: &DMatrix<f64>, omega: f64, q: &CVector) -> Result<CVector, AnalysisError> {
    // J^T p = -i omega p
    let n = jac.nrows();
    let a = DMatrix::from_fn(n, n, |i, j| {
        C64::new(jac[(j, i)], 0.0)
            + if i == j {
                C64::new(0.0, omega)
            } else {
                C64::new(0.0, 0.0)
            }
    });
    let p = null_vector(&a)?;
    // normalize <p, q> = 1
    let dot: C64 = p.iter().zip(q.iter()).map(|(pi, qi)| pi.conj() * qi).sum();
    if dot.norm() < 1e-12 {
        return Err(AnalysisError::NonSimplePair);
    }
    Ok(p.map(|v| v / dot.conj()))
}

fn null_vector(a: &DMatrix<C64>) -> Result<CVector, AnalysisError> {
    let svd = a.clone().svd(true, true);
    let vt = svd.v_t.as_ref().ok_or(AnalysisError::NonSimplePair)?;
    let k = a.nrows() - 1;
    let mut v: CVector = vt.row(k).map(|x| x.conj()).transpose();
    // fix the phase so the largest-modulus entry is real positive
    let mut best = 0usize;
    for i in 0..v.len() {
        if v[i].norm() > v[best].norm() {
            best = i;
        }
    }
    let phase = v[best] / v[best].norm();
    v /= phase;
    let nrm = v.norm();
    if nrm < 1e-12 {
        return Err(AnalysisError::NonSimplePair);
    }
    Ok(v / C64::new(nrm, 0.0))
}

/// Complex bilinear extension of the real symmetric form B.
fn bilinear_c(
    field: &ReducedField,
    theta: &[f64],
    kappa: &[f64],
    u: &CVector,
    v: &CVector,
) -> CVector {
    let ur: Vec<f64> = u.iter().map(|z| z.re).collect();
    let ui: Vec<f64> = u.iter().map(|z| z.im).collect();
    let vr: Vec<f64> = v.iter().map(|z| z.re).collect();
    let vi: Vec<f64> = v.iter().map(|z| z.im).collect();
    let rr = field.bilinear(theta, kappa, &ur, &vr);
    let ii = field.bilinear(theta, kappa, &ui, &vi);
    let ri = field.bilinear(theta, kappa, &ur, &vi);
    let ir = field.bilinear(theta, kappa, &ui, &vr);
    CVector::from_fn(field.dim, |i, _| C64::new(rr[i] - ii[i], ri[i] + ir[i]))
}

/// Complex trilinear extension of the real symmetric form C.
fn trilinear_c(
    field: &ReducedField,
    theta: &[f64],
    kappa: &[f64],
    u: &CVector,
    v: &CVector,
    w: &CVector,
) -> CVector {
    let parts = |z: &CVector, take_im: bool| -> Vec<f64> {
        z.iter()
            .map(|c| if take_im { c.im } else { c.re })
            .collect()
    };
    let mut acc = CVector::from_element(field.dim, C64::new(0.0, 0.0));
    for mask in 0..8u8 {
        let (au, bu) = (parts(u, mask & 1 != 0), mask & 1 != 0);
        let (av, bv) = (parts(v, mask & 2 != 0), mask & 2 != 0);
        let (aw, bw) = (parts(w, mask & 4 != 0), mask & 4 != 0);
        let val = field.trilinear(theta, kappa, &au, &av, &aw);
        // i^(number of imaginary slots)
        let npow = u8::from(bu) + u8::from(bv) + u8::from(bw);
        let factor = match npow % 4 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
        for i in 0..field.dim {
            acc[i] += factor * val[i];
        }
    }
    acc
}

fn inner(p: &CVector, v: &CVector) -> C64 {
    p.iter().zip(v.iter()).map(|(pi, vi)| pi.conj() * vi).sum()
}

/// The projection-method formula given eigenvectors; exposed so invariance
/// under rescaling q -> c q (with p -> p / conj(c)) can be tested directly.
pub fn l1_with_vectors(
    field: &ReducedField,
    theta: &[f64],
    kappa: &[f64],
    omega: f64,
    q: &CVector,
    p: &CVector,
) -> Result<f64, AnalysisError> {
    if omega <= 0.0 {
        return Err(AnalysisError::OmegaTooSmall { omega });
    }
    let n = field.dim;
    let jac = field.jac_state(theta, kappa);
    let qbar: CVector = q.map(|z| z.conj());

    let b_q_qbar = bilinear_c(field, theta, kappa, q, &qbar);
    // B(q, qbar) is real for symmetric real B; solve J s1 = B(q,qbar)
    let rhs_real = DVector::from_fn(n, |i, _| b_q_qbar[i].re);
    let s1 = jac
        .clone()
        .lu()
        .solve(&rhs_real)
        .ok_or(AnalysisError::SingularJacobian { residual: 0.0 })?;
    let s1c = CVector::from_fn(n, |i, _| C64::new(s1[i], 0.0));

    let b_qq = bilinear_c(field, theta, kappa, q, q);
    let shifted = DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j {
            C64::new(0.0, 2.0 * omega)
        } else {
            C64::new(0.0, 0.0)
        };
        d - C64::new(jac[(i, j)], 0.0)
    });
    let s2 = shifted
        .lu()
        .solve(&b_qq)
        .ok_or(AnalysisError::SingularJacobian { residual: 0.0 })?;

    let c_term = trilinear_c(field, theta, kappa, q, q, &qbar);
    let t1 = inner(p, &c_term);
    let t2 = inner(p, &bilinear_c(field, theta, kappa, q, &s1c));
    let t3 = inner(p, &bilinear_c(field, theta, kappa, &qbar, &s2));
    Ok((t1 - 2.0 * t2 + t3).re / (2.0 * omega))
}
