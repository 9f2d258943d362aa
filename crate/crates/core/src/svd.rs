//! One-sided Jacobi SVD for complex matrices.
//!
//! Support projections, lattice meets, and weak-L¹ norms all hinge on
//! trustworthy singular vectors near rank deficiency, so the kernel is kept
//! in-house: Hestenes one-sided Jacobi orthogonalizes the columns of A by
//! unitary plane rotations accumulated into V, giving A = UΣV* with U, V
//! unitary and high relative accuracy for small singular values. Sweeps are
//! in fixed cyclic order, so results are deterministic.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// A = U Σ V*: descending singular values, the matching left singular
/// vectors as columns of `u` (zero columns where σ = 0), and the full
/// unitary `v`.
#[derive(Clone, Debug)]
pub struct JacobiSvd {
    pub singular_values: Vec<f64>,
    pub u: CMatrix,
    pub v: CMatrix,
}

const GRAM_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 64;

/// Requires m ≥ n (stack or transpose first). Columns of the returned `v`
/// with small singular values span the null space of A.
pub fn jacobi_svd(a: &CMatrix) -> JacobiSvd {
    let (m, n) = a.shape();
    assert!(m >= n, "jacobi_svd expects a tall or square matrix");
    let mut g = a.clone();
    let mut v = CMatrix::identity(n, n);
    for _ in 0..MAX_SWEEPS {
        let mut converged = true;
        for p in 0..n {
            for q in p + 1..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = Complex64::new(0.0, 0.0);
                for r in 0..m {
                    let gp = g[(r, p)];
                    let gq = g[(r, q)];
                    app += gp.norm_sqr();
                    aqq += gq.norm_sqr();
                    apq += gp.conj() * gq;
                }
                if apq.norm() <= GRAM_TOL * (app * aqq).sqrt() || apq.norm() == 0.0 {
                    continue;
                }
                converged = false;
                // Zero the Gram entry: with apq = |apq|e^{iφ}, the rotation
                // J = [[c, s], [−s·e^{−iφ}, c·e^{−iφ}]] is unitary and makes
                // the new columns orthogonal (classical Jacobi angle on the
                // phase-aligned real 2×2 Gram block).
                let phi = apq.arg();
                let tau = (aqq - app) / (2.0 * apq.norm());
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let e = Complex64::from_polar(1.0, -phi);
                for r in 0..m {
                    let gp = g[(r, p)];
                    let gq = g[(r, q)];
                    g[(r, p)] = gp * c - gq * (e * s);
                    g[(r, q)] = gp * s + gq * (e * c);
                }
                for r in 0..n {
                    let vp = v[(r, p)];
                    let vq = v[(r, q)];
                    v[(r, p)] = vp * c - vq * (e * s);
                    v[(r, q)] = vp * s + vq * (e * c);
                }
            }
        }
        if converged {
            break;
        }
    }
    let mut order: Vec<(f64, usize)> = (0..n)
        .map(|j| (g.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt(), j))
        .collect();
    order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    let mut u = CMatrix::zeros(m, n);
    let mut v_sorted = CMatrix::zeros(n, n);
    let mut singular_values = Vec::with_capacity(n);
    for (slot, &(sv, j)) in order.iter().enumerate() {
        singular_values.push(sv);
        if sv > 0.0 {
            let col = g.column(j) / Complex64::new(sv, 0.0);
            u.set_column(slot, &col);
        }
        v_sorted.set_column(slot, &v.column(j));
    }
    JacobiSvd { singular_values, u, v: v_sorted }
}

/// Descending singular values only.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    let (m, n) = a.shape();
    if m >= n {
        jacobi_svd(a).singular_values
    } else {
        jacobi_svd(&a.adjoint()).singular_values
    }
}

/// Largest singular value.
pub fn operator_norm(a: &CMatrix) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}
