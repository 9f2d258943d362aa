//! Square functions, conditioned square functions, Hardy-space norms, BMO
//! norms, and the diagonal-embedding weak-L¹ norm.
//!
//! The column and row square functions of a martingale are
//! `S_C = (Σ|dx_k|²)^{1/2}` and `S_R = (Σ|dx_k*|²)^{1/2}`; their conditioned
//! versions apply `E_{n−1}` inside the sum (with `E_0 = E_1`). For p ≥ 2 the
//! Hardy norms are intersection norms (maxima) and are exact; for p < 2 they
//! are infima over decompositions, which this module bounds from above by a
//! finite candidate set. Every value is tagged with its exactness.

use serde::Serialize;

use crate::algebra::{psd_sqrt, Operator};
use crate::decompose;
use crate::filtration::{Filtration, Martingale};
use crate::{Error, Result};

/// (Σ_k |dx_k|²)^{1/2}.
pub fn s_col(m: &Martingale) -> Operator {
    square_sum_root(&m.differences(), false)
}

/// (Σ_k |dx_k*|²)^{1/2}.
pub fn s_row(m: &Martingale) -> Operator {
    square_sum_root(&m.differences(), true)
}

fn square_sum_root(seq: &[Operator], row: bool) -> Operator {
    let mut acc = seq[0].algebra().zero();
    for s in seq {
        let sq = if row { s * &s.adjoint() } else { &s.adjoint() * s };
        acc = &acc + &sq;
    }
    psd_sqrt(&acc).expect("sum of squares is positive")
}

/// (Σ_n E_{n−1}(s_n* s_n))^{1/2} for an adapted sequence, with E_0 = E_1.
pub fn conditioned_col_square(f: &Filtration, seq: &[Operator]) -> Result<Operator> {
    conditioned_square(f, seq, false)
}

/// (Σ_n E_{n−1}(s_n s_n*))^{1/2}.
pub fn conditioned_row_square(f: &Filtration, seq: &[Operator]) -> Result<Operator> {
    conditioned_square(f, seq, true)
}

fn conditioned_square(f: &Filtration, seq: &[Operator], row: bool) -> Result<Operator> {
    let mut acc = f.algebra().zero();
    for (idx, s) in seq.iter().enumerate() {
        let sq = if row { s * &s.adjoint() } else { &s.adjoint() * s };
        acc = &acc + &f.expect_prev(idx + 1, &sq)?;
    }
    psd_sqrt(&acc)
}

/// σ_C(x) = (Σ_n E_{n−1}|dx_n|²)^{1/2}.
pub fn sigma_col(m: &Martingale) -> Operator {
    conditioned_col_square(m.filtration(), &m.differences()).expect("martingale is adapted")
}

/// σ_R(x) = (Σ_n E_{n−1}|dx_n*|²)^{1/2}.
pub fn sigma_row(m: &Martingale) -> Operator {
    conditioned_row_square(m.filtration(), &m.differences()).expect("martingale is adapted")
}

/// (Σ_n ‖s_n‖_p^p)^{1/p}; sup_n ‖s_n‖_∞ for p = ∞.
pub fn h_diag_norm(seq: &[Operator], p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidExponent { p });
    }
    if p.is_infinite() {
        return Ok(seq.iter().map(|s| s.sup_norm()).fold(0.0, f64::max));
    }
    let sum: f64 = seq
        .iter()
        .map(|s| s.lp_norm(p).map(|v| v.powf(p)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok(sum.powf(1.0 / p))
}

/// A norm value together with whether it is exact or a constructive upper
/// bound on an infimum.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub exact: bool,
}

/// The Hardy norm of a martingale.
///
/// For p ≥ 2 this is the exact intersection norm
/// max(‖S_C‖_p, ‖S_R‖_p). For 1 ≤ p < 2 the norm is an infimum over
/// splittings x = y + z; the returned value is the best of the candidate
/// splittings (x, 0), (0, x) and, for positive martingales, the two-way
/// triangular decomposition — an upper bound, flagged as such.
pub fn hardy_norm(m: &Martingale, p: f64) -> Result<NormEstimate> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidExponent { p });
    }
    let col = s_col(m).lp_norm(p)?;
    let row = s_row(m).lp_norm(p)?;
    if p >= 2.0 {
        return Ok(NormEstimate { value: col.max(row), exact: true });
    }
    let mut best = col.min(row);
    if m.is_positive() {
        let pair = decompose::yz_decompose(m)?;
        let split = s_col(&pair.y).lp_norm(p)? + s_row(&pair.z).lp_norm(p)?;
        best = best.min(split);
    }
    Ok(NormEstimate { value: best, exact: false })
}

/// The conditioned Hardy norm of a martingale.
///
/// For p ≥ 2: the exact max of the diagonal term (Σ‖dx_n‖_p^p)^{1/p} and the
/// conditioned square-function norms ‖σ_C‖_p, ‖σ_R‖_p. For 1 ≤ p < 2 the
/// infimum over triples of martingale difference sequences is bounded above
/// by the all-diagonal, all-column, and all-row candidates plus, for positive
/// martingales, the three-way decomposition converted to martingale
/// differences.
pub fn h_norm(m: &Martingale, p: f64) -> Result<NormEstimate> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidExponent { p });
    }
    let dx = m.differences();
    let f = m.filtration();
    let diag = h_diag_norm(&dx, p)?;
    let col = sigma_col(m).lp_norm(p)?;
    let row = sigma_row(m).lp_norm(p)?;
    if p >= 2.0 {
        return Ok(NormEstimate { value: diag.max(col).max(row), exact: true });
    }
    let mut best = diag.min(col).min(row);
    if m.is_positive() {
        let triple = decompose::abc_decompose(m)?;
        let [d_seq, c_seq, r_seq] = decompose::to_martingale_differences(&triple, f)?;
        let candidate = h_diag_norm(&d_seq, p)?
            + conditioned_col_square(f, &c_seq)?.lp_norm(p)?
            + conditioned_row_square(f, &r_seq)?.lp_norm(p)?;
        best = best.min(candidate);
    }
    Ok(NormEstimate { value: best, exact: false })
}

/// Convention for the expectation at index 0 inside oscillation norms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LevelZero {
    /// E_0 = E_1.
    FirstLevel,
    /// E_0 = τ(·)1, the expectation onto ℂ1.
    TraceState,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BmoNorms {
    pub col: f64,
    pub row: f64,
}

impl BmoNorms {
    pub fn max(&self) -> f64 {
        self.col.max(self.row)
    }
}

/// BMO norms of an operator relative to a filtration:
/// ‖a‖_{BMO_C} = (sup_n ‖E_n|a − E_{n−1}a|²‖_∞)^{1/2}, the row norm is the
/// column norm of a*, and the full norm is the max of the two. The
/// expectation at n = 1 follows the chosen [`LevelZero`] convention.
pub fn bmo_norms(a: &Operator, f: &Filtration, level0: LevelZero) -> Result<BmoNorms> {
    Ok(BmoNorms {
        col: bmo_one_sided(a, f, level0)?,
        row: bmo_one_sided(&a.adjoint(), f, level0)?,
    })
}

fn bmo_one_sided(a: &Operator, f: &Filtration, level0: LevelZero) -> Result<f64> {
    let mut worst = 0.0_f64;
    for n in 1..=f.levels() {
        let prev = if n == 1 {
            match level0 {
                LevelZero::FirstLevel => f.expect(1, a)?,
                LevelZero::TraceState => f.expect_state(a),
            }
        } else {
            f.expect(n - 1, a)?
        };
        let osc = a - &prev;
        let sq = f.expect(n, &(&osc.adjoint() * &osc))?;
        worst = worst.max(sq.sup_norm());
    }
    Ok(worst.sqrt())
}

/// Weak-L¹ quasi-norm of the block-diagonal embedding Σ_n a_n ⊗ e_{n,n}
/// under τ ⊗ tr with the second factor unnormalized: every singular value of
/// every block keeps mass 1/d, so the norm is max_k (k/d)·s_k over the pooled
/// descending singular values. The dN×dN matrix is never materialized.
pub fn diag_embed_weak_l1(seq: &[Operator]) -> f64 {
    if seq.is_empty() {
        return 0.0;
    }
    let mass = seq[0].algebra().eigen_mass();
    let mut pooled: Vec<f64> = seq.iter().flat_map(|a| a.singular_values()).collect();
    pooled.sort_by(|a, b| b.partial_cmp(a).unwrap());
    pooled
        .iter()
        .enumerate()
        .map(|(k, s)| (k + 1) as f64 * mass * s)
        .fold(0.0, f64::max)
}

/// Every norm of one martingale at one exponent, with exactness flags.
#[derive(Clone, Debug, Serialize)]
pub struct NormReport {
    pub p: f64,
    pub s_col_p: f64,
    pub s_row_p: f64,
    pub sigma_col_p: f64,
    pub sigma_row_p: f64,
    pub h_diag_p: f64,
    pub hardy_p: f64,
    pub hardy_exact: bool,
    pub h_p: f64,
    pub h_exact: bool,
    pub bmo_col: f64,
    pub bmo_row: f64,
    pub bmo: f64,
}

impl NormReport {
    pub fn compute(m: &Martingale, p: f64) -> Result<NormReport> {
        let hardy = hardy_norm(m, p)?;
        let h = h_norm(m, p)?;
        let bmo = bmo_norms(m.terminal(), m.filtration(), LevelZero::FirstLevel)?;
        Ok(NormReport {
            p,
            s_col_p: s_col(m).lp_norm(p)?,
            s_row_p: s_row(m).lp_norm(p)?,
            sigma_col_p: sigma_col(m).lp_norm(p)?,
            sigma_row_p: sigma_row(m).lp_norm(p)?,
            h_diag_p: h_diag_norm(&m.differences(), p)?,
            hardy_p: hardy.value,
            hardy_exact: hardy.exact,
            h_p: h.value,
            h_exact: h.exact,
            bmo_col: bmo.col,
            bmo_row: bmo.row,
            bmo: bmo.max(),
        })
    }

    pub const CSV_HEADER: &'static str = "p,s_col_p,s_row_p,sigma_col_p,sigma_row_p,h_diag_p,\
hardy_p,hardy_exact,h_p,h_exact,bmo_col,bmo_row,bmo";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{},{:.12e},{},{:.12e},{:.12e},{:.12e}",
            self.p,
            self.s_col_p,
            self.s_row_p,
            self.sigma_col_p,
            self.sigma_row_p,
            self.h_diag_p,
            self.hardy_p,
            self.hardy_exact,
            self.h_p,
            self.h_exact,
            self.bmo_col,
            self.bmo_row,
            self.bmo
        )
    }
}

/// Both sides of the mean-oscillation identity
/// E_n|x_N − x_{n−1}|² = |dx_n|² + E_n(Σ_{k≥n+1} E_{k−1}|dx_k|²), with the
/// x_0 = 0 convention; returns the worst residual over n.
pub fn mean_oscillation_identity_residual(m: &Martingale) -> Result<f64> {
    let f = m.filtration();
    let dx = m.differences();
    let mut worst = 0.0_f64;
    for n in 1..=m.levels() {
        let prev = if n == 1 { m.algebra().zero() } else { m.level(n - 1).clone() };
        let osc = m.terminal() - &prev;
        let lhs = f.expect(n, &(&osc.adjoint() * &osc))?;
        let mut tail = m.algebra().zero();
        for k in n + 1..=m.levels() {
            let sq = &dx[k - 1].adjoint() * &dx[k - 1];
            tail = &tail + &f.expect(k - 1, &sq)?;
        }
        let rhs = &(&dx[n - 1].adjoint() * &dx[n - 1]) + &f.expect(n, &tail)?;
        worst = worst.max((&lhs - &rhs).sup_norm());
    }
    Ok(worst)
}

/// Excess of ‖x‖_BMO over the bound
/// sup_n ‖dx_n‖_∞ + ‖(Σ_n E_{n−1}(|dx_n|² + |dx_n*|²))^{1/2}‖_∞
/// (nonpositive when the bound holds).
pub fn bmo_square_bound_excess(m: &Martingale, level0: LevelZero) -> Result<f64> {
    let f = m.filtration();
    let dx = m.differences();
    let bmo = bmo_norms(m.terminal(), f, level0)?.max();
    let sup_dx = dx.iter().map(|d| d.sup_norm()).fold(0.0, f64::max);
    let mut acc = m.algebra().zero();
    for (idx, d) in dx.iter().enumerate() {
        let sym = &(&d.adjoint() * d) + &(d * &d.adjoint());
        acc = &acc + &f.expect_prev(idx + 1, &sym)?;
    }
    let bound = sup_dx + psd_sqrt(&acc)?.sup_norm();
    Ok(bmo - bound)
}

/// σ_C(x)² ≤ Σ_n E_{n−1}(|dx_n|² + |dx_n*|²): returns how far below zero the
/// smallest eigenvalue of the difference sits (0 when the order holds).
pub fn sigma_symmetrized_dominance(m: &Martingale) -> Result<f64> {
    let f = m.filtration();
    let dx = m.differences();
    let sigma = sigma_col(m);
    let sigma_sq = &sigma * &sigma;
    let mut acc = m.algebra().zero();
    for (idx, d) in dx.iter().enumerate() {
        let sym = &(&d.adjoint() * d) + &(d * &d.adjoint());
        acc = &acc + &f.expect_prev(idx + 1, &sym)?;
    }
    let min = crate::algebra::lambda_min(&(&acc - &sigma_sq).hermitian_part())?;
    Ok((-min).max(0.0))
}
