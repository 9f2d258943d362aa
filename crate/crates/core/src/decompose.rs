//! Constructive decompositions of martingale difference sequences.
//!
//! For a positive martingale with spectral layers p_{i,n}, each difference
//! splits three ways into adapted pieces
//!
//! ```text
//! a_n = Σ_j Σ_{i>j} (p_{i,n} − p_{i,n−1} p_{i,n}) dx_n p_{j,n−1}   (a_1 = 0)
//! b_n = Σ_j Σ_{i≤j} p_{i,n} dx_n p_{j,n−1}
//! c_n = Σ_j Σ_{i>j} p_{i,n−1} p_{i,n} dx_n p_{j,n−1}
//! ```
//!
//! (at n = 1 both index families are the level-1 layers), with
//! dx_n = a_n + b_n + c_n exactly. The two-way split keeps only the
//! level-(n−1) layers on both sides and yields genuine martingale
//! differences dy_n (lower triangle) and dz_n (strict upper triangle).
//! General martingales route through the four-way positive split of the
//! terminal value.

use crate::algebra::{hermitian_eigen, Operator};
use crate::cuculescu::{layers, SpectralLayers};
use crate::filtration::{Filtration, Martingale};
use crate::norms::{conditioned_col_square, conditioned_row_square, diag_embed_weak_l1};
use crate::Result;

/// The adapted sequences (a, b, c) with dx_n = a_n + b_n + c_n.
#[derive(Clone, Debug)]
pub struct AdaptedTriple {
    pub a: Vec<Operator>,
    pub b: Vec<Operator>,
    pub c: Vec<Operator>,
}

impl AdaptedTriple {
    pub fn levels(&self) -> usize {
        self.a.len()
    }
}

pub fn abc_decompose(m: &Martingale) -> Result<AdaptedTriple> {
    let ls = layers(m)?;
    abc_decompose_with(m, &ls)
}

pub fn abc_decompose_with(m: &Martingale, ls: &SpectralLayers) -> Result<AdaptedTriple> {
    m.ensure_positive()?;
    let dx = m.differences();
    let count = ls.layer_count();
    let zero = m.algebra().zero();
    let mut a = Vec::with_capacity(m.levels());
    let mut b = Vec::with_capacity(m.levels());
    let mut c = Vec::with_capacity(m.levels());
    for n in 1..=m.levels() {
        // At n = 1 both sides use the level-1 layers and a_1 = 0.
        let prev = if n == 1 { 1 } else { n - 1 };
        let mut a_n = zero.clone();
        let mut b_n = zero.clone();
        let mut c_n = zero.clone();
        for j in 0..count {
            let right = &dx[n - 1] * ls.layer(j, prev).as_operator();
            // b: lower-left triangle i ≤ j in one product via the cumulative sum.
            b_n = &b_n + &(ls.cumulative(j, n).as_operator() * &right);
            if n >= 2 {
                for i in j + 1..count {
                    let stay = ls.layer(i, n - 1).as_operator() * ls.layer(i, n).as_operator();
                    let moved = ls.layer(i, n).as_operator() - &stay;
                    a_n = &a_n + &(&moved * &right);
                    c_n = &c_n + &(&stay * &right);
                }
            } else {
                for i in j + 1..count {
                    c_n = &c_n + &(ls.layer(i, 1).as_operator() * &right);
                }
            }
        }
        if n == 1 {
            a_n = zero.clone();
        }
        a.push(a_n);
        b.push(b_n);
        c.push(c_n);
    }
    Ok(AdaptedTriple { a, b, c })
}

/// The L²(ℓ²) norms of the three adapted sequences: column norms for a and
/// b, the row norm for c. The total is bounded by 5·‖x_N‖₂, coming from the
/// per-term comparisons ‖b_n‖₂ ≤ ‖dx_n‖₂, ‖c_n‖₂ ≤ ‖dx_n‖₂,
/// ‖a_n‖₂ ≤ 3‖dx_n‖₂.
#[derive(Clone, Copy, Debug)]
pub struct TripleL2Report {
    pub col_a: f64,
    pub col_b: f64,
    pub row_c: f64,
}

impl TripleL2Report {
    pub fn total(&self) -> f64 {
        self.col_a + self.col_b + self.row_c
    }
}

pub fn abc_l2_report(triple: &AdaptedTriple, _m: &Martingale) -> TripleL2Report {
    let sq = |seq: &[Operator]| -> f64 {
        seq.iter().map(|s| s.lp_norm(2.0).unwrap().powi(2)).sum::<f64>().sqrt()
    };
    TripleL2Report { col_a: sq(&triple.a), col_b: sq(&triple.b), row_c: sq(&triple.c) }
}

/// The three weak-L¹ quantities controlled by the decomposition of a
/// positive normalized martingale: the diagonal embedding of a, and the
/// conditioned square functions of b (column) and c (row).
#[derive(Clone, Copy, Debug)]
pub struct TripleWeakReport {
    pub diag_weak: f64,
    pub sigma_col_weak: f64,
    pub sigma_row_weak: f64,
}

pub fn abc_weak_report(triple: &AdaptedTriple, m: &Martingale) -> Result<TripleWeakReport> {
    m.ensure_normalized()?;
    let f = m.filtration();
    Ok(TripleWeakReport {
        diag_weak: diag_embed_weak_l1(&triple.a),
        sigma_col_weak: conditioned_col_square(f, &triple.b)?.weak_l1_norm(),
        sigma_row_weak: conditioned_row_square(f, &triple.c)?.weak_l1_norm(),
    })
}

/// Worst residual across the layer-resolved expansions of the conditioned
/// squares of b and c:
///
/// ```text
/// E_{n−1}|b_n|²  = Σ_{l,j} Σ_{i≤min(l,j)} p_{l,n−1} E_{n−1}[dx_n p_{i,n} dx_n] p_{j,n−1}
/// E_{n−1}|c_n*|² = Σ_{l,j≥1} Σ_{i<min(l,j)} p_{l,n−1} E_{n−1}[p_{l,n} dx_n p_{i,n−1} dx_n p_{j,n}] p_{j,n−1}
/// ```
///
/// (with the level-1 layers and no expectation at n = 1). The left sides are
/// computed from the triple itself, the right sides from the layers, so the
/// two code paths are independent.
pub fn square_expansion_residual(
    m: &Martingale,
    ls: &SpectralLayers,
    triple: &AdaptedTriple,
) -> Result<f64> {
    let f = m.filtration();
    let dx = m.differences();
    let count = ls.layer_count();
    let mut worst = 0.0_f64;
    for n in 1..=m.levels() {
        let prev = if n == 1 { 1 } else { n - 1 };
        // Left sides.
        let b_n = &triple.b[n - 1];
        let c_n = &triple.c[n - 1];
        let b_sq = &b_n.adjoint() * b_n;
        let c_sq = c_n * &c_n.adjoint();
        let (lhs_b, lhs_c) = if n == 1 {
            (b_sq, c_sq)
        } else {
            (f.expect(n - 1, &b_sq)?, f.expect(n - 1, &c_sq)?)
        };
        // Right sides from the layers.
        let mut rhs_b = m.algebra().zero();
        let mut rhs_c = m.algebra().zero();
        for l in 0..count {
            for j in 0..count {
                let lim = l.min(j);
                for i in 0..=lim {
                    let core = if n == 1 {
                        &(&dx[0] * ls.layer(i, 1).as_operator()) * &dx[0]
                    } else {
                        let inner = &(&dx[n - 1] * ls.layer(i, n).as_operator()) * &dx[n - 1];
                        f.expect(n - 1, &inner)?
                    };
                    let term = &(ls.layer(l, prev).as_operator() * &core)
                        * ls.layer(j, prev).as_operator();
                    rhs_b = &rhs_b + &term;
                }
                if l >= 1 && j >= 1 {
                    for i in 0..lim {
                        let core = if n == 1 {
                            &(&dx[0] * ls.layer(i, 1).as_operator()) * &dx[0]
                        } else {
                            let inner = &(&(ls.layer(l, n).as_operator() * &dx[n - 1])
                                * ls.layer(i, n - 1).as_operator())
                                * &(&dx[n - 1] * ls.layer(j, n).as_operator());
                            f.expect(n - 1, &inner)?
                        };
                        let term = &(ls.layer(l, prev).as_operator() * &core)
                            * ls.layer(j, prev).as_operator();
                        rhs_c = &rhs_c + &term;
                    }
                }
            }
        }
        worst = worst.max((&lhs_b - &rhs_b).sup_norm());
        worst = worst.max((&lhs_c - &rhs_c).sup_norm());
    }
    Ok(worst)
}

/// The two-way split x = y + z into martingales.
#[derive(Clone, Debug)]
pub struct MartingalePair {
    pub y: Martingale,
    pub z: Martingale,
}

pub fn yz_decompose(m: &Martingale) -> Result<MartingalePair> {
    let ls = layers(m)?;
    yz_decompose_with(m, &ls)
}

pub fn yz_decompose_with(m: &Martingale, ls: &SpectralLayers) -> Result<MartingalePair> {
    m.ensure_positive()?;
    let dx = m.differences();
    let count = ls.layer_count();
    let mut y_terminal = m.algebra().zero();
    let mut z_terminal = m.algebra().zero();
    for n in 1..=m.levels() {
        let prev = if n == 1 { 1 } else { n - 1 };
        for j in 0..count {
            let right = &dx[n - 1] * ls.layer(j, prev).as_operator();
            let dy_part = ls.cumulative(j, prev).as_operator() * &right;
            y_terminal = &y_terminal + &dy_part;
            let upper = ls.cumulative(count - 1, prev).as_operator()
                - ls.cumulative(j, prev).as_operator();
            z_terminal = &z_terminal + &(&upper * &right);
        }
    }
    Ok(MartingalePair {
        y: Martingale::from_terminal(y_terminal, m.filtration().clone())?,
        z: Martingale::from_terminal(z_terminal, m.filtration().clone())?,
    })
}

/// Weak-L¹ norms of the conditioned square functions of the two-way split of
/// a k-regular positive normalized martingale: (‖σ_C(y)‖_{1,∞}, ‖σ_R(z)‖_{1,∞}).
/// Each is bounded by 2·[34 + 16(k+1)²].
pub fn regular_weak_report(m: &Martingale, k: f64) -> Result<(f64, f64)> {
    m.check_k_regular(k)?;
    m.ensure_normalized()?;
    let pair = yz_decompose(m)?;
    let s_y = crate::norms::sigma_col(&pair.y).weak_l1_norm();
    let s_z = crate::norms::sigma_row(&pair.z).weak_l1_norm();
    Ok((s_y, s_z))
}

/// Threshold certified for [`regular_weak_report`] values.
pub fn regular_weak_threshold(k: f64) -> f64 {
    2.0 * (34.0 + 16.0 * (k + 1.0) * (k + 1.0))
}

/// x = (p₁ − p₂) + i(p₃ − p₄) with positive martingale parts.
#[derive(Clone, Debug)]
pub struct PositiveSplit {
    pub parts: [Martingale; 4],
}

impl PositiveSplit {
    /// The recombined terminal (p₁ − p₂) + i(p₃ − p₄).
    pub fn recombine(&self) -> Operator {
        let re = self.parts[0].terminal() - self.parts[1].terminal();
        let im = self.parts[2].terminal() - self.parts[3].terminal();
        &re + &im.scale_complex(num_complex::Complex64::new(0.0, 1.0))
    }
}

/// Four-way positive split of an arbitrary martingale via the spectral
/// positive/negative parts of the Hermitian and anti-Hermitian components of
/// the terminal value.
pub fn positive_split(m: &Martingale) -> Result<PositiveSplit> {
    let terminal = m.terminal();
    let re = terminal.hermitian_part();
    let im = terminal.antihermitian_part();
    let mut parts = Vec::with_capacity(4);
    for (x, neg) in [(&re, false), (&re, true), (&im, false), (&im, true)] {
        let eig = hermitian_eigen(x)?;
        let part = eig.apply(|v| if neg { (-v).max(0.0) } else { v.max(0.0) });
        parts.push(Martingale::from_terminal(part, m.filtration().clone())?);
    }
    let parts: [Martingale; 4] = parts.try_into().expect("exactly four parts");
    Ok(PositiveSplit { parts })
}

/// Converts an adapted triple into martingale difference sequences by
/// centering each term at its prior expectation: s_n ↦ s_n − E_{n−1}(s_n)
/// for n ≥ 2, unchanged at n = 1 (the x_0 = 0 convention), so the three
/// sequences still sum to dx_n.
pub fn to_martingale_differences(
    triple: &AdaptedTriple,
    f: &Filtration,
) -> Result<[Vec<Operator>; 3]> {
    let center = |seq: &[Operator]| -> Result<Vec<Operator>> {
        seq.iter()
            .enumerate()
            .map(|(idx, s)| {
                if idx == 0 {
                    Ok(s.clone())
                } else {
                    Ok(s - &f.expect(idx, s)?)
                }
            })
            .collect()
    };
    Ok([center(&triple.a)?, center(&triple.b)?, center(&triple.c)?])
}
