//! Cuculescu stopping projections, the dyadic family, and spectral layers.
//!
//! For a positive martingale x and a cut height λ > 0 the stopping family is
//! built by the recursion
//!
//! ```text
//! q_0 = 1,    q_n = q_{n−1} − χ_{(λ,∞)}(q_{n−1} x_n q_{n−1}),
//! ```
//!
//! which keeps the compressed martingale below λ: the q_n decrease, each
//! q_n lies in its level algebra, q_n commutes with q_{n−1}x_n q_{n−1},
//! q_n x_n q_n ≤ λ q_n, and τ(1 − q_N) ≤ ‖x‖₁/λ. The subtraction form is
//! equivalent to multiplying by χ_{(0,λ]} and avoids the 0-eigenvalue
//! boundary under floating point.
//!
//! The dyadic family collects the q^{(2^k)} for k = 0..k_max, where k_max is
//! the first k with 2^k ≥ max_n ‖x_n‖_∞; beyond it every family is
//! identically 1, so the nominally infinite meets defining the layers
//!
//! ```text
//! p_{0,n} = ⋀_{k≥0} q_n^{(2^k)},    p_{i,n} = ⋀_{k≥i} q_n^{(2^k)} − ⋀_{k≥i−1} q_n^{(2^k)}
//! ```
//!
//! truncate at k_max. The layers are pairwise disjoint, sum to 1, and the
//! partial sums are dominated by q_n^{(2^{m_0})}. All spectral steps run
//! inside the level-n structure so the projections stay in M_n exactly.

use serde::Serialize;

use crate::algebra::{sup_norm_matrix, Operator, Projection};
use crate::filtration::Martingale;
use crate::{Error, Result};

/// The stopping projections q_1..q_N for one cut height λ.
#[derive(Clone, Debug)]
pub struct CuculescuFamily {
    lambda: f64,
    q: Vec<Projection>,
}

impl CuculescuFamily {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// q_n, 1-based.
    pub fn q(&self, n: usize) -> &Projection {
        &self.q[n - 1]
    }

    pub fn levels(&self) -> usize {
        self.q.len()
    }

    pub fn last(&self) -> &Projection {
        self.q.last().unwrap()
    }

    /// τ(1 − q_N), the trace mass cut away by level N.
    pub fn tail_mass(&self) -> f64 {
        1.0 - self.last().trace()
    }
}

/// Builds the stopping family of a positive martingale at height λ.
pub fn cuculescu(m: &Martingale, lambda: f64) -> Result<CuculescuFamily> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::Degenerate(format!("cut height must be positive, got {lambda}")));
    }
    m.ensure_positive()?;
    let f = m.filtration();
    let mut q_prev = Projection::identity(m.algebra());
    let mut q = Vec::with_capacity(m.levels());
    for n in 1..=m.levels() {
        let compressed = compress(&q_prev, m.level(n));
        let excess = f.project_spectrum_at(n, &compressed, lambda, f64::INFINITY)?;
        let q_n = Projection::try_new(q_prev.as_operator() - excess.as_operator())?;
        q.push(q_n.clone());
        q_prev = q_n;
    }
    Ok(CuculescuFamily { lambda, q })
}

/// q x q, symmetrized to kill roundoff asymmetry.
pub(crate) fn compress(q: &Projection, x: &Operator) -> Operator {
    (&(q.as_operator() * x) * q.as_operator()).hermitian_part()
}

/// The families at λ = 2^k for k = 0..=k_max.
#[derive(Clone, Debug)]
pub struct DyadicFamilies {
    k_max: usize,
    families: Vec<CuculescuFamily>,
}

impl DyadicFamilies {
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// The family at λ = 2^k.
    pub fn at(&self, k: usize) -> &CuculescuFamily {
        &self.families[k]
    }

    pub fn iter(&self) -> impl Iterator<Item = &CuculescuFamily> {
        self.families.iter()
    }
}

/// Smallest k ≥ 0 with 2^k ≥ max_n ‖x_n‖_∞; every family above it is
/// identically 1.
pub fn k_max_index(m: &Martingale) -> usize {
    let top = m.max_sup_norm();
    let mut k = 0usize;
    while ((1u64 << k) as f64) < top && k < 62 {
        k += 1;
    }
    k
}

pub fn dyadic_families(m: &Martingale) -> Result<DyadicFamilies> {
    let k_max = k_max_index(m);
    let families = (0..=k_max)
        .map(|k| cuculescu(m, (1u64 << k) as f64))
        .collect::<Result<Vec<_>>>()?;
    Ok(DyadicFamilies { k_max, families })
}

/// The layers p_{i,n} for 0 ≤ i ≤ k_max+1, 1 ≤ n ≤ N, together with the
/// cumulative meets A_{i,n} = Σ_{j≤i} p_{j,n} = ⋀_{k>i} q_n^{(2^k)}.
#[derive(Clone, Debug)]
pub struct SpectralLayers {
    k_max: usize,
    /// p[n−1][i].
    p: Vec<Vec<Projection>>,
    /// cum[n−1][i] = Σ_{j≤i} p_{j,n}.
    cum: Vec<Vec<Projection>>,
}

impl SpectralLayers {
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Number of layer indices: i runs over 0..layer_count().
    pub fn layer_count(&self) -> usize {
        self.k_max + 2
    }

    pub fn levels(&self) -> usize {
        self.p.len()
    }

    /// p_{i,n}.
    pub fn layer(&self, i: usize, n: usize) -> &Projection {
        &self.p[n - 1][i]
    }

    /// A_{i,n} = Σ_{j≤i} p_{j,n}; equals the meet of the dyadic families from
    /// index i+1 up (the identity when i = k_max+1).
    pub fn cumulative(&self, i: usize, n: usize) -> &Projection {
        &self.cum[n - 1][i]
    }
}

pub fn layers(m: &Martingale) -> Result<SpectralLayers> {
    layers_from(m, &dyadic_families(m)?)
}

pub fn layers_from(m: &Martingale, families: &DyadicFamilies) -> Result<SpectralLayers> {
    let f = m.filtration();
    let k_max = families.k_max();
    let mut p = Vec::with_capacity(m.levels());
    let mut cum = Vec::with_capacity(m.levels());
    for n in 1..=m.levels() {
        // meets[i] = ⋀_{k=i}^{k_max} q_n^{(2^k)}; the empty meet is 1.
        let mut meets = Vec::with_capacity(k_max + 2);
        for i in 0..=k_max {
            let qs: Vec<&Projection> = (i..=k_max).map(|k| families.at(k).q(n)).collect();
            meets.push(f.meet_at(n, &qs)?);
        }
        meets.push(Projection::identity(m.algebra()));
        let mut layers_n = Vec::with_capacity(k_max + 2);
        layers_n.push(meets[0].clone());
        for i in 1..=k_max + 1 {
            layers_n.push(Projection::try_new(
                meets[i].as_operator() - meets[i - 1].as_operator(),
            )?);
        }
        p.push(layers_n);
        cum.push(meets);
    }
    Ok(SpectralLayers { k_max, p, cum })
}

/// Support projections r_{i,n} = r(p_{i,n} − p_{i,n−1} p_{i,n}) for n ≥ 2,
/// i ≥ 1, and the level sums h_n = Σ_{i≥0} (p_{i,n} − p_{i,n−1} p_{i,n}).
#[derive(Clone, Debug)]
pub struct SupportFamily {
    k_max: usize,
    /// r[n−2][i−1] for n = 2..=N, i = 1..=k_max+1.
    r: Vec<Vec<Projection>>,
    /// h[n−2] for n = 2..=N.
    h: Vec<Operator>,
}

impl SupportFamily {
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// r_{i,n} for i ≥ 1, n ≥ 2.
    pub fn r(&self, i: usize, n: usize) -> &Projection {
        &self.r[n - 2][i - 1]
    }

    /// h_n for n ≥ 2.
    pub fn h(&self, n: usize) -> &Operator {
        &self.h[n - 2]
    }

    pub fn levels(&self) -> usize {
        self.h.len() + 1
    }

    /// Σ_{n≥2} τ(Σ_{i≥m0+1} r_{i,n}); bounded by 4·2^{−m0}.
    pub fn tail_mass(&self, m0: usize) -> f64 {
        self.r
            .iter()
            .map(|row| {
                row.iter().skip(m0).map(|proj| proj.trace()).sum::<f64>()
            })
            .sum()
    }

    /// sup_{n≥2} ‖h_n‖_∞.
    pub fn h_sup_norm(&self) -> f64 {
        self.h.iter().map(|h| h.sup_norm()).fold(0.0, f64::max)
    }

    /// (Σ_{n≥2} ‖h_n‖₂²)^{1/2}.
    pub fn h_l2_norm(&self) -> f64 {
        self.h
            .iter()
            .map(|h| h.lp_norm(2.0).unwrap().powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

pub fn supports(m: &Martingale, layers: &SpectralLayers) -> Result<SupportFamily> {
    let f = m.filtration();
    let k_max = layers.k_max();
    let mut r = Vec::with_capacity(m.levels().saturating_sub(1));
    let mut h = Vec::with_capacity(m.levels().saturating_sub(1));
    for n in 2..=m.levels() {
        let mut row = Vec::with_capacity(k_max + 1);
        let mut h_n = m.algebra().zero();
        for i in 0..=k_max + 1 {
            let diff = layers.layer(i, n).as_operator()
                - &(layers.layer(i, n - 1).as_operator() * layers.layer(i, n).as_operator());
            h_n = &h_n + &diff;
            if i >= 1 {
                row.push(f.right_support_at(n, &diff)?);
            }
        }
        r.push(row);
        h.push(h_n);
    }
    Ok(SupportFamily { k_max, r, h })
}

/// Energy carried by the stopped compressions at height λ: per level the
/// certified comparison ‖q_n dx_n q_{n−1}‖₂ ≤ ‖q_n x_n q_n − q_{n−1} x_{n−1} q_{n−1}‖₂
/// and the total bound first² + Σ diffs² ≤ 2λ (for τ(x_N) = 1).
#[derive(Clone, Debug, Serialize)]
pub struct CompressionEnergy {
    pub lambda: f64,
    /// ‖q_1 x_1 q_1‖₂.
    pub first_level: f64,
    /// (‖q_n dx_n q_{n−1}‖₂, ‖q_n x_n q_n − q_{n−1} x_{n−1} q_{n−1}‖₂) for n = 2..=N.
    pub per_level: Vec<(f64, f64)>,
    /// first_level² + Σ_n (second component)².
    pub total: f64,
}

impl CompressionEnergy {
    pub fn bound(&self) -> f64 {
        2.0 * self.lambda
    }
}

pub fn compression_energy(m: &Martingale, lambda: f64) -> Result<CompressionEnergy> {
    m.ensure_normalized()?;
    let family = cuculescu(m, lambda)?;
    let dx = m.differences();
    let first = compress(family.q(1), m.level(1)).lp_norm(2.0)?;
    let mut per_level = Vec::with_capacity(m.levels().saturating_sub(1));
    let mut total = first * first;
    for n in 2..=m.levels() {
        let lhs = (&(family.q(n).as_operator() * &dx[n - 1]) * family.q(n - 1).as_operator())
            .lp_norm(2.0)?;
        let rhs = (&compress(family.q(n), m.level(n)) - &compress(family.q(n - 1), m.level(n - 1)))
            .lp_norm(2.0)?;
        total += rhs * rhs;
        per_level.push((lhs, rhs));
    }
    Ok(CompressionEnergy { lambda, first_level: first, per_level, total })
}

/// ‖[q_n, q_{n−1} x_n q_{n−1}]‖_∞, the commutation residual of the recursion.
pub fn commutation_residual(m: &Martingale, family: &CuculescuFamily) -> f64 {
    let mut worst = 0.0_f64;
    let mut q_prev = Projection::identity(m.algebra());
    for n in 1..=m.levels() {
        let v = compress(&q_prev, m.level(n));
        let qn = family.q(n);
        let comm = &(qn.as_operator() * &v) - &(&v * qn.as_operator());
        worst = worst.max(sup_norm_matrix(comm.matrix()));
        q_prev = qn.clone();
    }
    worst
}
