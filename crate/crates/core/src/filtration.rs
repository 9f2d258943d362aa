//! Filtrations of subalgebras, trace-preserving conditional expectations,
//! martingale construction, and random ensembles.
//!
//! Two filtration families are supported, both with *exact* conditional
//! expectations (no least-squares solve):
//!
//! - **Pinching**: level n is the block-diagonal algebra of a partition of
//!   `{1..d}`, with `E_n(x) = Σ_B P_B x P_B`. Partitions coarsen as n grows
//!   and the last level is the single block, so `M_N = M`.
//! - **Tensor**: `d = d_1·…·d_N` and level n is the algebra generated by the
//!   first n factors; `E_n` is the identity on those factors and the
//!   normalized partial trace on the rest. The level-0 expectation onto ℂ1
//!   is exposed separately as [`Filtration::expect_state`].
//!
//! A martingale is stored as its terminal value together with the filtration;
//! the levels `x_n = E_n(x_N)` and differences `dx_n = x_n − x_{n−1}` (with
//! `x_0 = 0`) are derived. Conditioned quantities that index level n−1 at
//! n = 1 use the convention `E_0 = E_1`; difference sequences use `x_0 = 0`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::algebra::{
    hermitian_eigen_of_matrix, lambda_min, meet_matrices, op_leq, projection_from_spectrum,
    CMatrix, Operator, Projection, TracialAlgebra, EPS_BOUNDARY, EPS_NUM, EPS_PSD, EPS_RANK,
};
use crate::{Error, Result};

/// Serializable description of a filtration.
///
/// Pinching partitions are 1-based on the wire: `{"type":"pinching",
/// "partitions":[[[1,2],[3,4]],[[1,2,3,4]]]}`. Tensor factors:
/// `{"type":"tensor","dims":[2,2,3]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum FiltrationSpec {
    Pinching { partitions: Vec<Vec<Vec<usize>>> },
    Tensor { dims: Vec<usize> },
}

impl FiltrationSpec {
    /// Dyadic pinching chain: blocks merge pairwise toward the single block
    /// at the last level. Levels below the singleton partition repeat it.
    pub fn dyadic_pinching(dim: usize, levels: usize) -> Self {
        assert!(dim > 0 && levels > 0);
        let mut parts: Vec<Vec<Vec<usize>>> = vec![vec![(1..=dim).collect()]];
        for _ in 1..levels {
            let prev = parts.last().unwrap();
            let mut finer = Vec::new();
            for block in prev {
                if block.len() > 1 {
                    let half = block.len().div_ceil(2);
                    finer.push(block[..half].to_vec());
                    finer.push(block[half..].to_vec());
                } else {
                    finer.push(block.clone());
                }
            }
            parts.push(finer);
        }
        parts.reverse();
        FiltrationSpec::Pinching { partitions: parts }
    }

    /// Tensor factorization of `dim` into exactly `levels` factors: greedy
    /// prime factors, extras folded into the last factor, padded with leading
    /// 1-dimensional factors when there are too few.
    pub fn tensor_factors(dim: usize, levels: usize) -> Result<Self> {
        assert!(dim > 0 && levels > 0);
        let mut primes = Vec::new();
        let mut rest = dim;
        let mut p = 2;
        while rest > 1 {
            while rest.is_multiple_of(p) {
                primes.push(p);
                rest /= p;
            }
            p += 1;
        }
        let mut dims: Vec<usize>;
        if primes.len() > levels {
            dims = primes[..levels - 1].to_vec();
            dims.push(primes[levels - 1..].iter().product());
        } else {
            dims = vec![1; levels - primes.len()];
            dims.extend(primes);
        }
        debug_assert_eq!(dims.iter().product::<usize>(), dim);
        Ok(FiltrationSpec::Tensor { dims })
    }

    /// Ambient dimension implied by the spec.
    pub fn dim(&self) -> usize {
        match self {
            FiltrationSpec::Pinching { partitions } => partitions
                .first()
                .map(|p| p.iter().map(|b| b.len()).sum())
                .unwrap_or(0),
            FiltrationSpec::Tensor { dims } => dims.iter().product(),
        }
    }

    pub fn levels(&self) -> usize {
        match self {
            FiltrationSpec::Pinching { partitions } => partitions.len(),
            FiltrationSpec::Tensor { dims } => dims.len(),
        }
    }
}

#[derive(Clone, Debug)]
enum Level {
    /// 0-based, sorted blocks of a partition of 0..d.
    Blocks(Vec<Vec<usize>>),
    /// Keep-masked factors of a tensor decomposition of the ambient algebra.
    Tensor { dims: Vec<usize>, keep: Vec<bool> },
}

/// A compiled filtration: the ambient algebra plus one conditional
/// expectation per level.
#[derive(Clone, Debug)]
pub struct Filtration {
    algebra: TracialAlgebra,
    levels: Vec<Level>,
}

impl Filtration {
    pub fn from_spec(spec: &FiltrationSpec) -> Result<Self> {
        match spec {
            FiltrationSpec::Pinching { partitions } => Self::pinching(partitions),
            FiltrationSpec::Tensor { dims } => Self::tensor(dims),
        }
    }

    /// Pinching filtration from 1-based partitions, one per level.
    pub fn pinching(partitions: &[Vec<Vec<usize>>]) -> Result<Self> {
        if partitions.is_empty() {
            return Err(Error::InvalidFiltration("no levels".into()));
        }
        let dim: usize = partitions[0].iter().map(|b| b.len()).sum();
        if dim == 0 {
            return Err(Error::InvalidFiltration("empty partition".into()));
        }
        let mut levels = Vec::with_capacity(partitions.len());
        for (li, part) in partitions.iter().enumerate() {
            let mut seen = vec![false; dim];
            let mut blocks = Vec::with_capacity(part.len());
            for block in part {
                let mut idx = Vec::with_capacity(block.len());
                for &one_based in block {
                    if one_based == 0 || one_based > dim {
                        return Err(Error::InvalidFiltration(format!(
                            "index {one_based} out of 1..={dim} at level {}",
                            li + 1
                        )));
                    }
                    if seen[one_based - 1] {
                        return Err(Error::InvalidFiltration(format!(
                            "index {one_based} repeated at level {}",
                            li + 1
                        )));
                    }
                    seen[one_based - 1] = true;
                    idx.push(one_based - 1);
                }
                idx.sort_unstable();
                blocks.push(idx);
            }
            if seen.iter().any(|&s| !s) {
                return Err(Error::InvalidFiltration(format!(
                    "level {} does not cover 1..={dim}",
                    li + 1
                )));
            }
            levels.push(blocks);
        }
        // Blocks must merge as n grows so that M_n ⊆ M_{n+1}.
        for n in 0..levels.len() - 1 {
            for block in &levels[n] {
                let host = levels[n + 1].iter().find(|b| b.contains(&block[0]));
                let contained =
                    host.map(|b| block.iter().all(|i| b.contains(i))).unwrap_or(false);
                if !contained {
                    return Err(Error::InvalidFiltration(format!(
                        "level {} block {:?} is not contained in a level {} block",
                        n + 1,
                        block.iter().map(|i| i + 1).collect::<Vec<_>>(),
                        n + 2
                    )));
                }
            }
        }
        if levels.last().unwrap().len() != 1 {
            return Err(Error::InvalidFiltration(
                "last level must be the single block {1..d}".into(),
            ));
        }
        Ok(Self {
            algebra: TracialAlgebra::normalized(dim),
            levels: levels.into_iter().map(Level::Blocks).collect(),
        })
    }

    /// Tensor filtration: level n keeps the first n factors.
    pub fn tensor(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::InvalidFiltration("tensor factors must be positive".into()));
        }
        let dim: usize = dims.iter().product();
        let levels = (1..=dims.len())
            .map(|n| {
                let mut keep = vec![false; dims.len()];
                keep[..n].fill(true);
                Level::Tensor { dims: dims.to_vec(), keep }
            })
            .collect();
        Ok(Self { algebra: TracialAlgebra::normalized(dim), levels })
    }

    /// Tensor filtration in the presence of a spectator factor: level n is
    /// generated by the first n of `dims` together with a trailing factor of
    /// dimension `spectator` that belongs to every level.
    pub fn tensor_with_spectator(dims: &[usize], spectator: usize) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) || spectator == 0 {
            return Err(Error::InvalidFiltration("tensor factors must be positive".into()));
        }
        let mut all = dims.to_vec();
        all.push(spectator);
        let dim: usize = all.iter().product();
        let levels = (1..=dims.len())
            .map(|n| {
                let mut keep = vec![false; all.len()];
                keep[..n].fill(true);
                *keep.last_mut().unwrap() = true;
                Level::Tensor { dims: all.clone(), keep }
            })
            .collect();
        Ok(Self { algebra: TracialAlgebra::normalized(dim), levels })
    }

    pub fn algebra(&self) -> TracialAlgebra {
        self.algebra
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn levels(&self) -> usize {
        self.levels.len()
    }

    fn level(&self, n: usize) -> Result<&Level> {
        if n == 0 || n > self.levels.len() {
            return Err(Error::LevelOutOfRange { level: n, max: self.levels.len() });
        }
        Ok(&self.levels[n - 1])
    }

    /// E_n(x), the trace-preserving conditional expectation onto level n.
    pub fn expect(&self, n: usize, x: &Operator) -> Result<Operator> {
        self.check_member(x)?;
        let mat = match self.level(n)? {
            Level::Blocks(blocks) => pinch(x.matrix(), blocks),
            Level::Tensor { dims, keep } => masked_expectation(x.matrix(), dims, keep),
        };
        Operator::new(mat, self.algebra)
    }

    /// E_{n−1} with the convention E_0 = E_1.
    pub fn expect_prev(&self, n: usize, x: &Operator) -> Result<Operator> {
        self.expect(n.max(2) - 1, x)
    }

    /// The expectation onto ℂ1: x ↦ τ(x)·1.
    pub fn expect_state(&self, x: &Operator) -> Operator {
        self.algebra.identity().scale_complex(x.trace())
    }

    fn check_member(&self, x: &Operator) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.dim() });
        }
        Ok(())
    }

    /// Spectral projection of a self-adjoint `x` onto (lo, hi], computed
    /// within the level-n structure so the result lies in M_n exactly
    /// whenever `x` does.
    pub fn project_spectrum_at(&self, n: usize, x: &Operator, lo: f64, hi: f64) -> Result<Projection> {
        self.check_member(x)?;
        let res = x.self_adjoint_residual();
        if res > EPS_PSD * x.norm_scale() {
            return Err(Error::NotSelfAdjoint { residual: res });
        }
        let herm = x.hermitian_part();
        match self.level(n)? {
            Level::Blocks(blocks) => {
                let eigs: Vec<_> = blocks
                    .iter()
                    .map(|idx| {
                        let sub = extract_block(herm.matrix(), idx);
                        hermitian_eigen_of_matrix(&sub, TracialAlgebra::normalized(idx.len()))
                    })
                    .collect();
                let scale = eigs
                    .iter()
                    .flat_map(|e| e.eigenvalues().iter())
                    .fold(1.0_f64, |m, &v| m.max(v.abs()));
                let tol = EPS_BOUNDARY * scale;
                let mut mat = CMatrix::zeros(self.dim(), self.dim());
                for (idx, eig) in blocks.iter().zip(&eigs) {
                    let small = selection_projection(eig, lo, hi, tol);
                    scatter_block(&mut mat, idx, &small);
                }
                Ok(Projection::new_unchecked(Operator::new(mat, self.algebra)?))
            }
            Level::Tensor { dims, keep } => match prefix_keep(dims, keep) {
                Some(keep_dim) => {
                    let small = compress_prefix(herm.matrix(), keep_dim);
                    let eig =
                        hermitian_eigen_of_matrix(&small, TracialAlgebra::normalized(keep_dim));
                    let proj = projection_from_spectrum(&eig, lo, hi);
                    let tail = self.dim() / keep_dim;
                    let mat = proj.matrix().kronecker(&CMatrix::identity(tail, tail));
                    Ok(Projection::new_unchecked(Operator::new(mat, self.algebra)?))
                }
                None => crate::algebra::spectral_projection(x, lo, hi),
            },
        }
    }

    /// Meet of projections lying in level n, within the level structure.
    /// An empty family meets to the identity.
    pub fn meet_at(&self, n: usize, ps: &[&Projection]) -> Result<Projection> {
        if ps.is_empty() {
            return Ok(Projection::identity(self.algebra));
        }
        for p in ps {
            self.check_member(p.as_operator())?;
        }
        match self.level(n)? {
            Level::Blocks(blocks) => {
                let mut mat = CMatrix::zeros(self.dim(), self.dim());
                for idx in blocks {
                    let subs: Vec<CMatrix> =
                        ps.iter().map(|p| extract_block(p.matrix(), idx)).collect();
                    let small = meet_matrices(&subs, idx.len());
                    scatter_block(&mut mat, idx, &small);
                }
                Ok(Projection::new_unchecked(Operator::new(mat, self.algebra)?))
            }
            Level::Tensor { dims, keep } => match prefix_keep(dims, keep) {
                Some(keep_dim) => {
                    let subs: Vec<CMatrix> =
                        ps.iter().map(|p| compress_prefix(p.matrix(), keep_dim)).collect();
                    let small = meet_matrices(&subs, keep_dim);
                    let tail = self.dim() / keep_dim;
                    let mat = small.kronecker(&CMatrix::identity(tail, tail));
                    Ok(Projection::new_unchecked(Operator::new(mat, self.algebra)?))
                }
                None => Ok(crate::algebra::meet_all(ps)),
            },
        }
    }

    /// Right support of an element of level n, within the level structure.
    pub fn right_support_at(&self, n: usize, x: &Operator) -> Result<Projection> {
        self.check_member(x)?;
        let cutoff = EPS_RANK * x.norm_scale();
        match self.level(n)? {
            Level::Blocks(blocks) => {
                let mut mat = CMatrix::zeros(self.dim(), self.dim());
                for idx in blocks {
                    let sub = extract_block(x.matrix(), idx);
                    let small = right_support_matrix(&sub, cutoff);
                    scatter_block(&mut mat, idx, &small);
                }
                Ok(Projection::new_unchecked(Operator::new(mat, self.algebra)?))
            }
            Level::Tensor { dims, keep } => match prefix_keep(dims, keep) {
                Some(keep_dim) => {
                    let small = compress_prefix(x.matrix(), keep_dim);
                    let supp = right_support_matrix(&small, cutoff);
                    let tail = self.dim() / keep_dim;
                    let mat = supp.kronecker(&CMatrix::identity(tail, tail));
                    Ok(Projection::new_unchecked(Operator::new(mat, self.algebra)?))
                }
                None => Ok(crate::algebra::right_support(x)),
            },
        }
    }
}

/// Σ_B P_B x P_B: keep the diagonal blocks, kill the rest.
fn pinch(mat: &CMatrix, blocks: &[Vec<usize>]) -> CMatrix {
    let d = mat.nrows();
    let mut out = CMatrix::zeros(d, d);
    for idx in blocks {
        for &i in idx {
            for &j in idx {
                out[(i, j)] = mat[(i, j)];
            }
        }
    }
    out
}

fn extract_block(mat: &CMatrix, idx: &[usize]) -> CMatrix {
    let b = idx.len();
    CMatrix::from_fn(b, b, |r, c| mat[(idx[r], idx[c])])
}

fn scatter_block(dst: &mut CMatrix, idx: &[usize], block: &CMatrix) {
    for (r, &i) in idx.iter().enumerate() {
        for (c, &j) in idx.iter().enumerate() {
            dst[(i, j)] = block[(r, c)];
        }
    }
}

/// Identity on the kept factors, normalized partial trace on the rest,
/// re-embedded with identities in the dropped slots.
fn masked_expectation(mat: &CMatrix, dims: &[usize], keep: &[bool]) -> CMatrix {
    let d = mat.nrows();
    let keep_dim: usize = dims.iter().zip(keep).filter(|(_, &k)| k).map(|(&d, _)| d).product();
    let drop_dim = d / keep_dim;
    if drop_dim == 1 {
        return mat.clone();
    }
    // full[ki][ti]: ambient index of kept multi-index ki and dropped ti.
    let mut full = vec![vec![0usize; drop_dim]; keep_dim];
    for (ki, row) in full.iter_mut().enumerate() {
        for (ti, slot) in row.iter_mut().enumerate() {
            *slot = interleave_index(ki, ti, dims, keep);
        }
    }
    let mut out = CMatrix::zeros(d, d);
    let w = 1.0 / drop_dim as f64;
    for ku in 0..keep_dim {
        for kv in 0..keep_dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for t in 0..drop_dim {
                acc += mat[(full[ku][t], full[kv][t])];
            }
            acc *= w;
            for t in 0..drop_dim {
                out[(full[ku][t], full[kv][t])] = acc;
            }
        }
    }
    out
}

/// Compose the ambient row-major index from a kept multi-index and a dropped
/// multi-index.
fn interleave_index(keep_idx: usize, drop_idx: usize, dims: &[usize], keep: &[bool]) -> usize {
    let mut digits = vec![0usize; dims.len()];
    let mut ki = keep_idx;
    let mut ti = drop_idx;
    for f in (0..dims.len()).rev() {
        if keep[f] {
            digits[f] = ki % dims[f];
            ki /= dims[f];
        } else {
            digits[f] = ti % dims[f];
            ti /= dims[f];
        }
    }
    let mut out = 0;
    for f in 0..dims.len() {
        out = out * dims[f] + digits[f];
    }
    out
}

fn prefix_keep(dims: &[usize], keep: &[bool]) -> Option<usize> {
    let first_dropped = keep.iter().position(|&k| !k).unwrap_or(keep.len());
    if keep[first_dropped..].iter().any(|&k| k) {
        return None;
    }
    Some(dims[..first_dropped].iter().product())
}

/// A[u,v] = (1/tail)·Σ_t x[(u,t),(v,t)] for prefix structure x = A ⊗ 1.
fn compress_prefix(mat: &CMatrix, keep_dim: usize) -> CMatrix {
    let tail = mat.nrows() / keep_dim;
    let w = 1.0 / tail as f64;
    CMatrix::from_fn(keep_dim, keep_dim, |u, v| {
        let mut acc = Complex64::new(0.0, 0.0);
        for t in 0..tail {
            acc += mat[(u * tail + t, v * tail + t)];
        }
        acc * w
    })
}

fn selection_projection(
    eig: &crate::algebra::SpectralData,
    lo: f64,
    hi: f64,
    tol: f64,
) -> CMatrix {
    let b = eig.eigenvalues().len();
    let mut out = CMatrix::zeros(b, b);
    for (i, &v) in eig.eigenvalues().iter().enumerate() {
        if v > lo + tol && v <= hi + tol {
            let col = eig.vectors().column(i);
            out += col * col.adjoint();
        }
    }
    out
}

fn right_support_matrix(mat: &CMatrix, cutoff: f64) -> CMatrix {
    let b = mat.ncols();
    let svd = crate::svd::jacobi_svd(mat);
    let mut out = CMatrix::zeros(b, b);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            let col = svd.v.column(i);
            out += col * col.adjoint();
        }
    }
    out
}

/// A finite martingale: levels x_n = E_n(x_N) cached alongside the filtration.
#[derive(Clone, Debug)]
pub struct Martingale {
    filtration: Filtration,
    xs: Vec<Operator>,
}

impl Martingale {
    /// Builds the martingale of a terminal value: x_n = E_n(x).
    pub fn from_terminal(x: Operator, filtration: Filtration) -> Result<Self> {
        if x.dim() != filtration.dim() {
            return Err(Error::DimensionMismatch { expected: filtration.dim(), found: x.dim() });
        }
        let xs = (1..=filtration.levels())
            .map(|n| filtration.expect(n, &x))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { filtration, xs })
    }

    pub fn filtration(&self) -> &Filtration {
        &self.filtration
    }

    pub fn algebra(&self) -> TracialAlgebra {
        self.filtration.algebra()
    }

    pub fn levels(&self) -> usize {
        self.xs.len()
    }

    /// x_n, 1-based.
    pub fn level(&self, n: usize) -> &Operator {
        &self.xs[n - 1]
    }

    pub fn terminal(&self) -> &Operator {
        self.xs.last().unwrap()
    }

    /// dx_1 = x_1 and dx_n = x_n − x_{n−1}; the telescoping sum is x_N.
    pub fn differences(&self) -> Vec<Operator> {
        let mut out = Vec::with_capacity(self.xs.len());
        out.push(self.xs[0].clone());
        for n in 1..self.xs.len() {
            out.push(&self.xs[n] - &self.xs[n - 1]);
        }
        out
    }

    /// max_n ‖x_n‖_∞.
    pub fn max_sup_norm(&self) -> f64 {
        self.xs.iter().map(|x| x.sup_norm()).fold(0.0, f64::max)
    }

    pub fn is_positive(&self) -> bool {
        self.ensure_positive().is_ok()
    }

    pub fn ensure_positive(&self) -> Result<()> {
        let x = self.terminal();
        let min = lambda_min(x)?;
        if min < -EPS_PSD * x.norm_scale() {
            return Err(Error::NotPositive { min_eigenvalue: min });
        }
        Ok(())
    }

    /// Requires τ(x_N) = 1 within `EPS_NUM`.
    pub fn ensure_normalized(&self) -> Result<()> {
        let t = self.terminal().trace();
        if (t.re - 1.0).abs() > EPS_NUM || t.im.abs() > EPS_NUM {
            return Err(Error::NotNormalized { trace: t.re });
        }
        Ok(())
    }

    /// x_n ≤ k·x_{n−1} for all n ≥ 2 (positive martingales only).
    pub fn is_k_regular(&self, k: f64) -> Result<bool> {
        Ok(self.regularity_violation(k)?.is_none())
    }

    /// Errs with the offending level when regularity fails.
    pub fn check_k_regular(&self, k: f64) -> Result<()> {
        match self.regularity_violation(k)? {
            None => Ok(()),
            Some((level, slack)) => Err(Error::NotRegular { k, level, slack }),
        }
    }

    fn regularity_violation(&self, k: f64) -> Result<Option<(usize, f64)>> {
        self.ensure_positive()?;
        for n in 2..=self.levels() {
            let bound = self.level(n - 1).scale(k);
            let eps = EPS_PSD * self.level(n).norm_scale();
            if !op_leq(self.level(n), &bound, eps)? {
                let slack = lambda_min(&(&bound - self.level(n)))?;
                return Ok(Some((n, slack)));
            }
        }
        Ok(None)
    }
}

/// Terminal-value ensemble modes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RandomMode {
    /// x_N = G*G/τ(G*G) for Gaussian G, so x_N ≥ 0 and τ(x_N) = 1.
    PositiveNormalized,
    SelfAdjoint,
    General,
}

/// Deterministic random martingale: the same seed yields a bit-identical
/// result, and distinct seeds use independent ChaCha streams.
pub fn random_martingale(f: &Filtration, seed: u64, mode: RandomMode) -> Martingale {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = f.dim();
    let g = gaussian_matrix(&mut rng, d);
    let algebra = f.algebra();
    let x = match mode {
        RandomMode::PositiveNormalized => {
            let pos = g.adjoint() * &g;
            let tr = algebra.trace_of(&pos).re;
            Operator::new(pos.scale(1.0 / tr), algebra).unwrap()
        }
        RandomMode::SelfAdjoint => {
            Operator::new((&g + g.adjoint()).scale(0.5), algebra).unwrap()
        }
        RandomMode::General => Operator::new(g, algebra).unwrap(),
    };
    Martingale::from_terminal(x, f.clone()).unwrap()
}

pub(crate) fn gaussian_matrix(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
    let inv = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re * inv, im * inv)
    })
}

/// A sequence a_n = 1 ⊗ … ⊗ g_n ⊗ … ⊗ 1 of mean-zero single-factor elements
/// of a tensor filtration. Such a sequence is a martingale difference
/// sequence for the filtration, and mixed moments across distinct factors
/// factorize under the trace.
#[derive(Clone, Debug)]
pub struct IndependentSequence {
    filtration: Filtration,
    elements: Vec<Operator>,
}

impl IndependentSequence {
    pub fn filtration(&self) -> &Filtration {
        &self.filtration
    }

    pub fn elements(&self) -> &[Operator] {
        &self.elements
    }

    /// Σ_n a_n.
    pub fn sum(&self) -> Operator {
        let mut acc = self.filtration.algebra().zero();
        for a in &self.elements {
            acc = &acc + a;
        }
        acc
    }
}

/// Mean-zero independent elements, one per tensor factor, each rescaled to
/// operator norm 1 (when nonzero).
pub fn independent_sequence(dims: &[usize], seed: u64) -> Result<IndependentSequence> {
    let filtration = Filtration::tensor(dims)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut elements = Vec::with_capacity(dims.len());
    for (n, &dn) in dims.iter().enumerate() {
        let g = gaussian_matrix(&mut rng, dn);
        let tr: Complex64 = g.diagonal().iter().sum::<Complex64>() / dn as f64;
        let mut centered = g - CMatrix::identity(dn, dn) * tr;
        let norm = crate::algebra::sup_norm_matrix(&centered);
        if norm > 0.0 {
            centered = centered.scale(1.0 / norm);
        }
        let pre: usize = dims[..n].iter().product();
        let post: usize = dims[n + 1..].iter().product();
        let embedded = CMatrix::identity(pre, pre)
            .kronecker(&centered)
            .kronecker(&CMatrix::identity(post, post));
        elements.push(Operator::new(embedded, filtration.algebra())?);
    }
    Ok(IndependentSequence { filtration, elements })
}
