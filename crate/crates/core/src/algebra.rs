//! Finite-dimensional tracial *-algebra arithmetic.
//!
//! The ambient object is `M_d(ℂ)` carrying either the normalized trace
//! `τ = tr/d` or the plain matrix trace. Everything downstream (martingales,
//! square functions, stopping projections) is built from the kernels here:
//! functional calculus on self-adjoint operators, Schatten and weak-L¹ norms
//! from singular values, support projections, and meets in the projection
//! lattice. All predicates (self-adjointness, positivity, projection-hood)
//! are checked to explicit tolerances, never assumed.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::svd::jacobi_svd;
use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Relative tolerance for positivity tests (`λ_min ≥ −EPS_PSD·scale`).
pub const EPS_PSD: f64 = 1e-9;
/// Relative singular-value cutoff for supports, ranks, and meets.
pub const EPS_RANK: f64 = 1e-9;
/// Tolerance for projection-hood (`‖P²−P‖_∞`, `‖P*−P‖_∞`).
pub const EPS_PROJ: f64 = 1e-8;
/// Spectral-boundary tolerance: eigenvalues within this (relative) distance
/// of an interval endpoint are assigned to the closed side.
pub const EPS_BOUNDARY: f64 = 1e-9;
/// General-purpose residual tolerance for exact operator identities.
pub const EPS_NUM: f64 = 1e-8;

/// Which trace the algebra carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceKind {
    /// τ = tr/d, so τ(1) = 1 and every eigenvalue carries mass 1/d.
    Normalized,
    /// Plain matrix trace; every eigenvalue carries mass 1.
    Unnormalized,
}

/// A full matrix algebra `M_d(ℂ)` together with its trace normalization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TracialAlgebra {
    dim: usize,
    trace: TraceKind,
}

impl TracialAlgebra {
    pub fn normalized(dim: usize) -> Self {
        assert!(dim > 0, "algebra dimension must be positive");
        Self { dim, trace: TraceKind::Normalized }
    }

    pub fn unnormalized(dim: usize) -> Self {
        assert!(dim > 0, "algebra dimension must be positive");
        Self { dim, trace: TraceKind::Unnormalized }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn trace_kind(&self) -> TraceKind {
        self.trace
    }

    /// Trace mass carried by a single eigenvalue.
    pub fn eigen_mass(&self) -> f64 {
        match self.trace {
            TraceKind::Normalized => 1.0 / self.dim as f64,
            TraceKind::Unnormalized => 1.0,
        }
    }

    pub fn trace_of(&self, mat: &CMatrix) -> Complex64 {
        let raw: Complex64 = mat.diagonal().iter().sum();
        match self.trace {
            TraceKind::Normalized => raw / self.dim as f64,
            TraceKind::Unnormalized => raw,
        }
    }

    pub fn identity(&self) -> Operator {
        Operator { mat: CMatrix::identity(self.dim, self.dim), algebra: *self }
    }

    pub fn zero(&self) -> Operator {
        Operator { mat: CMatrix::zeros(self.dim, self.dim), algebra: *self }
    }
}

/// A d×d complex matrix bound to its ambient tracial algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    mat: CMatrix,
    algebra: TracialAlgebra,
}

impl Operator {
    pub fn new(mat: CMatrix, algebra: TracialAlgebra) -> Result<Self> {
        if mat.nrows() != algebra.dim() || mat.ncols() != algebra.dim() {
            return Err(Error::DimensionMismatch {
                expected: algebra.dim(),
                found: mat.nrows().max(mat.ncols()),
            });
        }
        Ok(Self { mat, algebra })
    }

    /// Real diagonal matrix in the given algebra.
    pub fn from_diagonal(diag: &[f64], algebra: TracialAlgebra) -> Result<Self> {
        if diag.len() != algebra.dim() {
            return Err(Error::DimensionMismatch { expected: algebra.dim(), found: diag.len() });
        }
        let mut mat = CMatrix::zeros(algebra.dim(), algebra.dim());
        for (i, &v) in diag.iter().enumerate() {
            mat[(i, i)] = Complex64::new(v, 0.0);
        }
        Ok(Self { mat, algebra })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn algebra(&self) -> TracialAlgebra {
        self.algebra
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn trace(&self) -> Complex64 {
        self.algebra.trace_of(&self.mat)
    }

    pub fn adjoint(&self) -> Operator {
        Operator { mat: self.mat.adjoint(), algebra: self.algebra }
    }

    /// (x + x*)/2.
    pub fn hermitian_part(&self) -> Operator {
        let mat = (&self.mat + self.mat.adjoint()).scale(0.5);
        Operator { mat, algebra: self.algebra }
    }

    /// (x − x*)/2i, the self-adjoint imaginary part.
    pub fn antihermitian_part(&self) -> Operator {
        let mat = (&self.mat - self.mat.adjoint()) * Complex64::new(0.0, -0.5);
        Operator { mat, algebra: self.algebra }
    }

    pub fn scale(&self, s: f64) -> Operator {
        Operator { mat: self.mat.scale(s), algebra: self.algebra }
    }

    pub fn scale_complex(&self, s: Complex64) -> Operator {
        Operator { mat: &self.mat * s, algebra: self.algebra }
    }

    pub fn self_adjoint_residual(&self) -> f64 {
        sup_norm_matrix(&(&self.mat - self.mat.adjoint()))
    }

    pub fn is_self_adjoint(&self, eps: f64) -> bool {
        self.self_adjoint_residual() <= eps * self.norm_scale()
    }

    /// Largest singular value (operator norm).
    pub fn sup_norm(&self) -> f64 {
        sup_norm_matrix(&self.mat)
    }

    /// max(1, ‖x‖_∞): the scale used for relative tolerances.
    pub fn norm_scale(&self) -> f64 {
        self.sup_norm().max(1.0)
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        crate::svd::singular_values(&self.mat)
    }

    /// The generalized singular value function μ_t as a right-continuous step
    /// function: descending values, each carrying the algebra's trace mass.
    pub fn singular_value_function(&self) -> SingularValueFunction {
        let mass = self.algebra.eigen_mass();
        let steps = self.singular_values().into_iter().map(|v| (v, mass)).collect();
        SingularValueFunction { steps }
    }

    /// ‖x‖_p = (τ(|x|^p))^{1/p} for p ≥ 1; the operator norm for p = ∞.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidExponent { p });
        }
        let s = self.singular_values();
        if p.is_infinite() {
            return Ok(s.first().copied().unwrap_or(0.0));
        }
        let mass = self.algebra.eigen_mass();
        let sum: f64 = s.iter().map(|v| v.powf(p) * mass).sum();
        Ok(sum.powf(1.0 / p))
    }

    /// ‖x‖_{1,∞} = sup_{λ>0} λ·τ(χ_{(λ,∞)}(|x|)), computed exactly as
    /// max_k (mass of top k)·s_k over descending singular values.
    pub fn weak_l1_norm(&self) -> f64 {
        let mass = self.algebra.eigen_mass();
        self.singular_values()
            .iter()
            .enumerate()
            .map(|(k, s)| (k + 1) as f64 * mass * s)
            .fold(0.0, f64::max)
    }

    /// The distribution function τ(χ_{(λ,∞)}(|x|)): trace mass of singular
    /// values strictly above λ.
    pub fn distribution_above(&self, lambda: f64) -> f64 {
        let mass = self.algebra.eigen_mass();
        self.singular_values().iter().filter(|&&s| s > lambda).count() as f64 * mass
    }
}

macro_rules! assert_same_algebra {
    ($a:expr, $b:expr) => {
        assert_eq!(
            $a.algebra, $b.algebra,
            "operators belong to different tracial algebras"
        );
    };
}

impl std::ops::Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_same_algebra!(self, rhs);
        Operator { mat: &self.mat + &rhs.mat, algebra: self.algebra }
    }
}

impl std::ops::Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_same_algebra!(self, rhs);
        Operator { mat: &self.mat - &rhs.mat, algebra: self.algebra }
    }
}

impl std::ops::Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        assert_same_algebra!(self, rhs);
        Operator { mat: &self.mat * &rhs.mat, algebra: self.algebra }
    }
}

impl std::ops::Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator { mat: -&self.mat, algebra: self.algebra }
    }
}

/// μ_t as sorted (value, mass) pairs.
#[derive(Clone, Debug)]
pub struct SingularValueFunction {
    steps: Vec<(f64, f64)>,
}

impl SingularValueFunction {
    pub fn steps(&self) -> &[(f64, f64)] {
        &self.steps
    }

    /// μ_t(x): the value on the mass interval containing t.
    pub fn at(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for &(v, m) in &self.steps {
            acc += m;
            if t < acc {
                return v;
            }
        }
        0.0
    }

    /// ∫ μ_t dt = ‖x‖_1.
    pub fn integral(&self) -> f64 {
        self.steps.iter().map(|&(v, m)| v * m).sum()
    }
}

/// An operator certified to be a projection within `EPS_PROJ`.
#[derive(Clone, Debug)]
pub struct Projection {
    op: Operator,
}

impl Projection {
    pub fn try_new(op: Operator) -> Result<Self> {
        let idem = &(&op * &op) - &op;
        let res = sup_norm_matrix(idem.matrix()).max(op.self_adjoint_residual());
        if res > EPS_PROJ {
            return Err(Error::NotProjection { residual: res });
        }
        Ok(Self { op })
    }

    /// Wraps without validation; caller guarantees projection-hood.
    pub(crate) fn new_unchecked(op: Operator) -> Self {
        Self { op }
    }

    pub fn identity(algebra: TracialAlgebra) -> Self {
        Self { op: algebra.identity() }
    }

    pub fn zero(algebra: TracialAlgebra) -> Self {
        Self { op: algebra.zero() }
    }

    pub fn as_operator(&self) -> &Operator {
        &self.op
    }

    pub fn into_operator(self) -> Operator {
        self.op
    }

    /// 1 − P.
    pub fn complement(&self) -> Projection {
        let one = self.op.algebra().identity();
        Projection { op: &one - &self.op }
    }

    /// Rank recovered from the plain matrix trace (exact for projections).
    pub fn rank(&self) -> usize {
        let raw: Complex64 = self.op.matrix().diagonal().iter().sum();
        raw.re.round().max(0.0) as usize
    }

    pub fn trace(&self) -> f64 {
        self.op.trace().re
    }
}

impl std::ops::Deref for Projection {
    type Target = Operator;
    fn deref(&self) -> &Operator {
        &self.op
    }
}

/// Eigen-decomposition of a self-adjoint operator: ascending real eigenvalues
/// and a unitary matrix of eigenvectors.
#[derive(Clone, Debug)]
pub struct SpectralData {
    eigenvalues: Vec<f64>,
    vectors: CMatrix,
    algebra: TracialAlgebra,
}

impl SpectralData {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// U f(Λ) U*: functional calculus.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> Operator {
        let diag =
            CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                self.eigenvalues.len(),
                self.eigenvalues.iter().map(|&v| Complex64::new(f(v), 0.0)),
            ));
        let mat = &self.vectors * diag * self.vectors.adjoint();
        Operator { mat, algebra: self.algebra }
    }

    /// U diag(λ) U*, for reconstruction checks.
    pub fn reconstruct(&self) -> Operator {
        self.apply(|v| v)
    }
}

/// Eigen-decomposition of the Hermitian part of `x`. Errors if `x` is not
/// self-adjoint within `EPS_PSD` (relative).
pub fn hermitian_eigen(x: &Operator) -> Result<SpectralData> {
    let res = x.self_adjoint_residual();
    if res > EPS_PSD * x.norm_scale() {
        return Err(Error::NotSelfAdjoint { residual: res });
    }
    Ok(hermitian_eigen_of_matrix(&x.hermitian_part().mat, x.algebra()))
}

pub(crate) fn hermitian_eigen_of_matrix(mat: &CMatrix, algebra: TracialAlgebra) -> SpectralData {
    let eig = SymmetricEigen::new(mat.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_columns(
        &order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>(),
    );
    SpectralData { eigenvalues, vectors, algebra }
}

/// Smallest eigenvalue of a self-adjoint operator.
pub fn lambda_min(x: &Operator) -> Result<f64> {
    Ok(hermitian_eigen(x)?.min_eigenvalue())
}

/// Operator order predicate: A ≤ B iff λ_min(B − A) ≥ −eps.
pub fn op_leq(a: &Operator, b: &Operator, eps: f64) -> Result<bool> {
    Ok(lambda_min(&(b - a))? >= -eps)
}

/// Spectral projection of a self-adjoint operator onto the interval (lo, hi].
///
/// Eigenvalues within `EPS_BOUNDARY·scale` of `lo` count as ≤ lo and are
/// excluded; eigenvalues within the same distance above `hi` are included.
/// Use `f64::INFINITY` for an unbounded upper end.
pub fn spectral_projection(x: &Operator, lo: f64, hi: f64) -> Result<Projection> {
    let eig = hermitian_eigen(x)?;
    Ok(projection_from_spectrum(&eig, lo, hi))
}

pub(crate) fn projection_from_spectrum(eig: &SpectralData, lo: f64, hi: f64) -> Projection {
    let scale = eig
        .eigenvalues
        .iter()
        .fold(1.0_f64, |m, &v| m.max(v.abs()));
    let tol = EPS_BOUNDARY * scale;
    let d = eig.eigenvalues.len();
    let mut mat = CMatrix::zeros(d, d);
    for (i, &v) in eig.eigenvalues.iter().enumerate() {
        if v > lo + tol && v <= hi + tol {
            let col = eig.vectors.column(i);
            mat += col * col.adjoint();
        }
    }
    Projection::new_unchecked(Operator { mat, algebra: eig.algebra })
}

/// Right support projection r(x): the projection onto range(x*) = (ker x)^⊥,
/// with singular values below `EPS_RANK·s_max` treated as zero. Satisfies
/// x·r(x) = x.
pub fn right_support(x: &Operator) -> Projection {
    support_from_svd(x, false)
}

/// Left support projection l(x): projection onto range(x); l(x)·x = x.
pub fn left_support(x: &Operator) -> Projection {
    support_from_svd(x, true)
}

fn support_from_svd(x: &Operator, left: bool) -> Projection {
    let d = x.dim();
    let svd = jacobi_svd(&x.mat);
    let s_max = svd.singular_values.first().copied().unwrap_or(0.0);
    let cutoff = EPS_RANK * s_max.max(1.0);
    let mut mat = CMatrix::zeros(d, d);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            let col = if left { svd.u.column(i) } else { svd.v.column(i) };
            mat += col * col.adjoint();
        }
    }
    Projection::new_unchecked(Operator { mat, algebra: x.algebra })
}

/// Meet P ∧ Q: the projection onto range(P) ∩ range(Q), computed as the
/// common null space of the stacked complements [(1−P); (1−Q)].
pub fn proj_meet(p: &Projection, q: &Projection) -> Projection {
    meet_all(&[p, q])
}

/// Meet of finitely many projections in one shot: v belongs to the
/// intersection iff every complement kills it, so the intersection is the
/// null space of the complements stacked vertically.
pub fn meet_all(projections: &[&Projection]) -> Projection {
    assert!(!projections.is_empty(), "meet of an empty family is the identity; pass it explicitly");
    let algebra = projections[0].op.algebra();
    let d = algebra.dim();
    for p in projections {
        assert_eq!(p.op.algebra(), algebra, "meet across different algebras");
    }
    let meet = meet_matrices(
        &projections.iter().map(|p| p.op.matrix().clone()).collect::<Vec<_>>(),
        d,
    );
    Projection::new_unchecked(Operator { mat: meet, algebra })
}

pub(crate) fn meet_matrices(projections: &[CMatrix], d: usize) -> CMatrix {
    let k = projections.len();
    let mut stacked = CMatrix::zeros(k * d, d);
    let id = CMatrix::identity(d, d);
    for (idx, p) in projections.iter().enumerate() {
        let compl = &id - p;
        stacked.view_mut((idx * d, 0), (d, d)).copy_from(&compl);
    }
    // The stack reports all d right singular vectors, so the null directions
    // are always available in v.
    let svd = jacobi_svd(&stacked);
    let s_max = svd.singular_values.first().copied().unwrap_or(0.0);
    let cutoff = EPS_RANK * s_max.max(1.0);
    let mut meet = CMatrix::zeros(d, d);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s <= cutoff {
            let col = svd.v.column(i);
            meet += col * col.adjoint();
        }
    }
    meet
}

/// Positive square root via spectral calculus; eigenvalues that are slightly
/// negative from roundoff are clamped to zero.
pub fn psd_sqrt(x: &Operator) -> Result<Operator> {
    let eig = hermitian_eigen(x)?;
    Ok(eig.apply(|v| if v > 0.0 { v.sqrt() } else { 0.0 }))
}

pub(crate) fn sup_norm_matrix(mat: &CMatrix) -> f64 {
    crate::svd::operator_norm(mat)
}

/// Wire format for operators: row-major [re, im] pairs.
#[derive(Serialize, Deserialize)]
struct OperatorJson {
    dim: usize,
    trace: TraceKind,
    entries: Vec<[f64; 2]>,
}

impl Serialize for Operator {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let entries = self
            .mat
            .row_iter()
            .flat_map(|row| row.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
            .collect();
        OperatorJson { dim: self.dim(), trace: self.algebra.trace_kind(), entries }
            .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Operator {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let json = OperatorJson::deserialize(deserializer)?;
        if json.entries.len() != json.dim * json.dim {
            return Err(serde::de::Error::custom(format!(
                "expected {} entries for dim {}, got {}",
                json.dim * json.dim,
                json.dim,
                json.entries.len()
            )));
        }
        let mat = CMatrix::from_row_iterator(
            json.dim,
            json.dim,
            json.entries.iter().map(|&[re, im]| Complex64::new(re, im)),
        );
        let algebra = match json.trace {
            TraceKind::Normalized => TracialAlgebra::normalized(json.dim),
            TraceKind::Unnormalized => TracialAlgebra::unnormalized(json.dim),
        };
        Ok(Operator { mat, algebra })
    }
}
