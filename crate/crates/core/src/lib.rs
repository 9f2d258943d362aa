//! A numerical laboratory for noncommutative martingale theory on
//! finite-dimensional tracial matrix algebras.
//!
//! The crate builds, from the ground up:
//!
//! - tracial *-algebra arithmetic with explicit tolerance semantics
//!   ([`algebra`]): Schatten and weak-L¹ norms, spectral projections,
//!   support projections, and meets in the projection lattice;
//! - filtrations of subalgebras with trace-preserving conditional
//!   expectations, martingales, and independence structures
//!   ([`filtration`]);
//! - square functions, conditioned square functions, Hardy-space and BMO
//!   norms ([`norms`]);
//! - Cuculescu stopping projections, dyadic families, and spectral layers
//!   ([`cuculescu`]);
//! - the constructive three-way decomposition of martingale differences
//!   and the two-way decomposition for regular martingales ([`decompose`]);
//! - ensemble generation and inequality verification suites with explicit
//!   numerical constants ([`harness`]).
//!
//! Everything is deterministic given a seed, pure, and immutable after
//! construction; parallelism is the caller's concern.

pub mod algebra;
pub mod cuculescu;
pub mod decompose;
pub mod filtration;
pub mod harness;
pub mod norms;
pub mod svd;

pub use algebra::{
    hermitian_eigen, lambda_min, left_support, meet_all, op_leq, proj_meet, psd_sqrt,
    right_support, spectral_projection, CMatrix, Operator, Projection, SingularValueFunction,
    SpectralData, TraceKind, TracialAlgebra,
};
pub use cuculescu::{
    compression_energy, cuculescu, dyadic_families, k_max_index, layers, layers_from, supports,
    CompressionEnergy, CuculescuFamily, DyadicFamilies, SpectralLayers, SupportFamily,
};
pub use decompose::{
    abc_decompose, abc_decompose_with, abc_l2_report, abc_weak_report, positive_split,
    regular_weak_report, regular_weak_threshold, square_expansion_residual,
    to_martingale_differences, yz_decompose, yz_decompose_with, AdaptedTriple, MartingalePair,
    PositiveSplit, TripleL2Report, TripleWeakReport,
};
pub use filtration::{
    independent_sequence, random_martingale, Filtration, FiltrationSpec, IndependentSequence,
    Martingale, RandomMode,
};
pub use harness::{
    estimate_constants, norm_report_csv, run_bmo_suite, run_khintchine_scenario, run_regular_suite,
    run_weak_type_suite, trial_seed, worked_example, Check, ConstantsReport, ConstantsRow,
    EnsembleMode, EnsembleSpec, ExcludedTrial, FiltrationFamily, KhintchineReport, SlopeFit,
    SuiteResult,
};
pub use norms::{
    bmo_norms, bmo_square_bound_excess, conditioned_col_square, conditioned_row_square,
    diag_embed_weak_l1, h_diag_norm, h_norm, hardy_norm, mean_oscillation_identity_residual,
    s_col, s_row, sigma_col, sigma_row, sigma_symmetrized_dominance, BmoNorms, LevelZero,
    NormEstimate, NormReport,
};

/// Errors for the whole crate: structural problems (shape mismatches,
/// malformed filtrations) and domain violations (preconditions of an
/// operation not met by the input).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operator is not self-adjoint (residual {residual:.3e})")]
    NotSelfAdjoint { residual: f64 },
    #[error("operator is not positive (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },
    #[error("operator is not a projection (residual {residual:.3e})")]
    NotProjection { residual: f64 },
    #[error("invalid L^p exponent p = {p}; need p ≥ 1")]
    InvalidExponent { p: f64 },
    #[error("filtration level {level} out of range 1..={max}")]
    LevelOutOfRange { level: usize, max: usize },
    #[error("martingale is not normalized: τ(x_N) = {trace}, need 1")]
    NotNormalized { trace: f64 },
    #[error("martingale is not {k}-regular at level {level} (slack {slack:.3e})")]
    NotRegular { k: f64, level: usize, slack: f64 },
    #[error("invalid filtration: {0}")]
    InvalidFiltration(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
