//! Hüsler–Reiss graphical models: parameterizations, modular set functions,
//! extremal conditional independence, and elliptope geometry.
//!
//! The model parameter is a variogram matrix `G` (symmetric, zero diagonal,
//! strictly conditionally negative definite off the all-ones direction). Its
//! bordered Cayley–Menger matrix `[[-G/2, 1], [1^T, 0]]` inverts to the
//! blocks `(Theta, p, sigma^2)`: a precision matrix that reads as a signed
//! graph Laplacian, a barycentric vector, and a squared-circumradius
//! invariant.
//!
//! On top of that layer the crate provides:
//!
//! - the set functions `m^HR` and `sigma^2` on margins, each with its
//!   equivalent representations ([`setfn`]);
//! - decision procedures for extremal conditional independence through
//!   modularity of those functions, plus Markov-graph extraction and
//!   global-Markov verification ([`ci`]);
//! - the geometry of the bounded parameter set `sigma^2 <= 1` and its
//!   relation to rank-deficient correlation matrices ([`elliptope`]);
//! - deterministic instance generators ([`gen`]).

pub mod ci;
pub mod elliptope;
pub mod gen;
pub mod graph;
pub mod index_set;
pub mod linalg;
pub mod model;
pub mod quad;
pub mod setfn;
pub mod tol;

pub use ci::{
    check_global_markov, ci_general_mhr, ci_sigma2, ci_singleton, is_emtp2, pairwise_markov_graph,
    sigma2_gap_polynomial, Applicability, CiError, CiMethod, CiStatement, CiVerdict, Emtp2Check,
    GlobalMarkovReport, MarkovViolation, Ternary,
};
pub use elliptope::{
    classify_correlation, evaluate_f3_point, in_hr_elliptope, map_gamma_of_r, map_r_of_gamma,
    sample_boundary_excluded, sample_boundary_star, sample_f3, CorrelationMatrix,
    ElliptopeClassification, ElliptopeError, ElliptopePoint, ElliptopeTag, F3Check, F3Filters,
};
pub use graph::{GraphError, MarkovGraph};
pub use index_set::IndexSet;
pub use linalg::{BorderedMatrix, Eigen, MatrixError, SymMatrix};
pub use model::{
    cayley_menger, conditional_gaussian, exponent_density, exponent_density_via_precision,
    fiedler_bapat, marginal_block_via_schur, validate_variogram, variogram_from_precision,
    ConditionalGaussian, DensityEvaluator, FiedlerBapatBlock, ModelError,
    PrecisionDensityEvaluator, ValidationError, Variogram,
};
pub use setfn::{
    evaluate_tagged, m_hr, m_hr_integral, m_hr_minor_det, m_hr_rep, modularity_gap, sigma2,
    sigma2_rep, sigma2_theta_sum, MhrRep, ModularityReport, ModularityVerdict, SetFnError,
    SetFunctionKind, SetFunctionValue, Sigma2Rep,
};
pub use tol::{Tol, ZeroClass, DEFAULT_REL_TOL};
