//! The Hüsler–Reiss model layer: variogram validation, Cayley–Menger
//! construction, Fiedler–Bapat blocks for every margin, precision/variogram
//! round trips, exponent-measure density and conditional Gaussian parameters.
//!
//! A variogram `G` is a symmetric zero-diagonal matrix that is strictly
//! conditionally negative definite on the hyperplane orthogonal to the
//! all-ones vector. Its Cayley–Menger matrix is the bordered matrix
//! `[[-G/2, 1], [1^T, 0]]`, whose inverse carries the precision matrix
//! `Theta`, the barycentric vector `p` and the scalar `sigma^2` as blocks.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::index_set::IndexSet;
use crate::linalg::{
    orthonormal_complement, solve_sym, symmetrize, BorderedMatrix, MatrixError, SymMatrix,
};
use crate::tol::Tol;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValidationError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("variogram dimension must be at least 2, got {dim}")]
    DimensionTooSmall { dim: usize },
    #[error("matrix is not symmetric (max asymmetry {max_asym:e})")]
    NotSymmetric { max_asym: f64 },
    #[error("diagonal entry {index} is {value:e}, expected 0")]
    NonzeroDiagonal { index: usize, value: f64 },
    #[error("not strictly conditionally negative definite (projected eigenvalue {eigenvalue:e})")]
    NotCnd { eigenvalue: f64 },
    #[error("off-diagonal entry ({i},{j}) is {value:e}, expected strictly positive")]
    NonPositiveOffDiagonal { i: usize, j: usize, value: f64 },
    #[error("precision kernel is not exactly span(1): {reason}")]
    BadKernel { reason: String },
    #[error("precision/variogram round trip failed (residual {residual:e})")]
    RoundTripFailure { residual: f64 },
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid index sets: {reason}")]
    BadIndexSets { reason: String },
    #[error("Cayley-Menger matrix on margin {margin} is numerically singular")]
    SingularCm { margin: String },
    #[error("eliminated block is numerically singular")]
    SingularBlock,
    #[error("independent computation routes disagree (residual {residual:e})")]
    RouteDisagreement { residual: f64 },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// A certified variogram: symmetric, zero diagonal, strictly conditionally
/// negative definite on the complement of span(1).
#[derive(Debug, Clone, PartialEq)]
pub struct Variogram {
    g: SymMatrix,
}

impl Variogram {
    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn gamma(&self) -> &SymMatrix {
        &self.g
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.g.at(i, j)
    }

    /// Principal submatrix as a variogram; strict conditional negative
    /// definiteness is inherited, so no revalidation is needed.
    pub fn restrict(&self, set: &IndexSet) -> Result<Variogram, ModelError> {
        if set.len() < 2 {
            return Err(ModelError::BadIndexSets {
                reason: format!("margin {set} too small for a variogram"),
            });
        }
        Ok(Variogram {
            g: self.g.principal(set)?,
        })
    }

    /// Scale by `t > 0`; positive scaling preserves validity.
    pub fn scale(&self, t: f64) -> Variogram {
        assert!(t > 0.0, "variogram scaling factor must be positive");
        Variogram {
            g: SymMatrix::from_upper(self.g.as_dmatrix() * t).expect("same shape"),
        }
    }
}

/// Validate a raw matrix as a variogram.
///
/// Accepts iff the matrix is square of dimension >= 2, symmetric and
/// zero-diagonal within tolerance, and all eigenvalues of `P^T (-G/2) P` are
/// strictly positive, where `P` is an orthonormal basis of the hyperplane
/// orthogonal to the all-ones vector.
pub fn validate_variogram(m: &DMatrix<f64>, tol: Tol) -> Result<Variogram, ValidationError> {
    if m.nrows() != m.ncols() {
        return Err(ValidationError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let d = m.nrows();
    if d < 2 {
        return Err(ValidationError::DimensionTooSmall { dim: d });
    }
    let scale = m.amax().max(1.0);
    let mut max_asym = 0.0f64;
    for i in 0..d {
        for j in 0..i {
            max_asym = max_asym.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if max_asym > tol.rel * scale {
        return Err(ValidationError::NotSymmetric { max_asym });
    }
    for i in 0..d {
        if m[(i, i)].abs() > tol.rel * scale {
            return Err(ValidationError::NonzeroDiagonal {
                index: i,
                value: m[(i, i)],
            });
        }
    }
    // canonical copy: mirrored upper triangle, exact zero diagonal
    let mut g = SymMatrix::from_upper(m.clone())
        .expect("square checked")
        .into_dmatrix();
    for i in 0..d {
        g[(i, i)] = 0.0;
    }

    let p = orthonormal_complement(&DVector::from_element(d, 1.0));
    let projected = p.transpose() * (&g * -0.5) * &p;
    let eig = SymMatrix::from_upper(symmetrize(projected))
        .expect("square")
        .eigen()
        .map_err(|_| ValidationError::NotCnd {
            eigenvalue: f64::NAN,
        })?;
    if eig.min() <= tol.rel * scale {
        return Err(ValidationError::NotCnd {
            eigenvalue: eig.min(),
        });
    }
    // implied by strict CND with zero diagonal; asserted on input
    for i in 0..d {
        for j in (i + 1)..d {
            if g[(i, j)] <= 0.0 {
                return Err(ValidationError::NonPositiveOffDiagonal {
                    i,
                    j,
                    value: g[(i, j)],
                });
            }
        }
    }
    Ok(Variogram {
        g: SymMatrix::from_upper(g).expect("square"),
    })
}

/// Cayley–Menger matrix of a margin: `[[-G_II/2, 1], [1^T, 0]]`.
pub fn cayley_menger(v: &Variogram, set: &IndexSet) -> Result<BorderedMatrix, ModelError> {
    if set.is_empty() {
        return Err(ModelError::BadIndexSets {
            reason: "empty margin".into(),
        });
    }
    let sub = v.g.rect(set, set)?;
    let inner = SymMatrix::from_upper(sub * -0.5).expect("square submatrix");
    Ok(BorderedMatrix::new(
        inner,
        DVector::from_element(set.len(), 1.0),
        0.0,
    ))
}

/// The inverse Cayley–Menger blocks `(Theta, p, sigma^2)` of a margin.
#[derive(Debug, Clone)]
pub struct FiedlerBapatBlock {
    pub margin: IndexSet,
    pub theta: SymMatrix,
    pub p: DVector<f64>,
    pub sigma2: f64,
}

impl FiedlerBapatBlock {
    /// Entry of `Theta` addressed by original model indices.
    pub fn theta_at(&self, i: usize, j: usize) -> f64 {
        let pi = self.margin.position(i).expect("index in margin");
        let pj = self.margin.position(j).expect("index in margin");
        self.theta.at(pi, pj)
    }

    /// Entry of `p` addressed by an original model index.
    pub fn p_at(&self, i: usize) -> f64 {
        self.p[self.margin.position(i).expect("index in margin")]
    }
}

/// Compute the Fiedler–Bapat block of a margin by inverting its
/// Cayley–Menger matrix, cross-checked against the explicit expressions
/// `p = G^{-1}1 / (1^T G^{-1} 1)` and `sigma^2 = 1/(2 1^T G^{-1} 1)`.
///
/// Singleton margins return the convention block `([0], [1], 0)`.
pub fn fiedler_bapat(v: &Variogram, set: &IndexSet) -> Result<FiedlerBapatBlock, ModelError> {
    if set.is_empty() {
        return Err(ModelError::BadIndexSets {
            reason: "empty margin".into(),
        });
    }
    if !set.is_within(v.dim()) {
        return Err(ModelError::BadIndexSets {
            reason: format!("margin {set} out of range for dimension {}", v.dim()),
        });
    }
    let m = set.len();
    if m == 1 {
        return Ok(FiedlerBapatBlock {
            margin: set.clone(),
            theta: SymMatrix::zeros(1),
            p: DVector::from_element(1, 1.0),
            sigma2: 0.0,
        });
    }
    let cm = cayley_menger(v, set)?;
    let inv = cm.try_inverse().ok_or_else(|| ModelError::SingularCm {
        margin: set.to_string(),
    })?;
    let theta = SymMatrix::from_upper(symmetrize(inv.view((0, 0), (m, m)).into_owned()))
        .expect("square block");
    let p = inv.view((0, m), (m, 1)).column(0).into_owned();
    let sigma2 = inv[(m, m)];

    // independent route through the plain inverse of G_II
    let gsub = v.g.rect(set, set)?;
    let ones = DMatrix::from_element(m, 1, 1.0);
    let x = solve_sym(&gsub, &ones).ok_or_else(|| ModelError::SingularCm {
        margin: set.to_string(),
    })?;
    let s: f64 = x.iter().sum();
    let sigma2_alt = 0.5 / s;
    let p_alt = x.column(0) / s;
    let resid =
        (sigma2 - sigma2_alt).abs().max((&p - p_alt).amax()) / sigma2.abs().max(p.amax()).max(1.0);
    // both routes lose digits together on ill-conditioned margins; the
    // agreement bound scales with the conditioning estimate
    let cond_est = cm.inner.amax().max(1.0) * inv.amax();
    let bound = 1e-8f64.max(1e3 * f64::EPSILON * cond_est);
    if !resid.is_finite() || resid > bound {
        return Err(ModelError::RouteDisagreement { residual: resid });
    }
    Ok(FiedlerBapatBlock {
        margin: set.clone(),
        theta,
        p,
        sigma2,
    })
}

/// Marginalize a Fiedler–Bapat block onto `I` by eliminating the complement
/// within its margin:
/// `Theta(I) = Theta_II - Theta_IE Theta_EE^{-1} Theta_EI`,
/// `p(I) = p_I - Theta_IE Theta_EE^{-1} p_E`,
/// `sigma^2(I) = sigma^2 - p_E^T Theta_EE^{-1} p_E`.
pub fn marginal_block_via_schur(
    full: &FiedlerBapatBlock,
    set: &IndexSet,
) -> Result<FiedlerBapatBlock, ModelError> {
    if set.is_empty() {
        return Err(ModelError::BadIndexSets {
            reason: "empty margin".into(),
        });
    }
    if set.iter().any(|i| !full.margin.contains(i)) {
        return Err(ModelError::BadIndexSets {
            reason: format!("{set} is not contained in margin {}", full.margin),
        });
    }
    if set.len() == full.margin.len() {
        return Err(ModelError::BadIndexSets {
            reason: "identity elimination: subset equals the block margin".into(),
        });
    }
    // positions within the block's local ordering
    let keep: Vec<usize> = set
        .iter()
        .map(|i| full.margin.position(i).unwrap())
        .collect();
    let elim: Vec<usize> = (0..full.margin.len())
        .filter(|q| !keep.contains(q))
        .collect();
    let keep_set = IndexSet::new(keep);
    let elim_set = IndexSet::new(elim);

    let theta_ke = full.theta.rect(&keep_set, &elim_set)?;
    let theta_ee = full.theta.rect(&elim_set, &elim_set)?;
    let p_e = DVector::from_iterator(elim_set.len(), elim_set.iter().map(|q| full.p[q]));
    let p_k = DVector::from_iterator(keep_set.len(), keep_set.iter().map(|q| full.p[q]));

    let rhs = {
        let mut m = DMatrix::zeros(elim_set.len(), keep_set.len() + 1);
        m.view_mut((0, 0), (elim_set.len(), keep_set.len()))
            .copy_from(&theta_ke.transpose());
        m.view_mut((0, keep_set.len()), (elim_set.len(), 1))
            .copy_from(&p_e);
        m
    };
    let solved = solve_sym(&theta_ee, &rhs).ok_or(ModelError::SingularBlock)?;
    let x_theta = solved
        .view((0, 0), (elim_set.len(), keep_set.len()))
        .into_owned();
    let x_p = solved
        .view((0, keep_set.len()), (elim_set.len(), 1))
        .into_owned();

    let theta_kk = full.theta.rect(&keep_set, &keep_set)?;
    let theta_new =
        SymMatrix::from_upper(symmetrize(&theta_kk - &theta_ke * &x_theta)).expect("square");
    let p_new = p_k - &theta_ke * x_p.column(0);
    let sigma2_new = full.sigma2 - (p_e.transpose() * x_p.column(0))[0];

    Ok(FiedlerBapatBlock {
        margin: set.clone(),
        theta: theta_new,
        p: p_new,
        sigma2: sigma2_new,
    })
}

/// Recover the unique variogram whose full-margin precision block equals
/// `theta`, via the spectral pseudoinverse
/// `G_ij = T+_ii + T+_jj - 2 T+_ij`, certified by the round trip.
pub fn variogram_from_precision(theta: &SymMatrix, tol: Tol) -> Result<Variogram, ValidationError> {
    let d = theta.dim();
    if d < 2 {
        return Err(ValidationError::DimensionTooSmall { dim: d });
    }
    let scale = theta.amax().max(1.0);
    // kernel must be exactly span(1): zero row sums and a one-dimensional
    // numerical null space
    let row_sums = theta.as_dmatrix() * DVector::from_element(d, 1.0);
    if row_sums.amax() > tol.rel * scale {
        return Err(ValidationError::BadKernel {
            reason: format!("row sums are not zero (max {:e})", row_sums.amax()),
        });
    }
    let eig = theta.eigen().map_err(|e| ValidationError::BadKernel {
        reason: e.to_string(),
    })?;
    let thr = tol.rel * eig.spectral_radius().max(1.0);
    if eig.min() < -thr {
        return Err(ValidationError::BadKernel {
            reason: format!("negative eigenvalue {:e}", eig.min()),
        });
    }
    let near_zero = eig.values.iter().filter(|l| l.abs() <= thr).count();
    if near_zero != 1 {
        return Err(ValidationError::BadKernel {
            reason: format!("kernel dimension {near_zero}, expected 1 (disconnected model?)"),
        });
    }

    // spectral pseudoinverse over the nonzero part
    let mut pinv = DMatrix::zeros(d, d);
    for k in 0..d {
        let l = eig.values[k];
        if l.abs() > thr {
            let v = eig.vectors.column(k);
            pinv += v * v.transpose() / l;
        }
    }
    let gamma = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            0.0
        } else {
            pinv[(i, i)] + pinv[(j, j)] - 2.0 * pinv[(i, j)]
        }
    });
    let v = validate_variogram(&gamma, tol)?;
    let block = fiedler_bapat(&v, &IndexSet::full(d)).map_err(|e| ValidationError::BadKernel {
        reason: e.to_string(),
    })?;
    let residual = (block.theta.as_dmatrix() - theta.as_dmatrix()).amax() / scale;
    if residual > 1e-8 {
        return Err(ValidationError::RoundTripFailure { residual });
    }
    Ok(v)
}

/// Exponent-measure density evaluator in the Cayley–Menger form:
/// `lambda(y) = sqrt(-(2 pi)^{1-d} / det CM(G)) * exp(-q(y)/2)` with
/// `q(y) = (y, 1)^T CM(G)^{-1} (y, 1)`.
#[derive(Debug, Clone)]
pub struct DensityEvaluator {
    dim: usize,
    cm_inv: DMatrix<f64>,
    norm_const: f64,
}

impl DensityEvaluator {
    pub fn new(v: &Variogram) -> Result<Self, ModelError> {
        let d = v.dim();
        let full = IndexSet::full(d);
        let cm = cayley_menger(v, &full)?;
        let det = cm.det();
        let cm_inv = cm.try_inverse().ok_or_else(|| ModelError::SingularCm {
            margin: full.to_string(),
        })?;
        let ratio = -(2.0 * std::f64::consts::PI).powi(1 - d as i32) / det;
        if ratio <= 0.0 {
            return Err(ModelError::SingularCm {
                margin: full.to_string(),
            });
        }
        Ok(Self {
            dim: d,
            cm_inv,
            norm_const: ratio.sqrt(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        assert_eq!(y.len(), self.dim, "point dimension mismatch");
        let n = self.dim + 1;
        let mut q = 0.0;
        for r in 0..n {
            let yr = if r < self.dim { y[r] } else { 1.0 };
            let mut row = 0.0;
            for (c, yc) in y.iter().copied().chain(std::iter::once(1.0)).enumerate() {
                row += self.cm_inv[(r, c)] * yc;
            }
            q += yr * row;
        }
        self.norm_const * (-0.5 * q).exp()
    }
}

/// Exponent-measure density evaluator in the precision form:
/// `lambda(y) = sqrt((2 pi)^{1-d} det Theta_{\k,\k}) * exp(-q(y)/2)` with
/// `q(y) = y^T Theta y + 2 p^T y + sigma^2`, for any `k` in the margin.
#[derive(Debug, Clone)]
pub struct PrecisionDensityEvaluator {
    block: FiedlerBapatBlock,
    norm_const: f64,
}

impl PrecisionDensityEvaluator {
    pub fn new(v: &Variogram, k: usize) -> Result<Self, ModelError> {
        let d = v.dim();
        if k >= d {
            return Err(ModelError::BadIndexSets {
                reason: format!("anchor {k} out of range"),
            });
        }
        let block = fiedler_bapat(v, &IndexSet::full(d))?;
        let minor_set = IndexSet::singleton(k).complement(d);
        let minor = block.theta.principal(&minor_set)?;
        let det = minor.det();
        let c2 = (2.0 * std::f64::consts::PI).powi(1 - d as i32) * det;
        if c2 <= 0.0 {
            return Err(ModelError::SingularCm {
                margin: minor_set.to_string(),
            });
        }
        Ok(Self {
            block,
            norm_const: c2.sqrt(),
        })
    }

    pub fn eval(&self, y: &[f64]) -> f64 {
        let d = self.block.margin.len();
        assert_eq!(y.len(), d, "point dimension mismatch");
        let mut q = self.block.sigma2;
        for i in 0..d {
            q += 2.0 * self.block.p[i] * y[i];
            for j in 0..d {
                q += y[i] * self.block.theta.at(i, j) * y[j];
            }
        }
        self.norm_const * (-0.5 * q).exp()
    }
}

/// Evaluate the exponent-measure density at `y` (Cayley–Menger form).
pub fn exponent_density(v: &Variogram, y: &DVector<f64>) -> Result<f64, ModelError> {
    Ok(DensityEvaluator::new(v)?.eval(y.as_slice()))
}

/// Evaluate the exponent-measure density at `y` in the precision form with
/// anchor `k`; equal to the Cayley–Menger form for every `k`.
pub fn exponent_density_via_precision(
    v: &Variogram,
    y: &DVector<f64>,
    k: usize,
) -> Result<f64, ModelError> {
    Ok(PrecisionDensityEvaluator::new(v, k)?.eval(y.as_slice()))
}

/// Gaussian parameters of the conditional exponent-measure density
/// `lambda(y_A | y_C)`: covariance and the affine map `(y_C, 1) -> mu*`.
#[derive(Debug, Clone)]
pub struct ConditionalGaussian {
    pub target: IndexSet,
    pub given: IndexSet,
    pub sigma_star: SymMatrix,
    /// `|A| x (|C|+1)` matrix; the mean is `mean_coeff * (y_C, 1)`.
    pub mean_coeff: DMatrix<f64>,
}

/// Conditional Gaussian parameters:
/// `Sigma* = -G_AA/2 - [-G_AC/2, 1] CM(G_CC)^{-1} [-G_CA/2; 1^T]` and
/// `mean_coeff = [-G_AC/2, 1] CM(G_CC)^{-1}`.
pub fn conditional_gaussian(
    v: &Variogram,
    target: &IndexSet,
    given: &IndexSet,
) -> Result<ConditionalGaussian, ModelError> {
    if target.is_empty() || given.is_empty() {
        return Err(ModelError::BadIndexSets {
            reason: "A and C must be nonempty".into(),
        });
    }
    if !target.is_disjoint(given) {
        return Err(ModelError::BadIndexSets {
            reason: "A and C must be disjoint".into(),
        });
    }
    if !target.union(given).is_within(v.dim()) {
        return Err(ModelError::BadIndexSets {
            reason: format!("indices out of range for dimension {}", v.dim()),
        });
    }
    let na = target.len();
    let nc = given.len();
    let cm_c = cayley_menger(v, given)?;
    let cm_inv = cm_c.try_inverse().ok_or_else(|| ModelError::SingularCm {
        margin: given.to_string(),
    })?;
    // bordered coupling block [-G_AC/2, 1]
    let g_ac = v.g.rect(target, given)?;
    let mut b = DMatrix::zeros(na, nc + 1);
    b.view_mut((0, 0), (na, nc)).copy_from(&(g_ac * -0.5));
    b.view_mut((0, nc), (na, 1)).fill(1.0);

    let mean_coeff = &b * &cm_inv;
    let g_aa = v.g.rect(target, target)?;
    let sigma_star = symmetrize(g_aa * -0.5 - &mean_coeff * b.transpose());
    let sigma_star = SymMatrix::from_upper(sigma_star).expect("square");
    let eig = sigma_star.eigen()?;
    if eig.min() <= 0.0 {
        return Err(ModelError::RouteDisagreement {
            residual: eig.min(),
        });
    }
    Ok(ConditionalGaussian {
        target: target.clone(),
        given: given.clone(),
        sigma_star,
        mean_coeff,
    })
}
