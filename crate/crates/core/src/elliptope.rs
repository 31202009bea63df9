//! Geometry of variogram space: membership in the bounded Hüsler–Reiss
//! elliptope (valid variograms with `sigma^2 <= 1`), the maps between
//! variograms and rank-deficient correlation matrices, classification of
//! correlation matrices relative to the usable boundary of the Gaussian
//! elliptope, and deterministic point-cloud sampling in three dimensions.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::ci::is_emtp2;
use crate::index_set::IndexSet;
use crate::linalg::SymMatrix;
use crate::model::{fiedler_bapat, validate_variogram, ModelError, ValidationError, Variogram};
use crate::tol::Tol;

/// Absolute half-width of the `sigma^2 = 1` boundary band used for tagging.
pub const BOUNDARY_BAND: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ElliptopeError {
    #[error("matrix is not a correlation matrix: {reason}")]
    BadShape { reason: String },
    #[error("correlation matrix has rank {rank}, expected {expected}")]
    BadRank { rank: usize, expected: usize },
    #[error("correlation kernel is orthogonal to the all-ones vector")]
    KernelOrthogonalToOnes,
    #[error("map postcondition failed: {reason}")]
    MapAssertion { reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Symmetric matrix with exact unit diagonal. Positive semidefiniteness is
/// not required at construction; [`classify_correlation`] decides it.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    r: SymMatrix,
}

impl CorrelationMatrix {
    pub fn new(m: DMatrix<f64>, tol: Tol) -> Result<Self, ElliptopeError> {
        if m.nrows() != m.ncols() || m.nrows() < 2 {
            return Err(ElliptopeError::BadShape {
                reason: format!("shape {}x{}", m.nrows(), m.ncols()),
            });
        }
        for i in 0..m.nrows() {
            if (m[(i, i)] - 1.0).abs() > tol.rel {
                return Err(ElliptopeError::BadShape {
                    reason: format!("diagonal entry {i} is {}", m[(i, i)]),
                });
            }
        }
        let mut sym = SymMatrix::from_symmetric(m, tol.rel)
            .map_err(|e| ElliptopeError::BadShape {
                reason: e.to_string(),
            })?
            .into_dmatrix();
        for i in 0..sym.nrows() {
            sym[(i, i)] = 1.0;
        }
        Ok(Self {
            r: SymMatrix::from_upper(sym).expect("square"),
        })
    }

    pub fn dim(&self) -> usize {
        self.r.dim()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.r.at(i, j)
    }

    pub fn as_sym(&self) -> &SymMatrix {
        &self.r
    }
}

/// Where a correlation matrix sits relative to the Gaussian elliptope and
/// its usable boundary part.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElliptopeTag {
    /// Positive definite: interior of the elliptope.
    InteriorE,
    /// Rank `d-1` with kernel not orthogonal to the all-ones vector.
    BoundaryStar,
    /// Boundary points that do not correspond to variograms: rank below
    /// `d-1`, or kernel orthogonal to the all-ones vector.
    BoundaryExcluded,
    /// Not positive semidefinite.
    Outside,
}

#[derive(Debug, Clone)]
pub struct ElliptopeClassification {
    pub tag: ElliptopeTag,
    pub rank: usize,
    pub min_eigenvalue: f64,
    pub kernel_vector: Option<DVector<f64>>,
    pub kernel_dot_ones: Option<f64>,
}

/// Classify a correlation matrix by its spectrum.
pub fn classify_correlation(r: &CorrelationMatrix, tol: Tol) -> ElliptopeClassification {
    let d = r.dim();
    let eig =
        r.r.eigen()
            .expect("correlation matrices are small and well-scaled");
    let thr = tol.rel * eig.spectral_radius().max(1.0);
    let min = eig.min();
    if min < -thr {
        return ElliptopeClassification {
            tag: ElliptopeTag::Outside,
            rank: d,
            min_eigenvalue: min,
            kernel_vector: None,
            kernel_dot_ones: None,
        };
    }
    let zeros: Vec<usize> = (0..d).filter(|&k| eig.values[k].abs() <= thr).collect();
    if zeros.is_empty() {
        return ElliptopeClassification {
            tag: ElliptopeTag::InteriorE,
            rank: d,
            min_eigenvalue: min,
            kernel_vector: None,
            kernel_dot_ones: None,
        };
    }
    let rank = d - zeros.len();
    let kernel = eig.vectors.column(zeros[0]).into_owned();
    let kdot = kernel.sum();
    let tag = if rank == d - 1 && kdot.abs() > tol.rel {
        ElliptopeTag::BoundaryStar
    } else {
        ElliptopeTag::BoundaryExcluded
    };
    ElliptopeClassification {
        tag,
        rank,
        min_eigenvalue: min,
        kernel_vector: Some(kernel),
        kernel_dot_ones: Some(kdot),
    }
}

/// Membership check for the Hüsler–Reiss elliptope.
#[derive(Debug, Clone)]
pub struct F3Check {
    pub in_f3: bool,
    /// Defined whenever the input is a valid variogram.
    pub sigma2: Option<f64>,
    /// Inside the absolute band around `sigma^2 = 1`.
    pub boundary: bool,
    /// Why the input is outside, when it is.
    pub reason: Option<String>,
}

/// `true` iff the matrix validates as a variogram and `sigma^2 <= 1 + tol`.
pub fn in_hr_elliptope(m: &DMatrix<f64>, tol: Tol) -> F3Check {
    let v = match validate_variogram(m, tol) {
        Ok(v) => v,
        Err(e) => {
            return F3Check {
                in_f3: false,
                sigma2: None,
                boundary: false,
                reason: Some(e.to_string()),
            }
        }
    };
    let block = match fiedler_bapat(&v, &IndexSet::full(v.dim())) {
        Ok(b) => b,
        Err(e) => {
            return F3Check {
                in_f3: false,
                sigma2: None,
                boundary: false,
                reason: Some(e.to_string()),
            }
        }
    };
    let s2 = block.sigma2;
    let in_f3 = s2 <= 1.0 + tol.rel;
    F3Check {
        in_f3,
        sigma2: Some(s2),
        boundary: (s2 - 1.0).abs() <= BOUNDARY_BAND,
        reason: (!in_f3).then(|| format!("sigma^2 = {s2} exceeds 1")),
    }
}

/// `R(G) = -G/(2 sigma^2) + 1 1^T`: a correlation matrix of rank `d-1` whose
/// kernel is spanned by `p`; the postconditions are asserted spectrally.
pub fn map_r_of_gamma(v: &Variogram) -> Result<CorrelationMatrix, ElliptopeError> {
    let d = v.dim();
    let block = fiedler_bapat(v, &IndexSet::full(d))?;
    let mut m = v.gamma().as_dmatrix() * (-0.5 / block.sigma2);
    for i in 0..d {
        for j in 0..d {
            m[(i, j)] += 1.0;
        }
    }
    let r = CorrelationMatrix::new(m, Tol::default())?;
    let class = classify_correlation(&r, Tol::default());
    if class.tag != ElliptopeTag::BoundaryStar {
        return Err(ElliptopeError::MapAssertion {
            reason: format!("R(G) classified as {:?}, expected BoundaryStar", class.tag),
        });
    }
    let rp = r.r.as_dmatrix() * &block.p;
    if rp.amax() > 1e-8 * block.p.amax().max(1.0) {
        return Err(ElliptopeError::MapAssertion {
            reason: format!("kernel is not span(p): |R p| = {:e}", rp.amax()),
        });
    }
    Ok(r)
}

/// Result of `G(R) = 2(1 1^T - R)` together with its barycentric vector.
#[derive(Debug, Clone)]
pub struct GammaOfR {
    pub variogram: Variogram,
    pub p: DVector<f64>,
}

/// Map a rank-`(d-1)` correlation matrix with usable kernel to the unique
/// variogram with `sigma^2 = 1`; checks rank and kernel preconditions and
/// asserts the postconditions `sigma^2(G(R)) = 1` and `p = w / (w^T 1)`.
pub fn map_gamma_of_r(r: &CorrelationMatrix, tol: Tol) -> Result<GammaOfR, ElliptopeError> {
    let d = r.dim();
    let class = classify_correlation(r, tol);
    match class.tag {
        ElliptopeTag::BoundaryStar => {}
        ElliptopeTag::InteriorE | ElliptopeTag::Outside => {
            return Err(ElliptopeError::BadRank {
                rank: class.rank,
                expected: d - 1,
            })
        }
        ElliptopeTag::BoundaryExcluded => {
            if class.rank < d - 1 {
                return Err(ElliptopeError::BadRank {
                    rank: class.rank,
                    expected: d - 1,
                });
            }
            return Err(ElliptopeError::KernelOrthogonalToOnes);
        }
    }
    let gamma = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            0.0
        } else {
            2.0 * (1.0 - r.at(i, j))
        }
    });
    let v = validate_variogram(&gamma, tol).map_err(|e: ValidationError| {
        ElliptopeError::MapAssertion {
            reason: format!("G(R) failed validation: {e}"),
        }
    })?;
    let block = fiedler_bapat(&v, &IndexSet::full(d))?;
    if (block.sigma2 - 1.0).abs() > 1e-8 {
        return Err(ElliptopeError::MapAssertion {
            reason: format!("sigma^2(G(R)) = {} is not 1", block.sigma2),
        });
    }
    // p = w / (w^T 1) is equivalent to R p = 0 together with p^T 1 = 1,
    // which holds by construction; the kernel-membership form is robust
    // against near-degenerate spectra
    let rp = r.r.as_dmatrix() * &block.p;
    if rp.amax() > 1e-7 * block.p.amax().max(1.0) {
        return Err(ElliptopeError::MapAssertion {
            reason: format!("p is not in the kernel of R: |R p| = {:e}", rp.amax()),
        });
    }
    Ok(GammaOfR {
        variogram: v,
        p: block.p,
    })
}

/// One sampled point of the three-dimensional Hüsler–Reiss elliptope.
#[derive(Debug, Clone)]
pub struct ElliptopePoint {
    /// `(G_12, G_13, G_23)`.
    pub coords: [f64; 3],
    pub in_f3: bool,
    pub sigma2: f64,
    pub emtp2: bool,
    pub p_nonneg: bool,
    /// `(G_12 - G_13 - G_23, G_13 - G_12 - G_23, G_23 - G_12 - G_13)`:
    /// the three conditional-independence plane residuals.
    pub ci_plane_residuals: [f64; 3],
    /// Inside the absolute band around `sigma^2 = 1`.
    pub boundary: bool,
}

/// Filters applied while sampling.
#[derive(Debug, Clone, Copy, Default)]
pub struct F3Filters {
    pub emtp2: bool,
    pub boundary_only: bool,
}

/// Evaluate one coordinate triple; `None` when it is not a member of the
/// elliptope (invalid variogram or `sigma^2 > 1`).
pub fn evaluate_f3_point(coords: [f64; 3], tol: Tol) -> Option<ElliptopePoint> {
    let [g12, g13, g23] = coords;
    let m = DMatrix::from_row_slice(3, 3, &[0.0, g12, g13, g12, 0.0, g23, g13, g23, 0.0]);
    let v = validate_variogram(&m, tol).ok()?;
    let block = fiedler_bapat(&v, &IndexSet::full(3)).ok()?;
    let s2 = block.sigma2;
    if s2 > 1.0 + tol.rel {
        return None;
    }
    let emtp2 = is_emtp2(&block.theta, tol).emtp2;
    let p_nonneg = block.p.iter().all(|&pi| pi >= -tol.rel);
    Some(ElliptopePoint {
        coords,
        in_f3: true,
        sigma2: s2,
        emtp2,
        p_nonneg,
        ci_plane_residuals: [g12 - g13 - g23, g13 - g12 - g23, g23 - g12 - g13],
        boundary: (s2 - 1.0).abs() <= BOUNDARY_BAND,
    })
}

/// Rejection-sample `n` coordinate triples uniformly from `[0, 4]^3` and keep
/// the elliptope members that pass the filters. The box suffices because
/// `sigma^2` is monotone in the margin, so `sigma^2 <= 1` forces every entry
/// `G_ij = 4 sigma^2(ij) <= 4`. Deterministic per `(n, seed)`: draw `i` uses
/// stream `i` of a counter-based generator.
pub fn sample_f3(n: usize, seed: u64, filters: F3Filters, tol: Tol) -> Vec<ElliptopePoint> {
    let mut out = Vec::new();
    for i in 0..n {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let coords = [
            rng.gen_range(0.0..4.0),
            rng.gen_range(0.0..4.0),
            rng.gen_range(0.0..4.0),
        ];
        let Some(pt) = evaluate_f3_point(coords, tol) else {
            continue;
        };
        if filters.emtp2 && !pt.emtp2 {
            continue;
        }
        if filters.boundary_only && !pt.boundary {
            continue;
        }
        out.push(pt);
    }
    out
}

/// A sampled point of the excluded boundary locus (the red lines of the
/// three-dimensional picture): correlation matrices with a repeated unit
/// vector, whose kernel is orthogonal to the all-ones vector.
#[derive(Debug, Clone)]
pub struct ExcludedBoundaryPoint {
    pub r: CorrelationMatrix,
    /// Image coordinates under `2(1 1^T - R)`.
    pub coords: [f64; 3],
}

/// Sample the excluded part of the Gaussian elliptope boundary for `d = 3`.
///
/// Rank-2 correlation matrices are Gram matrices of three unit plane
/// vectors; the kernel is orthogonal to the all-ones vector exactly when two
/// of the vectors coincide, giving one line per index pair.
pub fn sample_boundary_excluded(n: usize, seed: u64) -> Vec<ExcludedBoundaryPoint> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(u64::MAX / 2 + i as u64);
        let pair = rng.gen_range(0..3u8);
        let c: f64 = rng.gen_range(-0.995..0.995);
        let (r12, r13, r23) = match pair {
            0 => (1.0, c, c),
            1 => (c, 1.0, c),
            _ => (c, c, 1.0),
        };
        let m = DMatrix::from_row_slice(3, 3, &[1.0, r12, r13, r12, 1.0, r23, r13, r23, 1.0]);
        let r = CorrelationMatrix::new(m, Tol::default()).expect("unit diagonal by construction");
        let coords = [2.0 * (1.0 - r12), 2.0 * (1.0 - r13), 2.0 * (1.0 - r23)];
        out.push(ExcludedBoundaryPoint { r, coords });
    }
    out
}

/// Sample rank-`(d-1)` correlation matrices on the usable boundary, as Gram
/// matrices of `d` random unit vectors in `d-1` dimensions. Degenerate draws
/// are skipped: not classified BoundaryStar, or with a second-smallest
/// eigenvalue below `1e-6` (too close to a double rank drop for the mapped
/// variogram to carry meaningful accuracy).
pub fn sample_boundary_star(d: usize, n: usize, seed: u64, tol: Tol) -> Vec<CorrelationMatrix> {
    assert!(d >= 2);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let mut vectors = DMatrix::zeros(d - 1, d);
        for col in 0..d {
            loop {
                let v = DVector::from_fn(d - 1, |_, _| {
                    rng.sample::<f64, _>(rand_distr::StandardNormal)
                });
                let norm = v.norm();
                if norm > 1e-8 {
                    vectors.set_column(col, &(v / norm));
                    break;
                }
            }
        }
        let gram = vectors.transpose() * &vectors;
        let Ok(r) = CorrelationMatrix::new(gram, Tol::new(1e-6)) else {
            continue;
        };
        if classify_correlation(&r, tol).tag != ElliptopeTag::BoundaryStar {
            continue;
        }
        let eig = r.r.eigen().expect("small symmetric matrix");
        if eig.values[1] < 1e-6 {
            continue;
        }
        out.push(r);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn equilateral(g: f64) -> DMatrix<f64> {
        DMatrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { g })
    }

    #[test]
    fn membership_scaling() {
        let tol = Tol::default();
        let c = in_hr_elliptope(&equilateral(1.0), tol);
        assert!(c.in_f3);
        assert_relative_eq!(c.sigma2.unwrap(), 1.0 / 3.0, max_relative = 1e-12);

        // sigma^2 scales linearly: all-3 sits exactly on the boundary
        let c = in_hr_elliptope(&equilateral(3.0), tol);
        assert!(c.in_f3);
        assert!(c.boundary);
        assert_relative_eq!(c.sigma2.unwrap(), 1.0, max_relative = 1e-12);

        let c = in_hr_elliptope(&equilateral(4.5), tol);
        assert!(!c.in_f3);
        assert_relative_eq!(c.sigma2.unwrap(), 1.5, max_relative = 1e-12);
        assert!(c.reason.is_some());
    }

    #[test]
    fn map_r_of_gamma_closed_forms() {
        let tol = Tol::default();
        let v = validate_variogram(&equilateral(1.0), tol).unwrap();
        let r = map_r_of_gamma(&v).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 1.0 } else { -0.5 };
                assert_relative_eq!(r.at(i, j), expected, max_relative = 1e-12);
            }
        }
        let v2 =
            validate_variogram(&DMatrix::from_row_slice(2, 2, &[0.0, 1.3, 1.3, 0.0]), tol).unwrap();
        let r2 = map_r_of_gamma(&v2).unwrap();
        assert_relative_eq!(r2.at(0, 1), -1.0, max_relative = 1e-12);
    }

    #[test]
    fn round_trip_normalizes_scale() {
        // G(R(G)) = G / sigma^2(G)
        let tol = Tol::default();
        let v = validate_variogram(&equilateral(1.0), tol).unwrap();
        let r = map_r_of_gamma(&v).unwrap();
        let back = map_gamma_of_r(&r, tol).unwrap();
        let s2 = 1.0 / 3.0;
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_relative_eq!(
                        back.variogram.entry(i, j),
                        v.entry(i, j) / s2,
                        max_relative = 1e-9
                    );
                }
            }
        }
    }

    #[test]
    fn classification_reference_points() {
        let tol = Tol::default();
        let id = CorrelationMatrix::new(DMatrix::identity(3, 3), tol).unwrap();
        assert_eq!(classify_correlation(&id, tol).tag, ElliptopeTag::InteriorE);

        let half = CorrelationMatrix::new(
            DMatrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { -0.5 }),
            tol,
        )
        .unwrap();
        let class = classify_correlation(&half, tol);
        assert_eq!(class.tag, ElliptopeTag::BoundaryStar);
        assert_eq!(class.rank, 2);
        // kernel is span(1): eigenvalues (0, 3/2, 3/2)
        let k = class.kernel_vector.unwrap();
        let normalized = &k / k[0];
        for i in 0..3 {
            assert_relative_eq!(normalized[i], 1.0, max_relative = 1e-9);
        }

        // R12 = 1, others 0: kernel (1,-1,0)/sqrt(2), orthogonal to ones
        let red = CorrelationMatrix::new(
            DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0]),
            tol,
        )
        .unwrap();
        let class = classify_correlation(&red, tol);
        assert_eq!(class.tag, ElliptopeTag::BoundaryExcluded);
        assert!(class.kernel_dot_ones.unwrap().abs() <= 1e-9);

        let outside = CorrelationMatrix::new(
            DMatrix::from_fn(3, 3, |i, j| if i == j { 1.0 } else { -0.9 }),
            tol,
        )
        .unwrap();
        assert_eq!(
            classify_correlation(&outside, tol).tag,
            ElliptopeTag::Outside
        );
    }

    #[test]
    fn map_gamma_of_r_rejects_interior() {
        let tol = Tol::default();
        let id = CorrelationMatrix::new(DMatrix::identity(3, 3), tol).unwrap();
        assert!(matches!(
            map_gamma_of_r(&id, tol),
            Err(ElliptopeError::BadRank { .. })
        ));
        let red = CorrelationMatrix::new(
            DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0]),
            tol,
        )
        .unwrap();
        assert!(matches!(
            map_gamma_of_r(&red, tol),
            Err(ElliptopeError::KernelOrthogonalToOnes)
        ));
    }

    #[test]
    fn reference_sample_points() {
        let tol = Tol::default();
        let p = evaluate_f3_point([1.0, 1.0, 1.0], tol).unwrap();
        assert_relative_eq!(p.sigma2, 1.0 / 3.0, max_relative = 1e-12);
        assert_eq!(p.ci_plane_residuals, [-1.0, -1.0, -1.0]);
        assert!(p.emtp2 && p.p_nonneg);

        // tree-additive path 1-2-3: G13 = G12 + G23 lies on a CI plane
        let p = evaluate_f3_point([1.0, 2.0, 1.0], tol).unwrap();
        assert!(p.ci_plane_residuals[1].abs() < 1e-12);

        assert!(
            evaluate_f3_point([4.0, 4.0, 4.0], tol).is_none(),
            "sigma^2 = 4/3 > 1"
        );
    }

    #[test]
    fn sampling_is_deterministic_and_filters_apply() {
        let tol = Tol::default();
        let a = sample_f3(500, 42, F3Filters::default(), tol);
        let b = sample_f3(500, 42, F3Filters::default(), tol);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.coords, y.coords);
        }
        assert!(!a.is_empty());
        let filtered = sample_f3(
            500,
            42,
            F3Filters {
                emtp2: true,
                boundary_only: false,
            },
            tol,
        );
        assert!(filtered.iter().all(|p| p.emtp2));
        assert!(filtered.len() <= a.len());
    }

    #[test]
    fn excluded_locus_classifies_as_excluded() {
        let tol = Tol::default();
        for pt in sample_boundary_excluded(50, 9) {
            let class = classify_correlation(&pt.r, tol);
            assert_eq!(class.tag, ElliptopeTag::BoundaryExcluded);
        }
    }

    #[test]
    fn boundary_star_samples_map_to_unit_sigma2() {
        let tol = Tol::default();
        let samples = sample_boundary_star(3, 50, 4, tol);
        assert!(samples.len() >= 45, "degenerate draws should be rare");
        for r in samples {
            let g = map_gamma_of_r(&r, tol).unwrap();
            let block = fiedler_bapat(&g.variogram, &IndexSet::full(3)).unwrap();
            assert!((block.sigma2 - 1.0).abs() <= 1e-8);
        }
    }
}
