//! The set functions on margins of a Hüsler–Reiss model: the
//! multiinformation-style function `m^HR` and the squared-circumradius
//! invariant `sigma^2`, each with its equivalent representations, plus the
//! modularity-gap evaluation for triples of disjoint subsets.
//!
//! `m^HR(I) = -log(-det CM(G_II))/2` is supermodular; `sigma^2(I) =
//! 1/(2 1^T G_II^{-1} 1)` is submodular on models whose precision matrix is
//! an M-matrix with nonnegative `p`. Equality (modularity) encodes extremal
//! conditional independence in both cases.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::graph::{GraphError, MarkovGraph};
use crate::index_set::IndexSet;
use crate::linalg::{orthonormal_complement, solve_sym, symmetrize, SymMatrix};
use crate::model::{cayley_menger, fiedler_bapat, DensityEvaluator, ModelError, Variogram};
use crate::quad::simpson_box;
use crate::tol::{Tol, ZeroClass};

#[derive(Debug, Error)]
pub enum SetFnError {
    #[error("logarithm argument is not positive ({value:e}); invalid variogram upstream")]
    NonPositiveArgument { value: f64 },
    #[error("representation `{rep}` unsupported for margin size {size} (limit {limit})")]
    UnsupportedSize {
        rep: &'static str,
        size: usize,
        limit: usize,
    },
    #[error("invalid index sets: {reason}")]
    BadIndexSets { reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Which set function a report refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SetFunctionKind {
    Mhr,
    Sigma2,
}

/// A set-function value together with the representation that produced it,
/// kept for audit in reports.
#[derive(Debug, Clone)]
pub struct SetFunctionValue {
    pub subset: IndexSet,
    pub value: f64,
    pub representation: &'static str,
}

/// Evaluate one tagged representation of a set function on a margin.
pub fn evaluate_tagged(
    v: &Variogram,
    set: &IndexSet,
    kind: SetFunctionKind,
    rep_tag: Option<&str>,
    tol: Tol,
) -> Result<SetFunctionValue, SetFnError> {
    let (value, representation) = match (kind, rep_tag) {
        (SetFunctionKind::Mhr, None) => (m_hr(v, set)?, MhrRep::CmDet.tag()),
        (SetFunctionKind::Sigma2, None) => (sigma2(v, set)?, Sigma2Rep::InverseRowsum.tag()),
        (SetFunctionKind::Mhr, Some(tag)) => {
            let rep = MhrRep::ALL
                .into_iter()
                .find(|r| r.tag() == tag)
                .ok_or_else(|| SetFnError::BadIndexSets {
                    reason: format!("unknown m^HR representation `{tag}`"),
                })?;
            (m_hr_rep(v, set, rep, tol)?, rep.tag())
        }
        (SetFunctionKind::Sigma2, Some(tag)) => {
            let rep = Sigma2Rep::ALL
                .into_iter()
                .find(|r| r.tag() == tag)
                .ok_or_else(|| SetFnError::BadIndexSets {
                    reason: format!("unknown sigma^2 representation `{tag}`"),
                })?;
            (sigma2_rep(v, set, rep, tol)?, rep.tag())
        }
    };
    if !value.is_finite() {
        return Err(SetFnError::NonPositiveArgument { value });
    }
    Ok(SetFunctionValue {
        subset: set.clone(),
        value,
        representation,
    })
}

/// `m^HR(I)`; zero on the empty set and on singletons.
pub fn m_hr(v: &Variogram, set: &IndexSet) -> Result<f64, SetFnError> {
    if set.is_empty() {
        return Ok(0.0);
    }
    check_range(v, set)?;
    let det = cayley_menger(v, set)?.det();
    let arg = -det;
    if arg <= 0.0 {
        return Err(SetFnError::NonPositiveArgument { value: arg });
    }
    Ok(-0.5 * arg.ln())
}

/// Equivalent representations of `m^HR`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MhrRep {
    /// `-log det [[-G_II/2, 1], [-1^T, 0]] / 2` (sign-flipped border row).
    Definition,
    /// `-log(-det CM(G_II)) / 2`.
    CmDet,
    /// `log det(Theta(I) minus row/column k) / 2`.
    MinorDet,
    /// `log(Det(Theta(I)) / |I|) / 2` with the pseudo-determinant.
    PseudoDet,
    /// Halfspace integral of the density kernel (grid cubature, |I| <= 3).
    Integral,
    /// `log(sum over spanning trees of prod -Theta(I)_ij) / 2`.
    SpanningTree,
}

impl MhrRep {
    pub const ALL: [MhrRep; 6] = [
        MhrRep::Definition,
        MhrRep::CmDet,
        MhrRep::MinorDet,
        MhrRep::PseudoDet,
        MhrRep::Integral,
        MhrRep::SpanningTree,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            MhrRep::Definition => "definition",
            MhrRep::CmDet => "cm-det",
            MhrRep::MinorDet => "minor-det",
            MhrRep::PseudoDet => "pseudo-det",
            MhrRep::Integral => "integral",
            MhrRep::SpanningTree => "spanning-tree",
        }
    }
}

/// Evaluate `m^HR` through a chosen representation. Representations that
/// depend on an anchor use the smallest element of `I`; the anchored
/// variants [`m_hr_minor_det`] and [`m_hr_integral`] expose the choice.
pub fn m_hr_rep(v: &Variogram, set: &IndexSet, rep: MhrRep, tol: Tol) -> Result<f64, SetFnError> {
    check_range(v, set)?;
    if set.len() < 2 {
        return Err(SetFnError::UnsupportedSize {
            rep: rep.tag(),
            size: set.len(),
            limit: 2,
        });
    }
    let k = set.first().expect("nonempty");
    match rep {
        MhrRep::Definition => {
            let cm = cayley_menger(v, set)?.assemble();
            let m = set.len();
            let mut flipped = cm;
            for c in 0..=m {
                flipped[(m, c)] = -flipped[(m, c)];
            }
            let det = flipped.full_piv_lu().determinant();
            if det <= 0.0 {
                return Err(SetFnError::NonPositiveArgument { value: det });
            }
            Ok(-0.5 * det.ln())
        }
        MhrRep::CmDet => m_hr(v, set),
        MhrRep::MinorDet => m_hr_minor_det(v, set, k),
        MhrRep::PseudoDet => {
            let block = fiedler_bapat(v, set)?;
            let pd = block.theta.pseudo_det(tol.rel).map_err(ModelError::from)?;
            let arg = pd / set.len() as f64;
            if arg <= 0.0 {
                return Err(SetFnError::NonPositiveArgument { value: arg });
            }
            Ok(0.5 * arg.ln())
        }
        MhrRep::Integral => m_hr_integral(v, set, k),
        MhrRep::SpanningTree => {
            const LIMIT: usize = 8;
            if set.len() > LIMIT {
                return Err(SetFnError::UnsupportedSize {
                    rep: rep.tag(),
                    size: set.len(),
                    limit: LIMIT,
                });
            }
            let block = fiedler_bapat(v, set)?;
            let m = set.len();
            // edges where Theta(I) is nonzero, signed weights -Theta_ij
            let mut edges = Vec::new();
            let mut weights = Vec::new();
            for i in 0..m {
                for j in (i + 1)..m {
                    let t = block.theta.at(i, j);
                    let scale = (block.theta.at(i, i) * block.theta.at(j, j)).sqrt();
                    if t.abs() > tol.rel * scale {
                        edges.push((i, j));
                        weights.push(-t);
                    }
                }
            }
            let g = MarkovGraph::with_weights(m, &edges, &weights)?;
            let trees = g.spanning_trees()?;
            let mut sum = 0.0;
            for tree in &trees {
                let mut prod = 1.0;
                for e in tree {
                    let idx = g
                        .edges()
                        .iter()
                        .position(|x| x == e)
                        .expect("edge of graph");
                    prod *= g.weights()[idx];
                }
                sum += prod;
            }
            if sum <= 0.0 {
                return Err(SetFnError::NonPositiveArgument { value: sum });
            }
            Ok(0.5 * sum.ln())
        }
    }
}

/// Representation (ii): `log det(Theta(I)_{\k,\k}) / 2` for an anchor `k` in `I`.
pub fn m_hr_minor_det(v: &Variogram, set: &IndexSet, k: usize) -> Result<f64, SetFnError> {
    check_anchor(set, k)?;
    let block = fiedler_bapat(v, set)?;
    let pos = set.position(k).expect("anchor in set");
    let keep = IndexSet::new((0..set.len()).filter(|&q| q != pos).collect());
    let det = block
        .theta
        .principal(&keep)
        .map_err(ModelError::from)?
        .det();
    if det <= 0.0 {
        return Err(SetFnError::NonPositiveArgument { value: det });
    }
    Ok(0.5 * det.ln())
}

/// Representation (iv): minus the log of the halfspace integral
/// `int_{y_k > 0} exp(-(y,1) CM(G_II)^{-1} (y,1) / 2) dy` plus
/// `(|I|-1) log(2 pi) / 2`, computed by grid cubature on a sheared box.
pub fn m_hr_integral(v: &Variogram, set: &IndexSet, k: usize) -> Result<f64, SetFnError> {
    const LIMIT: usize = 3;
    check_anchor(set, k)?;
    let m = set.len();
    if m > LIMIT {
        return Err(SetFnError::UnsupportedSize {
            rep: "integral",
            size: m,
            limit: LIMIT,
        });
    }
    let cm_inv = cayley_menger(v, set)?
        .try_inverse()
        .ok_or_else(|| ModelError::SingularCm {
            margin: set.to_string(),
        })?;
    let kernel = move |y: &[f64]| {
        let mut q = 0.0;
        for r in 0..=y.len() {
            let yr = if r < y.len() { y[r] } else { 1.0 };
            let mut row = 0.0;
            for c in 0..=y.len() {
                let yc = if c < y.len() { y[c] } else { 1.0 };
                row += cm_inv[(r, c)] * yc;
            }
            q += yr * row;
        }
        (-0.5 * q).exp()
    };

    let pos_k = set.position(k).expect("anchor in set");
    let block = fiedler_bapat(v, set)?;
    // coordinates y = t 1 + z with z_k = 0: unit Jacobian, the integrand
    // decays exponentially in t and like the conditional Gaussian in z;
    // z is integrated in decorrelated (eigen-scaled) coordinates so the
    // grid resolves elongated Gaussians
    let others = IndexSet::new((0..m).filter(|&q| q != pos_k).collect());
    let theta_mm = block
        .theta
        .rect(&others, &others)
        .map_err(ModelError::from)?;
    let p_m = DVector::from_iterator(m - 1, others.iter().map(|q| block.p[q]));
    let cov = symmetrize(
        theta_mm
            .clone()
            .try_inverse()
            .ok_or(ModelError::SingularBlock)?,
    );
    let mean = -&cov * &p_m;
    let gauss = GaussBox::new(&cov, 9.5).ok_or(ModelError::SingularBlock)?;
    let mut lo = vec![0.0];
    let mut hi = vec![38.0];
    let mut panels = vec![192usize];
    lo.extend_from_slice(&gauss.lo);
    hi.extend_from_slice(&gauss.hi);
    panels.extend(std::iter::repeat_n(160usize, m - 1));
    let mut y = vec![0.0f64; m];
    let others_vec: Vec<usize> = others.iter().collect();
    let integral = simpson_box(&lo, &hi, &panels, |tz| {
        let t = tz[0];
        y[pos_k] = t;
        for (a, &q) in others_vec.iter().enumerate() {
            let mut z = mean[a];
            for b in 0..m - 1 {
                z += gauss.transform[(a, b)] * tz[b + 1];
            }
            y[q] = t + z;
        }
        kernel(&y) * gauss.jacobian
    });
    if integral <= 0.0 {
        return Err(SetFnError::NonPositiveArgument { value: integral });
    }
    Ok(-integral.ln() + 0.5 * (m as f64 - 1.0) * (2.0 * std::f64::consts::PI).ln())
}

/// `sigma^2(I)`: the squared circumradius invariant, zero on singletons.
pub fn sigma2(v: &Variogram, set: &IndexSet) -> Result<f64, SetFnError> {
    if set.is_empty() {
        return Err(SetFnError::BadIndexSets {
            reason: "sigma^2 needs a nonempty margin".into(),
        });
    }
    check_range(v, set)?;
    if set.len() == 1 {
        return Ok(0.0);
    }
    let gsub = v.gamma().rect(set, set).map_err(ModelError::from)?;
    let ones = DMatrix::from_element(set.len(), 1, 1.0);
    let x = solve_sym(&gsub, &ones).ok_or_else(|| ModelError::SingularCm {
        margin: set.to_string(),
    })?;
    let s: f64 = x.iter().sum();
    if s <= 0.0 {
        return Err(SetFnError::NonPositiveArgument { value: s });
    }
    Ok(0.5 / s)
}

/// Equivalent representations of `sigma^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sigma2Rep {
    /// `1 / (2 1^T G_II^{-1} 1)`.
    InverseRowsum,
    /// `det(-G_II/2) / det CM(G_II)`.
    DetQuotient,
    /// `-2 log int_{p^T y > 0} lambda_I(y) dy` (grid cubature, |I| <= 3).
    Integral,
    /// Value of `x^T G_II x / 2` at its constrained maximizer `x = p(I)`.
    MaxQuadratic,
    /// `-1/4 sum_{i<j} Theta(I)_ij (G_ik - G_jk)^2` for an anchor `k`.
    ThetaSum,
    /// `Tr(G_II Theta(I) G_II) / (4 |I|)`.
    Trace,
}

impl Sigma2Rep {
    pub const ALL: [Sigma2Rep; 6] = [
        Sigma2Rep::InverseRowsum,
        Sigma2Rep::DetQuotient,
        Sigma2Rep::Integral,
        Sigma2Rep::MaxQuadratic,
        Sigma2Rep::ThetaSum,
        Sigma2Rep::Trace,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Sigma2Rep::InverseRowsum => "inverse-rowsum",
            Sigma2Rep::DetQuotient => "det-quotient",
            Sigma2Rep::Integral => "integral",
            Sigma2Rep::MaxQuadratic => "max-quadratic",
            Sigma2Rep::ThetaSum => "theta-sum",
            Sigma2Rep::Trace => "trace",
        }
    }
}

/// Evaluate `sigma^2` through a chosen representation (anchored variants use
/// the smallest element of `I`; see [`sigma2_theta_sum`]).
pub fn sigma2_rep(
    v: &Variogram,
    set: &IndexSet,
    rep: Sigma2Rep,
    _tol: Tol,
) -> Result<f64, SetFnError> {
    check_range(v, set)?;
    if set.len() < 2 {
        return Err(SetFnError::UnsupportedSize {
            rep: rep.tag(),
            size: set.len(),
            limit: 2,
        });
    }
    match rep {
        Sigma2Rep::InverseRowsum => sigma2(v, set),
        Sigma2Rep::DetQuotient => {
            let num =
                SymMatrix::from_upper(v.gamma().rect(set, set).map_err(ModelError::from)? * -0.5)
                    .expect("square")
                    .det();
            let den = cayley_menger(v, set)?.det();
            if den == 0.0 {
                return Err(SetFnError::NonPositiveArgument { value: den });
            }
            Ok(num / den)
        }
        Sigma2Rep::Integral => sigma2_integral(v, set),
        Sigma2Rep::MaxQuadratic => {
            let block = fiedler_bapat(v, set)?;
            let gsub = v.gamma().rect(set, set).map_err(ModelError::from)?;
            Ok(0.5 * (block.p.transpose() * gsub * &block.p)[0])
        }
        Sigma2Rep::ThetaSum => sigma2_theta_sum(v, set, set.first().expect("nonempty")),
        Sigma2Rep::Trace => {
            let block = fiedler_bapat(v, set)?;
            let gsub = v.gamma().rect(set, set).map_err(ModelError::from)?;
            let prod = &gsub * block.theta.as_dmatrix() * &gsub;
            Ok(prod.trace() / (4.0 * set.len() as f64))
        }
    }
}

/// Representation (iv): `-1/4 sum over pairs {i,j} of I of
/// Theta(I)_ij (G_ik - G_jk)^2`, for any anchor `k` in `I`.
pub fn sigma2_theta_sum(v: &Variogram, set: &IndexSet, k: usize) -> Result<f64, SetFnError> {
    check_anchor(set, k)?;
    if set.len() < 2 {
        return Err(SetFnError::UnsupportedSize {
            rep: "theta-sum",
            size: set.len(),
            limit: 2,
        });
    }
    let block = fiedler_bapat(v, set)?;
    let idx: Vec<usize> = set.iter().collect();
    let mut sum = 0.0;
    for a in 0..idx.len() {
        for b in (a + 1)..idx.len() {
            let diff = v.entry(idx[a], k) - v.entry(idx[b], k);
            sum += block.theta.at(a, b) * diff * diff;
        }
    }
    Ok(-0.25 * sum)
}

/// Representation (ii): `-2 log int_{p^T y > 0} lambda_I(y) dy` by grid
/// cubature over coordinates `(u, z)` with `y = u 1 + Q z`, `Q` an
/// orthonormal basis of the hyperplane orthogonal to `p(I)`.
fn sigma2_integral(v: &Variogram, set: &IndexSet) -> Result<f64, SetFnError> {
    const LIMIT: usize = 3;
    let m = set.len();
    if m > LIMIT {
        return Err(SetFnError::UnsupportedSize {
            rep: "integral",
            size: m,
            limit: LIMIT,
        });
    }
    let marginal = v.restrict(set)?;
    let density = DensityEvaluator::new(&marginal)?;
    let block = fiedler_bapat(v, set)?;
    let q = orthonormal_complement(&block.p);
    // Jacobian of (u, z) -> u 1 + Q z
    let mut basis = DMatrix::zeros(m, m);
    basis.view_mut((0, 0), (m, 1)).fill(1.0);
    basis.view_mut((0, 1), (m, m - 1)).copy_from(&q);
    let jac = basis.clone().full_piv_lu().determinant().abs();
    if jac <= 0.0 {
        return Err(SetFnError::NonPositiveArgument { value: jac });
    }
    // z is a centered Gaussian with precision Q^T Theta(I) Q; integrate in
    // decorrelated coordinates
    let zprec = symmetrize(q.transpose() * block.theta.as_dmatrix() * &q);
    let zcov = symmetrize(zprec.try_inverse().ok_or(ModelError::SingularBlock)?);
    let gauss = GaussBox::new(&zcov, 9.5).ok_or(ModelError::SingularBlock)?;
    let mut lo = vec![0.0];
    let mut hi = vec![38.0];
    let mut panels = vec![192usize];
    lo.extend_from_slice(&gauss.lo);
    hi.extend_from_slice(&gauss.hi);
    panels.extend(std::iter::repeat_n(160usize, m - 1));
    let qt = &q * &gauss.transform;
    let mut y = vec![0.0f64; m];
    let integral = simpson_box(&lo, &hi, &panels, |uw| {
        let u = uw[0];
        for r in 0..m {
            let mut acc = u;
            for b in 0..m - 1 {
                acc += qt[(r, b)] * uw[b + 1];
            }
            y[r] = acc;
        }
        density.eval(&y) * jac * gauss.jacobian
    });
    if integral <= 0.0 {
        return Err(SetFnError::NonPositiveArgument { value: integral });
    }
    Ok(-2.0 * integral.ln())
}

/// Linear map and bounds that turn a correlated Gaussian into unit-scale
/// coordinates: `z = transform * u`, `u` over `[-width, width]^k`.
struct GaussBox {
    transform: DMatrix<f64>,
    jacobian: f64,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl GaussBox {
    fn new(cov: &DMatrix<f64>, width: f64) -> Option<Self> {
        let k = cov.nrows();
        let eig = SymMatrix::from_upper(cov.clone()).ok()?.eigen().ok()?;
        let mut transform = DMatrix::zeros(k, k);
        let mut jacobian = 1.0;
        for c in 0..k {
            let sd = eig.values[c].max(0.0).sqrt();
            if sd <= 0.0 {
                return None;
            }
            jacobian *= sd;
            transform.set_column(c, &(eig.vectors.column(c) * sd));
        }
        Some(Self {
            transform,
            jacobian,
            lo: vec![-width; k],
            hi: vec![width; k],
        })
    }
}

/// Verdict of a modularity test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModularityVerdict {
    Modular,
    StrictlyNonModular,
    Indeterminate,
}

impl From<ZeroClass> for ModularityVerdict {
    fn from(z: ZeroClass) -> Self {
        match z {
            ZeroClass::Zero => ModularityVerdict::Modular,
            ZeroClass::Band => ModularityVerdict::Indeterminate,
            ZeroClass::NonZero => ModularityVerdict::StrictlyNonModular,
        }
    }
}

/// The four set-function values of a triple, the signed gap (oriented so the
/// respective theorem predicts `gap >= 0`) and the verdict.
#[derive(Debug, Clone)]
pub struct ModularityReport {
    pub kind: SetFunctionKind,
    pub a: IndexSet,
    pub b: IndexSet,
    pub c: IndexSet,
    pub v_abc: f64,
    pub v_c: f64,
    pub v_ac: f64,
    pub v_bc: f64,
    /// `v_abc + v_c - v_ac - v_bc` for `m^HR`;
    /// `v_ac + v_bc - v_abc - v_c` for `sigma^2`.
    pub gap: f64,
    /// Absolute threshold that was applied to the gap.
    pub tol_used: f64,
    pub verdict: ModularityVerdict,
    /// Whether the precision matrix of the ABC margin is an M-matrix
    /// (`sigma^2` only).
    pub emtp2_on_margin: Option<bool>,
    /// Whether `p(ABC) > 0` strictly (`sigma^2` only).
    pub p_positive_on_margin: Option<bool>,
    /// Whether `p(ABC) >= 0` within tolerance (`sigma^2` only).
    pub p_nonnegative_on_margin: Option<bool>,
}

/// Check that `(a, b, c)` are pairwise disjoint nonempty subsets of the
/// model's index range.
pub fn check_triple(
    v: &Variogram,
    a: &IndexSet,
    b: &IndexSet,
    c: &IndexSet,
) -> Result<(), SetFnError> {
    if a.is_empty() || b.is_empty() || c.is_empty() {
        return Err(SetFnError::BadIndexSets {
            reason: "A, B and C must be nonempty".into(),
        });
    }
    if !a.is_disjoint(b) || !a.is_disjoint(c) || !b.is_disjoint(c) {
        return Err(SetFnError::BadIndexSets {
            reason: "A, B and C must be pairwise disjoint".into(),
        });
    }
    let union = a.union(b).union(c);
    if !union.is_within(v.dim()) {
        return Err(SetFnError::BadIndexSets {
            reason: format!("indices out of range for dimension {}", v.dim()),
        });
    }
    Ok(())
}

/// Evaluate the four values and the signed modularity gap of a triple.
pub fn modularity_gap(
    v: &Variogram,
    a: &IndexSet,
    b: &IndexSet,
    c: &IndexSet,
    kind: SetFunctionKind,
    tol: Tol,
) -> Result<ModularityReport, SetFnError> {
    check_triple(v, a, b, c)?;
    let abc = a.union(b).union(c);
    let ac = a.union(c);
    let bc = b.union(c);
    let f = |set: &IndexSet| -> Result<f64, SetFnError> {
        match kind {
            SetFunctionKind::Mhr => m_hr(v, set),
            SetFunctionKind::Sigma2 => sigma2(v, set),
        }
    };
    let v_abc = f(&abc)?;
    let v_c = f(c)?;
    let v_ac = f(&ac)?;
    let v_bc = f(&bc)?;
    let gap = match kind {
        SetFunctionKind::Mhr => v_abc + v_c - v_ac - v_bc,
        SetFunctionKind::Sigma2 => v_ac + v_bc - v_abc - v_c,
    };
    let scale = [v_abc, v_c, v_ac, v_bc]
        .iter()
        .fold(1.0f64, |s, x| s.max(x.abs()));
    let verdict = ModularityVerdict::from(tol.classify(gap, scale));

    let (emtp2_on_margin, p_positive, p_nonneg) = match kind {
        SetFunctionKind::Mhr => (None, None, None),
        SetFunctionKind::Sigma2 => {
            let block = fiedler_bapat(v, &abc)?;
            let m = abc.len();
            let mut max_off = f64::NEG_INFINITY;
            for i in 0..m {
                for j in (i + 1)..m {
                    let scale = (block.theta.at(i, i) * block.theta.at(j, j))
                        .sqrt()
                        .max(1.0);
                    max_off = max_off.max(block.theta.at(i, j) / scale);
                }
            }
            let emtp2 = max_off <= tol.rel;
            let strict = block.p.iter().all(|&pi| pi > tol.rel);
            let nonneg = block.p.iter().all(|&pi| pi > -tol.rel);
            (Some(emtp2), Some(strict), Some(nonneg))
        }
    };
    Ok(ModularityReport {
        kind,
        a: a.clone(),
        b: b.clone(),
        c: c.clone(),
        v_abc,
        v_c,
        v_ac,
        v_bc,
        gap,
        tol_used: tol.threshold(scale),
        verdict,
        emtp2_on_margin,
        p_positive_on_margin: p_positive,
        p_nonnegative_on_margin: p_nonneg,
    })
}

fn check_range(v: &Variogram, set: &IndexSet) -> Result<(), SetFnError> {
    if !set.is_within(v.dim()) {
        return Err(SetFnError::BadIndexSets {
            reason: format!("{set} out of range for dimension {}", v.dim()),
        });
    }
    Ok(())
}

fn check_anchor(set: &IndexSet, k: usize) -> Result<(), SetFnError> {
    if !set.contains(k) {
        return Err(SetFnError::BadIndexSets {
            reason: format!("anchor {} not contained in {set}", k + 1),
        });
    }
    Ok(())
}
