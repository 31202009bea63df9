//! Decision procedures for extremal conditional independence: the four-way
//! singleton criterion, the `m^HR` modularity criterion with its
//! determinant-product corollary, the `sigma^2` criterion under the M-matrix
//! and positive-`p` hypotheses, Markov-graph extraction, and global-Markov
//! verification via graph separation.
//!
//! Every criterion reduces to a vanishing determinant. Residuals are
//! normalized to scale-free ratios before classification, and a verdict in
//! the indeterminate tolerance band is reported as such rather than forced.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::graph::{GraphError, MarkovGraph};
use crate::index_set::{disjoint_triples, IndexSet};
use crate::linalg::SymMatrix;
use crate::model::{fiedler_bapat, FiedlerBapatBlock, ModelError, Variogram};
use crate::setfn::{check_triple, m_hr, modularity_gap, SetFnError, SetFunctionKind};
use crate::tol::{Tol, ZeroClass};

#[derive(Debug, Error)]
pub enum CiError {
    #[error("invalid index sets: {reason}")]
    BadIndexSets { reason: String },
    #[error("criteria disagree at the working tolerance: {residuals:?}")]
    CriterionDisagreement { residuals: Vec<CriterionResidual> },
    #[error("dimension {d} exceeds the sweep limit {max}")]
    TooLarge { d: usize, max: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    SetFn(#[from] SetFnError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// An extremal conditional-independence query `Y_A independent of Y_B given Y_C`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CiStatement {
    pub a: IndexSet,
    pub b: IndexSet,
    pub c: IndexSet,
}

impl CiStatement {
    pub fn new(a: IndexSet, b: IndexSet, c: IndexSet) -> Self {
        Self { a, b, c }
    }

    pub fn margin(&self) -> IndexSet {
        self.a.union(&self.b).union(&self.c)
    }
}

impl std::fmt::Display for CiStatement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} _||_ {} | {}", self.a, self.b, self.c)
    }
}

/// Three-valued verdict of a tolerance-banded decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ternary {
    Holds,
    Fails,
    Indeterminate,
}

/// Which decision procedure produced a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiMethod {
    Singleton4Way,
    MhrModularity,
    CmDetProduct,
    Sigma2Modularity,
}

impl CiMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            CiMethod::Singleton4Way => "singleton-4way",
            CiMethod::MhrModularity => "mhr-modularity",
            CiMethod::CmDetProduct => "cm-det-product",
            CiMethod::Sigma2Modularity => "sigma2-modularity",
        }
    }
}

/// One normalized criterion residual with its band classification.
#[derive(Debug, Clone)]
pub struct CriterionResidual {
    pub criterion: &'static str,
    /// Scale-free ratio; compared directly against the relative tolerance.
    pub residual: f64,
    pub class: ZeroClass,
    pub note: Option<String>,
}

/// Hypothesis flags of the `sigma^2` criterion on the ABC margin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Applicability {
    pub emtp2_on_margin: bool,
    pub p_positive_on_margin: bool,
    pub p_nonnegative_on_margin: bool,
}

/// Outcome of a conditional-independence decision.
#[derive(Debug, Clone)]
pub struct CiVerdict {
    pub statement: CiStatement,
    pub verdict: Ternary,
    pub method: CiMethod,
    pub residuals: Vec<CriterionResidual>,
    /// Modularity gap when the method is gap-based.
    pub gap: Option<f64>,
    pub applicability: Option<Applicability>,
}

impl CiVerdict {
    pub fn holds(&self) -> bool {
        self.verdict == Ternary::Holds
    }
}

fn combine(
    residuals: Vec<CriterionResidual>,
) -> Result<(Ternary, Vec<CriterionResidual>), CiError> {
    let any_zero = residuals.iter().any(|r| r.class == ZeroClass::Zero);
    let any_nonzero = residuals.iter().any(|r| r.class == ZeroClass::NonZero);
    if any_zero && any_nonzero {
        return Err(CiError::CriterionDisagreement { residuals });
    }
    let verdict = if residuals.iter().all(|r| r.class == ZeroClass::Zero) {
        Ternary::Holds
    } else if residuals.iter().all(|r| r.class == ZeroClass::NonZero) {
        Ternary::Fails
    } else {
        Ternary::Indeterminate
    };
    Ok((verdict, residuals))
}

/// Decide `Y_i _||_ Y_j | Y_C` through the three parametric singleton
/// criteria: the precision entry on the `Cij` margin, the mixed
/// Cayley–Menger minor, and the complementary precision minor. All three
/// must agree; a split vote is an error, not a silent pick.
pub fn ci_singleton(
    v: &Variogram,
    i: usize,
    j: usize,
    c: &IndexSet,
    tol: Tol,
) -> Result<CiVerdict, CiError> {
    let d = v.dim();
    if i == j || i >= d || j >= d {
        return Err(CiError::BadIndexSets {
            reason: format!("bad pair ({}, {})", i + 1, j + 1),
        });
    }
    if c.is_empty() {
        return Err(CiError::BadIndexSets {
            reason: "conditioning set must be nonempty".into(),
        });
    }
    if c.contains(i) || c.contains(j) || !c.is_within(d) {
        return Err(CiError::BadIndexSets {
            reason: format!("C = {c} must exclude the pair and stay within range"),
        });
    }
    let ci = c.with(i);
    let cj = c.with(j);
    let cij = ci.with(j);
    let mut residuals = Vec::with_capacity(3);

    // (ii) precision entry on the Cij margin, in partial-correlation scaling
    let block = fiedler_bapat(v, &cij)?;
    let t_ij = block.theta_at(i, j);
    let denom = (block.theta_at(i, i) * block.theta_at(j, j)).sqrt();
    let r2 = t_ij.abs() / denom;
    residuals.push(CriterionResidual {
        criterion: "theta-margin-entry",
        residual: r2,
        class: tol.classify_ratio(r2),
        note: None,
    });

    // (iii) det CM(G_{Ci,Cj}), normalized by the matching principal dets
    let det_mixed = mixed_cm_det(v, &ci, &cj)?;
    let det_ci = mixed_cm_det(v, &ci, &ci)?;
    let det_cj = mixed_cm_det(v, &cj, &cj)?;
    let r3 = det_mixed.abs() / (det_ci.abs() * det_cj.abs()).sqrt();
    residuals.push(CriterionResidual {
        criterion: "cm-mixed-det",
        residual: r3,
        class: tol.classify_ratio(r3),
        note: None,
    });

    // (iv) complementary minor of the full-model precision matrix
    let full = fiedler_bapat(v, &IndexSet::full(d))?;
    let rows = ci.complement(d);
    let cols = cj.complement(d);
    let m_mixed = full.theta.rect(&rows, &cols).map_err(ModelError::from)?;
    let m_rr = full.theta.rect(&rows, &rows).map_err(ModelError::from)?;
    let m_cc = full.theta.rect(&cols, &cols).map_err(ModelError::from)?;
    let det4 = m_mixed.full_piv_lu().determinant();
    let scale4 = (m_rr.full_piv_lu().determinant() * m_cc.full_piv_lu().determinant()).sqrt();
    let r4 = det4.abs() / scale4;
    let note = if cij.len() == d {
        Some("Cij covers the full index set; reduces to the margin precision entry".to_string())
    } else {
        None
    };
    residuals.push(CriterionResidual {
        criterion: "theta-complement-minor",
        residual: r4,
        class: tol.classify_ratio(r4),
        note,
    });

    let (verdict, residuals) = combine(residuals)?;
    Ok(CiVerdict {
        statement: CiStatement::new(IndexSet::singleton(i), IndexSet::singleton(j), c.clone()),
        verdict,
        method: CiMethod::Singleton4Way,
        residuals,
        gap: None,
        applicability: None,
    })
}

/// `det [[-G_{R,S}/2, 1], [1^T, 0]]` for row set `R` and column set `S`.
fn mixed_cm_det(v: &Variogram, rows: &IndexSet, cols: &IndexSet) -> Result<f64, CiError> {
    let n = rows.len();
    assert_eq!(n, cols.len(), "mixed Cayley-Menger blocks must be square");
    let sub = v.gamma().rect(rows, cols).map_err(ModelError::from)?;
    let mut m = DMatrix::zeros(n + 1, n + 1);
    m.view_mut((0, 0), (n, n)).copy_from(&(sub * -0.5));
    for r in 0..n {
        m[(r, n)] = 1.0;
        m[(n, r)] = 1.0;
    }
    Ok(m.full_piv_lu().determinant())
}

/// Decide an arbitrary statement through `m^HR` modularity, cross-checked
/// against the determinant-product corollary
/// `det CM(G_ABC) det CM(G_C) - det CM(G_AC) det CM(G_BC) = 0`.
pub fn ci_general_mhr(v: &Variogram, s: &CiStatement, tol: Tol) -> Result<CiVerdict, CiError> {
    check_triple(v, &s.a, &s.b, &s.c)?;
    let report = modularity_gap(v, &s.a, &s.b, &s.c, SetFunctionKind::Mhr, tol)?;
    let scale = [report.v_abc, report.v_c, report.v_ac, report.v_bc]
        .iter()
        .fold(1.0f64, |m, x| m.max(x.abs()));
    let mut residuals = vec![CriterionResidual {
        criterion: "mhr-gap",
        residual: report.gap,
        class: tol.classify(report.gap, scale),
        note: None,
    }];

    let abc = s.margin();
    let ac = s.a.union(&s.c);
    let bc = s.b.union(&s.c);
    let d_abc = crate::model::cayley_menger(v, &abc)?.det();
    let d_c = crate::model::cayley_menger(v, &s.c)?.det();
    let d_ac = crate::model::cayley_menger(v, &ac)?.det();
    let d_bc = crate::model::cayley_menger(v, &bc)?.det();
    let prod_resid = d_abc * d_c - d_ac * d_bc;
    let mut mags = [d_abc.abs(), d_c.abs(), d_ac.abs(), d_bc.abs()];
    mags.sort_by(|x, y| y.total_cmp(x));
    let ratio = prod_resid / (mags[0] * mags[1]);
    residuals.push(CriterionResidual {
        criterion: "cm-det-product",
        residual: ratio,
        class: tol.classify_ratio(ratio),
        note: None,
    });

    let (verdict, residuals) = combine(residuals)?;
    Ok(CiVerdict {
        statement: s.clone(),
        verdict,
        method: CiMethod::MhrModularity,
        residuals,
        gap: Some(report.gap),
        applicability: None,
    })
}

/// Decide a statement through `sigma^2` modularity. Applicable only when the
/// ABC margin is an M-matrix model with strictly positive `p`; outside the
/// hypotheses the verdict is indeterminate, never guessed.
pub fn ci_sigma2(v: &Variogram, s: &CiStatement, tol: Tol) -> Result<CiVerdict, CiError> {
    check_triple(v, &s.a, &s.b, &s.c)?;
    let report = modularity_gap(v, &s.a, &s.b, &s.c, SetFunctionKind::Sigma2, tol)?;
    let applicability = Applicability {
        emtp2_on_margin: report.emtp2_on_margin.unwrap_or(false),
        p_positive_on_margin: report.p_positive_on_margin.unwrap_or(false),
        p_nonnegative_on_margin: report.p_nonnegative_on_margin.unwrap_or(false),
    };
    let scale = [report.v_abc, report.v_c, report.v_ac, report.v_bc]
        .iter()
        .fold(1.0f64, |m, x| m.max(x.abs()));
    let class = tol.classify(report.gap, scale);
    let residuals = vec![CriterionResidual {
        criterion: "sigma2-gap",
        residual: report.gap,
        class,
        note: (!applicability.emtp2_on_margin || !applicability.p_positive_on_margin)
            .then(|| "hypotheses unmet on the ABC margin; gap is not conclusive".to_string()),
    }];
    let verdict = if applicability.emtp2_on_margin && applicability.p_positive_on_margin {
        match class {
            ZeroClass::Zero => Ternary::Holds,
            ZeroClass::Band => Ternary::Indeterminate,
            ZeroClass::NonZero => Ternary::Fails,
        }
    } else {
        Ternary::Indeterminate
    };
    Ok(CiVerdict {
        statement: s.clone(),
        verdict,
        method: CiMethod::Sigma2Modularity,
        residuals,
        gap: Some(report.gap),
        applicability: Some(applicability),
    })
}

/// M-matrix check of a precision matrix, with a boundary flag for entries at
/// the sign-change threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Emtp2Check {
    pub emtp2: bool,
    /// Largest off-diagonal entry in partial-correlation scaling.
    pub max_offdiag_ratio: f64,
    /// Some off-diagonal entry sits within tolerance of zero.
    pub boundary: bool,
}

/// True iff every off-diagonal precision entry is nonpositive within
/// tolerance (entries scaled by `sqrt(Theta_ii Theta_jj)`).
pub fn is_emtp2(theta: &SymMatrix, tol: Tol) -> Emtp2Check {
    let d = theta.dim();
    let mut max_ratio = f64::NEG_INFINITY;
    let mut boundary = false;
    for i in 0..d {
        for j in (i + 1)..d {
            let denom = (theta.at(i, i) * theta.at(j, j))
                .sqrt()
                .max(f64::MIN_POSITIVE);
            let ratio = theta.at(i, j) / denom;
            max_ratio = max_ratio.max(ratio);
            if ratio.abs() <= tol.rel {
                boundary = true;
            }
        }
    }
    if d < 2 {
        max_ratio = 0.0;
    }
    Emtp2Check {
        emtp2: max_ratio <= tol.rel,
        max_offdiag_ratio: max_ratio,
        boundary,
    }
}

/// Extract the pairwise Markov graph: an edge per pair with a nonzero
/// full-model precision entry, weighted by `-Theta_ij`.
pub fn pairwise_markov_graph(v: &Variogram, tol: Tol) -> Result<MarkovGraph, CiError> {
    let d = v.dim();
    let block = fiedler_bapat(v, &IndexSet::full(d))?;
    let mut edges = Vec::new();
    let mut weights = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            let t = block.theta.at(i, j);
            let scale = (block.theta.at(i, i) * block.theta.at(j, j)).sqrt();
            if t.abs() > tol.rel * scale {
                edges.push((i, j));
                weights.push(-t);
            }
        }
    }
    Ok(MarkovGraph::with_weights(d, &edges, &weights)?)
}

/// One failed separation statement found by the global-Markov sweep.
#[derive(Debug, Clone)]
pub struct MarkovViolation {
    pub statement: CiStatement,
    pub gap: f64,
    pub note: String,
}

/// Result of sweeping all separated triples of a candidate graph.
#[derive(Debug, Clone)]
pub struct GlobalMarkovReport {
    /// Disjoint nonempty triples enumerated (A/B unordered).
    pub triples_checked: usize,
    /// Triples where C separates A from B in the candidate graph.
    pub separated: usize,
    pub violations: Vec<MarkovViolation>,
}

impl GlobalMarkovReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Verify the undirected global Markov property of `v` against a candidate
/// graph: every separation in the graph must correspond to a modular triple.
pub fn check_global_markov(
    v: &Variogram,
    g: &MarkovGraph,
    max_d: usize,
    tol: Tol,
) -> Result<GlobalMarkovReport, CiError> {
    let d = v.dim();
    if d > max_d {
        return Err(CiError::TooLarge { d, max: max_d });
    }
    if g.vertex_count() != d {
        return Err(CiError::BadIndexSets {
            reason: format!("graph has {} vertices, model has {d}", g.vertex_count()),
        });
    }
    let mut report = GlobalMarkovReport {
        triples_checked: 0,
        separated: 0,
        violations: Vec::new(),
    };
    for (a, b, c) in disjoint_triples(d, true) {
        report.triples_checked += 1;
        if !g.separates(&a, &b, &c) {
            continue;
        }
        report.separated += 1;
        let statement = CiStatement::new(a, b, c);
        match ci_general_mhr(v, &statement, tol) {
            Ok(verdict) if verdict.holds() => {}
            Ok(verdict) => {
                report.violations.push(MarkovViolation {
                    statement,
                    gap: verdict.gap.unwrap_or(f64::NAN),
                    note: format!("verdict {:?}", verdict.verdict),
                });
            }
            Err(CiError::CriterionDisagreement { residuals }) => {
                report.violations.push(MarkovViolation {
                    statement,
                    gap: f64::NAN,
                    note: format!("criterion disagreement: {residuals:?}"),
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

/// The reduced polynomial form of the `sigma^2` modularity gap for a
/// singleton pair against the rest of the margin:
/// `q_{ij}(Theta, p) = Theta_ij / (Theta_ii Theta_jj (Theta_ii Theta_jj - Theta_ij^2))
///  * (p_i^2 Theta_ij Theta_jj - 2 p_i p_j Theta_ii Theta_jj + p_j^2 Theta_ii Theta_ij)`.
///
/// Vanishes exactly when `Y_i _||_ Y_j | Y_rest` on the block's margin.
pub fn sigma2_gap_polynomial(block: &FiedlerBapatBlock, i: usize, j: usize) -> f64 {
    let tii = block.theta_at(i, i);
    let tjj = block.theta_at(j, j);
    let tij = block.theta_at(i, j);
    let pi = block.p_at(i);
    let pj = block.p_at(j);
    let denom = tii * tjj * (tii * tjj - tij * tij);
    let numer = pi * pi * tij * tjj - 2.0 * pi * pj * tii * tjj + pj * pj * tii * tij;
    tij / denom * numer
}

/// Decompose a general statement into its singleton pair statements
/// (equivalent under the M-matrix hypothesis).
pub fn singleton_pairs(s: &CiStatement) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in s.a.iter() {
        for j in s.b.iter() {
            pairs.push((i, j));
        }
    }
    pairs
}

/// Convenience: `m^HR` of a margin, re-exported for report code.
pub fn m_hr_value(v: &Variogram, set: &IndexSet) -> Result<f64, CiError> {
    Ok(m_hr(v, set)?)
}
