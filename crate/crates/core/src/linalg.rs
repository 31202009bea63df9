//! Dense symmetric linear-algebra kernel: determinants, eigendecompositions,
//! pseudo-determinants, Schur complements and bordered matrices.
//!
//! Factorizations are delegated to `nalgebra`; this module pins the
//! conventions the rest of the crate relies on (exact symmetry by
//! construction, pivoted determinants with exact sign, relative rank
//! decisions).

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::index_set::IndexSet;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix dimension must be at least 1")]
    Empty,
    #[error("matrix is not symmetric (max asymmetry {max_asym:e})")]
    NotSymmetric { max_asym: f64 },
    #[error("index set {set} out of range for dimension {dim}")]
    IndexOutOfRange { set: String, dim: usize },
    #[error("eliminated block is numerically singular")]
    SingularBlock,
    #[error("symmetric eigenvalue iteration failed to converge")]
    ConvergenceFailure,
}

/// Dense symmetric matrix; symmetry is exact by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

impl SymMatrix {
    /// Build from a square matrix, mirroring the upper triangle onto the
    /// lower so that `m[(i,j)] == m[(j,i)]` holds exactly.
    pub fn from_upper(mut m: DMatrix<f64>) -> Result<Self, MatrixError> {
        if m.nrows() != m.ncols() {
            return Err(MatrixError::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(MatrixError::Empty);
        }
        for i in 0..m.nrows() {
            for j in 0..i {
                m[(i, j)] = m[(j, i)];
            }
        }
        Ok(Self { m })
    }

    /// Build from a matrix that is symmetric up to `max_asym`; rejects larger
    /// asymmetry, then mirrors exactly.
    pub fn from_symmetric(m: DMatrix<f64>, max_asym: f64) -> Result<Self, MatrixError> {
        if m.nrows() != m.ncols() {
            return Err(MatrixError::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let scale = m.amax().max(1.0);
        let mut worst = 0.0f64;
        for i in 0..m.nrows() {
            for j in 0..i {
                worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        if worst > max_asym * scale {
            return Err(MatrixError::NotSymmetric { max_asym: worst });
        }
        Self::from_upper(m)
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            m: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_dmatrix(self) -> DMatrix<f64> {
        self.m
    }

    /// Largest absolute entry.
    pub fn amax(&self) -> f64 {
        if self.m.is_empty() {
            0.0
        } else {
            self.m.amax()
        }
    }

    /// Principal submatrix on the given (sorted) indices.
    pub fn principal(&self, keep: &IndexSet) -> Result<SymMatrix, MatrixError> {
        if !keep.is_within(self.dim()) {
            return Err(MatrixError::IndexOutOfRange {
                set: keep.to_string(),
                dim: self.dim(),
            });
        }
        if keep.is_empty() {
            return Err(MatrixError::Empty);
        }
        Ok(Self {
            m: submatrix(&self.m, keep.as_slice(), keep.as_slice()),
        })
    }

    /// General (possibly non-principal) submatrix.
    pub fn rect(&self, rows: &IndexSet, cols: &IndexSet) -> Result<DMatrix<f64>, MatrixError> {
        if !rows.is_within(self.dim()) || !cols.is_within(self.dim()) {
            return Err(MatrixError::IndexOutOfRange {
                set: format!("{rows}x{cols}"),
                dim: self.dim(),
            });
        }
        Ok(submatrix(&self.m, rows.as_slice(), cols.as_slice()))
    }

    /// Determinant via a fully pivoted LU factorization; exact sign.
    pub fn det(&self) -> f64 {
        det_lu(self.m.clone())
    }

    /// Symmetric eigendecomposition, eigenvalues ascending.
    pub fn eigen(&self) -> Result<Eigen, MatrixError> {
        eigen_sym(&self.m)
    }

    /// Product of all eigenvalues with `|lambda| > rank_tol * max(1, spectral radius)`.
    ///
    /// The empty product (a numerically zero matrix) is 1 by convention.
    pub fn pseudo_det(&self, rank_tol: f64) -> Result<f64, MatrixError> {
        let eig = self.eigen()?;
        let radius = eig.values.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
        let thr = rank_tol * radius.max(1.0);
        Ok(eig.values.iter().filter(|l| l.abs() > thr).product())
    }

    /// Schur complement onto `keep`: `M_kk - M_ke M_ee^{-1} M_ek`.
    pub fn schur_complement(&self, keep: &IndexSet) -> Result<SymMatrix, MatrixError> {
        if !keep.is_within(self.dim()) || keep.is_empty() {
            return Err(MatrixError::IndexOutOfRange {
                set: keep.to_string(),
                dim: self.dim(),
            });
        }
        let elim = keep.complement(self.dim());
        if elim.is_empty() {
            return Ok(self.clone());
        }
        let a = submatrix(&self.m, keep.as_slice(), keep.as_slice());
        let b = submatrix(&self.m, keep.as_slice(), elim.as_slice());
        let d = submatrix(&self.m, elim.as_slice(), elim.as_slice());
        let x = solve_sym(&d, &b.transpose()).ok_or(MatrixError::SingularBlock)?;
        let s = a - b * x;
        SymMatrix::from_upper(symmetrize(s))
    }
}

/// Symmetric eigendecomposition result, eigenvalues in ascending order with
/// matching orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl Eigen {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn spectral_radius(&self) -> f64 {
        self.min().abs().max(self.max().abs())
    }
}

fn eigen_sym(m: &DMatrix<f64>) -> Result<Eigen, MatrixError> {
    let se = m
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 10_000)
        .ok_or(MatrixError::ConvergenceFailure)?;
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| se.eigenvalues[i]));
    let vectors = DMatrix::from_columns(
        &order
            .iter()
            .map(|&i| se.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    // reconstruction bound: ||M - V L V^T|| <= 1e-10 max(1, ||M||)
    let recon = &vectors * DMatrix::from_diagonal(&values) * vectors.transpose();
    let err = (m - &recon).norm();
    if err > 1e-10 * m.norm().max(1.0) {
        return Err(MatrixError::ConvergenceFailure);
    }
    Ok(Eigen { values, vectors })
}

/// Symmetric matrix bordered by a row/column and a corner scalar:
/// `[[inner, border], [border^T, corner]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BorderedMatrix {
    pub inner: SymMatrix,
    pub border: DVector<f64>,
    pub corner: f64,
}

impl BorderedMatrix {
    pub fn new(inner: SymMatrix, border: DVector<f64>, corner: f64) -> Self {
        assert_eq!(
            inner.dim(),
            border.len(),
            "border length must match inner dimension"
        );
        Self {
            inner,
            border,
            corner,
        }
    }

    pub fn dim(&self) -> usize {
        self.inner.dim() + 1
    }

    /// Dense `(d+1) x (d+1)` assembly.
    pub fn assemble(&self) -> DMatrix<f64> {
        let d = self.inner.dim();
        let mut m = DMatrix::zeros(d + 1, d + 1);
        m.view_mut((0, 0), (d, d))
            .copy_from(self.inner.as_dmatrix());
        for i in 0..d {
            m[(i, d)] = self.border[i];
            m[(d, i)] = self.border[i];
        }
        m[(d, d)] = self.corner;
        m
    }

    /// Determinant of the assembled matrix via pivoted LU; exact sign.
    pub fn det(&self) -> f64 {
        det_lu(self.assemble())
    }

    /// Inverse of the assembled matrix, if numerically nonsingular.
    pub fn try_inverse(&self) -> Option<DMatrix<f64>> {
        self.assemble().try_inverse()
    }
}

fn det_lu(m: DMatrix<f64>) -> f64 {
    m.full_piv_lu().determinant()
}

/// Mirror the average of a nearly symmetric matrix onto both triangles.
pub fn symmetrize(mut m: DMatrix<f64>) -> DMatrix<f64> {
    for i in 0..m.nrows() {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Solve `A X = B` for symmetric (possibly indefinite) `A` via pivoted LU.
pub fn solve_sym(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let lu = a.clone().full_piv_lu();
    let x = lu.solve(b)?;
    // reject solutions from a numerically singular factorization
    let resid = (a * &x - b).amax();
    let scale = a.amax().max(1.0) * x.amax().max(1.0);
    if !resid.is_finite() || resid > 1e-8 * scale.max(b.amax()) {
        return None;
    }
    Some(x)
}

/// Orthonormal basis of the hyperplane orthogonal to `v`, as the columns of a
/// `d x (d-1)` matrix (Householder construction).
pub fn orthonormal_complement(v: &DVector<f64>) -> DMatrix<f64> {
    let d = v.len();
    assert!(d >= 2, "complement basis needs dimension >= 2");
    let u = v / v.norm();
    // Householder vector mapping e_0 to ±u; columns 1..d of H are then an
    // orthonormal basis of u^perp.
    let sign = if u[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut w = u.clone();
    w[0] += sign;
    let wn2 = w.norm_squared();
    let h = DMatrix::identity(d, d) - (&w * w.transpose()) * (2.0 / wn2);
    h.columns(1, d - 1).into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Exact cofactor-expansion determinant: the independent oracle for the
    /// pivoted-LU route (exact in f64 for small dyadic-rational matrices).
    pub(crate) fn det_cofactor(m: &DMatrix<f64>) -> f64 {
        let n = m.nrows();
        if n == 1 {
            return m[(0, 0)];
        }
        let mut acc = 0.0;
        for j in 0..n {
            if m[(0, j)] == 0.0 {
                continue;
            }
            let minor = DMatrix::from_fn(n - 1, n - 1, |r, c| {
                m[(r + 1, if c < j { c } else { c + 1 })]
            });
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * m[(0, j)] * det_cofactor(&minor);
        }
        acc
    }

    fn cm_of(gamma: &DMatrix<f64>) -> BorderedMatrix {
        let d = gamma.nrows();
        BorderedMatrix::new(
            SymMatrix::from_upper(gamma * -0.5).unwrap(),
            DVector::from_element(d, 1.0),
            0.0,
        )
    }

    #[test]
    fn det_identity_case() {
        let m = SymMatrix::identity(1);
        assert_eq!(m.det(), 1.0);
    }

    #[test]
    fn det_bordered_d2_matches_hand_oracle() {
        // CM of a 2x2 variogram with off-diagonal g has determinant -g.
        for &g in &[0.5, 1.0, 2.5] {
            let gamma = DMatrix::from_row_slice(2, 2, &[0.0, g, g, 0.0]);
            let cm = cm_of(&gamma);
            assert_relative_eq!(cm.det(), -g, max_relative = 1e-13);
            assert_relative_eq!(det_cofactor(&cm.assemble()), -g, max_relative = 1e-13);
        }
    }

    #[test]
    fn det_bordered_d3_equilateral() {
        // all off-diagonal entries 1: exact 4x4 determinant is -3/4
        let gamma = DMatrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { 1.0 });
        let cm = cm_of(&gamma);
        assert_eq!(det_cofactor(&cm.assemble()), -0.75);
        assert_relative_eq!(cm.det(), -0.75, max_relative = 1e-13);
    }

    #[test]
    fn det_bordered_agrees_with_cofactor_on_random_instances() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        for _ in 0..20 {
            let d = rng.gen_range(2..=5);
            let raw = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-2.0..2.0));
            let sym = SymMatrix::from_upper(raw).unwrap();
            let b = DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
            let bm = BorderedMatrix::new(sym, b, rng.gen_range(-1.0..1.0));
            let lhs = bm.det();
            let rhs = det_cofactor(&bm.assemble());
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn pseudo_det_cases() {
        assert_relative_eq!(SymMatrix::identity(3).pseudo_det(1e-9).unwrap(), 1.0);
        // unit-weight 4-cycle Laplacian: eigenvalues 0, 2, 2, 4
        let lap = DMatrix::from_row_slice(
            4,
            4,
            &[
                2.0, -1.0, 0.0, -1.0, //
                -1.0, 2.0, -1.0, 0.0, //
                0.0, -1.0, 2.0, -1.0, //
                -1.0, 0.0, -1.0, 2.0,
            ],
        );
        let lap = SymMatrix::from_upper(lap).unwrap();
        assert_relative_eq!(lap.pseudo_det(1e-9).unwrap(), 16.0, max_relative = 1e-10);
        // rank-0 convention
        assert_eq!(SymMatrix::zeros(3).pseudo_det(1e-9).unwrap(), 1.0);
    }

    #[test]
    fn pseudo_det_of_ones_kernel_matches_principal_minor() {
        // For kernel span(1): Det(M) = dim * det(M with row/col k removed).
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        for _ in 0..10 {
            let d = rng.gen_range(2..=6);
            // random weighted Laplacian of the complete graph
            let mut m = DMatrix::zeros(d, d);
            for i in 0..d {
                for j in (i + 1)..d {
                    let w = rng.gen_range(0.2..2.0);
                    m[(i, j)] = -w;
                    m[(j, i)] = -w;
                    m[(i, i)] += w;
                    m[(j, j)] += w;
                }
            }
            let lap = SymMatrix::from_upper(m).unwrap();
            let pd = lap.pseudo_det(1e-9).unwrap();
            for k in 0..d {
                let keep = IndexSet::new((0..d).filter(|&i| i != k).collect());
                let minor = lap.principal(&keep).unwrap().det();
                assert_relative_eq!(pd, d as f64 * minor, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn eigen_sorted_and_reconstructs() {
        let m = SymMatrix::from_upper(DMatrix::from_row_slice(
            3,
            3,
            &[3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 2.0],
        ))
        .unwrap();
        let e = m.eigen().unwrap();
        assert_relative_eq!(e.values[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(e.values[1], 2.0, max_relative = 1e-12);
        assert_relative_eq!(e.values[2], 3.0, max_relative = 1e-12);

        let ones = SymMatrix::from_upper(DMatrix::from_element(3, 3, 1.0)).unwrap();
        let e = ones.eigen().unwrap();
        assert!(e.values[0].abs() < 1e-12 && e.values[1].abs() < 1e-12);
        assert_relative_eq!(e.values[2], 3.0, max_relative = 1e-12);
    }

    #[test]
    fn schur_complement_closed_forms() {
        let m =
            SymMatrix::from_upper(DMatrix::from_row_slice(2, 2, &[4.0, 1.5, 1.5, 2.0])).unwrap();
        // keep the full set: identity operation
        let full = IndexSet::full(2);
        assert_eq!(m.schur_complement(&full).unwrap(), m);
        // 2x2 [[a,b],[b,c]] onto {0}: a - b^2/c
        let s = m.schur_complement(&IndexSet::singleton(0)).unwrap();
        assert_relative_eq!(s.at(0, 0), 4.0 - 1.5 * 1.5 / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn schur_complement_nested_elimination() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        for _ in 0..10 {
            let d = 8;
            let a = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
            let spd = &a * a.transpose() + DMatrix::identity(d, d) * 0.5;
            let m = SymMatrix::from_upper(spd).unwrap();
            // eliminate {6,7} then {4,5} == eliminate {4,5,6,7}
            let keep1 = IndexSet::new((0..6).collect());
            let keep2 = IndexSet::new((0..4).collect());
            let step = m
                .schur_complement(&keep1)
                .unwrap()
                .schur_complement(&keep2)
                .unwrap();
            let direct = m.schur_complement(&keep2).unwrap();
            let diff = (step.as_dmatrix() - direct.as_dmatrix()).amax();
            assert!(
                diff <= 1e-10 * direct.amax().max(1.0),
                "nested elimination drifted: {diff}"
            );
        }
    }

    #[test]
    fn schur_of_cycle_laplacian_matches_hand_block() {
        // eliminating vertex 3 of the unit 4-cycle Laplacian; the same block
        // arises from inverting the Cayley-Menger matrix of the margin
        let lap = SymMatrix::from_upper(DMatrix::from_row_slice(
            4,
            4,
            &[
                2.0, -1.0, 0.0, -1.0, //
                -1.0, 2.0, -1.0, 0.0, //
                0.0, -1.0, 2.0, -1.0, //
                -1.0, 0.0, -1.0, 2.0,
            ],
        ))
        .unwrap();
        let keep = IndexSet::new(vec![0, 1, 3]);
        let s = lap.schur_complement(&keep).unwrap();
        let expected =
            DMatrix::from_row_slice(3, 3, &[2.0, -1.0, -1.0, -1.0, 1.5, -0.5, -1.0, -0.5, 1.5]);
        assert!((s.as_dmatrix() - expected).amax() < 1e-12);
    }

    #[test]
    fn schur_singular_block_detected() {
        let m = SymMatrix::zeros(3);
        let err = m.schur_complement(&IndexSet::singleton(0)).unwrap_err();
        assert_eq!(err, MatrixError::SingularBlock);
    }

    #[test]
    fn complement_basis_is_orthonormal() {
        let v = DVector::from_vec(vec![1.0, 1.0, 1.0, 1.0]);
        let q = orthonormal_complement(&v);
        assert_eq!(q.ncols(), 3);
        let gram = q.transpose() * &q;
        assert!((gram - DMatrix::identity(3, 3)).amax() < 1e-12);
        assert!((q.transpose() * &v).amax() < 1e-12);
    }

    #[test]
    fn projected_equilateral_eigenvalues() {
        // -G/2 restricted to the complement of span(1), all off-diagonal 1:
        // both eigenvalues are 1/2.
        let gamma = DMatrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { 1.0 });
        let q = orthonormal_complement(&DVector::from_element(3, 1.0));
        let projected = q.transpose() * (gamma * -0.5) * &q;
        let e = eigen_sym(&projected).unwrap();
        assert_relative_eq!(e.values[0], 0.5, max_relative = 1e-12);
        assert_relative_eq!(e.values[1], 0.5, max_relative = 1e-12);
    }
}
