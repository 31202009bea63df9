//! The JSON model-file format: a dimension, a kind tag, and a dense matrix.
//!
//! Schema errors (shape, asymmetry beyond 1e-12, unreadable JSON) are exit
//! code 1; a well-formed file whose matrix fails the semantic checks (not a
//! variogram, bad precision kernel) is exit code 2.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

use hrmod_core::linalg::SymMatrix;
use hrmod_core::model::{validate_variogram, variogram_from_precision, ValidationError, Variogram};
use hrmod_core::tol::Tol;

pub const SCHEMA_SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Variogram,
    Precision,
}

impl ModelKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ModelKind::Variogram => "variogram",
            ModelKind::Precision => "precision",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub d: usize,
    pub kind: ModelKind,
    pub matrix: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

/// A loaded model file together with its content digest.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub file: ModelFile,
    pub sha256: String,
    pub path: String,
}

impl ModelFile {
    pub fn from_matrix(kind: ModelKind, m: &DMatrix<f64>, name: Option<String>) -> Self {
        let d = m.nrows();
        let matrix = (0..d)
            .map(|i| (0..d).map(|j| m[(i, j)]).collect())
            .collect();
        Self {
            d,
            kind,
            matrix,
            name,
        }
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.d, self.d, |i, j| self.matrix[i][j])
    }

    /// Structural checks: d x d, finite entries, symmetric within 1e-12.
    pub fn check_schema(&self) -> Result<(), String> {
        if self.d == 0 {
            return Err("d must be positive".into());
        }
        if self.matrix.len() != self.d {
            return Err(format!(
                "matrix has {} rows, expected {}",
                self.matrix.len(),
                self.d
            ));
        }
        for (i, row) in self.matrix.iter().enumerate() {
            if row.len() != self.d {
                return Err(format!(
                    "row {} has {} entries, expected {}",
                    i + 1,
                    row.len(),
                    self.d
                ));
            }
            for (j, x) in row.iter().enumerate() {
                if !x.is_finite() {
                    return Err(format!("entry ({},{}) is not finite", i + 1, j + 1));
                }
            }
        }
        let mut amax = 1.0f64;
        for row in &self.matrix {
            for &x in row {
                amax = amax.max(x.abs());
            }
        }
        for i in 0..self.d {
            for j in 0..i {
                let asym = (self.matrix[i][j] - self.matrix[j][i]).abs();
                if asym > SCHEMA_SYMMETRY_TOL * amax {
                    return Err(format!(
                        "matrix is not symmetric: |m[{}][{}] - m[{}][{}]| = {asym:e}",
                        i + 1,
                        j + 1,
                        j + 1,
                        i + 1
                    ));
                }
            }
        }
        Ok(())
    }

    /// Semantic conversion into a certified variogram. Precision inputs run
    /// through the kernel checks and the spectral pseudoinverse.
    pub fn to_variogram(&self, tol: Tol) -> Result<Variogram, ValidationError> {
        let m = self.to_dmatrix();
        match self.kind {
            ModelKind::Variogram => validate_variogram(&m, tol),
            ModelKind::Precision => {
                let sym = SymMatrix::from_upper(m).map_err(|_| ValidationError::NotSquare {
                    rows: self.d,
                    cols: self.d,
                })?;
                variogram_from_precision(&sym, tol)
            }
        }
    }
}

/// Stable short code for a semantic validation failure.
pub fn validation_code(e: &ValidationError) -> &'static str {
    match e {
        ValidationError::NotSquare { .. } => "NotSquare",
        ValidationError::DimensionTooSmall { .. } => "DimensionTooSmall",
        ValidationError::NotSymmetric { .. } => "NotSymmetric",
        ValidationError::NonzeroDiagonal { .. } => "NonzeroDiagonal",
        ValidationError::NotCnd { .. } => "NotCnd",
        ValidationError::NonPositiveOffDiagonal { .. } => "NonPositiveOffDiagonal",
        ValidationError::BadKernel { .. } => "BadKernel",
        ValidationError::RoundTripFailure { .. } => "RoundTripFailure",
    }
}

pub fn load(path: &Path) -> Result<LoadedModel, String> {
    let bytes = std::fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let sha256 = hex_digest(&bytes);
    let file: ModelFile = serde_json::from_slice(&bytes)
        .map_err(|e| format!("cannot parse {}: {e}", path.display()))?;
    file.check_schema()?;
    Ok(LoadedModel {
        file,
        sha256,
        path: path.display().to_string(),
    })
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}
