//! Relative tolerance policy shared by every vanishing-quantity decision.
//!
//! All conditional-independence criteria in this crate reduce to "is this
//! determinant (or gap, or entry) zero". A quantity `x` counts as zero at
//! scale `s` when `|x| <= rel * max(1, s)`; residuals between that threshold
//! and ten times it fall into an indeterminate band and are reported rather
//! than silently classified.

/// Default relative tolerance.
pub const DEFAULT_REL_TOL: f64 = 1e-9;

/// Relative tolerance configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tol {
    /// Relative tolerance; thresholds are `rel * max(1, scale)`.
    pub rel: f64,
}

impl Default for Tol {
    fn default() -> Self {
        Self {
            rel: DEFAULT_REL_TOL,
        }
    }
}

/// Trichotomy of a residual against the tolerance band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroClass {
    /// At or below the zero threshold.
    Zero,
    /// Inside the indeterminate band `(t, 10t]`.
    Band,
    /// Clearly nonzero.
    NonZero,
}

impl Tol {
    pub fn new(rel: f64) -> Self {
        assert!(
            rel > 0.0 && rel < 0.1,
            "relative tolerance out of range: {rel}"
        );
        Self { rel }
    }

    /// Absolute threshold at the given scale, floored at scale one.
    pub fn threshold(&self, scale: f64) -> f64 {
        self.rel * scale.max(1.0)
    }

    /// Zero test with the floored scale.
    pub fn is_zero(&self, x: f64, scale: f64) -> bool {
        x.abs() <= self.threshold(scale)
    }

    /// Classify a residual at the given scale into the tolerance trichotomy.
    pub fn classify(&self, x: f64, scale: f64) -> ZeroClass {
        let t = self.threshold(scale);
        let a = x.abs();
        if a <= t {
            ZeroClass::Zero
        } else if a <= 10.0 * t {
            ZeroClass::Band
        } else {
            ZeroClass::NonZero
        }
    }

    /// Classify an already scale-free ratio (no flooring applied).
    pub fn classify_ratio(&self, r: f64) -> ZeroClass {
        let a = r.abs();
        if a <= self.rel {
            ZeroClass::Zero
        } else if a <= 10.0 * self.rel {
            ZeroClass::Band
        } else {
            ZeroClass::NonZero
        }
    }
}
