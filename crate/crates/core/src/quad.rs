//! Grid cubature on axis-aligned boxes (composite Simpson per axis).
//!
//! Verification-grade utility backing the integral representations and the
//! density-normalization checks; not a production integrator. Dimensions up
//! to three are supported, which is all the integral representations allow.

/// Composite Simpson weights for `panels` (even) panels over `[lo, hi]`.
fn simpson_axis(lo: f64, hi: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(
        panels >= 2 && panels.is_multiple_of(2),
        "panel count must be even and >= 2"
    );
    let h = (hi - lo) / panels as f64;
    let nodes: Vec<f64> = (0..=panels).map(|i| lo + h * i as f64).collect();
    let weights: Vec<f64> = (0..=panels)
        .map(|i| {
            let w = if i == 0 || i == panels {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect();
    (nodes, weights)
}

/// Integrate `f` over the box `lo x hi` with the given per-axis panel counts.
pub fn simpson_box(
    lo: &[f64],
    hi: &[f64],
    panels: &[usize],
    mut f: impl FnMut(&[f64]) -> f64,
) -> f64 {
    let dim = lo.len();
    assert!((1..=3).contains(&dim), "cubature supports dimensions 1..=3");
    assert_eq!(hi.len(), dim);
    assert_eq!(panels.len(), dim);
    let axes: Vec<(Vec<f64>, Vec<f64>)> = (0..dim)
        .map(|a| simpson_axis(lo[a], hi[a], panels[a]))
        .collect();
    let mut point = [0.0f64; 3];
    let mut total = 0.0;
    match dim {
        1 => {
            let (xs, wx) = &axes[0];
            for (x, w) in xs.iter().zip(wx) {
                point[0] = *x;
                total += w * f(&point[..1]);
            }
        }
        2 => {
            let (xs, wx) = &axes[0];
            let (ys, wy) = &axes[1];
            for (x, w0) in xs.iter().zip(wx) {
                point[0] = *x;
                let mut inner = 0.0;
                for (y, w1) in ys.iter().zip(wy) {
                    point[1] = *y;
                    inner += w1 * f(&point[..2]);
                }
                total += w0 * inner;
            }
        }
        3 => {
            let (xs, wx) = &axes[0];
            let (ys, wy) = &axes[1];
            let (zs, wz) = &axes[2];
            for (x, w0) in xs.iter().zip(wx) {
                point[0] = *x;
                let mut mid = 0.0;
                for (y, w1) in ys.iter().zip(wy) {
                    point[1] = *y;
                    let mut inner = 0.0;
                    for (z, w2) in zs.iter().zip(wz) {
                        point[2] = *z;
                        inner += w2 * f(&point[..3]);
                    }
                    mid += w1 * inner;
                }
                total += w0 * mid;
            }
        }
        _ => unreachable!(),
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integrates_polynomials_exactly() {
        // Simpson is exact for cubics
        let v = simpson_box(&[0.0], &[2.0], &[8], |x| x[0] * x[0] * x[0]);
        assert_relative_eq!(v, 4.0, max_relative = 1e-13);
    }

    #[test]
    fn integrates_separable_gaussian() {
        let c = 1.0 / (2.0 * std::f64::consts::PI);
        let v = simpson_box(&[-8.0, -8.0], &[8.0, 8.0], &[128, 128], |x| {
            c * (-0.5 * (x[0] * x[0] + x[1] * x[1])).exp()
        });
        assert_relative_eq!(v, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn integrates_exponential_tail() {
        let v = simpson_box(&[0.0], &[38.0], &[256], |x| (-x[0]).exp());
        assert_relative_eq!(v, 1.0, max_relative = 1e-4);
    }
}
