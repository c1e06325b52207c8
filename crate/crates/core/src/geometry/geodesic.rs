use nalgebra::DMatrix;

use super::{DualTangentVector, StiefelPoint};
use crate::error::{Error, Result};
use crate::linalg::expm_small;

/// Exact geodesic of the canonical metric, `X(t) = exp(t(WXᵀ − XWᵀ))X`.
///
/// The generator has rank at most `2k`. With an orthonormal frame `Q` for
/// `span[X, W]` it equals `Q·S·Qᵀ` for a small skew `S`, so only a
/// `(≤2k)×(≤2k)` exponential is formed: `X(t) = X + Q(exp(tS) − I)QᵀX`.
pub fn geodesic_retract(base: &StiefelPoint, w: &DualTangentVector, t: f64) -> Result<StiefelPoint> {
    if !w.base().same_point(base) {
        return Err(Error::BaseMismatch);
    }
    if !t.is_finite() {
        return Err(Error::InvalidInput(format!("non-finite geodesic time {t}")));
    }
    if t == 0.0 {
        return Ok(base.clone());
    }
    let x = base.mat();
    let frame = frame_for(x, w.mat());
    let c = frame.tr_mul(x);
    let d = frame.tr_mul(w.mat());
    let s = (&d * c.transpose() - &c * d.transpose()) * t;
    let mut e = expm_small(&s)?;
    for i in 0..e.nrows() {
        e[(i, i)] -= 1.0;
    }
    let mut out = x.clone();
    out.gemm(1.0, &frame, &(e * c), 1.0);
    StiefelPoint::from_dmatrix(out)
}

/// `[X, Q₂]` with `Q₂` an orthonormal basis for the part of `W` outside
/// `span(X)`. Gram–Schmidt is run twice per column; numerically dependent
/// columns are dropped, so the frame has between `k` and `2k` columns.
fn frame_for(x: &DMatrix<f64>, w: &DMatrix<f64>) -> DMatrix<f64> {
    let k = x.ncols();
    let drop_tol = 1e-12 * w.norm().max(f64::MIN_POSITIVE);
    let mut columns: Vec<nalgebra::DVector<f64>> = (0..k).map(|j| x.column(j).into_owned()).collect();
    for j in 0..k {
        let mut v = w.column(j).into_owned();
        for _pass in 0..2 {
            for q in &columns {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
        }
        let norm = v.norm();
        if norm > drop_tol {
            columns.push(v / norm);
        }
    }
    DMatrix::from_columns(&columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{cayley_retract, project_dual, random_point};
    use crate::linalg::DenseMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_time_is_base() {
        let x = random_point(7, 2, 3).unwrap();
        let w = DualTangentVector::zero(&x);
        assert_eq!(geodesic_retract(&x, &w, 0.0).unwrap().matrix(), x.matrix());
        // A zero direction also stays put for t ≠ 0.
        let y = geodesic_retract(&x, &w, 1.3).unwrap();
        assert!(y.matrix().max_abs_diff(x.matrix()) <= 1e-15);
    }

    #[test]
    fn circle_is_rotation() {
        let x = StiefelPoint::new(DenseMatrix::from_column_major(2, 1, vec![1.0, 0.0]).unwrap()).unwrap();
        let w = DualTangentVector::new(&x, DenseMatrix::from_column_major(2, 1, vec![0.0, 1.0]).unwrap()).unwrap();
        for &t in &[0.1, 1.0, 2.5, -4.0, 10.0] {
            let y = geodesic_retract(&x, &w, t).unwrap();
            assert!((y.matrix().get(0, 0) - t.cos()).abs() <= 1e-13);
            assert!((y.matrix().get(1, 0) - t.sin()).abs() <= 1e-13);
        }
    }

    #[test]
    fn direction_inside_span_of_base() {
        // W = XΩ with Ω skew: the frame keeps only X.
        let x = random_point(6, 3, 4).unwrap();
        let omega = DMatrix::from_row_slice(3, 3, &[0.0, 0.5, -0.2, -0.5, 0.0, 0.3, 0.2, -0.3, 0.0]);
        let w = DualTangentVector::new(&x, DenseMatrix::from(x.mat() * &omega)).unwrap();
        let y = geodesic_retract(&x, &w, 1.0).unwrap();
        assert!(y.orthonormality_error() <= 1e-12);
    }

    #[test]
    fn stays_orthonormal_for_long_steps() {
        let x = random_point(50, 5, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let raw = DenseMatrix::from_fn(50, 5, |_, _| rng.random_range(-1.0..1.0));
        let w = project_dual(&x, &raw).unwrap();
        let y = geodesic_retract(&x, &w, 3.0).unwrap();
        assert!(y.orthonormality_error() <= 1e-12);
    }

    #[test]
    fn agrees_with_cayley_to_second_order() {
        let x = random_point(20, 3, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let raw = DenseMatrix::from_fn(20, 3, |_, _| rng.random_range(-1.0..1.0));
        let w = project_dual(&x, &raw).unwrap();
        let gap = |t: f64| {
            let g = geodesic_retract(&x, &w, t).unwrap();
            let c = cayley_retract(&x, &w, t).unwrap();
            (g.mat() - c.mat()).norm()
        };
        let (e1, e2) = (gap(1e-2), gap(5e-3));
        // Both curves share the first two Taylor terms, so the gap is O(t³).
        assert!(e1 / e2 >= 4.0, "ratio {}", e1 / e2);
        assert!(e1 <= 1e-2 * 1e-2);
    }
}
