use nalgebra::DMatrix;

use super::{project_dual, project_dual_mat, DualTangentVector, StiefelPoint};
use crate::error::{dim_err, Error, Result};
use crate::linalg::{solve_in_place, DenseMatrix};

/// Cayley retraction along a fixed direction, with the `O(nk²)` Gram blocks
/// computed once so that each new scale costs one `2k×2k` solve and two
/// `n×k·k×k` products. This is what the line search uses.
///
/// With `U = [aW, X]`, `Z = [X, −aW]` and `a = scale/2`,
/// `R(X, φ_g(scale·W)) = X + 2U(I − ZᵀU)⁻¹ZᵀX`.
pub struct CayleyStep<'a> {
    base: &'a StiefelPoint,
    w: &'a DMatrix<f64>,
    xtx: DMatrix<f64>,
    xtw: DMatrix<f64>,
    wtw: DMatrix<f64>,
}

impl<'a> CayleyStep<'a> {
    pub fn new(direction: &'a DualTangentVector) -> Self {
        Self::from_parts(direction.base(), direction.mat())
    }

    fn from_parts(base: &'a StiefelPoint, w: &'a DMatrix<f64>) -> Self {
        let x = base.mat();
        Self {
            base,
            w,
            xtx: x.tr_mul(x),
            xtw: x.tr_mul(w),
            wtw: w.tr_mul(w),
        }
    }

    pub fn at(&self, scale: f64) -> Result<StiefelPoint> {
        if !scale.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite retraction scale {scale}")));
        }
        if scale == 0.0 {
            return Ok(self.base.clone());
        }
        let k = self.base.k();
        let a = 0.5 * scale;
        let wtx = self.xtw.transpose();

        let mut system = DMatrix::<f64>::zeros(2 * k, 2 * k);
        let mut rhs = DMatrix::<f64>::zeros(2 * k, k);
        for i in 0..k {
            for j in 0..k {
                let id = if i == j { 1.0 } else { 0.0 };
                system[(i, j)] = id - a * self.xtw[(i, j)];
                system[(i, k + j)] = -self.xtx[(i, j)];
                system[(k + i, j)] = a * a * self.wtw[(i, j)];
                system[(k + i, k + j)] = id + a * wtx[(i, j)];
                rhs[(i, j)] = self.xtx[(i, j)];
                rhs[(k + i, j)] = -a * wtx[(i, j)];
            }
        }
        let sol = solve_in_place(system, rhs).map_err(|_| Error::RetractionFailed)?;
        let top = sol.rows(0, k);
        let mut bottom = sol.rows(k, k) * 2.0;
        for i in 0..k {
            bottom[(i, i)] += 1.0;
        }

        // X(I + 2B) + 2a·W·T
        let mut out = self.base.mat() * bottom;
        out.gemm(2.0 * a, self.w, &top, 1.0);
        StiefelPoint::from_dmatrix(out).map_err(|_| Error::RetractionFailed)
    }
}

/// `R₁(X, φ_g(scale·W))`, the Cayley retraction evaluated through the
/// Sherman–Morrison–Woodbury form; only a `2k×2k` system is solved.
pub fn cayley_retract(base: &StiefelPoint, w: &DualTangentVector, scale: f64) -> Result<StiefelPoint> {
    if !w.base().same_point(base) {
        return Err(Error::BaseMismatch);
    }
    CayleyStep::new(w).at(scale)
}

/// Cayley retraction for an arbitrary `n×k` matrix, read as a dual vector
/// through its orthogonal projection.
pub fn cayley_retract_raw(base: &StiefelPoint, raw: &DenseMatrix, scale: f64) -> Result<StiefelPoint> {
    let w = project_dual(base, raw)?;
    cayley_retract(base, &w, scale)
}

/// Dual vector `V` at `base` with `cayley_retract(base, V, 1) = target`:
/// `V = 2Y(I + XᵀY)⁻¹`, projected onto the dual tangent space at `X`.
pub fn retract_inverse(base: &StiefelPoint, target: &StiefelPoint) -> Result<DualTangentVector> {
    if base.n() != target.n() || base.k() != target.k() {
        return Err(dim_err(
            "retract_inverse",
            format!(
                "base is {}×{}, target is {}×{}",
                base.n(),
                base.k(),
                target.n(),
                target.k()
            ),
        ));
    }
    let x = base.mat();
    let y = target.mat();
    let k = base.k();
    let mut m = x.tr_mul(y);
    for i in 0..k {
        m[(i, i)] += 1.0;
    }
    let inv = solve_in_place(m, DMatrix::identity(k, k)).map_err(|_| Error::InverseRetractionFailed)?;
    let v = y * inv * 2.0;
    Ok(DualTangentVector::new_unchecked(base, project_dual_mat(x, v)))
}

/// Interpolation (`0 < α < 1`) or extrapolation along the Cayley curve
/// through `base` and `target`: the manifold analogue of `(1 − α)X + αY`.
pub fn lerp(base: &StiefelPoint, target: &StiefelPoint, alpha: f64) -> Result<StiefelPoint> {
    let v = retract_inverse(base, target)?;
    cayley_retract(base, &v, alpha)
}
