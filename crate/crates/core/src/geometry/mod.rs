//! Geometry of the Stiefel manifold `S(n, k) = {X ∈ ℝⁿˣᵏ : XᵀX = I}` under the
//! canonical (quotient) metric.
//!
//! Gradients and momentum directions are carried as dual tangent vectors
//! ([`DualTangentVector`]); a tangent vector ([`TangentVector`]) only appears
//! after raising indices. Both spaces are represented by the same set of
//! matrices `{W : WᵀX + XᵀW = 0}`, but they carry different inner products:
//!
//! ```text
//! g(Y, Z)  = Tr(Yᵀ (I − ½XXᵀ) Z)      tangent vectors
//! g*(Y, Z) = Tr(Yᵀ (I + XXᵀ) Z)       dual tangent vectors
//! ```

mod geodesic;
mod retraction;

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{dim_err, Error, Result};
use crate::linalg::{qr_thin, DenseMatrix};

pub use geodesic::geodesic_retract;
pub use retraction::{cayley_retract, cayley_retract_raw, lerp, retract_inverse, CayleyStep};

/// Construction tolerance for the point and tangent-space invariants.
pub const INVARIANT_TOL: f64 = 1e-8;

/// An `n×k` matrix with orthonormal columns.
///
/// Cloning is cheap; the matrix is shared.
#[derive(Clone, Debug)]
pub struct StiefelPoint {
    x: Arc<DenseMatrix>,
    orth_error: f64,
}

impl StiefelPoint {
    /// Validates `‖xᵀx − I‖_F ≤ 1e-8`.
    pub fn new(x: DenseMatrix) -> Result<Self> {
        if x.cols() > x.rows() {
            return Err(dim_err(
                "StiefelPoint::new",
                format!("k = {} exceeds n = {}", x.cols(), x.rows()),
            ));
        }
        let orth_error = orthonormality_error(&x.0);
        if !(orth_error <= INVARIANT_TOL) {
            return Err(Error::NotOrthonormal { error: orth_error });
        }
        Ok(Self {
            x: Arc::new(x),
            orth_error,
        })
    }

    pub(crate) fn from_dmatrix(x: DMatrix<f64>) -> Result<Self> {
        Self::new(DenseMatrix(x))
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.x
    }

    pub(crate) fn mat(&self) -> &DMatrix<f64> {
        &self.x.0
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn k(&self) -> usize {
        self.x.cols()
    }

    /// `‖XᵀX − I‖_F`, measured when the point was built.
    pub fn orthonormality_error(&self) -> f64 {
        self.orth_error
    }

    /// True when both points are the same matrix (shared or equal entries).
    pub fn same_point(&self, other: &StiefelPoint) -> bool {
        Arc::ptr_eq(&self.x, &other.x) || self.x == other.x
    }
}

fn orthonormality_error(x: &DMatrix<f64>) -> f64 {
    let mut g = x.tr_mul(x);
    for i in 0..g.nrows() {
        g[(i, i)] -= 1.0;
    }
    g.norm()
}

fn symmetric_part_norm(x: &DMatrix<f64>, w: &DMatrix<f64>) -> f64 {
    let s = x.tr_mul(w);
    (&s + s.transpose()).norm()
}

fn check_tangent(base: &StiefelPoint, m: &DenseMatrix) -> Result<()> {
    if m.rows() != base.n() || m.cols() != base.k() {
        return Err(dim_err(
            "tangent vector",
            format!("{}×{} matrix at a {}×{} base", m.rows(), m.cols(), base.n(), base.k()),
        ));
    }
    let err = symmetric_part_norm(base.mat(), &m.0);
    if !(err <= INVARIANT_TOL * m.frobenius_norm().max(1.0)) {
        return Err(Error::NotTangent { error: err });
    }
    Ok(())
}

/// A covector at `base`: `WᵀX + XᵀW = 0`, paired with tangents via `Tr(VᵀW)`.
#[derive(Clone, Debug)]
pub struct DualTangentVector {
    w: DenseMatrix,
    base: StiefelPoint,
}

impl DualTangentVector {
    pub fn new(base: &StiefelPoint, w: DenseMatrix) -> Result<Self> {
        check_tangent(base, &w)?;
        Ok(Self { w, base: base.clone() })
    }

    pub(crate) fn new_unchecked(base: &StiefelPoint, w: DMatrix<f64>) -> Self {
        Self {
            w: DenseMatrix(w),
            base: base.clone(),
        }
    }

    pub fn zero(base: &StiefelPoint) -> Self {
        Self::new_unchecked(base, DMatrix::zeros(base.n(), base.k()))
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.w
    }

    pub(crate) fn mat(&self) -> &DMatrix<f64> {
        &self.w.0
    }

    pub fn base(&self) -> &StiefelPoint {
        &self.base
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new_unchecked(&self.base, &self.w.0 * s)
    }

    /// `‖W‖²_{g*} = ‖W‖²_F + ‖XᵀW‖²_F`.
    pub fn norm_squared(&self) -> f64 {
        self.w.0.norm_squared() + self.base.mat().tr_mul(&self.w.0).norm_squared()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }
}

/// A tangent vector at `base`: `VᵀX + XᵀV = 0`.
#[derive(Clone, Debug)]
pub struct TangentVector {
    v: DenseMatrix,
    base: StiefelPoint,
}

impl TangentVector {
    pub fn new(base: &StiefelPoint, v: DenseMatrix) -> Result<Self> {
        check_tangent(base, &v)?;
        Ok(Self { v, base: base.clone() })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.v
    }

    pub fn base(&self) -> &StiefelPoint {
        &self.base
    }
}

/// Uniformly distributed point: thin QR of a seeded standard Gaussian `n×k`
/// matrix with `diag(R) ≥ 0`.
pub fn random_point(n: usize, k: usize, seed: u64) -> Result<StiefelPoint> {
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "random_point needs 1 ≤ k ≤ n, got n = {n}, k = {k}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries: Vec<f64> = (0..n * k).map(|_| StandardNormal.sample(&mut rng)).collect();
    let gaussian = DenseMatrix::from_column_major(n, k, entries)?;
    let (q, _) = qr_thin(&gaussian)?;
    StiefelPoint::new(q)
}

/// Orthogonal projection onto the dual tangent space: `W − ½X(WᵀX + XᵀW)`.
pub fn project_dual(base: &StiefelPoint, raw: &DenseMatrix) -> Result<DualTangentVector> {
    if raw.rows() != base.n() || raw.cols() != base.k() {
        return Err(dim_err(
            "project_dual",
            format!(
                "{}×{} matrix at a {}×{} base",
                raw.rows(),
                raw.cols(),
                base.n(),
                base.k()
            ),
        ));
    }
    Ok(DualTangentVector::new_unchecked(
        base,
        project_dual_mat(base.mat(), raw.0.clone()),
    ))
}

pub(crate) fn project_dual_mat(x: &DMatrix<f64>, mut w: DMatrix<f64>) -> DMatrix<f64> {
    let s = x.tr_mul(&w);
    let sym = &s + s.transpose();
    w.gemm(-0.5, x, &sym, 1.0);
    w
}

/// Canonical metric `Tr(Y₁ᵀ(I − ½XXᵀ)Y₂)`.
pub fn metric(y1: &TangentVector, y2: &TangentVector) -> Result<f64> {
    if !y1.base.same_point(&y2.base) {
        return Err(Error::BaseMismatch);
    }
    let x = y1.base.mat();
    let a = x.tr_mul(&y1.v.0);
    let b = x.tr_mul(&y2.v.0);
    Ok(y1.v.0.dot(&y2.v.0) - 0.5 * a.dot(&b))
}

/// Dual metric `Tr(W₁ᵀ(I + XXᵀ)W₂)`.
pub fn dual_metric(w1: &DualTangentVector, w2: &DualTangentVector) -> Result<f64> {
    if !w1.base.same_point(&w2.base) {
        return Err(Error::BaseMismatch);
    }
    Ok(dual_pairing(w1.base.mat(), w1.mat(), w2.mat()))
}

pub(crate) fn dual_pairing(x: &DMatrix<f64>, w1: &DMatrix<f64>, w2: &DMatrix<f64>) -> f64 {
    let a = x.tr_mul(w1);
    let b = x.tr_mul(w2);
    w1.dot(w2) + a.dot(&b)
}

/// `φ_g(W) = (I + XXᵀ)W`.
pub fn raise_indices(w: &DualTangentVector) -> TangentVector {
    let x = w.base.mat();
    let mut v = w.w.0.clone();
    v.gemm(1.0, x, &x.tr_mul(&w.w.0), 1.0);
    TangentVector {
        v: DenseMatrix(v),
        base: w.base.clone(),
    }
}

/// `φ_g⁻¹(V) = (I − ½XXᵀ)V`.
pub fn lower_indices(v: &TangentVector) -> DualTangentVector {
    let x = v.base.mat();
    let mut w = v.v.0.clone();
    w.gemm(-0.5, x, &x.tr_mul(&v.v.0), 1.0);
    DualTangentVector::new_unchecked(&v.base, w)
}
