//! Dense linear algebra used by the manifold geometry and the solvers.
//!
//! [`DenseMatrix`] stores its entries in **column-major** order. It wraps a
//! `nalgebra::DMatrix<f64>`, which supplies the blocked matrix products and the
//! Householder QR. The small LU solve and the Jacobi eigensolver are written
//! out here: the solve needs a singularity test we control, and the
//! eigensolver serves as an independent oracle in tests.

use nalgebra::DMatrix;

use crate::error::{dim_err, Error, Result};

/// Real matrix, column-major, immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix(pub(crate) DMatrix<f64>);

impl DenseMatrix {
    /// Builds a matrix from column-major entries, rejecting NaN/Inf.
    pub fn from_column_major(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!(
                "matrix must be non-empty, got {rows}×{cols}"
            )));
        }
        if entries.len() != rows * cols {
            return Err(dim_err(
                "from_column_major",
                format!("{} entries for a {rows}×{cols} matrix", entries.len()),
            ));
        }
        if let Some(bad) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite entry at column-major index {bad}"
            )));
        }
        Ok(Self(DMatrix::from_vec(rows, cols, entries)))
    }

    /// Builds a matrix from a list of rows, rejecting ragged input and NaN/Inf.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(dim_err("from_rows", "ragged rows"));
        }
        let mut entries = Vec::with_capacity(nrows * ncols);
        for j in 0..ncols {
            entries.extend(rows.iter().map(|r| r[j]));
        }
        Self::from_column_major(nrows, ncols, entries)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Self(DMatrix::from_fn(n, n, |i, j| if i == j { values[i] } else { 0.0 }))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> f64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    /// Entries in column-major order.
    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.0[(i, j)]).collect())
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.0.column(j).iter().copied().collect()
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(&self.0 * s)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "add")?;
        Ok(Self(&self.0 + &other.0))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other, "sub")?;
        Ok(Self(&self.0 - &other.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    fn check_same_shape(&self, other: &Self, op: &'static str) -> Result<()> {
        if self.0.shape() != other.0.shape() {
            return Err(dim_err(op, format!("{:?} vs {:?}", self.0.shape(), other.0.shape())));
        }
        Ok(())
    }
}

impl From<DMatrix<f64>> for DenseMatrix {
    fn from(m: DMatrix<f64>) -> Self {
        Self(m)
    }
}

pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols() != b.rows() {
        return Err(dim_err(
            "matmul",
            format!("{}×{} times {}×{}", a.rows(), a.cols(), b.rows(), b.cols()),
        ));
    }
    Ok(DenseMatrix(&a.0 * &b.0))
}

/// Solves `a·x = b` by LU with partial pivoting. Meant for the small
/// (k×k and 2k×2k) systems that show up in the retractions.
pub fn solve_square(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.rows() != a.cols() || b.rows() != a.rows() {
        return Err(dim_err(
            "solve_square",
            format!("a is {}×{}, b is {}×{}", a.rows(), a.cols(), b.rows(), b.cols()),
        ));
    }
    solve_in_place(a.0.clone(), b.0.clone()).map(DenseMatrix)
}

/// LU solve on owned storage; the pivot threshold is `m·ε·max|a|`.
pub(crate) fn solve_in_place(mut lu: DMatrix<f64>, mut rhs: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = lu.nrows();
    let scale = lu.amax();
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::SingularMatrix);
    }
    let tiny = m as f64 * f64::EPSILON * scale;

    for col in 0..m {
        let (offset, pivot) =
            lu.view((col, col), (m - col, 1))
                .iter()
                .enumerate()
                .fold(
                    (0, 0.0_f64),
                    |best, (i, v)| {
                        if v.abs() > best.1 {
                            (i, v.abs())
                        } else {
                            best
                        }
                    },
                );
        if pivot <= tiny {
            return Err(Error::SingularMatrix);
        }
        let p = col + offset;
        if p != col {
            lu.swap_rows(p, col);
            rhs.swap_rows(p, col);
        }
        let d = lu[(col, col)];
        for r in col + 1..m {
            let factor = lu[(r, col)] / d;
            if factor == 0.0 {
                continue;
            }
            lu[(r, col)] = factor;
            for c in col + 1..m {
                lu[(r, c)] -= factor * lu[(col, c)];
            }
            for c in 0..rhs.ncols() {
                rhs[(r, c)] -= factor * rhs[(col, c)];
            }
        }
    }

    for c in 0..rhs.ncols() {
        for r in (0..m).rev() {
            let mut acc = rhs[(r, c)];
            for j in r + 1..m {
                acc -= lu[(r, j)] * rhs[(j, c)];
            }
            rhs[(r, c)] = acc / lu[(r, r)];
        }
    }
    Ok(rhs)
}

/// Thin QR with the sign convention `diag(r) ≥ 0`.
pub fn qr_thin(a: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let (n, k) = (a.rows(), a.cols());
    if n < k {
        return Err(dim_err("qr_thin", format!("need rows ≥ cols, got {n}×{k}")));
    }
    let qr = a.0.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    let tol = (n.max(k) as f64) * f64::EPSILON * a.frobenius_norm().max(f64::MIN_POSITIVE);
    for j in 0..k {
        if r[(j, j)].abs() <= tol {
            return Err(Error::RankDeficient { column: j });
        }
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
            r.row_mut(j).neg_mut();
        }
    }
    Ok((DenseMatrix(q), DenseMatrix(r)))
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as columns.
pub fn jacobi_eigh(a: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let m = a.rows();
    if a.cols() != m {
        return Err(dim_err("jacobi_eigh", format!("{}×{} is not square", m, a.cols())));
    }
    let norm = a.frobenius_norm();
    let asym = (&a.0 - a.0.transpose()).norm();
    if asym > 1e-12 * norm {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }

    let mut s = a.0.clone();
    let mut v = DMatrix::<f64>::identity(m, m);
    for _sweep in 0..100 {
        let off: f64 = (0..m)
            .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| s[(i, j)] * s[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= f64::EPSILON * norm * 1e-2 || off == 0.0 {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                let apq = s[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (s[(q, q)] - s[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                // S ← JᵀSJ with J the (p, q) rotation.
                for k in 0..m {
                    let skp = s[(k, p)];
                    let skq = s[(k, q)];
                    s[(k, p)] = c * skp - sn * skq;
                    s[(k, q)] = sn * skp + c * skq;
                }
                for k in 0..m {
                    let spk = s[(p, k)];
                    let sqk = s[(q, k)];
                    s[(p, k)] = c * spk - sn * sqk;
                    s[(q, k)] = sn * spk + c * sqk;
                }
                for k in 0..m {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| s[(i, i)].total_cmp(&s[(j, j)]));
    let values = order.iter().map(|&i| s[(i, i)]).collect();
    let vectors = DMatrix::from_fn(m, m, |r, c| v[(r, order[c])]);
    Ok((values, DenseMatrix(vectors)))
}

/// `exp(s)` for a small square matrix: scaling and squaring around a
/// diagonal [6/6] Padé approximant. For skew-symmetric `s` the approximant
/// is exactly orthogonal, so only rounding perturbs orthogonality.
pub(crate) fn expm_small(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    const DEGREE: usize = 6;
    let m = s.nrows();
    let norm1 = (0..m)
        .map(|j| s.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > 0.5 {
        (norm1 / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = s / 2f64.powi(squarings);

    let mut coeff = 1.0;
    let mut power = DMatrix::<f64>::identity(m, m);
    let mut num = DMatrix::<f64>::identity(m, m);
    let mut den = DMatrix::<f64>::identity(m, m);
    for j in 1..=DEGREE {
        coeff *= (DEGREE + 1 - j) as f64 / (j * (2 * DEGREE + 1 - j)) as f64;
        power = &power * &scaled;
        num += &power * coeff;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        den += &power * (sign * coeff);
    }
    let mut e = solve_in_place(den, num)?;
    for _ in 0..squarings {
        e = &e * &e;
    }
    Ok(e)
}
