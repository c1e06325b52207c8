//! Weighted Rayleigh-quotient objectives and their condition numbers.
//!
//! The Brockett cost `f(X) = ½ Σᵢ αᵢ xᵢᵀ A xᵢ` with `0 < α₁ < … < α_k` is
//! minimized by eigenvectors of the `k` smallest eigenvalues of `A`, the
//! largest weight sitting on the smallest eigenvalue. `k = 1` with `α = (1)`
//! is the Rayleigh quotient on the sphere.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{dim_err, Error, Result};
use crate::geometry::{project_dual_mat, DualTangentVector, StiefelPoint};
use crate::linalg::DenseMatrix;

/// Value and dual gradient at a point.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: DualTangentVector,
    /// `‖∇f‖²_{g*}`
    pub gradient_norm_sq: f64,
}

/// A smooth function on `S(n, k)`.
///
/// Implementors supply the value and the Euclidean gradient; the dual
/// gradient is its orthogonal projection onto the dual tangent space.
pub trait Objective {
    /// `(n, k)`
    fn dims(&self) -> (usize, usize);

    fn value(&self, x: &StiefelPoint) -> Result<f64>;

    fn value_and_euclidean_gradient(&self, x: &StiefelPoint) -> Result<(f64, DenseMatrix)>;

    /// `f(to) − f(from)`, given `from_value = f(from)`.
    ///
    /// The default subtracts two values, which is pure rounding noise once
    /// the change falls below `ε·|f|`. Solvers compare changes against
    /// `γ‖∇f‖²`, so objectives that can form the difference directly should.
    fn value_change(&self, from: &StiefelPoint, from_value: f64, to: &StiefelPoint) -> Result<f64> {
        let _ = from;
        Ok(self.value(to)? - from_value)
    }

    fn evaluate(&self, x: &StiefelPoint) -> Result<Evaluation> {
        let (value, raw) = self.value_and_euclidean_gradient(x)?;
        if raw.rows() != x.n() || raw.cols() != x.k() {
            return Err(dim_err("Objective::evaluate", "gradient shape differs from point"));
        }
        let gradient = DualTangentVector::new_unchecked(x, project_dual_mat(x.mat(), raw.0));
        let gradient_norm_sq = gradient.norm_squared();
        Ok(Evaluation {
            value,
            gradient,
            gradient_norm_sq,
        })
    }
}

/// Symmetric operator `A`.
#[derive(Clone, Debug, PartialEq)]
pub enum Operator {
    Diagonal(Vec<f64>),
    Dense(DenseMatrix),
}

impl Operator {
    pub fn dim(&self) -> usize {
        match self {
            Operator::Diagonal(d) => d.len(),
            Operator::Dense(a) => a.rows(),
        }
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Operator::Diagonal(d) => {
                let mut out = x.clone();
                for mut col in out.column_iter_mut() {
                    for (v, di) in col.iter_mut().zip(d) {
                        *v *= di;
                    }
                }
                out
            }
            Operator::Dense(a) => &a.0 * x,
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        match self {
            Operator::Diagonal(d) => d.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Operator::Dense(a) => a.frobenius_norm(),
        }
    }
}

/// Brockett cost `½ Σᵢ αᵢ xᵢᵀ A xᵢ`.
///
/// Values are computed as `½ Σᵢ αᵢ xᵢᵀAxᵢ / xᵢᵀxᵢ`, which is the same function
/// on the manifold but does not see the column-norm part of rounding drift.
/// Without this, drift of order `ε` moves `f` by `ε·‖A‖·Σα`, swamping the
/// decreases the line search has to resolve near a minimizer.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveSpec {
    operator: Operator,
    weights: Vec<f64>,
}

impl ObjectiveSpec {
    pub fn new(operator: Operator, weights: Vec<f64>) -> Result<Self> {
        let n = operator.dim();
        if n == 0 {
            return Err(Error::InvalidInput("operator has dimension 0".into()));
        }
        match &operator {
            Operator::Diagonal(d) => {
                if d.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidInput("non-finite diagonal entry".into()));
                }
            }
            Operator::Dense(a) => {
                if a.cols() != n {
                    return Err(dim_err("ObjectiveSpec::new", "dense operator is not square"));
                }
                let asym = (&a.0 - a.0.transpose()).norm();
                if asym > 1e-12 * a.frobenius_norm() {
                    return Err(Error::NotSymmetric { asymmetry: asym });
                }
            }
        }
        validate_weights(&weights)?;
        if weights.len() > n {
            return Err(dim_err(
                "ObjectiveSpec::new",
                format!("k = {} weights for n = {n}", weights.len()),
            ));
        }
        Ok(Self { operator, weights })
    }

    /// Rayleigh quotient `½ xᵀAx` on the unit sphere.
    pub fn sphere(operator: Operator) -> Result<Self> {
        Self::new(operator, vec![1.0])
    }

    pub fn operator(&self) -> &Operator {
        &self.operator
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n(&self) -> usize {
        self.operator.dim()
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    fn check_point(&self, x: &StiefelPoint) -> Result<()> {
        if x.n() != self.n() || x.k() != self.k() {
            return Err(dim_err(
                "ObjectiveSpec",
                format!(
                    "point is {}×{}, objective expects {}×{}",
                    x.n(),
                    x.k(),
                    self.n(),
                    self.k()
                ),
            ));
        }
        Ok(())
    }

    fn weighted_value(&self, x: &DMatrix<f64>, ax: &DMatrix<f64>) -> f64 {
        0.5 * self
            .weights
            .iter()
            .enumerate()
            .map(|(j, a)| a * x.column(j).dot(&ax.column(j)) / x.column(j).norm_squared())
            .sum::<f64>()
    }
}

impl Objective for ObjectiveSpec {
    fn dims(&self) -> (usize, usize) {
        (self.n(), self.k())
    }

    fn value(&self, x: &StiefelPoint) -> Result<f64> {
        self.check_point(x)?;
        let xm = x.mat();
        let value = match &self.operator {
            // Skip forming AX for the diagonal case.
            Operator::Diagonal(d) => {
                0.5 * self
                    .weights
                    .iter()
                    .enumerate()
                    .map(|(j, a)| {
                        let col = xm.column(j);
                        a * col.iter().zip(d).map(|(v, di)| di * v * v).sum::<f64>() / col.norm_squared()
                    })
                    .sum::<f64>()
            }
            Operator::Dense(_) => self.weighted_value(xm, &self.operator.apply(xm)),
        };
        Ok(value)
    }

    fn value_and_euclidean_gradient(&self, x: &StiefelPoint) -> Result<(f64, DenseMatrix)> {
        self.check_point(x)?;
        let xm = x.mat();
        let mut ax = self.operator.apply(xm);
        let value = self.weighted_value(xm, &ax);
        for (mut col, a) in ax.column_iter_mut().zip(&self.weights) {
            col *= *a;
        }
        Ok((value, DenseMatrix(ax)))
    }

    /// Change of the per-column Rayleigh quotients,
    /// `½ Σⱼ αⱼ (dⱼᵀA sⱼ − rⱼ dⱼᵀsⱼ)/yⱼᵀyⱼ` with `d = y − x`, `s = y + x` and
    /// `rⱼ = xⱼᵀAxⱼ/xⱼᵀxⱼ`.
    ///
    /// On the manifold this is exactly `f(to) − f(from)`. The difference of two
    /// nearby points is exact in floating point, and the Rayleigh form ignores
    /// the column-norm part of rounding drift, which near a minimizer would
    /// otherwise dominate changes of order `γ‖∇f‖²`.
    fn value_change(&self, from: &StiefelPoint, _from_value: f64, to: &StiefelPoint) -> Result<f64> {
        self.check_point(from)?;
        self.check_point(to)?;
        let (x, y) = (from.mat(), to.mat());
        let diff = y - x;
        let sum = y + x;
        let (a_sum, a_x) = match &self.operator {
            Operator::Diagonal(_) => (None, None),
            Operator::Dense(_) => (Some(self.operator.apply(&sum)), Some(self.operator.apply(x))),
        };
        let mut change = 0.0;
        for (j, alpha) in self.weights.iter().enumerate() {
            let (xj, yj, dj, sj) = (x.column(j), y.column(j), diff.column(j), sum.column(j));
            let (d_a_s, x_a_x) = match &self.operator {
                Operator::Diagonal(lam) => {
                    let mut das = 0.0;
                    let mut xax = 0.0;
                    for i in 0..lam.len() {
                        das += lam[i] * dj[i] * sj[i];
                        xax += lam[i] * xj[i] * xj[i];
                    }
                    (das, xax)
                }
                Operator::Dense(_) => (
                    dj.dot(&a_sum.as_ref().unwrap().column(j)),
                    xj.dot(&a_x.as_ref().unwrap().column(j)),
                ),
            };
            let r = x_a_x / xj.norm_squared();
            change += alpha * (d_a_s - r * dj.dot(&sj)) / yj.norm_squared();
        }
        Ok(0.5 * change)
    }
}

fn validate_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidInput("at least one weight is required".into()));
    }
    if !weights.iter().all(|w| w.is_finite()) || weights[0] <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "weights must be finite and positive: {weights:?}"
        )));
    }
    if weights.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::InvalidInput(format!(
            "weights must be strictly increasing: {weights:?}"
        )));
    }
    Ok(())
}

/// Eigenvalues of `A`, ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumInfo {
    eigenvalues: Vec<f64>,
}

impl SpectrumInfo {
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::InvalidInput("empty spectrum".into()));
        }
        if eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite eigenvalue".into()));
        }
        if eigenvalues.windows(2).any(|p| p[1] < p[0]) {
            return Err(Error::InvalidInput("eigenvalues must be ascending".into()));
        }
        Ok(Self { eigenvalues })
    }

    /// `λᵢ = i` for `i = 1..=n`.
    pub fn linear(n: usize) -> Result<Self> {
        Self::new((1..=n).map(|i| i as f64).collect())
    }

    /// `λᵢ = i²/n` for `i = 1..=n`.
    pub fn quadratic(n: usize) -> Result<Self> {
        let nf = n as f64;
        Self::new((1..=n).map(|i| (i * i) as f64 / nf).collect())
    }

    /// Newline-separated ascending reals; blank lines are ignored.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::SpectrumParse {
            spec: path.display().to_string(),
            reason: e.to_string(),
        })?;
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let v: f64 = line.parse().map_err(|_| Error::SpectrumParse {
                spec: path.display().to_string(),
                reason: format!("line {}: {line:?} is not a number", lineno + 1),
            })?;
            values.push(v);
        }
        Self::new(values)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn diagonal_operator(&self) -> Operator {
        Operator::Diagonal(self.eigenvalues.clone())
    }

    fn need(&self, count: usize) -> Result<()> {
        if self.n() < count {
            return Err(Error::DegenerateSpectrum(format!(
                "need at least {count} eigenvalues, have {}",
                self.n()
            )));
        }
        Ok(())
    }
}

/// `κ = (λ_n − λ₁) / (λ₂ − λ₁)`
pub fn sphere_condition_number(spectrum: &SpectrumInfo) -> Result<f64> {
    spectrum.need(2)?;
    let l = spectrum.eigenvalues();
    let gap = l[1] - l[0];
    if gap <= 0.0 {
        return Err(Error::DegenerateSpectrum("λ₂ = λ₁".into()));
    }
    Ok((l[l.len() - 1] - l[0]) / gap)
}

/// Condition number of the Brockett cost at its minimizer:
///
/// ```text
/// κ = α_k(λ_n − λ₁) / min{ α₁(λ_{k+1} − λ_k), min_{i<k} (λ_{k−i+1} − λ_{k−i})(α_{i+1} − α_i) }
/// ```
pub fn brockett_condition_number(spectrum: &SpectrumInfo, weights: &[f64]) -> Result<f64> {
    let k = weights.len();
    if k == 0 {
        return Err(Error::InvalidInput("no weights".into()));
    }
    spectrum.need(k + 1)?;
    let l = spectrum.eigenvalues();
    let mut denom = weights[0] * (l[k] - l[k - 1]);
    for i in 1..k {
        denom = denom.min((l[k - i] - l[k - i - 1]) * (weights[i] - weights[i - 1]));
    }
    if !(denom > 0.0) {
        return Err(Error::DegenerateSpectrum(format!(
            "non-positive denominator {denom} in the condition number"
        )));
    }
    Ok(weights[k - 1] * (l[l.len() - 1] - l[0]) / denom)
}

fn gaps_up_to(spectrum: &SpectrumInfo, k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be positive".into()));
    }
    spectrum.need(k + 1)?;
    let l = spectrum.eigenvalues();
    let gaps: Vec<f64> = (0..k).map(|i| l[i + 1] - l[i]).collect();
    if let Some(i) = gaps.iter().position(|g| !(*g > 0.0)) {
        return Err(Error::DegenerateSpectrum(format!(
            "zero gap between λ_{} and λ_{}",
            i + 1,
            i + 2
        )));
    }
    Ok(gaps)
}

/// Weights minimizing [`brockett_condition_number`], normalized so that
/// `α₁ = 1/(λ_{k+1} − λ_k)`. Each increment `α_{i+1} − α_i` is the
/// reciprocal of the gap its column pair straddles, which makes every term
/// of the denominator equal to one.
pub fn optimal_weights(spectrum: &SpectrumInfo, k: usize) -> Result<Vec<f64>> {
    let gaps = gaps_up_to(spectrum, k)?;
    // gaps[j] = λ_{j+2} − λ_{j+1}; weight i (1-based) adds 1/gaps[k − i].
    let mut acc = 0.0;
    Ok((1..=k)
        .map(|i| {
            acc += 1.0 / gaps[k - i];
            acc
        })
        .collect())
}

/// `(λ_n − λ₁) Σ_{i=1}^{k} 1/(λ_{i+1} − λ_i)`
pub fn optimal_condition_number(spectrum: &SpectrumInfo, k: usize) -> Result<f64> {
    let gaps = gaps_up_to(spectrum, k)?;
    let l = spectrum.eigenvalues();
    Ok((l[l.len() - 1] - l[0]) * gaps.iter().map(|g| 1.0 / g).sum::<f64>())
}

/// Minimum of the Brockett cost: the smallest `k` eigenvalues, the largest
/// weight on the smallest eigenvalue.
pub fn known_minimum(spectrum: &SpectrumInfo, weights: &[f64]) -> Result<f64> {
    let k = weights.len();
    spectrum.need(k)?;
    if weights.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::InvalidInput("weights must be positive".into()));
    }
    let mut sorted = weights.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    Ok(0.5
        * sorted
            .iter()
            .zip(spectrum.eigenvalues())
            .map(|(a, l)| a * l)
            .sum::<f64>())
}

/// Spectrum specifier as written on the command line: `linear[:n]`,
/// `quadratic[:n]` or `file:<path>`.
#[derive(Clone, Debug, PartialEq)]
pub enum SpectrumSpec {
    Linear { n: Option<usize> },
    Quadratic { n: Option<usize> },
    File(PathBuf),
}

impl SpectrumSpec {
    /// Builds the spectrum. `n` overrides the size carried by the specifier;
    /// a file spectrum must already have that size.
    pub fn resolve(&self, n: Option<usize>) -> Result<SpectrumInfo> {
        let missing = || Error::SpectrumParse {
            spec: self.to_string(),
            reason: "no dimension given".into(),
        };
        match self {
            SpectrumSpec::Linear { n: own } => SpectrumInfo::linear(n.or(*own).ok_or_else(missing)?),
            SpectrumSpec::Quadratic { n: own } => SpectrumInfo::quadratic(n.or(*own).ok_or_else(missing)?),
            SpectrumSpec::File(path) => {
                let s = SpectrumInfo::from_file(path)?;
                match n {
                    Some(n) if n != s.n() => Err(Error::SpectrumParse {
                        spec: self.to_string(),
                        reason: format!("file holds {} eigenvalues, n = {n} requested", s.n()),
                    }),
                    _ => Ok(s),
                }
            }
        }
    }
}

impl FromStr for SpectrumSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let err = |reason: &str| Error::SpectrumParse {
            spec: s.to_string(),
            reason: reason.to_string(),
        };
        let (kind, arg) = match s.split_once(':') {
            Some((kind, arg)) => (kind, Some(arg)),
            None => (s, None),
        };
        let size = |arg: Option<&str>| -> Result<Option<usize>> {
            match arg {
                None => Ok(None),
                Some(a) => match a.parse::<usize>() {
                    Ok(n) if n > 0 => Ok(Some(n)),
                    _ => Err(err("dimension must be a positive integer")),
                },
            }
        };
        match kind {
            "linear" => Ok(SpectrumSpec::Linear { n: size(arg)? }),
            "quadratic" => Ok(SpectrumSpec::Quadratic { n: size(arg)? }),
            "file" => match arg {
                Some(p) if !p.is_empty() => Ok(SpectrumSpec::File(PathBuf::from(p))),
                _ => Err(err("file: needs a path")),
            },
            _ => Err(err("expected linear[:n], quadratic[:n] or file:<path>")),
        }
    }
}

impl std::fmt::Display for SpectrumSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SpectrumSpec::Linear { n: Some(n) } => write!(f, "linear:{n}"),
            SpectrumSpec::Linear { n: None } => write!(f, "linear"),
            SpectrumSpec::Quadratic { n: Some(n) } => write!(f, "quadratic:{n}"),
            SpectrumSpec::Quadratic { n: None } => write!(f, "quadratic"),
            SpectrumSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}
