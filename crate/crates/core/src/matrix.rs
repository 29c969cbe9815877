//! Packed symmetric and lower-triangular matrices plus the factorization
//! primitives the samplers and densities are built on.
//!
//! Both matrix kinds store the lower triangle row by row, so entry `(i, j)`
//! with `j <= i` lives at `i * (i + 1) / 2 + j`. Symmetry is a property of
//! the storage and is never checked at runtime.

use crate::error::{Error, Result};

#[inline]
fn packed_len(dim: usize) -> usize {
    dim * (dim + 1) / 2
}

#[inline]
fn row_start(i: usize) -> usize {
    i * (i + 1) / 2
}

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    if j <= i {
        row_start(i) + j
    } else {
        row_start(j) + i
    }
}

/// Pivots at or below this multiple of the largest diagonal entry are
/// treated as a failure of positive definiteness.
pub const PIVOT_TOLERANCE: f64 = 1e-13;

/// Dense symmetric matrix with packed lower-triangle storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        Self {
            dim,
            data: vec![0.0; packed_len(dim)],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![1.0; dim])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// Builds a matrix from `f(i, j)` evaluated on the lower triangle.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..=i {
                m.data[row_start(i) + j] = f(i, j);
            }
        }
        m
    }

    /// Reads the lower triangle of a square row-major matrix; the upper
    /// triangle is ignored.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::domain("matrix must have at least one row"));
        }
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
        }
        Ok(Self::from_fn(dim, |i, j| rows[i][j]))
    }

    pub fn from_packed(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() != packed_len(dim) {
            return Err(Error::DimensionMismatch {
                expected: packed_len(dim),
                found: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[packed_index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[packed_index(i, j)] = value;
    }

    #[inline]
    pub fn diag(&self, i: usize) -> f64 {
        self.data[row_start(i) + i]
    }

    /// Row `i` of the lower triangle, entries `(i, 0..=i)`.
    #[inline]
    pub fn lower_row(&self, i: usize) -> &[f64] {
        &self.data[row_start(i)..row_start(i) + i + 1]
    }

    pub fn packed(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.diag(i)).sum()
    }
}

/// Lower-triangular matrix with packed row-major storage. Entries above the
/// diagonal are structurally zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerTriangularFactor {
    dim: usize,
    data: Vec<f64>,
}

impl LowerTriangularFactor {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        Self {
            dim,
            data: vec![0.0; packed_len(dim)],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut l = Self::zeros(dim);
        for i in 0..dim {
            l.set(i, i, 1.0);
        }
        l
    }

    /// Reads the lower triangle of a square row-major matrix; entries above
    /// the diagonal are ignored.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let s = SymmetricMatrix::from_rows(rows)?;
        Ok(Self {
            dim: s.dim,
            data: s.data,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.data[row_start(i) + j]
        }
    }

    /// Panics if `j > i`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(j <= i, "cannot set ({i}, {j}) above the diagonal");
        self.data[row_start(i) + j] = value;
    }

    #[inline]
    pub fn diag(&self, i: usize) -> f64 {
        self.data[row_start(i) + i]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[row_start(i)..row_start(i) + i + 1]
    }

    #[inline]
    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[row_start(i)..row_start(i) + i + 1]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// `L · L′`.
    pub fn mul_transpose(&self) -> SymmetricMatrix {
        let dim = self.dim;
        let mut out = SymmetricMatrix::zeros(dim);
        for i in 0..dim {
            let ri = self.row(i);
            for j in 0..=i {
                let rj = self.row(j);
                out.data[row_start(i) + j] = dot(&ri[..=j], rj);
            }
        }
        out
    }

    /// `L′ · L`.
    pub fn transpose_mul(&self) -> SymmetricMatrix {
        let dim = self.dim;
        let mut out = SymmetricMatrix::zeros(dim);
        for k in 0..dim {
            let rk = self.row(k);
            for i in 0..=k {
                let a = rk[i];
                if a == 0.0 {
                    continue;
                }
                let dst = &mut out.data[row_start(i)..=row_start(i) + i];
                axpy(a, &rk[..=i], dst);
            }
        }
        out
    }

    /// Sum of the logs of the diagonal entries.
    pub fn log_diag_sum(&self) -> f64 {
        (0..self.dim).map(|i| self.diag(i).ln()).sum()
    }

    /// Solves `L x = b` in place by forward substitution.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.dim);
        for i in 0..self.dim {
            let row = self.row(i);
            let s = dot(&row[..i], &b[..i]);
            b[i] = (b[i] - s) / row[i];
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Symmetric positive-definite matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix(SymmetricMatrix);

impl CorrelationMatrix {
    pub fn identity(dim: usize) -> Self {
        CorrelationMatrix(SymmetricMatrix::identity(dim))
    }

    /// Validates `m` against every correlation-matrix invariant.
    pub fn new(m: SymmetricMatrix) -> Result<Self> {
        check_correlation(&m)?;
        Ok(CorrelationMatrix(m))
    }

    /// Builds a matrix from its strictly-lower entries in row-major order
    /// (`ρ₂₁, ρ₃₁, ρ₃₂, …`) and validates it.
    pub fn from_lower_offdiag(dim: usize, values: &[f64]) -> Result<Self> {
        let expected = dim * dim.saturating_sub(1) / 2;
        if dim == 0 || values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: values.len(),
            });
        }
        let mut m = SymmetricMatrix::identity(dim);
        let mut it = values.iter();
        for i in 1..dim {
            for j in 0..i {
                m.set(i, j, *it.next().unwrap());
            }
        }
        Self::new(m)
    }

    /// Skips the positive-definiteness check; the caller guarantees it.
    pub(crate) fn from_trusted(m: SymmetricMatrix) -> Self {
        debug_assert!((0..m.dim()).all(|i| m.diag(i) == 1.0));
        CorrelationMatrix(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn as_symmetric(&self) -> &SymmetricMatrix {
        &self.0
    }

    pub fn into_symmetric(self) -> SymmetricMatrix {
        self.0
    }

    /// Strictly-lower entries in row-major order.
    pub fn lower_offdiag(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = Vec::with_capacity(d * d.saturating_sub(1) / 2);
        for i in 1..d {
            out.extend_from_slice(&self.0.lower_row(i)[..i]);
        }
        out
    }

    pub fn log_det(&self) -> f64 {
        log_det_spd(&self.0).expect("correlation matrix is positive definite")
    }

    /// Largest absolute off-diagonal entry, 0 for a 1×1 matrix.
    pub fn max_abs_offdiag(&self) -> f64 {
        self.lower_offdiag().iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.0.to_rows()
    }
}

fn check_correlation(m: &SymmetricMatrix) -> Result<()> {
    let d = m.dim();
    for i in 0..d {
        if m.diag(i) != 1.0 {
            return Err(Error::InvalidCorrelation(format!(
                "diagonal entry {i} is {} (must be exactly 1)",
                m.diag(i)
            )));
        }
    }
    for i in 1..d {
        for j in 0..i {
            let r = m.get(i, j);
            if !r.is_finite() || r.abs() >= 1.0 {
                return Err(Error::InvalidCorrelation(format!(
                    "entry ({i}, {j}) = {r} is not strictly inside (-1, 1)"
                )));
            }
        }
    }
    cholesky(m).map_err(|e| Error::InvalidCorrelation(e.to_string()))?;
    Ok(())
}

/// Variances `σ₁₁ … σ_TT` of a covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceVector(Vec<f64>);

impl VarianceVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("variance vector must be nonempty"));
        }
        for (index, &value) in values.iter().enumerate() {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonPositiveDiagonal { index, value });
            }
        }
        Ok(VarianceVector(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Standard deviations `δᵢ = √σᵢᵢ`.
    pub fn std_devs(&self) -> Vec<f64> {
        self.0.iter().map(|v| v.sqrt()).collect()
    }
}

/// Cholesky factorization `S = L·L′`.
pub fn cholesky(s: &SymmetricMatrix) -> Result<LowerTriangularFactor> {
    let dim = s.dim();
    let max_diag = (0..dim).fold(0.0f64, |acc, i| acc.max(s.diag(i)));
    let threshold = PIVOT_TOLERANCE * max_diag;
    let mut l = LowerTriangularFactor::zeros(dim);
    for i in 0..dim {
        for j in 0..=i {
            let partial = dot(&l.row(i)[..j], &l.row(j)[..j]);
            let v = s.get(i, j) - partial;
            if i == j {
                if !(v > threshold) {
                    return Err(Error::NotPositiveDefinite { index: i, pivot: v });
                }
                l.set(i, i, v.sqrt());
            } else {
                let ljj = l.diag(j);
                l.set(i, j, v / ljj);
            }
        }
    }
    Ok(l)
}

/// `L⁻¹` by forward substitution, one row at a time.
pub fn invert_lower_triangular(l: &LowerTriangularFactor) -> Result<LowerTriangularFactor> {
    let dim = l.dim();
    for i in 0..dim {
        if l.diag(i) == 0.0 {
            return Err(Error::SingularFactor { index: i });
        }
    }
    let mut b = LowerTriangularFactor::zeros(dim);
    let mut acc = vec![0.0; dim];
    for i in 0..dim {
        let li = l.row(i);
        let acc = &mut acc[..=i];
        acc.fill(0.0);
        acc[i] = 1.0;
        // row_i(B) = (e_i − Σ_{k<i} L_ik · row_k(B)) / L_ii
        for k in 0..i {
            let c = li[k];
            if c != 0.0 {
                axpy(-c, b.row(k), &mut acc[..=k]);
            }
        }
        let inv = 1.0 / li[i];
        for (dst, src) in b.row_mut(i).iter_mut().zip(acc.iter()) {
            *dst = src * inv;
        }
    }
    Ok(b)
}

/// `ln |S|` for positive-definite `S`.
pub fn log_det_spd(s: &SymmetricMatrix) -> Result<f64> {
    let l = cholesky(s)?;
    Ok(2.0 * l.log_diag_sum())
}

/// Splits a covariance matrix into its correlation matrix and variances.
pub fn cov_to_corr(s: &SymmetricMatrix) -> Result<(CorrelationMatrix, VarianceVector)> {
    let dim = s.dim();
    let mut inv_sd = Vec::with_capacity(dim);
    let mut vars = Vec::with_capacity(dim);
    for i in 0..dim {
        let v = s.diag(i);
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::NonPositiveDiagonal { index: i, value: v });
        }
        vars.push(v);
        inv_sd.push(1.0 / v.sqrt());
    }
    let mut p = SymmetricMatrix::zeros(dim);
    for i in 0..dim {
        let src = s.lower_row(i);
        let dst = &mut p.data[row_start(i)..=row_start(i) + i];
        let si = inv_sd[i];
        for j in 0..i {
            let r = src[j] * si * inv_sd[j];
            if !(r.abs() < 1.0) {
                return Err(Error::InvalidCorrelation(format!(
                    "entry ({i}, {j}) = {r} is not strictly inside (-1, 1)"
                )));
            }
            dst[j] = r;
        }
        dst[i] = 1.0;
    }
    Ok((CorrelationMatrix::from_trusted(p), VarianceVector(vars)))
}

/// Rebuilds `Δ P Δ` from a correlation matrix and variances.
pub fn corr_to_cov(p: &CorrelationMatrix, vars: &VarianceVector) -> Result<SymmetricMatrix> {
    if p.dim() != vars.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: vars.dim(),
        });
    }
    let sd = vars.std_devs();
    Ok(SymmetricMatrix::from_fn(p.dim(), |i, j| {
        if i == j {
            vars.values()[i]
        } else {
            p.get(i, j) * sd[i] * sd[j]
        }
    }))
}

/// The submatrix on rows and columns `indices`, in the given order.
pub fn principal_submatrix(s: &SymmetricMatrix, indices: &[usize]) -> Result<SymmetricMatrix> {
    if indices.is_empty() {
        return Err(Error::domain("index set must be nonempty"));
    }
    for (a, &i) in indices.iter().enumerate() {
        if i >= s.dim() {
            return Err(Error::IndexOutOfRange { index: i, dim: s.dim() });
        }
        if indices[..a].contains(&i) {
            return Err(Error::domain(format!("index {i} repeated")));
        }
    }
    Ok(SymmetricMatrix::from_fn(indices.len(), |a, b| {
        s.get(indices[a], indices[b])
    }))
}

/// `ln |S₋ᵢ|` where `S₋ᵢ` drops row and column `i`; 0 when `S` is 1×1.
pub(crate) fn log_det_deleting(s: &SymmetricMatrix, i: usize) -> Result<f64> {
    if s.dim() == 1 {
        return Ok(0.0);
    }
    let keep: Vec<usize> = (0..s.dim()).filter(|&k| k != i).collect();
    log_det_spd(&principal_submatrix(s, &keep)?)
}
