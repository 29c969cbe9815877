//! Random correlation matrices.
//!
//! The restricted Wishart sampler draws a Bartlett factor `A` of a standard
//! Wishart matrix and rescales `A·A′` to unit diagonal. The restricted
//! inverse-Wishart sampler does the same with `B′·B`, `B = A⁻¹`. The onion
//! sampler grows an LKJ matrix one row at a time. Wishart and
//! inverse-Wishart draws with a general scale are provided for checking the
//! variance laws.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{
    cholesky, cov_to_corr, invert_lower_triangular, CorrelationMatrix, LowerTriangularFactor, SymmetricMatrix,
    VarianceVector,
};
use crate::rng::RandomStream;
use crate::special::{LkjParams, RwParams};

/// Attempts per matrix before a sampler gives up on boundary draws.
pub const MAX_ATTEMPTS: usize = 1000;

/// Draws whose correlation matrix has a squared Cholesky pivot below this
/// are treated as boundary draws and redrawn. It sits ten times above the
/// positive-definiteness tolerance of [`crate::matrix::cholesky`].
pub const BOUNDARY_PIVOT: f64 = 10.0 * crate::matrix::PIVOT_TOLERANCE;

fn boundary(pivot: f64, index: usize) -> Result<()> {
    if pivot > BOUNDARY_PIVOT {
        Ok(())
    } else {
        Err(Error::InvalidCorrelation(format!(
            "boundary draw: pivot {index} is {pivot:e}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// LKJ via the onion construction.
    Onion,
    /// Restricted Wishart via the Bartlett factor.
    Rw,
    /// Restricted inverse-Wishart via the inverted Bartlett factor.
    Riw,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Onion, Method::Rw, Method::Riw];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Onion => "onion",
            Method::Rw => "rw",
            Method::Riw => "riw",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "onion" | "lkj" => Ok(Method::Onion),
            "rw" => Ok(Method::Rw),
            "riw" => Ok(Method::Riw),
            other => Err(Error::domain(format!("unknown method '{other}'"))),
        }
    }
}

/// Bartlett factor of a `W_T(m, I)` draw: `c_i² ~ χ²_{m−i+1}` on the
/// diagonal (1-based `i`) and independent standard normals below it.
pub fn sample_bartlett_factor(t: usize, m: f64, rng: &mut RandomStream) -> Result<LowerTriangularFactor> {
    RwParams::new(t, m)?;
    Ok(bartlett_unchecked(t, m, rng))
}

fn bartlett_unchecked(t: usize, m: f64, rng: &mut RandomStream) -> LowerTriangularFactor {
    let mut a = LowerTriangularFactor::zeros(t);
    for i in 0..t {
        let row = a.row_mut(i);
        for x in &mut row[..i] {
            *x = rng.standard_normal();
        }
        // 0-based i: dof m − i.
        row[i] = (2.0 * rng.gamma((m - i as f64) / 2.0)).sqrt();
    }
    a
}

fn is_boundary(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidCorrelation(_) | Error::SingularFactor { .. } | Error::NonPositiveDiagonal { .. }
    )
}

fn with_retries<T>(mut attempt: impl FnMut() -> Result<T>) -> Result<(T, usize)> {
    let mut retries = 0;
    loop {
        match attempt() {
            Ok(v) => return Ok((v, retries)),
            Err(e) if is_boundary(&e) && retries + 1 < MAX_ATTEMPTS => retries += 1,
            Err(e) => return Err(e),
        }
    }
}

fn rw_draw(t: usize, m: f64, rng: &mut RandomStream) -> Result<(CorrelationMatrix, VarianceVector)> {
    let a = bartlett_unchecked(t, m, rng);
    let x = a.mul_transpose();
    // A/√diag(X) is the Cholesky factor of P.
    for i in 0..t {
        boundary(a.diag(i) * a.diag(i) / x.diag(i), i)?;
    }
    cov_to_corr(&x)
}

fn riw_draw(t: usize, m: f64, rng: &mut RandomStream) -> Result<(CorrelationMatrix, VarianceVector)> {
    let a = bartlett_unchecked(t, m, rng);
    let b = invert_lower_triangular(&a)?;
    let y = b.transpose_mul();
    // With J the index reversal, J·Y·J = (J·B′·J)(J·B·J) is a Cholesky
    // product, so the pivots of P in reversed order are B_ii²/Y_ii.
    for i in 0..t {
        boundary(b.diag(i) * b.diag(i) / y.diag(i), i)?;
    }
    cov_to_corr(&y)
}

/// `P ~ RW_T(m)`, which is LKJ with `eta = (m − T + 1)/2`.
pub fn sample_rw_correlation(t: usize, m: f64, rng: &mut RandomStream) -> Result<CorrelationMatrix> {
    RwParams::new(t, m)?;
    Ok(with_retries(|| rw_draw(t, m, rng))?.0 .0)
}

/// `P ~ RIW_T(m)`.
pub fn sample_riw_correlation(t: usize, m: f64, rng: &mut RandomStream) -> Result<CorrelationMatrix> {
    RwParams::new(t, m)?;
    Ok(with_retries(|| riw_draw(t, m, rng))?.0 .0)
}

fn onion_draw(d: usize, eta: f64, rng: &mut RandomStream) -> Result<CorrelationMatrix> {
    if d == 1 {
        return Ok(CorrelationMatrix::identity(1));
    }
    // Cholesky factor of the growing matrix. Appending the row
    // [√y·u, √(1−y)] with u uniform on the sphere is the same as appending
    // z = L·(√y·u) to the correlation matrix.
    let mut l = LowerTriangularFactor::zeros(d);
    l.set(0, 0, 1.0);
    let mut beta = eta + (d as f64 - 2.0) / 2.0;
    let r = 2.0 * rng.beta(beta, beta) - 1.0;
    boundary(1.0 - r * r, 1)?;
    l.set(1, 0, r);
    l.set(1, 1, (1.0 - r * r).sqrt());
    for k in 2..d {
        beta -= 0.5;
        let y = rng.beta(k as f64 / 2.0, beta);
        let row = l.row_mut(k);
        let mut norm2 = 0.0;
        for x in &mut row[..k] {
            let z = rng.standard_normal();
            *x = z;
            norm2 += z * z;
        }
        let scale = (y / norm2).sqrt();
        for x in &mut row[..k] {
            *x *= scale;
        }
        boundary(1.0 - y, k)?;
        row[k] = (1.0 - y).sqrt();
    }
    let mut p = l.mul_transpose();
    for i in 0..d {
        p.set(i, i, 1.0);
        for j in 0..i {
            if !(p.get(i, j).abs() < 1.0) {
                return Err(Error::InvalidCorrelation(format!("boundary draw at ({i}, {j})")));
            }
        }
    }
    Ok(CorrelationMatrix::from_trusted(p))
}

/// `P ~ LKJ(eta)` in dimension `d` by the onion construction.
pub fn sample_onion_correlation(d: usize, eta: f64, rng: &mut RandomStream) -> Result<CorrelationMatrix> {
    LkjParams::new(d, eta)?;
    Ok(with_retries(|| onion_draw(d, eta, rng))?.0)
}

/// `L · A` for lower-triangular `L`, `A`.
fn lower_product(l: &LowerTriangularFactor, a: &LowerTriangularFactor) -> LowerTriangularFactor {
    let t = l.dim();
    let mut out = LowerTriangularFactor::zeros(t);
    for i in 0..t {
        let li = l.row(i);
        let row = out.row_mut(i);
        for (k, &lik) in li.iter().enumerate() {
            for (j, x) in row[..=k].iter_mut().enumerate() {
                *x += lik * a.get(k, j);
            }
        }
    }
    out
}

/// `S ~ W_T(m, Ψ)`.
pub fn sample_wishart(t: usize, m: f64, psi: &SymmetricMatrix, rng: &mut RandomStream) -> Result<SymmetricMatrix> {
    RwParams::new(t, m)?;
    if psi.dim() != t {
        return Err(Error::DimensionMismatch {
            expected: t,
            found: psi.dim(),
        });
    }
    let c = cholesky(psi)?;
    let a = bartlett_unchecked(t, m, rng);
    Ok(lower_product(&c, &a).mul_transpose())
}

/// `Σ ~ IW_T(m, Ψ)`.
///
/// With `Ψ = C·C′` and a Bartlett factor `A`, `C⁻ᵀA` is a square root of a
/// `W_T(m, Ψ⁻¹)` draw, whose inverse is `C·(B′B)·C′` with `B = A⁻¹`.
pub fn sample_inverse_wishart(
    t: usize,
    m: f64,
    psi: &SymmetricMatrix,
    rng: &mut RandomStream,
) -> Result<SymmetricMatrix> {
    RwParams::new(t, m)?;
    if psi.dim() != t {
        return Err(Error::DimensionMismatch {
            expected: t,
            found: psi.dim(),
        });
    }
    let c = cholesky(psi)?;
    let ((sigma, _), _) = with_retries(|| {
        let a = bartlett_unchecked(t, m, rng);
        let b = invert_lower_triangular(&a)?;
        // H = B·C′, Σ = H′·H.
        let mut h = vec![0.0; t * t];
        for i in 0..t {
            let bi = b.row(i);
            for j in 0..t {
                let cj = c.row(j);
                let upto = i.min(j);
                h[i * t + j] = bi[..=upto].iter().zip(&cj[..=upto]).map(|(x, y)| x * y).sum();
            }
        }
        let sigma = SymmetricMatrix::from_fn(t, |i, j| (0..t).map(|k| h[k * t + i] * h[k * t + j]).sum());
        Ok((sigma, ()))
    })?;
    Ok(sigma)
}

/// `n` draws from one sampler, each using `split(i)` of the seed's root
/// stream, so the batch does not depend on evaluation order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleBatch {
    pub method: Method,
    pub dim: usize,
    pub dof: f64,
    pub eta: f64,
    pub seed: u64,
    #[serde(skip)]
    pub matrices: Vec<CorrelationMatrix>,
    /// Variances of the underlying covariance draw; empty for the onion
    /// sampler, which never forms one.
    #[serde(skip)]
    pub variances: Vec<VarianceVector>,
    /// Boundary draws rejected and redrawn across the batch.
    pub retries: usize,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }
}

struct Draw {
    matrix: CorrelationMatrix,
    variances: Option<VarianceVector>,
    retries: usize,
}

/// One matrix from `method` on its own stream.
fn draw_one(method: Method, params: RwParams, rng: &mut RandomStream) -> Result<Draw> {
    let (t, m) = (params.t, params.m);
    match method {
        Method::Rw => with_retries(|| rw_draw(t, m, rng)).map(|((p, v), r)| Draw {
            matrix: p,
            variances: Some(v),
            retries: r,
        }),
        Method::Riw => with_retries(|| riw_draw(t, m, rng)).map(|((p, v), r)| Draw {
            matrix: p,
            variances: Some(v),
            retries: r,
        }),
        Method::Onion => {
            let eta = params.to_lkj().eta;
            with_retries(|| onion_draw(t, eta, rng)).map(|(p, r)| Draw {
                matrix: p,
                variances: None,
                retries: r,
            })
        }
    }
}

/// Draws matrix `index` of the batch defined by `(method, params, seed)`.
pub fn sample_indexed(method: Method, params: RwParams, seed: u64, index: u64) -> Result<CorrelationMatrix> {
    let params = RwParams::new(params.t, params.m)?;
    let mut rng = RandomStream::new(seed).split(index);
    Ok(draw_one(method, params, &mut rng)?.matrix)
}

fn assemble(method: Method, params: RwParams, seed: u64, draws: Vec<Draw>) -> SampleBatch {
    let mut batch = SampleBatch {
        method,
        dim: params.t,
        dof: params.m,
        eta: params.to_lkj().eta,
        seed,
        matrices: Vec::with_capacity(draws.len()),
        variances: Vec::new(),
        retries: 0,
    };
    for d in draws {
        batch.retries += d.retries;
        batch.matrices.push(d.matrix);
        if let Some(v) = d.variances {
            batch.variances.push(v);
        }
    }
    batch
}

/// Sequential batch generation.
pub fn sample_batch(method: Method, params: RwParams, n: usize, seed: u64) -> Result<SampleBatch> {
    let params = RwParams::new(params.t, params.m)?;
    if n == 0 {
        return Err(Error::domain("batch size must be >= 1"));
    }
    let root = RandomStream::new(seed);
    let draws = (0..n as u64)
        .map(|i| draw_one(method, params, &mut root.split(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(method, params, seed, draws))
}

/// Parallel batch generation; identical output to [`sample_batch`].
pub fn sample_batch_par(method: Method, params: RwParams, n: usize, seed: u64) -> Result<SampleBatch> {
    let params = RwParams::new(params.t, params.m)?;
    if n == 0 {
        return Err(Error::domain("batch size must be >= 1"));
    }
    let root = RandomStream::new(seed);
    let draws = (0..n as u64)
        .into_par_iter()
        .map(|i| draw_one(method, params, &mut root.split(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(method, params, seed, draws))
}

/// Sampler entry point for the benchmark: no bookkeeping, one stream.
pub(crate) fn draw_for_bench(method: Method, params: RwParams, rng: &mut RandomStream) -> Result<CorrelationMatrix> {
    Ok(draw_one(method, params, rng)?.matrix)
}
