//! Random correlation matrices from the restricted Wishart, restricted
//! inverse-Wishart and LKJ distributions.
//!
//! The restricted Wishart law `RW_T(m)` (the correlation matrix of a
//! `W_T(m, diag)` draw) coincides with `LKJ(eta)` at `eta = (m − T + 1)/2`.
//! This crate provides samplers for all three laws, their log densities,
//! the normalizing-constant identity behind the equivalence, statistical
//! validation suites and a timing harness.

#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::excessive_precision,
    clippy::needless_range_loop
)]

pub mod bench;
pub mod densities;
pub mod error;
pub mod io;
pub mod matrix;
pub mod rng;
pub mod samplers;
pub mod special;
pub mod validation;

pub use bench::{run_benchmark, BenchConfig, BenchReport, BenchRow};
pub use error::{Error, Result};
pub use io::{read_matrices_csv, write_matrices_csv, Format};
pub use matrix::{
    cholesky, cov_to_corr, invert_lower_triangular, log_det_spd, principal_submatrix, CorrelationMatrix,
    LowerTriangularFactor, SymmetricMatrix, VarianceVector,
};
pub use rng::RandomStream;
pub use samplers::{Method, SampleBatch};
pub use special::{LkjParams, RwParams};
pub use validation::{theorem_suite, TheoremSuiteConfig, ValidationReport};
