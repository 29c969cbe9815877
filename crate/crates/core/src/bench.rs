//! Wall-time comparison of the three samplers.
//!
//! Each `(dim, method)` cell draws `n` matrices on one thread after a short
//! warm-up, repeated `repetitions` times; the median is reported. Only the
//! sampler calls are timed.

use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::samplers::{draw_for_bench, Method};
use crate::special::RwParams;

/// Published seconds for 5000 matrices at `m = T + 1`: `(T, onion, RW, RIW)`.
/// Only their ratios are meaningful on other hardware.
pub const REFERENCE_SECONDS: [(usize, f64, f64, f64); 7] = [
    (20, 1.53, 0.70, 0.80),
    (40, 3.37, 1.46, 1.44),
    (80, 8.44, 5.03, 5.06),
    (120, 16.90, 12.26, 9.85),
    (200, 34.40, 28.78, 29.08),
    (240, 47.39, 44.12, 42.90),
    (280, 66.37, 62.59, 58.85),
];

/// Published `method / onion` time ratio at dimension `dim`, if tabulated.
pub fn reference_ratio(dim: usize, method: Method) -> Option<f64> {
    REFERENCE_SECONDS
        .iter()
        .find(|r| r.0 == dim)
        .map(|&(_, onion, rw, riw)| match method {
            Method::Onion => 1.0,
            Method::Rw => rw / onion,
            Method::Riw => riw / onion,
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub dims: Vec<usize>,
    pub n: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub repetitions: usize,
    /// Degrees of freedom are `dim + dof_offset`.
    pub dof_offset: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            dims: vec![20, 40, 80],
            n: 1000,
            methods: Method::ALL.to_vec(),
            seed: crate::rng::DEFAULT_SEED,
            repetitions: 3,
            dof_offset: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub dim: usize,
    pub method: Method,
    pub n: usize,
    /// Median over repetitions.
    pub wall_seconds: f64,
    pub seconds_per_matrix: f64,
    /// `None` when the onion sampler was not timed at this dimension.
    pub ratio_to_onion: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub environment: String,
    pub seed: u64,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn row(&self, dim: usize, method: Method) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.dim == dim && r.method == method)
    }

    /// Table with the published ratios alongside.
    pub fn to_text(&self) -> String {
        let mut s = format!("environment: {}\nseed: {}\n", self.environment, self.seed);
        s.push_str(&format!(
            "{:>5} {:>6} {:>7} {:>12} {:>14} {:>9} {:>9}\n",
            "dim", "method", "n", "wall_s", "s_per_matrix", "ratio", "ref_ratio"
        ));
        for r in &self.rows {
            let fmt_opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.3}"));
            s.push_str(&format!(
                "{:>5} {:>6} {:>7} {:>12.6} {:>14.3e} {:>9} {:>9}\n",
                r.dim,
                r.method.as_str(),
                r.n,
                r.wall_seconds,
                r.seconds_per_matrix,
                fmt_opt(r.ratio_to_onion),
                fmt_opt(reference_ratio(r.dim, r.method)),
            ));
        }
        s
    }
}

/// Free-text description of the machine and build.
pub fn environment_descriptor() -> String {
    let cpus = std::thread::available_parallelism().map_or(1, |n| n.get());
    format!(
        "{}-{}, {} logical CPUs, {} build, corrsamp {}, single-threaded; \
         absolute seconds are not comparable across machines",
        std::env::consts::OS,
        std::env::consts::ARCH,
        cpus,
        if cfg!(debug_assertions) { "debug" } else { "optimized" },
        env!("CARGO_PKG_VERSION"),
    )
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let k = xs.len();
    if k % 2 == 1 {
        xs[k / 2]
    } else {
        0.5 * (xs[k / 2 - 1] + xs[k / 2])
    }
}

fn time_draws(method: Method, params: RwParams, n: usize, rng: &mut RandomStream) -> Result<f64> {
    let start = Instant::now();
    for _ in 0..n {
        black_box(draw_for_bench(method, params, rng)?);
    }
    Ok(start.elapsed().as_secs_f64().max(1e-9))
}

pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.dims.is_empty() || cfg.methods.is_empty() {
        return Err(Error::domain("benchmark needs at least one dimension and one method"));
    }
    if cfg.n == 0 || cfg.repetitions == 0 {
        return Err(Error::domain("benchmark needs n >= 1 and repetitions >= 1"));
    }
    let mut methods = cfg.methods.clone();
    methods.sort();
    methods.dedup();
    let root = RandomStream::new(cfg.seed);
    let mut rows = Vec::new();
    for &dim in &cfg.dims {
        let params = RwParams::new(dim, dim as f64 + cfg.dof_offset)?;
        let mut streams: Vec<RandomStream> = (0..methods.len())
            .map(|k| root.split(((dim as u64) << 8) | k as u64))
            .collect();
        for (&method, rng) in methods.iter().zip(&mut streams) {
            for _ in 0..(cfg.n / 10).min(50) {
                black_box(draw_for_bench(method, params, rng)?);
            }
        }
        // Repetitions are interleaved across methods.
        let mut times = vec![Vec::with_capacity(cfg.repetitions); methods.len()];
        for _ in 0..cfg.repetitions {
            for (k, &method) in methods.iter().enumerate() {
                times[k].push(time_draws(method, params, cfg.n, &mut streams[k])?);
            }
        }
        let medians: Vec<f64> = times.into_iter().map(median).collect();
        let onion = methods.iter().position(|&m| m == Method::Onion).map(|k| medians[k]);
        for (&method, &wall) in methods.iter().zip(&medians) {
            rows.push(BenchRow {
                dim,
                method,
                n: cfg.n,
                wall_seconds: wall,
                seconds_per_matrix: wall / cfg.n as f64,
                ratio_to_onion: onion.map(|o| wall / o),
            });
        }
    }
    Ok(BenchReport {
        environment: environment_descriptor(),
        seed: cfg.seed,
        rows,
    })
}
