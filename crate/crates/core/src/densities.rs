//! Log densities of the Wishart family and of the correlation-matrix laws
//! derived from it.
//!
//! Everything goes through Cholesky factors; no matrix inverse is formed.

use serde::Serialize;
use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::matrix::{cholesky, log_det_spd, CorrelationMatrix, LowerTriangularFactor, SymmetricMatrix};
use crate::special::{
    log_beta_function, log_gamma_unchecked, log_lkj_constant, log_multivariate_gamma, LkjParams, RwParams,
};

/// A natural-log density value. `normalized` is false when only the kernel
/// is known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogDensity {
    pub value: f64,
    pub normalized: bool,
}

impl LogDensity {
    fn normalized(value: f64) -> Self {
        Self {
            value,
            normalized: true,
        }
    }
}

fn check_dims(a: &SymmetricMatrix, b: &SymmetricMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// `tr(M⁻¹ N)` with `M = L_M L_M′`, `N = L_N L_N′`, as `‖L_M⁻¹ L_N‖²_F`.
fn trace_solve(lm: &LowerTriangularFactor, ln: &LowerTriangularFactor) -> f64 {
    let t = lm.dim();
    let mut col = vec![0.0; t];
    let mut total = 0.0;
    for j in 0..t {
        for (i, c) in col.iter_mut().enumerate() {
            *c = ln.get(i, j);
        }
        lm.solve_in_place(&mut col);
        total += col.iter().map(|x| x * x).sum::<f64>();
    }
    total
}

/// `ln W_T(S; K, Σ)`, fully normalized.
pub fn wishart_log_density(s: &SymmetricMatrix, k: f64, sigma: &SymmetricMatrix) -> Result<LogDensity> {
    check_dims(s, sigma)?;
    let t = s.dim();
    RwParams::new(t, k)?;
    let ls = cholesky(s)?;
    let lsig = cholesky(sigma)?;
    let tf = t as f64;
    let value = -0.5 * k * tf * LN_2 - log_multivariate_gamma(t, k / 2.0)? - 0.5 * k * 2.0 * lsig.log_diag_sum()
        + 0.5 * (k - tf - 1.0) * 2.0 * ls.log_diag_sum()
        - 0.5 * trace_solve(&lsig, &ls);
    Ok(LogDensity::normalized(value))
}

/// `ln IW_T(Σ; m, Ψ)` with the standard normalizing constant
/// `|Ψ|^{m/2} / (2^{mT/2} Γ_T(m/2))`.
pub fn inverse_wishart_log_density(sigma: &SymmetricMatrix, m: f64, psi: &SymmetricMatrix) -> Result<LogDensity> {
    check_dims(sigma, psi)?;
    let t = sigma.dim();
    RwParams::new(t, m)?;
    let lsig = cholesky(sigma)?;
    let lpsi = cholesky(psi)?;
    let tf = t as f64;
    let value = 0.5 * m * 2.0 * lpsi.log_diag_sum()
        - 0.5 * m * tf * LN_2
        - log_multivariate_gamma(t, m / 2.0)?
        - 0.5 * (m + tf + 1.0) * 2.0 * lsig.log_diag_sum()
        - 0.5 * trace_solve(&lsig, &lpsi);
    Ok(LogDensity::normalized(value))
}

/// `ln RW_T(P; m) = T ln Γ(m/2) − ln Γ_T(m/2) + ((m − T − 1)/2) ln|P|`.
pub fn rw_log_density(p: &CorrelationMatrix, m: f64) -> Result<LogDensity> {
    let t = p.dim();
    RwParams::new(t, m)?;
    let tf = t as f64;
    let log_det = log_det_spd(p.as_symmetric())?;
    let value =
        tf * log_gamma_unchecked(m / 2.0) - log_multivariate_gamma(t, m / 2.0)? + 0.5 * (m - tf - 1.0) * log_det;
    Ok(LogDensity::normalized(value))
}

/// `ln LKJ(P; eta) = −ln c_d + (eta − 1) ln|P|`.
pub fn lkj_log_density(p: &CorrelationMatrix, eta: f64) -> Result<LogDensity> {
    let params = LkjParams::new(p.dim(), eta)?;
    let log_det = log_det_spd(p.as_symmetric())?;
    Ok(LogDensity::normalized(
        -log_lkj_constant(params)? + (eta - 1.0) * log_det,
    ))
}

/// Kernel of the restricted inverse-Wishart law,
/// `(½(m−1)(T−1) − 1) ln|P| − (m/2) Σᵢ ln|P₋ᵢ|`, where `P₋ᵢ` drops row and
/// column `i`. The normalizing constant is not available in closed form.
pub fn riw_log_density(p: &CorrelationMatrix, m: f64) -> Result<LogDensity> {
    let t = p.dim();
    RwParams::new(t, m)?;
    let s = p.as_symmetric();
    let log_det = log_det_spd(s)?;
    let mut minors = 0.0;
    for i in 0..t {
        minors += crate::matrix::log_det_deleting(s, i)?;
    }
    let tf = t as f64;
    Ok(LogDensity {
        value: (0.5 * (m - 1.0) * (tf - 1.0) - 1.0) * log_det - 0.5 * m * minors,
        normalized: false,
    })
}

/// Log density of `Beta(a, a)` rescaled to `[−1, 1]`, the marginal law of
/// one off-diagonal entry.
pub fn marginal_rho_log_density(rho: f64, a: f64) -> Result<f64> {
    if !(rho.abs() < 1.0) {
        return Err(Error::domain(format!("rho must lie in (-1, 1), got {rho}")));
    }
    let lb = log_beta_function(a, a)?;
    Ok((a - 1.0) * (1.0 - rho * rho).ln() - lb - (2.0 * a - 1.0) * LN_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;
    use crate::samplers::{sample_onion_correlation, sample_riw_correlation};
    use crate::special::log_gamma;
    use proptest::prelude::*;
    use statrs::distribution::{ChiSquared, Continuous, InverseGamma};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// Gauss–Jordan inverse, test-only.
    fn dense_inverse(m: &SymmetricMatrix) -> SymmetricMatrix {
        let n = m.dim();
        let mut a = m.to_rows();
        let mut inv: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect())
            .collect();
        for c in 0..n {
            let p = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
            a.swap(c, p);
            inv.swap(c, p);
            let d = a[c][c];
            for j in 0..n {
                a[c][j] /= d;
                inv[c][j] /= d;
            }
            for r in 0..n {
                if r != c {
                    let f = a[r][c];
                    for j in 0..n {
                        a[r][j] -= f * a[c][j];
                        inv[r][j] -= f * inv[c][j];
                    }
                }
            }
        }
        SymmetricMatrix::from_fn(n, |i, j| 0.5 * (inv[i][j] + inv[j][i]))
    }

    fn random_spd(t: usize, rng: &mut RandomStream) -> SymmetricMatrix {
        let g: Vec<f64> = (0..t * t).map(|_| rng.standard_normal()).collect();
        SymmetricMatrix::from_fn(t, |i, j| {
            let s: f64 = (0..t).map(|k| g[i * t + k] * g[j * t + k]).sum();
            s + if i == j { 0.5 } else { 0.0 }
        })
    }

    /// Composite Simpson over `t ∈ [lo, hi]` of `f(eᵗ)·eᵗ`.
    fn integrate_log_grid(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
        let h = (hi - lo) / n as f64;
        let g = |t: f64| {
            let x = t.exp();
            f(x) * x
        };
        let mut s = g(lo) + g(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * g(lo + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn wishart_one_dim_is_chi_square() {
        for k in [1.5, 3.0, 7.0] {
            let chi = ChiSquared::new(k).unwrap();
            for x in [0.1, 1.0, 4.2, 11.0] {
                let got = wishart_log_density(&SymmetricMatrix::from_diagonal(&[x]), k, &SymmetricMatrix::identity(1))
                    .unwrap();
                assert!(got.normalized);
                assert!(close(got.value, chi.ln_pdf(x), 1e-12), "k={k} x={x}");
            }
        }
    }

    #[test]
    fn wishart_two_dim_direct_formula() {
        // S = K·I, Σ = I, T = 2: −K ln 2 − ln Γ₂(K/2) + ((K−3)/2)·2 ln K − K.
        let k = 5.0;
        let s = SymmetricMatrix::from_diagonal(&[k, k]);
        let got = wishart_log_density(&s, k, &SymmetricMatrix::identity(2)).unwrap().value;
        let lg2 = 0.5 * std::f64::consts::PI.ln() + log_gamma(2.5).unwrap() + log_gamma(2.0).unwrap();
        let want = -k * LN_2 - lg2 + (k - 3.0) * k.ln() - k;
        assert!(close(got, want, 1e-12), "{got} vs {want}");
    }

    #[test]
    fn wishart_integrates_to_one_in_one_dim() {
        for (k, sig) in [(3.0, 1.0), (5.0, 2.5)] {
            let sigma = SymmetricMatrix::from_diagonal(&[sig]);
            let total = integrate_log_grid(
                |x| {
                    wishart_log_density(&SymmetricMatrix::from_diagonal(&[x]), k, &sigma)
                        .unwrap()
                        .value
                        .exp()
                },
                -30.0,
                6.0,
                40_000,
            );
            assert!((total - 1.0).abs() < 1e-6, "k={k}: {total}");
        }
    }

    #[test]
    fn inverse_wishart_one_dim_is_inverse_gamma() {
        for (m, psi) in [(3.0, 2.0), (6.0, 0.7)] {
            let ig = InverseGamma::new(m / 2.0, psi / 2.0).unwrap();
            for x in [0.05, 0.5, 2.0, 9.0] {
                let got = inverse_wishart_log_density(
                    &SymmetricMatrix::from_diagonal(&[x]),
                    m,
                    &SymmetricMatrix::from_diagonal(&[psi]),
                )
                .unwrap()
                .value;
                assert!(close(got, ig.ln_pdf(x), 1e-12), "m={m} x={x}");
            }
        }
    }

    #[test]
    fn inverse_wishart_integrates_to_one_in_one_dim() {
        let psi = SymmetricMatrix::from_diagonal(&[2.0]);
        let total = integrate_log_grid(
            |x| {
                inverse_wishart_log_density(&SymmetricMatrix::from_diagonal(&[x]), 3.0, &psi)
                    .unwrap()
                    .value
                    .exp()
            },
            -8.0,
            40.0,
            60_000,
        );
        assert!((total - 1.0).abs() < 1e-6, "{total}");
    }

    #[test]
    fn inverse_wishart_change_of_variables() {
        let mut rng = RandomStream::new(2);
        for t in 1..=5 {
            for _ in 0..10 {
                let sigma = random_spd(t, &mut rng);
                let psi = random_spd(t, &mut rng);
                let m = t as f64 + 1.7;
                let iw = inverse_wishart_log_density(&sigma, m, &psi).unwrap().value;
                let w = wishart_log_density(&dense_inverse(&sigma), m, &dense_inverse(&psi))
                    .unwrap()
                    .value;
                let jac = -(t as f64 + 1.0) * log_det_spd(&sigma).unwrap();
                assert!(
                    close(iw, w + jac, 1e-10 * iw.abs().max(1.0)),
                    "T={t}: {iw} vs {}",
                    w + jac
                );
            }
        }
    }

    #[test]
    fn wishart_rejects_bad_input() {
        let i2 = SymmetricMatrix::identity(2);
        assert!(wishart_log_density(&i2, 0.5, &i2).is_err());
        assert!(wishart_log_density(&i2, 3.0, &SymmetricMatrix::identity(3)).is_err());
        let bad = SymmetricMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(
            wishart_log_density(&bad, 3.0, &i2),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn rw_density_examples() {
        let p = CorrelationMatrix::identity(2);
        let v = rw_log_density(&p, 3.0).unwrap();
        assert!(v.normalized);
        assert!(close(v.value, -LN_2, 1e-14));

        for t in 1..6 {
            for m in [t as f64 - 0.5, t as f64 + 1.0, t as f64 + 4.3] {
                let want = t as f64 * log_gamma(m / 2.0).unwrap() - log_multivariate_gamma(t, m / 2.0).unwrap();
                let got = rw_log_density(&CorrelationMatrix::identity(t), m).unwrap().value;
                assert!(close(got, want, 1e-13));
            }
        }

        let p = CorrelationMatrix::from_lower_offdiag(2, &[0.5]).unwrap();
        assert!(close(
            rw_log_density(&p, 4.0).unwrap().value,
            -0.59542374151534532845,
            1e-14
        ));
        assert!(rw_log_density(&p, 1.0).is_err());
    }

    #[test]
    fn rw_density_is_flat_at_m_equal_t_plus_one() {
        let mut rng = RandomStream::new(6);
        for t in 2..7 {
            let base = rw_log_density(&CorrelationMatrix::identity(t), t as f64 + 1.0)
                .unwrap()
                .value;
            for _ in 0..5 {
                let p = sample_onion_correlation(t, 0.7, &mut rng).unwrap();
                let v = rw_log_density(&p, t as f64 + 1.0).unwrap().value;
                assert!(close(v, base, 1e-12));
            }
        }
    }

    #[test]
    fn lkj_density_examples() {
        let mut rng = RandomStream::new(1);
        for _ in 0..5 {
            let p = sample_onion_correlation(2, 1.0, &mut rng).unwrap();
            assert!(close(lkj_log_density(&p, 1.0).unwrap().value, -LN_2, 1e-14));
        }
        let c3 = log_lkj_constant(LkjParams { d: 3, eta: 1.0 }).unwrap();
        assert_eq!(
            lkj_log_density(&CorrelationMatrix::identity(3), 1.0).unwrap().value,
            -c3
        );
        assert!(lkj_log_density(&CorrelationMatrix::identity(3), -1.0).is_err());
    }

    #[test]
    fn rw_equals_lkj_on_sampled_matrices() {
        let mut rng = RandomStream::new(10);
        for d in 1..=25 {
            for eta in [0.5, 1.0, 2.0, 7.0] {
                let p = sample_onion_correlation(d, eta, &mut rng).unwrap();
                let rw = rw_log_density(&p, 2.0 * eta + d as f64 - 1.0).unwrap().value;
                let lkj = lkj_log_density(&p, eta).unwrap().value;
                assert!(close(rw, lkj, 1e-8), "d={d} eta={eta}: {rw} vs {lkj}");
            }
        }
    }

    #[test]
    fn riw_kernel_examples() {
        assert_eq!(
            riw_log_density(&CorrelationMatrix::identity(4), 5.0).unwrap().value,
            0.0
        );
        assert!(
            !riw_log_density(&CorrelationMatrix::identity(4), 5.0)
                .unwrap()
                .normalized
        );
        for m in [1.5, 3.0, 6.0] {
            for rho in [-0.9, -0.2, 0.0, 0.55] {
                let p = CorrelationMatrix::from_lower_offdiag(2, &[rho]).unwrap();
                let got = riw_log_density(&p, m).unwrap().value;
                let want = (m - 3.0) / 2.0 * (1.0 - rho * rho).ln();
                assert!(close(got, want, 1e-14));
            }
        }
        assert_eq!(
            riw_log_density(&CorrelationMatrix::identity(1), 2.0).unwrap().value,
            0.0
        );
    }

    /// Ratio of RIW kernels at two points against the ratio of sample
    /// counts in small boxes around them. The expected ratio averages the
    /// kernel over each box on a midpoint grid.
    #[test]
    fn riw_kernel_matches_histogram_ratio() {
        let (t, m) = (3usize, 4.0);
        let centers = [[0.0, 0.0, 0.0], [0.5, 0.4, 0.3]];
        let half = 0.08;
        let box_mass = |c: &[f64; 3]| {
            let g = 12;
            let h = 2.0 * half / g as f64;
            let mut s = 0.0;
            for a in 0..g {
                for b in 0..g {
                    for e in 0..g {
                        let x = [
                            c[0] - half + (a as f64 + 0.5) * h,
                            c[1] - half + (b as f64 + 0.5) * h,
                            c[2] - half + (e as f64 + 0.5) * h,
                        ];
                        let p = CorrelationMatrix::from_lower_offdiag(3, &x).unwrap();
                        s += riw_log_density(&p, m).unwrap().value.exp();
                    }
                }
            }
            s
        };
        let expected = box_mass(&centers[1]) / box_mass(&centers[0]);

        let mut rng = RandomStream::new(314);
        let mut counts = [0u64; 2];
        for _ in 0..400_000 {
            let p = sample_riw_correlation(t, m, &mut rng).unwrap();
            let x = p.lower_offdiag();
            for (c, n) in centers.iter().zip(counts.iter_mut()) {
                if x.iter().zip(c).all(|(v, cv)| (v - cv).abs() < half) {
                    *n += 1;
                }
            }
        }
        let observed = counts[1] as f64 / counts[0] as f64;
        let rel_se = (1.0 / counts[0] as f64 + 1.0 / counts[1] as f64).sqrt();
        assert!(counts[0] > 200 && counts[1] > 100, "{counts:?}");
        assert!(
            (observed / expected).ln().abs() < 3.5 * rel_se,
            "observed {observed}, expected {expected}, counts {counts:?}"
        );
    }

    #[test]
    fn marginal_examples() {
        for rho in [-0.99, -0.3, 0.0, 0.8] {
            assert!(close(marginal_rho_log_density(rho, 1.0).unwrap(), -LN_2, 1e-15));
        }
        let want = -0.28768207245178092744;
        assert!(close(marginal_rho_log_density(0.0, 2.0).unwrap(), want, 1e-15));
        assert!(marginal_rho_log_density(1.0, 2.0).is_err());
        assert!(marginal_rho_log_density(-1.0, 2.0).is_err());
        assert!(marginal_rho_log_density(0.0, 0.0).is_err());
    }

    #[test]
    fn marginal_integrates_to_one() {
        // ρ = sin θ removes the endpoint singularity at a = ½.
        for a in [0.5, 1.0, 2.0, 5.0] {
            let n = 20_000;
            let (lo, hi) = (-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2);
            let h = (hi - lo) / n as f64;
            let g = |th: f64| {
                let r = th.sin();
                if r.abs() >= 1.0 {
                    // Limit of cos^{2a−1}θ at the endpoints.
                    return if a == 0.5 {
                        (-log_beta_function(a, a).unwrap()).exp()
                    } else {
                        0.0
                    };
                }
                marginal_rho_log_density(r, a).unwrap().exp() * th.cos()
            };
            let mut s = g(lo) + g(hi);
            for i in 1..n {
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(lo + i as f64 * h);
            }
            let total = s * h / 3.0;
            assert!((total - 1.0).abs() < 1e-8, "a={a}: {total}");
        }
    }

    fn permute(p: &CorrelationMatrix, perm: &[usize]) -> CorrelationMatrix {
        let s = SymmetricMatrix::from_fn(p.dim(), |i, j| p.get(perm[i], perm[j]));
        CorrelationMatrix::new(s).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn densities_are_permutation_invariant(seed in any::<u64>(), d in 2usize..8, eta in 0.3f64..5.0) {
            let mut rng = RandomStream::new(seed);
            let p = sample_onion_correlation(d, eta, &mut rng).unwrap();
            let mut perm: Vec<usize> = (0..d).collect();
            for i in (1..d).rev() {
                let j = (rng.next_u64() % (i as u64 + 1)) as usize;
                perm.swap(i, j);
            }
            let q = permute(&p, &perm);
            let m = 2.0 * eta + d as f64 - 1.0;
            let pairs = [
                (rw_log_density(&p, m).unwrap().value, rw_log_density(&q, m).unwrap().value),
                (lkj_log_density(&p, eta).unwrap().value, lkj_log_density(&q, eta).unwrap().value),
                (riw_log_density(&p, m).unwrap().value, riw_log_density(&q, m).unwrap().value),
            ];
            for (a, b) in pairs {
                prop_assert!((a - b).abs() < 1e-9 * a.abs().max(1.0), "{} vs {}", a, b);
            }
        }
    }
}
