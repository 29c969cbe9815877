//! Log-gamma family and the normalizing constants of the restricted Wishart
//! and LKJ laws, all evaluated in log space.
//!
//! The LKJ constant carries a power of two whose exponent grows like `d³`,
//! so nothing here is ever exponentiated.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};

const LN_PI: f64 = 1.144_729_885_849_400_2;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

// Lanczos approximation, g = 671/128, 14 terms.
const LANCZOS_G: f64 = 5.242_187_5;
const LANCZOS_C0: f64 = 0.999_999_999_999_997_1;
const LANCZOS_COEF: [f64; 14] = [
    57.156_235_665_862_923_5,
    -59.597_960_355_475_491_2,
    14.136_097_974_741_747_1,
    -0.491_913_816_097_620_199,
    0.339_946_499_848_118_887e-4,
    0.465_236_289_270_485_756e-4,
    -0.983_744_753_048_795_646e-4,
    0.158_088_703_224_912_494e-3,
    -0.210_264_441_724_104_883e-3,
    0.217_439_618_115_212_643e-3,
    -0.164_318_106_536_763_890e-3,
    0.844_182_239_838_527_433e-4,
    -0.261_908_384_015_814_087e-4,
    0.368_991_826_595_316_234e-5,
];

/// `ln Γ(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("log_gamma requires x > 0, got {x}")));
    }
    Ok(log_gamma_unchecked(x))
}

pub(crate) fn log_gamma_unchecked(x: f64) -> f64 {
    // Γ(1) = Γ(2) = 1; the Lanczos sum leaves ~1e-15 residue there.
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    let t = x + LANCZOS_G;
    let head = (x + 0.5) * t.ln() - t;
    let mut ser = LANCZOS_C0;
    let mut y = x;
    for c in LANCZOS_COEF {
        y += 1.0;
        ser += c / y;
    }
    head + LN_SQRT_2PI + (ser / x).ln()
}

/// `ln Γ_T(x) = T(T−1)/4 · ln π + Σₖ ln Γ(x + (1−k)/2)`.
pub fn log_multivariate_gamma(t: usize, x: f64) -> Result<f64> {
    if t == 0 {
        return Err(Error::domain("multivariate gamma dimension must be >= 1"));
    }
    let smallest = x - (t as f64 - 1.0) / 2.0;
    if !(smallest > 0.0) {
        return Err(Error::domain(format!(
            "log_multivariate_gamma({t}, {x}) needs x > {}",
            (t as f64 - 1.0) / 2.0
        )));
    }
    let tf = t as f64;
    let mut s = tf * (tf - 1.0) / 4.0 * LN_PI;
    for k in 1..=t {
        s += log_gamma_unchecked(x + (1.0 - k as f64) / 2.0);
    }
    Ok(s)
}

/// `ln B(a, b)`.
pub fn log_beta_function(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::domain(format!(
            "log_beta_function requires a, b > 0, got ({a}, {b})"
        )));
    }
    Ok(log_gamma_unchecked(a) + log_gamma_unchecked(b) - log_gamma_unchecked(a + b))
}

/// LKJ parameters: dimension `d` and shape `eta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LkjParams {
    pub d: usize,
    pub eta: f64,
}

impl LkjParams {
    pub fn new(d: usize, eta: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::domain("LKJ dimension must be >= 1"));
        }
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::domain(format!("LKJ eta must be > 0, got {eta}")));
        }
        Ok(Self { d, eta })
    }

    /// The restricted Wishart law with the same distribution.
    pub fn to_rw(self) -> RwParams {
        RwParams {
            t: self.d,
            m: eta_to_dof_unchecked(self.d, self.eta),
        }
    }
}

/// Restricted Wishart / restricted inverse-Wishart parameters: dimension
/// `t` and degrees of freedom `m > t − 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RwParams {
    pub t: usize,
    pub m: f64,
}

impl RwParams {
    pub fn new(t: usize, m: f64) -> Result<Self> {
        if t == 0 {
            return Err(Error::domain("dimension must be >= 1"));
        }
        if !(m > t as f64 - 1.0) || !m.is_finite() {
            return Err(Error::domain(format!(
                "degrees of freedom must exceed T - 1 = {}, got {m}",
                t - 1
            )));
        }
        Ok(Self { t, m })
    }

    /// The LKJ law with the same distribution.
    pub fn to_lkj(self) -> LkjParams {
        LkjParams {
            d: self.t,
            eta: (self.m - self.t as f64 + 1.0) / 2.0,
        }
    }
}

/// `eta = (m − T + 1) / 2`.
pub fn dof_to_eta(t: usize, m: f64) -> Result<f64> {
    Ok(RwParams::new(t, m)?.to_lkj().eta)
}

/// `m = 2·eta + d − 1`.
pub fn eta_to_dof(d: usize, eta: f64) -> Result<f64> {
    Ok(LkjParams::new(d, eta)?.to_rw().m)
}

fn eta_to_dof_unchecked(d: usize, eta: f64) -> f64 {
    2.0 * eta + d as f64 - 1.0
}

/// `ln c_d`, the LKJ normalizing constant.
pub fn log_lkj_constant(p: LkjParams) -> Result<f64> {
    let p = LkjParams::new(p.d, p.eta)?;
    let d = p.d as f64;
    let a = p.eta;
    let mut pow2 = 0.0;
    let mut betas = 0.0;
    for k in 1..p.d {
        let dk = d - k as f64;
        pow2 += (2.0 * a - 2.0 + dk) * dk;
        let arg = a + (d - 1.0 - k as f64) / 2.0;
        betas += dk * log_beta_function(arg, arg)?;
    }
    Ok(LN_2 * pow2 + betas)
}

/// `ln f(T, m)`, the log of the ratio of the restricted Wishart and LKJ
/// normalizing constants, evaluated through the per-`k` product form.
/// It is identically zero for every valid `(T, m)`.
pub fn log_f_constant(t: usize, m: f64) -> Result<f64> {
    RwParams::new(t, m)?;
    let tf = t as f64;
    let lg_half_m = log_gamma_unchecked(m / 2.0);
    let mut s = 0.0;
    for k in 1..t {
        let kf = k as f64;
        let tk = tf - kf;
        s += (m - kf - 1.0) * tk * LN_2 + lg_half_m - tf / 4.0 * LN_PI
            + (2.0 * tk - 1.0) * log_gamma_unchecked((m - kf) / 2.0)
            - tk * log_gamma_unchecked(m - kf);
    }
    Ok(s)
}

/// Tolerance for `|ln f(T, m)|`: `1e-12` per log-gamma term, floor `1e-10`.
pub fn f_constant_tolerance(t: usize) -> f64 {
    let terms = 3 * t.saturating_sub(1);
    (1e-12 * terms as f64).max(1e-10)
}

/// Residual of the gamma duplication formula in the form
/// `2^{m−2} π^{−½} Γ(m/2) Γ((m−1)/2) / Γ(m−1) = 1`, on the log scale.
pub fn duplication_residual(m: f64) -> Result<f64> {
    if !(m > 1.0) || !m.is_finite() {
        return Err(Error::domain(format!("duplication residual needs m > 1, got {m}")));
    }
    Ok(
        (m - 2.0) * LN_2 - 0.5 * LN_PI + log_gamma_unchecked(m / 2.0) + log_gamma_unchecked((m - 1.0) / 2.0)
            - log_gamma_unchecked(m - 1.0),
    )
}
