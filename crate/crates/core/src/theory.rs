//! Explicit constants and probability bounds of the random sampling theorems.
//!
//! Quantities that overflow double precision (covering numbers, the prefactor
//! `A`) are carried as natural logarithms.

use std::f64::consts::{LN_2, PI, SQRT_2};

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::spectrum::{calibrate_kappa, counting_function, fuchs_defect, Spectrum1D, SpectrumD};

/// Default splitting parameter in the eigenvalue counting estimate.
pub const DEFAULT_ALPHA: f64 = 0.5;
/// Bandwidths used to fit `C` in `log A <= C R^d`.
pub const EXPONENT_FIT_BANDWIDTHS: [f64; 3] = [4.0, 8.0, 16.0];
/// The constant `41` in the chaining denominators (`36ℓ²/2^ℓ < 41`).
pub const CHAIN_VARIANCE_FACTOR: f64 = 41.0;
const C1_SEARCH_LIMIT: u32 = 64;

/// Surface area `σ_{d−1} = dπ^{d/2}/Γ(d/2+1)` of the unit sphere in `R^d`.
pub fn sphere_surface(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    d as f64 * PI.powf(h) / libm::tgamma(h + 1.0)
}

/// `K_d` in `‖f‖_{∞,R} ≤ K_d ‖f‖₂^{d/(d+2)} ‖f‖_{2,R}^{2/(d+2)}`.
///
/// # Panics
/// If `d == 0`.
pub fn norm_comparison_constant(d: usize) -> f64 {
    assert!(d >= 1, "dimension must be positive");
    let df = d as f64;
    let inner = 2f64.powf(df - 1.0) / sphere_surface(d) * (df + 1.0) * (df + 2.0);
    2.0 * inner.powf(1.0 / (df + 2.0)) * (PI * df.sqrt()).powf(df / (df + 2.0))
}

/// Smallest `δ` for which `B(R, δ)` can be nonempty, to leading order.
pub fn delta_feasibility(bandwidth: f64, d: usize) -> f64 {
    fuchs_defect(bandwidth, d)
}

fn check_unit_open(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        invalid(format!("{name} must lie in (0, 1), got {v}"))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        invalid(format!("{name} must be positive and finite, got {v}"))
    }
}

/// `log N₂(ε)` for `V(R, δ)` in the local `L²` norm.
///
/// The logarithm `log(2√δ/ε)` is taken as zero when negative.
pub fn covering_number_l2(bandwidth: f64, delta: f64, eps: f64, d: usize, kappa: f64) -> Result<f64> {
    check_positive("R", bandwidth)?;
    check_unit_open("delta", delta)?;
    check_unit_open("eps", eps)?;
    let width = bandwidth + kappa * (2.0 * delta.sqrt() / eps).ln().max(0.0);
    Ok(2f64.powi(d as i32 + 1) * width.powi(d as i32) * (4.0 * SQRT_2 / eps).ln())
}

/// `log N(ε)` for `V(R, δ)` in the local sup norm.
pub fn covering_number_sup(bandwidth: f64, eps: f64, d: usize, kappa: f64, k_d: f64) -> Result<f64> {
    check_positive("R", bandwidth)?;
    check_unit_open("eps", eps)?;
    let df = d as f64;
    let width = bandwidth + kappa * (df / 2.0 + 1.0) * (2.0 * k_d / eps).ln().max(0.0);
    Ok(2f64.powi(d as i32 + 1) * width.powi(d as i32) * (4.0 * k_d / eps).ln())
}

/// `p(ℓ)`, the log covering number at `ε = 2^{−ℓ}`.
pub fn p_poly(level: f64, bandwidth: f64, d: usize, kappa: f64, k_d: f64) -> f64 {
    let df = d as f64;
    let width = bandwidth + (df / 2.0 + 1.0) * kappa * ((level + 1.0) * LN_2 + k_d.ln());
    2f64.powi(d as i32 + 1) * width.powi(d as i32) * ((level + 2.0) * LN_2 + k_d.ln())
}

/// Truncation dimension for an `ε`-net of `V(R, δ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationDimension {
    /// Minimal `D` with `λ_{D+1} < ε²/(4δ)`, raised to 1 when that is 0.
    pub dimension: usize,
    /// Set when the threshold already exceeds `λ_1`.
    pub degenerate: bool,
    pub threshold: f64,
    /// `2^d (R + κ log(2√δ/ε))^d`.
    pub closed_form: f64,
}

pub fn truncation_dimension(spectrum: &SpectrumD, delta: f64, eps: f64, kappa: f64) -> Result<TruncationDimension> {
    check_unit_open("delta", delta)?;
    check_positive("eps", eps)?;
    let d = spectrum.dimension();
    let threshold = eps * eps / (4.0 * delta);
    let closed_form = (2.0 * (spectrum.bandwidth() + kappa * (2.0 * delta.sqrt() / eps).ln().max(0.0))).powi(d as i32);
    let count = if threshold > 1.0 { 0 } else { counting_function(spectrum, threshold)? };
    Ok(TruncationDimension { dimension: count.max(1), degenerate: count == 0, threshold, closed_form })
}

/// Chaining constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainConstants {
    pub c1: f64,
    pub c1_argmin: u32,
    pub c2: f64,
    pub c2_argmax: u32,
    /// Last level inspected for `c2`; beyond it `p(ℓ)/2^{ℓ/2}` decreases.
    pub c2_search_end: u32,
    pub log_a: f64,
    pub b: f64,
}

/// `c1 = min_{ℓ≥2} 2^{ℓ/2}/(8ℓ²)` with its minimizer.
pub fn chain_c1() -> (f64, u32) {
    // 2^{ℓ/2}/ℓ² increases for ℓ ≥ 5, so a finite scan is exact
    (2..=C1_SEARCH_LIMIT)
        .map(|l| (2f64.powf(l as f64 / 2.0) / (8.0 * (l * l) as f64), l))
        .fold((f64::INFINITY, 0), |acc, v| if v.0 < acc.0 { v } else { acc })
}

pub fn chain_constants(bandwidth: f64, d: usize, kappa: f64, k_d: f64) -> Result<ChainConstants> {
    check_positive("R", bandwidth)?;
    check_positive("kappa", kappa)?;
    if d == 0 {
        return invalid("dimension must be positive");
    }
    let (c1, c1_argmin) = chain_c1();
    // every affine factor of p has a nonnegative intercept, so
    // p(ℓ+1)/p(ℓ) ≤ (1+1/ℓ)^{d+1}; once that drops below √2 the terms decrease
    let mut c2 = f64::NEG_INFINITY;
    let mut c2_argmax = 2;
    let mut level = 2u32;
    loop {
        let v = 2.0 * p_poly(level as f64, bandwidth, d, kappa, k_d) / 2f64.powf(level as f64 / 2.0);
        if v > c2 {
            c2 = v;
            c2_argmax = level;
        }
        if (1.0 + 1.0 / level as f64).powi(d as i32 + 1) < SQRT_2 {
            break;
        }
        level += 1;
    }
    let df = d as f64;
    let first = 2f64.powi(d as i32 + 1)
        * (bandwidth + kappa * (df / 2.0 + 1.0) * (4.0 * k_d).ln()).powi(d as i32)
        * (8.0 * k_d).ln();
    Ok(ChainConstants {
        c1,
        c1_argmin,
        c2,
        c2_argmax,
        c2_search_end: level,
        log_a: first.max(SQRT_2 * c2),
        b: (SQRT_2 * c1).min(3.0),
    })
}

/// `C = max_R log A(R) / R^d` over [`EXPONENT_FIT_BANDWIDTHS`].
pub fn fit_exponent_scale(d: usize, kappa: f64, k_d: f64) -> Result<f64> {
    let mut c = 0.0f64;
    for r in EXPONENT_FIT_BANDWIDTHS {
        c = c.max(chain_constants(r, d, kappa, k_d)?.log_a / r.powi(d as i32));
    }
    Ok(c)
}

/// All constants for one `(R, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoryParams {
    pub d: usize,
    #[serde(rename = "R")]
    pub bandwidth: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub k_d: f64,
    pub c1: f64,
    pub c2: f64,
    pub log_a: f64,
    pub b: f64,
    /// Exponent scale in `A <= exp(C R^d)`.
    pub c: f64,
}

impl TheoryParams {
    pub fn new(bandwidth: f64, d: usize, kappa: f64) -> Result<Self> {
        if d == 0 {
            return invalid("dimension must be positive");
        }
        let k_d = norm_comparison_constant(d);
        let chain = chain_constants(bandwidth, d, kappa, k_d)?;
        Ok(Self {
            d,
            bandwidth,
            kappa,
            alpha: DEFAULT_ALPHA,
            k_d,
            c1: chain.c1,
            c2: chain.c2,
            log_a: chain.log_a,
            b: chain.b,
            c: fit_exponent_scale(d, kappa, k_d)?,
        })
    }

    /// Uses the `κ` fitted to the one-dimensional spectrum.
    pub fn from_spectrum(spectrum: &Spectrum1D, d: usize) -> Result<Self> {
        Self::new(spectrum.bandwidth(), d, calibrate_kappa(spectrum)?)
    }

    /// Smallest `λ` for which the deviation bound is established:
    /// `λ ≥ K + (41 K r R^{−d})^{1/2}` with `K = (c2 + 2^{3/2}/log 2)/c1`.
    pub fn validity_threshold(&self, r: u64) -> f64 {
        let k = (self.c2 + 2f64.powf(1.5) / LN_2) / self.c1;
        k + (CHAIN_VARIANCE_FACTOR * k * r as f64 / self.bandwidth.powi(self.d as i32)).sqrt()
    }
}

/// A probability bound with its unclipped logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbabilityBound {
    pub value: f64,
    /// Logarithm of the unclipped expression (of `2A e^{…}` for the sampling bound).
    pub log_value: f64,
    /// The bound carries no information (≥ 1 for tails, ≤ 0 for success probabilities).
    pub vacuous: bool,
}

/// `min(1, 2A exp(−Bλ²/(41 r R^{−d} + λ)))`.
pub fn deviation_bound(lambda: f64, r: u64, bandwidth: f64, d: usize, log_a: f64, b: f64) -> Result<ProbabilityBound> {
    if !(lambda >= 0.0) {
        return invalid(format!("lambda must be nonnegative, got {lambda}"));
    }
    check_positive("R", bandwidth)?;
    let denom = CHAIN_VARIANCE_FACTOR * r as f64 / bandwidth.powi(d as i32) + lambda;
    let exponent = if denom > 0.0 { b * lambda * lambda / denom } else { 0.0 };
    let log_value = LN_2 + log_a - exponent;
    let vacuous = log_value >= 0.0;
    Ok(ProbabilityBound { value: if vacuous { 1.0 } else { log_value.exp() }, log_value, vacuous })
}

/// `max(0, 1 − 2A exp(−B (r/R^d) μ²/(41+μ)))`.
pub fn sampling_probability_bound(r: u64, bandwidth: f64, d: usize, mu: f64, log_a: f64, b: f64) -> Result<ProbabilityBound> {
    check_positive("mu", mu)?;
    check_positive("R", bandwidth)?;
    let log_value = LN_2 + log_a - b * (r as f64 / bandwidth.powi(d as i32)) * mu * mu / (CHAIN_VARIANCE_FACTOR + mu);
    let vacuous = log_value >= 0.0;
    Ok(ProbabilityBound { value: if vacuous { 0.0 } else { -log_value.exp_m1() }, log_value, vacuous })
}

/// `⌈R^d (41+μ)/(Bμ²) (log(2/ε) + C R^d)⌉`.
pub fn min_samples(bandwidth: f64, d: usize, mu: f64, eps: f64, b: f64, c: f64) -> Result<u64> {
    check_positive("R", bandwidth)?;
    check_positive("mu", mu)?;
    check_positive("B", b)?;
    check_unit_open("eps", eps)?;
    let rd = bandwidth.powi(d as i32);
    let r = (rd * (CHAIN_VARIANCE_FACTOR + mu) / (b * mu * mu) * ((2.0 / eps).ln() + c * rd)).ceil();
    if !(r.is_finite() && r < u64::MAX as f64) {
        return Err(Error::Numeric(format!("sample count {r:e} does not fit in 64 bits")));
    }
    Ok(r as u64)
}

/// Bernstein tail `2 exp(−λ²/(2rσ² + (2/3)Mλ))`, at most 2.
pub fn bernstein_bound(lambda: f64, r: u64, sigma2: f64, m: f64) -> Result<ProbabilityBound> {
    check_positive("sigma2", sigma2)?;
    check_positive("M", m)?;
    if !(lambda >= 0.0) {
        return invalid(format!("lambda must be nonnegative, got {lambda}"));
    }
    let log_value = LN_2 - lambda * lambda / (2.0 * r as f64 * sigma2 + 2.0 / 3.0 * m * lambda);
    let value = log_value.exp().min(2.0);
    Ok(ProbabilityBound { value, log_value, vacuous: value >= 1.0 })
}

/// `e^{−ap}/(p a log a)`, an upper bound for `Σ_{ℓ≥2} e^{−a^ℓ p}`.
pub fn geometric_tail_bound(p: f64, a: f64) -> Result<f64> {
    check_positive("p", p)?;
    if !(a > 1.0 && a.is_finite()) {
        return invalid(format!("a must exceed 1, got {a}"));
    }
    Ok((-a * p).exp() / (p * a * a.ln()))
}
