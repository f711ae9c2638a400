//! Closed-form bandlimited function with zeros at every even integer.
//!
//! `F(x) = sin(πx/2) · Ψ(x)` where `Ψ` is the inverse Fourier transform of a
//! smooth even bump `ψ` with `ψ = 1` on `[-a, a]` and support in `[-b, b]`,
//! `b ≤ 1/4`. The sine shifts the spectrum by `±1/4`, so
//! `F̂(ξ) = (ψ(ξ − 1/4) − ψ(ξ + 1/4)) / 2i` lives in `[-1/2, 1/2]`.

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::quadrature::legendre_nodes;
use crate::Complex;

const TRANSITION_PANELS: usize = 16;
const PANEL_NODES: usize = 24;
/// Half-width of the grid on which the decay and derivative constants are measured.
pub const VERIFICATION_EXTENT: f64 = 100.0;
const VERIFICATION_STEP: f64 = 0.005;

/// Even `C^∞` bump: 1 on `[-inner, inner]`, 0 outside `(-outer, outer)`,
/// joined by the smooth step `e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothBump {
    inner: f64,
    outer: f64,
}

impl SmoothBump {
    pub fn new(inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0 && inner < outer && outer <= 0.25) {
            return invalid(format!(
                "bump needs 0 < inner < outer <= 1/4 (got inner={inner}, outer={outer})"
            ));
        }
        Ok(Self { inner, outer })
    }

    /// `ψ = 1` on `[-1/8, 1/8]`, support `[-1/4, 1/4]`.
    pub fn standard() -> Self {
        Self { inner: 0.125, outer: 0.25 }
    }

    pub fn inner(&self) -> f64 {
        self.inner
    }

    pub fn outer(&self) -> f64 {
        self.outer
    }

    pub fn value(&self, xi: f64) -> f64 {
        let a = xi.abs();
        if a <= self.inner {
            1.0
        } else if a >= self.outer {
            0.0
        } else {
            1.0 - smooth_step((a - self.inner) / (self.outer - self.inner))
        }
    }
}

fn smooth_step(t: f64) -> f64 {
    let f = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    let a = f(t);
    let b = f(1.0 - t);
    a / (a + b)
}

/// The adversarial function with its measured constants.
#[derive(Debug, Clone)]
pub struct ClosedFormFunction {
    bump: SmoothBump,
    /// Transition-region nodes and `w·ψ` products on `[inner, outer]`.
    nodes: Vec<f64>,
    weighted_bump: Vec<f64>,
    /// `c1` with `|F(x)| ≤ c1 / (1 + x²)`.
    pub decay_constant: f64,
    /// `c2 = ‖F'‖_∞`.
    pub derivative_bound: f64,
    pub l2_norm: f64,
    /// `‖F‖_∞ ≤ ∫ψ`.
    pub sup_bound: f64,
}

/// Builds `F` for the given bump and measures `c1`, `c2`, `‖F‖₂`.
pub fn adversarial_bump_function(bump: SmoothBump) -> Result<ClosedFormFunction> {
    SmoothBump::new(bump.inner, bump.outer)?;
    let (x, w) = legendre_nodes(PANEL_NODES);
    let width = (bump.outer - bump.inner) / TRANSITION_PANELS as f64;
    let mut nodes = Vec::with_capacity(TRANSITION_PANELS * PANEL_NODES);
    let mut weighted_bump = Vec::with_capacity(nodes.capacity());
    for p in 0..TRANSITION_PANELS {
        let mid = bump.inner + (p as f64 + 0.5) * width;
        for (xi, wi) in x.iter().zip(&w) {
            let node = mid + 0.5 * width * xi;
            nodes.push(node);
            weighted_bump.push(0.5 * width * wi * bump.value(node));
        }
    }
    let bump_integral = 2.0 * (bump.inner + weighted_bump.iter().sum::<f64>());
    let bump_sq_integral = 2.0
        * (bump.inner + nodes.iter().zip(&weighted_bump).map(|(n, wb)| wb * bump.value(*n)).sum::<f64>());
    let mut f = ClosedFormFunction {
        bump,
        nodes,
        weighted_bump,
        decay_constant: 0.0,
        derivative_bound: 0.0,
        // |F̂|² integrates to (1/4)·2·∫ψ²
        l2_norm: (0.5 * bump_sq_integral).sqrt(),
        sup_bound: bump_integral,
    };
    f.measure_constants();
    Ok(f)
}

impl ClosedFormFunction {
    pub fn bump(&self) -> SmoothBump {
        self.bump
    }

    /// `Ψ(x) = ∫ψ(ξ) e^{2πixξ} dξ` (real and even).
    pub fn envelope(&self, x: f64) -> f64 {
        let a = self.bump.inner;
        let plateau = if (x * a).abs() < 1e-8 {
            2.0 * a * (1.0 - (2.0 * PI * a * x).powi(2) / 6.0)
        } else {
            (2.0 * PI * a * x).sin() / (PI * x)
        };
        let transition: f64 = self
            .nodes
            .iter()
            .zip(&self.weighted_bump)
            .map(|(xi, wb)| wb * (2.0 * PI * x * xi).cos())
            .sum();
        plateau + 2.0 * transition
    }

    /// `Ψ'(x)`.
    pub fn envelope_derivative(&self, x: f64) -> f64 {
        let a = self.bump.inner;
        let plateau = if (x * a).abs() < 1e-4 {
            -2.0 * a * (2.0 * PI * a).powi(2) * x / 3.0
        } else {
            let t = 2.0 * PI * a * x;
            2.0 * a * t.cos() / x - t.sin() / (PI * x * x)
        };
        let transition: f64 = self
            .nodes
            .iter()
            .zip(&self.weighted_bump)
            .map(|(xi, wb)| -wb * 2.0 * PI * xi * (2.0 * PI * x * xi).sin())
            .sum();
        plateau + 2.0 * transition
    }

    pub fn value(&self, x: f64) -> f64 {
        (0.5 * PI * x).sin() * self.envelope(x)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let (s, c) = (0.5 * PI * x).sin_cos();
        0.5 * PI * c * self.envelope(x) + s * self.envelope_derivative(x)
    }

    /// Analytic spectrum `F̂(ξ) = (ψ(ξ − 1/4) − ψ(ξ + 1/4)) / 2i`.
    pub fn fourier_transform(&self, xi: f64) -> Complex {
        let diff = self.bump.value(xi - 0.25) - self.bump.value(xi + 0.25);
        Complex::new(0.0, -0.5 * diff)
    }

    /// Largest `|∫_{-L}^{L} F(x) e^{-2πixξ} dx|` over the given frequencies,
    /// by composite Gauss–Legendre quadrature.
    pub fn fourier_residual(&self, frequencies: &[f64], half_window: f64) -> f64 {
        let (x, w) = legendre_nodes(16);
        let panels = (2.0 * half_window / 0.5).ceil() as usize;
        let width = 2.0 * half_window / panels as f64;
        let mut samples = Vec::with_capacity(panels * x.len());
        for p in 0..panels {
            let mid = -half_window + (p as f64 + 0.5) * width;
            for (xi, wi) in x.iter().zip(&w) {
                let t = mid + 0.5 * width * xi;
                samples.push((t, 0.5 * width * wi * self.value(t)));
            }
        }
        frequencies
            .iter()
            .map(|xi| {
                samples
                    .iter()
                    .map(|(t, wf)| Complex::from_polar(*wf, -2.0 * PI * t * xi))
                    .sum::<Complex>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }

    fn measure_constants(&mut self) {
        // F is odd, so |F| and |F'| are even: scan x ≥ 0.
        let steps = (VERIFICATION_EXTENT / VERIFICATION_STEP).round() as usize;
        let mut decay: f64 = 0.0;
        let mut decay_slope: f64 = 0.0;
        let mut deriv: f64 = 0.0;
        for i in 0..=steps {
            let x = i as f64 * VERIFICATION_STEP;
            let v = self.value(x).abs();
            let dv = self.derivative(x).abs();
            decay = decay.max(v * (1.0 + x * x));
            decay_slope = decay_slope.max(dv * (1.0 + x * x) + 2.0 * x * v);
            deriv = deriv.max(dv);
        }
        let h = 0.5 * VERIFICATION_STEP;
        self.decay_constant = decay + h * decay_slope;
        // ‖F''‖_∞ ≤ π²‖F‖_∞ for spectrum in [-1/2, 1/2]
        self.derivative_bound = deriv + h * PI * PI * self.sup_bound;
    }
}
