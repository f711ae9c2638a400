//! Gauss–Legendre quadrature on the frequency interval `[-1/2, 1/2]`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Gauss–Legendre rule on `[-1/2, 1/2]`. Nodes ascend; weights sum to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Builds the `order`-point rule, exact for polynomials of degree `2·order − 1`.
    pub fn gauss_legendre(order: usize) -> Result<Self> {
        if order < 2 {
            return invalid(format!("quadrature order must be at least 2, got {order}"));
        }
        let (x, w) = legendre_nodes(order);
        Ok(Self {
            nodes: x.iter().map(|v| 0.5 * v).collect(),
            weights: w.iter().map(|v| 0.5 * v).collect(),
        })
    }

    /// Reassembles a rule from stored arrays, checking the invariants.
    pub fn from_parts(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() || nodes.len() < 2 {
            return invalid("nodes and weights must have equal length >= 2");
        }
        if nodes.windows(2).any(|p| p[0] >= p[1]) {
            return invalid("quadrature nodes must be strictly increasing");
        }
        if nodes.iter().any(|x| x.abs() > 0.5) || weights.iter().any(|w| *w <= 0.0) {
            return invalid("nodes must lie in [-1/2, 1/2] with positive weights");
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return invalid(format!("weights sum to {total}, expected 1"));
        }
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integrates `f` over `[-1/2, 1/2]`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }

    /// Nodes and weights affinely mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let mid = 0.5 * (a + b);
        let len = b - a;
        let nodes = self.nodes.iter().map(|x| mid + len * x).collect();
        let weights = self.weights.iter().map(|w| len * w).collect();
        (nodes, weights)
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending, by Newton
/// iteration on the three-term recurrence.
pub(crate) fn legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess for the i-th largest root.
        let theta = std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5);
        let mut x = (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf)) * theta.cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_eval(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                let (_, d) = legendre_eval(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
        nodes[i] = -x;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))`.
fn legendre_eval(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
