//! Bandlimited functions expanded in the prolate eigenbasis, their norms, and
//! the concentration class `B(R, δ)` of unit-norm functions with at least
//! `1 − δ` of their energy on `C_R`.

mod adversarial;

pub use adversarial::{adversarial_bump_function, ClosedFormFunction, SmoothBump};

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::QuadratureRule;
use crate::rng;
use crate::spectrum::{SpectrumD, KERNEL_VERSION};
use crate::Complex;

/// Rejections allowed before the sampler blends toward the top eigenfunction.
pub const SAMPLER_REJECTIONS: usize = 100;
/// Relative tolerance between the coefficient and quadrature local norms.
pub const LOCAL_NORM_RTOL: f64 = 1e-6;

/// `f = Σ_n c_n φ_n` over the first `D` eigenfunctions of a [`SpectrumD`].
///
/// The eigenfunctions are orthonormal in `L²(R^d)` and
/// `∫_{C_R} φ_m conj(φ_n) = λ_n δ_{mn}`.
#[derive(Debug, Clone)]
pub struct BandlimitedFunction {
    spectrum: Arc<SpectrumD>,
    coefficients: Vec<Complex>,
}

impl BandlimitedFunction {
    pub fn new(spectrum: Arc<SpectrumD>, coefficients: Vec<Complex>) -> Result<Self> {
        if coefficients.len() > spectrum.len() {
            return Err(Error::Capacity(format!(
                "{} coefficients but only {} resolved eigenfunctions",
                coefficients.len(),
                spectrum.len()
            )));
        }
        Ok(Self { spectrum, coefficients })
    }

    /// The eigenfunction `φ_{index+1}` (0-based storage index).
    pub fn basis_element(spectrum: Arc<SpectrumD>, index: usize) -> Result<Self> {
        let mut c = vec![Complex::new(0.0, 0.0); index + 1];
        c[index] = Complex::new(1.0, 0.0);
        Self::new(spectrum, c)
    }

    pub fn spectrum(&self) -> &Arc<SpectrumD> {
        &self.spectrum
    }

    pub fn coefficients(&self) -> &[Complex] {
        &self.coefficients
    }

    /// Truncation dimension `D`.
    pub fn truncation(&self) -> usize {
        self.coefficients.len()
    }

    pub fn dimension(&self) -> usize {
        self.spectrum.dimension()
    }

    pub fn evaluate(&self, x: &[f64]) -> Complex {
        let table = BasisTable::new(&self.spectrum, self.truncation(), x);
        table.combine(&self.coefficients)[0]
    }

    /// Values at a flat list of points (`d` coordinates each).
    pub fn evaluate_many(&self, points: &[f64]) -> Vec<Complex> {
        BasisTable::new(&self.spectrum, self.truncation(), points).combine(&self.coefficients)
    }

    /// `‖f‖₂ = ‖c‖₂`.
    pub fn norm_l2(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖f‖_{2,R}` from `Σ |c_n|² λ_n`.
    pub fn norm_l2_local(&self) -> f64 {
        self.local_energy().sqrt()
    }

    /// `‖f‖²_{2,R}`.
    pub fn local_energy(&self) -> f64 {
        self.coefficients
            .iter()
            .zip(self.spectrum.eigenvalues_slice())
            .map(|(c, l)| c.norm_sqr() * l)
            .sum()
    }

    /// `‖f‖_{2,R}` by tensor Gauss–Legendre quadrature of `|f|²` over `C_R`.
    pub fn norm_l2_local_direct(&self, nodes_per_axis: usize) -> Result<f64> {
        let r = self.spectrum.bandwidth();
        let rule = QuadratureRule::gauss_legendre(nodes_per_axis)?;
        let (nodes, weights) = rule.mapped(-0.5 * r, 0.5 * r);
        let grid = AxisGrid::new(&self.spectrum, self.truncation(), &nodes);
        let energy = grid.fold_tensor(&self.coefficients, self.dimension(), &weights, |acc, v, w| acc + w * v.norm_sqr(), 0.0);
        Ok(energy.sqrt())
    }

    /// Both routes to `‖f‖_{2,R}`; disagreement beyond [`LOCAL_NORM_RTOL`]
    /// means the spectrum is not resolved at this truncation.
    pub fn norm_l2_local_checked(&self) -> Result<f64> {
        let coeff = self.norm_l2_local();
        let direct = self.norm_l2_local_direct(default_time_nodes(self.spectrum.bandwidth()))?;
        let (a, b) = (coeff * coeff, direct * direct);
        if (a - b).abs() > LOCAL_NORM_RTOL * a.max(b).max(f64::MIN_POSITIVE) {
            return Err(Error::Numeric(format!(
                "local norm mismatch: coefficient formula {a:.12e} vs quadrature {b:.12e}"
            )));
        }
        Ok(coeff)
    }

    /// Grid maximum of `|f|` over `C_R` with a certified error bound from
    /// the gradient estimate `‖∇f‖_∞ ≤ π√d ‖f‖₂`.
    pub fn norm_sup_local(&self, grid_step: f64) -> Result<SupNorm> {
        let d = self.dimension();
        let limit = 1.0 / (4.0 * PI * (d as f64).sqrt());
        if !(grid_step > 0.0 && grid_step <= limit) {
            return invalid(format!("grid step {grid_step} must lie in (0, {limit:.6}]"));
        }
        let r = self.spectrum.bandwidth();
        let cells = (r / grid_step).ceil() as usize;
        let step = r / cells as f64;
        let coords: Vec<f64> = (0..=cells).map(|i| -0.5 * r + i as f64 * step).collect();
        let grid = AxisGrid::new(&self.spectrum, self.truncation(), &coords);
        let ones = vec![1.0; coords.len()];
        let max = grid.fold_tensor(&self.coefficients, d, &ones, |acc, v, _| acc.max(v.norm()), 0.0);
        // farthest point from the grid is at distance step·√d/2
        let error_bound = 0.5 * step * (d as f64).sqrt() * PI * (d as f64).sqrt() * self.norm_l2();
        Ok(SupNorm { max, error_bound, step })
    }

    /// `self − other` over the common spectrum.
    pub fn difference(&self, other: &Self) -> Result<Self> {
        if !Arc::ptr_eq(&self.spectrum, &other.spectrum) {
            return invalid("functions are expanded over different spectra");
        }
        let n = self.truncation().max(other.truncation());
        let zero = Complex::new(0.0, 0.0);
        let c = (0..n)
            .map(|i| self.coefficients.get(i).copied().unwrap_or(zero) - other.coefficients.get(i).copied().unwrap_or(zero))
            .collect();
        Self::new(self.spectrum.clone(), c)
    }

    /// Frequency-side samples at the quadrature nodes (d = 1 only).
    pub fn frequency_samples(&self) -> Result<Vec<Complex>> {
        if self.dimension() != 1 {
            return invalid("frequency samples are only tabulated in dimension 1");
        }
        let base = self.spectrum.base();
        let order = base.rule().order();
        let mut out = vec![Complex::new(0.0, 0.0); order];
        for (c, idx) in self.coefficients.iter().zip(self.spectrum.multi_indices()) {
            let row = base.eigvec_matrix().row(idx[0]);
            for (o, v) in out.iter_mut().zip(row.iter()) {
                *o += c * v;
            }
        }
        Ok(out)
    }

    pub fn to_record(&self) -> FunctionRecord {
        let base = self.spectrum.base();
        FunctionRecord {
            spectrum_key: SpectrumKey {
                bandwidth: base.bandwidth(),
                order: base.rule().order(),
                kernel_version: KERNEL_VERSION,
                dimension: self.dimension(),
            },
            truncation: self.truncation(),
            coefficients: self.coefficients.iter().map(|c| [c.re, c.im]).collect(),
        }
    }

    pub fn from_record(spectrum: Arc<SpectrumD>, record: &FunctionRecord) -> Result<Self> {
        let base = spectrum.base();
        let key = &record.spectrum_key;
        if key.bandwidth != base.bandwidth()
            || key.order != base.rule().order()
            || key.kernel_version != KERNEL_VERSION
            || key.dimension != spectrum.dimension()
        {
            return Err(Error::Format("function record does not match the supplied spectrum".into()));
        }
        if record.coefficients.len() != record.truncation {
            return Err(Error::Format("coefficient count differs from truncation".into()));
        }
        let c = record.coefficients.iter().map(|p| Complex::new(p[0], p[1])).collect();
        Self::new(spectrum, c)
    }
}

/// Time-domain value of frequency samples: `Σ_i w_i f̂(ξ_i) e^{2πixξ_i}`.
pub fn inverse_transform_1d(rule: &QuadratureRule, samples: &[Complex], x: f64) -> Complex {
    rule.nodes()
        .iter()
        .zip(rule.weights())
        .zip(samples)
        .map(|((xi, w), s)| s * Complex::from_polar(*w, 2.0 * PI * x * xi))
        .sum()
}

/// Gauss–Legendre nodes per axis used for direct local-norm integrals.
pub fn default_time_nodes(bandwidth: f64) -> usize {
    (2.0 * PI * bandwidth).ceil() as usize + 40
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupNorm {
    pub max: f64,
    pub error_bound: f64,
    pub step: f64,
}

impl SupNorm {
    /// Certified upper bound for the true local supremum.
    pub fn upper(&self) -> f64 {
        self.max + self.error_bound
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumKey {
    #[serde(rename = "R")]
    pub bandwidth: f64,
    pub order: usize,
    pub kernel_version: u32,
    pub dimension: usize,
}

/// Serialized function: spectrum key plus `(re, im)` coefficient pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionRecord {
    pub spectrum_key: SpectrumKey,
    pub truncation: usize,
    pub coefficients: Vec<[f64; 2]>,
}

/// Values `φ_n(x_j)` for `n < D` at a list of points; row per point.
#[derive(Debug, Clone)]
pub struct BasisTable {
    rows: usize,
    cols: usize,
    data: Vec<Complex>,
}

impl BasisTable {
    pub fn new(spectrum: &SpectrumD, count: usize, points: &[f64]) -> Self {
        let d = spectrum.dimension();
        assert!(points.len().is_multiple_of(d), "point coordinates not a multiple of d");
        let rows = points.len() / d;
        let span = if count == 0 { 0 } else { spectrum.base_span(count) };
        let base = spectrum.base();
        let indices = &spectrum.multi_indices()[..count];
        let fill = |(x, out): (&[f64], &mut [Complex])| {
            let axes: Vec<Vec<Complex>> = x.iter().map(|xi| base.basis_values(*xi, span)).collect();
            for (slot, idx) in out.iter_mut().zip(indices) {
                *slot = idx.iter().zip(&axes).map(|(k, vals)| vals[*k]).product();
            }
        };
        let mut data = vec![Complex::new(0.0, 0.0); rows * count];
        if count > 0 {
            if rows >= 64 {
                points.par_chunks(d).zip(data.par_chunks_mut(count)).for_each(fill);
            } else {
                points.chunks(d).zip(data.chunks_mut(count)).for_each(fill);
            }
        }
        Self { rows, cols: count, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, j: usize) -> &[Complex] {
        &self.data[j * self.cols..(j + 1) * self.cols]
    }

    /// `f(x_j) = Σ_n c_n φ_n(x_j)` for every row.
    pub fn combine(&self, coefficients: &[Complex]) -> Vec<Complex> {
        let n = coefficients.len().min(self.cols);
        (0..self.rows)
            .map(|j| self.row(j)[..n].iter().zip(coefficients).map(|(p, c)| p * c).sum())
            .collect()
    }
}

/// One-dimensional eigenfunction values on a shared coordinate list, used for
/// tensor grids.
struct AxisGrid<'a> {
    spectrum: &'a SpectrumD,
    count: usize,
    len: usize,
    /// `values[a * span + k] = φ_k(coords[a])`
    values: Vec<Complex>,
    span: usize,
}

impl<'a> AxisGrid<'a> {
    fn new(spectrum: &'a SpectrumD, count: usize, coords: &[f64]) -> Self {
        let span = if count == 0 { 0 } else { spectrum.base_span(count) };
        let base = spectrum.base();
        let values = coords.par_iter().flat_map_iter(|x| base.basis_values(*x, span)).collect();
        Self { spectrum, count, len: coords.len(), values, span }
    }

    /// Folds `op(acc, f(x), Π weights)` over the full tensor grid.
    fn fold_tensor(&self, coefficients: &[Complex], d: usize, weights: &[f64], op: impl Fn(f64, Complex, f64) -> f64, init: f64) -> f64 {
        let indices = &self.spectrum.multi_indices()[..self.count];
        let total = self.len.pow(d as u32);
        let mut acc = init;
        let mut pos = vec![0usize; d];
        for _ in 0..total {
            let mut value = Complex::new(0.0, 0.0);
            for (c, idx) in coefficients.iter().zip(indices) {
                let mut term = *c;
                for (axis, k) in idx.iter().enumerate() {
                    term *= self.values[pos[axis] * self.span + k];
                }
                value += term;
            }
            let w: f64 = pos.iter().map(|p| weights[*p]).product();
            acc = op(acc, value, w);
            for p in pos.iter_mut() {
                *p += 1;
                if *p < self.len {
                    break;
                }
                *p = 0;
            }
        }
        acc
    }
}

impl SpectrumD {
    pub(crate) fn eigenvalues_slice(&self) -> &[f64] {
        crate::spectrum::Eigenvalues::eigenvalues(self)
    }
}

/// The class `B(R, δ)` in dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationClass {
    #[serde(rename = "R")]
    pub bandwidth: f64,
    pub delta: f64,
    pub dimension: usize,
}

impl ConcentrationClass {
    pub fn new(bandwidth: f64, delta: f64, dimension: usize) -> Result<Self> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return invalid(format!("R must be positive, got {bandwidth}"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return invalid(format!("delta must lie in (0, 1), got {delta}"));
        }
        if dimension == 0 {
            return invalid("dimension must be positive");
        }
        Ok(Self { bandwidth, delta, dimension })
    }

    /// True when `δ` is below the leading-order feasibility bound; such classes
    /// are typically empty.
    pub fn below_feasibility_bound(&self) -> bool {
        self.delta < crate::theory::delta_feasibility(self.bandwidth, self.dimension)
    }

    /// Nonempty iff the top eigenvalue reaches `1 − δ`.
    pub fn is_nonempty(&self, spectrum: &SpectrumD) -> bool {
        !spectrum.is_empty() && spectrum.lambda(1) >= 1.0 - self.delta
    }

    fn matches(&self, spectrum: &SpectrumD) -> bool {
        spectrum.bandwidth() == self.bandwidth && spectrum.dimension() == self.dimension
    }
}

/// `‖f‖₂ = 1` (to 1e-9) and `‖f‖²_{2,R} ≥ 1 − δ`.
pub fn membership(f: &BandlimitedFunction, class: &ConcentrationClass) -> bool {
    class.matches(f.spectrum()) && (f.norm_l2() - 1.0).abs() <= 1e-9 && f.local_energy() >= 1.0 - class.delta
}

/// Unit vector of i.i.d. complex Gaussian coefficients over the top `count`
/// eigenfunctions.
pub fn random_unit_function<R: Rng>(spectrum: Arc<SpectrumD>, count: usize, rng: &mut R) -> Result<BandlimitedFunction> {
    if count == 0 {
        return invalid("truncation must be at least 1");
    }
    let c = normalized(gaussian_vector(count, rng));
    BandlimitedFunction::new(spectrum, c)
}

/// Draws a member of `B(R, δ)` supported on the top `truncation`
/// eigenfunctions.
///
/// Gaussian directions are tried first; after [`SAMPLER_REJECTIONS`] failures
/// the last draw is blended toward `φ_1` by the smallest mixing weight that
/// meets the constraint. The blend biases samples toward `φ_1`.
pub fn sample_random_member(
    class: &ConcentrationClass,
    spectrum: Arc<SpectrumD>,
    truncation: usize,
    seed: u64,
) -> Result<BandlimitedFunction> {
    if !class.matches(&spectrum) {
        return invalid("class and spectrum disagree on R or d");
    }
    if truncation == 0 || truncation > spectrum.len() {
        return Err(Error::Capacity(format!("truncation {truncation} outside 1..={}", spectrum.len())));
    }
    let lambdas = &spectrum.eigenvalues_slice()[..truncation];
    let target = 1.0 - class.delta;
    if lambdas[0] < target {
        return Err(Error::Sampling {
            message: format!("class B(R={}, delta={}) is empty", class.bandwidth, class.delta),
            achieved: lambdas[0],
        });
    }
    let concentration = |c: &[Complex]| c.iter().zip(lambdas).map(|(a, l)| a.norm_sqr() * l).sum::<f64>();

    let mut rng = rng::stream(seed, 0);
    let mut last = Vec::new();
    for _ in 0..SAMPLER_REJECTIONS {
        let c = normalized(gaussian_vector(truncation, &mut rng));
        if concentration(&c) >= target {
            return BandlimitedFunction::new(spectrum, c);
        }
        last = c;
    }

    let blend = |t: f64| {
        let mut c: Vec<Complex> = last.iter().map(|a| a * (1.0 - t)).collect();
        c[0] += t;
        normalized(c)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if concentration(&blend(mid)) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let c = blend(hi);
    let achieved = concentration(&c);
    if achieved < target {
        return Err(Error::Sampling { message: "blend failed to reach the concentration target".into(), achieved });
    }
    BandlimitedFunction::new(spectrum, c)
}

fn gaussian_vector<R: Rng>(n: usize, rng: &mut R) -> Vec<Complex> {
    (0..n)
        .map(|_| Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

fn normalized(mut c: Vec<Complex>) -> Vec<Complex> {
    let norm = c.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        c.iter_mut().for_each(|a| *a /= norm);
    }
    c
}
