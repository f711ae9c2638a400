//! Spectrum of the time-frequency limiting operator.
//!
//! In one dimension the operator acts on the frequency side as the integral
//! operator with kernel `sin(πR(ξ−η)) / (π(ξ−η))` on `[-1/2, 1/2]`. It is
//! discretized with a Gauss–Legendre rule and the symmetrized Nyström matrix
//! `√w_i K(ξ_i, ξ_j) √w_j`. The d-dimensional operator is the d-fold tensor
//! product, so its eigenvalues are products of one-dimensional ones.
//!
//! Indexing: [`Spectrum1D`] stores `mu_k` at index `k` (0-based, `mu_0` on
//! top). [`SpectrumD`] stores `lambda_n` at index `n - 1` (1-based in the
//! mathematics, `lambda_1` on top).

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::QuadratureRule;
use crate::Complex;

/// Eigenvalues below this are numerically unresolved and never reported.
pub const CLAMP_FLOOR: f64 = 1e-14;
/// Excursions outside `[0, 1]` up to this size are clamped; larger ones fail.
pub const CLAMP_SLACK: f64 = 1e-9;
/// Bumped whenever the discretization changes; part of the cache key.
pub const KERNEL_VERSION: u32 = 1;
const CACHE_FORMAT_VERSION: u32 = 1;
/// Largest tensor dimension supported.
pub const MAX_DIMENSION: usize = 3;

/// Frequency-side kernel of the one-dimensional operator.
pub fn sinc_kernel(bandwidth: f64, xi: f64, eta: f64) -> f64 {
    let t = xi - eta;
    let arg = PI * bandwidth * t;
    if arg.abs() < 1e-6 {
        // Taylor expansion of R·sin(a)/a around the diagonal.
        bandwidth * (1.0 - arg * arg / 6.0)
    } else {
        arg.sin() / (PI * t)
    }
}

/// Default quadrature order: the kernel oscillation grows with `R`.
pub fn default_order(bandwidth: f64) -> usize {
    200usize.max((20.0 * bandwidth).ceil() as usize)
}

/// Access to a descending eigenvalue list together with the level above
/// which the list is complete.
pub trait Eigenvalues {
    fn eigenvalues(&self) -> &[f64];
    /// Every eigenvalue strictly above this value is present in the list.
    fn completeness_floor(&self) -> f64;
}

/// Spectrum of the one-dimensional operator for bandwidth `R`.
#[derive(Debug, Clone)]
pub struct Spectrum1D {
    bandwidth: f64,
    rule: QuadratureRule,
    eigenvalues: Vec<f64>,
    /// Row `k` holds the k-th frequency-side eigenfunction at the nodes,
    /// orthonormal under the quadrature weights.
    eigvecs: DMatrix<f64>,
}

impl Spectrum1D {
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    /// All `order` eigenvalues, descending, clamped to `[0, 1]`. Entries below
    /// [`CLAMP_FLOOR`] are unresolved.
    pub fn all_eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Number of eigenvalues at or above [`CLAMP_FLOOR`].
    pub fn resolved_count(&self) -> usize {
        self.eigenvalues.iter().take_while(|m| **m >= CLAMP_FLOOR).count()
    }

    /// Frequency-side samples of the k-th eigenfunction.
    pub fn eigvec(&self, k: usize) -> Vec<f64> {
        self.eigvecs.row(k).iter().copied().collect()
    }

    pub fn eigvec_matrix(&self) -> &DMatrix<f64> {
        &self.eigvecs
    }

    /// Values `φ_0(x), …, φ_{count−1}(x)` of the time-domain eigenfunctions,
    /// `φ_k(x) = Σ_i w_i ψ_k(ξ_i) e^{2πixξ_i}`.
    pub fn basis_values(&self, x: f64, count: usize) -> Vec<Complex> {
        let mut out = vec![Complex::new(0.0, 0.0); count];
        self.basis_values_into(x, &mut out);
        out
    }

    pub(crate) fn basis_values_into(&self, x: f64, out: &mut [Complex]) {
        let nodes = self.rule.nodes();
        let weights = self.rule.weights();
        let mut cs = Vec::with_capacity(nodes.len());
        for (xi, w) in nodes.iter().zip(weights) {
            let (s, c) = (2.0 * PI * x * xi).sin_cos();
            cs.push((w * c, w * s));
        }
        for (k, slot) in out.iter_mut().enumerate() {
            let row = self.eigvecs.row(k);
            let mut re = 0.0;
            let mut im = 0.0;
            for (v, (c, s)) in row.iter().zip(&cs) {
                re += v * c;
                im += v * s;
            }
            *slot = Complex::new(re, im);
        }
    }

    fn check_invariants(&self) -> Result<()> {
        let sum: f64 = self.eigenvalues.iter().sum();
        if (sum - self.bandwidth).abs() > 1e-6 * self.bandwidth {
            return Err(Error::Numeric(format!(
                "trace identity violated: sum of eigenvalues {sum} vs R = {}",
                self.bandwidth
            )));
        }
        if self.eigenvalues.windows(2).any(|p| p[0] < p[1]) {
            return Err(Error::Numeric("eigenvalues not descending".into()));
        }
        let n = self.rule.order();
        let gram = &self.eigvecs * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(self.rule.weights())) * self.eigvecs.transpose();
        let dev = (gram - DMatrix::<f64>::identity(n, n)).amax();
        if dev > 1e-8 {
            return Err(Error::Numeric(format!("eigenvectors not orthonormal (max deviation {dev:e})")));
        }
        Ok(())
    }
}

impl Eigenvalues for Spectrum1D {
    fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues[..self.resolved_count()]
    }

    fn completeness_floor(&self) -> f64 {
        CLAMP_FLOOR
    }
}

/// Discretizes and diagonalizes the one-dimensional operator.
pub fn compute_spectrum_1d(bandwidth: f64, order: usize) -> Result<Spectrum1D> {
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return invalid(format!("bandwidth R must be positive, got {bandwidth}"));
    }
    let rule = QuadratureRule::gauss_legendre(order)?;
    let nodes = rule.nodes();
    let sqrt_w: Vec<f64> = rule.weights().iter().map(|w| w.sqrt()).collect();
    let matrix = DMatrix::from_fn(order, order, |i, j| {
        sqrt_w[i] * sinc_kernel(bandwidth, nodes[i], nodes[j]) * sqrt_w[j]
    });
    let eigen = SymmetricEigen::try_new(matrix, 1e-15, 10_000)
        .ok_or_else(|| Error::Numeric(format!("symmetric eigensolver did not converge (R={bandwidth}, order={order})")))?;

    let mut perm: Vec<usize> = (0..order).collect();
    perm.sort_by(|&a, &b| eigen.eigenvalues[b].partial_cmp(&eigen.eigenvalues[a]).unwrap_or(Ordering::Equal));

    let mut eigenvalues = Vec::with_capacity(order);
    let mut eigvecs = DMatrix::zeros(order, order);
    for (k, &src) in perm.iter().enumerate() {
        eigenvalues.push(clamp_unit(eigen.eigenvalues[src])?);
        let v = eigen.eigenvectors.column(src);
        let scale = v.amax();
        let sign = v
            .iter()
            .find(|c| c.abs() > 1e-8 * scale)
            .map_or(1.0, |c| c.signum());
        for i in 0..order {
            eigvecs[(k, i)] = sign * v[i] / sqrt_w[i];
        }
    }
    let spectrum = Spectrum1D { bandwidth, rule, eigenvalues, eigvecs };
    spectrum.check_invariants()?;
    Ok(spectrum)
}

fn clamp_unit(value: f64) -> Result<f64> {
    if !value.is_finite() || !(-CLAMP_SLACK..=1.0 + CLAMP_SLACK).contains(&value) {
        return Err(Error::Numeric(format!("eigenvalue {value} outside [0, 1]")));
    }
    Ok(value.clamp(0.0, 1.0))
}

/// Tensor-product spectrum in dimension `d`.
#[derive(Debug, Clone)]
pub struct SpectrumD {
    dimension: usize,
    base: Arc<Spectrum1D>,
    eigenvalues: Vec<f64>,
    multi_indices: Vec<Vec<usize>>,
    complete_above: f64,
}

impl SpectrumD {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn base(&self) -> &Arc<Spectrum1D> {
        &self.base
    }

    pub fn bandwidth(&self) -> f64 {
        self.base.bandwidth
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `lambda_n` for 1-based `n`.
    pub fn lambda(&self, n: usize) -> f64 {
        self.eigenvalues[n - 1]
    }

    pub fn multi_indices(&self) -> &[Vec<usize>] {
        &self.multi_indices
    }

    /// Largest one-dimensional index used by the first `count` entries, plus one.
    pub fn base_span(&self, count: usize) -> usize {
        self.multi_indices[..count]
            .iter()
            .flat_map(|m| m.iter().copied())
            .max()
            .map_or(0, |m| m + 1)
    }
}

impl Eigenvalues for SpectrumD {
    fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    fn completeness_floor(&self) -> f64 {
        self.complete_above
    }
}

/// The `count` largest products `Π_j mu_{k_j}`, descending, ties broken by
/// lexicographic multi-index.
pub fn tensor_spectrum(base: Arc<Spectrum1D>, d: usize, count: usize) -> Result<SpectrumD> {
    check_dimension(d)?;
    let mut entries = enumerate_products(&base, d, CLAMP_FLOOR);
    if entries.len() < count {
        return Err(Error::Capacity(format!(
            "only {} resolved tensor eigenvalues in d={d} (requested {count}); increase the quadrature order",
            entries.len()
        )));
    }
    let complete_above = if entries.len() > count { entries[count - 1].0 } else { CLAMP_FLOOR };
    entries.truncate(count);
    Ok(assemble(base, d, entries, complete_above))
}

/// Every tensor eigenvalue `>= threshold`.
pub fn tensor_spectrum_above(base: Arc<Spectrum1D>, d: usize, threshold: f64) -> Result<SpectrumD> {
    check_dimension(d)?;
    if threshold < CLAMP_FLOOR {
        return Err(Error::Capacity(format!("threshold {threshold:e} below the resolution floor {CLAMP_FLOOR:e}")));
    }
    let entries = enumerate_products(&base, d, threshold);
    Ok(assemble(base, d, entries, threshold.max(CLAMP_FLOOR)))
}

fn check_dimension(d: usize) -> Result<()> {
    if d == 0 || d > MAX_DIMENSION {
        return invalid(format!("dimension must be in 1..={MAX_DIMENSION}, got {d}"));
    }
    Ok(())
}

fn assemble(base: Arc<Spectrum1D>, d: usize, entries: Vec<(f64, Vec<usize>)>, complete_above: f64) -> SpectrumD {
    let (eigenvalues, multi_indices) = entries.into_iter().unzip();
    SpectrumD { dimension: d, base, eigenvalues, multi_indices, complete_above }
}

fn enumerate_products(base: &Spectrum1D, d: usize, threshold: f64) -> Vec<(f64, Vec<usize>)> {
    let mu = &base.eigenvalues[..base.resolved_count()];
    let mut out = Vec::new();
    let mut idx = Vec::with_capacity(d);
    fn recurse(mu: &[f64], d: usize, threshold: f64, partial: f64, idx: &mut Vec<usize>, out: &mut Vec<(f64, Vec<usize>)>) {
        if idx.len() == d {
            out.push((partial, idx.clone()));
            return;
        }
        for (k, m) in mu.iter().enumerate() {
            let p = partial * m;
            // mu is descending, so later k only shrink the product
            if p < threshold {
                break;
            }
            idx.push(k);
            recurse(mu, d, threshold, p, idx, out);
            idx.pop();
        }
    }
    recurse(mu, d, threshold, 1.0, &mut idx, &mut out);
    out.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(Ordering::Equal).then_with(|| a.1.cmp(&b.1)));
    out
}

/// Number of eigenvalues `>= eps`.
pub fn counting_function(spec: &impl Eigenvalues, eps: f64) -> Result<usize> {
    if !(eps > 0.0 && eps <= 1.0) {
        return invalid(format!("eps must lie in (0, 1], got {eps}"));
    }
    if eps <= spec.completeness_floor() {
        return Err(Error::Capacity(format!(
            "eps = {eps:e} is not above the completeness floor {:e}",
            spec.completeness_floor()
        )));
    }
    Ok(spec.eigenvalues().iter().take_while(|l| **l >= eps).count())
}

/// Leading-order defect `2πd√(2R)e^{−πR}` of the top eigenvalue.
pub fn fuchs_defect(bandwidth: f64, d: usize) -> f64 {
    2.0 * PI * d as f64 * (2.0 * bandwidth).sqrt() * (-PI * bandwidth).exp()
}

/// Leading-order top eigenvalue `1 − 2πd√(2R)e^{−πR}`, kept in `[0, 1]`.
pub fn fuchs_top_eigenvalue(bandwidth: f64, d: usize) -> f64 {
    (1.0 - fuchs_defect(bandwidth, d)).clamp(0.0, 1.0)
}

/// Value of the large-k eigenvalue asymptotic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WidomValue {
    pub value: f64,
    pub log_value: f64,
    pub underflow: bool,
}

/// `2π(πR/8)^{2k+1} / (k!)²`, evaluated in log space.
pub fn widom_asymptotic(bandwidth: f64, k: usize) -> WidomValue {
    let kf = k as f64;
    let log_value = (2.0 * PI).ln() + (2.0 * kf + 1.0) * (PI * bandwidth / 8.0).ln() - 2.0 * libm::lgamma(kf + 1.0);
    let value = log_value.exp();
    let underflow = value == 0.0 || !value.is_normal() && log_value < 0.0;
    WidomValue { value: if underflow { 0.0 } else { value }, log_value, underflow }
}

/// Exponential tail bound `e^{−k/κ}`, valid for `k >= R/(1−α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailBound {
    pub value: f64,
    pub valid: bool,
}

pub fn widom_tail_bound(bandwidth: f64, k: usize, alpha: f64, kappa: f64) -> TailBound {
    TailBound {
        value: (-(k as f64) / kappa).exp(),
        valid: alpha > 0.0 && alpha < 1.0 && k as f64 >= bandwidth / (1.0 - alpha),
    }
}

/// Leading-order eigenvalue count `R + (2/π) log((1−ε)/ε) log R`.
pub fn landau_widom_reference(bandwidth: f64, eps: f64) -> f64 {
    bandwidth + 2.0 / PI * ((1.0 - eps) / eps).ln() * bandwidth.ln()
}

/// Least-squares fit of `log mu_k ≈ −k/κ` over the resolved tail `k >= 2R`.
pub fn calibrate_kappa(spec: &Spectrum1D) -> Result<f64> {
    let start = (2.0 * spec.bandwidth).ceil() as usize;
    let (mut skk, mut skl) = (0.0, 0.0);
    let mut used = 0;
    for (k, mu) in spec.eigenvalues.iter().enumerate().skip(start) {
        if *mu < 1e-12 {
            break;
        }
        let kf = k as f64;
        skk += kf * kf;
        skl += kf * mu.ln();
        used += 1;
    }
    if used < 2 || skl >= 0.0 {
        return Err(Error::Capacity(format!(
            "only {used} resolved tail eigenvalues beyond k = {start}; cannot calibrate kappa"
        )));
    }
    Ok(-skk / skl)
}

/// Serialized spectrum, keyed by `(R, order, kernel version)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub format_version: u32,
    pub kernel_version: u32,
    #[serde(rename = "R")]
    pub bandwidth: f64,
    pub order: usize,
    pub eigenvalues: Vec<f64>,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Row-major, row k = k-th eigenvector samples.
    pub eigvecs: Vec<Vec<f64>>,
}

impl From<&Spectrum1D> for SpectrumRecord {
    fn from(s: &Spectrum1D) -> Self {
        Self {
            format_version: CACHE_FORMAT_VERSION,
            kernel_version: KERNEL_VERSION,
            bandwidth: s.bandwidth,
            order: s.rule.order(),
            eigenvalues: s.eigenvalues.clone(),
            nodes: s.rule.nodes().to_vec(),
            weights: s.rule.weights().to_vec(),
            eigvecs: s.eigvecs.row_iter().map(|r| r.iter().copied().collect()).collect(),
        }
    }
}

impl TryFrom<SpectrumRecord> for Spectrum1D {
    type Error = Error;

    fn try_from(rec: SpectrumRecord) -> Result<Self> {
        if rec.format_version != CACHE_FORMAT_VERSION || rec.kernel_version != KERNEL_VERSION {
            return Err(Error::Format(format!(
                "spectrum record version {}/{} does not match {CACHE_FORMAT_VERSION}/{KERNEL_VERSION}",
                rec.format_version, rec.kernel_version
            )));
        }
        let n = rec.order;
        if rec.eigenvalues.len() != n || rec.eigvecs.len() != n || rec.eigvecs.iter().any(|r| r.len() != n) {
            return Err(Error::Format("spectrum record arrays do not match its order".into()));
        }
        let rule = QuadratureRule::from_parts(rec.nodes, rec.weights)?;
        let eigvecs = DMatrix::from_fn(n, n, |i, j| rec.eigvecs[i][j]);
        let spectrum = Spectrum1D { bandwidth: rec.bandwidth, rule, eigenvalues: rec.eigenvalues, eigvecs };
        spectrum.check_invariants()?;
        Ok(spectrum)
    }
}

/// On-disk spectrum cache.
#[derive(Debug, Clone)]
pub struct SpectrumCache {
    dir: PathBuf,
}

impl SpectrumCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn path_for(&self, bandwidth: f64, order: usize) -> PathBuf {
        self.dir.join(format!("spectrum-R{:016x}-n{order}-k{KERNEL_VERSION}.json", bandwidth.to_bits()))
    }

    /// Loads a cached spectrum or computes and stores it.
    pub fn load_or_compute(&self, bandwidth: f64, order: usize) -> Result<Spectrum1D> {
        let path = self.path_for(bandwidth, order);
        if path.exists() {
            return load_spectrum(&path);
        }
        let spectrum = compute_spectrum_1d(bandwidth, order)?;
        std::fs::create_dir_all(&self.dir)?;
        save_spectrum(&spectrum, &path)?;
        Ok(spectrum)
    }
}

pub fn save_spectrum(spectrum: &Spectrum1D, path: &Path) -> Result<()> {
    let text = serde_json::to_string(&SpectrumRecord::from(spectrum)).map_err(|e| Error::Format(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_spectrum(path: &Path) -> Result<Spectrum1D> {
    let text = std::fs::read_to_string(path)?;
    let rec: SpectrumRecord = serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    Spectrum1D::try_from(rec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(r: f64) -> Spectrum1D {
        compute_spectrum_1d(r, default_order(r)).unwrap()
    }

    #[test]
    fn kernel_values() {
        assert_eq!(sinc_kernel(2.0, 0.3, 0.3), 2.0);
        assert!(sinc_kernel(2.0, 0.5, 0.0).abs() < 1e-15);
        assert!((sinc_kernel(1.0, 0.25, -0.25) - 2.0 / PI).abs() < 1e-15);
        assert_eq!(sinc_kernel(3.0, 0.1, -0.2), sinc_kernel(3.0, -0.2, 0.1));
        // continuity across the Taylor branch
        let near = sinc_kernel(4.0, 1e-7, 0.0);
        assert!((near - 4.0).abs() < 1e-9);
    }

    #[test]
    fn trace_identity_and_ordering() {
        let s = compute_spectrum_1d(4.0, 200).unwrap();
        let sum: f64 = s.all_eigenvalues().iter().sum();
        assert!((sum - 4.0).abs() < 1e-6);
        assert!(s.all_eigenvalues().iter().all(|m| (0.0..=1.0).contains(m)));
    }

    #[test]
    fn plunge_bracketing_at_r4() {
        let s = spec(4.0);
        let mu = s.all_eigenvalues();
        assert!(mu[5] <= 0.5 && 0.5 <= mu[3]);
    }

    #[test]
    fn top_eigenvalue_near_fuchs() {
        let s = spec(4.0);
        let defect = 1.0 - s.all_eigenvalues()[0];
        let f = fuchs_defect(4.0, 1);
        assert!((defect - f).abs() <= 0.25 * f, "{defect} vs {f}");
    }

    #[test]
    fn rejects_bad_bandwidth() {
        assert!(matches!(compute_spectrum_1d(0.0, 200), Err(Error::InvalidArgument(_))));
        assert!(matches!(compute_spectrum_1d(f64::NAN, 200), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn monotone_in_bandwidth() {
        let s2 = spec(2.0);
        let s4 = spec(4.0);
        let s8 = spec(8.0);
        for k in 0..s2.resolved_count() {
            let (a, b, c) = (s2.all_eigenvalues()[k], s4.all_eigenvalues()[k], s8.all_eigenvalues()[k]);
            assert!(a <= b + 1e-12 && b <= c + 1e-12, "k={k}: {a} {b} {c}");
        }
    }

    #[test]
    fn quadrature_convergence() {
        let a = compute_spectrum_1d(4.0, 200).unwrap();
        let b = compute_spectrum_1d(4.0, 400).unwrap();
        for (x, y) in a.all_eigenvalues().iter().zip(b.all_eigenvalues()) {
            if *x >= 1e-10 {
                assert!((x - y).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn widom_ratio_at_r2() {
        let s = spec(2.0);
        for k in 5..=8 {
            let ratio = s.all_eigenvalues()[k] / widom_asymptotic(2.0, k).value;
            assert!((0.5..=2.0).contains(&ratio), "k={k} ratio={ratio}");
        }
    }

    #[test]
    fn tensor_d1_is_identity() {
        let base = Arc::new(spec(4.0));
        let n = base.resolved_count();
        let t = tensor_spectrum(base.clone(), 1, n).unwrap();
        assert_eq!(t.eigenvalues(), &base.all_eigenvalues()[..n]);
    }

    #[test]
    fn tensor_d2_matches_brute_force() {
        let base = Arc::new(spec(4.0));
        let t = tensor_spectrum(base.clone(), 2, 20).unwrap();
        let m = base.resolved_count();
        let mu = base.all_eigenvalues();
        let mut brute: Vec<f64> = (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| mu[i] * mu[j]).collect();
        brute.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (a, b) in t.eigenvalues().iter().zip(&brute) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(t.lambda(1), mu[0] * mu[0]);
        for (l, idx) in t.eigenvalues().iter().zip(t.multi_indices()) {
            assert!((l - mu[idx[0]] * mu[idx[1]]).abs() <= 1e-12);
        }
        // symmetric pairs are ordered lexicographically
        assert_eq!(t.multi_indices()[1], vec![0, 1]);
        assert_eq!(t.multi_indices()[2], vec![1, 0]);
    }

    #[test]
    fn tensor_capacity_error() {
        let base = Arc::new(spec(2.0));
        assert!(matches!(tensor_spectrum(base.clone(), 1, 10_000), Err(Error::Capacity(_))));
        assert!(matches!(tensor_spectrum(base, 4, 1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn counting_function_cases() {
        let s = spec(4.0);
        let mu0 = s.all_eigenvalues()[0];
        assert_eq!(counting_function(&s, mu0 * (1.0 - 1e-12)).unwrap(), 1);
        assert_eq!(counting_function(&s, 1.0).unwrap(), 0);
        let direct = s.all_eigenvalues().iter().filter(|m| **m >= 1e-6).count();
        assert_eq!(counting_function(&s, 1e-6).unwrap(), direct);
        assert!(counting_function(&s, 0.0).is_err());
        assert!(counting_function(&s, 1.5).is_err());
        assert!(matches!(counting_function(&s, 1e-15), Err(Error::Capacity(_))));
    }

    #[test]
    fn fuchs_values() {
        assert!((fuchs_top_eigenvalue(4.0, 1) - 0.999_938_02).abs() < 1e-8);
        assert!((fuchs_top_eigenvalue(4.0, 2) - 0.999_876_05).abs() < 1e-8);
        let mut prev = 0.0;
        for r in [1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
            let v = fuchs_top_eigenvalue(r, 1);
            assert!(v >= prev && v <= 1.0);
            prev = v;
        }
    }

    #[test]
    fn widom_values() {
        let w = widom_asymptotic(2.0, 6);
        let direct = 2.0 * PI * (PI / 4.0).powi(13) / (720.0f64 * 720.0);
        assert!((w.value - direct).abs() < 1e-12 * direct);
        assert!((w.value - 5.245e-7).abs() < 1e-9);
        assert!((widom_asymptotic(8.0 / PI, 0).value - 2.0 * PI).abs() < 1e-12);
        let far = widom_asymptotic(2.0, 400);
        assert!(far.underflow && far.value == 0.0);
        let mut prev = f64::INFINITY;
        for k in 2..60 {
            let v = widom_asymptotic(2.0, k).log_value;
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn tail_bound_values() {
        assert_eq!(widom_tail_bound(4.0, 0, 0.5, 3.0).value, 1.0);
        assert!((widom_tail_bound(4.0, 10, 0.5, 1.0).value - (-10.0f64).exp()).abs() < 1e-18);
        assert!(!widom_tail_bound(4.0, 7, 0.5, 1.0).valid);
        assert!(widom_tail_bound(4.0, 8, 0.5, 1.0).valid);
    }

    #[test]
    fn landau_widom_values() {
        assert_eq!(landau_widom_reference(8.0, 0.5), 8.0);
        assert!((landau_widom_reference(8.0, 0.01) - 14.083).abs() < 1e-3);
        let up = landau_widom_reference(8.0, 0.1) - 8.0;
        let down = landau_widom_reference(8.0, 0.9) - 8.0;
        assert!((up + down).abs() < 1e-12);
    }

    #[test]
    fn kappa_calibration_bounds_counts() {
        for r in [2.0, 4.0, 8.0] {
            let s = spec(r);
            let kappa = calibrate_kappa(&s).unwrap();
            assert!(kappa > 0.0);
            for e in [1e-8, 1e-6, 1e-4, 1e-2, 0.5] {
                let c = counting_function(&s, e).unwrap() as f64;
                assert!(c <= 2.0 * r + kappa * (1.0f64 / e).ln(), "R={r} eps={e}");
            }
        }
    }

    #[test]
    fn cache_round_trip_is_bit_identical() {
        let dir = std::env::temp_dir().join(format!("prolate-cache-test-{}", std::process::id()));
        let cache = SpectrumCache::new(&dir);
        let a = cache.load_or_compute(3.0, 200).unwrap();
        assert!(cache.path_for(3.0, 200).exists());
        let b = cache.load_or_compute(3.0, 200).unwrap();
        assert_eq!(a.all_eigenvalues(), b.all_eigenvalues());
        assert_eq!(a.eigvec_matrix(), b.eigvec_matrix());
        assert_eq!(a.rule(), b.rule());
        std::fs::remove_dir_all(dir).ok();
    }
}
