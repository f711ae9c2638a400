//! Empirical sampling sums, restricted frame bounds over `B(R, δ)`, and the
//! Monte Carlo experiments around the sampling inequality.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::function_space::{sample_random_member, BandlimitedFunction, BasisTable, ConcentrationClass};
use crate::point_process::{iid_uniform_cube, PointSet};
use crate::rng;
use crate::spectrum::SpectrumD;
use crate::theory::{deviation_bound, sampling_probability_bound, ProbabilityBound, TheoryParams};
use crate::Complex;

/// Constraint tolerance of the Lagrangian bisection.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
/// Eigenvalues at or above this floor span the net and the certificate by default.
pub const DEFAULT_TRUNCATION_FLOOR: f64 = 1e-12;
const NET_SEED_LABEL: u64 = 1 << 40;
const BISECTION_STEPS: usize = 200;
const BRACKET_EXPANSIONS: usize = 60;

/// Number of eigenvalues at or above [`DEFAULT_TRUNCATION_FLOOR`], at least 1.
pub fn default_truncation(spectrum: &SpectrumD) -> usize {
    spectrum.eigenvalues_slice().iter().take_while(|l| **l >= DEFAULT_TRUNCATION_FLOOR).count().max(1)
}

/// `Σ_j |f(x_j)|²`.
pub fn sample_sum(f: &BandlimitedFunction, points: &PointSet) -> Result<f64> {
    if f.dimension() != points.dimension() {
        return invalid("function and point set dimensions differ");
    }
    Ok(f.evaluate_many(points.coordinates()).iter().map(|v| v.norm_sqr()).sum())
}

/// Gram matrix with `c^H G c = Σ_j |Σ_n c_n φ_n(x_j)|²`, i.e.
/// `G_{mn} = Σ_j conj(φ_m(x_j)) φ_n(x_j)`.
pub fn gram_at_points(spectrum: &SpectrumD, count: usize, points: &PointSet) -> Result<DMatrix<Complex>> {
    if points.dimension() != spectrum.dimension() {
        return invalid("spectrum and point set dimensions differ");
    }
    if count > spectrum.len() {
        return Err(Error::Capacity(format!("requested {count} eigenfunctions, spectrum holds {}", spectrum.len())));
    }
    let table = BasisTable::new(spectrum, count, points.coordinates());
    Ok(gram_from_table(&table))
}

fn gram_from_table(table: &BasisTable) -> DMatrix<Complex> {
    let phi = DMatrix::from_fn(table.rows(), table.cols(), |j, n| table.row(j)[n]);
    phi.adjoint() * phi
}

/// Result of the constrained Rayleigh-quotient minimization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestrictedBound {
    /// `min c^H G c` over `‖c‖ = 1`, `c^H Λ c ≥ 1 − δ`.
    pub value: f64,
    #[serde(skip)]
    pub coefficients: Vec<Complex>,
    /// Lagrange multiplier at the returned point.
    pub tau: f64,
    /// The smallest eigenvector of `G` was already feasible.
    pub unconstrained: bool,
    /// `c^H Λ c − (1 − δ)` at the returned point.
    pub constraint_residual: f64,
    /// The eigenvector path jumped across the constraint and two eigenvectors were mixed.
    pub mixed: bool,
}

fn smallest_eigenpair(m: &DMatrix<Complex>) -> (f64, DVector<Complex>) {
    let eig = SymmetricEigen::new(m.clone());
    let (i, v) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty matrix");
    (*v, eig.eigenvectors.column(i).into_owned())
}

fn quad(m: &DMatrix<Complex>, c: &DVector<Complex>) -> f64 {
    c.dotc(&(m * c)).re
}

fn weighted(lambdas: &[f64], c: &DVector<Complex>) -> f64 {
    c.iter().zip(lambdas).map(|(a, l)| a.norm_sqr() * l).sum()
}

/// Minimizes `c^H G c` over the truncated class by bisection on the
/// multiplier `τ` of the smallest eigenvector of `G − τΛ`.
///
/// The concentration `c^H Λ c` of that eigenvector is nondecreasing in `τ`.
/// When it jumps across `1 − δ` (an eigenvalue crossing), the two bracketing
/// eigenvectors are phase-aligned and mixed to land on the constraint.
pub fn restricted_lower_bound(g: &DMatrix<Complex>, lambdas: &[f64], delta: f64, tol: f64) -> Result<RestrictedBound> {
    let n = lambdas.len();
    if g.nrows() != n || g.ncols() != n || n == 0 {
        return invalid(format!("Gram matrix is {}x{}, expected {n}x{n}", g.nrows(), g.ncols()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return invalid(format!("delta must lie in (0, 1), got {delta}"));
    }
    let target = 1.0 - delta;
    if lambdas.iter().cloned().fold(f64::NEG_INFINITY, f64::max) < target {
        return invalid("the truncated class is empty: max lambda < 1 - delta");
    }
    let lambda_matrix = DMatrix::from_fn(n, n, |i, j| if i == j { Complex::new(lambdas[i], 0.0) } else { Complex::new(0.0, 0.0) });
    let path = |tau: f64| {
        let (_, v) = smallest_eigenpair(&(g - &lambda_matrix * Complex::new(tau, 0.0)));
        let s = weighted(lambdas, &v);
        (v, s)
    };
    let finish = |c: DVector<Complex>, tau: f64, unconstrained: bool, mixed: bool| RestrictedBound {
        value: quad(g, &c),
        constraint_residual: weighted(lambdas, &c) - target,
        coefficients: c.iter().copied().collect(),
        tau,
        unconstrained,
        mixed,
    };

    let (v0, s0) = path(0.0);
    if s0 >= target {
        return Ok(finish(v0, 0.0, true, false));
    }
    let g_scale = SymmetricEigen::new(g.clone()).eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min_positive = lambdas.iter().cloned().filter(|l| *l > 0.0).fold(f64::INFINITY, f64::min);
    let (mut lo, mut v_lo) = (0.0, v0);
    let mut hi = g_scale / min_positive + 1.0;
    let (mut v_hi, mut s_hi) = path(hi);
    let mut expansions = 0;
    while s_hi < target {
        if expansions == BRACKET_EXPANSIONS {
            return Err(Error::Numeric("multiplier bracket failed to reach the constraint".into()));
        }
        lo = hi;
        v_lo = v_hi;
        hi *= 2.0;
        (v_hi, s_hi) = path(hi);
        expansions += 1;
    }
    if (s_hi - target).abs() <= tol {
        return Ok(finish(v_hi, hi, false, false));
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (v, s) = path(mid);
        if (s - target).abs() <= tol {
            return Ok(finish(v, mid, false, false));
        }
        if s < target {
            lo = mid;
            v_lo = v;
        } else {
            hi = mid;
            v_hi = v;
        }
    }

    // the path jumps at τ*: mix the two sides, ties toward the larger τ
    let overlap = v_lo.dotc(&v_hi);
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { Complex::new(1.0, 0.0) };
    let aligned_hi = &v_hi * phase.conj();
    let mix = |t: f64| {
        let c = &v_lo * Complex::new(1.0 - t, 0.0) + &aligned_hi * Complex::new(t, 0.0);
        let norm = c.norm();
        c / Complex::new(norm, 0.0)
    };
    let (mut a, mut b) = (0.0, 1.0);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (a + b);
        if weighted(lambdas, &mix(mid)) >= target {
            b = mid;
        } else {
            a = mid;
        }
        if b - a < 1e-15 {
            break;
        }
    }
    Ok(finish(mix(b), hi, false, true))
}

/// `max c^H G c` over the truncated class.
pub fn restricted_upper_bound(g: &DMatrix<Complex>, lambdas: &[f64], delta: f64, tol: f64) -> Result<RestrictedBound> {
    let mut out = restricted_lower_bound(&(-g), lambdas, delta, tol)?;
    out.value = -out.value;
    Ok(out)
}

/// Frame Monte Carlo configuration.
#[derive(Debug, Clone, Serialize)]
pub struct FrameConfig {
    #[serde(rename = "R")]
    pub bandwidth: f64,
    pub d: usize,
    pub delta: f64,
    pub mu: f64,
    pub r: usize,
    pub trials: usize,
    pub net_size: usize,
    /// Number of eigenfunctions spanned by the net and the certificate.
    pub truncation: usize,
    pub seed: u64,
}

/// One trial of the frame experiment; sums are normalized by `R^d / r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameTrial {
    pub trial: usize,
    pub seed: u64,
    pub min_norm_sum: f64,
    pub max_norm_sum: f64,
    pub event_holds: bool,
    pub net_min: f64,
    pub net_max: f64,
    pub certificate_min: f64,
    pub certificate_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrameReport {
    pub config: FrameConfig,
    pub trials: Vec<FrameTrial>,
    pub failure_rate: f64,
    pub stderr: f64,
    /// Failure probability bound `min(1, 2A e^{−B (r/R^d) μ²/(41+μ)})`.
    pub theory_bound: ProbabilityBound,
    pub theory: TheoryParams,
}

impl FrameReport {
    pub fn csv(&self) -> String {
        let mut out = String::from("trial,seed,min_norm_sum,max_norm_sum,event_holds,net_min,net_max,certificate_min,certificate_max\n");
        for t in &self.trials {
            let _ = writeln!(
                out,
                "{},{},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e}",
                t.trial, t.seed, t.min_norm_sum, t.max_norm_sum, t.event_holds, t.net_min, t.net_max, t.certificate_min, t.certificate_max
            );
        }
        out
    }
}

fn trial_points(bandwidth: f64, d: usize, r: usize, seed: u64) -> Result<Vec<f64>> {
    if r == 0 {
        Ok(Vec::new())
    } else {
        Ok(iid_uniform_cube(bandwidth, d, r, seed)?.coordinates().to_vec())
    }
}

fn member_net(class: &ConcentrationClass, spectrum: &Arc<SpectrumD>, truncation: usize, size: usize, seed: u64) -> Result<Vec<BandlimitedFunction>> {
    (0..size)
        .map(|i| sample_random_member(class, spectrum.clone(), truncation, rng::derive_seed(seed, NET_SEED_LABEL + i as u64)))
        .collect()
}

/// Tests the two-sided event `1 − δ − μ ≤ (R^d/r) Σ|f(x_j)|² ≤ 1 + μ` on a
/// random net plus the restricted-bound certificates, for each trial.
pub fn mc_frame_experiment(config: &FrameConfig, spectrum: Arc<SpectrumD>) -> Result<FrameReport> {
    let class = ConcentrationClass::new(config.bandwidth, config.delta, config.d)?;
    if !class.is_nonempty(&spectrum) {
        return invalid(format!("B(R={}, delta={}) is empty", config.bandwidth, config.delta));
    }
    if !(config.mu > 0.0) {
        return invalid(format!("mu must be positive, got {}", config.mu));
    }
    if config.trials == 0 {
        return invalid("trials must be at least 1");
    }
    let net = member_net(&class, &spectrum, config.truncation, config.net_size, config.seed)?;
    let lambdas = &spectrum.eigenvalues_slice()[..config.truncation];
    let volume = config.bandwidth.powi(config.d as i32);
    let scale = if config.r == 0 { 0.0 } else { volume / config.r as f64 };

    let trials: Vec<FrameTrial> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = rng::derive_seed(config.seed, trial as u64);
            let points = trial_points(config.bandwidth, config.d, config.r, seed)?;
            let table = BasisTable::new(&spectrum, config.truncation, &points);
            let (mut net_min, mut net_max) = (f64::INFINITY, f64::NEG_INFINITY);
            for f in &net {
                let s = scale * table.combine(f.coefficients()).iter().map(|v| v.norm_sqr()).sum::<f64>();
                net_min = net_min.min(s);
                net_max = net_max.max(s);
            }
            let g = gram_from_table(&table);
            let certificate_min = scale * restricted_lower_bound(&g, lambdas, config.delta, DEFAULT_TOLERANCE)?.value;
            let certificate_max = scale * restricted_upper_bound(&g, lambdas, config.delta, DEFAULT_TOLERANCE)?.value;
            let min_norm_sum = net_min.min(certificate_min);
            let max_norm_sum = net_max.max(certificate_max);
            Ok(FrameTrial {
                trial,
                seed,
                min_norm_sum,
                max_norm_sum,
                event_holds: min_norm_sum >= 1.0 - config.delta - config.mu && max_norm_sum <= 1.0 + config.mu,
                net_min,
                net_max,
                certificate_min,
                certificate_max,
            })
        })
        .collect::<Result<_>>()?;

    let failures = trials.iter().filter(|t| !t.event_holds).count() as f64;
    let n = trials.len() as f64;
    let failure_rate = failures / n;
    let theory = TheoryParams::from_spectrum(spectrum.base(), config.d)?;
    let success = sampling_probability_bound(config.r as u64, config.bandwidth, config.d, config.mu, theory.log_a, theory.b)?;
    let theory_bound = ProbabilityBound {
        value: if success.vacuous { 1.0 } else { success.log_value.exp() },
        log_value: success.log_value,
        vacuous: success.vacuous,
    };
    Ok(FrameReport {
        config: config.clone(),
        trials,
        failure_rate,
        stderr: (failure_rate * (1.0 - failure_rate) / n).sqrt(),
        theory_bound,
        theory,
    })
}

/// `Σ_j Y_j(f)` with `Y_j(f) = |f(x_j)|² − R^{−d}‖f‖²_{2,R}`.
pub fn deviation_sum(f: &BandlimitedFunction, points: &PointSet) -> Result<f64> {
    let mean = f.local_energy() / f.spectrum().bandwidth().powi(f.dimension() as i32);
    Ok(sample_sum(f, points)? - points.len() as f64 * mean)
}

/// Uniform deviation experiment configuration.
#[derive(Debug, Clone, Serialize)]
pub struct DeviationConfig {
    #[serde(rename = "R")]
    pub bandwidth: f64,
    pub d: usize,
    pub delta: f64,
    pub r: usize,
    pub trials: usize,
    pub net_size: usize,
    pub truncation: usize,
    pub thresholds: Vec<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeviationSample {
    pub trial: usize,
    pub seed: u64,
    /// `sup_f |Σ_j Y_j(f)|` over the net.
    pub sup: f64,
    pub net_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailRow {
    pub lambda: f64,
    pub frequency: f64,
    pub bound: ProbabilityBound,
    /// `λ` reaches the threshold above which the bound is established.
    pub above_validity_threshold: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeviationReport {
    pub config: DeviationConfig,
    pub samples: Vec<DeviationSample>,
    pub tails: Vec<TailRow>,
    pub theory: TheoryParams,
}

impl DeviationReport {
    pub fn csv(&self) -> String {
        let mut out = String::from("trial,seed,sup_deviation,net_size\n");
        for s in &self.samples {
            let _ = writeln!(out, "{},{},{:.16e},{}", s.trial, s.seed, s.sup, s.net_size);
        }
        out
    }
}

pub fn deviation_sup_experiment(config: &DeviationConfig, spectrum: Arc<SpectrumD>) -> Result<DeviationReport> {
    let class = ConcentrationClass::new(config.bandwidth, config.delta, config.d)?;
    if config.trials == 0 {
        return invalid("trials must be at least 1");
    }
    let net = member_net(&class, &spectrum, config.truncation, config.net_size, config.seed)?;
    let volume = config.bandwidth.powi(config.d as i32);
    let means: Vec<f64> = net.iter().map(|f| f.local_energy() / volume).collect();
    let samples: Vec<DeviationSample> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let seed = rng::derive_seed(config.seed, trial as u64);
            let points = trial_points(config.bandwidth, config.d, config.r, seed)?;
            let table = BasisTable::new(&spectrum, config.truncation, &points);
            let sup = net
                .iter()
                .zip(&means)
                .map(|(f, m)| {
                    let s: f64 = table.combine(f.coefficients()).iter().map(|v| v.norm_sqr()).sum();
                    (s - config.r as f64 * m).abs()
                })
                .fold(0.0, f64::max);
            Ok(DeviationSample { trial, seed, sup, net_size: net.len() })
        })
        .collect::<Result<_>>()?;
    let theory = TheoryParams::from_spectrum(spectrum.base(), config.d)?;
    let threshold = theory.validity_threshold(config.r as u64);
    let tails = config
        .thresholds
        .iter()
        .map(|&lambda| {
            let hits = samples.iter().filter(|s| s.sup >= lambda).count();
            Ok(TailRow {
                lambda,
                frequency: hits as f64 / samples.len() as f64,
                bound: deviation_bound(lambda, config.r as u64, config.bandwidth, config.d, theory.log_a, theory.b)?,
                above_validity_threshold: lambda >= threshold,
            })
        })
        .collect::<Result<_>>()?;
    Ok(DeviationReport { config: config.clone(), samples, tails, theory })
}

/// Empirical moments of `Y_j(f)` and `Y_j(f) − Y_j(g)` over i.i.d. uniform samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentReport {
    pub samples: usize,
    pub var_f: f64,
    pub sup_f: f64,
    pub var_diff: f64,
    pub sup_diff: f64,
    /// `R^{−d}`.
    pub var_bound: f64,
    /// `4 R^{−d} ‖f − g‖²_{∞,R}` with the certified sup-norm upper bound.
    pub var_diff_bound: f64,
    /// `2 ‖f − g‖_{∞,R}`.
    pub sup_diff_bound: f64,
    /// Standard errors of the two variance estimates.
    pub var_f_stderr: f64,
    pub var_diff_stderr: f64,
}

/// Moment check for a pair of class members. `grid_step` controls the sup-norm grid.
pub fn moment_check(f: &BandlimitedFunction, g: &BandlimitedFunction, samples: usize, seed: u64, grid_step: f64) -> Result<MomentReport> {
    if samples < 2 {
        return invalid("moment check needs at least two samples");
    }
    let bandwidth = f.spectrum().bandwidth();
    let d = f.dimension();
    let volume = bandwidth.powi(d as i32);
    let points = iid_uniform_cube(bandwidth, d, samples, seed)?;
    let fv = f.evaluate_many(points.coordinates());
    let gv = g.evaluate_many(points.coordinates());
    let (mf, mg) = (f.local_energy() / volume, g.local_energy() / volume);
    let yf: Vec<f64> = fv.iter().map(|v| v.norm_sqr() - mf).collect();
    let yd: Vec<f64> = fv.iter().zip(&gv).map(|(a, b)| (a.norm_sqr() - mf) - (b.norm_sqr() - mg)).collect();
    let stats = |y: &[f64]| {
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let m4 = y.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
        let se = ((m4 - var * var).max(0.0) / n).sqrt();
        (var, se, y.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    };
    let (var_f, var_f_stderr, sup_f) = stats(&yf);
    let (var_diff, var_diff_stderr, sup_diff) = stats(&yd);
    let diff_sup = f.difference(g)?.norm_sup_local(grid_step)?.upper();
    Ok(MomentReport {
        samples,
        var_f,
        sup_f,
        var_diff,
        sup_diff,
        var_bound: 1.0 / volume,
        var_diff_bound: 4.0 / volume * diff_sup * diff_sup,
        sup_diff_bound: 2.0 * diff_sup,
        var_f_stderr,
        var_diff_stderr,
    })
}

/// `Σ_j Y_j(f)` for `trials` independent draws of `r` uniform points.
pub fn deviation_sums(f: &BandlimitedFunction, r: usize, trials: usize, seed: u64) -> Result<Vec<f64>> {
    let bandwidth = f.spectrum().bandwidth();
    let d = f.dimension();
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let points = iid_uniform_cube(bandwidth, d, r, rng::derive_seed(seed, t as u64))?;
            deviation_sum(f, &points)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_space::random_unit_function;
    use crate::point_process::Region;
    use crate::spectrum::{compute_spectrum_1d, default_order, tensor_spectrum};
    use rand::Rng;

    fn spectrum(r: f64, d: usize, count: usize) -> Arc<SpectrumD> {
        let base = Arc::new(compute_spectrum_1d(r, default_order(r)).unwrap());
        Arc::new(tensor_spectrum(base, d, count).unwrap())
    }

    #[test]
    fn sample_sum_basics() {
        let spec = spectrum(4.0, 1, 12);
        let mut rng = rng::stream(1, 0);
        let f = random_unit_function(spec.clone(), 12, &mut rng).unwrap();
        let one = PointSet::from_points(Region::new(vec![-2.0], vec![2.0]).unwrap(), vec![0.7]).unwrap();
        assert!((sample_sum(&f, &one).unwrap() - f.evaluate(&[0.7]).norm_sqr()).abs() < 1e-15);
        let zero = BandlimitedFunction::new(spec.clone(), vec![Complex::new(0.0, 0.0); 12]).unwrap();
        let pts = iid_uniform_cube(4.0, 1, 100, 2).unwrap();
        assert_eq!(sample_sum(&zero, &pts).unwrap(), 0.0);
        let direct: f64 = pts.iter().map(|p| f.evaluate(p).norm_sqr()).sum();
        assert!((sample_sum(&f, &pts).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn gram_quadratic_form_matches_sample_sum() {
        for (r, d) in [(4.0, 1), (3.0, 2)] {
            let spec = spectrum(r, d, 12);
            let pts = iid_uniform_cube(r, d, 200, 5).unwrap();
            let g = gram_at_points(&spec, 12, &pts).unwrap();
            assert!((&g - g.adjoint()).norm() < 1e-12 * g.norm());
            let eig = SymmetricEigen::new(g.clone()).eigenvalues;
            assert!(eig.iter().all(|v| *v > -1e-9));
            let mut rng = rng::stream(7, 0);
            for _ in 0..10 {
                let f = random_unit_function(spec.clone(), 12, &mut rng).unwrap();
                let c = DVector::from_column_slice(f.coefficients());
                let s = sample_sum(&f, &pts).unwrap();
                assert!((quad(&g, &c) - s).abs() < 1e-8 * s.max(1.0));
            }
            let e3 = BandlimitedFunction::basis_element(spec.clone(), 3).unwrap();
            assert!((g[(3, 3)].re - sample_sum(&e3, &pts).unwrap()).abs() < 1e-10);
        }
        let spec = spectrum(4.0, 1, 5);
        let empty = PointSet::from_points(Region::new(vec![-2.0], vec![2.0]).unwrap(), vec![]).unwrap();
        assert_eq!(gram_at_points(&spec, 5, &empty).unwrap().norm(), 0.0);
    }

    fn real_matrix(m: &[[f64; 3]; 3]) -> DMatrix<Complex> {
        DMatrix::from_fn(3, 3, |i, j| Complex::new(m[i][j], 0.0))
    }

    #[test]
    fn lower_bound_boundary_cases() {
        let lambdas = [0.95, 0.6, 0.2];
        let g = DMatrix::from_fn(3, 3, |i, j| Complex::new(if i == j { lambdas[i] } else { 0.0 }, 0.0));
        let b = restricted_lower_bound(&g, &lambdas, 0.3, DEFAULT_TOLERANCE).unwrap();
        assert!((b.value - 0.7).abs() < 1e-7, "{b:?}");
        assert!(!b.unconstrained);

        let g = real_matrix(&[[0.1, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 3.0]]);
        let b = restricted_lower_bound(&g, &lambdas, 0.3, DEFAULT_TOLERANCE).unwrap();
        assert!(b.unconstrained && (b.value - 0.1).abs() < 1e-12);

        assert!(restricted_lower_bound(&g, &[0.5, 0.4, 0.1], 0.3, DEFAULT_TOLERANCE).is_err());
    }

    fn sphere_grid(g: &[[f64; 3]; 3], lambdas: &[f64; 3], target: f64, sign: f64) -> f64 {
        let step = 0.01;
        let mut best = f64::INFINITY;
        let nt = (std::f64::consts::PI / step).ceil() as usize;
        let np = (2.0 * std::f64::consts::PI / step).ceil() as usize;
        for a in 0..=nt {
            let t = a as f64 * step;
            for b in 0..np {
                let p = b as f64 * step;
                let c = [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()];
                let s: f64 = (0..3).map(|i| lambdas[i] * c[i] * c[i]).sum();
                if s >= target {
                    let v: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| c[i] * g[i][j] * c[j]).sum();
                    best = best.min(sign * v);
                }
            }
        }
        sign * best
    }

    #[test]
    fn lower_bound_matches_sphere_grid() {
        let mut rng = rng::stream(99, 0);
        for _ in 0..5 {
            let a: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut g = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    g[i][j] = (0..3).map(|k| a[3 * i + k] * a[3 * j + k]).sum();
                }
            }
            let mut l: Vec<f64> = vec![rng.gen_range(0.75..1.0), rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
            l.sort_by(|x, y| y.total_cmp(x));
            let lambdas = [l[0], l[1], l[2]];
            let b = restricted_lower_bound(&real_matrix(&g), &lambdas, 0.3, DEFAULT_TOLERANCE).unwrap();
            let brute = sphere_grid(&g, &lambdas, 0.7, 1.0);
            assert!((b.value - brute).abs() < 1e-2, "{} vs {brute}", b.value);
            assert!(b.constraint_residual >= -1e-7);
            let up = restricted_upper_bound(&real_matrix(&g), &lambdas, 0.3, DEFAULT_TOLERANCE).unwrap();
            let brute_up = sphere_grid(&g, &lambdas, 0.7, -1.0);
            assert!((up.value - brute_up).abs() < 1e-2, "{} vs {brute_up}", up.value);
        }
    }

    #[test]
    fn jump_mixing_lands_on_constraint() {
        // G commutes with Λ: the eigenvector path jumps from e_2 to e_1
        let lambdas = [0.9, 0.5, 0.1];
        let g = real_matrix(&[[1.0, 0.0, 0.0], [0.0, 0.2, 0.0], [0.0, 0.0, 5.0]]);
        let b = restricted_lower_bound(&g, &lambdas, 0.3, DEFAULT_TOLERANCE).unwrap();
        // on span{e1, e2}: |c1|²·0.9 + |c2|²·0.5 = 0.7 → |c1|² = 0.5
        assert!((b.value - 0.6).abs() < 1e-7, "{b:?}");
        assert!(b.mixed);
    }

    fn small_config(r: usize, mu: f64) -> FrameConfig {
        FrameConfig { bandwidth: 4.0, d: 1, delta: 0.2, mu, r, trials: 8, net_size: 10, truncation: 12, seed: 3 }
    }

    #[test]
    fn frame_experiment_edge_cases() {
        let spec = spectrum(4.0, 1, 12);
        let zero = mc_frame_experiment(&small_config(0, 0.5), spec.clone()).unwrap();
        assert_eq!(zero.failure_rate, 1.0);
        let wide = mc_frame_experiment(&small_config(2000, 1e6), spec.clone()).unwrap();
        assert_eq!(wide.failure_rate, 0.0);
        for t in &wide.trials {
            assert!(t.min_norm_sum <= t.max_norm_sum);
            assert!(t.certificate_min <= t.net_min + 1e-9 && t.net_max <= t.certificate_max + 1e-9);
        }
        assert!(zero.theory_bound.vacuous && !wide.theory_bound.vacuous);
        let again = mc_frame_experiment(&small_config(2000, 1e6), spec).unwrap();
        assert_eq!(wide.csv(), again.csv());
    }

    #[test]
    fn deviation_experiment_and_sums() {
        let spec = spectrum(4.0, 1, 12);
        let config = DeviationConfig {
            bandwidth: 4.0,
            d: 1,
            delta: 0.2,
            r: 500,
            trials: 20,
            net_size: 1,
            truncation: 10,
            thresholds: vec![0.0, 5.0],
            seed: 4,
        };
        let report = deviation_sup_experiment(&config, spec.clone()).unwrap();
        assert_eq!(report.tails[0].frequency, 1.0);
        assert!(report.tails[0].bound.value >= 1.0);
        assert!(report.samples.iter().all(|s| s.sup >= 0.0));

        let mut rng = rng::stream(5, 0);
        let f = random_unit_function(spec, 10, &mut rng).unwrap();
        let r = 4000;
        let sums = deviation_sums(&f, r, 200, 8).unwrap();
        let mean = sums.iter().sum::<f64>() / (sums.len() as f64 * r as f64);
        let sigma = (0.25f64).sqrt();
        assert!(mean.abs() < 3.0 * sigma / ((r * sums.len()) as f64).sqrt(), "{mean}");
    }

    #[test]
    fn moment_bounds_hold_for_a_pair() {
        let spec = spectrum(4.0, 1, 12);
        let class = ConcentrationClass::new(4.0, 0.2, 1).unwrap();
        let f = sample_random_member(&class, spec.clone(), 10, 1).unwrap();
        let g = sample_random_member(&class, spec, 10, 2).unwrap();
        let m = moment_check(&f, &g, 10_000, 3, 0.01).unwrap();
        assert!(m.var_f <= m.var_bound + 3.0 * m.var_f_stderr);
        assert!(m.sup_f <= 1.0);
        assert!(m.var_diff <= m.var_diff_bound + 3.0 * m.var_diff_stderr);
        assert!(m.sup_diff <= m.sup_diff_bound);
    }
}
