//! Counterexamples to stable random sampling: functions pinned to zeros of a
//! closed-form bandlimited function, Poisson hole probabilities, and the
//! empty-cube summability audit.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::function_space::ClosedFormFunction;
use crate::point_process::{poisson_inhomogeneous, IntensityModel, Region};
use crate::quadrature::legendre_nodes;
use crate::rng;

const TAIL_TERMS: usize = 4000;
const MAX_TRUNCATION: usize = 1 << 20;

/// `(1 + (j−1)²)^{−2}`.
fn decay_term(j: usize) -> f64 {
    let t = j as f64 - 1.0;
    (1.0 + t * t).powi(-2)
}

/// `Σ_{|j| ≥ m} c1² r (1 + (|j|−1)²)^{−2}` by direct summation plus an
/// integral bound on the remainder.
pub fn decay_tail(c1: f64, r: usize, m: usize) -> f64 {
    let last = m + TAIL_TERMS;
    let direct: f64 = (m..last).rev().map(decay_term).sum();
    // Σ_{j ≥ last} (j−1)^{−4} ≤ ∫_{last−2}^∞ x^{−4} dx
    let remainder = 1.0 / (3.0 * ((last - 2) as f64).powi(3));
    let one_sided = direct + remainder;
    // j = 0 appears once when m = 0
    let two_sided = if m == 0 { 2.0 * one_sided - decay_term(0) } else { 2.0 * one_sided };
    c1 * c1 * r as f64 * two_sided
}

/// `δ^{r(2N+1)}`, the probability that every sample in `[−N, N]` is pinned.
pub fn event_b_probability(delta: f64, r: usize, n: usize) -> f64 {
    delta.powi((r * (2 * n + 1)) as i32)
}

/// Parameters of the pinned-sample counterexample.
#[derive(Debug, Clone, Serialize)]
pub struct Prop22Setup {
    pub k: f64,
    pub r: usize,
    /// Even truncation `N`.
    pub n: usize,
    /// Pinning width `δ = 2^{−m}`.
    pub delta: f64,
    pub delta_exponent: u32,
    pub norm_sq: f64,
    pub c1: f64,
    pub c2: f64,
    /// Left side of the tail condition at `N`.
    pub tail_sum: f64,
    /// `‖F‖₂²/(4k)`.
    pub tail_budget: f64,
    /// `2 c2 N r δ`.
    pub pinned_bound: f64,
    /// `‖F‖₂²/(2k)`.
    pub pinned_budget: f64,
    pub event_b_probability: f64,
    pub log_event_b_probability: f64,
    #[serde(skip)]
    pub function: ClosedFormFunction,
}

/// Minimal even `N` meeting the tail condition, then the largest dyadic `δ`
/// meeting the pinning condition.
pub fn construct_prop22(k: f64, r: usize, function: &ClosedFormFunction) -> Result<Prop22Setup> {
    if !(k > 0.0 && k.is_finite()) {
        return invalid(format!("k must be positive, got {k}"));
    }
    if r == 0 {
        return invalid("r must be at least 1");
    }
    let norm_sq = function.l2_norm * function.l2_norm;
    let (c1, c2) = (function.decay_constant, function.derivative_bound);
    let tail_budget = norm_sq / (4.0 * k);
    let mut n = 2;
    let tail_sum = loop {
        let t = decay_tail(c1, r, n / 2);
        if t < tail_budget {
            break t;
        }
        n += 2;
        if n > MAX_TRUNCATION {
            return Err(Error::Numeric("no truncation N meets the tail condition".into()));
        }
    };
    let pinned_budget = norm_sq / (2.0 * k);
    let mut m = 1u32;
    while 2.0 * c2 * n as f64 * r as f64 * 0.5f64.powi(m as i32) >= pinned_budget {
        m += 1;
        if m > 1000 {
            return Err(Error::Numeric("no dyadic delta meets the pinning condition".into()));
        }
    }
    let delta = 0.5f64.powi(m as i32);
    let exponent = (r * (2 * n + 1)) as f64;
    Ok(Prop22Setup {
        k,
        r,
        n,
        delta,
        delta_exponent: m,
        norm_sq,
        c1,
        c2,
        tail_sum,
        tail_budget,
        pinned_bound: 2.0 * c2 * n as f64 * r as f64 * delta,
        pinned_budget,
        event_b_probability: event_b_probability(delta, r, n),
        log_event_b_probability: exponent * delta.ln(),
        function: function.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionedTrial {
    pub trial: usize,
    pub seed: u64,
    /// Samples in `[−N, N]`, pinned near even integers.
    pub pinned_sum: f64,
    /// Free samples in the window outside `[−N, N]`.
    pub free_sum: f64,
    /// `pinned_sum + free_sum + truncation_bound`.
    pub conditioned_total: f64,
    pub holds: bool,
    /// Same window without conditioning.
    pub unconditioned_sum: f64,
    pub unconditioned_holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionedReport {
    pub setup: Prop22Setup,
    /// Cubes `[j, j+1]` with `−J ≤ j < J` are simulated.
    pub window: usize,
    /// Bound on the samples beyond the window.
    pub truncation_bound: f64,
    /// `‖F‖₂²/k`.
    pub threshold: f64,
    pub trials: Vec<ConditionedTrial>,
    pub violations: Vec<usize>,
    pub unconditioned_hold_fraction: f64,
}

impl ConditionedReport {
    pub fn all_hold(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("trial,seed,pinned_sum,free_sum,conditioned_total,holds,unconditioned_sum,unconditioned_holds\n");
        for t in &self.trials {
            let _ = writeln!(
                out,
                "{},{},{:.16e},{:.16e},{:.16e},{},{:.16e},{}",
                t.trial, t.seed, t.pinned_sum, t.free_sum, t.conditioned_total, t.holds, t.unconditioned_sum, t.unconditioned_holds
            );
        }
        out
    }
}

/// Draws the per-cube uniform model conditioned on the pinning event and
/// checks `Σ |F(x_i)|² < ‖F‖₂²/k` in every trial.
pub fn simulate_conditioned_b(setup: &Prop22Setup, trials: usize, seed: u64) -> Result<ConditionedReport> {
    if !(setup.delta > 0.0 && setup.delta <= 1.0) {
        return invalid(format!("pinning width must lie in (0, 1], got {}", setup.delta));
    }
    let mut window = setup.n;
    while decay_tail(setup.c1, setup.r, window) >= setup.tail_budget / 2.0 {
        window += 1;
    }
    let truncation_bound = decay_tail(setup.c1, setup.r, window);
    let threshold = setup.norm_sq / setup.k;
    let f = &setup.function;
    let n = setup.n as i64;
    let j_max = window as i64;
    let rows: Vec<ConditionedTrial> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let trial_seed = rng::derive_seed(seed, trial as u64);
            let mut rng = rng::stream(trial_seed, 0);
            let (mut pinned_sum, mut free_sum) = (0.0, 0.0);
            for j in -j_max..j_max {
                let jf = j as f64;
                for _ in 0..setup.r {
                    let u: f64 = rng.gen();
                    if (-n..=n).contains(&j) {
                        let x = if j.rem_euclid(2) == 0 { jf + setup.delta * u } else { jf + 1.0 - setup.delta * u };
                        pinned_sum += f.value(x).powi(2);
                    } else {
                        free_sum += f.value(jf + u).powi(2);
                    }
                }
            }
            let mut free_rng = rng::stream(trial_seed, 1);
            let unconditioned_sum: f64 = (-j_max..j_max)
                .flat_map(|j| (0..setup.r).map(move |_| j))
                .map(|j| f.value(j as f64 + free_rng.gen::<f64>()).powi(2))
                .sum();
            let conditioned_total = pinned_sum + free_sum + truncation_bound;
            ConditionedTrial {
                trial,
                seed: trial_seed,
                pinned_sum,
                free_sum,
                conditioned_total,
                holds: conditioned_total < threshold,
                unconditioned_sum,
                unconditioned_holds: unconditioned_sum < threshold,
            }
        })
        .collect();
    let violations = rows.iter().filter(|t| !t.holds).map(|t| t.trial).collect();
    let unconditioned_hold_fraction = rows.iter().filter(|t| t.unconditioned_holds).count() as f64 / rows.len().max(1) as f64;
    Ok(ConditionedReport {
        setup: setup.clone(),
        window,
        truncation_bound,
        threshold,
        trials: rows,
        violations,
        unconditioned_hold_fraction,
    })
}

fn check_means(lambdas: &[f64]) -> Result<()> {
    if lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return invalid("Poisson means must be finite and nonnegative");
    }
    Ok(())
}

/// `1 − exp(−Σ e^{−λ_i})`, a lower bound for the probability that at least
/// one of independent Poisson(λ_i) counts is zero.
pub fn hole_probability_lower_bound(lambdas: &[f64]) -> Result<f64> {
    check_means(lambdas)?;
    let s: f64 = lambdas.iter().map(|l| (-l).exp()).sum();
    Ok(-(-s).exp_m1())
}

/// `1 − Π (1 − e^{−λ_i})`.
pub fn hole_probability_exact(lambdas: &[f64]) -> Result<f64> {
    check_means(lambdas)?;
    let log_all_occupied: f64 = lambdas.iter().map(|l| (-(-l).exp()).ln_1p()).sum();
    Ok(-log_all_occupied.exp_m1())
}

/// Monte Carlo frequency of at least one empty count, with its standard error.
pub fn hole_probability_mc(lambdas: &[f64], trials: usize, seed: u64) -> Result<(f64, f64)> {
    check_means(lambdas)?;
    if trials == 0 {
        return invalid("trials must be at least 1");
    }
    let dists: Vec<Option<Poisson<f64>>> = lambdas.iter().map(|l| (*l > 0.0).then(|| Poisson::new(*l).expect("positive mean"))).collect();
    let hits = (0..trials)
        .into_par_iter()
        .filter(|t| {
            let mut rng = rng::stream(seed, *t as u64);
            dists.iter().any(|d| d.as_ref().is_none_or(|d| d.sample(&mut rng) == 0.0))
        })
        .count();
    let p = hits as f64 / trials as f64;
    Ok((p, (p * (1.0 - p) / trials as f64).sqrt()))
}

/// Convergence reading of a truncated positive series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Summability {
    Converges,
    Diverges,
    Inconclusive,
}

/// Block ratio at or below which a series is read as convergent.
pub const CONVERGENT_BLOCK_RATIO: f64 = 0.75;
/// Block ratio at or above which a series is read as divergent.
pub const DIVERGENT_BLOCK_RATIO: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SumRow {
    pub n: usize,
    /// `min(1, (αn)^{−c0 α^d})`.
    pub bound_term: f64,
    /// `Σ_{m ≤ n} N^{−c0 α^d}` with `N = m`.
    pub series_partial_sum: f64,
    /// Lattice sum over cubes with `|k|_∞ ≤ n`.
    pub lattice_partial_sum: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Prop24Report {
    pub c0: f64,
    pub alpha: f64,
    pub d: usize,
    /// `c0 α^d`.
    pub exponent: f64,
    pub meets_threshold: bool,
    /// Rows at powers of two and at `n_range`.
    pub rows: Vec<SumRow>,
    /// Ratio of the last two dyadic block sums of the lattice series.
    pub block_ratio: f64,
    pub verdict: Summability,
    /// `n_range^{−c0 α^d}`, the last increment of the one-sided series.
    pub last_increment: f64,
}

fn shell_count(n: usize, d: usize) -> f64 {
    if n == 0 {
        1.0
    } else {
        (2.0 * n as f64 + 1.0).powi(d as i32) - (2.0 * n as f64 - 1.0).powi(d as i32)
    }
}

/// Tabulates the empty-cube bounds `P(C_k) ≤ N^{−c0 α^d}` and their sums.
///
/// Every cube `αk + [0, α]^d` with `|k|_∞ = n` lies at distance at least
/// `α(n−1)` from the origin; the table uses `N = αn` as in the summability
/// argument and reads the verdict from dyadic block ratios.
pub fn prop24_empty_cube_audit(c0: f64, alpha: f64, d: usize, n_range: usize) -> Result<Prop24Report> {
    if !(c0 > 0.0 && alpha > 0.0) {
        return invalid("c0 and alpha must be positive");
    }
    if d == 0 || n_range < 8 {
        return invalid("need d >= 1 and n_range >= 8");
    }
    let exponent = c0 * alpha.powi(d as i32);
    let term = |n: usize| (alpha * n as f64).powf(-exponent).min(1.0);
    let mut rows = Vec::new();
    let (mut series, mut lattice) = (0.0, 0.0);
    let mut blocks = Vec::new();
    let mut block = 0.0;
    let mut next_power = 1;
    for n in 1..=n_range {
        let t = term(n);
        series += (n as f64).powf(-exponent);
        lattice += shell_count(n, d) * t;
        block += shell_count(n, d) * t;
        if n == next_power || n == n_range {
            rows.push(SumRow { n, bound_term: t, series_partial_sum: series, lattice_partial_sum: lattice });
        }
        if n == next_power {
            blocks.push(block);
            block = 0.0;
            next_power *= 2;
        }
    }
    let k = blocks.len();
    let block_ratio = blocks[k - 1] / blocks[k - 2];
    let verdict = if block_ratio <= CONVERGENT_BLOCK_RATIO {
        Summability::Converges
    } else if block_ratio >= DIVERGENT_BLOCK_RATIO {
        Summability::Diverges
    } else {
        Summability::Inconclusive
    };
    Ok(Prop24Report {
        c0,
        alpha,
        d,
        exponent,
        meets_threshold: exponent >= d as f64 + 1.0,
        rows,
        block_ratio,
        verdict,
        last_increment: (n_range as f64).powf(-exponent),
    })
}

/// `∫_A λ` over a box by panel Gauss–Legendre quadrature.
pub fn intensity_mass(model: &IntensityModel, corner: &[f64], side: f64) -> f64 {
    let (x, w) = legendre_nodes(12);
    let panels = 4;
    let h = side / panels as f64;
    let axis: Vec<(f64, f64)> = (0..panels)
        .flat_map(|p| {
            let mid = (p as f64 + 0.5) * h;
            x.iter().zip(&w).map(move |(xi, wi)| (mid + 0.5 * h * xi, 0.5 * h * wi)).collect::<Vec<_>>()
        })
        .collect();
    let d = corner.len();
    let total = axis.len().pow(d as u32);
    let mut p = vec![0.0; d];
    let mut acc = 0.0;
    for idx in 0..total {
        let mut rest = idx;
        let mut weight = 1.0;
        for i in 0..d {
            let (t, wt) = axis[rest % axis.len()];
            rest /= axis.len();
            p[i] = corner[i] + t;
            weight *= wt;
        }
        acc += weight * model.value(&p);
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VoidRow {
    pub corner: Vec<f64>,
    pub mean: f64,
    /// `e^{−mean}`.
    pub void_probability: f64,
    pub frequency: f64,
    pub stderr: f64,
    /// `min(1, N^{−c0 α^d})` with `N` the distance of the cube from the origin;
    /// only meaningful for the logarithmic model.
    pub bound: f64,
}

/// Per-cube empty frequencies of an inhomogeneous Poisson process on the
/// cubes `αk + [0, α]^d` tiling `region`.
pub fn void_frequencies(region: &Region, alpha: f64, model: IntensityModel, trials: usize, seed: u64) -> Result<Vec<VoidRow>> {
    if !(alpha > 0.0) || trials == 0 {
        return invalid("alpha must be positive and trials at least 1");
    }
    let d = region.dimension();
    let counts: Vec<usize> = region.sides().map(|s| (s / alpha).round() as usize).collect();
    if region.sides().zip(&counts).any(|(s, c)| *c == 0 || (s - *c as f64 * alpha).abs() > 1e-9 * s) {
        return invalid("region sides must be multiples of alpha");
    }
    let total: usize = counts.iter().product();
    let corners: Vec<Vec<f64>> = (0..total)
        .map(|idx| {
            let mut rest = idx;
            (0..d)
                .map(|i| {
                    let c = rest % counts[i];
                    rest /= counts[i];
                    region.lower[i] + c as f64 * alpha
                })
                .collect()
        })
        .collect();
    let max = model.sup_over(region);
    let empties: Vec<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let set = poisson_inhomogeneous(region, model, max, rng::derive_seed(seed, t as u64))?;
            let mut occupied = vec![false; total];
            for p in set.iter() {
                let mut idx = 0;
                let mut stride = 1;
                for i in 0..d {
                    let c = (((p[i] - region.lower[i]) / alpha).floor() as usize).min(counts[i] - 1);
                    idx += c * stride;
                    stride *= counts[i];
                }
                occupied[idx] = true;
            }
            Ok(occupied.into_iter().map(|o| !o).collect())
        })
        .collect::<Result<_>>()?;
    let exponent = match model {
        IntensityModel::LogGrowth { c0 } => c0 * alpha.powi(d as i32),
        _ => 0.0,
    };
    Ok(corners
        .into_iter()
        .enumerate()
        .map(|(i, corner)| {
            let mean = intensity_mass(&model, &corner, alpha);
            let frequency = empties.iter().filter(|e| e[i]).count() as f64 / trials as f64;
            let p = (-mean).exp();
            let distance = corner
                .iter()
                .map(|a| if *a > 0.0 { *a } else if a + alpha < 0.0 { -(a + alpha) } else { 0.0 })
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt();
            VoidRow {
                corner,
                mean,
                void_probability: p,
                frequency,
                stderr: (p * (1.0 - p) / trials as f64).sqrt(),
                bound: if exponent > 0.0 && distance > 0.0 { distance.powf(-exponent).min(1.0) } else { 1.0 },
            }
        })
        .collect())
}
