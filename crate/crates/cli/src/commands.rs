use std::fmt::Write as _;
use std::sync::Arc;

use serde_json::{json, Value};

use prolate_sampling::frame::{
    default_truncation, deviation_sup_experiment, mc_frame_experiment, DeviationConfig, FrameConfig,
};
use prolate_sampling::function_space::{adversarial_bump_function, membership, sample_random_member, SmoothBump};
use prolate_sampling::negative::{
    construct_prop22, event_b_probability, hole_probability_exact, hole_probability_lower_bound, hole_probability_mc,
    prop24_empty_cube_audit, simulate_conditioned_b, void_frequencies,
};
use prolate_sampling::point_process::{
    classify_prop_hole, density_diagnostics, iid_uniform_cube, poisson_homogeneous, poisson_inhomogeneous,
    uniform_per_cube, IntensityModel, PointSet, Region,
};
use prolate_sampling::rng::derive_seed;
use prolate_sampling::spectrum::{
    calibrate_kappa, compute_spectrum_1d, counting_function, default_order, fuchs_defect, landau_widom_reference,
    tensor_spectrum_above, widom_asymptotic, Spectrum1D, SpectrumCache, SpectrumD, CLAMP_FLOOR,
};
use prolate_sampling::theory::{
    bernstein_bound, chain_constants, covering_number_l2, covering_number_sup, delta_feasibility, deviation_bound,
    min_samples, sampling_probability_bound, truncation_dimension, TheoryParams,
};
use prolate_sampling::ConcentrationClass;

use crate::output::{flatten_scalars, num, Report};
use crate::params::{count, positive, unit_open, Params};
use crate::Failure;

const DEFAULT_R: f64 = 4.0;
const DEFAULT_DELTA: f64 = 0.2;
const DEFAULT_MU: f64 = 0.5;
/// Relative agreement required for the top-eigenvalue flag.
const FUCHS_TOLERANCE: f64 = 0.25;

fn dimension(p: &Params) -> Result<usize, Failure> {
    match p.d.unwrap_or(1) {
        d @ 1..=3 => Ok(d),
        d => Err(Failure::Invalid(format!("d must be 1, 2 or 3, got {d}"))),
    }
}

fn base_spectrum(p: &Params, bandwidth: f64) -> Result<Arc<Spectrum1D>, Failure> {
    let order = p.order.unwrap_or_else(|| default_order(bandwidth));
    let spec = match &p.cache {
        Some(dir) => SpectrumCache::new(dir).load_or_compute(bandwidth, order)?,
        None => compute_spectrum_1d(bandwidth, order)?,
    };
    Ok(Arc::new(spec))
}

fn resolved_spectrum(p: &Params, bandwidth: f64, d: usize) -> Result<Arc<SpectrumD>, Failure> {
    Ok(Arc::new(tensor_spectrum_above(base_spectrum(p, bandwidth)?, d, CLAMP_FLOOR)?))
}

fn truncation(p: &Params, spectrum: &SpectrumD) -> Result<usize, Failure> {
    count("truncation", p.truncation, default_truncation(spectrum))
}

fn cache_echo(p: &Params) -> Value {
    json!(p.cache.as_ref().map(|c| c.display().to_string()))
}

pub fn spectrum(p: &Params) -> Result<Report, Failure> {
    let bandwidth = positive("R", p.bandwidth, DEFAULT_R)?;
    let d = dimension(p)?;
    let base = base_spectrum(p, bandwidth)?;
    let mu = base.all_eigenvalues();

    let defect = 1.0 - mu[0];
    let predicted = fuchs_defect(bandwidth, 1);
    let fuchs_ok = (defect - predicted).abs() <= FUCHS_TOLERANCE * predicted;
    let mut csv = String::from("k,mu_k,widom_asymptotic,fuchs_flag\n");
    for (k, m) in mu.iter().enumerate() {
        let flag = k == 0 && fuchs_ok;
        let _ = writeln!(csv, "{k},{},{},{}", num(*m), num(widom_asymptotic(bandwidth, k).value), flag as u8);
    }

    let n = bandwidth.floor() as usize;
    let plunge = (n >= 1 && n + 1 < mu.len()).then(|| {
        json!({"index_above": n + 1, "mu_above": mu[n + 1], "index_below": n - 1, "mu_below": mu[n - 1],
               "holds": mu[n + 1] <= 0.5 && 0.5 <= mu[n - 1]})
    });
    let tensor = tensor_spectrum_above(base.clone(), d, 0.005)?;
    let mut counting = Vec::new();
    for eps in [0.5, 0.1, 0.01] {
        counting.push(json!({
            "eps": eps,
            "count": counting_function(&tensor, eps)?,
            "reference": (d == 1).then(|| landau_widom_reference(bandwidth, eps)),
        }));
    }
    let summary = json!({
        "config": {"command": "spectrum", "R": bandwidth, "d": d, "order": base.rule().order(), "cache": cache_echo(p)},
        "trace": mu.iter().sum::<f64>(),
        "resolved_count": base.resolved_count(),
        "top_defect": defect,
        "fuchs_defect": predicted,
        "fuchs_within_tolerance": fuchs_ok,
        "plunge": plunge,
        "kappa": calibrate_kappa(&base).ok(),
        "counting": counting,
    });
    Ok(Report::new("spectrum", csv, summary))
}

pub fn synth(p: &Params) -> Result<Report, Failure> {
    let bandwidth = positive("R", p.bandwidth, DEFAULT_R)?;
    let d = dimension(p)?;
    let delta = unit_open("delta", p.delta, DEFAULT_DELTA)?;
    let n = count("count", p.count, 1)?;
    let seed = p.seed.unwrap_or(0);
    let spec = resolved_spectrum(p, bandwidth, d)?;
    let truncation = truncation(p, &spec)?;
    let class = ConcentrationClass::new(bandwidth, delta, d)?;

    let mut csv = String::from("function,n,lambda_n,re,im\n");
    let mut functions = Vec::new();
    for i in 0..n {
        let fseed = derive_seed(seed, i as u64);
        let f = sample_random_member(&class, spec.clone(), truncation, fseed)?;
        for (j, c) in f.coefficients().iter().enumerate() {
            let _ = writeln!(csv, "{i},{},{},{},{}", j + 1, num(spec.lambda(j + 1)), num(c.re), num(c.im));
        }
        functions.push(json!({
            "index": i,
            "seed": fseed,
            "norm_l2": f.norm_l2(),
            "local_energy": f.local_energy(),
            "member": membership(&f, &class),
            "record": f.to_record(),
        }));
    }
    let summary = json!({
        "config": {"command": "synth", "R": bandwidth, "d": d, "delta": delta, "count": n, "truncation": truncation,
                   "order": spec.base().rule().order(), "seed": seed, "cache": cache_echo(p)},
        "functions": functions,
    });
    Ok(Report::new("synth", csv, summary))
}

pub fn frame(p: &Params) -> Result<Report, Failure> {
    let bandwidth = positive("R", p.bandwidth, DEFAULT_R)?;
    let d = dimension(p)?;
    let spec = resolved_spectrum(p, bandwidth, d)?;
    let config = FrameConfig {
        bandwidth,
        d,
        delta: unit_open("delta", p.delta, DEFAULT_DELTA)?,
        mu: positive("mu", p.mu, DEFAULT_MU)?,
        r: p.r.unwrap_or(2000),
        trials: count("trials", p.trials, 500)?,
        net_size: count("net-size", p.net_size, 200)?,
        truncation: truncation(p, &spec)?,
        seed: p.seed.unwrap_or(0),
    };
    let order = spec.base().rule().order();
    let report = mc_frame_experiment(&config, spec)?;
    let summary = json!({
        "config": with_extras(&config, order, p),
        "failure_rate": report.failure_rate,
        "stderr": report.stderr,
        "theory_bound": report.theory_bound,
        "theory": report.theory,
    });
    Ok(Report::new("frame", report.csv(), summary))
}

fn with_extras<T: serde::Serialize>(config: &T, order: usize, p: &Params) -> Value {
    let mut v = serde_json::to_value(config).expect("config serializes");
    if let Value::Object(map) = &mut v {
        map.insert("order".into(), json!(order));
        map.insert("cache".into(), cache_echo(p));
    }
    v
}

pub fn deviation(p: &Params) -> Result<Report, Failure> {
    let bandwidth = positive("R", p.bandwidth, DEFAULT_R)?;
    let d = dimension(p)?;
    let r = count("r", p.r, 2000)?;
    let spec = resolved_spectrum(p, bandwidth, d)?;
    let scale = (r as f64 / bandwidth.powi(d as i32)).sqrt();
    let config = DeviationConfig {
        bandwidth,
        d,
        delta: unit_open("delta", p.delta, DEFAULT_DELTA)?,
        r,
        trials: count("trials", p.trials, 200)?,
        net_size: count("net-size", p.net_size, 200)?,
        truncation: truncation(p, &spec)?,
        thresholds: p.thresholds.clone().unwrap_or_else(|| [1.0, 2.0, 4.0, 8.0].map(|m| m * scale).to_vec()),
        seed: p.seed.unwrap_or(0),
    };
    let order = spec.base().rule().order();
    let report = deviation_sup_experiment(&config, spec)?;
    let summary = json!({
        "config": with_extras(&config, order, p),
        "tails": report.tails,
        "theory": report.theory,
    });
    Ok(Report::new("deviation", report.csv(), summary))
}

fn centered_region(half: f64, d: usize) -> Result<Region, Failure> {
    Ok(Region::new(vec![-half; d], vec![half; d])?)
}

fn intensity(p: &Params, model: &str, c0: f64) -> Result<IntensityModel, Failure> {
    match model {
        "poisson" => Ok(IntensityModel::Constant { rate: c0 }),
        "log-poisson" => Ok(IntensityModel::LogGrowth { c0 }),
        "sublog-poisson" => Ok(IntensityModel::SubLogGrowth { c0, exponent: positive("exponent", p.exponent, 0.5)? }),
        other => Err(Failure::Invalid(format!("model {other:?} is not a Poisson model"))),
    }
}

pub fn holes(p: &Params) -> Result<Report, Failure> {
    let d = dimension(p)?;
    let alpha = positive("alpha", p.alpha, 1.0)?;
    let c0 = positive("c0", p.c0, 1.0)?;
    let extent = positive("extent", p.extent, 8.0)?;
    let trials = count("trials", p.trials, 10_000)?;
    let n_range = p.n_range.unwrap_or(1024);
    let seed = p.seed.unwrap_or(0);
    let model_name = p.model.clone().unwrap_or_else(|| "log-poisson".into());
    let model = intensity(p, &model_name, c0)?;
    let region = centered_region(extent, d)?;

    let rows = void_frequencies(&region, alpha, model, trials, seed)?;
    let mut csv = String::from("cube,corner,mean,void_probability,frequency,stderr,bound\n");
    for (i, row) in rows.iter().enumerate() {
        let corner: Vec<String> = row.corner.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(
            csv,
            "{i},{},{},{},{},{},{}",
            corner.join(" "),
            num(row.mean),
            num(row.void_probability),
            num(row.frequency),
            num(row.stderr),
            num(row.bound)
        );
    }
    let max_z = rows
        .iter()
        .filter(|r| r.stderr > 0.0)
        .map(|r| (r.frequency - r.void_probability).abs() / r.stderr)
        .fold(0.0, f64::max);
    let means: Vec<f64> = rows.iter().map(|r| r.mean).collect();
    let (freq, se) = hole_probability_mc(&means, trials, derive_seed(seed, 1))?;
    let audit = prop24_empty_cube_audit(c0, alpha, d, n_range)?;
    let summary = json!({
        "config": {"command": "holes", "d": d, "model": model, "alpha": alpha, "extent": extent,
                   "trials": trials, "n_range": n_range, "seed": seed},
        "voids": {"cubes": rows.len(), "max_abs_z": max_z, "within_3_stderr": rows.iter().all(|r| (r.frequency - r.void_probability).abs() <= 3.0 * r.stderr)},
        "some_cube_empty": {
            "lower_bound": hole_probability_lower_bound(&means)?,
            "exact": hole_probability_exact(&means)?,
            "empirical": freq,
            "stderr": se,
        },
        "summability": audit,
    });
    Ok(Report::new("holes", csv, summary))
}

pub fn adversarial(p: &Params) -> Result<Report, Failure> {
    let ks = p.k.clone().unwrap_or_else(|| vec![5.0, 10.0, 20.0]);
    let r = count("r", p.r, 1)?;
    let trials = count("trials", p.trials, 200)?;
    let seed = p.seed.unwrap_or(0);
    let f = adversarial_bump_function(SmoothBump::standard())?;

    let mut csv = String::new();
    let mut runs = Vec::new();
    for (i, k) in ks.iter().enumerate() {
        let setup = construct_prop22(*k, r, &f)?;
        let report = simulate_conditioned_b(&setup, trials, derive_seed(seed, i as u64))?;
        let body = report.csv();
        let mut lines = body.lines();
        let header = lines.next().unwrap_or_default();
        if csv.is_empty() {
            let _ = writeln!(csv, "k,{header}");
        }
        for line in lines {
            let _ = writeln!(csv, "{k},{line}");
        }
        runs.push(json!({
            "setup": setup,
            "event_b_probability_check": event_b_probability(setup.delta, setup.r, setup.n),
            "window": report.window,
            "truncation_bound": report.truncation_bound,
            "threshold": report.threshold,
            "max_conditioned_total": report.trials.iter().map(|t| t.conditioned_total).fold(f64::NEG_INFINITY, f64::max),
            "violations": report.violations.len(),
            "all_hold": report.all_hold(),
            "unconditioned_hold_fraction": report.unconditioned_hold_fraction,
        }));
    }
    let summary = json!({
        "config": {"command": "adversarial", "k": ks, "r": r, "trials": trials, "seed": seed},
        "function": {"decay_constant": f.decay_constant, "derivative_bound": f.derivative_bound,
                     "l2_norm": f.l2_norm, "sup_bound": f.sup_bound},
        "runs": runs,
    });
    Ok(Report::new("adversarial", csv, summary))
}

pub fn density(p: &Params) -> Result<Report, Failure> {
    let seed = p.seed.unwrap_or(0);
    let (set, source) = match &p.points {
        Some(path) => (PointSet::load(path)?, json!({"points": path.display().to_string()})),
        None => {
            let d = dimension(p)?;
            let model = p.model.clone().unwrap_or_else(|| "iid".into());
            let set = match model.as_str() {
                "iid" => {
                    let bandwidth = positive("R", p.bandwidth, DEFAULT_R)?;
                    iid_uniform_cube(bandwidth, d, count("r", p.r, 100)?, seed)?
                }
                "per-cube" => uniform_per_cube(&centered_region(positive("extent", p.extent, 8.0)?, d)?, count("r", p.r, 1)?, seed)?,
                name => {
                    let region = centered_region(positive("extent", p.extent, 8.0)?, d)?;
                    let c0 = positive("c0", p.c0, 1.0)?;
                    match intensity(p, name, c0)? {
                        IntensityModel::Constant { rate } => poisson_homogeneous(&region, rate, seed)?,
                        m => poisson_inhomogeneous(&region, m, m.sup_over(&region), seed)?,
                    }
                }
            };
            (set, json!({"model": model, "d": d}))
        }
    };
    let sides = p.window_sides.clone().unwrap_or_else(|| vec![1.0, 2.0, 4.0]);
    let step = positive("grid-step", p.grid_step, 0.1)?;
    let report = density_diagnostics(&set, &sides, step)?;
    let verdict = classify_prop_hole(&report);

    let mut csv = String::from("side,min_density,placements\n");
    for w in &report.windows {
        let _ = writeln!(csv, "{},{},{}", num(w.side), num(w.min_density), w.placements);
    }
    let summary = json!({
        "config": {"command": "density", "source": source, "meta": set.meta(), "window_sides": sides, "grid_step": step},
        "report": report,
        "verdict": verdict,
    });
    let mut out = Report::new("density", csv, summary);
    out.extras.push(("points.txt".into(), set.to_text()?));
    Ok(out)
}

pub fn bounds(p: &Params) -> Result<Report, Failure> {
    let bandwidth = positive("R", p.bandwidth, DEFAULT_R)?;
    let d = dimension(p)?;
    let delta = unit_open("delta", p.delta, DEFAULT_DELTA)?;
    let mu = positive("mu", p.mu, DEFAULT_MU)?;
    let r = p.r.unwrap_or(2000) as u64;
    let eps = unit_open("eps", p.eps, 0.01)?;
    let base = base_spectrum(p, bandwidth)?;
    let theory = TheoryParams::from_spectrum(&base, d)?;
    let spec = tensor_spectrum_above(base.clone(), d, CLAMP_FLOOR)?;
    let chain = chain_constants(bandwidth, d, theory.kappa, theory.k_d)?;
    let threshold = theory.validity_threshold(r);
    let rd = bandwidth.powi(d as i32);
    let feasibility = delta_feasibility(bandwidth, d);

    let summary = json!({
        "config": {"command": "bounds", "R": bandwidth, "d": d, "delta": delta, "mu": mu, "r": r, "eps": eps,
                   "order": base.rule().order(), "cache": cache_echo(p)},
        "theory": theory,
        "chain": chain,
        "delta_feasibility": {"bound": feasibility, "class_nonempty": delta >= feasibility},
        "truncation_dimension": truncation_dimension(&spec, delta, eps, theory.kappa)?,
        "log_covering_l2": covering_number_l2(bandwidth, delta, eps, d, theory.kappa)?,
        "log_covering_sup": covering_number_sup(bandwidth, eps, d, theory.kappa, theory.k_d)?,
        "validity_threshold": threshold,
        "deviation_bound_at_threshold": deviation_bound(threshold, r, bandwidth, d, theory.log_a, theory.b)?,
        "bernstein_at_threshold": bernstein_bound(threshold, r, 1.0 / rd, 1.0)?,
        "sampling_probability": sampling_probability_bound(r, bandwidth, d, mu, theory.log_a, theory.b)?,
        "min_samples": min_samples(bandwidth, d, mu, eps, theory.b, theory.c).ok(),
    });
    Ok(Report::new("bounds", flatten_scalars(&summary), summary))
}
