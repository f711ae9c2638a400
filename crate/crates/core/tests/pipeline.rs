use std::sync::Arc;

use rand::Rng;

use prolate_sampling::frame::{gram_at_points, restricted_lower_bound, restricted_upper_bound, sample_sum, DEFAULT_TOLERANCE};
use prolate_sampling::function_space::{sample_random_member, FunctionRecord};
use prolate_sampling::point_process::{iid_uniform_cube, poisson_inhomogeneous, IntensityModel, PointSet, Region};
use prolate_sampling::rng;
use prolate_sampling::spectrum::{
    compute_spectrum_1d, load_spectrum, tensor_spectrum, Spectrum1D, SpectrumCache, SpectrumD, SpectrumRecord,
};
use prolate_sampling::{BandlimitedFunction, ConcentrationClass, Error};

fn spectrum_d(r: f64, d: usize, count: usize) -> Arc<SpectrumD> {
    let base = Arc::new(compute_spectrum_1d(r, 200).unwrap());
    Arc::new(tensor_spectrum(base, d, count).unwrap())
}

fn same_bits(a: &Spectrum1D, b: &Spectrum1D) -> bool {
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    bits(a.all_eigenvalues()) == bits(b.all_eigenvalues())
        && bits(a.rule().nodes()) == bits(b.rule().nodes())
        && bits(a.rule().weights()) == bits(b.rule().weights())
        && bits(a.eigvec_matrix().as_slice()) == bits(b.eigvec_matrix().as_slice())
}

#[test]
fn cached_spectrum_reloads_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cache = SpectrumCache::new(dir.path());
    let computed = cache.load_or_compute(3.0, 120).unwrap();
    assert!(cache.path_for(3.0, 120).exists());
    let loaded = cache.load_or_compute(3.0, 120).unwrap();
    assert!(same_bits(&computed, &loaded));
    assert!(same_bits(&computed, &compute_spectrum_1d(3.0, 120).unwrap()));
}

#[test]
fn tampered_cache_fails_invariants() {
    let dir = tempfile::tempdir().unwrap();
    let cache = SpectrumCache::new(dir.path());
    cache.load_or_compute(2.0, 100).unwrap();
    let path = cache.path_for(2.0, 100);
    let mut rec: SpectrumRecord = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    rec.eigenvalues[0] = 0.5;
    std::fs::write(&path, serde_json::to_string(&rec).unwrap()).unwrap();
    assert!(load_spectrum(&path).is_err());

    std::fs::write(&path, "not a spectrum").unwrap();
    assert!(matches!(load_spectrum(&path), Err(Error::Format(_))));
}

#[test]
fn function_record_round_trip() {
    let spec = spectrum_d(4.0, 2, 20);
    let class = ConcentrationClass::new(4.0, 0.2, 2).unwrap();
    let f = sample_random_member(&class, spec.clone(), 20, 3).unwrap();
    let text = serde_json::to_string(&f.to_record()).unwrap();
    let record: FunctionRecord = serde_json::from_str(&text).unwrap();
    let g = BandlimitedFunction::from_record(spec, &record).unwrap();
    let pts = [0.3, -1.1, 1.9, 0.0, -0.4, 2.5];
    assert_eq!(f.evaluate_many(&pts), g.evaluate_many(&pts));

    let other = spectrum_d(4.0, 1, 12);
    assert!(BandlimitedFunction::from_record(other, &record).is_err());
}

#[test]
fn point_sets_round_trip_and_regenerate() {
    let region = Region::new(vec![-4.0, -2.0], vec![4.0, 2.0]).unwrap();
    let set = poisson_inhomogeneous(&region, IntensityModel::LogGrowth { c0: 2.0 }, 2.0 * (1.0 + 20f64.sqrt().ln()), 9).unwrap();
    assert!(!set.is_empty());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("points.txt");
    set.save(&path).unwrap();
    assert_eq!(PointSet::load(&path).unwrap(), set);
    assert_eq!(PointSet::regenerate(set.meta()).unwrap(), set);
}

#[test]
fn certificate_brackets_every_member_sample_sum() {
    let (bandwidth, delta, count) = (4.0, 0.2, 10);
    let spec = spectrum_d(bandwidth, 1, count);
    let lambdas: Vec<f64> = (1..=count).map(|n| spec.lambda(n)).collect();
    let points = iid_uniform_cube(bandwidth, 1, 400, 21).unwrap();
    let g = gram_at_points(&spec, count, &points).unwrap();
    let lower = restricted_lower_bound(&g, &lambdas, delta, DEFAULT_TOLERANCE).unwrap().value;
    let upper = restricted_upper_bound(&g, &lambdas, delta, DEFAULT_TOLERANCE).unwrap().value;
    assert!(lower < upper);

    let class = ConcentrationClass::new(bandwidth, delta, 1).unwrap();
    let mut rng = rng::stream(22, 0);
    for _ in 0..50 {
        let f = sample_random_member(&class, spec.clone(), count, rng.gen()).unwrap();
        let s = sample_sum(&f, &points).unwrap();
        // c^H G c evaluated independently of sample_sum
        let c = f.coefficients();
        let quad: f64 = (0..count)
            .flat_map(|m| (0..count).map(move |n| (m, n)))
            .map(|(m, n)| (c[m].conj() * g[(m, n)] * c[n]).re)
            .sum();
        assert!((s - quad).abs() <= 1e-9 * s.max(1.0));
        assert!(lower - 1e-7 <= s && s <= upper + 1e-7, "{lower} <= {s} <= {upper}");
    }
}
