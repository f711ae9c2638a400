//! Random sampling sets and the deterministic diagnostics of stable sampling.
//!
//! Points are stored flat: point `i` occupies `points[i*d .. (i+1)*d]`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng;

const FILE_MAGIC: &str = "# prolate-points v1";
const PROBE_POINTS_PER_AXIS: usize = 33;
const PROBE_TOLERANCE: f64 = 1e-12;

/// Axis-aligned box `Π [lower_i, upper_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Region {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return invalid("region bounds must be nonempty and of equal length");
        }
        if lower.iter().zip(&upper).any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b)) {
            return invalid("region needs finite bounds with lower < upper on every axis");
        }
        Ok(Self { lower, upper })
    }

    /// The centered cube `C_R = [−R/2, R/2]^d`.
    pub fn centered_cube(bandwidth: f64, d: usize) -> Result<Self> {
        Self::new(vec![-bandwidth / 2.0; d], vec![bandwidth / 2.0; d])
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn volume(&self) -> f64 {
        self.sides().product()
    }

    pub fn sides(&self) -> impl Iterator<Item = f64> + '_ {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a)
    }

    pub fn min_side(&self) -> f64 {
        self.sides().fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dimension() && p.iter().enumerate().all(|(i, x)| *x >= self.lower[i] && *x <= self.upper[i])
    }

    /// Integer lower corners of the unit cubes tiling the region, first axis slowest.
    pub fn unit_cubes(&self) -> Result<Vec<Vec<i64>>> {
        let integral = |v: &f64| v.fract() == 0.0 && v.abs() < 1e15;
        if !self.lower.iter().chain(&self.upper).all(integral) {
            return invalid("region is not a union of unit cubes (bounds must be integers)");
        }
        let ranges: Vec<(i64, i64)> = self.lower.iter().zip(&self.upper).map(|(a, b)| (*a as i64, *b as i64)).collect();
        let mut out = vec![Vec::new()];
        for (a, b) in ranges {
            out = out.into_iter().flat_map(|prefix| (a..b).map(move |k| [prefix.clone(), vec![k]].concat())).collect();
        }
        Ok(out)
    }

    fn uniform_point<R: Rng>(&self, rng: &mut R, out: &mut Vec<f64>) {
        for (a, b) in self.lower.iter().zip(&self.upper) {
            out.push(rng.gen_range(*a..*b));
        }
    }
}

/// Intensity functions of the Poisson models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum IntensityModel {
    Constant { rate: f64 },
    /// `c0 (1 + log⁺|x|)`.
    LogGrowth { c0: f64 },
    /// `c0 (1 + log⁺|x|)^exponent`, sub-logarithmic for `exponent < 1`.
    SubLogGrowth { c0: f64, exponent: f64 },
}

impl IntensityModel {
    pub fn value(&self, x: &[f64]) -> f64 {
        let log_plus = || x.iter().map(|v| v * v).sum::<f64>().sqrt().ln().max(0.0);
        match *self {
            Self::Constant { rate } => rate,
            Self::LogGrowth { c0 } => c0 * (1.0 + log_plus()),
            Self::SubLogGrowth { c0, exponent } => c0 * (1.0 + log_plus()).powf(exponent),
        }
    }

    /// Supremum over the region (all models are radially nondecreasing).
    pub fn sup_over(&self, region: &Region) -> f64 {
        let far: Vec<f64> = region.lower.iter().zip(&region.upper).map(|(a, b)| a.abs().max(b.abs())).collect();
        self.value(&far)
    }
}

/// How a point set was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum Generator {
    IidUniformCube {
        #[serde(rename = "R")]
        bandwidth: f64,
        count: usize,
    },
    UniformPerCube { per_cube: usize },
    PoissonHomogeneous { intensity: f64 },
    PoissonInhomogeneous { intensity: IntensityModel, intensity_max: f64 },
    /// Caller-supplied intensity; cannot be regenerated from metadata.
    PoissonCustom { description: String, intensity_max: f64 },
    /// Points given explicitly.
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointMeta {
    pub generator: Generator,
    pub region: Region,
    pub seed: u64,
}

/// A finite sampling set with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dimension: usize,
    points: Vec<f64>,
    meta: PointMeta,
}

impl PointSet {
    /// Wraps explicit coordinates; every point must lie in `region`.
    pub fn from_points(region: Region, points: Vec<f64>) -> Result<Self> {
        Self::assemble(PointMeta { generator: Generator::Explicit, region, seed: 0 }, points)
    }

    fn assemble(meta: PointMeta, points: Vec<f64>) -> Result<Self> {
        let dimension = meta.region.dimension();
        if !points.len().is_multiple_of(dimension) {
            return invalid("coordinate count is not a multiple of the dimension");
        }
        if let Some(bad) = points.chunks(dimension).find(|p| !meta.region.contains(p)) {
            return invalid(format!("point {bad:?} lies outside the region"));
        }
        Ok(Self { dimension, points, meta })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dimension
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks(self.dimension)
    }

    /// Flat coordinate array.
    pub fn coordinates(&self) -> &[f64] {
        &self.points
    }

    pub fn meta(&self) -> &PointMeta {
        &self.meta
    }

    pub fn region(&self) -> &Region {
        &self.meta.region
    }

    /// Rebuilds a point set from its metadata.
    pub fn regenerate(meta: &PointMeta) -> Result<Self> {
        let region = meta.region.clone();
        match &meta.generator {
            Generator::IidUniformCube { bandwidth, count } => {
                let set = iid_uniform_cube(*bandwidth, region.dimension(), *count, meta.seed)?;
                if set.meta.region != region {
                    return invalid("region does not match the i.i.d. cube model");
                }
                Ok(set)
            }
            Generator::UniformPerCube { per_cube } => uniform_per_cube(&region, *per_cube, meta.seed),
            Generator::PoissonHomogeneous { intensity } => poisson_homogeneous(&region, *intensity, meta.seed),
            Generator::PoissonInhomogeneous { intensity, intensity_max } => {
                poisson_inhomogeneous(&region, *intensity, *intensity_max, meta.seed)
            }
            Generator::PoissonCustom { .. } | Generator::Explicit => {
                invalid("this point set has no regenerable generator")
            }
        }
    }

    /// Text form: a magic line, a `# meta` JSON line, then one point per line.
    pub fn to_text(&self) -> Result<String> {
        let meta = serde_json::to_string(&self.meta).map_err(|e| Error::Format(e.to_string()))?;
        let mut out = format!("{FILE_MAGIC}\n# meta {meta}\n");
        for p in self.iter() {
            let line: Vec<String> = p.iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        Ok(out)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(FILE_MAGIC) {
            return Err(Error::Format("missing point file header".into()));
        }
        let meta_line = lines
            .next()
            .and_then(|l| l.strip_prefix("# meta "))
            .ok_or_else(|| Error::Format("missing meta line".into()))?;
        let meta: PointMeta = serde_json::from_str(meta_line).map_err(|e| Error::Format(e.to_string()))?;
        Region::new(meta.region.lower.clone(), meta.region.upper.clone())?;
        let d = meta.region.dimension();
        let mut points = Vec::new();
        for (n, line) in lines.enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let before = points.len();
            for tok in line.split_whitespace() {
                points.push(tok.parse::<f64>().map_err(|e| Error::Format(format!("line {}: {e}", n + 3)))?);
            }
            if points.len() - before != d {
                return Err(Error::Format(format!("line {}: expected {d} coordinates", n + 3)));
            }
        }
        Self::assemble(meta, points).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }

    /// Number of points in the half-open box `Π [a_i, a_i + side)`.
    pub fn count_in_cube(&self, corner: &[f64], side: f64) -> usize {
        self.iter().filter(|p| in_cube(p, corner, side)).count()
    }
}

fn in_cube(p: &[f64], corner: &[f64], side: f64) -> bool {
    p.iter().zip(corner).all(|(x, a)| *x >= *a && *x < *a + side)
}

/// `r` i.i.d. uniform points on `C_R`.
pub fn iid_uniform_cube(bandwidth: f64, d: usize, r: usize, seed: u64) -> Result<PointSet> {
    if r == 0 {
        return invalid("point count must be at least 1");
    }
    if d == 0 {
        return invalid("dimension must be positive");
    }
    let region = Region::centered_cube(bandwidth, d)?;
    let mut rng = rng::stream(seed, 0);
    let mut points = Vec::with_capacity(r * d);
    for _ in 0..r {
        region.uniform_point(&mut rng, &mut points);
    }
    Ok(PointSet {
        dimension: d,
        points,
        meta: PointMeta { generator: Generator::IidUniformCube { bandwidth, count: r }, region, seed },
    })
}

/// Exactly `r` independent uniform points in each unit cube of the region.
pub fn uniform_per_cube(region: &Region, r: usize, seed: u64) -> Result<PointSet> {
    let cubes = region.unit_cubes()?;
    let d = region.dimension();
    let mut rng = rng::stream(seed, 0);
    let mut points = Vec::with_capacity(cubes.len() * r * d);
    for k in &cubes {
        for _ in 0..r {
            for &ki in k {
                points.push(ki as f64 + rng.gen::<f64>());
            }
        }
    }
    Ok(PointSet {
        dimension: d,
        points,
        meta: PointMeta { generator: Generator::UniformPerCube { per_cube: r }, region: region.clone(), seed },
    })
}

fn poisson_count<R: Rng>(mean: f64, rng: &mut R) -> Result<usize> {
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|e| Error::InvalidArgument(format!("Poisson mean {mean}: {e}")))?;
    Ok(dist.sample(rng) as usize)
}

/// Homogeneous Poisson process of intensity `rho` on the region.
pub fn poisson_homogeneous(region: &Region, rho: f64, seed: u64) -> Result<PointSet> {
    if !(rho.is_finite() && rho >= 0.0) {
        return invalid(format!("intensity must be nonnegative, got {rho}"));
    }
    let mut rng = rng::stream(seed, 0);
    let n = poisson_count(rho * region.volume(), &mut rng)?;
    let mut points = Vec::with_capacity(n * region.dimension());
    for _ in 0..n {
        region.uniform_point(&mut rng, &mut points);
    }
    Ok(PointSet {
        dimension: region.dimension(),
        points,
        meta: PointMeta {
            generator: Generator::PoissonHomogeneous { intensity: rho },
            region: region.clone(),
            seed,
        },
    })
}

/// Inhomogeneous Poisson process by thinning at `intensity_max`.
pub fn poisson_inhomogeneous(region: &Region, model: IntensityModel, intensity_max: f64, seed: u64) -> Result<PointSet> {
    let generator = Generator::PoissonInhomogeneous { intensity: model, intensity_max };
    thin(region, |x| model.value(x), intensity_max, seed, generator)
}

/// Inhomogeneous Poisson process for an arbitrary intensity function.
pub fn poisson_inhomogeneous_fn(
    region: &Region,
    intensity: impl Fn(&[f64]) -> f64,
    intensity_max: f64,
    seed: u64,
    description: &str,
) -> Result<PointSet> {
    let generator = Generator::PoissonCustom { description: description.to_string(), intensity_max };
    thin(region, intensity, intensity_max, seed, generator)
}

fn thin(
    region: &Region,
    intensity: impl Fn(&[f64]) -> f64,
    intensity_max: f64,
    seed: u64,
    generator: Generator,
) -> Result<PointSet> {
    if !(intensity_max.is_finite() && intensity_max >= 0.0) {
        return invalid(format!("intensity_max must be nonnegative, got {intensity_max}"));
    }
    probe_intensity(region, &intensity, intensity_max)?;
    let d = region.dimension();
    let mut rng = rng::stream(seed, 0);
    let n = poisson_count(intensity_max * region.volume(), &mut rng)?;
    let mut points = Vec::new();
    let mut candidate = Vec::with_capacity(d);
    for _ in 0..n {
        candidate.clear();
        region.uniform_point(&mut rng, &mut candidate);
        let keep: f64 = rng.gen();
        if keep * intensity_max < intensity(&candidate) {
            points.extend_from_slice(&candidate);
        }
    }
    Ok(PointSet { dimension: d, points, meta: PointMeta { generator, region: region.clone(), seed } })
}

fn probe_intensity(region: &Region, intensity: &impl Fn(&[f64]) -> f64, max: f64) -> Result<()> {
    let d = region.dimension();
    let per_axis = if d <= 3 { PROBE_POINTS_PER_AXIS } else { 5 };
    let total = per_axis.pow(d as u32);
    let mut p = vec![0.0; d];
    for idx in 0..total {
        let mut rest = idx;
        for i in 0..d {
            let t = (rest % per_axis) as f64 / (per_axis - 1) as f64;
            rest /= per_axis;
            p[i] = region.lower[i] + t * (region.upper[i] - region.lower[i]);
        }
        let v = intensity(&p);
        if !(v >= 0.0) || v > max * (1.0 + PROBE_TOLERANCE) {
            return invalid(format!("intensity {v} at {p:?} violates 0 <= intensity <= {max}"));
        }
    }
    Ok(())
}

/// Finite-window surrogate of the lower Beurling density at one window side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowDensity {
    pub side: f64,
    /// `min count / side^d` over window placements.
    pub min_density: f64,
    pub placements: usize,
}

/// Deterministic diagnostics of a point set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityReport {
    pub dimension: usize,
    pub point_count: usize,
    pub grid_step: f64,
    pub region_min_side: f64,
    /// One entry per window side that fits in the region.
    pub windows: Vec<WindowDensity>,
    /// Side of the largest empty closed cube with a grid-anchored corner.
    pub max_hole: f64,
    /// Largest count in a half-open unit cube anchored at a point or grid node.
    pub max_unit_count: usize,
    /// `None` with fewer than two points.
    pub min_separation: Option<f64>,
}

fn grid_axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| lo + k as f64 * step).filter(|v| *v <= hi).collect()
}

fn grid_corners(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for axis in axes {
        out = out.into_iter().flat_map(|prefix| axis.iter().map(move |v| [prefix.clone(), vec![*v]].concat())).collect();
    }
    out
}

/// Window densities, largest hole, crowding and separation.
pub fn density_diagnostics(set: &PointSet, window_sides: &[f64], grid_step: f64) -> Result<DensityReport> {
    if set.is_empty() {
        return invalid("density diagnostics need a nonempty point set");
    }
    if !(grid_step > 0.0) {
        return invalid(format!("grid step must be positive, got {grid_step}"));
    }
    let region = set.region();
    let d = set.dimension();

    let mut windows = Vec::new();
    for &side in window_sides {
        if !(side > 0.0) {
            return invalid(format!("window side must be positive, got {side}"));
        }
        if side > region.min_side() + 1e-12 {
            continue;
        }
        let axes: Vec<Vec<f64>> =
            region.lower.iter().zip(&region.upper).map(|(a, b)| grid_axis(*a, (b - side).max(*a), grid_step)).collect();
        let corners = grid_corners(&axes);
        let min_count = corners.par_iter().map(|c| set.count_in_cube(c, side)).min().unwrap_or(0);
        windows.push(WindowDensity {
            side,
            min_density: min_count as f64 / side.powi(d as i32),
            placements: corners.len(),
        });
    }

    let axes: Vec<Vec<f64>> = region.lower.iter().zip(&region.upper).map(|(a, b)| grid_axis(*a, *b, grid_step)).collect();
    let corners = grid_corners(&axes);
    let max_hole = corners
        .par_iter()
        .map(|a| {
            let room = a.iter().zip(&region.upper).map(|(x, u)| u - x).fold(f64::INFINITY, f64::min);
            set.iter()
                .filter(|p| p.iter().zip(a).all(|(x, ai)| x >= ai))
                .map(|p| p.iter().zip(a).map(|(x, ai)| x - ai).fold(0.0, f64::max))
                .fold(room, f64::min)
        })
        .reduce(|| 0.0, f64::max);

    let max_unit_count = set
        .iter()
        .map(|p| p.to_vec())
        .collect::<Vec<_>>()
        .par_iter()
        .chain(corners.par_iter())
        .map(|c| set.count_in_cube(c, 1.0))
        .max()
        .unwrap_or(0);

    Ok(DensityReport {
        dimension: d,
        point_count: set.len(),
        grid_step,
        region_min_side: region.min_side(),
        windows,
        max_hole,
        max_unit_count,
        min_separation: min_separation(set),
    })
}

/// Minimum pairwise Euclidean distance by a sweep along the first axis.
pub fn min_separation(set: &PointSet) -> Option<f64> {
    if set.len() < 2 {
        return None;
    }
    let mut order: Vec<&[f64]> = set.iter().collect();
    order.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let mut best = f64::INFINITY;
    for i in 0..order.len() {
        for j in i + 1..order.len() {
            if order[j][0] - order[i][0] >= best {
                break;
            }
            let dist = order[i].iter().zip(order[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            best = best.min(dist);
        }
    }
    Some(best)
}

/// Finite-window reading of the necessary and sufficient conditions for stable sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HoleVerdict {
    /// Minimum density at the largest window is at least 1.
    pub necessary_density_met: bool,
    /// The largest empty cube is smaller than the largest window.
    pub bounded_holes: bool,
    /// Some unit cube is empty.
    pub unit_hole_present: bool,
    pub bounded_counts: bool,
    pub max_unit_count: usize,
    /// d = 1 only: density above 1 and positive separation.
    pub beurling_sufficient: Option<bool>,
    /// Always true: every flag is read off finite windows.
    pub finite_window_heuristic: bool,
}

pub fn classify_prop_hole(report: &DensityReport) -> HoleVerdict {
    let largest = report.windows.iter().max_by(|a, b| a.side.total_cmp(&b.side));
    let density = largest.map_or(0.0, |w| w.min_density);
    let largest_side = largest.map_or(report.region_min_side, |w| w.side);
    let separated = report.min_separation.is_none_or(|s| s > 0.0);
    HoleVerdict {
        necessary_density_met: density >= 1.0 - 1e-12,
        bounded_holes: report.max_hole < largest_side,
        unit_hole_present: report.max_hole >= 1.0,
        bounded_counts: report.max_unit_count < usize::MAX,
        max_unit_count: report.max_unit_count,
        beurling_sufficient: (report.dimension == 1).then_some(density > 1.0 + 1e-12 && separated),
        finite_window_heuristic: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lattice(lo: f64, hi: f64, spacing: f64) -> PointSet {
        let n = ((hi - lo) / spacing).round() as usize;
        let pts = (0..=n).map(|k| lo + k as f64 * spacing).collect();
        PointSet::from_points(Region::new(vec![lo], vec![hi]).unwrap(), pts).unwrap()
    }

    #[test]
    fn iid_cube_basics() {
        let one = iid_uniform_cube(2.0, 1, 1, 3).unwrap();
        assert_eq!(one.len(), 1);
        assert!((-1.0..=1.0).contains(&one.point(0)[0]));
        let big = iid_uniform_cube(2.0, 1, 100_000, 11).unwrap();
        let mean = big.coordinates().iter().sum::<f64>() / 1e5;
        assert!(mean.abs() < 3.0 * (2.0 / 12f64.sqrt()) / 1e5f64.sqrt());
        assert_eq!(iid_uniform_cube(3.0, 2, 50, 9).unwrap(), iid_uniform_cube(3.0, 2, 50, 9).unwrap());
        assert_ne!(iid_uniform_cube(3.0, 2, 50, 9).unwrap(), iid_uniform_cube(3.0, 2, 50, 10).unwrap());
        assert!(iid_uniform_cube(3.0, 2, 0, 9).is_err());
    }

    #[test]
    fn per_cube_occupancy() {
        let region = Region::new(vec![0.0], vec![2.0]).unwrap();
        let set = uniform_per_cube(&region, 3, 1).unwrap();
        assert_eq!(set.len(), 6);
        assert_eq!(set.count_in_cube(&[0.0], 1.0), 3);
        assert_eq!(set.count_in_cube(&[1.0], 1.0), 3);

        let region = Region::new(vec![-2.0, 0.0], vec![1.0, 2.0]).unwrap();
        let set = uniform_per_cube(&region, 4, 2).unwrap();
        for k in region.unit_cubes().unwrap() {
            let corner: Vec<f64> = k.iter().map(|v| *v as f64).collect();
            assert_eq!(set.count_in_cube(&corner, 1.0), 4);
        }
        assert!(uniform_per_cube(&Region::new(vec![0.5], vec![2.0]).unwrap(), 1, 0).is_err());

        // uniform moments of the fractional parts
        let region = Region::new(vec![0.0], vec![10.0]).unwrap();
        let set = uniform_per_cube(&region, 1000, 5).unwrap();
        let u: Vec<f64> = set.coordinates().iter().map(|x| x.fract()).collect();
        let n = u.len() as f64;
        let m1 = u.iter().sum::<f64>() / n;
        let m2 = u.iter().map(|x| x * x).sum::<f64>() / n;
        assert!((m1 - 0.5).abs() < 3.0 * (1.0f64 / 12.0).sqrt() / n.sqrt());
        assert!((m2 - 1.0 / 3.0).abs() < 3.0 * (4.0f64 / 45.0).sqrt() / n.sqrt());
    }

    #[test]
    fn poisson_mean_count() {
        let region = Region::new(vec![0.0], vec![10.0]).unwrap();
        let trials = 10_000;
        let total: usize = (0..trials).map(|t| poisson_homogeneous(&region, 2.0, t).unwrap().len()).sum();
        let mean = total as f64 / trials as f64;
        assert!((mean - 20.0).abs() < 3.0 * (20.0 / trials as f64).sqrt(), "{mean}");
        let empty = (0..1000).filter(|t| poisson_homogeneous(&region, 1e-9, *t).unwrap().is_empty()).count();
        assert!(empty >= 999);
    }

    #[test]
    fn poisson_disjoint_counts_uncorrelated() {
        let region = Region::new(vec![0.0, 0.0], vec![4.0, 2.0]).unwrap();
        let trials = 10_000;
        let (mut sa, mut sb, mut sab) = (0.0, 0.0, 0.0);
        for t in 0..trials {
            let set = poisson_homogeneous(&region, 1.5, t).unwrap();
            let a = set.count_in_cube(&[0.0, 0.0], 2.0) as f64;
            let b = set.count_in_cube(&[2.0, 0.0], 2.0) as f64;
            sa += a;
            sb += b;
            sab += a * b;
        }
        let n = trials as f64;
        let cov = sab / n - sa / n * (sb / n);
        // Var(ab) = E a² E b² − (E a E b)² for independent a, b ~ Poisson(6)
        let se = ((42.0f64 * 42.0 - 36.0 * 36.0) / n).sqrt();
        assert!(cov.abs() < 3.0 * se, "cov={cov} se={se}");
    }

    #[test]
    fn thinning_matches_integrated_intensity() {
        let region = Region::new(vec![0.0], vec![20.0]).unwrap();
        let model = IntensityModel::LogGrowth { c0: 0.5 };
        let max = model.sup_over(&region);
        // ∫_0^20 0.5(1+log⁺x) dx = 0.5(20 + (20 ln 20 − 20 + 1))
        let expected = 0.5 * (20.0 + 20.0 * 20f64.ln() - 19.0);
        let trials = 4000;
        let counts: Vec<f64> =
            (0..trials).map(|t| poisson_inhomogeneous(&region, model, max, t).unwrap().len() as f64).collect();
        let mean = counts.iter().sum::<f64>() / trials as f64;
        assert!((mean - expected).abs() < 3.0 * (expected / trials as f64).sqrt(), "{mean} vs {expected}");
        assert!(poisson_inhomogeneous(&region, model, 0.5 * max, 1).is_err());
        assert!(poisson_inhomogeneous_fn(&region, |x| -x[0], 1.0, 1, "negative").is_err());
    }

    #[test]
    fn log_growth_fills_far_cubes() {
        let alpha = 1.0;
        let d = 1;
        let c0 = (d as f64 + 1.0) / alpha;
        let region = Region::new(vec![-200.0], vec![200.0]).unwrap();
        let model = IntensityModel::LogGrowth { c0 };
        let r0 = 50.0;
        let mut full = 0;
        for t in 0..50 {
            let set = poisson_inhomogeneous(&region, model, model.sup_over(&region), t).unwrap();
            let ok = (-200..200)
                .map(|k| k as f64 * alpha)
                .filter(|a| a.abs() >= r0 && (a + alpha).abs() >= r0)
                .all(|a| set.count_in_cube(&[a], alpha) > 0);
            full += ok as usize;
        }
        assert!(full > 25, "{full}");
    }

    #[test]
    fn regeneration_and_file_round_trip() {
        let region = Region::new(vec![-1.0, 0.0], vec![2.0, 1.5]).unwrap();
        let model = IntensityModel::SubLogGrowth { c0: 3.0, exponent: 0.5 };
        let sets = vec![
            iid_uniform_cube(4.0, 2, 37, 5).unwrap(),
            uniform_per_cube(&Region::new(vec![0.0, 0.0], vec![2.0, 3.0]).unwrap(), 2, 8).unwrap(),
            poisson_homogeneous(&region, 4.0, 6).unwrap(),
            poisson_inhomogeneous(&region, model, model.sup_over(&region), 7).unwrap(),
        ];
        for set in sets {
            assert_eq!(PointSet::regenerate(set.meta()).unwrap(), set);
            let text = set.to_text().unwrap();
            let back = PointSet::from_text(&text).unwrap();
            assert_eq!(back, set);
        }
        assert!(PointSet::from_text("garbage").is_err());
        let set = iid_uniform_cube(2.0, 1, 3, 1).unwrap();
        let text = set.to_text().unwrap().replace("# prolate-points v1\n", "");
        assert!(PointSet::from_text(&text).is_err());
    }

    #[test]
    fn density_examples() {
        let set = lattice(0.0, 100.0, 1.0);
        let report = density_diagnostics(&set, &[10.0], 0.1).unwrap();
        assert!((report.windows[0].min_density - 1.0).abs() < 0.11);
        let verdict = classify_prop_hole(&report);
        assert!(verdict.necessary_density_met);
        assert_eq!(verdict.beurling_sufficient, Some(false));
        assert!(verdict.bounded_holes);

        let half = lattice(0.0, 100.0, 0.5);
        let verdict = classify_prop_hole(&density_diagnostics(&half, &[10.0], 0.1).unwrap());
        assert_eq!(verdict.beurling_sufficient, Some(true));

        let gap = PointSet::from_points(Region::new(vec![0.0], vec![10.0]).unwrap(), vec![0.0, 10.0]).unwrap();
        let report = density_diagnostics(&gap, &[], 0.05).unwrap();
        assert!((report.max_hole - (10.0 - 0.05)).abs() < 1e-9, "{}", report.max_hole);
        assert!(report.max_hole <= report.region_min_side);
        assert_eq!(report.min_separation, Some(10.0));

        let crowd = PointSet::from_points(Region::new(vec![0.0], vec![1.0]).unwrap(), vec![0.1, 0.2, 0.3]).unwrap();
        assert_eq!(density_diagnostics(&crowd, &[], 0.1).unwrap().max_unit_count, 3);
    }

    #[test]
    fn poisson_draws_have_holes() {
        let region = Region::new(vec![0.0], vec![100.0]).unwrap();
        let mut with_hole = 0;
        for t in 0..40 {
            let set = poisson_homogeneous(&region, 2.0, t).unwrap();
            let verdict = classify_prop_hole(&density_diagnostics(&set, &[10.0], 0.05).unwrap());
            assert!(verdict.bounded_counts && verdict.max_unit_count > 2);
            with_hole += verdict.unit_hole_present as usize;
        }
        assert!(with_hole > 0);
    }

    #[test]
    fn separation_matches_brute_force() {
        let set = iid_uniform_cube(5.0, 2, 300, 4).unwrap();
        let mut brute = f64::INFINITY;
        for i in 0..set.len() {
            for j in 0..i {
                let d: f64 = set.point(i).iter().zip(set.point(j)).map(|(a, b)| (a - b).powi(2)).sum();
                brute = brute.min(d.sqrt());
            }
        }
        assert_eq!(min_separation(&set), Some(brute));
    }
}
