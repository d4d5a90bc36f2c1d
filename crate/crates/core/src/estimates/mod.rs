//! Global quantitative checks on a potential: Hessian fields sampled on
//! grids graded toward the holes, Sobolev-type integrals of the Hessian,
//! the blow-up exponent near the holes and a Hölder seminorm of the
//! gradient.

mod fit;
mod holder;

pub use fit::{blowup_fit, BlowupFit, ENVELOPE_BINS, MIN_BAND_SAMPLES};
pub use holder::{holder_half_seminorm, holder_pairs, holder_seminorm};

use crate::geometry::{ConvexPolygon, HoledDomain, Vec2};
use crate::potential::ConvexPotential;
use crate::sections::{hessian_proxy, SectionError};
use nalgebra::Matrix2;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::TAU;

#[derive(Debug, Clone, thiserror::Error)]
pub enum EstimateError {
    #[error("only {found} samples in the band, at least {required} are needed")]
    UnderSampled { found: usize, required: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("section failure at ({x}, {y}): {source}")]
    Section { x: f64, y: f64, source: SectionError },
}

/// A point of a graded grid with its Hessian surrogate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FieldSample {
    pub point: Vec2,
    /// Distance to `Ω₁ᶜ`.
    pub d: f64,
    pub hessian_proxy: f64,
    /// Quadrature area carried by the sample.
    pub weight: f64,
}

/// Layout of a graded grid.
///
/// Around each hole, the band `d ≤ d_top` is cut into dyadic rings
/// `[d_top·2^{-k-1}, d_top·2^{-k}]` for `k < level`, each split into
/// `sublayers` offset layers sampled at `angular` points along the hole;
/// the remaining band `d < d_top·2^{-level}` is one more layer. The rest
/// of `Ω₁` is covered by squares of side `bulk_spacing`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FieldOptions {
    pub level: usize,
    pub d_top: f64,
    pub sublayers: usize,
    pub angular: usize,
    /// `None` samples only the bands around holes.
    pub bulk_spacing: Option<f64>,
    /// Bulk points closer than this to the outer boundary take the proxy of
    /// the nearest bulk point that is not; their own weight is kept.
    pub min_depth: f64,
}

impl FieldOptions {
    /// Defaults for `dom` at refinement `level`: `d_top = δ/2`, four layers
    /// per octave, 64 points around each hole, bulk squares of side `δ/4`.
    pub fn new(dom: &HoledDomain, level: usize) -> Self {
        let d_top = 0.5 * dom.delta();
        Self { level, d_top, sublayers: 4, angular: 64, bulk_spacing: Some(0.5 * d_top), min_depth: 0.0 }
    }

    /// The level whose deepest dyadic ring reaches `d_min`.
    pub fn level_for_depth(d_top: f64, d_min: f64) -> usize {
        (d_top / d_min).log2().ceil().max(0.0) as usize
    }

    /// Lower end of the deepest dyadic ring.
    pub fn d_min(&self) -> f64 {
        self.d_top * 0.5f64.powi(self.level as i32)
    }
}

/// Smallest boundary distance at which the section surrogate of a solved
/// potential with `n` seeds follows the continuum Hessian.
///
/// Cells next to a hole are thin in the normal direction and long along
/// the hole; tangent sections at distance `d` resolve several cells only
/// once `d·√n` is of order one.
pub fn discretization_depth(n: usize) -> f64 {
    0.5 / (n.max(1) as f64).sqrt()
}

/// Spectral norm of a symmetric 2×2 matrix.
pub fn symmetric_norm(m: &Matrix2<f64>) -> f64 {
    let (a, b, c) = (m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)]);
    let mean = 0.5 * (a + c);
    let rad = (0.5 * (a - c)).hypot(b);
    (mean + rad).abs().max((mean - rad).abs())
}

/// `|D²u(x)|`: the analytic Hessian norm when available, otherwise the
/// eccentricity of the maximal section.
pub fn proxy_at<P: ConvexPotential + ?Sized>(u: &P, dom: &HoledDomain, x: Vec2) -> Result<f64, EstimateError> {
    match u.hessian(x) {
        Some(h) => Ok(symmetric_norm(&h)),
        None => hessian_proxy(u, dom, x).map_err(|source| EstimateError::Section { x: x.x, y: x.y, source }),
    }
}

/// Samples the Hessian surrogate on the graded grid described by `opts`.
///
/// Weights are exact areas for disk holes; bulk weights are rescaled so
/// that all weights add up to `|Ω₁|`. Bands of distinct holes do not
/// overlap as long as `d_top ≤ δ/2`.
pub fn hessian_field<P: ConvexPotential + ?Sized>(
    u: &P,
    dom: &HoledDomain,
    opts: &FieldOptions,
) -> Result<Vec<FieldSample>, EstimateError> {
    Ok(field_series(u, dom, opts, &[opts.level])?.pop().map(|(_, s)| s).unwrap_or_default())
}

/// [`hessian_field`] at each of `levels` (other options from `base`).
///
/// Rings and bulk cells shared between levels are evaluated once.
pub fn field_series<P: ConvexPotential + ?Sized>(
    u: &P,
    dom: &HoledDomain,
    base: &FieldOptions,
    levels: &[usize],
) -> Result<Vec<(usize, Vec<FieldSample>)>, EstimateError> {
    if !(base.d_top > 0.0) || base.sublayers == 0 || base.angular < 3 {
        return Err(EstimateError::InvalidParameter("d_top, sublayers and angular must be positive".into()));
    }
    let deepest = levels.iter().copied().max().unwrap_or(0);
    // every ring down to the deepest level, then one inner band per level
    let mut layers: Vec<(f64, f64, usize)> = Vec::new();
    for k in 0..deepest {
        let hi = base.d_top * 0.5f64.powi(k as i32);
        let lo = 0.5 * hi;
        let step = (hi - lo) / base.sublayers as f64;
        for j in 0..base.sublayers {
            layers.push((lo + step * j as f64, lo + step * (j + 1) as f64, k));
        }
    }
    let rings = layers.len();
    for &l in levels {
        layers.push((0.0, FieldOptions { level: l, ..*base }.d_min(), usize::MAX));
    }
    let band = band_points(dom, base.angular, &layers);
    let bulk = base.bulk_spacing.map(|h| bulk_points(dom, base.d_top, h)).unwrap_or_default();
    let proxies = |pts: &[(Vec2, f64, f64)]| -> Result<Vec<f64>, EstimateError> {
        pts.par_iter().map(|p| proxy_at(u, dom, p.0)).collect::<Vec<_>>().into_iter().collect()
    };
    let band_proxy = proxies(&band)?;
    let bulk_proxy = bulk_proxies(dom, &bulk, base.min_depth, proxies)?;
    let per_layer = dom.holes().len() * base.angular;
    let sample = |(point, d, weight): (Vec2, f64, f64), proxy: f64| FieldSample { point, d, hessian_proxy: proxy, weight };
    let mut out = Vec::with_capacity(levels.len());
    for (n, &l) in levels.iter().enumerate() {
        let inner = rings + n;
        let mut samples: Vec<FieldSample> = Vec::new();
        for (idx, layer) in layers.iter().enumerate() {
            if (idx < rings && layer.2 < l) || idx == inner {
                let range = idx * per_layer..(idx + 1) * per_layer;
                samples.extend(band[range.clone()].iter().zip(&band_proxy[range]).map(|(p, &q)| sample(*p, q)));
            }
        }
        if !bulk.is_empty() {
            let covered = compensated_sum(samples.iter().map(|s| s.weight));
            let raw = compensated_sum(bulk.iter().map(|p| p.2));
            let scale = (dom.area() - covered).max(0.0) / raw;
            samples.extend(bulk.iter().zip(&bulk_proxy).map(|(p, &q)| sample((p.0, p.1, p.2 * scale), q)));
        }
        out.push((l, samples));
    }
    Ok(out)
}

/// Proxies of `bulk`, shallow points borrowing from their nearest deep neighbor.
fn bulk_proxies(
    dom: &HoledDomain,
    bulk: &[(Vec2, f64, f64)],
    min_depth: f64,
    proxies: impl Fn(&[(Vec2, f64, f64)]) -> Result<Vec<f64>, EstimateError>,
) -> Result<Vec<f64>, EstimateError> {
    let deep: Vec<(Vec2, f64, f64)> = bulk.iter().copied().filter(|p| dom.outer_distance(p.0) >= min_depth).collect();
    if deep.len() == bulk.len() {
        return proxies(bulk);
    }
    if deep.is_empty() {
        return Err(EstimateError::InvalidParameter(format!("no bulk point is {min_depth} inside the outer boundary")));
    }
    let deep_proxy = proxies(&deep)?;
    Ok(bulk
        .iter()
        .map(|p| {
            let nearest = deep
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 .0 - p.0).norm_squared().total_cmp(&(b.1 .0 - p.0).norm_squared()))
                .map_or(0, |(i, _)| i);
            deep_proxy[nearest]
        })
        .collect())
}

/// Points and distances of the dyadic rings of `opts` (the inner band
/// below [`FieldOptions::d_min`] excluded), ring by ring.
pub fn ring_points(dom: &HoledDomain, opts: &FieldOptions) -> Vec<(Vec2, f64)> {
    let mut layers = Vec::new();
    for k in 0..opts.level {
        let hi = opts.d_top * 0.5f64.powi(k as i32);
        let step = 0.5 * hi / opts.sublayers.max(1) as f64;
        for j in 0..opts.sublayers {
            layers.push((0.5 * hi + step * j as f64, 0.5 * hi + step * (j + 1) as f64, k));
        }
    }
    band_points(dom, opts.angular.max(3), &layers).into_iter().map(|(x, d, _)| (x, d)).collect()
}

/// Points and strip areas of the offset layers `[lo, hi]` around every
/// hole, layer by layer, `angular` points per hole.
fn band_points(dom: &HoledDomain, angular: usize, layers: &[(f64, f64, usize)]) -> Vec<(Vec2, f64, f64)> {
    let dtheta = TAU / angular as f64;
    let mut out = Vec::with_capacity(layers.len() * dom.holes().len() * angular);
    for &(lo, hi, _) in layers {
        let mid = 0.5 * (lo + hi);
        for hole in dom.holes() {
            let shape = &hole.shape;
            for j in 0..angular {
                let theta = dtheta * (j as f64 + 0.5);
                let speed = shape.velocity_at(theta).norm();
                let kappa = shape.curvature_at(theta);
                // area of the offset strip: ∫∫ (1 + κ s) ds dθ·|γ'|
                let weight = speed * dtheta * ((hi - lo) + 0.5 * kappa * (hi * hi - lo * lo));
                out.push((shape.point_at(theta) + shape.normal_at(theta) * mid, mid, weight));
            }
        }
    }
    out
}

/// Centers of the squares of side `h` whose center lies in `Ω₁` farther
/// than `d_top` from every hole, with their area in `Ω₁`.
fn bulk_points(dom: &HoledDomain, d_top: f64, h: f64) -> Vec<(Vec2, f64, f64)> {
    let (lo, hi) = dom.outer_polygon().bbox();
    let nx = ((hi.x - lo.x) / h).ceil() as usize;
    let ny = ((hi.y - lo.y) / h).ceil() as usize;
    let mut out = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            let (x0, y0) = (lo.x + h * i as f64, lo.y + h * j as f64);
            let c = Vec2::new(x0 + 0.5 * h, y0 + 0.5 * h);
            if !dom.contains(c) || dom.nearest_hole(c).is_some_and(|(_, d)| d <= d_top) {
                continue;
            }
            let Ok(square) = ConvexPolygon::rectangle(x0, y0, x0 + h, y0 + h) else { continue };
            let area = dom.area_in_domain(&square);
            if area > 0.0 {
                out.push((c, dom.distance_or_zero(c), area));
            }
        }
    }
    out
}

/// Mean of `|∇u(x) − ∇v(x)|` over `points`, by subgradients.
pub fn mean_gradient_deviation<P, Q>(u: &P, v: &Q, points: &[Vec2]) -> f64
where
    P: ConvexPotential + ?Sized,
    Q: ConvexPotential + ?Sized,
{
    let dev: Vec<f64> = points.par_iter().map(|&x| (u.subgradient(x) - v.subgradient(x)).norm()).collect();
    compensated_sum(dev) / points.len() as f64
}

/// `Σ proxy^p · weight` at successive grid levels.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormReport {
    pub p: f64,
    /// Value at the finest level.
    pub value: f64,
    pub levels: Vec<usize>,
    pub refinement_series: Vec<f64>,
}

impl NormReport {
    /// Relative change between the last two levels.
    pub fn last_relative_change(&self) -> f64 {
        let s = &self.refinement_series;
        match s.len() {
            0 | 1 => f64::NAN,
            n => (s[n - 1] - s[n - 2]).abs() / s[n - 1].abs(),
        }
    }

    /// Differences between consecutive levels.
    pub fn increments(&self) -> Vec<f64> {
        self.refinement_series.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `Σ proxy^p · weight` over one sample set (the `W^{2,p}` seminorm to the `p`).
pub fn w2p_value(samples: &[FieldSample], p: f64) -> f64 {
    compensated_sum(samples.iter().map(|s| s.hessian_proxy.powf(p) * s.weight))
}

/// [`w2p_value`] evaluated on each sample set, one per grid level.
pub fn w2p_estimate(series: &[(usize, Vec<FieldSample>)], p: f64) -> Result<NormReport, EstimateError> {
    if !(p >= 0.0 && p.is_finite()) {
        return Err(EstimateError::InvalidParameter(format!("exponent must be non-negative, got {p}")));
    }
    if series.is_empty() {
        return Err(EstimateError::InvalidParameter("no grid levels".into()));
    }
    let refinement_series: Vec<f64> = series.iter().map(|(_, s)| w2p_value(s, p)).collect();
    Ok(NormReport {
        p,
        value: *refinement_series.last().unwrap(),
        levels: series.iter().map(|(l, _)| *l).collect(),
        refinement_series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DomainSpec, OuterSpec};
    use crate::potential::{quadratic, ModelPotential};
    use crate::quadrature::integrate;

    fn annulus() -> (HoledDomain, ModelPotential) {
        let dom = HoledDomain::annulus(0.3, 0.05).unwrap();
        let r = dom.holes()[0].shape.size();
        (dom, ModelPotential::new(r).unwrap())
    }

    #[test]
    fn model_proxy_is_radial_eigenvalue() {
        let (dom, u) = annulus();
        let r = u.inner_radius();
        let s = hessian_field(&u, &dom, &FieldOptions::new(&dom, 6)).unwrap();
        for f in s.iter().filter(|f| f.point.norm() < r + 0.02) {
            let rho = f.point.norm();
            let exact = rho / ((rho - r) * (rho + r)).sqrt();
            assert!((f.hessian_proxy / exact - 1.0).abs() < 1e-6, "{f:?}");
        }
    }

    #[test]
    fn weights_sum_to_domain_area() {
        let (dom, u) = annulus();
        let s = hessian_field(&u, &dom, &FieldOptions::new(&dom, 8)).unwrap();
        let r = w2p_estimate(&[(8, s)], 0.0).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12, "{}", r.value);
    }

    #[test]
    fn p_one_and_a_half_matches_radial_quadrature() {
        let (dom, u) = annulus();
        let (r, big) = (u.inner_radius(), u.outer_radius());
        let base = FieldOptions::new(&dom, 0);
        let series = field_series(&u, &dom, &base, &[20, 24, 28]).unwrap();
        let rep = w2p_estimate(&series, 1.5).unwrap();
        // substitute ρ = r + t⁴ to remove the endpoint singularity
        let f = |t: f64| {
            let rho = r + t.powi(4);
            4.0 * TAU * rho * (rho / (rho + r).sqrt()).powf(1.5)
        };
        let exact = integrate(f, 0.0, (big - r).powf(0.25), 1e-10);
        assert!(rep.last_relative_change() < 0.02);
        assert!((rep.value / exact - 1.0).abs() < 0.03, "{} vs {exact}", rep.value);
        assert!(rep.refinement_series.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn constant_hessian_field() {
        let spec = DomainSpec {
            outer: OuterSpec::Polygon { vertices: vec![[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]] },
            holes: vec![crate::geometry::HoleShape::Disk { center: [0.0, 0.0], radius: 0.1 }],
            delta: 0.1,
            resolution: None,
        };
        let dom = HoledDomain::new(&spec).unwrap();
        let u = quadratic(3.0).unwrap();
        let s = hessian_field(&u, &dom, &FieldOptions::new(&dom, 3)).unwrap();
        assert!(s.iter().all(|f| (f.hessian_proxy - 3.0).abs() < 1e-12));
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        assert_eq!(compensated_sum([1.0, 1e100, 1.0, -1e100]), 2.0);
    }

    #[test]
    fn norm_of_symmetric_matrix() {
        let m = Matrix2::new(2.0, 1.0, 1.0, 2.0);
        assert!((symmetric_norm(&m) - 3.0).abs() < 1e-15);
        assert!((symmetric_norm(&(-m)) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn exponent_dichotomy() {
        let (dom, u) = annulus();
        let series = field_series(&u, &dom, &FieldOptions::new(&dom, 0), &[30, 31, 32]).unwrap();
        for p in [1.5, 1.9] {
            assert!(w2p_estimate(&series, p).unwrap().last_relative_change() < 0.02);
        }
        let inc = w2p_estimate(&series, 2.0).unwrap().increments();
        assert!(inc[0] > 0.0 && (inc[1] / inc[0] - 1.0).abs() < 0.2, "{inc:?}");
    }
}
