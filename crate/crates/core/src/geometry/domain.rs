//! Convex domains with convex holes removed.

use super::{polygon::segment_distance, ConvexPolygon, GeometryError, HoleShape, Vec2};
use serde::{Deserialize, Serialize};

/// Default number of polygon vertices used to discretize curved boundaries.
pub const DEFAULT_RESOLUTION: usize = 256;

/// Outer boundary of the domain as it appears in a configuration file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum OuterSpec {
    Polygon { vertices: Vec<[f64; 2]> },
    Disk { center: [f64; 2], radius: f64 },
}

/// Domain configuration file schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub outer: OuterSpec,
    #[serde(default)]
    pub holes: Vec<HoleShape>,
    pub delta: f64,
    /// Vertex count for polygonizing curved boundaries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
}

impl DomainSpec {
    /// Annulus with hole radius `r` and outer radius `sqrt(r² + 1/π)`.
    pub fn annulus(r: f64, delta: f64) -> Self {
        DomainSpec {
            outer: OuterSpec::Disk { center: [0.0, 0.0], radius: (r * r + std::f64::consts::FRAC_1_PI).sqrt() },
            holes: vec![HoleShape::Disk { center: [0.0, 0.0], radius: r }],
            delta,
            resolution: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum OuterShape {
    Polygon,
    Disk { center: Vec2, radius: f64 },
}

/// A hole: analytic curve plus its inscribed polygon.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexHole {
    pub shape: HoleShape,
    pub polygon: ConvexPolygon,
    pub curvature_bounds: (f64, f64),
}

impl ConvexHole {
    pub fn new(shape: HoleShape, resolution: usize) -> Self {
        ConvexHole { shape, polygon: shape.polygonize(resolution), curvature_bounds: shape.curvature_bounds() }
    }
}

/// Which part of the boundary a section first touches.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Contact {
    Hole { index: usize, point: Vec2 },
    Outer { point: Vec2 },
}

/// `Ω₁ = Ω₀ \ ∪ holes`, normalized to unit area.
#[derive(Clone, Debug, PartialEq)]
pub struct HoledDomain {
    outer_shape: OuterShape,
    outer: ConvexPolygon,
    holes: Vec<ConvexHole>,
    delta: f64,
    scale: f64,
}

impl HoledDomain {
    /// Builds, rescales to `|Ω₁| = 1`, and validates the configuration.
    pub fn new(spec: &DomainSpec) -> Result<Self, GeometryError> {
        let res = spec.resolution.unwrap_or(DEFAULT_RESOLUTION);
        if res < 8 {
            return Err(GeometryError::InvalidDomain("resolution must be at least 8".into()));
        }
        if !(spec.delta > 0.0 && spec.delta.is_finite()) {
            return Err(GeometryError::InvalidDomain("delta must be positive".into()));
        }
        let (outer_shape, outer) = match &spec.outer {
            OuterSpec::Polygon { vertices } => {
                let p = ConvexPolygon::new(vertices.iter().map(|v| Vec2::new(v[0], v[1])).collect())?;
                (OuterShape::Polygon, p)
            }
            OuterSpec::Disk { center, radius } => {
                if !(*radius > 0.0) {
                    return Err(GeometryError::InvalidDomain("outer radius must be positive".into()));
                }
                let c = Vec2::new(center[0], center[1]);
                (OuterShape::Disk { center: c, radius: *radius }, ConvexPolygon::regular(c, *radius, res))
            }
        };
        for (i, h) in spec.holes.iter().enumerate() {
            if !h.is_valid() {
                return Err(GeometryError::InvalidDomain(format!("holes[{i}]: non-positive or non-finite size")));
            }
        }
        let raw_area = outer.area() - spec.holes.iter().map(|h| h.polygonize(res).area()).sum::<f64>();
        if !(raw_area > 0.0) {
            return Err(GeometryError::InvalidDomain("holes cover the outer domain".into()));
        }
        let s = 1.0 / raw_area.sqrt();
        let outer_shape = match outer_shape {
            OuterShape::Polygon => OuterShape::Polygon,
            OuterShape::Disk { center, radius } => OuterShape::Disk { center: center * s, radius: radius * s },
        };
        let dom = HoledDomain {
            outer_shape,
            outer: outer.scaled_about(Vec2::zeros(), s),
            holes: spec.holes.iter().map(|h| ConvexHole::new(h.scaled(s), res)).collect(),
            delta: spec.delta * s,
            scale: s,
        };
        dom.validate()?;
        Ok(dom)
    }

    /// Convenience constructor for the annulus used by the radial model.
    pub fn annulus(r: f64, delta: f64) -> Result<Self, GeometryError> {
        Self::new(&DomainSpec::annulus(r, delta))
    }

    fn validate(&self) -> Result<(), GeometryError> {
        let tol = 1e-9;
        let d = self.delta;
        let radius_cap = 1.0 / d;
        if self.outer.vertices().iter().any(|v| v.norm() > radius_cap * (1.0 + tol)) {
            return Err(GeometryError::InvalidDomain(format!("outer domain leaves the disk of radius 1/delta = {radius_cap}")));
        }
        for (i, h) in self.holes.iter().enumerate() {
            let (kmin, kmax) = h.curvature_bounds;
            if kmin < d * (1.0 - tol) || kmax > (1.0 + tol) / d {
                return Err(GeometryError::InvalidDomain(format!(
                    "holes[{i}]: curvature range [{kmin}, {kmax}] outside [delta, 1/delta] = [{d}, {}]",
                    1.0 / d
                )));
            }
            let gap = self.hole_outer_gap(&h.shape);
            if gap < d * (1.0 - tol) {
                return Err(GeometryError::InvalidDomain(format!("holes[{i}]: distance {gap} to the outer boundary is below delta")));
            }
            for (j, g) in self.holes.iter().enumerate().skip(i + 1) {
                let sep = polygon_distance(&h.polygon, &g.polygon);
                if sep < d * (1.0 - tol) {
                    return Err(GeometryError::InvalidDomain(format!("holes[{i}] and holes[{j}] are {sep} apart, below delta")));
                }
            }
        }
        Ok(())
    }

    /// Distance from a hole to `∂Ω₀` (negative when the hole pokes out).
    fn hole_outer_gap(&self, shape: &HoleShape) -> f64 {
        let n = 4096;
        (0..n)
            .map(|k| {
                let p = shape.point_at(std::f64::consts::TAU * k as f64 / n as f64);
                if self.outer_contains(p) {
                    self.outer_distance(p)
                } else {
                    -self.outer_distance(p)
                }
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn outer_polygon(&self) -> &ConvexPolygon {
        &self.outer
    }

    pub fn holes(&self) -> &[ConvexHole] {
        &self.holes
    }

    /// Separation parameter after normalization.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Length factor applied by the unit-area normalization.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `|Ω₁|` of the polygonal discretization (1 up to rounding).
    pub fn area(&self) -> f64 {
        self.outer.area() - self.holes.iter().map(|h| h.polygon.area()).sum::<f64>()
    }

    pub fn diameter(&self) -> f64 {
        self.outer.diameter()
    }

    fn outer_contains(&self, x: Vec2) -> bool {
        match self.outer_shape {
            OuterShape::Polygon => self.outer.contains(x),
            OuterShape::Disk { center, radius } => (x - center).norm() <= radius,
        }
    }

    /// Distance to `∂Ω₀`.
    pub fn outer_distance(&self, x: Vec2) -> f64 {
        match self.outer_shape {
            OuterShape::Polygon => self.outer.boundary_distance(x),
            OuterShape::Disk { center, radius } => (radius - (x - center).norm()).abs(),
        }
    }

    /// Whether `x ∈ Ω₁` (analytic boundaries).
    pub fn contains(&self, x: Vec2) -> bool {
        self.outer_contains(x) && !self.holes.iter().any(|h| h.shape.contains(x))
    }

    /// Index and distance of the nearest hole.
    pub fn nearest_hole(&self, x: Vec2) -> Option<(usize, f64)> {
        self.holes
            .iter()
            .enumerate()
            .map(|(i, h)| (i, h.shape.signed_distance(x)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    /// `dist(x, Ω₁ᶜ)` for `x ∈ Ω₁`.
    pub fn distance(&self, x: Vec2) -> Result<f64, GeometryError> {
        if !self.contains(x) {
            return Err(GeometryError::OutsideDomain { x: x.x, y: x.y });
        }
        Ok(self.distance_unchecked(x))
    }

    /// Like [`distance`](Self::distance) but returns 0 outside `Ω₁`.
    pub fn distance_or_zero(&self, x: Vec2) -> f64 {
        if self.contains(x) {
            self.distance_unchecked(x)
        } else {
            0.0
        }
    }

    fn distance_unchecked(&self, x: Vec2) -> f64 {
        let hole = self.nearest_hole(x).map_or(f64::INFINITY, |(_, d)| d);
        self.outer_distance(x).min(hole)
    }

    /// Unit tangent (counterclockwise around the hole) and the normal
    /// pointing into `Ω₁` at a hole boundary point.
    pub fn tangent_data(&self, y: Vec2) -> Result<(Vec2, Vec2), GeometryError> {
        let (idx, dist) = self.nearest_hole(y).ok_or(GeometryError::NotOnBoundary)?;
        let shape = &self.holes[idx].shape;
        if dist.abs() > 1e-8 * shape.size().max(1.0) {
            return Err(GeometryError::NotOnBoundary);
        }
        let normal = shape.implicit_normal(y);
        Ok((Vec2::new(-normal.y, normal.x), normal))
    }

    /// Index of the hole whose boundary passes through `y` (within 1e-8).
    pub fn hole_at(&self, y: Vec2) -> Option<usize> {
        self.nearest_hole(y)
            .filter(|&(i, d)| d.abs() <= 1e-8 * self.holes[i].shape.size().max(1.0))
            .map(|(i, _)| i)
    }

    /// Projection of `x` onto the nearest hole boundary.
    pub fn project_to_hole(&self, x: Vec2) -> Option<(usize, Vec2)> {
        let (i, _) = self.nearest_hole(x)?;
        Some((i, self.holes[i].shape.closest_point(x).0))
    }

    /// `|poly ∩ Ω₁|` using the polygonal discretization.
    pub fn area_in_domain(&self, poly: &ConvexPolygon) -> f64 {
        let Some(inside) = poly.intersection(&self.outer) else {
            return 0.0;
        };
        inside.area() - self.holes.iter().map(|h| inside.intersection_area(&h.polygon)).sum::<f64>()
    }

    /// `|poly ∩ Ω₁ᶜ|`.
    pub fn exterior_area(&self, poly: &ConvexPolygon) -> f64 {
        (poly.area() - self.area_in_domain(poly)).max(0.0)
    }

    /// Parameter intervals `t ∈ [0, 1]` of `a + t(b − a)` lying in `Ω₁`.
    pub fn segment_clip(&self, a: Vec2, b: Vec2) -> Vec<(f64, f64)> {
        let dir = b - a;
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        match self.outer_shape {
            OuterShape::Polygon => {
                for (p, q) in self.outer.edges() {
                    let e = q - p;
                    let n = Vec2::new(e.y, -e.x);
                    let slack = n.dot(&p) - n.dot(&a);
                    let rate = n.dot(&dir);
                    if rate.abs() < 1e-300 {
                        if slack < 0.0 {
                            return Vec::new();
                        }
                    } else if rate > 0.0 {
                        hi = hi.min(slack / rate);
                    } else {
                        lo = lo.max(slack / rate);
                    }
                }
            }
            OuterShape::Disk { center, radius } => match disk_chord(a - center, dir, radius) {
                Some((t0, t1)) => {
                    lo = lo.max(t0);
                    hi = hi.min(t1);
                }
                None => return Vec::new(),
            },
        }
        if lo >= hi {
            return Vec::new();
        }
        let mut cuts: Vec<(f64, f64)> = self
            .holes
            .iter()
            .filter_map(|h| {
                let ua = h.shape.to_unit(a);
                let ub = h.shape.to_unit(b);
                disk_chord(ua, ub - ua, 1.0)
            })
            .collect();
        cuts.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut out = Vec::new();
        let mut start = lo;
        for (c0, c1) in cuts {
            if c1 <= start || c0 >= hi {
                continue;
            }
            if c0 > start {
                out.push((start, c0));
            }
            start = start.max(c1);
        }
        if start < hi {
            out.push((start, hi));
        }
        out
    }

    /// Whether the closed polygon lies in `Ω₁` (exact for disks and ellipses).
    pub fn polygon_inside(&self, poly: &ConvexPolygon) -> bool {
        self.first_contact(poly).is_none()
    }

    /// Boundary contact of a polygon that leaves `Ω₁`, if any.
    ///
    /// Holes are tested in their unit-disk frame where containment reduces to
    /// the distance from the origin to the mapped polygon.
    pub fn first_contact(&self, poly: &ConvexPolygon) -> Option<Contact> {
        if let Some(v) = poly.vertices().iter().find(|v| !self.outer_contains(**v)) {
            return Some(Contact::Outer { point: *v });
        }
        let mut worst: Option<(f64, Contact)> = None;
        for (index, h) in self.holes.iter().enumerate() {
            let mapped: Vec<Vec2> = poly.vertices().iter().map(|v| h.shape.to_unit(*v)).collect();
            let (q, dist, inside) = closest_to_origin(&mapped);
            if inside || dist < 1.0 {
                let dir = if q.norm() > 0.0 { q / q.norm() } else { Vec2::new(1.0, 0.0) };
                let point = h.shape.from_unit(dir);
                let depth = if inside { -dist } else { dist };
                if worst.map_or(true, |(d, _)| depth < d) {
                    worst = Some((depth, Contact::Hole { index, point }));
                }
            }
        }
        worst.map(|(_, c)| c)
    }

    /// Hole boundary point nearest to a polygon, measured in each hole's
    /// unit-disk frame (exact for disks). Returns the hole index and point.
    pub fn nearest_hole_point(&self, poly: &ConvexPolygon) -> Option<(usize, Vec2)> {
        self.holes
            .iter()
            .enumerate()
            .map(|(index, h)| {
                let mapped: Vec<Vec2> = poly.vertices().iter().map(|v| h.shape.to_unit(*v)).collect();
                let (q, dist, _) = closest_to_origin(&mapped);
                let dir = if q.norm() > 0.0 { q / q.norm() } else { Vec2::new(1.0, 0.0) };
                (index, h.shape.from_unit(dir), dist)
            })
            .min_by(|a, b| a.2.total_cmp(&b.2))
            .map(|(i, p, _)| (i, p))
    }
}

/// Chord of the disk `|p + t·d| ≤ r` as a parameter interval.
fn disk_chord(p: Vec2, d: Vec2, r: f64) -> Option<(f64, f64)> {
    let a = d.norm_squared();
    if a == 0.0 {
        return None;
    }
    let b = p.dot(&d);
    let c = p.norm_squared() - r * r;
    let disc = b * b - a * c;
    if disc <= 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    Some(((-b - sq) / a, (-b + sq) / a))
}

/// Closest point of a convex polygon (given by ccw vertices) to the origin.
fn closest_to_origin(v: &[Vec2]) -> (Vec2, f64, bool) {
    let n = v.len();
    let mut inside = true;
    let mut best = (v[0], f64::INFINITY);
    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        let e = b - a;
        if super::cross(e, -a) < 0.0 {
            inside = false;
        }
        let len2 = e.norm_squared();
        let t = if len2 > 0.0 { (-a.dot(&e) / len2).clamp(0.0, 1.0) } else { 0.0 };
        let q = a + e * t;
        let d = q.norm();
        if d < best.1 {
            best = (q, d);
        }
    }
    (best.0, best.1, inside)
}

/// Distance between two disjoint convex polygons (0 when they overlap).
pub fn polygon_distance(p: &ConvexPolygon, q: &ConvexPolygon) -> f64 {
    if p.intersection(q).is_some() {
        return 0.0;
    }
    let one = |a: &ConvexPolygon, b: &ConvexPolygon| {
        a.vertices()
            .iter()
            .flat_map(|v| b.edges().map(move |(s, t)| segment_distance(*v, s, t)))
            .fold(f64::INFINITY, f64::min)
    };
    one(p, q).min(one(q, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn square_with_disk() -> HoledDomain {
        let spec = DomainSpec {
            outer: OuterSpec::Polygon { vertices: vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]] },
            holes: vec![HoleShape::Disk { center: [0.0, 0.0], radius: 0.2 }],
            delta: 0.2,
            resolution: Some(4096),
        };
        HoledDomain::new(&spec).unwrap()
    }

    #[test]
    fn normalized_to_unit_area() {
        let d = square_with_disk();
        assert_relative_eq!(d.area(), 1.0, epsilon = 1e-12);
        let a = HoledDomain::annulus(0.3, 0.25).unwrap();
        assert_relative_eq!(a.area(), 1.0, epsilon = 1e-12);
        assert!((a.scale() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn collinear_distance() {
        let d = square_with_disk();
        let s = d.scale();
        let x = Vec2::new(0.5, 0.0) * s;
        assert_relative_eq!(d.distance(x).unwrap(), 0.3 * s, epsilon = 1e-12);
        assert!(matches!(d.distance(Vec2::zeros()), Err(GeometryError::OutsideDomain { .. })));
    }

    #[test]
    fn annulus_radial_distance() {
        let a = HoledDomain::annulus(0.3, 0.25).unwrap();
        let r = 0.3 * a.scale();
        let big_r = (0.09 + std::f64::consts::FRAC_1_PI).sqrt() * a.scale();
        for &rho in &[r + 1e-6, 0.4, 0.5, big_r - 1e-3] {
            let x = Vec2::new(rho * 0.6, rho * 0.8);
            assert_relative_eq!(a.distance(x).unwrap(), (rho - r).min(big_r - rho), epsilon = 1e-12);
        }
    }

    #[test]
    fn tangent_on_disk_and_ellipse() {
        let a = HoledDomain::annulus(0.3, 0.25).unwrap();
        let r = 0.3 * a.scale();
        let (t, n) = a.tangent_data(Vec2::new(r, 0.0)).unwrap();
        assert_relative_eq!(t, Vec2::new(0.0, 1.0), epsilon = 1e-12);
        assert_relative_eq!(n, Vec2::new(1.0, 0.0), epsilon = 1e-12);
        assert!(matches!(a.tangent_data(Vec2::new(0.45, 0.0)), Err(GeometryError::NotOnBoundary)));

        let spec = DomainSpec {
            outer: OuterSpec::Disk { center: [0.0, 0.0], radius: 1.0 },
            holes: vec![HoleShape::Ellipse { center: [0.0, 0.0], semi_axes: [0.4, 0.3], rotation: 0.0 }],
            delta: 0.2,
            resolution: None,
        };
        let e = HoledDomain::new(&spec).unwrap();
        let ax = 0.4 * e.scale();
        let (t, n) = e.tangent_data(Vec2::new(ax, 0.0)).unwrap();
        assert_relative_eq!(t, Vec2::new(0.0, 1.0), epsilon = 1e-12);
        assert_relative_eq!(n, Vec2::new(1.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_configurations() {
        let mut spec = DomainSpec::annulus(0.3, 0.25);
        spec.holes.push(HoleShape::Disk { center: [0.45, 0.0], radius: 0.05 });
        assert!(matches!(HoledDomain::new(&spec), Err(GeometryError::InvalidDomain(_))));
        // curvature 1/0.05 = 20 exceeds 1/delta
        let mut spec = DomainSpec::annulus(0.05, 0.25);
        spec.delta = 0.25;
        assert!(HoledDomain::new(&spec).is_err());
        let spec = DomainSpec { delta: -1.0, ..DomainSpec::annulus(0.3, 0.25) };
        assert!(HoledDomain::new(&spec).is_err());
    }

    #[test]
    fn segment_clip_around_hole() {
        let a = HoledDomain::annulus(0.3, 0.25).unwrap();
        let r = 0.3 * a.scale();
        let big_r = a.outer_polygon().vertices()[0].norm();
        let parts = a.segment_clip(Vec2::new(-1.0, 0.0), Vec2::new(1.0, 0.0));
        assert_eq!(parts.len(), 2);
        let len: f64 = parts.iter().map(|(s, t)| 2.0 * (t - s)).sum();
        assert_relative_eq!(len, 2.0 * (big_r - r), epsilon = 1e-9);
    }

    #[test]
    fn polygon_containment_is_exact_for_disks() {
        let a = HoledDomain::annulus(0.3, 0.25).unwrap();
        let r = 0.3 * a.scale();
        let near = ConvexPolygon::rectangle(r + 1e-9, -0.01, r + 0.02, 0.01).unwrap();
        assert!(a.polygon_inside(&near));
        let safe = ConvexPolygon::rectangle(r + 1e-3, -0.01, r + 0.02, 0.01).unwrap();
        assert!(a.polygon_inside(&safe));
        let touching = ConvexPolygon::rectangle(r - 1e-4, -0.01, r + 0.02, 0.01).unwrap();
        match a.first_contact(&touching) {
            Some(Contact::Hole { index: 0, point }) => assert_relative_eq!(point, Vec2::new(r, 0.0), epsilon = 1e-12),
            other => panic!("unexpected contact {other:?}"),
        }
    }

    #[test]
    fn area_partition_with_box() {
        let d = square_with_disk();
        let b = ConvexPolygon::rectangle(-0.3, -0.25, 0.4, 0.3).unwrap();
        let inside = d.area_in_domain(&b);
        let outside = d.exterior_area(&b);
        assert_relative_eq!(inside + outside, b.area(), epsilon = 1e-12);
        let hole = d.holes()[0].polygon.area();
        assert_relative_eq!(outside, hole, epsilon = 1e-12);
    }
}
