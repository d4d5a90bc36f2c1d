//! Convex polygons in the plane.

use super::{cross, GeometryError, Vec2};

/// Relative tolerance for geometric predicates.
pub const GEOM_TOL: f64 = 1e-12;

/// A convex polygon with counterclockwise vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Vec2>,
}

impl ConvexPolygon {
    /// Validates and builds a polygon. Clockwise input is reversed; duplicate
    /// consecutive vertices are dropped.
    pub fn new(vertices: Vec<Vec2>) -> Result<Self, GeometryError> {
        let mut vertices = dedup_cyclic(vertices);
        if vertices.len() < 3 {
            return Err(GeometryError::InvalidPolygon(format!(
                "need at least 3 distinct vertices, got {}",
                vertices.len()
            )));
        }
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        let diam = bbox_diagonal(&vertices);
        let area = signed_area(&vertices);
        if !(area > GEOM_TOL * diam * diam) {
            return Err(GeometryError::Degenerate);
        }
        let n = vertices.len();
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            if cross(b - a, c - b) < -GEOM_TOL * diam * diam {
                return Err(GeometryError::InvalidPolygon(format!("reflex vertex at index {}", (i + 1) % n)));
            }
        }
        Ok(Self { vertices })
    }

    /// Wraps vertices already known to be convex and counterclockwise.
    pub(crate) fn from_ccw_unchecked(vertices: Vec<Vec2>) -> Self {
        Self { vertices }
    }

    /// Convex hull of a point cloud (Andrew's monotone chain).
    pub fn hull(points: &[Vec2]) -> Result<Self, GeometryError> {
        let mut pts: Vec<Vec2> = points.to_vec();
        pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        pts.dedup();
        if pts.len() < 3 {
            return Err(GeometryError::Degenerate);
        }
        let mut lower: Vec<Vec2> = Vec::with_capacity(pts.len());
        for &p in &pts {
            while lower.len() >= 2 && cross(lower[lower.len() - 1] - lower[lower.len() - 2], p - lower[lower.len() - 1]) <= 0.0 {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<Vec2> = Vec::with_capacity(pts.len());
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && cross(upper[upper.len() - 1] - upper[upper.len() - 2], p - upper[upper.len() - 1]) <= 0.0 {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        Self::new(lower)
    }

    /// Regular polygon inscribed in a circle, first vertex at angle 0.
    pub fn regular(center: Vec2, radius: f64, n: usize) -> Self {
        let vertices = (0..n)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / n as f64;
                center + radius * Vec2::new(t.cos(), t.sin())
            })
            .collect();
        Self { vertices }
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, GeometryError> {
        Self::new(vec![Vec2::new(x0, y0), Vec2::new(x1, y0), Vec2::new(x1, y1), Vec2::new(x0, y1)])
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Iterator over directed edges `(v_i, v_{i+1})`.
    pub fn edges(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn barycenter(&self) -> Vec2 {
        barycenter_of(&self.vertices)
    }

    /// Exact diameter (largest vertex distance), via antipodal pairs.
    pub fn diameter(&self) -> f64 {
        let v = &self.vertices;
        let n = v.len();
        if n < 2 {
            return 0.0;
        }
        let mut j = 1;
        let mut best: f64 = 0.0;
        for i in 0..n {
            let a = v[i];
            let b = v[(i + 1) % n];
            let e = b - a;
            let mut steps = 0;
            while steps < n && cross(e, v[(j + 1) % n] - a) > cross(e, v[j] - a) {
                j = (j + 1) % n;
                steps += 1;
            }
            best = best.max((v[j] - a).norm()).max((v[j] - b).norm());
        }
        best
    }

    /// Axis-aligned bounding box as `(min, max)`.
    pub fn bbox(&self) -> (Vec2, Vec2) {
        bbox_of(&self.vertices)
    }

    /// Membership with a relative tolerance on the boundary.
    pub fn contains(&self, p: Vec2) -> bool {
        let scale = bbox_diagonal(&self.vertices);
        self.edges().all(|(a, b)| cross(b - a, p - a) >= -GEOM_TOL * scale * (b - a).norm().max(scale))
    }

    /// Strict membership: `p` lies at least `margin` inside every edge.
    pub fn contains_with_margin(&self, p: Vec2, margin: f64) -> bool {
        self.edges().all(|(a, b)| {
            let e = b - a;
            cross(e, p - a) / e.norm() >= margin
        })
    }

    /// Distance from a point to the polygon boundary.
    pub fn boundary_distance(&self, p: Vec2) -> f64 {
        self.edges().map(|(a, b)| segment_distance(p, a, b)).fold(f64::INFINITY, f64::min)
    }

    /// `poly ∩ {x : x·normal ≤ offset}`; `None` when empty.
    pub fn clip_halfplane(&self, normal: Vec2, offset: f64) -> Option<ConvexPolygon> {
        clip_vertices(&self.vertices, normal, offset).map(Self::from_ccw_unchecked)
    }

    /// Intersection of two convex polygons.
    pub fn intersection(&self, other: &ConvexPolygon) -> Option<ConvexPolygon> {
        let (amin, amax) = self.bbox();
        let (bmin, bmax) = other.bbox();
        if amax.x < bmin.x || bmax.x < amin.x || amax.y < bmin.y || bmax.y < amin.y {
            return None;
        }
        let mut current = self.vertices.clone();
        for (a, b) in other.edges() {
            let e = b - a;
            // outward normal of a ccw edge
            let n = Vec2::new(e.y, -e.x);
            current = clip_vertices(&current, n, n.dot(&a))?;
        }
        Some(Self::from_ccw_unchecked(current))
    }

    /// Area of the intersection, zero when disjoint.
    pub fn intersection_area(&self, other: &ConvexPolygon) -> f64 {
        self.intersection(other).map_or(0.0, |p| p.area())
    }

    pub fn translated(&self, t: Vec2) -> Self {
        Self::from_ccw_unchecked(self.vertices.iter().map(|v| v + t).collect())
    }

    /// Uniform scaling about a point.
    pub fn scaled_about(&self, center: Vec2, s: f64) -> Self {
        assert!(s > 0.0, "scale factor must be positive");
        Self::from_ccw_unchecked(self.vertices.iter().map(|v| center + s * (v - center)).collect())
    }

    /// Parameter interval `[t0, t1] ⊂ [0, 1]` of the segment `a + t(b − a)`
    /// lying inside the polygon (Cyrus–Beck).
    pub fn segment_interval(&self, a: Vec2, b: Vec2) -> Option<(f64, f64)> {
        let d = b - a;
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for (p, q) in self.edges() {
            let e = q - p;
            let n = Vec2::new(e.y, -e.x);
            let slack = n.dot(&p) - n.dot(&a);
            let rate = n.dot(&d);
            if rate == 0.0 {
                if slack < 0.0 {
                    return None;
                }
            } else if rate > 0.0 {
                hi = hi.min(slack / rate);
            } else {
                lo = lo.max(slack / rate);
            }
            if lo >= hi {
                return None;
            }
        }
        Some((lo, hi))
    }

    /// Largest `t ≥ 0` with `origin + t·dir` inside the polygon (origin inside).
    pub fn ray_exit(&self, origin: Vec2, dir: Vec2) -> f64 {
        let mut t_max = f64::INFINITY;
        for (a, b) in self.edges() {
            let e = b - a;
            let n = Vec2::new(e.y, -e.x);
            let slack = n.dot(&a) - n.dot(&origin);
            let rate = n.dot(&dir);
            if slack < 0.0 {
                return 0.0;
            }
            if rate > 0.0 {
                t_max = t_max.min(slack / rate);
            }
        }
        t_max
    }
}

/// Sutherland–Hodgman step for a single half-plane `x·n ≤ c`.
pub(crate) fn clip_vertices(vertices: &[Vec2], n: Vec2, c: f64) -> Option<Vec<Vec2>> {
    let len = vertices.len();
    if len < 3 {
        return None;
    }
    let depth: Vec<f64> = vertices.iter().map(|v| v.dot(&n) - c).collect();
    if depth.iter().all(|&d| d <= 0.0) {
        return Some(vertices.to_vec());
    }
    if depth.iter().all(|&d| d >= 0.0) {
        return None;
    }
    let mut out = Vec::with_capacity(len + 1);
    for i in 0..len {
        let j = (i + 1) % len;
        let (d0, d1) = (depth[i], depth[j]);
        if d0 <= 0.0 {
            out.push(vertices[i]);
        }
        if (d0 < 0.0 && d1 > 0.0) || (d0 > 0.0 && d1 < 0.0) {
            let t = d0 / (d0 - d1);
            out.push(vertices[i] + (vertices[j] - vertices[i]) * t);
        }
    }
    let out = dedup_cyclic(out);
    if out.len() < 3 {
        return None;
    }
    let diam = bbox_diagonal(&out);
    if signed_area(&out) <= 1e-15 * diam * diam {
        return None;
    }
    Some(out)
}

pub(crate) fn dedup_cyclic(mut v: Vec<Vec2>) -> Vec<Vec2> {
    if v.len() < 2 {
        return v;
    }
    let tol = GEOM_TOL * bbox_diagonal(&v);
    let mut out: Vec<Vec2> = Vec::with_capacity(v.len());
    for p in v.drain(..) {
        if out.last().map_or(true, |q: &Vec2| (p - q).norm() > tol) {
            out.push(p);
        }
    }
    while out.len() > 1 && (out[0] - out[out.len() - 1]).norm() <= tol {
        out.pop();
    }
    out
}

pub(crate) fn signed_area(v: &[Vec2]) -> f64 {
    if v.len() < 3 {
        return 0.0;
    }
    let o = v[0];
    let mut s = 0.0;
    for i in 1..v.len() - 1 {
        s += cross(v[i] - o, v[i + 1] - o);
    }
    0.5 * s
}

pub(crate) fn barycenter_of(v: &[Vec2]) -> Vec2 {
    let o = v[0];
    let mut acc = Vec2::zeros();
    let mut total = 0.0;
    for i in 1..v.len().saturating_sub(1) {
        let a = v[i] - o;
        let b = v[i + 1] - o;
        let w = cross(a, b);
        acc += w * (a + b) / 3.0;
        total += w;
    }
    if total == 0.0 {
        return o;
    }
    o + acc / total
}

pub(crate) fn bbox_of(v: &[Vec2]) -> (Vec2, Vec2) {
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in v {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

pub(crate) fn bbox_diagonal(v: &[Vec2]) -> f64 {
    let (lo, hi) = bbox_of(v);
    (hi - lo).norm()
}

/// Distance from `p` to the segment `[a, b]`.
pub fn segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let e = b - a;
    let len2 = e.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&e) / len2).clamp(0.0, 1.0);
    (p - (a + e * t)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_square() -> ConvexPolygon {
        ConvexPolygon::rectangle(0.0, 0.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn clip_axis_aligned() {
        let r = unit_square().clip_halfplane(Vec2::new(1.0, 0.0), 0.5).unwrap();
        assert_relative_eq!(r.area(), 0.5, epsilon = 1e-15);
        let (lo, hi) = r.bbox();
        assert_relative_eq!(lo.x, 0.0);
        assert_relative_eq!(hi.x, 0.5);
        assert_relative_eq!(hi.y, 1.0);
    }

    #[test]
    fn clip_non_binding() {
        let sq = unit_square();
        assert_eq!(sq.clip_halfplane(Vec2::new(1.0, 0.0), 2.0).unwrap(), sq);
    }

    #[test]
    fn clip_diagonal() {
        let n = Vec2::new(1.0, 1.0) / 2f64.sqrt();
        // centered unit square: the diagonal cut keeps a triangle of area 1/2
        let centered = ConvexPolygon::rectangle(-0.5, -0.5, 0.5, 0.5).unwrap();
        let tri = centered.clip_halfplane(n, 0.0).unwrap();
        let kept = centered.vertices().iter().filter(|v| v.dot(&n) <= 1e-15).count();
        assert_eq!(kept, 3);
        assert_eq!(tri.len(), 3);
        assert_relative_eq!(tri.area(), 0.5, epsilon = 1e-15);
        for v in tri.vertices() {
            assert!(v.dot(&n) <= 1e-12);
        }
        // on [0,1]^2 the same line only touches the corner (0,0)
        assert!(unit_square().clip_halfplane(n, 0.0).is_none());
        let full = unit_square().clip_halfplane(-n, 0.0).unwrap();
        assert_relative_eq!(full.area(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn hull_and_diameter() {
        let pts = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(1.0, 0.3),
            Vec2::new(2.0, 1.0),
            Vec2::new(0.0, 1.0),
        ];
        let h = ConvexPolygon::hull(&pts).unwrap();
        assert_eq!(h.len(), 4);
        assert_relative_eq!(h.diameter(), 5f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(h.barycenter(), Vec2::new(1.0, 0.5), epsilon = 1e-14);
    }

    #[test]
    fn rejects_reflex_and_degenerate() {
        let reflex = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(1.0, 0.2),
            Vec2::new(2.0, 1.0),
            Vec2::new(0.0, 1.0),
        ];
        assert!(matches!(ConvexPolygon::new(reflex), Err(GeometryError::InvalidPolygon(_))));
        let flat = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0)];
        assert!(ConvexPolygon::new(flat).is_err());
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let cw = vec![Vec2::new(0.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(1.0, 1.0), Vec2::new(1.0, 0.0)];
        let p = ConvexPolygon::new(cw).unwrap();
        assert!(p.area() > 0.0);
    }

    #[test]
    fn intersection_of_offset_squares() {
        let a = unit_square();
        let b = a.translated(Vec2::new(0.5, 0.25));
        assert_relative_eq!(a.intersection_area(&b), 0.375, epsilon = 1e-15);
        let far = a.translated(Vec2::new(3.0, 0.0));
        assert!(a.intersection(&far).is_none());
    }
}
