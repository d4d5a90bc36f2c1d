//! Enclosing rectangles of convex polygons.

use super::{polygon::GEOM_TOL, ConvexPolygon, GeometryError, Vec2};
use serde::{Deserialize, Serialize};

/// A centered rectangle approximating a convex set from outside.
///
/// `half_lengths = (long, short)`; `axis` is the unit direction of the long
/// side. `trapping` is the largest `α` such that the box shrunk by `α` about
/// its center lies inside the generating polygon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JohnBox {
    pub center: Vec2,
    pub axis: Vec2,
    pub half_lengths: (f64, f64),
    pub trapping: f64,
}

impl JohnBox {
    pub fn long(&self) -> f64 {
        self.half_lengths.0
    }

    pub fn short(&self) -> f64 {
        self.half_lengths.1
    }

    pub fn eccentricity(&self) -> f64 {
        self.half_lengths.0 / self.half_lengths.1
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half_lengths.0 * self.half_lengths.1
    }

    /// Unit vector of the short side.
    pub fn normal(&self) -> Vec2 {
        Vec2::new(-self.axis.y, self.axis.x)
    }

    /// Coordinates of `p` in the box frame (long, short).
    pub fn local(&self, p: Vec2) -> (f64, f64) {
        let d = p - self.center;
        (d.dot(&self.axis), d.dot(&self.normal()))
    }

    /// The box gauge: `max(|s|/Λ, |t|/λ)`; ≤ 1 inside the box.
    pub fn gauge(&self, p: Vec2) -> f64 {
        let (s, t) = self.local(p);
        (s.abs() / self.half_lengths.0).max(t.abs() / self.half_lengths.1)
    }

    pub fn corners(&self) -> [Vec2; 4] {
        let a = self.axis * self.half_lengths.0;
        let b = self.normal() * self.half_lengths.1;
        let c = self.center;
        [c - a - b, c + a - b, c + a + b, c - a + b]
    }

    pub fn to_polygon(&self) -> ConvexPolygon {
        ConvexPolygon::from_ccw_unchecked(self.corners().to_vec())
    }

    /// Same frame, half-lengths multiplied by `k`.
    pub fn dilated(&self, k: f64) -> JohnBox {
        JohnBox { half_lengths: (self.half_lengths.0 * k, self.half_lengths.1 * k), ..*self }
    }

    /// Smallest dilation factor `K` with every point inside `K·box`.
    pub fn dilation_to_contain<'a>(&self, points: impl IntoIterator<Item = &'a Vec2>) -> f64 {
        points.into_iter().map(|p| self.gauge(*p)).fold(0.0, f64::max)
    }

    /// Length of the chord cut from the box by the line through `p` with direction `dir`.
    pub fn line_chord(&self, p: Vec2, dir: Vec2) -> f64 {
        let dir = dir.normalize();
        let (ps, pt) = self.local(p);
        let ds = dir.dot(&self.axis);
        let dt = dir.dot(&self.normal());
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (x, v, half) in [(ps, ds, self.half_lengths.0), (pt, dt, self.half_lengths.1)] {
            if v.abs() < 1e-300 {
                if x.abs() > half {
                    return 0.0;
                }
                continue;
            }
            let t0 = (-half - x) / v;
            let t1 = (half - x) / v;
            lo = lo.max(t0.min(t1));
            hi = hi.min(t0.max(t1));
        }
        (hi - lo).max(0.0)
    }
}

/// Extents of a point set along `axis` and its normal, measured from `origin`.
fn extents(vertices: &[Vec2], origin: Vec2, axis: Vec2) -> [f64; 4] {
    let normal = Vec2::new(-axis.y, axis.x);
    let mut e = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
    for v in vertices {
        let d = v - origin;
        let s = d.dot(&axis);
        let t = d.dot(&normal);
        e[0] = e[0].min(s);
        e[1] = e[1].max(s);
        e[2] = e[2].min(t);
        e[3] = e[3].max(t);
    }
    e
}

fn canonical_axis(a: Vec2) -> Vec2 {
    if a.x < 0.0 || (a.x == 0.0 && a.y < 0.0) {
        -a
    } else {
        a
    }
}

fn trapping_factor(poly: &ConvexPolygon, center: Vec2, axis: Vec2, half: (f64, f64)) -> f64 {
    let normal = Vec2::new(-axis.y, axis.x);
    [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)]
        .iter()
        .map(|&(s, t)| poly.ray_exit(center, axis * (s * half.0) + normal * (t * half.1)))
        .fold(f64::INFINITY, f64::min)
}

/// Minimal-area enclosing rectangle by rotating calipers.
///
/// One side of the result is collinear with an edge of `poly`.
pub fn min_area_rectangle(poly: &ConvexPolygon) -> Result<JohnBox, GeometryError> {
    let v = poly.vertices();
    let n = v.len();
    let diam = poly.diameter();
    if n < 3 || poly.area() <= 1e3 * GEOM_TOL * diam * diam {
        return Err(GeometryError::Degenerate);
    }
    // Caliper indices: farthest along the edge normal, max and min along the edge.
    let dir = |i: usize| (v[(i + 1) % n] - v[i]).normalize();
    let inward = |e: Vec2| Vec2::new(-e.y, e.x);
    let e0 = dir(0);
    let argmax = |f: &dyn Fn(Vec2) -> f64| (0..n).max_by(|&a, &b| f(v[a]).total_cmp(&f(v[b]))).unwrap();
    let mut far = argmax(&|p| p.dot(&inward(e0)));
    let mut hi = argmax(&|p| p.dot(&e0));
    let mut lo = argmax(&|p| -p.dot(&e0));

    let mut best_area = f64::INFINITY;
    let mut best = (Vec2::zeros(), Vec2::zeros(), [0.0; 4]);
    for i in 0..n {
        let e = dir(i);
        let nrm = inward(e);
        let advance = |mut k: usize, f: &dyn Fn(Vec2) -> f64| {
            for _ in 0..n {
                let next = (k + 1) % n;
                if f(v[next]) >= f(v[k]) {
                    k = next;
                } else {
                    break;
                }
            }
            k
        };
        far = advance(far, &|p| p.dot(&nrm));
        hi = advance(hi, &|p| p.dot(&e));
        lo = advance(lo, &|p| -p.dot(&e));
        let origin = v[i];
        let width = (v[hi] - origin).dot(&e) - (v[lo] - origin).dot(&e);
        let height = (v[far] - origin).dot(&nrm);
        let area = width * height;
        if area < best_area {
            best_area = area;
            best = (
                origin,
                e,
                [(v[lo] - origin).dot(&e), (v[hi] - origin).dot(&e), 0.0, height],
            );
        }
    }
    let (origin, e, ext) = best;
    let nrm = inward(e);
    let center = origin + e * (0.5 * (ext[0] + ext[1])) + nrm * (0.5 * (ext[2] + ext[3]));
    let (hw, hh) = (0.5 * (ext[1] - ext[0]), 0.5 * (ext[3] - ext[2]));
    let (axis, half) = if hw >= hh { (e, (hw, hh)) } else { (nrm, (hh, hw)) };
    let axis = canonical_axis(axis);
    Ok(JohnBox { center, axis, half_lengths: half, trapping: trapping_factor(poly, center, axis, half) })
}

/// Rectangle centered at `center`, oriented like the minimal-area rectangle
/// of `poly`, with the smallest half-lengths that still contain `poly`.
pub fn centered_box(poly: &ConvexPolygon, center: Vec2) -> Result<JohnBox, GeometryError> {
    let mar = min_area_rectangle(poly)?;
    let e = extents(poly.vertices(), center, mar.axis);
    let a = e[0].abs().max(e[1].abs());
    let b = e[2].abs().max(e[3].abs());
    let (axis, half) = if a >= b { (mar.axis, (a, b)) } else { (canonical_axis(mar.normal()), (b, a)) };
    Ok(JohnBox { center, axis, half_lengths: half, trapping: trapping_factor(poly, center, axis, half) })
}
