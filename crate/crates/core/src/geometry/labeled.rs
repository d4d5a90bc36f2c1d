//! Convex polygons whose edges remember the half-plane that created them.

use super::{polygon::bbox_diagonal, polygon::signed_area, ConvexPolygon, Vec2};

/// The closed half-plane `{x : x·normal ≤ offset}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Halfplane {
    pub normal: Vec2,
    pub offset: f64,
}

impl Halfplane {
    pub fn new(normal: Vec2, offset: f64) -> Self {
        Self { normal, offset }
    }

    /// Outward half-plane of the directed edge `a → b` of a ccw polygon.
    pub fn of_edge(a: Vec2, b: Vec2) -> Self {
        let e = b - a;
        let n = Vec2::new(e.y, -e.x);
        Self { normal: n, offset: n.dot(&a) }
    }

    fn depth(&self, p: Vec2) -> f64 {
        p.dot(&self.normal) - self.offset
    }
}

/// Counterclockwise convex polygon; `labels[i]` tags the edge `v[i] → v[i+1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledPolygon {
    pub vertices: Vec<Vec2>,
    pub labels: Vec<usize>,
}

impl LabeledPolygon {
    /// Every edge of `poly` tagged with `label(edge index)`.
    pub fn from_polygon(poly: &ConvexPolygon, label: impl Fn(usize) -> usize) -> Self {
        Self { vertices: poly.vertices().to_vec(), labels: (0..poly.len()).map(label).collect() }
    }

    /// Axis-aligned square `center ± half`, edges tagged bottom, right, top, left.
    pub fn square(center: Vec2, half: f64, labels: [usize; 4]) -> Self {
        let (c, h) = (center, half);
        Self {
            vertices: vec![
                c + Vec2::new(-h, -h),
                c + Vec2::new(h, -h),
                c + Vec2::new(h, h),
                c + Vec2::new(-h, h),
            ],
            labels: labels.to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    /// Clip by `hp`; new edges get `label`. Returns `false` (and empties the
    /// polygon) when nothing of positive area remains.
    pub fn clip(&mut self, hp: Halfplane, label: usize) -> bool {
        let len = self.vertices.len();
        if len < 3 {
            self.clear();
            return false;
        }
        if self.vertices.iter().all(|&v| hp.depth(v) <= 0.0) {
            return true;
        }
        let depth: Vec<f64> = self.vertices.iter().map(|&v| hp.depth(v)).collect();
        if depth.iter().all(|&d| d >= 0.0) {
            self.clear();
            return false;
        }
        let mut verts = Vec::with_capacity(len + 1);
        let mut labs = Vec::with_capacity(len + 1);
        for i in 0..len {
            let j = (i + 1) % len;
            let (d0, d1) = (depth[i], depth[j]);
            if d0 <= 0.0 {
                verts.push(self.vertices[i]);
                labs.push(if d0 == 0.0 && d1 > 0.0 { label } else { self.labels[i] });
            }
            if (d0 < 0.0 && d1 > 0.0) || (d0 > 0.0 && d1 < 0.0) {
                let t = d0 / (d0 - d1);
                verts.push(self.vertices[i] + (self.vertices[j] - self.vertices[i]) * t);
                labs.push(if d0 < 0.0 { label } else { self.labels[i] });
            }
        }
        self.vertices = verts;
        self.labels = labs;
        self.dedup();
        let ok = self.vertices.len() >= 3 && {
            let diam = bbox_diagonal(&self.vertices);
            self.area() > 1e-15 * diam * diam
        };
        if !ok {
            self.clear();
        }
        ok
    }

    fn clear(&mut self) {
        self.vertices.clear();
        self.labels.clear();
    }

    /// Drops zero-length edges.
    fn dedup(&mut self) {
        if self.vertices.len() < 2 {
            return;
        }
        let tol = 1e-14 * bbox_diagonal(&self.vertices);
        let mut k = 0;
        while k < self.vertices.len() && self.vertices.len() > 1 {
            let next = (k + 1) % self.vertices.len();
            if (self.vertices[next] - self.vertices[k]).norm() <= tol {
                self.vertices.remove(k);
                self.labels.remove(k);
            } else {
                k += 1;
            }
        }
    }

    /// Recomputes each vertex as the intersection of its two supporting
    /// lines, removing the rounding accumulated by repeated clipping.
    pub fn snap(&mut self, line: impl Fn(usize) -> Halfplane) {
        let n = self.vertices.len();
        if n < 3 {
            return;
        }
        let lines: Vec<Halfplane> = self.labels.iter().map(|&l| line(l)).collect();
        for k in 0..n {
            let a = lines[(k + n - 1) % n];
            let b = lines[k];
            let det = a.normal.x * b.normal.y - a.normal.y * b.normal.x;
            let scale = a.normal.norm() * b.normal.norm();
            if det.abs() > 1e-8 * scale {
                let p = Vec2::new(
                    (a.offset * b.normal.y - a.normal.y * b.offset) / det,
                    (a.normal.x * b.offset - a.offset * b.normal.x) / det,
                );
                if p.x.is_finite() && p.y.is_finite() {
                    self.vertices[k] = p;
                }
            }
        }
    }

    pub fn to_polygon(&self) -> Option<ConvexPolygon> {
        (self.vertices.len() >= 3).then(|| ConvexPolygon::from_ccw_unchecked(self.vertices.clone()))
    }

    /// Edges as `(label, a, b)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, Vec2, Vec2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.labels[i], self.vertices[i], self.vertices[(i + 1) % n]))
    }
}
