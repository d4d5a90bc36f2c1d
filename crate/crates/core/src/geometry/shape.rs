//! Analytic descriptors for uniformly convex holes (disks and ellipses).

use super::{ConvexPolygon, Vec2};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

/// Analytic boundary curve of a hole.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum HoleShape {
    Disk { center: [f64; 2], radius: f64 },
    /// `semi_axes = [a, b]` along the rotated x and y axes; `rotation` in radians.
    Ellipse { center: [f64; 2], semi_axes: [f64; 2], rotation: f64 },
}

impl HoleShape {
    pub fn center(&self) -> Vec2 {
        match *self {
            HoleShape::Disk { center, .. } | HoleShape::Ellipse { center, .. } => Vec2::new(center[0], center[1]),
        }
    }

    /// Semi-axes `(a, b)` and rotation angle; a disk has `a = b = r`.
    fn frame(&self) -> (f64, f64, f64) {
        match *self {
            HoleShape::Disk { radius, .. } => (radius, radius, 0.0),
            HoleShape::Ellipse { semi_axes, rotation, .. } => (semi_axes[0], semi_axes[1], rotation),
        }
    }

    /// Largest semi-axis.
    pub fn size(&self) -> f64 {
        let (a, b, _) = self.frame();
        a.max(b)
    }

    pub fn area(&self) -> f64 {
        let (a, b, _) = self.frame();
        std::f64::consts::PI * a * b
    }

    pub fn is_valid(&self) -> bool {
        let (a, b, rot) = self.frame();
        let c = self.center();
        a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite() && rot.is_finite() && c.x.is_finite() && c.y.is_finite()
    }

    fn rotation(&self) -> (f64, f64) {
        let (_, _, rot) = self.frame();
        (rot.cos(), rot.sin())
    }

    fn to_local(&self, x: Vec2) -> Vec2 {
        let (c, s) = self.rotation();
        let d = x - self.center();
        Vec2::new(c * d.x + s * d.y, -s * d.x + c * d.y)
    }

    fn from_local_dir(&self, v: Vec2) -> Vec2 {
        let (c, s) = self.rotation();
        Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
    }

    /// Point of the boundary curve at parameter `theta`.
    pub fn point_at(&self, theta: f64) -> Vec2 {
        let (a, b, _) = self.frame();
        self.center() + self.from_local_dir(Vec2::new(a * theta.cos(), b * theta.sin()))
    }

    /// Derivative of [`point_at`](Self::point_at) in `theta` (counterclockwise).
    pub fn velocity_at(&self, theta: f64) -> Vec2 {
        let (a, b, _) = self.frame();
        self.from_local_dir(Vec2::new(-a * theta.sin(), b * theta.cos()))
    }

    /// Outward unit normal at parameter `theta`.
    pub fn normal_at(&self, theta: f64) -> Vec2 {
        let t = self.velocity_at(theta);
        Vec2::new(t.y, -t.x).normalize()
    }

    /// Curvature at parameter `theta`.
    pub fn curvature_at(&self, theta: f64) -> f64 {
        let (a, b, _) = self.frame();
        let (s, c) = theta.sin_cos();
        a * b / (a * a * s * s + b * b * c * c).powf(1.5)
    }

    /// `(κ_min, κ_max)` over the whole curve.
    pub fn curvature_bounds(&self) -> (f64, f64) {
        let (a, b, _) = self.frame();
        let (big, small) = if a >= b { (a, b) } else { (b, a) };
        (small / (big * big), big / (small * small))
    }

    /// Implicit function `F(x) = |x|_E² - 1`, negative inside.
    pub fn implicit(&self, x: Vec2) -> f64 {
        let (a, b, _) = self.frame();
        let l = self.to_local(x);
        (l.x / a).powi(2) + (l.y / b).powi(2) - 1.0
    }

    /// Outward unit normal from the gradient of the implicit equation.
    pub fn implicit_normal(&self, x: Vec2) -> Vec2 {
        let (a, b, _) = self.frame();
        let l = self.to_local(x);
        self.from_local_dir(Vec2::new(l.x / (a * a), l.y / (b * b))).normalize()
    }

    pub fn contains(&self, x: Vec2) -> bool {
        self.implicit(x) < 0.0
    }

    /// Closest boundary point and its parameter.
    pub fn closest_point(&self, x: Vec2) -> (Vec2, f64) {
        let (a, b, _) = self.frame();
        let l = self.to_local(x);
        let theta = if a == b {
            l.y.atan2(l.x)
        } else {
            let (q0, q1) = closest_on_ellipse(a, b, l.x, l.y);
            (q1 / b).atan2(q0 / a)
        };
        (self.point_at(theta), theta)
    }

    /// Signed distance to the boundary (negative inside).
    pub fn signed_distance(&self, x: Vec2) -> f64 {
        if let HoleShape::Disk { radius, .. } = *self {
            return (x - self.center()).norm() - radius;
        }
        let (p, _) = self.closest_point(x);
        let d = (x - p).norm();
        if self.contains(x) {
            -d
        } else {
            d
        }
    }

    /// Map to the unit-disk frame: `x ↦ diag(1/a, 1/b)·R⁻¹·(x − c)`.
    pub fn to_unit(&self, x: Vec2) -> Vec2 {
        let (a, b, _) = self.frame();
        let l = self.to_local(x);
        Vec2::new(l.x / a, l.y / b)
    }

    pub fn from_unit(&self, u: Vec2) -> Vec2 {
        let (a, b, _) = self.frame();
        self.center() + self.from_local_dir(Vec2::new(a * u.x, b * u.y))
    }

    /// Inscribed polygon with vertices at equally spaced parameters.
    pub fn polygonize(&self, n: usize) -> ConvexPolygon {
        ConvexPolygon::from_ccw_unchecked((0..n).map(|k| self.point_at(TAU * k as f64 / n as f64)).collect())
    }

    /// Apply `x ↦ s·x` to the whole descriptor.
    pub fn scaled(&self, s: f64) -> HoleShape {
        match *self {
            HoleShape::Disk { center, radius } => HoleShape::Disk { center: [center[0] * s, center[1] * s], radius: radius * s },
            HoleShape::Ellipse { center, semi_axes, rotation } => HoleShape::Ellipse {
                center: [center[0] * s, center[1] * s],
                semi_axes: [semi_axes[0] * s, semi_axes[1] * s],
                rotation,
            },
        }
    }
}

/// Closest point on the ellipse `(x/a)² + (y/b)² = 1` to `(y0, y1)`, by
/// reduction to the first quadrant and bisection on the Lagrange multiplier.
fn closest_on_ellipse(a: f64, b: f64, y0: f64, y1: f64) -> (f64, f64) {
    if a < b {
        let (q1, q0) = closest_on_ellipse(b, a, y1, y0);
        return (q0, q1);
    }
    let (s0, s1) = (y0.signum(), y1.signum());
    let (x0, x1) = closest_first_quadrant(a, b, y0.abs(), y1.abs());
    (s0 * x0, s1 * x1)
}

fn closest_first_quadrant(e0: f64, e1: f64, y0: f64, y1: f64) -> (f64, f64) {
    if y1 > 0.0 {
        if y0 > 0.0 {
            let z0 = y0 / e0;
            let z1 = y1 / e1;
            let g = z0 * z0 + z1 * z1 - 1.0;
            if g != 0.0 {
                let r0 = (e0 / e1).powi(2);
                let sbar = robust_root(r0, z0, z1, g);
                (r0 * y0 / (sbar + r0), y1 / (sbar + 1.0))
            } else {
                (y0, y1)
            }
        } else {
            (0.0, e1)
        }
    } else {
        let numer0 = e0 * y0;
        let denom0 = e0 * e0 - e1 * e1;
        if numer0 < denom0 {
            let xde0 = numer0 / denom0;
            (e0 * xde0, e1 * (1.0 - xde0 * xde0).max(0.0).sqrt())
        } else {
            (e0, 0.0)
        }
    }
}

fn robust_root(r0: f64, z0: f64, z1: f64, g: f64) -> f64 {
    let n0 = r0 * z0;
    let mut s0 = z1 - 1.0;
    let mut s1 = if g < 0.0 { 0.0 } else { n0.hypot(z1) - 1.0 };
    let mut s = 0.0;
    for _ in 0..1100 {
        s = 0.5 * (s0 + s1);
        if s == s0 || s == s1 {
            break;
        }
        let ratio0 = n0 / (s + r0);
        let ratio1 = z1 / (s + 1.0);
        let g = ratio0 * ratio0 + ratio1 * ratio1 - 1.0;
        if g > 0.0 {
            s0 = s;
        } else if g < 0.0 {
            s1 = s;
        } else {
            break;
        }
    }
    s
}
