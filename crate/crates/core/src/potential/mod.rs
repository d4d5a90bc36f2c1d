//! Convex potentials: the discrete max-of-affine potential produced by the
//! transport solver and analytic oracles.

mod discrete;
mod model;
mod quadratic;

pub use discrete::DiscretePotential;
pub use model::{model_eval, model_eval_integral, model_hessian, ModelPotential};
pub use quadratic::{quadratic, QuadraticPotential};

use crate::geometry::{ConvexPolygon, GeometryError, Vec2};
use nalgebra::Matrix2;
use std::f64::consts::TAU;

/// Number of rays used to polygonize sublevel sets of analytic potentials.
pub const SUBLEVEL_RAYS: usize = 512;

/// Sublevel sets reaching this far from their anchor are reported unbounded.
pub const SUBLEVEL_REACH: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PotentialError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("radius {rho} lies on the degenerate set |x| <= {r}")]
    DegenerateSet { rho: f64, r: f64 },
    #[error("sublevel set is unbounded")]
    UnboundedSublevel,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// A convex function on the plane.
pub trait ConvexPotential: Send + Sync {
    fn eval(&self, x: Vec2) -> f64;

    /// Some element of the subdifferential at `x`.
    fn subgradient(&self, x: Vec2) -> Vec2;

    fn is_discrete(&self) -> bool;

    /// Pointwise Hessian where it exists (analytic potentials only).
    fn hessian(&self, _x: Vec2) -> Option<Matrix2<f64>> {
        None
    }

    /// The open set `{z : u(z) < value + slope·(z − anchor)}` as a polygon.
    ///
    /// `anchor` must satisfy `u(anchor) < value`. Exact for discrete
    /// potentials; inscribed polygon from ray bisection otherwise.
    fn sublevel_set(&self, anchor: Vec2, slope: Vec2, value: f64) -> Result<ConvexPolygon, PotentialError> {
        ray_sublevel(self, anchor, slope, value, SUBLEVEL_RAYS)
    }
}

impl<P: ConvexPotential + ?Sized> ConvexPotential for &P {
    fn eval(&self, x: Vec2) -> f64 {
        (**self).eval(x)
    }
    fn subgradient(&self, x: Vec2) -> Vec2 {
        (**self).subgradient(x)
    }
    fn is_discrete(&self) -> bool {
        (**self).is_discrete()
    }
    fn hessian(&self, x: Vec2) -> Option<Matrix2<f64>> {
        (**self).hessian(x)
    }
    fn sublevel_set(&self, anchor: Vec2, slope: Vec2, value: f64) -> Result<ConvexPolygon, PotentialError> {
        (**self).sublevel_set(anchor, slope, value)
    }
}

/// Polygonizes a sublevel set by locating the level crossing on `rays`
/// equally spaced rays from `anchor` (bracketing, then Illinois regula falsi).
pub fn ray_sublevel<P: ConvexPotential + ?Sized>(
    u: &P,
    anchor: Vec2,
    slope: Vec2,
    value: f64,
    rays: usize,
) -> Result<ConvexPolygon, PotentialError> {
    let g0 = u.eval(anchor) - value;
    if !(g0 < 0.0) {
        return Err(PotentialError::InvalidParameter("anchor is not inside the sublevel set".into()));
    }
    // A first length scale: for quadratic growth the crossing sits near sqrt(2|g0|).
    let mut guess = (2.0 * g0.abs()).sqrt().max(1e-300);
    let mut vertices = Vec::with_capacity(rays);
    for k in 0..rays {
        let dir = Vec2::new((TAU * k as f64 / rays as f64).cos(), (TAU * k as f64 / rays as f64).sin());
        let g = |t: f64| u.eval(anchor + dir * t) - value - t * slope.dot(&dir);
        let (mut a, mut ga) = (0.0, g0);
        let mut b = guess;
        let mut gb = g(b);
        while gb < 0.0 {
            a = b;
            ga = gb;
            b *= 2.0;
            if b > SUBLEVEL_REACH {
                return Err(PotentialError::UnboundedSublevel);
            }
            gb = g(b);
        }
        let t = illinois(&g, a, ga, b, gb);
        guess = t.max(1e-300);
        vertices.push(anchor + dir * t);
    }
    Ok(ConvexPolygon::hull(&vertices)?)
}

/// Root of `g` in `[a, b]` with `g(a) < 0 ≤ g(b)`.
fn illinois(g: &impl Fn(f64) -> f64, mut a: f64, mut ga: f64, mut b: f64, mut gb: f64) -> f64 {
    let mut side = 0i8;
    for _ in 0..200 {
        if (b - a) <= 1e-14 * b.abs() {
            break;
        }
        let c = (a * gb - b * ga) / (gb - ga);
        let c = if c > a && c < b { c } else { 0.5 * (a + b) };
        let gc = g(c);
        if gc == 0.0 {
            return c;
        }
        if gc < 0.0 {
            a = c;
            ga = gc;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        } else {
            b = c;
            gb = gc;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        }
    }
    if gb.abs() < ga.abs() {
        b
    } else {
        a
    }
}
