//! Planar computational geometry: convex polygons, holed domains, distance
//! fields, tangent data and enclosing rectangles.

mod domain;
mod labeled;
mod polygon;
mod rect;
mod shape;

pub use domain::{polygon_distance, Contact, ConvexHole, DomainSpec, HoledDomain, OuterSpec, DEFAULT_RESOLUTION};
pub use labeled::{Halfplane, LabeledPolygon};
pub use polygon::{segment_distance, ConvexPolygon, GEOM_TOL};
pub use rect::{centered_box, min_area_rectangle, JohnBox};
pub use shape::HoleShape;

/// Points and vectors in the plane.
pub type Vec2 = nalgebra::Vector2<f64>;

/// z-component of the cross product.
#[inline]
pub fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
    #[error("degenerate (near-zero area) polygon")]
    Degenerate,
    #[error("point ({x}, {y}) is outside the domain")]
    OutsideDomain { x: f64, y: f64 },
    #[error("point is not on a hole boundary")]
    NotOnBoundary,
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
}
