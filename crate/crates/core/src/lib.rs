//! Semi-discrete optimal transport from planar domains with convex holes,
//! and numerical diagnostics for the regularity of the resulting Brenier
//! potentials.
//!
//! The crate is organized bottom-up:
//!
//! * [`geometry`]: convex polygons, holed domains, enclosing rectangles.
//! * [`potential`]: convex potentials (discrete max-of-affine, radial model, quadratics).
//! * [`sdot`]: the damped Newton solver for Laguerre-cell weights.
//! * [`sections`]: centered sections, maximal heights, the case classifier and the eccentricity cascade.
//! * [`estimates`]: Hessian proxies, Sobolev-norm refinement series, blow-up and Hölder fits.
//! * [`legendre`]: partial Legendre transforms on grids and their structural residuals.

pub mod geometry;
pub mod potential;
pub mod quadrature;
pub mod sdot;
pub mod sections;
pub mod estimates;
pub mod legendre;

pub use geometry::{ConvexPolygon, HoledDomain, JohnBox, Vec2};
pub use potential::{ConvexPotential, DiscretePotential, ModelPotential, QuadraticPotential};
