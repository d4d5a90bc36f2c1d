//! Centered sections of convex potentials and the geometry built on them.
//!
//! A centered section of height `h` at `x` is the sublevel set
//! `{u < u(x) + h + b·(z − x)}` whose slope `b` is tuned so that the set's
//! barycenter is `x`. Its enclosing rectangle (re-centered at `x`) gives the
//! lengths `λ ≤ Λ` and the eccentricity `η = Λ/λ`.

mod cascade;
mod diagnostics;

pub use cascade::{
    cascade, engulfing_check, hessian_proxy, tangent_audit, CascadeFailure, CascadeStep, CascadeTrace, EngulfingReport,
    TangentAudit,
};
pub use diagnostics::{classify, diagnostics, CaseLabel, ClassifierThresholds, SectionDiagnostics, SUP_GRID};

use crate::geometry::{centered_box, Contact, ConvexPolygon, GeometryError, HoledDomain, JohnBox, Vec2};
use crate::potential::{ConvexPotential, PotentialError};
use serde::Serialize;

/// Upper end of the height range: sections above it may see several holes.
pub const HEIGHT_CAP: f64 = 0.01;

/// Lower end of the height range searched by [`max_height`].
pub const HEIGHT_FLOOR: f64 = 1e-12;

/// Relative barycenter tolerance for centering.
pub const CENTERING_TOL: f64 = 1e-6;

/// Relative barycenter error still accepted when the iteration stalls; the
/// centering objective is only piecewise smooth for discrete potentials.
pub const CENTERING_ACCEPT: f64 = 1e-4;

/// Iteration budget of the centering fixed point.
pub const CENTERING_MAX_ITER: usize = 200;

/// Bisection steps used by [`max_height`].
pub const MAX_HEIGHT_STEPS: usize = 30;

#[derive(Debug, Clone, thiserror::Error)]
pub enum SectionError {
    #[error("centering did not converge after {iterations} iterations (residual {residual:e})")]
    CenteringFailure { iterations: usize, residual: f64, best: Box<Section> },
    #[error("the section is unbounded")]
    UnboundedSection,
    #[error("height must be positive and finite, got {0}")]
    InvalidHeight(f64),
    #[error("no tangency with a hole: {0}")]
    NotApplicable(String),
    #[error(transparent)]
    Potential(PotentialError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl From<PotentialError> for SectionError {
    fn from(e: PotentialError) -> Self {
        match e {
            PotentialError::UnboundedSublevel => SectionError::UnboundedSection,
            PotentialError::Geometry(g) => SectionError::Geometry(g),
            other => SectionError::Potential(other),
        }
    }
}

/// `S_h^u(x)` together with its defining affine function and John box.
#[derive(Clone, Debug, Serialize)]
pub struct Section {
    pub center: Vec2,
    pub height: f64,
    /// Slope `b` of `L(z) = value + b·(z − center)`.
    pub slope: Vec2,
    /// `L(center) = u(center) + height`.
    pub value: f64,
    #[serde(skip)]
    pub polygon: ConvexPolygon,
    pub bx: JohnBox,
    pub iterations: usize,
    /// Final `|barycenter − center|`.
    pub residual: f64,
}

impl Section {
    pub fn area(&self) -> f64 {
        self.polygon.area()
    }

    pub fn diameter(&self) -> f64 {
        self.polygon.diameter()
    }

    /// `(λ, Λ)`.
    pub fn lengths(&self) -> (f64, f64) {
        (self.bx.short(), self.bx.long())
    }

    pub fn eccentricity(&self) -> f64 {
        self.bx.eccentricity()
    }

    /// `L` evaluated at `z`.
    pub fn affine(&self, z: Vec2) -> f64 {
        self.value + self.slope.dot(&(z - self.center))
    }
}

/// Preconditioner `Σ (2h/ℓ_k²) e_k e_kᵀ` built from the enclosing rectangle:
/// the exact inverse Jacobian of the barycenter map for quadratics.
fn precondition(bx: &JohnBox, h: f64, g: Vec2) -> Vec2 {
    let (s, t) = (g.dot(&bx.axis), g.dot(&bx.normal()));
    bx.axis * (2.0 * h * s / (bx.long() * bx.long())) + bx.normal() * (2.0 * h * t / (bx.short() * bx.short()))
}

struct Trial {
    polygon: ConvexPolygon,
    bx: JohnBox,
    gap: Vec2,
}

impl Trial {
    /// Directional derivative along `d` of `Φ(b) = ∫ (L_b − u)₊`, whose
    /// gradient is `|S_b|·(barycenter − x)`.
    fn slope_along(&self, d: Vec2) -> f64 {
        -self.polygon.area() * self.gap.dot(&d)
    }
}

fn trial<P: ConvexPotential + ?Sized>(u: &P, x: Vec2, value: f64, b: Vec2) -> Result<Trial, SectionError> {
    let polygon = u.sublevel_set(x, b, value)?;
    let bx = crate::geometry::min_area_rectangle(&polygon)?;
    let gap = x - polygon.barycenter();
    Ok(Trial { polygon, bx, gap })
}

/// Trial that maps unbounded or degenerate sublevel sets to `None`
/// (both mean the slope overshot).
fn try_trial<P: ConvexPotential + ?Sized>(u: &P, x: Vec2, value: f64, b: Vec2) -> Result<Option<Trial>, SectionError> {
    match trial(u, x, value, b) {
        Ok(t) => Ok(Some(t)),
        Err(SectionError::UnboundedSection) | Err(SectionError::Geometry(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Computes `S_h^u(x)` starting from the subgradient of `u` at `x`.
pub fn centered_section<P: ConvexPotential + ?Sized>(u: &P, x: Vec2, h: f64) -> Result<Section, SectionError> {
    centered_section_from(u, x, h, u.subgradient(x))
}

/// Like [`centered_section`] with an explicit initial slope (warm start).
///
/// The centering slope minimizes the convex function
/// `Φ(b) = ∫ (u(x) + h + b·(z − x) − u(z))₊ dz`, whose gradient is
/// `|S_b|·(barycenter − x)`. Each iteration moves along the preconditioned
/// direction `M·(x − barycenter)` and picks the step by a safeguarded
/// secant search on the directional derivative, which is monotone.
pub fn centered_section_from<P: ConvexPotential + ?Sized>(
    u: &P,
    x: Vec2,
    h: f64,
    b0: Vec2,
) -> Result<Section, SectionError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(SectionError::InvalidHeight(h));
    }
    let value = u.eval(x) + h;
    let mut b = b0;
    let mut cur = match try_trial(u, x, value, b)? {
        Some(t) => t,
        None => {
            b = u.subgradient(x);
            match try_trial(u, x, value, b)? {
                Some(t) => t,
                None => {
                    b = interior_slope(u, x, value).ok_or(SectionError::UnboundedSection)?;
                    trial(u, x, value, b)?
                }
            }
        }
    };
    let finish = |t: Trial, b: Vec2, iterations: usize| -> Result<Section, SectionError> {
        let bx = centered_box(&t.polygon, x)?;
        Ok(Section { center: x, height: h, slope: b, value, residual: t.gap.norm(), polygon: t.polygon, bx, iterations })
    };
    let stalled = |t: Trial, b: Vec2, iterations: usize| -> Result<Section, SectionError> {
        let residual = t.gap.norm();
        let accept = residual <= CENTERING_ACCEPT * t.polygon.diameter();
        let best = finish(t, b, iterations)?;
        if accept {
            Ok(best)
        } else {
            Err(SectionError::CenteringFailure { iterations, residual, best: Box::new(best) })
        }
    };
    for it in 0..CENTERING_MAX_ITER {
        if cur.gap.norm() <= CENTERING_TOL * cur.polygon.diameter() {
            return finish(cur, b, it);
        }
        let d = precondition(&cur.bx, h, cur.gap);
        let g0 = cur.slope_along(d);
        match line_search(u, x, value, b, d, g0)? {
            Some((tau, t)) => {
                b += d * tau;
                cur = t;
            }
            None => return stalled(cur, b, it),
        }
    }
    stalled(cur, b, CENTERING_MAX_ITER)
}

/// Mean of the subgradients on growing rings around `x`, the first one whose
/// sublevel is bounded. Needed where `∂u(x)` is an extreme slope, e.g. the
/// cell of a hull seed, whose own sublevels are all unbounded.
fn interior_slope<P: ConvexPotential + ?Sized>(u: &P, x: Vec2, value: f64) -> Option<Vec2> {
    (0..10).find_map(|j| {
        let rho = 1e-3 * 4f64.powi(j);
        let mean = (0..8)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / 8.0;
                u.subgradient(x + Vec2::new(t.cos(), t.sin()) * rho)
            })
            .sum::<Vec2>()
            / 8.0;
        matches!(try_trial(u, x, value, mean), Ok(Some(_))).then_some(mean)
    })
}

/// Step along `d` with `|φ'(τ)| ≤ ½|φ'(0)|`, where `φ(τ) = Φ(b + τd)`.
/// Unbounded trials count as `φ' = +∞`.
fn line_search<P: ConvexPotential + ?Sized>(
    u: &P,
    x: Vec2,
    value: f64,
    b: Vec2,
    d: Vec2,
    g0: f64,
) -> Result<Option<(f64, Trial)>, SectionError> {
    if !(g0 < 0.0) {
        return Ok(None);
    }
    let target = 0.5 * g0.abs();
    // bracket: lo has φ' < 0, hi has φ' > 0 (or is unbounded)
    let (mut lo, mut glo) = (0.0, g0);
    let mut hi: Option<(f64, f64)> = None;
    let mut tau = 1.0;
    for _ in 0..60 {
        match try_trial(u, x, value, b + d * tau)? {
            Some(t) => {
                let g = t.slope_along(d);
                if g.abs() <= target {
                    return Ok(Some((tau, t)));
                }
                if g < 0.0 {
                    lo = tau;
                    glo = g;
                } else {
                    hi = Some((tau, g));
                }
            }
            None => hi = Some((tau, f64::INFINITY)),
        }
        tau = match hi {
            None => 4.0 * tau,
            Some((th, gh)) if gh.is_finite() => {
                // secant on φ', kept away from the bracket ends
                let s = lo + (th - lo) * glo / (glo - gh);
                s.clamp(lo + 0.1 * (th - lo), th - 0.1 * (th - lo))
            }
            Some((th, _)) => lo + 0.25 * (th - lo),
        };
        if let Some((th, _)) = hi {
            if th - lo <= 1e-14 * th {
                break;
            }
        }
    }
    Ok(None)
}

/// Result of [`max_height`].
#[derive(Clone, Debug)]
pub struct MaximalSection {
    /// `h̄(x)`: the largest height whose section stays in `Ω₁` (up to bisection accuracy).
    pub height: f64,
    /// The section at `height`.
    pub section: Section,
    /// Where the section just above `height` leaves `Ω₁`; `None` when the cap is reached.
    pub contact: Option<Contact>,
}

impl MaximalSection {
    /// Tangency point on a hole, if the contact is with a hole.
    pub fn hole_contact(&self) -> Option<Vec2> {
        match self.contact {
            Some(Contact::Hole { point, .. }) => Some(point),
            _ => None,
        }
    }
}

/// Largest `h ∈ [HEIGHT_FLOOR, HEIGHT_CAP]` with `S_h^u(x) ⊂ Ω₁`, found by
/// geometric bisection; containment is exact against the analytic boundary.
pub fn max_height<P: ConvexPotential + ?Sized>(u: &P, dom: &HoledDomain, x: Vec2) -> Result<MaximalSection, SectionError> {
    max_height_in(u, dom, x, HEIGHT_FLOOR, HEIGHT_CAP)
}

/// [`max_height`] over a custom height range.
pub fn max_height_in<P: ConvexPotential + ?Sized>(
    u: &P,
    dom: &HoledDomain,
    x: Vec2,
    floor: f64,
    cap: f64,
) -> Result<MaximalSection, SectionError> {
    if !dom.contains(x) {
        return Err(GeometryError::OutsideDomain { x: x.x, y: x.y }.into());
    }
    // an unbounded sublevel certainly leaves the bounded domain through its outer boundary
    let trial = |h: f64, guess: Option<Vec2>| -> Result<Option<(Section, Option<Contact>)>, SectionError> {
        let s = match guess {
            Some(g) => centered_section_from(u, x, h, g),
            None => centered_section(u, x, h),
        };
        match s {
            Ok(s) => {
                let c = dom.first_contact(&s.polygon);
                Ok(Some((s, c)))
            }
            Err(SectionError::UnboundedSection) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let mut contact = None;
    let mut hi_slope = None;
    match trial(cap, None)? {
        Some((top, None)) => return Ok(MaximalSection { height: cap, section: top, contact: None }),
        Some((top, c)) => {
            contact = c;
            hi_slope = Some(top.slope);
        }
        None => {}
    }
    let mut lo = match trial(floor, None)? {
        Some((lo, None)) => lo,
        Some((lo, c)) => return Ok(MaximalSection { height: floor, section: lo, contact: c }),
        None => return Err(SectionError::UnboundedSection),
    };
    let (mut a, mut b) = (floor.ln(), cap.ln());
    for _ in 0..MAX_HEIGHT_STEPS {
        let m = 0.5 * (a + b);
        // warm start between the bracketing slopes
        let guess = hi_slope.map_or(lo.slope, |s| (lo.slope + s) * 0.5);
        match trial(m.exp(), Some(guess))? {
            Some((s, None)) => {
                lo = s;
                a = m;
            }
            Some((s, c)) => {
                contact = c;
                hi_slope = Some(s.slope);
                b = m;
            }
            None => b = m,
        }
    }
    let contact = contact.or_else(|| outer_contact(dom, &lo.polygon));
    Ok(MaximalSection { height: lo.height, section: lo, contact })
}

/// Vertex of `poly` nearest the outer boundary, standing in for the exit
/// point when every section above is unbounded.
fn outer_contact(dom: &HoledDomain, poly: &ConvexPolygon) -> Option<Contact> {
    poly.vertices()
        .iter()
        .min_by(|p, q| dom.outer_distance(**p).total_cmp(&dom.outer_distance(**q)))
        .map(|v| Contact::Outer { point: *v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DomainSpec, OuterSpec};
    use crate::potential::{quadratic, ModelPotential, QuadraticPotential};
    use nalgebra::Matrix2;
    use std::f64::consts::PI;

    fn paraboloid() -> QuadraticPotential {
        QuadraticPotential::new(Matrix2::identity()).unwrap()
    }

    #[test]
    fn hull_seed_cells_still_center() {
        // every sublevel at the corner slope is unbounded
        let seeds: Vec<Vec2> = (0..9).map(|k| Vec2::new((k % 3) as f64 - 1.0, (k / 3) as f64 - 1.0)).collect();
        let weights = seeds.iter().map(|y| 0.5 * y.norm_squared()).collect();
        let u = crate::potential::DiscretePotential::new(seeds, weights).unwrap();
        let x = Vec2::new(1.2, 1.3);
        assert_eq!(u.subgradient(x), Vec2::new(1.0, 1.0));
        let s = centered_section(&u, x, 0.05).unwrap();
        assert!((s.polygon.barycenter() - x).norm() <= 1e-6 * s.polygon.diameter());
    }

    #[test]
    fn paraboloid_sections_are_disks() {
        let u = paraboloid();
        let x = Vec2::new(0.3, -0.7);
        let h = 0.02;
        let s = centered_section(&u, x, h).unwrap();
        // closed form: disk of radius sqrt(2h) about x with slope ∇u(x)
        assert!((s.slope - x).norm() < 1e-12);
        assert!((s.area() - 2.0 * PI * h).abs() < 2.0 * PI * h * 2e-4);
        assert!((s.bx.long() - (2.0 * h).sqrt()).abs() < 1e-3 * (2.0 * h).sqrt());
        assert!((s.affine(x) - (u.eval(x) + h)).abs() <= 1e-10 * h);
    }

    #[test]
    fn quadratic_sections_are_ellipses() {
        let a = 4.0;
        let u = quadratic(a).unwrap();
        let h = 0.01;
        let s = centered_section(&u, Vec2::zeros(), h).unwrap();
        let (lam, big) = s.lengths();
        assert!((lam - (2.0 * h / a).sqrt()).abs() < 1e-3 * lam);
        assert!((big - (2.0 * h * a).sqrt()).abs() < 1e-3 * big);
        assert!((s.bx.axis.y.abs() - 1.0).abs() < 1e-4, "{:?}", s.bx.axis);
        assert!((s.area() - 2.0 * PI * h).abs() < 1e-3 * s.area());
    }

    #[test]
    fn off_center_start_is_recentered() {
        let u = quadratic(9.0).unwrap();
        let x = Vec2::new(0.1, 0.2);
        let s = centered_section_from(&u, x, 1e-3, Vec2::new(0.5, -0.5)).unwrap();
        assert!((s.slope - u.subgradient(x)).norm() < 1e-6);
        assert!(s.residual <= CENTERING_TOL * s.diameter());
    }

    #[test]
    fn model_boundary_section_is_centered() {
        let u = ModelPotential::new(0.3).unwrap();
        let y = Vec2::new(0.3, 0.0);
        for h in [1e-5, 1e-3, 1e-2] {
            let s = centered_section(&u, y, h).unwrap();
            assert!(s.residual <= CENTERING_TOL * s.diameter());
            let bary = s.polygon.barycenter();
            assert!((bary - y).norm() <= 2.0 * CENTERING_TOL * s.diameter());
            // long axis is tangential at the hole
            assert!(s.bx.axis.y.abs() > 0.99, "h = {h}, axis = {:?}", s.bx.axis);
        }
    }

    #[test]
    fn invalid_height() {
        assert!(matches!(centered_section(&paraboloid(), Vec2::zeros(), 0.0), Err(SectionError::InvalidHeight(_))));
    }

    #[test]
    fn paraboloid_in_square_touches_the_side() {
        let spec = DomainSpec {
            outer: OuterSpec::Polygon { vertices: vec![[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]] },
            holes: vec![],
            delta: 0.1,
            resolution: None,
        };
        let dom = HoledDomain::new(&spec).unwrap();
        let u = paraboloid();
        let m = max_height_in(&u, &dom, Vec2::zeros(), 1e-6, 1.0).unwrap();
        // the inscribed disk of radius sqrt(2h) first touches at radius 1/2
        assert!((m.height - 0.125).abs() < 1e-3 * 0.125, "h = {}", m.height);
        assert!(matches!(m.contact, Some(Contact::Outer { .. })));
    }

    #[test]
    fn model_tangency_is_radial() {
        let dom = HoledDomain::annulus(0.3, 0.05).unwrap();
        let r = dom.holes()[0].shape.size();
        let u = ModelPotential::new(r).unwrap();
        let x = Vec2::new(0.33, 0.2).normalize() * 0.33;
        let m = max_height(&u, &dom, x).unwrap();
        let y = m.hole_contact().expect("touches the hole");
        assert!((y - x.normalize() * r).norm() < 1e-6, "contact {y:?}");
        assert!(dom.polygon_inside(&m.section.polygon));
    }

    #[test]
    fn tiny_distance_gives_tiny_height() {
        let dom = HoledDomain::annulus(0.3, 0.05).unwrap();
        let r = dom.holes()[0].shape.size();
        let u = ModelPotential::new(r).unwrap();
        let x = Vec2::new(r + 1e-6, 0.0);
        let m = max_height(&u, &dom, x).unwrap();
        assert!(m.height < 1e-8);
        assert!(dom.polygon_inside(&m.section.polygon));
    }
}
