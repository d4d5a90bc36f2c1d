use super::{
    centered_section, centered_section_from, diagnostics, max_height, CaseLabel, ClassifierThresholds, Section,
    SectionDiagnostics, SectionError,
};
use crate::geometry::{HoledDomain, JohnBox, Vec2};
use crate::potential::ConvexPotential;
use serde::Serialize;

/// Outcome of comparing a tangent section with the boundary-centered one.
#[derive(Clone, Debug, Serialize)]
pub struct EngulfingReport {
    /// Smallest `K ≥ 1` with `S_h(x) ⊂ y + K·R_h(y)`.
    pub k: f64,
    pub tangency: Vec2,
    pub height: f64,
    pub section_box: JohnBox,
    pub boundary_box: JohnBox,
}

/// Measures how far `S_h^u(x)` reaches outside the box of the section of
/// the same height centered at its tangency point `y` on a hole.
///
/// When `x` itself lies on a hole boundary, `y = x`. Otherwise the section
/// must lie in `Ω₁` and `y` is the hole point nearest to it.
pub fn engulfing_check<P: ConvexPotential + ?Sized>(
    u: &P,
    dom: &HoledDomain,
    x: Vec2,
    h: f64,
) -> Result<EngulfingReport, SectionError> {
    let sx = centered_section(u, x, h)?;
    let y = if dom.hole_at(x).is_some() {
        x
    } else {
        if !dom.polygon_inside(&sx.polygon) {
            return Err(SectionError::NotApplicable("the section leaves the domain".into()));
        }
        match dom.nearest_hole_point(&sx.polygon) {
            Some((_, y)) => y,
            None => return Err(SectionError::NotApplicable("the domain has no holes".into())),
        }
    };
    let sy = if y == x { sx.clone() } else { centered_section(u, y, h)? };
    let k = sy.bx.dilation_to_contain(sx.polygon.vertices()).max(1.0);
    Ok(EngulfingReport { k, tangency: y, height: h, section_box: sx.bx, boundary_box: sy.bx })
}

/// One height of a cascade.
#[derive(Clone, Debug, Serialize)]
pub struct CascadeStep {
    pub height: f64,
    pub diagnostics: SectionDiagnostics,
    /// Smallest dilation of the previous box containing this one (1 at the top).
    pub contraction: f64,
}

/// Eccentricities along a descent in height at a hole boundary point.
#[derive(Clone, Debug, Serialize)]
pub struct CascadeTrace {
    pub start: Vec2,
    pub steps: Vec<CascadeStep>,
    /// Height at which the descent stopped: below `h_stop`, or the height of
    /// a `Bounded`/`ModelGeometry` step.
    pub terminal_height: f64,
    /// `InteriorLike` descents.
    pub k: usize,
    /// `Transversal` descents.
    pub l: usize,
    /// `Transversal` descents after which the eccentricity grew.
    pub l_prime: usize,
    /// Product of per-step contractions.
    pub r: f64,
    /// Whether the section at the cap meets at most one hole.
    pub cap_single_hole: bool,
}

impl CascadeTrace {
    pub fn heights(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.height).collect()
    }

    pub fn eccentricities(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.diagnostics.eccentricity).collect()
    }

    pub fn cases(&self) -> Vec<CaseLabel> {
        self.steps.iter().map(|s| s.diagnostics.case).collect()
    }

    /// `η_{h/M₁} / η_h` after every `InteriorLike` step.
    pub fn interior_growth(&self) -> Vec<f64> {
        self.steps
            .windows(2)
            .filter(|w| w[0].diagnostics.case == CaseLabel::InteriorLike)
            .map(|w| w[1].diagnostics.eccentricity / w[0].diagnostics.eccentricity)
            .collect()
    }

    /// `η_last · r^{1/2} / η_first`: the constant in `η_h ≤ C·r^{-1/2}·η_top`.
    pub fn soundness_constant(&self) -> f64 {
        match (self.steps.first(), self.steps.last()) {
            (Some(a), Some(b)) => b.diagnostics.eccentricity * self.r.sqrt() / a.diagnostics.eccentricity,
            _ => f64::NAN,
        }
    }
}

/// Descends from `cap` at the boundary point `y`, dividing the height by
/// `M1` after `InteriorLike` steps and by `M2` after `Transversal` ones,
/// until a `Bounded` or `ModelGeometry` step or a height below `h_stop`.
///
/// A centering failure aborts with the partial trace attached.
pub fn cascade<P: ConvexPotential + ?Sized>(
    u: &P,
    dom: &HoledDomain,
    y: Vec2,
    h_stop: f64,
    cap: f64,
    thr: &ClassifierThresholds,
) -> Result<CascadeTrace, CascadeFailure> {
    let mut trace = CascadeTrace {
        start: y,
        steps: Vec::new(),
        terminal_height: cap,
        k: 0,
        l: 0,
        l_prime: 0,
        r: 1.0,
        cap_single_hole: true,
    };
    let mut h = cap;
    let mut slope = u.subgradient(y);
    let mut prev: Option<Section> = None;
    let mut last_transversal = false;
    while h >= h_stop {
        let sec = match centered_section_from(u, y, h, slope) {
            Ok(s) => s,
            Err(source) => return Err(CascadeFailure { trace: Box::new(trace), source }),
        };
        if prev.is_none() {
            let met = dom.holes().iter().filter(|hole| hole.polygon.intersection(&sec.polygon).is_some()).count();
            trace.cap_single_hole = met <= 1;
        }
        let diag = diagnostics(&sec, dom, thr);
        let contraction = prev.as_ref().map_or(1.0, |p| p.bx.dilation_to_contain(sec.bx.corners().iter()));
        if let Some(p) = &prev {
            if last_transversal && diag.eccentricity > p.bx.eccentricity() {
                trace.l_prime += 1;
            }
        }
        trace.r *= contraction;
        trace.steps.push(CascadeStep { height: h, diagnostics: diag, contraction });
        trace.terminal_height = h;
        slope = sec.slope;
        prev = Some(sec);
        match diag.case {
            CaseLabel::Bounded | CaseLabel::ModelGeometry => return Ok(trace),
            CaseLabel::InteriorLike => {
                trace.k += 1;
                last_transversal = false;
                h /= thr.m1;
            }
            CaseLabel::Transversal => {
                trace.l += 1;
                last_transversal = true;
                h /= thr.m2;
            }
        }
        trace.terminal_height = h;
    }
    Ok(trace)
}

/// A cascade that stopped on an error.
#[derive(Debug, thiserror::Error)]
#[error("cascade aborted after {} steps: {source}", trace.steps.len())]
pub struct CascadeFailure {
    pub trace: Box<CascadeTrace>,
    #[source]
    pub source: SectionError,
}

/// The maximal section at an interior point, read from the boundary.
#[derive(Clone, Debug, Serialize)]
pub struct TangentAudit {
    pub point: Vec2,
    /// `dist(x, Ω₁ᶜ)`.
    pub d: f64,
    /// `h̄(x)`.
    pub height: f64,
    pub lambda: f64,
    pub big_lambda: f64,
    pub eccentricity: f64,
    /// Tangency point when the maximal section touches a hole.
    pub contact: Option<Vec2>,
    /// Diagnostics of the section of height `h̄(x)` centered at the contact.
    pub boundary: Option<SectionDiagnostics>,
    /// Engulfing factor of the maximal section, when it applies.
    pub engulfing_k: Option<f64>,
}

/// Maximal section at `x`, the classification of the section of the same
/// height centered at its tangency point, and the engulfing factor.
pub fn tangent_audit<P: ConvexPotential + ?Sized>(
    u: &P,
    dom: &HoledDomain,
    x: Vec2,
    thr: &ClassifierThresholds,
) -> Result<TangentAudit, SectionError> {
    let m = max_height(u, dom, x)?;
    let (lambda, big_lambda) = m.section.lengths();
    let contact = m.hole_contact();
    let boundary = match contact {
        Some(y) => Some(diagnostics(&centered_section(u, y, m.height)?, dom, thr)),
        None => None,
    };
    let engulfing_k = match contact {
        Some(_) => engulfing_check(u, dom, x, m.height).ok().map(|r| r.k),
        None => None,
    };
    Ok(TangentAudit {
        point: x,
        d: dom.distance_or_zero(x),
        height: m.height,
        lambda,
        big_lambda,
        eccentricity: m.section.eccentricity(),
        contact,
        boundary,
        engulfing_k,
    })
}

/// `η_{h̄(x)}(x)`: eccentricity of the maximal section, the surrogate for
/// `|D²u(x)|` that also applies to discrete potentials.
pub fn hessian_proxy<P: ConvexPotential + ?Sized>(u: &P, dom: &HoledDomain, x: Vec2) -> Result<f64, SectionError> {
    Ok(max_height(u, dom, x)?.section.eccentricity())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DomainSpec, HoleShape, OuterSpec};
    use crate::potential::{quadratic, ModelPotential, QuadraticPotential};
    use nalgebra::Matrix2;

    #[test]
    fn model_audit_is_tangent_and_model_like() {
        let dom = HoledDomain::annulus(0.3, 0.05).unwrap();
        let r = dom.holes()[0].shape.size();
        let u = ModelPotential::new(r).unwrap();
        let a = tangent_audit(&u, &dom, Vec2::new(0.0, r + 0.005), &ClassifierThresholds::default()).unwrap();
        let y = a.contact.unwrap();
        assert!((y - Vec2::new(0.0, r)).norm() < 1e-3, "{y:?}");
        let b = a.boundary.unwrap();
        assert_eq!(b.case, CaseLabel::ModelGeometry);
        assert!(b.model_ratio() < 10.0);
        assert!(a.engulfing_k.unwrap() < 20.0);
    }

    #[test]
    fn boundary_center_engulfs_itself() {
        let dom = HoledDomain::annulus(0.3, 0.05).unwrap();
        let r = dom.holes()[0].shape.size();
        let u = ModelPotential::new(r).unwrap();
        let rep = engulfing_check(&u, &dom, Vec2::new(0.0, r), 1e-3).unwrap();
        assert!((rep.k - 1.0).abs() < 1e-9);
    }

    #[test]
    fn engulfing_is_rotation_invariant() {
        let dom = HoledDomain::annulus(0.3, 0.05).unwrap();
        let r = dom.holes()[0].shape.size();
        let u = ModelPotential::new(r).unwrap();
        let ks: Vec<f64> = [0.0f64, 1.0, 2.5]
            .iter()
            .map(|t| {
                let x = Vec2::new(t.cos(), t.sin()) * (r + 0.01);
                let m = max_height(&u, &dom, x).unwrap();
                engulfing_check(&u, &dom, x, m.height).unwrap().k
            })
            .collect();
        for k in &ks {
            assert!(*k >= 1.0 && *k < 20.0);
            assert!((k - ks[0]).abs() < 0.05 * ks[0], "{ks:?}");
        }
    }

    #[test]
    fn paraboloid_proxy_is_one() {
        let spec = DomainSpec {
            outer: OuterSpec::Polygon { vertices: vec![[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]] },
            holes: vec![],
            delta: 0.1,
            resolution: None,
        };
        let dom = HoledDomain::new(&spec).unwrap();
        let u = QuadraticPotential::new(Matrix2::identity()).unwrap();
        let eta = hessian_proxy(&u, &dom, Vec2::new(0.1, 0.05)).unwrap();
        assert!((eta - 1.0).abs() < 0.01);
        let u9 = quadratic(9.0).unwrap();
        let eta9 = hessian_proxy(&u9, &dom, Vec2::new(0.1, 0.05)).unwrap();
        assert!(eta9 > 4.5 && eta9 < 18.0, "eta = {eta9}");
    }

    #[test]
    fn model_proxy_tracks_hessian() {
        let dom = HoledDomain::annulus(0.3, 0.05).unwrap();
        let r = dom.holes()[0].shape.size();
        let u = ModelPotential::new(r).unwrap();
        for d in [0.001, 0.01, 0.05, 0.1] {
            let rho = r + d;
            let x = Vec2::new(rho, 0.0);
            let eta = hessian_proxy(&u, &dom, x).unwrap();
            let exact = rho / (rho * rho - r * r).sqrt();
            assert!(eta / exact < 5.0 && exact / eta < 5.0, "rho = {rho}: {eta} vs {exact}");
        }
    }

    #[test]
    fn model_cascade_stops_in_model_regime() {
        let dom = HoledDomain::annulus(0.3, 0.05).unwrap();
        let r = dom.holes()[0].shape.size();
        let u = ModelPotential::new(r).unwrap();
        let t = cascade(&u, &dom, Vec2::new(r, 0.0), 1e-6, 0.01, &ClassifierThresholds::default()).unwrap();
        assert_eq!(t.cases(), vec![CaseLabel::ModelGeometry]);
        assert!(t.cap_single_hole);
        assert!(t.steps[0].diagnostics.model_ratio() < 10.0);
    }

    #[test]
    fn interior_cascade_keeps_eccentricity() {
        let spec = DomainSpec {
            outer: OuterSpec::Polygon { vertices: vec![[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]] },
            holes: vec![HoleShape::Disk { center: [0.3, 0.3], radius: 0.05 }],
            delta: 0.05,
            resolution: None,
        };
        let dom = HoledDomain::new(&spec).unwrap();
        let u = quadratic(30.0).unwrap();
        let thr = ClassifierThresholds::default();
        let t = cascade(&u, &dom, Vec2::zeros(), 1e-8, 1e-4, &thr).unwrap();
        assert!(t.steps.len() > 3);
        assert!(t.cases().iter().all(|c| *c == CaseLabel::InteriorLike));
        let etas = t.eccentricities();
        assert!(etas.iter().all(|e| e / etas[0] < 3.0 && etas[0] / e < 3.0));
        assert!(t.heights().windows(2).all(|w| (w[1] - w[0] / thr.m1).abs() < 1e-15));
        assert!(t.terminal_height < 1e-8);
    }
}
