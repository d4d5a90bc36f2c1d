use super::Section;
use crate::geometry::{HoledDomain, Vec2};
use serde::{Deserialize, Serialize};

/// Points per side of the grid on which `sup d` is taken over a box.
pub const SUP_GRID: usize = 64;

/// Which local regime a boundary section is in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseLabel {
    /// Almost all of the box lies in `Ω₁`.
    InteriorLike,
    /// The boundary crosses the box transversally to its long side.
    Transversal,
    /// The long side follows the boundary.
    ModelGeometry,
    /// Eccentricity is already below the floor.
    Bounded,
}

/// Thresholds of the case classifier. The defaults are stand-ins for
/// constants that the theory only asserts to exist.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierThresholds {
    pub eps1: f64,
    pub eps2: f64,
    #[serde(rename = "M1")]
    pub m1: f64,
    #[serde(rename = "M2")]
    pub m2: f64,
    pub eta_floor: f64,
}

impl Default for ClassifierThresholds {
    fn default() -> Self {
        Self { eps1: 0.05, eps2: 0.1, m1: 4.0, m2: 4.0, eta_floor: 20.0 }
    }
}

impl ClassifierThresholds {
    /// Checks positivity and `M1, M2 > 1`.
    pub fn validate(&self) -> Result<(), String> {
        let all = [self.eps1, self.eps2, self.m1, self.m2, self.eta_floor];
        if !all.iter().all(|v| *v > 0.0 && v.is_finite()) {
            return Err("thresholds must be positive and finite".into());
        }
        if !(self.m1 > 1.0 && self.m2 > 1.0) {
            return Err("M1 and M2 must exceed 1".into());
        }
        Ok(())
    }
}

/// Boundary quantities of one section, measured on its box `x + R_h(x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SectionDiagnostics {
    /// `|box ∩ Ω₁ᶜ| / |box|`.
    pub exterior_fraction: f64,
    /// `l_h / Λ_h`, with `l_h` the chord of the box cut by the tangent line
    /// at the nearest hole boundary point.
    pub tangent_length_ratio: f64,
    pub eccentricity: f64,
    /// `sup d` over a [`SUP_GRID`]² grid on the box.
    pub sup_distance: f64,
    pub lambda: f64,
    pub big_lambda: f64,
    pub case: CaseLabel,
}

impl SectionDiagnostics {
    /// `(Λ² + sup d) / λ`, bounded for sections in the model regime.
    pub fn model_ratio(&self) -> f64 {
        (self.big_lambda * self.big_lambda + self.sup_distance) / self.lambda
    }
}

/// Case label from measured quantities.
///
/// The model regime is recognized first (its conclusion needs no
/// eccentricity assumption), then the eccentricity floor, then the two
/// regimes that let the cascade descend.
pub fn classify(d: &SectionDiagnostics, thr: &ClassifierThresholds) -> CaseLabel {
    let exterior = d.exterior_fraction > thr.eps1;
    if exterior && d.tangent_length_ratio > thr.eps2 {
        CaseLabel::ModelGeometry
    } else if d.eccentricity <= thr.eta_floor {
        CaseLabel::Bounded
    } else if !exterior {
        CaseLabel::InteriorLike
    } else {
        CaseLabel::Transversal
    }
}

/// Measures `sec` against `dom` and classifies it.
pub fn diagnostics(sec: &Section, dom: &HoledDomain, thr: &ClassifierThresholds) -> SectionDiagnostics {
    let bx = &sec.bx;
    let poly = bx.to_polygon();
    let exterior_fraction = (dom.exterior_area(&poly) / poly.area()).clamp(0.0, 1.0);
    let tangent_length_ratio = match dom.project_to_hole(sec.center) {
        Some((i, y)) => {
            let n = dom.holes()[i].shape.implicit_normal(y);
            bx.line_chord(y, Vec2::new(-n.y, n.x)) / bx.long()
        }
        None => 0.0,
    };
    let mut sup_distance = 0.0f64;
    let step = |k: usize| 2.0 * k as f64 / (SUP_GRID - 1) as f64 - 1.0;
    for i in 0..SUP_GRID {
        for j in 0..SUP_GRID {
            let p = bx.center + bx.axis * (step(i) * bx.long()) + bx.normal() * (step(j) * bx.short());
            sup_distance = sup_distance.max(dom.distance_or_zero(p));
        }
    }
    let mut d = SectionDiagnostics {
        exterior_fraction,
        tangent_length_ratio,
        eccentricity: bx.eccentricity(),
        sup_distance,
        lambda: bx.short(),
        big_lambda: bx.long(),
        case: CaseLabel::Bounded,
    };
    d.case = classify(&d, thr);
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DomainSpec, HoleShape, JohnBox, OuterSpec};
    use crate::sections::centered_section;
    use crate::potential::quadratic;

    fn diag(frac: f64, ratio: f64, eta: f64) -> SectionDiagnostics {
        SectionDiagnostics {
            exterior_fraction: frac,
            tangent_length_ratio: ratio,
            eccentricity: eta,
            sup_distance: 0.0,
            lambda: 1.0,
            big_lambda: eta,
            case: CaseLabel::Bounded,
        }
    }

    #[test]
    fn classifier_table() {
        let t = ClassifierThresholds::default();
        assert_eq!(classify(&diag(0.0, 0.5, 50.0), &t), CaseLabel::InteriorLike);
        assert_eq!(classify(&diag(0.4, 0.01, 50.0), &t), CaseLabel::Transversal);
        assert_eq!(classify(&diag(0.4, 0.9, 50.0), &t), CaseLabel::ModelGeometry);
        assert_eq!(classify(&diag(0.4, 0.9, 2.0), &t), CaseLabel::ModelGeometry);
        assert_eq!(classify(&diag(0.0, 0.5, 2.0), &t), CaseLabel::Bounded);
        assert_eq!(classify(&diag(0.4, 0.01, 2.0), &t), CaseLabel::Bounded);
    }

    #[test]
    fn thresholds_validate() {
        assert!(ClassifierThresholds::default().validate().is_ok());
        let bad = ClassifierThresholds { m1: 1.0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    fn big_hole_domain() -> HoledDomain {
        // a hole so large that its boundary is nearly straight at the scale of the box
        let spec = DomainSpec {
            outer: OuterSpec::Polygon { vertices: vec![[-20.0, -20.0], [20.0, -20.0], [20.0, 20.0], [-20.0, 20.0]] },
            holes: vec![HoleShape::Disk { center: [0.0, -5.0], radius: 5.0 }],
            delta: 0.01,
            resolution: Some(20000),
        };
        HoledDomain::new(&spec).unwrap()
    }

    #[test]
    fn halfplane_bite() {
        let dom = big_hole_domain();
        let s = dom.scale();
        let y = Vec2::new(0.0, 0.0);
        let sec = centered_section(&quadratic(0.25).unwrap(), y, 1e-4 * s * s).unwrap();
        let d = diagnostics(&sec, &dom, &ClassifierThresholds::default());
        assert!((d.exterior_fraction - 0.5).abs() < 0.01, "{d:?}");
        assert!((d.tangent_length_ratio - 2.0).abs() < 1e-3, "{d:?}");
        let inner = JohnBox { center: Vec2::new(0.0, 5.0 * s), ..sec.bx };
        let sec2 = crate::sections::Section { bx: inner, center: inner.center, ..sec };
        assert_eq!(diagnostics(&sec2, &dom, &ClassifierThresholds::default()).exterior_fraction, 0.0);
    }
}
