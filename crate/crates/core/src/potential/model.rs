use super::{ConvexPotential, PotentialError};
use crate::geometry::Vec2;
use crate::quadrature::integrate;
use nalgebra::Matrix2;
use std::f64::consts::PI;

fn check_radius(r: f64) -> Result<(), PotentialError> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(PotentialError::InvalidParameter(format!("inner radius must be positive, got {r}")))
    }
}

/// `√(ρ² − r²)` computed as `√((ρ − r)(ρ + r))`.
fn root(r: f64, rho: f64) -> f64 {
    ((rho - r) * (rho + r)).max(0.0).sqrt()
}

/// Closed-form radial profile `∫₀^ρ √((s² − r²)₊) ds`.
///
/// Close to the hole the two closed-form terms cancel, so a four-term
/// expansion in `d = ρ − r` is used for `d < 1e-3·r`.
pub fn model_eval(r: f64, rho: f64) -> Result<f64, PotentialError> {
    check_radius(r)?;
    if !(rho >= 0.0) {
        return Err(PotentialError::InvalidParameter(format!("radius must be non-negative, got {rho}")));
    }
    Ok(profile(r, rho))
}

fn profile(r: f64, rho: f64) -> f64 {
    if rho <= r {
        return 0.0;
    }
    let d = rho - r;
    if d < 1e-3 * r {
        let q = d / r;
        return (2.0 * r).sqrt()
            * d.powf(1.5)
            * (2.0 / 3.0 + q / 10.0 - q * q / 112.0 + q * q * q / 576.0);
    }
    let s = root(r, rho);
    0.5 * rho * s - 0.5 * r * r * ((d + s) / r).ln_1p()
}

/// The defining integral evaluated by adaptive quadrature.
pub fn model_eval_integral(r: f64, rho: f64) -> Result<f64, PotentialError> {
    check_radius(r)?;
    if !(rho >= 0.0) {
        return Err(PotentialError::InvalidParameter(format!("radius must be non-negative, got {rho}")));
    }
    if rho <= r {
        return Ok(0.0);
    }
    Ok(integrate(|s| root(r, s), r, rho, 1e-14))
}

/// Radial and tangential Hessian eigenvalues `(ρ/√(ρ²−r²), √(ρ²−r²)/ρ)`.
pub fn model_hessian(r: f64, rho: f64) -> Result<(f64, f64), PotentialError> {
    check_radius(r)?;
    if !(rho > r) {
        return Err(PotentialError::DegenerateSet { rho, r });
    }
    let s = root(r, rho);
    Ok((rho / s, s / rho))
}

/// Brenier potential of the annulus `r < |x| < R`, `π(R² − r²) = 1`, onto
/// the centered disk of unit area.
///
/// Outside the annulus it is continued as the smallest convex extension:
/// zero on the hole and radially affine beyond `R`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelPotential {
    r: f64,
    big_r: f64,
}

impl ModelPotential {
    pub fn new(r: f64) -> Result<Self, PotentialError> {
        check_radius(r)?;
        Ok(Self { r, big_r: (r * r + 1.0 / PI).sqrt() })
    }

    pub fn inner_radius(&self) -> f64 {
        self.r
    }

    pub fn outer_radius(&self) -> f64 {
        self.big_r
    }

    /// Radius of the target disk, `1/√π`.
    pub fn target_radius(&self) -> f64 {
        root(self.r, self.big_r)
    }

    /// Radial profile including the affine continuation beyond `R`.
    pub fn radial(&self, rho: f64) -> f64 {
        if rho <= self.big_r {
            profile(self.r, rho)
        } else {
            profile(self.r, self.big_r) + (rho - self.big_r) * self.target_radius()
        }
    }

    /// Operator norm of the Hessian inside the annulus.
    pub fn hessian_norm(&self, x: Vec2) -> Option<f64> {
        model_hessian(self.r, x.norm()).ok().map(|(radial, _)| radial)
    }
}

impl ConvexPotential for ModelPotential {
    fn eval(&self, x: Vec2) -> f64 {
        self.radial(x.norm())
    }

    fn subgradient(&self, x: Vec2) -> Vec2 {
        let rho = x.norm();
        if rho <= self.r {
            return Vec2::zeros();
        }
        x * (root(self.r, rho.min(self.big_r)) / rho)
    }

    fn is_discrete(&self) -> bool {
        false
    }

    fn hessian(&self, x: Vec2) -> Option<Matrix2<f64>> {
        let rho = x.norm();
        if rho < self.r {
            return Some(Matrix2::zeros());
        }
        let (radial, tangential) = if rho <= self.big_r {
            model_hessian(self.r, rho).ok()?
        } else {
            (0.0, self.target_radius() / rho)
        };
        let e = x / rho;
        let p = e * e.transpose();
        Some(p * radial + (Matrix2::identity() - p) * tangential)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_matches_quadrature() {
        assert_eq!(model_eval(0.3, 0.3).unwrap(), 0.0);
        let closed = model_eval(0.3, 0.6).unwrap();
        let quad = model_eval_integral(0.3, 0.6).unwrap();
        assert!((closed - quad).abs() < 1e-10, "{closed} vs {quad}");
        for k in 0..200 {
            let rho = 0.3 + 1e-9 * 1.2f64.powi(k);
            if rho > 0.9 {
                break;
            }
            let (c, q) = (model_eval(0.3, rho).unwrap(), model_eval_integral(0.3, rho).unwrap());
            assert!((c - q).abs() <= 1e-12, "rho={rho}: {c} vs {q}");
        }
        assert!((model_eval(1e-9, 1.0).unwrap() - 0.5).abs() < 1e-12);
        assert!(model_eval(0.0, 1.0).is_err());
    }

    #[test]
    fn hessian_eigenvalues() {
        let (a, b) = model_hessian(0.3, 0.5).unwrap();
        assert!((a * b - 1.0).abs() < 1e-12);
        let d = 1e-4;
        let (radial, _) = model_hessian(0.3, 0.3 + d).unwrap();
        let expected = (0.3 + d) / (2.0 * 0.3 * d).sqrt();
        assert!((radial / expected - 1.0).abs() < 1e-3);
        let (a, b) = model_hessian(1e-9, 1.0).unwrap();
        assert!((a - 1.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
        assert!(matches!(model_hessian(0.3, 0.3), Err(PotentialError::DegenerateSet { .. })));
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let r = 0.3;
        for &rho in &[0.31, 0.35, 0.45, 0.6] {
            let step = 1e-5 * (rho - r);
            let f = |s: f64| model_eval(r, s).unwrap();
            let second = (f(rho + step) - 2.0 * f(rho) + f(rho - step)) / (step * step);
            let first = (f(rho + step) - f(rho - step)) / (2.0 * step);
            let (radial, tangential) = model_hessian(r, rho).unwrap();
            assert!((second / radial - 1.0).abs() < 1e-4, "rho={rho}: {second} vs {radial}");
            assert!((first / rho / tangential - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn gradient_and_extension() {
        let u = ModelPotential::new(0.3).unwrap();
        let big = u.outer_radius();
        assert!((PI * (big * big - 0.09) - 1.0).abs() < 1e-14);
        assert!((u.target_radius() - 1.0 / PI.sqrt()).abs() < 1e-14);
        let x = Vec2::new(0.3, 0.4);
        assert!((u.subgradient(x).norm() - (0.25f64 - 0.09).sqrt()).abs() < 1e-14);
        // the extension is C¹ at R
        let e = 1e-7;
        let slope = (u.radial(big + e) - u.radial(big - e)) / (2.0 * e);
        assert!((slope - u.target_radius()).abs() < 1e-6);
        let hm = u.hessian(Vec2::new(0.5, 0.0)).unwrap();
        assert!((hm.determinant() - 1.0).abs() < 1e-12);
    }
}
