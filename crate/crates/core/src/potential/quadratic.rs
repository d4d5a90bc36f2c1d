use super::{ConvexPotential, PotentialError};
use crate::geometry::Vec2;
use nalgebra::Matrix2;

/// `u(x) = ½ xᵀAx` for a symmetric positive definite `A`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticPotential {
    a: Matrix2<f64>,
}

impl QuadraticPotential {
    pub fn new(a: Matrix2<f64>) -> Result<Self, PotentialError> {
        let sym = (a[(0, 1)] - a[(1, 0)]).abs() <= 1e-14 * a.abs().max();
        if !sym || !(a[(0, 0)] > 0.0) || !(a.determinant() > 0.0) {
            return Err(PotentialError::InvalidParameter("matrix must be symmetric positive definite".into()));
        }
        Ok(Self { a })
    }

    pub fn matrix(&self) -> Matrix2<f64> {
        self.a
    }
}

/// `u = a·x₁²/2 + x₂²/(2a)`, a unit-determinant quadratic.
pub fn quadratic(a: f64) -> Result<QuadraticPotential, PotentialError> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(PotentialError::InvalidParameter(format!("scale must be positive, got {a}")));
    }
    QuadraticPotential::new(Matrix2::new(a, 0.0, 0.0, 1.0 / a))
}

impl ConvexPotential for QuadraticPotential {
    fn eval(&self, x: Vec2) -> f64 {
        0.5 * x.dot(&(self.a * x))
    }

    fn subgradient(&self, x: Vec2) -> Vec2 {
        self.a * x
    }

    fn is_discrete(&self) -> bool {
        false
    }

    fn hessian(&self, _x: Vec2) -> Option<Matrix2<f64>> {
        Some(self.a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_values() {
        let u = quadratic(1.0).unwrap();
        assert_eq!(u.eval(Vec2::new(1.0, 1.0)), 1.0);
        assert_eq!(u.subgradient(Vec2::new(1.0, 1.0)), Vec2::new(1.0, 1.0));
        let u = quadratic(4.0).unwrap();
        assert_eq!(u.eval(Vec2::new(1.0, 0.0)), 2.0);
        assert_eq!(u.subgradient(Vec2::new(1.0, 0.0)), Vec2::new(4.0, 0.0));
        for a in [0.1, 1.0, 7.0, 123.0] {
            assert!((quadratic(a).unwrap().matrix().determinant() - 1.0).abs() < 1e-13);
        }
        assert!(quadratic(0.0).is_err());
        assert!(quadratic(-1.0).is_err());
    }
}
