//! Closed-form test functions for the partial Legendre transform.
//!
//! The flat-boundary fixture is built from its conjugate: for `x₂ > 0`,
//! `w* = Re G(p + i·x₂) + β·p·x₂` with `G(z) = z²/2 + γz⁴/12` is harmonic;
//! for `x₂ < 0` it is continued linearly in `x₂` with the slope it has on
//! the axis. Its primal solves `det D²w = χ_{x₂>0}` and has
//! `|w₁₂|/w₁₁ = |β − 2γ·p·x₂|` above the axis.

use super::{GridFunction, LegendreError};

/// `a·x₁²/2 + x₂²/(2a)`.
pub fn quadratic_primal(a: f64, x1: f64, x2: f64) -> f64 {
    0.5 * (a * x1 * x1 + x2 * x2 / a)
}

/// Partial conjugate of [`quadratic_primal`]: `p²/(2a) − x₂²/(2a)`.
pub fn quadratic_conjugate(a: f64, p: f64, x2: f64) -> f64 {
    0.5 * (p * p - x2 * x2) / a
}

pub fn quadratic_grid(a: f64, half_width: f64, n: usize) -> Result<GridFunction, LegendreError> {
    GridFunction::square(|x1, x2| quadratic_primal(a, x1, x2), half_width, n)
}

/// `w*(p, x₂)` of the flat-boundary fixture.
pub fn flat_boundary_conjugate(gamma: f64, beta: f64, p: f64, x2: f64) -> f64 {
    let t = if x2 > 0.0 { x2 } else { 0.0 };
    let (p2, t2) = (p * p, t * t);
    0.5 * (p2 - t2) + gamma * (p2 * p2 - 6.0 * p2 * t2 + t2 * t2) / 12.0 + beta * p * x2
}

/// `(∂_p w*, ∂_pp w*)`.
fn conjugate_p_derivatives(gamma: f64, beta: f64, p: f64, x2: f64) -> (f64, f64) {
    let t = if x2 > 0.0 { x2 } else { 0.0 };
    (p + gamma * p * (p * p - 3.0 * t * t) / 3.0 + beta * x2, 1.0 + gamma * (p * p - t * t))
}

/// `w(x₁, x₂) = sup_p (p·x₁ − w*(p, x₂))`, by Newton's method on `∂_p w* = x₁`.
pub fn flat_boundary_primal(gamma: f64, beta: f64, x1: f64, x2: f64) -> f64 {
    let mut p = x1 - beta * x2;
    for _ in 0..60 {
        let (d1, d2) = conjugate_p_derivatives(gamma, beta, p, x2);
        let step = (d1 - x1) / d2;
        p -= step;
        if step.abs() <= 1e-16 * (1.0 + p.abs()) {
            break;
        }
    }
    p * x1 - flat_boundary_conjugate(gamma, beta, p, x2)
}

/// Flat-boundary primal on `[−a, a]²`; `γ` must keep `1 + γ(p² − x₂²)`
/// positive on the grid.
pub fn flat_boundary_grid(gamma: f64, beta: f64, half_width: f64, n: usize) -> Result<GridFunction, LegendreError> {
    if n % 2 == 0 {
        return Err(LegendreError::InvalidGrid("an odd node count puts x₂ = 0 on the grid".into()));
    }
    GridFunction::square(|x1, x2| flat_boundary_primal(gamma, beta, x1, x2), half_width, n)
}

/// `((x₁ + K·x₂)² + x₂²)/2`: Monge-Ampère measure 1 with `|w₁₂|/w₁₁ = |K|`.
pub fn sheared_grid(k: f64, half_width: f64, n: usize) -> Result<GridFunction, LegendreError> {
    GridFunction::square(|x1, x2| 0.5 * ((x1 + k * x2).powi(2) + x2 * x2), half_width, n)
}

/// Convex near the origin but `det D²w = 1 + x₂/2 − x₁²/4`.
pub fn perturbed_primal(x1: f64, x2: f64) -> f64 {
    0.5 * x1 * x1 + 0.25 * x1 * x1 * x2 + 0.5 * x2 * x2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primal_inverts_conjugate() {
        for &(x1, x2) in &[(0.1, 0.2), (-0.3, -0.1), (0.4, 0.0), (0.0, 0.45)] {
            let w = flat_boundary_primal(0.2, 0.3, x1, x2);
            // Fenchel-Young equality at the maximizer, inequality elsewhere
            let grid: Vec<f64> = (0..2001).map(|i| -1.0 + 0.001 * i as f64).collect();
            let best = grid.iter().map(|&p| p * x1 - flat_boundary_conjugate(0.2, 0.3, p, x2)).fold(f64::MIN, f64::max);
            assert!(w >= best - 1e-14 && w - best < 1e-6);
        }
    }

    #[test]
    fn conjugate_is_continuous_with_flux() {
        let (g, b) = (0.2, 0.3);
        let e = 1e-6;
        for p in [-0.3, 0.0, 0.2] {
            let up = (flat_boundary_conjugate(g, b, p, e) - flat_boundary_conjugate(g, b, p, 0.0)) / e;
            let down = (flat_boundary_conjugate(g, b, p, 0.0) - flat_boundary_conjugate(g, b, p, -e)) / e;
            assert!((up - down).abs() < 1e-5);
        }
    }
}
