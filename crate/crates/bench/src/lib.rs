//! Fixtures shared by the benchmarks.

use brenier_core::sdot::sample_target;
use brenier_core::{HoledDomain, Vec2};

/// The annulus `0.3 < |x| < 1` rescaled to unit area with `δ = 0.05`.
pub fn annulus() -> HoledDomain {
    HoledDomain::annulus(0.3, 0.05).expect("valid annulus")
}

/// `n` seeds spread over the unit-area disk.
pub fn disk_seeds(n: usize) -> Vec<Vec2> {
    let disk = brenier_core::ConvexPolygon::regular(Vec2::zeros(), 1.0 / std::f64::consts::PI.sqrt(), 256);
    sample_target(&disk, n, 7).expect("sampling")
}

/// Weights of the identity-like initial guess `½|y|²`.
pub fn lifted_weights(seeds: &[Vec2]) -> Vec<f64> {
    seeds.iter().map(|y| 0.5 * y.norm_squared()).collect()
}
