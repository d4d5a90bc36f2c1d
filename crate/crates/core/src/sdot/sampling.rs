use super::{LaguerreDiagram, SdotError};
use crate::geometry::{ConvexPolygon, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Lloyd relaxation steps applied after rejection sampling.
pub const LLOYD_STEPS: usize = 5;

/// `n` equal-mass points in `omega2`: uniform rejection sampling followed by
/// [`LLOYD_STEPS`] Lloyd iterations. Deterministic in `rng_seed`.
pub fn sample_target(omega2: &ConvexPolygon, n: usize, rng_seed: u64) -> Result<Vec<Vec2>, SdotError> {
    sample_target_with(omega2, n, rng_seed, LLOYD_STEPS)
}

pub fn sample_target_with(omega2: &ConvexPolygon, n: usize, rng_seed: u64, lloyd: usize) -> Result<Vec<Vec2>, SdotError> {
    if n == 0 {
        return Err(SdotError::InvalidParameter("at least one seed is required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let (lo, hi) = omega2.bbox();
    let mut points = Vec::with_capacity(n);
    while points.len() < n {
        let p = Vec2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
        if omega2.contains(p) && !points.contains(&p) {
            points.push(p);
        }
    }
    for _ in 0..lloyd {
        let weights: Vec<f64> = points.iter().map(|y| 0.5 * y.norm_squared()).collect();
        let diag = LaguerreDiagram::compute_in_polygon(omega2, &points, &weights, None);
        points = diag.barycenters;
    }
    Ok(points)
}
