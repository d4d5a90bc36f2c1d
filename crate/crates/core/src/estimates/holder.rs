use crate::geometry::{HoledDomain, Vec2};
use crate::potential::ConvexPotential;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::TAU;

/// `n` point pairs joined by segments in `Ω₁`.
///
/// Half are random segments with log-uniform length. The other half are
/// chords leaving a hole along its normal, of log-uniform length in
/// `[ℓ·n^{-5/2}, ℓ]` where `ℓ` is the length of the normal segment inside
/// `Ω₁`, so that the shortest chord shrinks geometrically as `n` grows.
pub fn holder_pairs(dom: &HoledDomain, n: usize, seed: u64) -> Vec<(Vec2, Vec2)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = dom.outer_polygon().bbox();
    let diam = dom.diameter();
    let floor = (n.max(1) as f64).powf(-2.5);
    let l_min = dom.delta() * floor;
    let chords = if dom.holes().is_empty() { 0 } else { n / 2 };
    let mut pairs = Vec::with_capacity(n);
    while pairs.len() < n - chords {
        let x = Vec2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
        if !dom.contains(x) {
            continue;
        }
        let theta = rng.gen_range(0.0..TAU);
        let len = (rng.gen_range(l_min.ln()..diam.ln())).exp();
        let y = x + Vec2::new(theta.cos(), theta.sin()) * len;
        let clip = dom.segment_clip(x, y);
        if clip.len() == 1 && clip[0].0 <= 1e-12 && clip[0].1 >= 1.0 - 1e-12 {
            pairs.push((x, y));
        }
    }
    let holes = dom.holes();
    while pairs.len() < n {
        let shape = &holes[rng.gen_range(0..holes.len())].shape;
        let theta = rng.gen_range(0.0..TAU);
        let y = shape.point_at(theta);
        let normal = shape.normal_at(theta);
        let reach = dom.segment_clip(y, y + normal * diam).first().map_or(0.0, |iv| iv.1 * diam);
        if reach <= 0.0 {
            continue;
        }
        let t = (rng.gen_range((reach * floor).ln()..reach.ln())).exp();
        pairs.push((y, y + normal * t));
    }
    pairs
}

/// `max |∇u(x) − ∇u(y)| / |x − y|^α` over `pairs`.
pub fn holder_seminorm<P: ConvexPotential + ?Sized>(u: &P, pairs: &[(Vec2, Vec2)], alpha: f64) -> f64 {
    pairs
        .par_iter()
        .map(|&(x, y)| {
            let len = (x - y).norm();
            if len > 0.0 {
                (u.subgradient(x) - u.subgradient(y)).norm() / len.powf(alpha)
            } else {
                0.0
            }
        })
        .reduce(|| 0.0, f64::max)
}

/// The `C^{1,1/2}` seminorm of `u` on `pairs`.
pub fn holder_half_seminorm<P: ConvexPotential + ?Sized>(u: &P, pairs: &[(Vec2, Vec2)]) -> f64 {
    holder_seminorm(u, pairs, 0.5)
}
