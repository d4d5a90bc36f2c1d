use super::{ConvexPotential, PotentialError, SUBLEVEL_REACH};
use crate::geometry::{ConvexPolygon, GeometryError, Halfplane, LabeledPolygon, Vec2};
use serde::{Deserialize, Serialize};

/// `u(x) = max_i (x·y_i − ψ_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscretePotential {
    seeds: Vec<Vec2>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Wire {
    seeds: Vec<[f64; 2]>,
    weights: Vec<f64>,
}

impl DiscretePotential {
    pub fn new(seeds: Vec<Vec2>, weights: Vec<f64>) -> Result<Self, PotentialError> {
        if seeds.is_empty() {
            return Err(PotentialError::InvalidParameter("no seeds".into()));
        }
        if seeds.len() != weights.len() {
            return Err(PotentialError::InvalidParameter(format!(
                "{} seeds but {} weights",
                seeds.len(),
                weights.len()
            )));
        }
        if seeds.iter().any(|s| !s.x.is_finite() || !s.y.is_finite()) || weights.iter().any(|w| !w.is_finite()) {
            return Err(PotentialError::InvalidParameter("non-finite seed or weight".into()));
        }
        Ok(Self { seeds, weights })
    }

    pub fn seeds(&self) -> &[Vec2] {
        &self.seeds
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    /// Index of the attaining affine piece; lowest index on ties.
    pub fn argmax(&self, x: Vec2) -> usize {
        let mut best = 0;
        let mut val = f64::NEG_INFINITY;
        for (i, (y, w)) in self.seeds.iter().zip(&self.weights).enumerate() {
            let v = x.dot(y) - w;
            if v > val {
                val = v;
                best = i;
            }
        }
        best
    }

    pub fn to_json(&self) -> String {
        let wire = Wire { seeds: self.seeds.iter().map(|s| [s.x, s.y]).collect(), weights: self.weights.clone() };
        serde_json::to_string(&wire).expect("plain numeric data always serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, PotentialError> {
        let wire: Wire = serde_json::from_str(s).map_err(|e| PotentialError::InvalidParameter(e.to_string()))?;
        Self::new(wire.seeds.into_iter().map(|[x, y]| Vec2::new(x, y)).collect(), wire.weights)
    }
}

impl ConvexPotential for DiscretePotential {
    fn eval(&self, x: Vec2) -> f64 {
        self.seeds.iter().zip(&self.weights).map(|(y, w)| x.dot(y) - w).fold(f64::NEG_INFINITY, f64::max)
    }

    fn subgradient(&self, x: Vec2) -> Vec2 {
        self.seeds[self.argmax(x)]
    }

    fn is_discrete(&self) -> bool {
        true
    }

    /// Exact half-plane intersection `∩_i {w·(y_i − slope) < s_i}` in
    /// coordinates `w = z − anchor`, clipping nearest constraints first.
    fn sublevel_set(&self, anchor: Vec2, slope: Vec2, value: f64) -> Result<ConvexPolygon, PotentialError> {
        let mut cons: Vec<(f64, Halfplane)> = Vec::with_capacity(self.seeds.len());
        for (y, w) in self.seeds.iter().zip(&self.weights) {
            let n = y - slope;
            let s = value - (anchor.dot(y) - w);
            if !(s > 0.0) {
                return Err(PotentialError::InvalidParameter("anchor is not inside the sublevel set".into()));
            }
            let len = n.norm();
            if len > 0.0 {
                cons.push((s / len, Halfplane::new(n / len, s / len)));
            }
        }
        const BOX: usize = usize::MAX - 3;
        let mut poly = LabeledPolygon::square(Vec2::zeros(), SUBLEVEL_REACH, [BOX, BOX + 1, BOX + 2, BOX + 3]);
        let mut start = 0;
        const BATCH: usize = 64;
        while start < cons.len() {
            let rest = &mut cons[start..];
            let take = BATCH.min(rest.len());
            if take < rest.len() {
                rest.select_nth_unstable_by(take, |a, b| a.0.total_cmp(&b.0));
            }
            rest[..take].sort_by(|a, b| a.0.total_cmp(&b.0));
            for (k, c) in rest[..take].iter().enumerate() {
                if !poly.clip(c.1, start + k) {
                    return Err(GeometryError::Degenerate.into());
                }
            }
            start += take;
            if start < cons.len() {
                let radius = poly.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max);
                let next = cons[start..].iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
                if next >= radius {
                    break;
                }
            }
        }
        if poly.labels.iter().any(|&l| l >= BOX) {
            return Err(PotentialError::UnboundedSublevel);
        }
        poly.snap(|l| cons[l].1);
        Ok(ConvexPolygon::new(poly.vertices.into_iter().map(|v| v + anchor).collect())?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_seeds() -> DiscretePotential {
        let seeds = vec![Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0), Vec2::new(0.0, 1.0), Vec2::new(0.0, -1.0)];
        DiscretePotential::new(seeds, vec![0.0; 4]).unwrap()
    }

    #[test]
    fn l1_norm_sublevel_is_a_diamond() {
        // max(±x, ±y) is the l∞ norm; its unit sublevel set is a square
        let u = square_seeds();
        let poly = u.sublevel_set(Vec2::zeros(), Vec2::zeros(), 1.0).unwrap();
        assert!((poly.area() - 4.0).abs() < 1e-12, "{:?}", poly);
        assert_eq!(poly.len(), 4);
    }

    #[test]
    fn ties_pick_lowest_index() {
        let u = square_seeds();
        assert_eq!(u.subgradient(Vec2::new(1.0, 1.0)), Vec2::new(1.0, 0.0));
        assert_eq!(u.subgradient(Vec2::new(-1.0, 1.0)), Vec2::new(-1.0, 0.0));
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let u = DiscretePotential::new(
            vec![Vec2::new(0.1, 1.0 / 3.0), Vec2::new(-2.0e-17, 7.123456789012345)],
            vec![std::f64::consts::PI, -1e-300],
        )
        .unwrap();
        let back = DiscretePotential::from_json(&u.to_json()).unwrap();
        assert_eq!(u, back);
        assert!(DiscretePotential::from_json(r#"{"seeds":[[0,0]],"weights":[0],"extra":1}"#).is_err());
    }

    #[test]
    fn early_exit_matches_full_clip() {
        // many far-away constraints must not change the set
        let mut seeds = vec![];
        let mut weights = vec![];
        for i in 0..40 {
            for j in 0..40 {
                let y = Vec2::new(i as f64 / 39.0 - 0.5, j as f64 / 39.0 - 0.5);
                seeds.push(y);
                weights.push(0.5 * y.norm_squared());
            }
        }
        let u = DiscretePotential::new(seeds.clone(), weights.clone()).unwrap();
        let x = Vec2::new(0.11, -0.07);
        let value = u.eval(x) + 1e-3;
        let fast = u.sublevel_set(x, u.subgradient(x), value).unwrap();
        let mut brute = ConvexPolygon::rectangle(-10.0, -10.0, 10.0, 10.0).unwrap();
        let b = u.subgradient(x);
        for (y, w) in seeds.iter().zip(&weights) {
            let n = y - b;
            if n.norm() > 0.0 {
                brute = brute.clip_halfplane(n, value - x.dot(y) + w + n.dot(&x)).unwrap();
            }
        }
        assert!((fast.area() - brute.area()).abs() < 1e-14);
    }
}
