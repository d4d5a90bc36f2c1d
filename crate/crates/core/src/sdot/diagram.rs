use crate::geometry::{ConvexPolygon, Halfplane, HoledDomain, LabeledPolygon, Vec2};
use rayon::prelude::*;

/// Edge label for pieces of the outer boundary.
pub const BOUNDARY: usize = usize::MAX;

/// One side of a shared Laguerre edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Adjacency {
    pub neighbor: usize,
    /// Length of the shared edge inside `Ω₁`.
    pub length: f64,
    /// Length of the shared edge inside the holes.
    pub hole_length: f64,
}

/// Laguerre cells `{x : x·y_i − ψ_i ≥ x·y_j − ψ_j ∀j}` of the seeds, clipped to
/// the outer boundary `Ω₀`, with their areas inside `Ω₁` and inside the holes.
#[derive(Clone, Debug)]
pub struct LaguerreDiagram {
    pub seeds: Vec<Vec2>,
    pub weights: Vec<f64>,
    /// `cell_i ∩ Ω₀`; `None` when empty.
    pub cells: Vec<Option<ConvexPolygon>>,
    /// `|cell_i ∩ Ω₁|`.
    pub clipped_areas: Vec<f64>,
    /// `|cell_i ∩ holes|`.
    pub hole_areas: Vec<f64>,
    /// Barycenter of `cell_i ∩ Ω₁` (of `cell_i ∩ Ω₀` when that is all there is).
    pub barycenters: Vec<Vec2>,
    /// Symmetrized adjacency lists sorted by neighbor.
    pub adjacency: Vec<Vec<Adjacency>>,
}

struct Region<'a> {
    outer_lines: Vec<Halfplane>,
    bbox: (Vec2, Vec2),
    holes: Vec<(&'a ConvexPolygon, (Vec2, Vec2))>,
}

impl<'a> Region<'a> {
    fn new(outer: &'a ConvexPolygon, holes: impl Iterator<Item = &'a ConvexPolygon>) -> Self {
        let outer_lines = outer.edges().map(|(a, b)| Halfplane::of_edge(a, b)).collect();
        Self { outer_lines, bbox: outer.bbox(), holes: holes.map(|h| (h, h.bbox())).collect() }
    }
}

fn overlaps(a: &(Vec2, Vec2), b: &(Vec2, Vec2)) -> bool {
    a.0.x <= b.1.x && b.0.x <= a.1.x && a.0.y <= b.1.y && b.0.y <= a.1.y
}

struct Cell {
    polygon: Option<LabeledPolygon>,
    area: f64,
    hole_area: f64,
    barycenter: Vec2,
    edges: Vec<Adjacency>,
}

/// Seeds and weights with coordinates split for a tight inner loop.
struct Sites<'a> {
    seeds: &'a [Vec2],
    weights: &'a [f64],
    xs: Vec<f64>,
    ys: Vec<f64>,
    radius_guess: f64,
}

/// Builds cell `i` by clipping the bounding box of `Ω₀` with bisector
/// half-planes.
///
/// The bisector of `j` lies at signed distance `g_j / |y_j − y_i|` from the
/// reference point `p`, where `g_j = u_i(p) − u_j(p)`. Half-planes are
/// admitted in rounds: all those closer than a trial radius `R`, nearest
/// first; once the clipped polygon fits in the disk of radius `R` about `p`,
/// no remaining half-plane can cut it.
fn build_cell(i: usize, sites: &Sites, reference: Vec2, region: &Region, scratch: &mut Vec<(f64, usize)>) -> Cell {
    let (seeds, weights) = (sites.seeds, sites.weights);
    let yi = seeds[i];
    let wi = weights[i];
    let ui = reference.dot(&yi) - wi;
    let hp = |j: usize| Halfplane::new(seeds[j] - yi, weights[j] - wi);
    let (lo, hi) = region.bbox;
    let mut poly = LabeledPolygon {
        vertices: vec![lo, Vec2::new(hi.x, lo.y), hi, Vec2::new(lo.x, hi.y)],
        labels: vec![BOUNDARY; 4],
    };
    let empty = Cell { polygon: None, area: 0.0, hole_area: 0.0, barycenter: reference, edges: vec![] };
    let mut admitted = f64::NEG_INFINITY;
    let mut limit = sites.radius_guess;
    loop {
        scratch.clear();
        let (a2, l2) = (admitted * admitted.abs(), limit * limit);
        for j in 0..seeds.len() {
            let (dx, dy) = (sites.xs[j] - yi.x, sites.ys[j] - yi.y);
            let g = ui - (reference.x * sites.xs[j] + reference.y * sites.ys[j] - weights[j]);
            let len2 = dx * dx + dy * dy;
            // signed squared distance compared without square roots
            let sd = g * g.abs();
            if sd < l2 * len2 && sd >= a2 * len2 && len2 > 0.0 {
                scratch.push((g / len2.sqrt(), j));
            }
        }
        scratch.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in scratch.iter() {
            if !poly.clip(hp(j), j) {
                return empty;
            }
        }
        let radius = poly.vertices.iter().map(|v| (v - reference).norm()).fold(0.0, f64::max);
        if radius <= limit {
            break;
        }
        admitted = limit;
        limit = radius;
    }
    for line in &region.outer_lines {
        if !poly.clip(*line, BOUNDARY) {
            return empty;
        }
    }
    let cell_poly = ConvexPolygon::from_ccw_unchecked(poly.vertices.clone());
    let cell_box = cell_poly.bbox();
    let outer_area = cell_poly.area();
    let mut moment = cell_poly.barycenter() * outer_area;
    let mut hole_area = 0.0;
    for (h, hb) in &region.holes {
        if overlaps(&cell_box, hb) {
            if let Some(inter) = cell_poly.intersection(h) {
                let a = inter.area();
                hole_area += a;
                moment -= inter.barycenter() * a;
            }
        }
    }
    let area = (outer_area - hole_area).max(0.0);
    let barycenter = if area > 1e-14 * outer_area { moment / area } else { cell_poly.barycenter() };
    let mut edges = Vec::new();
    for (label, a, b) in poly.edges() {
        if label == BOUNDARY {
            continue;
        }
        let len = (b - a).norm();
        let seg_box = (Vec2::new(a.x.min(b.x), a.y.min(b.y)), Vec2::new(a.x.max(b.x), a.y.max(b.y)));
        let mut inside = 0.0;
        for (h, hb) in &region.holes {
            if overlaps(&seg_box, hb) {
                if let Some((t0, t1)) = h.segment_interval(a, b) {
                    inside += (t1 - t0) * len;
                }
            }
        }
        let inside = inside.min(len);
        edges.push(Adjacency { neighbor: label, length: len - inside, hole_length: inside });
    }
    Cell { polygon: Some(poly), area, hole_area, barycenter, edges }
}

impl LaguerreDiagram {
    /// Cells of `(seeds, weights)` inside the domain. `references` are points
    /// expected to lie in or near each cell (previous barycenters); they only
    /// affect speed, never the result.
    pub fn compute(dom: &HoledDomain, seeds: &[Vec2], weights: &[f64], references: Option<&[Vec2]>) -> Self {
        let region = Region::new(dom.outer_polygon(), dom.holes().iter().map(|h| &h.polygon));
        Self::compute_in(&region, seeds, weights, references)
    }

    /// Cells clipped to a convex polygon without holes.
    pub fn compute_in_polygon(outer: &ConvexPolygon, seeds: &[Vec2], weights: &[f64], references: Option<&[Vec2]>) -> Self {
        let region = Region::new(outer, std::iter::empty());
        Self::compute_in(&region, seeds, weights, references)
    }

    fn compute_in(region: &Region, seeds: &[Vec2], weights: &[f64], references: Option<&[Vec2]>) -> Self {
        assert_eq!(seeds.len(), weights.len(), "one weight per seed");
        let n = seeds.len();
        let (blo, bhi) = region.bbox;
        let sites = Sites {
            seeds,
            weights,
            xs: seeds.iter().map(|s| s.x).collect(),
            ys: seeds.iter().map(|s| s.y).collect(),
            radius_guess: 2.0 * ((bhi.x - blo.x) * (bhi.y - blo.y) / n as f64).sqrt(),
        };
        let cells: Vec<Cell> = (0..n)
            .into_par_iter()
            .map_init(Vec::new, |scratch, i| {
                let reference = references.map_or(seeds[i], |r| r[i]);
                build_cell(i, &sites, reference, region, scratch)
            })
            .collect();
        let mut adjacency: Vec<Vec<Adjacency>> = cells
            .iter()
            .map(|c| {
                let mut e = c.edges.clone();
                e.sort_by_key(|a| a.neighbor);
                e.dedup_by(|b, a| {
                    if a.neighbor == b.neighbor {
                        a.length += b.length;
                        a.hole_length += b.hole_length;
                        true
                    } else {
                        false
                    }
                });
                e
            })
            .collect();
        symmetrize(&mut adjacency);
        LaguerreDiagram {
            seeds: seeds.to_vec(),
            weights: weights.to_vec(),
            clipped_areas: cells.iter().map(|c| c.area).collect(),
            hole_areas: cells.iter().map(|c| c.hole_area).collect(),
            barycenters: cells.iter().map(|c| c.barycenter).collect(),
            cells: cells.into_iter().map(|c| c.polygon.and_then(|p| p.to_polygon())).collect(),
            adjacency,
        }
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    /// Mass of each cell under the density `1` on `Ω₁` and `eps` on the holes.
    pub fn masses(&self, eps: f64) -> Vec<f64> {
        self.clipped_areas.iter().zip(&self.hole_areas).map(|(a, h)| a + eps * h).collect()
    }
}

/// Averages the two one-sided measurements of every shared edge; an edge
/// seen from one side only keeps that measurement.
fn symmetrize(adj: &mut [Vec<Adjacency>]) {
    let mut sides: Vec<(usize, usize, f64, f64)> = Vec::new();
    for (i, list) in adj.iter().enumerate() {
        for e in list {
            sides.push((i.min(e.neighbor), i.max(e.neighbor), e.length, e.hole_length));
        }
    }
    sides.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    for list in adj.iter_mut() {
        list.clear();
    }
    let mut k = 0;
    while k < sides.len() {
        let (i, j, mut len, mut hole) = sides[k];
        let mut count = 1.0;
        k += 1;
        while k < sides.len() && (sides[k].0, sides[k].1) == (i, j) {
            len += sides[k].2;
            hole += sides[k].3;
            count += 1.0;
            k += 1;
        }
        let (len, hole) = (len / count, hole / count);
        adj[i].push(Adjacency { neighbor: j, length: len, hole_length: hole });
        adj[j].push(Adjacency { neighbor: i, length: len, hole_length: hole });
    }
    for list in adj.iter_mut() {
        list.sort_by_key(|e| e.neighbor);
    }
}

/// `|cell_i ∩ Ω₁|` for every seed.
pub fn cell_areas(dom: &HoledDomain, seeds: &[Vec2], weights: &[f64]) -> Vec<f64> {
    LaguerreDiagram::compute(dom, seeds, weights, None).clipped_areas
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DomainSpec, HoleShape, OuterSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square() -> HoledDomain {
        HoledDomain::new(&DomainSpec {
            outer: OuterSpec::Polygon { vertices: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]] },
            holes: vec![],
            delta: 0.1,
            resolution: None,
        })
        .unwrap()
    }

    fn holed() -> HoledDomain {
        HoledDomain::new(&DomainSpec {
            outer: OuterSpec::Polygon { vertices: vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]] },
            holes: vec![
                HoleShape::Disk { center: [-0.4, 0.1], radius: 0.25 },
                HoleShape::Ellipse { center: [0.45, -0.3], semi_axes: [0.3, 0.2], rotation: 0.5 },
            ],
            delta: 0.1,
            resolution: None,
        })
        .unwrap()
    }

    fn random_state(n: usize, seed: u64) -> (Vec<Vec2>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seeds: Vec<Vec2> = (0..n).map(|_| Vec2::new(rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6))).collect();
        let weights = seeds.iter().map(|y| 0.5 * y.norm_squared() + rng.gen_range(-0.02..0.02)).collect();
        (seeds, weights)
    }

    #[test]
    fn lattice_cells_are_equal() {
        let dom = square();
        let s = dom.scale();
        let seeds: Vec<Vec2> = (0..4)
            .flat_map(|i| (0..4).map(move |j| Vec2::new((i as f64 + 0.5) / 4.0, (j as f64 + 0.5) / 4.0) * s))
            .collect();
        let areas = cell_areas(&dom, &seeds, &vec![0.0; 16]);
        let voronoi: Vec<f64> = seeds.iter().map(|y| 0.5 * y.norm_squared()).collect();
        let areas_v = cell_areas(&dom, &seeds, &voronoi);
        for a in areas_v {
            assert!((a - 1.0 / 16.0).abs() < 1e-12);
        }
        // equal weights with lattice seeds are not a Voronoi diagram, but still partition
        assert!((areas.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn areas_partition_holed_domain() {
        let dom = holed();
        for seed in 0..4 {
            let (seeds, weights) = random_state(200, seed);
            let diag = LaguerreDiagram::compute(&dom, &seeds, &weights, None);
            let total: f64 = diag.clipped_areas.iter().sum();
            assert!((total - dom.area()).abs() < 1e-9, "{total}");
            // references never change the answer
            let again = LaguerreDiagram::compute(&dom, &seeds, &weights, Some(&diag.barycenters));
            for (a, b) in diag.clipped_areas.iter().zip(&again.clipped_areas) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn adjacency_is_symmetric() {
        let dom = holed();
        let (seeds, weights) = random_state(150, 9);
        let diag = LaguerreDiagram::compute(&dom, &seeds, &weights, None);
        for (i, list) in diag.adjacency.iter().enumerate() {
            for e in list {
                let back = diag.adjacency[e.neighbor].iter().find(|f| f.neighbor == i).unwrap();
                assert_eq!(back.length, e.length);
            }
        }
    }

    #[test]
    fn areas_match_monte_carlo() {
        let dom = holed();
        let (seeds, weights) = random_state(12, 3);
        let diag = LaguerreDiagram::compute(&dom, &seeds, &weights, None);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let (lo, hi) = dom.outer_polygon().bbox();
        let box_area = (hi.x - lo.x) * (hi.y - lo.y);
        let samples = 1_000_000;
        let mut counts = vec![0usize; seeds.len()];
        let holes: Vec<&ConvexPolygon> = dom.holes().iter().map(|h| &h.polygon).collect();
        for _ in 0..samples {
            let x = Vec2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
            if !dom.outer_polygon().contains(x) || holes.iter().any(|h| h.contains(x)) {
                continue;
            }
            let k = (0..seeds.len())
                .max_by(|&a, &b| (x.dot(&seeds[a]) - weights[a]).total_cmp(&(x.dot(&seeds[b]) - weights[b])))
                .unwrap();
            counts[k] += 1;
        }
        for (k, &c) in counts.iter().enumerate() {
            let p = c as f64 / samples as f64;
            let estimate = p * box_area;
            let se = box_area * (p * (1.0 - p) / samples as f64).sqrt();
            assert!(
                (estimate - diag.clipped_areas[k]).abs() <= 3.0 * se + 1e-12,
                "cell {k}: {estimate} ± {se} vs {}",
                diag.clipped_areas[k]
            );
        }
    }
}
