use brenier_core::geometry::{DomainSpec, HoleShape, OuterSpec};
use brenier_core::sdot::cell_areas;
use brenier_core::sections::centered_section;
use brenier_core::{ConvexPolygon, ConvexPotential, DiscretePotential, HoledDomain, ModelPotential, QuadraticPotential, Vec2};
use nalgebra::Matrix2;
use proptest::prelude::*;
use std::f64::consts::PI;

fn point(lo: f64, hi: f64) -> impl Strategy<Value = Vec2> {
    (lo..hi, lo..hi).prop_map(|(x, y)| Vec2::new(x, y))
}

fn holed_square() -> HoledDomain {
    HoledDomain::new(&DomainSpec {
        outer: OuterSpec::Polygon { vertices: vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]] },
        holes: vec![HoleShape::Disk { center: [0.1, -0.2], radius: 0.3 }],
        delta: 0.1,
        resolution: None,
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn halfplane_clips_split_the_area(pts in prop::collection::vec(point(-1.0, 1.0), 4..20),
                                      angle in 0.0..(2.0 * PI), offset in -0.5..0.5f64) {
        let Ok(poly) = ConvexPolygon::hull(&pts) else { return Ok(()) };
        let n = Vec2::new(angle.cos(), angle.sin());
        let below = poly.clip_halfplane(n, offset).map_or(0.0, |p| p.area());
        let above = poly.clip_halfplane(-n, -offset).map_or(0.0, |p| p.area());
        prop_assert!((below + above - poly.area()).abs() < 1e-12 * (1.0 + poly.area()));
    }

    #[test]
    fn hull_contains_its_points(pts in prop::collection::vec(point(-1.0, 1.0), 3..30)) {
        let Ok(poly) = ConvexPolygon::hull(&pts) else { return Ok(()) };
        for p in &pts {
            prop_assert!(poly.contains(*p));
        }
        prop_assert!(poly.diameter() <= 2.0 * 2f64.sqrt() + 1e-12);
    }

    #[test]
    fn laguerre_cells_partition_the_domain(seeds in prop::collection::vec(point(-0.9, 0.9), 2..40),
                                           jitter in prop::collection::vec(-0.05..0.05f64, 40),
                                           shift in -3.0..3.0f64) {
        let dom = holed_square();
        let weights: Vec<f64> = seeds.iter().zip(&jitter).map(|(y, j)| 0.5 * y.norm_squared() + j).collect();
        let areas = cell_areas(&dom, &seeds, &weights);
        prop_assert!((areas.iter().sum::<f64>() - dom.area()).abs() < 1e-9);
        // the diagram only sees weight differences
        let shifted: Vec<f64> = weights.iter().map(|w| w + shift).collect();
        for (a, b) in areas.iter().zip(cell_areas(&dom, &seeds, &shifted)) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn model_gradient_is_monotone(r in 0.05..0.8f64, x in point(-1.5, 1.5), y in point(-1.5, 1.5)) {
        let u = ModelPotential::new(r).unwrap();
        let mono = (u.subgradient(x) - u.subgradient(y)).dot(&(x - y));
        prop_assert!(mono >= -1e-12);
        // convexity along the chord
        let mid = (x + y) * 0.5;
        prop_assert!(u.eval(mid) <= 0.5 * (u.eval(x) + u.eval(y)) + 1e-12);
        // supporting plane
        prop_assert!(u.eval(y) >= u.eval(x) + u.subgradient(x).dot(&(y - x)) - 1e-12);
    }

    #[test]
    fn discrete_potential_is_the_max_of_its_planes(seeds in prop::collection::vec(point(-1.0, 1.0), 1..20),
                                                   weights in prop::collection::vec(-1.0..1.0f64, 20),
                                                   x in point(-2.0, 2.0)) {
        let w = weights[..seeds.len()].to_vec();
        let u = DiscretePotential::new(seeds.clone(), w.clone()).unwrap();
        let best = seeds.iter().zip(&w).map(|(y, w)| x.dot(y) - w).fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(u.eval(x), best);
        prop_assert_eq!(u.subgradient(x), seeds[u.argmax(x)]);
        let back = DiscretePotential::from_json(&u.to_json()).unwrap();
        prop_assert_eq!(back.weights(), u.weights());
    }

    #[test]
    fn quadratic_sections_are_centered_ellipses(a in 0.5..4.0f64, b in 0.5..4.0f64, c in -0.4..0.4f64,
                                                x in point(-1.0, 1.0), h in 1e-4..1e-1f64) {
        let m = Matrix2::new(a, c, c, b);
        let u = QuadraticPotential::new(m).unwrap();
        let s = centered_section(&u, x, h).unwrap();
        prop_assert!((s.slope - m * x).norm() < 1e-6 * (1.0 + (m * x).norm()));
        // area of {½ zᵀAz ≤ h} is 2πh/√det A, less the inscribed polygon's deficit
        let exact = 2.0 * PI * h / m.determinant().sqrt();
        prop_assert!((s.polygon.area() / exact - 1.0).abs() < 0.02, "{} vs {}", s.polygon.area(), exact);
        prop_assert!((s.polygon.barycenter() - x).norm() < 1e-4 * s.polygon.diameter());
    }
}
