//! Partial Legendre transform in the first variable, for convex functions
//! sampled on rectangular grids, and finite-difference checks of the
//! structure it reveals for `det D²w = χ_{x₂>0}`: `w*` is harmonic above
//! the axis, linear on vertical segments below it, and `w*₂` is continuous
//! across it.

pub mod fixtures;

use rayon::prelude::*;
use serde::Serialize;

/// Second differences below this count as a convexity violation.
pub const CONVEXITY_TOL: f64 = 1e-10;

/// Smallest admissible `w₁₁` in [`mixed_ratio`].
pub const W11_FLOOR: f64 = 1e-6;

/// Nodes of the local interpolant refining each conjugate value.
const STENCIL: usize = 6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LegendreError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("row {row} is not convex at column {col} (second difference {value:e})")]
    NotRowConvex { row: usize, col: usize, value: f64 },
    #[error("row subgradient ranges have empty intersection")]
    IncompatibleRanges,
    #[error("x₂ = 0 is not a grid line")]
    NoInterface,
    #[error("w₁₁ = {w11:e} below the floor at ({x1}, {x2})")]
    DegenerateDirection { x1: f64, x2: f64, w11: f64 },
}

/// Values on a uniform grid, stored row by row (`x₂` fixed along a row).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridFunction {
    pub x1: (f64, f64),
    pub x2: (f64, f64),
    pub n1: usize,
    pub n2: usize,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(x1: (f64, f64), x2: (f64, f64), n1: usize, n2: usize, values: Vec<f64>) -> Result<Self, LegendreError> {
        if n1 < 3 || n2 < 1 || values.len() != n1 * n2 {
            return Err(LegendreError::InvalidGrid(format!("{n1}×{n2} grid with {} values", values.len())));
        }
        if !(x1.1 > x1.0) || (n2 > 1 && !(x2.1 > x2.0)) {
            return Err(LegendreError::InvalidGrid("empty coordinate range".into()));
        }
        Ok(Self { x1, x2, n1, n2, values })
    }

    /// Samples `f` on `n1 × n2` nodes.
    pub fn sample(
        f: impl Fn(f64, f64) -> f64 + Sync,
        x1: (f64, f64),
        x2: (f64, f64),
        n1: usize,
        n2: usize,
    ) -> Result<Self, LegendreError> {
        let h1 = (x1.1 - x1.0) / (n1.max(2) - 1) as f64;
        let h2 = if n2 > 1 { (x2.1 - x2.0) / (n2 - 1) as f64 } else { 0.0 };
        let values =
            (0..n1 * n2).into_par_iter().map(|k| f(x1.0 + h1 * (k % n1) as f64, x2.0 + h2 * (k / n1) as f64)).collect();
        Self::new(x1, x2, n1, n2, values)
    }

    /// `f` on `[−a, a]²` with `n` nodes per side.
    pub fn square(f: impl Fn(f64, f64) -> f64 + Sync, a: f64, n: usize) -> Result<Self, LegendreError> {
        Self::sample(f, (-a, a), (-a, a), n, n)
    }

    pub fn h1(&self) -> f64 {
        (self.x1.1 - self.x1.0) / (self.n1 - 1) as f64
    }

    pub fn h2(&self) -> f64 {
        if self.n2 > 1 {
            (self.x2.1 - self.x2.0) / (self.n2 - 1) as f64
        } else {
            0.0
        }
    }

    pub fn x1_at(&self, i: usize) -> f64 {
        self.x1.0 + self.h1() * i as f64
    }

    pub fn x2_at(&self, j: usize) -> f64 {
        self.x2.0 + self.h2() * j as f64
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.n1 + i]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.values[j * self.n1..(j + 1) * self.n1]
    }

    /// Row index of the line `x₂ = 0`.
    pub fn interface_row(&self) -> Option<usize> {
        let h2 = self.h2();
        if h2 == 0.0 {
            return (self.x2.0.abs() < 1e-12).then_some(0);
        }
        let j = (-self.x2.0 / h2).round();
        (j >= 0.0 && j < self.n2 as f64 && (self.x2.0 + h2 * j).abs() <= 1e-9 * h2).then_some(j as usize)
    }

    /// First row and column whose second difference in `x₁` is below `−tol`.
    pub fn check_row_convexity(&self, tol: f64) -> Result<(), LegendreError> {
        for j in 0..self.n2 {
            let r = self.row(j);
            for i in 1..self.n1 - 1 {
                let d2 = r[i + 1] - 2.0 * r[i] + r[i - 1];
                if d2 < -tol {
                    return Err(LegendreError::NotRowConvex { row: j, col: i, value: d2 });
                }
            }
        }
        Ok(())
    }
}

/// `w*(p, x₂) = sup_{x₁} (p·x₁ − w(x₁, x₂))` on a grid in `(p, x₂)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PltFunction {
    /// Conjugate values; `x1` holds the `p` range.
    pub grid: GridFunction,
    /// Subgradient range of each input row.
    pub ranges: Vec<(f64, f64)>,
}

pub type PLTFunction = PltFunction;

impl PltFunction {
    pub fn p_range(&self) -> (f64, f64) {
        self.grid.x1
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.grid.at(i, j)
    }
}

/// How a conjugate value is computed from the row samples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum Interpolation {
    /// Conjugate of the piecewise linear interpolant: exact for functions
    /// that are affine between nodes.
    PiecewiseLinear,
    /// The piecewise linear maximizer refined on a local degree-5
    /// interpolant, for smooth rows.
    #[default]
    Polynomial,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PltOptions {
    pub interpolation: Interpolation,
    /// Number of `p` nodes; defaults to the number of `x₁` nodes.
    pub p_points: Option<usize>,
    /// Sub-window of the common subgradient range.
    pub p_window: Option<(f64, f64)>,
}

impl Default for PltOptions {
    fn default() -> Self {
        Self { interpolation: Interpolation::Polynomial, p_points: None, p_window: None }
    }
}

/// [`plt_with`] with default options.
pub fn plt(w: &GridFunction) -> Result<PltFunction, LegendreError> {
    plt_with(w, &PltOptions::default())
}

/// Row-wise convex conjugate of `w` in `x₁`, sampled on a uniform `p` grid
/// spanning the intersection of the row subgradient ranges.
pub fn plt_with(w: &GridFunction, opts: &PltOptions) -> Result<PltFunction, LegendreError> {
    w.check_row_convexity(CONVEXITY_TOL)?;
    let h1 = w.h1();
    let hulls: Vec<Vec<usize>> = (0..w.n2).into_par_iter().map(|j| lower_hull(w.row(j), h1)).collect();
    let ranges: Vec<(f64, f64)> = hulls
        .iter()
        .enumerate()
        .map(|(j, hull)| {
            let r = w.row(j);
            let slope = |a: usize, b: usize| (r[b] - r[a]) / (h1 * (b - a) as f64);
            (slope(hull[0], hull[1]), slope(hull[hull.len() - 2], hull[hull.len() - 1]))
        })
        .collect();
    let lo = ranges.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let hi = ranges.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let (lo, hi) = match opts.p_window {
        Some((a, b)) if a >= lo && b <= hi => (a, b),
        Some(_) => return Err(LegendreError::IncompatibleRanges),
        None => (lo, hi),
    };
    if !(hi > lo) {
        return Err(LegendreError::IncompatibleRanges);
    }
    let np = opts.p_points.unwrap_or(w.n1);
    if np < 2 {
        return Err(LegendreError::InvalidGrid("need at least two p nodes".into()));
    }
    let hp = (hi - lo) / (np - 1) as f64;
    let ps: Vec<f64> = (0..np).map(|i| lo + hp * i as f64).collect();
    let rows: Vec<Vec<f64>> = (0..w.n2)
        .into_par_iter()
        .map(|j| conjugate_row(w.row(j), w.x1.0, h1, &hulls[j], &ps, opts.interpolation))
        .collect();
    let grid = GridFunction::new((lo, hi), w.x2, np, w.n2, rows.concat())?;
    Ok(PltFunction { grid, ranges })
}

/// Indices of the lower convex hull of `(i·h, r[i])`.
fn lower_hull(r: &[f64], h: f64) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::with_capacity(r.len());
    for i in 0..r.len() {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop b when it lies on or above the chord from a to i
            let cross = (r[b] - r[a]) * ((i - a) as f64 * h) - (r[i] - r[a]) * ((b - a) as f64 * h);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

/// Conjugate at increasing `ps`, merging with the hull slopes.
fn conjugate_row(r: &[f64], x0: f64, h: f64, hull: &[usize], ps: &[f64], interp: Interpolation) -> Vec<f64> {
    let slope = |k: usize| (r[hull[k + 1]] - r[hull[k]]) / (h * (hull[k + 1] - hull[k]) as f64);
    let mut k = 0;
    ps.iter()
        .map(|&p| {
            while k + 1 < hull.len() - 1 && slope(k) < p {
                k += 1;
            }
            // vertex maximizing p·x − w
            let v = if slope(k) < p { hull[k + 1] } else { hull[k] };
            let discrete = p * (x0 + h * v as f64) - r[v];
            match interp {
                Interpolation::PiecewiseLinear => discrete,
                Interpolation::Polynomial => refine(r, x0, h, v, p).filter(|&c| c >= discrete).unwrap_or(discrete),
            }
        })
        .collect()
}

/// `max p·x − P(x)` for the interpolant `P` on nodes around `v`.
fn refine(r: &[f64], x0: f64, h: f64, v: usize, p: f64) -> Option<f64> {
    let n = r.len();
    if n < STENCIL {
        return None;
    }
    // lean the stencil toward the side holding the true maximizer
    let right = v + 1 < n && (v == 0 || p * h > 0.5 * (r[v + 1] - r[v - 1]));
    let start = (v + usize::from(right)).saturating_sub(STENCIL / 2).min(n - STENCIL);
    let nodes = &r[start..start + STENCIL];
    let mut c: [f64; STENCIL] = std::array::from_fn(|i| nodes[i]);
    for lvl in 1..STENCIL {
        for i in (lvl..STENCIL).rev() {
            c[i] = (c[i] - c[i - 1]) / lvl as f64;
        }
    }
    let eval = |t: f64| {
        let (mut f, mut d1, mut d2) = (c[STENCIL - 1], 0.0, 0.0);
        for k in (0..STENCIL - 1).rev() {
            let s = t - k as f64;
            d2 = d2 * s + 2.0 * d1;
            d1 = d1 * s + f;
            f = f * s + c[k];
        }
        (f, d1 / h, d2 / (h * h))
    };
    let t0 = (v - start) as f64;
    let mut t = t0;
    for _ in 0..40 {
        let (_, d1, d2) = eval(t);
        if !(d2 > 0.0) {
            return None;
        }
        let step = (d1 - p) / (d2 * h);
        t = (t - step).clamp(t0 - 1.0, t0 + 1.0);
        if step.abs() < 1e-15 * (1.0 + t.abs()) {
            break;
        }
    }
    let (f, d1, d2) = eval(t);
    ((d1 - p).abs() <= 1e-9 * (1.0 + p.abs()) && d2 > 0.0).then(|| p * (x0 + h * (start as f64 + t)) - f)
}

/// Finite-difference checks of the flat-boundary structure of `w*`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PltResiduals {
    /// `sup |w*₁₁ + w*₂₂|` over interior nodes above the axis.
    pub upper_laplacian: f64,
    /// `sup |w*₂₂|` over interior nodes below the axis.
    pub lower_linearity: f64,
    /// `sup |w*₂(·, 0⁺) − w*₂(·, 0⁻)|` with second-order one-sided differences.
    pub flux_jump: f64,
}

pub fn plt_residuals(wstar: &PltFunction) -> Result<PltResiduals, LegendreError> {
    let g = &wstar.grid;
    let j0 = g.interface_row().ok_or(LegendreError::NoInterface)?;
    if j0 < 2 || j0 + 2 >= g.n2 || g.n1 < 3 {
        return Err(LegendreError::InvalidGrid("need two rows on each side of the axis".into()));
    }
    let (hp, h2) = (g.h1(), g.h2());
    let d22 = |i: usize, j: usize| (g.at(i, j + 1) - 2.0 * g.at(i, j) + g.at(i, j - 1)) / (h2 * h2);
    let d11 = |i: usize, j: usize| (g.at(i + 1, j) - 2.0 * g.at(i, j) + g.at(i - 1, j)) / (hp * hp);
    let interior = 1..g.n1 - 1;
    let mut res = PltResiduals { upper_laplacian: 0.0, lower_linearity: 0.0, flux_jump: 0.0 };
    for j in j0 + 1..g.n2 - 1 {
        for i in interior.clone() {
            res.upper_laplacian = res.upper_laplacian.max((d11(i, j) + d22(i, j)).abs());
        }
    }
    for j in 1..j0 {
        for i in interior.clone() {
            res.lower_linearity = res.lower_linearity.max(d22(i, j).abs());
        }
    }
    for i in 0..g.n1 {
        let up = (-3.0 * g.at(i, j0) + 4.0 * g.at(i, j0 + 1) - g.at(i, j0 + 2)) / (2.0 * h2);
        let down = (3.0 * g.at(i, j0) - 4.0 * g.at(i, j0 - 1) + g.at(i, j0 - 2)) / (2.0 * h2);
        res.flux_jump = res.flux_jump.max((up - down).abs());
    }
    Ok(res)
}

/// Axis-aligned rectangle `[x1.0, x1.1] × [x2.0, x2.1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Region {
    pub x1: (f64, f64),
    pub x2: (f64, f64),
}

/// `sup |w₁₂| / w₁₁` over the interior grid nodes in `region`, by central
/// differences.
pub fn mixed_ratio(w: &GridFunction, region: &Region) -> Result<f64, LegendreError> {
    if w.n2 < 3 {
        return Err(LegendreError::InvalidGrid("need at least three rows".into()));
    }
    let (h1, h2) = (w.h1(), w.h2());
    let mut sup = 0.0f64;
    let mut seen = false;
    for j in 1..w.n2 - 1 {
        let x2 = w.x2_at(j);
        if x2 < region.x2.0 || x2 > region.x2.1 {
            continue;
        }
        for i in 1..w.n1 - 1 {
            let x1 = w.x1_at(i);
            if x1 < region.x1.0 || x1 > region.x1.1 {
                continue;
            }
            let w11 = (w.at(i + 1, j) - 2.0 * w.at(i, j) + w.at(i - 1, j)) / (h1 * h1);
            if !(w11 >= W11_FLOOR) {
                return Err(LegendreError::DegenerateDirection { x1, x2, w11 });
            }
            let w12 = (w.at(i + 1, j + 1) - w.at(i + 1, j - 1) - w.at(i - 1, j + 1) + w.at(i - 1, j - 1)) / (4.0 * h1 * h2);
            sup = sup.max(w12.abs() / w11);
            seen = true;
        }
    }
    if !seen {
        return Err(LegendreError::InvalidGrid("region contains no interior node".into()));
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::geometry::Vec2;
    use crate::potential::{ConvexPotential, ModelPotential};

    #[test]
    fn quadratic_conjugates_are_exact() {
        for a in [1.0, 0.5, 3.0] {
            let w = quadratic_grid(a, 1.0, 41).unwrap();
            let ws = plt(&w).unwrap();
            let g = &ws.grid;
            for j in 0..g.n2 {
                for i in 0..g.n1 {
                    let (p, x2) = (g.x1_at(i), g.x2_at(j));
                    let exact = quadratic_conjugate(a, p, x2);
                    assert!((g.at(i, j) - exact).abs() < 1e-10, "a={a} p={p} x2={x2}");
                }
            }
            let r = plt_residuals(&ws).unwrap();
            assert!(r.upper_laplacian < 1e-6, "{r:?}");
        }
    }

    #[test]
    fn kink_conjugate_is_linear_on_slope_interval() {
        // max(−x₁, 2x₁) + x₂²: conjugate is −x₂² on [−1, 2]
        let w = GridFunction::square(|x1, x2| (-x1).max(2.0 * x1) + x2 * x2, 1.0, 21).unwrap();
        let opts = PltOptions { interpolation: Interpolation::PiecewiseLinear, ..Default::default() };
        let ws = plt_with(&w, &opts).unwrap();
        let (lo, hi) = ws.p_range();
        assert!((lo + 1.0).abs() < 1e-12 && (hi - 2.0).abs() < 1e-12);
        for j in 0..ws.grid.n2 {
            for i in 0..ws.grid.n1 {
                let x2 = ws.grid.x2_at(j);
                assert!((ws.at(i, j) + x2 * x2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_non_convex_rows_and_disjoint_ranges() {
        let w = GridFunction::square(|x1, _| -x1 * x1, 1.0, 11).unwrap();
        assert!(matches!(plt(&w), Err(LegendreError::NotRowConvex { .. })));
        let w = GridFunction::square(|x1, x2| 0.5 * (x1 - 10.0 * x2).powi(2) + 0.1 * x1 * x1, 1.0, 11).unwrap();
        assert!(matches!(plt(&w), Err(LegendreError::IncompatibleRanges)));
    }

    #[test]
    fn conjugation_is_an_involution() {
        let w = flat_boundary_grid(0.2, 0.3, 0.5, 81).unwrap();
        let ws = plt(&w).unwrap();
        let back = plt_with(&ws.grid, &PltOptions { p_window: Some((-0.15, 0.15)), ..Default::default() }).unwrap();
        let f = |x1: f64, x2: f64| flat_boundary_primal(0.2, 0.3, x1, x2);
        for j in 0..back.grid.n2 {
            for i in 0..back.grid.n1 {
                let (x1, x2) = (back.grid.x1_at(i), back.grid.x2_at(j));
                assert!((back.at(i, j) - f(x1, x2)).abs() < 1e-8, "{x1} {x2}");
            }
        }
    }

    #[test]
    fn flat_boundary_residuals_are_second_order() {
        let coarse = plt_residuals(&plt(&flat_boundary_grid(0.2, 0.3, 0.5, 41).unwrap()).unwrap()).unwrap();
        let fine = plt_residuals(&plt(&flat_boundary_grid(0.2, 0.3, 0.5, 81).unwrap()).unwrap()).unwrap();
        assert!(coarse.upper_laplacian / fine.upper_laplacian >= 3.5, "{coarse:?} {fine:?}");
        assert!(coarse.lower_linearity / fine.lower_linearity >= 3.5, "{coarse:?} {fine:?}");
        assert!(coarse.flux_jump / fine.flux_jump >= 3.5, "{coarse:?} {fine:?}");
        assert!(fine.upper_laplacian < 1e-3 && fine.lower_linearity < 1e-3 && fine.flux_jump < 1e-3);
    }

    #[test]
    fn wrong_determinant_leaves_laplacian_residual() {
        let w = GridFunction::square(perturbed_primal, 0.5, 81).unwrap();
        let r = plt_residuals(&plt(&w).unwrap()).unwrap();
        assert!(r.upper_laplacian > 0.05, "{r:?}");
    }

    #[test]
    fn flat_boundary_mixed_ratio_matches_conjugate() {
        let w = flat_boundary_grid(0.2, 0.3, 0.5, 81).unwrap();
        let region = Region { x1: (-0.25, 0.25), x2: (0.05, 0.25) };
        // |w₁₂|/w₁₁ = |w*₁₂| = |β − 2γ·p·x₂|
        let ratio = mixed_ratio(&w, &region).unwrap();
        assert!(ratio > 0.25 && ratio < 0.35, "{ratio}");
    }

    #[test]
    fn shear_drives_mixed_ratio_linearly() {
        let region = Region { x1: (-0.5, 0.5), x2: (-0.5, 0.5) };
        let ratios: Vec<f64> =
            [1.0, 2.0, 4.0, 8.0].iter().map(|&k| mixed_ratio(&sheared_grid(k, 1.0, 41).unwrap(), &region).unwrap()).collect();
        for (r, k) in ratios.iter().zip([1.0, 2.0, 4.0, 8.0]) {
            assert!((r / k - 1.0).abs() < 1e-6, "{ratios:?}");
        }
        let round = GridFunction::square(|x1, x2| 0.5 * (x1 * x1 + x2 * x2), 1.0, 21).unwrap();
        assert!(mixed_ratio(&round, &region).unwrap() < 1e-9);
    }

    #[test]
    fn flat_direction_is_degenerate() {
        let w = GridFunction::square(|_, x2| x2 * x2, 1.0, 11).unwrap();
        let region = Region { x1: (-1.0, 1.0), x2: (-1.0, 1.0) };
        assert!(matches!(mixed_ratio(&w, &region), Err(LegendreError::DegenerateDirection { .. })));
    }

    #[test]
    fn model_sector_in_boundary_frame() {
        let u = ModelPotential::new(0.3).unwrap();
        for theta in [0.0f64, 0.7, 2.0, 4.0] {
            let (t, n) = (Vec2::new(-theta.sin(), theta.cos()), Vec2::new(theta.cos(), theta.sin()));
            let base = n * 0.3;
            let w = GridFunction::sample(|x1, x2| u.eval(base + t * x1 + n * x2), (-0.006, 0.006), (0.01, 0.05), 25, 41)
                .unwrap();
            let region = Region { x1: (-0.006, 0.006), x2: (0.01, 0.05) };
            let ratio = mixed_ratio(&w, &region).unwrap();
            assert!(ratio <= 5.0, "theta={theta}: {ratio}");
        }
    }
}
