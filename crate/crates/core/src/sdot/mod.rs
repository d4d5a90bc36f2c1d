//! Semi-discrete optimal transport: weights `ψ` such that every Laguerre cell
//! of `u(x) = max_i (x·y_i − ψ_i)` carries mass `1/N` of the uniform
//! density on `Ω₁`.

mod diagram;
mod linalg;
mod sampling;

pub use diagram::{cell_areas, Adjacency, LaguerreDiagram, BOUNDARY};
pub use sampling::{sample_target, sample_target_with, LLOYD_STEPS};

use crate::geometry::{HoledDomain, Vec2};
use crate::potential::DiscretePotential;
use serde::{Deserialize, Serialize};

/// Hole densities visited when the plain initialization leaves a cell empty:
/// halving from 1 down to about 1e-4, then 0.
fn continuation() -> Vec<f64> {
    let mut eps: Vec<f64> = (0..14).map(|k| 0.5f64.powi(k)).collect();
    eps.push(0.0);
    eps
}

/// Step halvings tried before a Newton step is declared failed.
const MAX_HALVINGS: usize = 40;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SdotError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no convergence after {} iterations, residual {:.3e}", .0.iterations, .0.max_area_residual)]
    NonConvergence(Box<SolveReport>),
    #[error("cell {index} has no mass at initialization")]
    EmptyCell { index: usize },
}

/// Convergence record of a solve.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub max_area_residual: f64,
    /// Accepted step length of every Newton iteration.
    pub damping_history: Vec<f64>,
    /// Maximal area residual before every Newton iteration, and at the end.
    pub residual_history: Vec<f64>,
    /// Hole densities visited (a single `0` when no continuation was needed).
    pub continuation: Vec<f64>,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Relative tolerance of the conjugate-gradient solves.
    pub cg_tol: f64,
}

impl SolverOptions {
    pub fn new(tol: f64, max_iter: usize) -> Self {
        Self { tol, max_iter, cg_tol: 1e-12 }
    }
}

/// Converged weights, their diagram and the report.
#[derive(Clone, Debug)]
pub struct Solution {
    pub weights: Vec<f64>,
    pub diagram: LaguerreDiagram,
    pub report: SolveReport,
}

impl Solution {
    pub fn potential(&self) -> DiscretePotential {
        DiscretePotential::new(self.diagram.seeds.clone(), self.weights.clone()).expect("solver output is finite")
    }
}

/// Damped Newton iteration on the weights (see [`solve`]).
pub fn solve_weights(dom: &HoledDomain, seeds: &[Vec2], tol: f64, max_iter: usize) -> Result<Solution, SdotError> {
    solve(dom, seeds, &SolverOptions::new(tol, max_iter))
}

/// Solves `|cell_i ∩ Ω₁| = |Ω₁|/N` for all `i`.
///
/// Newton steps solve `L Δ = A(ψ) − |Ω₁|/N` where `L` is the graph Laplacian
/// with edge weights `|shared edge ∩ Ω₁| / |y_i − y_j|`; a step of length `τ`
/// is kept only if the smallest cell keeps half its mass, the ℓ² residual
/// drops by the factor `1 − τ/2` and, on the final problem, the maximal
/// residual does not grow.
///
/// The initialization `ψ_i = |y_i|²/2` is tried first, then a shrunken
/// copy of the seeds placed inside `Ω₀`. If cells are still empty the hole
/// density is lowered gradually from 1 to 0, each stage started from the
/// previous solution.
pub fn solve(dom: &HoledDomain, seeds: &[Vec2], opts: &SolverOptions) -> Result<Solution, SdotError> {
    let n = seeds.len();
    if n == 0 {
        return Err(SdotError::InvalidParameter("no seeds".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(SdotError::InvalidParameter("tolerance must be positive".into()));
    }
    if has_duplicates(seeds) {
        return Err(SdotError::InvalidParameter("seeds must be distinct".into()));
    }
    let mut report = SolveReport::default();
    let identity: Vec<f64> = seeds.iter().map(|y| 0.5 * y.norm_squared()).collect();
    let diag = LaguerreDiagram::compute(dom, seeds, &identity, None);
    let (start, stages): (LaguerreDiagram, Vec<f64>) = if diag.clipped_areas.iter().all(|&a| a > 0.0) {
        (diag, vec![0.0])
    } else {
        let (psi, refs) = shrunken_voronoi(dom, seeds);
        let diag = LaguerreDiagram::compute(dom, seeds, &psi, Some(&refs));
        if diag.clipped_areas.iter().all(|&a| a > 0.0) {
            (diag, vec![0.0])
        } else {
            if let Some(index) = diag.masses(1.0).iter().position(|&m| !(m > 0.0)) {
                return Err(SdotError::EmptyCell { index });
            }
            (diag, continuation())
        }
    };
    let mut diag = start;
    for (k, &eps) in stages.iter().enumerate() {
        report.continuation.push(eps);
        let last = k + 1 == stages.len();
        let target = (dom.area() + eps * hole_area(dom)) / n as f64;
        let tol = if last { opts.tol } else { opts.tol.max(0.2 * target) };
        diag = newton_stage(dom, diag, eps, tol, opts, &mut report)?;
    }
    let mut weights = diag.weights.clone();
    let min = weights.iter().cloned().fold(f64::INFINITY, f64::min);
    for w in &mut weights {
        *w -= min;
    }
    // recompute with normalized weights so the diagram matches exactly
    let diagram = LaguerreDiagram::compute(dom, seeds, &weights, Some(&diag.barycenters));
    report.max_area_residual = max_residual(&diagram.masses(0.0), dom.area() / n as f64);
    report.converged = report.max_area_residual <= opts.tol;
    Ok(Solution { weights, diagram, report })
}

fn hole_area(dom: &HoledDomain) -> f64 {
    dom.holes().iter().map(|h| h.polygon.area()).sum()
}

fn has_duplicates(seeds: &[Vec2]) -> bool {
    let mut sorted: Vec<(f64, f64)> = seeds.iter().map(|s| (s.x, s.y)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    sorted.windows(2).any(|w| w[0] == w[1])
}

fn l2_residual(masses: &[f64], target: f64) -> f64 {
    masses.iter().map(|m| (m - target).powi(2)).sum::<f64>().sqrt()
}

fn max_residual(masses: &[f64], target: f64) -> f64 {
    masses.iter().map(|m| (m - target).abs()).fold(0.0, f64::max)
}

/// Weights making the Laguerre diagram the Voronoi diagram of
/// `z_i = c₀ + s(y_i − c₂)`, a copy of the seeds shrunk into `Ω₀`.
fn shrunken_voronoi(dom: &HoledDomain, seeds: &[Vec2]) -> (Vec<f64>, Vec<Vec2>) {
    let outer = dom.outer_polygon();
    let c0 = outer.barycenter();
    let c2 = seeds.iter().sum::<Vec2>() / seeds.len() as f64;
    let spread = seeds.iter().map(|y| (y - c2).norm()).fold(0.0, f64::max).max(1e-300);
    let inradius = outer.boundary_distance(c0);
    let s = 0.5 * inradius / spread;
    let z: Vec<Vec2> = seeds.iter().map(|y| c0 + (y - c2) * s).collect();
    (z.iter().map(|z| z.norm_squared() / (2.0 * s)).collect(), z)
}

fn newton_stage(
    dom: &HoledDomain,
    mut diag: LaguerreDiagram,
    eps: f64,
    tol: f64,
    opts: &SolverOptions,
    report: &mut SolveReport,
) -> Result<LaguerreDiagram, SdotError> {
    let n = diag.len();
    let target = (dom.area() + eps * hole_area(dom)) / n as f64;
    let seeds = diag.seeds.clone();
    let mut masses = diag.masses(eps);
    let mut residual = max_residual(&masses, target);
    // damping carried across iterations: start from twice the last accepted step
    let mut tau0: f64 = 1.0;
    loop {
        report.residual_history.push(residual);
        report.max_area_residual = residual;
        if residual <= tol {
            return Ok(diag);
        }
        if report.iterations >= opts.max_iter {
            return Err(SdotError::NonConvergence(Box::new(report.clone())));
        }
        report.iterations += 1;
        let rhs: Vec<f64> = masses.iter().map(|m| m - target).collect();
        let lap = linalg::Laplacian::assemble(&diag, eps);
        let step = lap.solve_pinned(&rhs, opts.cg_tol);
        let min_mass = masses.iter().cloned().fold(f64::INFINITY, f64::min);
        let residual2 = l2_residual(&masses, target);
        let mut tau = tau0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let psi: Vec<f64> = diag.weights.iter().zip(&step).map(|(w, d)| w + tau * d).collect();
            let trial = LaguerreDiagram::compute(dom, &seeds, &psi, Some(&diag.barycenters));
            let m = trial.masses(eps);
            let r = max_residual(&m, target);
            let trial_min = m.iter().cloned().fold(f64::INFINITY, f64::min);
            let r2 = l2_residual(&m, target);
            if trial_min >= 0.5 * min_mass && r2 <= (1.0 - 0.5 * tau) * residual2 && (r <= residual || eps > 0.0) {
                accepted = Some((trial, m, r));
                break;
            }
            tau *= 0.5;
        }
        match accepted {
            Some((trial, m, r)) => {
                report.damping_history.push(tau);
                tau0 = (2.0 * tau).min(1.0);
                diag = trial;
                masses = m;
                residual = r;
            }
            None => {
                report.damping_history.push(0.0);
                return Err(SdotError::NonConvergence(Box::new(report.clone())));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ConvexPolygon, DomainSpec, OuterSpec};

    fn unit_square() -> HoledDomain {
        HoledDomain::new(&DomainSpec {
            outer: OuterSpec::Polygon { vertices: vec![[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]] },
            holes: vec![],
            delta: 0.1,
            resolution: None,
        })
        .unwrap()
    }

    #[test]
    fn single_seed() {
        let dom = unit_square();
        let sol = solve_weights(&dom, &[Vec2::new(0.2, 0.1)], 1e-9, 10).unwrap();
        assert_eq!(sol.weights, vec![0.0]);
        assert!((sol.diagram.clipped_areas[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_pair_splits_in_half() {
        let dom = unit_square();
        let seeds = [Vec2::new(-0.3, 0.0), Vec2::new(0.3, 0.0)];
        let sol = solve_weights(&dom, &seeds, 1e-12, 20).unwrap();
        assert!((sol.weights[0] - sol.weights[1]).abs() < 1e-14);
        assert!((sol.diagram.clipped_areas[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn small_square_to_square() {
        let dom = unit_square();
        let target = ConvexPolygon::rectangle(-0.5, -0.5, 0.5, 0.5).unwrap();
        let seeds = sample_target(&target, 100, 1).unwrap();
        let sol = solve_weights(&dom, &seeds, 1e-10, 50).unwrap();
        assert!(sol.report.converged);
        assert!(sol.weights.iter().cloned().fold(f64::INFINITY, f64::min) == 0.0);
        // residual history is non-increasing across accepted steps
        for w in sol.report.residual_history.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn annulus_needs_continuation() {
        let dom = HoledDomain::annulus(0.3, 0.05).unwrap();
        let disk = ConvexPolygon::regular(Vec2::zeros(), 1.0 / std::f64::consts::PI.sqrt(), 256);
        let seeds = sample_target(&disk, 200, 4).unwrap();
        let sol = solve_weights(&dom, &seeds, 1e-9, 200).unwrap();
        assert!(sol.report.converged, "{:?}", sol.report);
        assert!(sol.report.continuation.len() > 1);
        let total: f64 = sol.diagram.clipped_areas.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }
}
