//! The subcommands. Each returns the finished run directory; failures that
//! leave useful artifacts behind still write the manifest first.

use crate::config::{AnalysisConfig, ExperimentConfig, Fixture, OracleConfig, PltConfig};
use crate::run::{verify_run, Check, RunArtifact, Verification};
use crate::{svg, CliError};
use brenier_core::estimates::{
    blowup_fit, compensated_sum, discretization_depth, field_series, hessian_field, holder_half_seminorm,
    holder_pairs, holder_seminorm, ring_points, w2p_estimate, BlowupFit, FieldOptions, FieldSample, NormReport,
};
use brenier_core::geometry::{ConvexPolygon, HoledDomain};
use brenier_core::legendre::{fixtures, mixed_ratio, plt, plt_residuals, GridFunction, PltResiduals, Region};
use brenier_core::potential::{ConvexPotential, DiscretePotential, ModelPotential};
use brenier_core::sdot::{sample_target_with, solve, SdotError, SolverOptions};
use brenier_core::sections::{centered_section, diagnostics, tangent_audit, CaseLabel, SectionError, TangentAudit};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write;
use std::path::Path;

/// Acceptance window of the blow-up slope against the exact potential.
pub const MODEL_SLOPE: (f64, f64) = (-0.52, -0.48);
/// Acceptance window of the blow-up slope against a solved potential.
pub const DISCRETE_SLOPE: (f64, f64) = (-0.65, -0.35);
/// Default fitting band for the exact potential.
pub const MODEL_BAND: (f64, f64) = (1e-4, 1e-2);
/// Smallest share of near-boundary maximal sections in the model regime.
pub const MODEL_SHARE: f64 = 0.9;
/// Bound on `(Λ² + sup d)/λ` in the model regime.
pub const MODEL_RATIO_MAX: f64 = 10.0;
/// Bound on the engulfing dilation.
pub const ENGULFING_MAX: f64 = 20.0;
/// Levels of the norm refinement series.
pub const SERIES_LEVELS: usize = 6;
/// Minimal residual contraction under grid halving.
pub const PLT_CONTRACTION: f64 = 3.5;

fn other(e: impl std::fmt::Display) -> CliError {
    CliError::Other(e.to_string())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Which potential an analysis runs on; fixes the defaults that depend on it.
#[derive(Clone, Copy, Debug)]
enum Subject {
    /// A solved potential with this many seeds.
    Discrete(usize),
    Model,
}

impl Subject {
    /// Smallest boundary distance at which the Hessian surrogate is trusted.
    fn d_min(&self, analysis: &AnalysisConfig) -> f64 {
        match self {
            Subject::Discrete(n) => discretization_depth(*n),
            Subject::Model => analysis.d_band.map_or(MODEL_BAND.0, |b| b[0]),
        }
    }

    fn band(&self, analysis: &AnalysisConfig) -> (f64, f64) {
        match (analysis.d_band, self) {
            (Some([lo, hi]), _) => (lo, hi),
            (None, Subject::Discrete(n)) => (discretization_depth(*n), 10.0 * discretization_depth(*n)),
            (None, Subject::Model) => MODEL_BAND,
        }
    }

    fn slope_window(&self) -> (f64, f64) {
        match self {
            Subject::Discrete(_) => DISCRETE_SLOPE,
            Subject::Model => MODEL_SLOPE,
        }
    }
}

// ---------------------------------------------------------------- solve

/// Samples `Ω₂`, solves for the weights and stores potential, report,
/// cell table and diagram. Non-convergence keeps the report and manifest
/// and returns [`CliError::Solver`].
pub fn cmd_solve(cfg: &ExperimentConfig, out: &Path) -> Result<RunArtifact, CliError> {
    let dom = cfg.domain()?;
    let target = cfg.target_polygon()?;
    let s = &cfg.solver;
    let seeds = sample_target_with(&target, s.n_seeds, s.rng_seed, s.lloyd_steps).map_err(|e| CliError::Solver(e.to_string()))?;
    let mut run = RunArtifact::create(out, "solve", &cfg.canonical_bytes(), &[])?;
    match solve(&dom, &seeds, &SolverOptions::new(s.tol, s.max_iter)) {
        Ok(sol) => {
            let u = sol.potential();
            let mut json = u.to_json();
            json.push('\n');
            run.write("potential.json", json.as_bytes())?;
            run.write_json("solve_report.json", &sol.report)?;
            let mut csv = String::from("index,seed_x,seed_y,weight,area,hole_area,barycenter_x,barycenter_y\n");
            for i in 0..sol.weights.len() {
                let (y, b) = (sol.diagram.seeds[i], sol.diagram.barycenters[i]);
                let _ = writeln!(
                    csv,
                    "{i},{},{},{},{},{},{},{}",
                    y.x, y.y, sol.weights[i], sol.diagram.clipped_areas[i], sol.diagram.hole_areas[i], b.x, b.y
                );
            }
            run.write("cells.csv", csv.as_bytes())?;
            let cells: Vec<&ConvexPolygon> = sol.diagram.cells.iter().flatten().collect();
            let holes: Vec<&ConvexPolygon> = dom.holes().iter().map(|h| &h.polygon).collect();
            run.write("diagram.svg", svg::polygons("Laguerre cells", &cells, &holes, &[]).as_bytes())?;
            let res = sol.report.max_area_residual;
            run.check(Check::new(
                "area residual",
                sol.report.converged && res < s.tol,
                format!("{res:.3e} after {} iterations (tolerance {:.1e})", sol.report.iterations, s.tol),
            ));
            let total = compensated_sum(sol.diagram.clipped_areas.iter().copied());
            let gap = (total - dom.area()).abs();
            run.check(Check::new(
                "mass balance",
                gap <= s.n_seeds as f64 * s.tol + 1e-12,
                format!("|sum of cell areas - |domain|| = {gap:.3e}"),
            ));
            run.finish()?;
            Ok(run)
        }
        Err(SdotError::NonConvergence(report)) => {
            run.write_json("solve_report.json", &*report)?;
            let detail = format!("{:.3e} after {} iterations", report.max_area_residual, report.iterations);
            run.check(Check::new("area residual", false, detail.clone()));
            run.finish()?;
            Err(CliError::Solver(format!("no convergence: {detail}; artifacts kept in {}", run.dir.display())))
        }
        Err(e) => {
            run.check(Check::new("area residual", false, e.to_string()));
            run.finish()?;
            Err(CliError::Solver(e.to_string()))
        }
    }
}

fn load_potential(path: &Path) -> Result<(Vec<u8>, DiscretePotential), CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    let u = DiscretePotential::from_json(text).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    Ok((bytes, u))
}

// -------------------------------------------------------------- analyze

/// Aggregates of the tangent-section audit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalyzeSummary {
    /// Boundary distance below which points are listed but not audited.
    pub d_min: f64,
    pub points: usize,
    pub audited: usize,
    pub failures: usize,
    /// Audited points whose maximal section touches a hole.
    pub tangent: usize,
    /// Of those, the boundary sections in the model regime with bounded
    /// `(Λ² + sup d)/λ`.
    pub model_like: usize,
    pub model_share: f64,
    pub max_model_ratio: f64,
    pub max_engulfing: f64,
    /// `C = max η·d^{1/2}` over all audited points.
    pub fitted_c: f64,
    /// Log-log slope of the upper envelope of `η·d^{1/2}` against `d`, with
    /// its 95% interval; significantly negative means faster blow-up than
    /// `d^{-1/2}`, which no single `C` would survive as `d → 0`.
    pub c_trend: Option<f64>,
    pub c_trend_ci: Option<(f64, f64)>,
    /// Largest `η·d^{1/2}` on the inner half of the distances over the
    /// largest on the outer half.
    pub inner_excess: f64,
    pub sections: usize,
    pub section_failures: usize,
}

/// Tangent-section audit of a solved potential: `analyze.csv` per point,
/// `sections.csv` per boundary point and height, and a summary.
pub fn cmd_analyze(cfg: &ExperimentConfig, potential: &Path, out: &Path) -> Result<RunArtifact, CliError> {
    let dom = cfg.domain()?;
    let (bytes, u) = load_potential(potential)?;
    let mut run = RunArtifact::create(out, "analyze", &cfg.canonical_bytes(), &[("potential.json", &bytes)])?;
    analyze_into(&u, &dom, &cfg.analysis, Subject::Discrete(u.len()), &mut run)?;
    run.finish()?;
    Ok(run)
}

fn analyze_into<P: ConvexPotential>(
    u: &P,
    dom: &HoledDomain,
    analysis: &AnalysisConfig,
    subject: Subject,
    run: &mut RunArtifact,
) -> Result<AnalyzeSummary, CliError> {
    let d_min = subject.d_min(analysis);
    let d_top = 0.5 * dom.delta();
    let opts = FieldOptions {
        level: FieldOptions::level_for_depth(d_top, d_min),
        d_top,
        sublayers: analysis.sublayers,
        angular: analysis.angular,
        bulk_spacing: None,
        min_depth: 0.0,
    };
    let points = ring_points(dom, &opts);
    let thr = &analysis.thresholds;
    let audits: Vec<Option<Result<TangentAudit, SectionError>>> = points
        .par_iter()
        .map(|&(x, d)| (d >= d_min).then(|| tangent_audit(u, dom, x, thr)))
        .collect();

    let mut csv = String::from("x,y,d,h_bar,lambda,Lambda,eta,exterior_fraction,l_ratio,case,K_engulf\n");
    for (&(x, d), a) in points.iter().zip(&audits) {
        match a {
            Some(Ok(a)) => {
                let b = a.boundary.as_ref();
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    x.x,
                    x.y,
                    d,
                    a.height,
                    a.lambda,
                    a.big_lambda,
                    a.eccentricity,
                    opt(b.map(|b| b.exterior_fraction)),
                    opt(b.map(|b| b.tangent_length_ratio)),
                    b.map_or("none".to_string(), |b| format!("{:?}", b.case)),
                    opt(a.engulfing_k),
                );
            }
            Some(Err(_)) => {
                let _ = writeln!(csv, "{},{},{d},,,,,,,failed,", x.x, x.y);
            }
            None => {
                let _ = writeln!(csv, "{},{},{d},,,,,,,unresolved,", x.x, x.y);
            }
        }
    }
    run.write("analyze.csv", csv.as_bytes())?;

    let ok: Vec<&TangentAudit> = audits.iter().flatten().flatten().collect();
    let failures = audits.iter().flatten().filter(|a| a.is_err()).count();
    let tangent: Vec<&TangentAudit> = ok.iter().copied().filter(|a| a.boundary.is_some()).collect();
    let model_like = tangent
        .iter()
        .filter(|a| a.boundary.is_some_and(|b| b.case == CaseLabel::ModelGeometry && b.model_ratio() <= MODEL_RATIO_MAX))
        .count();
    let max_model_ratio = tangent.iter().filter_map(|a| a.boundary.map(|b| b.model_ratio())).fold(0.0, f64::max);
    let max_engulfing = ok.iter().filter_map(|a| a.engulfing_k).fold(0.0, f64::max);
    let (fitted_c, inner_excess) = fit_constant(&ok);
    let scaled: Vec<FieldSample> = ok
        .iter()
        .map(|a| FieldSample { point: a.point, d: a.d, hessian_proxy: a.eccentricity * a.d.sqrt(), weight: 0.0 })
        .collect();
    let d_hi = ok.iter().map(|a| a.d).fold(0.0, f64::max);
    let trend = blowup_fit(&scaled, (d_min, d_hi)).ok();

    let (sections_csv, sections, section_failures) = section_table(u, dom, analysis);
    run.write("sections.csv", sections_csv.as_bytes())?;

    let summary = AnalyzeSummary {
        d_min,
        points: points.len(),
        audited: ok.len() + failures,
        failures,
        tangent: tangent.len(),
        model_like,
        model_share: if tangent.is_empty() { 0.0 } else { model_like as f64 / tangent.len() as f64 },
        max_model_ratio,
        max_engulfing,
        fitted_c,
        c_trend: trend.as_ref().map(|f| f.slope),
        c_trend_ci: trend.as_ref().map(|f| f.ci),
        inner_excess,
        sections,
        section_failures,
    };
    run.write_json("analyze_summary.json", &summary)?;
    run.check(Check::new(
        "model regime near holes",
        !tangent.is_empty() && summary.model_share >= MODEL_SHARE,
        format!("{model_like}/{} tangent sections", tangent.len()),
    ));
    run.check(Check::new(
        "engulfing",
        max_engulfing <= ENGULFING_MAX,
        format!("max K = {max_engulfing:.3}"),
    ));
    // η·√d may drift only as far as the exponent window allows the slope to
    let (lo, hi) = subject.slope_window();
    let drift = (lo + 0.5, hi + 0.5);
    run.check(match &trend {
        Some(f) => Check::new(
            "blow-up constant",
            fitted_c.is_finite() && f.ci.1 >= drift.0 && f.ci.0 <= drift.1,
            format!(
                "C = {fitted_c:.4}, eta*sqrt(d) trend {:.4} (95% CI [{:.4}, {:.4}], allowed [{:.2}, {:.2}])",
                f.slope, f.ci.0, f.ci.1, drift.0, drift.1
            ),
        ),
        None => Check::new("blow-up constant", false, "too few audited points for a trend"),
    });
    Ok(summary)
}

/// `C = max η·√d` over all audits, and the largest `η·√d` below the median
/// distance over the largest above it.
fn fit_constant(audits: &[&TangentAudit]) -> (f64, f64) {
    let mut ds: Vec<f64> = audits.iter().map(|a| a.d).collect();
    if ds.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    ds.sort_by(f64::total_cmp);
    let median = ds[ds.len() / 2];
    let scaled = |a: &&TangentAudit| a.eccentricity * a.d.sqrt();
    let outer = audits.iter().filter(|a| a.d >= median).map(scaled).fold(0.0, f64::max);
    let inner = audits.iter().filter(|a| a.d < median).map(scaled).fold(0.0, f64::max);
    (outer.max(inner), inner / outer)
}

/// Sections centered on each hole at `angular` points and every height.
fn section_table<P: ConvexPotential>(u: &P, dom: &HoledDomain, analysis: &AnalysisConfig) -> (String, usize, usize) {
    let mut jobs = Vec::new();
    for (k, hole) in dom.holes().iter().enumerate() {
        for j in 0..analysis.angular {
            let theta = std::f64::consts::TAU * (j as f64 + 0.5) / analysis.angular as f64;
            for &h in &analysis.heights {
                jobs.push((k, theta, hole.shape.point_at(theta), h));
            }
        }
    }
    let rows: Vec<String> = jobs
        .par_iter()
        .map(|&(k, theta, y, h)| match centered_section(u, y, h) {
            Ok(sec) => {
                let d = diagnostics(&sec, dom, &analysis.thresholds);
                format!(
                    "{k},{theta},{},{},{h},{},{},{},{},{},{},{},{},{:?}",
                    y.x,
                    y.y,
                    sec.area(),
                    sec.diameter(),
                    d.lambda,
                    d.big_lambda,
                    d.eccentricity,
                    d.exterior_fraction,
                    d.tangent_length_ratio,
                    d.sup_distance,
                    d.case
                )
            }
            Err(_) => format!("{k},{theta},{},{},{h},,,,,,,,,failed", y.x, y.y),
        })
        .collect();
    let failures = rows.iter().filter(|r| r.ends_with("failed")).count();
    let mut csv = String::from(
        "hole,theta,x,y,h,area,diameter,lambda,Lambda,eta,exterior_fraction,l_ratio,sup_d,case\n",
    );
    for r in &rows {
        csv.push_str(r);
        csv.push('\n');
    }
    (csv, rows.len(), failures)
}

// --------------------------------------------------------------- report

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormSeries {
    pub p: f64,
    pub value: f64,
    pub levels: Vec<usize>,
    pub series: Vec<f64>,
    pub increments: Vec<f64>,
    pub last_relative_change: f64,
}

impl From<NormReport> for NormSeries {
    fn from(r: NormReport) -> Self {
        Self {
            p: r.p,
            value: r.value,
            increments: r.increments(),
            last_relative_change: r.last_relative_change(),
            levels: r.levels,
            series: r.refinement_series,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolderReport {
    pub pairs: usize,
    pub half: f64,
    pub three_quarter: f64,
}

/// Contents of `report.json`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub band: (f64, f64),
    /// `None` when the band holds too few samples (see `fit_error`).
    pub slope: Option<f64>,
    pub ci: Option<(f64, f64)>,
    pub slope_window: (f64, f64),
    pub fit: Option<BlowupFit>,
    pub fit_error: Option<String>,
    pub norms: Vec<NormSeries>,
    pub holder: Option<HolderReport>,
}

/// Blow-up fit, `W^{2,p}` refinement series and Hölder quotients of a
/// solved potential.
pub fn cmd_report(cfg: &ExperimentConfig, potential: &Path, out: &Path) -> Result<RunArtifact, CliError> {
    let dom = cfg.domain()?;
    let (bytes, u) = load_potential(potential)?;
    let mut run = RunArtifact::create(out, "report", &cfg.canonical_bytes(), &[("potential.json", &bytes)])?;
    report_into(&u, &dom, &cfg.analysis, Subject::Discrete(u.len()), cfg.solver.rng_seed, &mut run)?;
    run.finish()?;
    Ok(run)
}

fn report_into<P: ConvexPotential>(
    u: &P,
    dom: &HoledDomain,
    analysis: &AnalysisConfig,
    subject: Subject,
    seed: u64,
    run: &mut RunArtifact,
) -> Result<Report, CliError> {
    let band = subject.band(analysis);
    let half_delta = 0.5 * dom.delta();
    let fit_top = analysis.d_top.unwrap_or(half_delta).max(band.1);
    let fit_opts = FieldOptions {
        level: FieldOptions::level_for_depth(fit_top, band.0),
        d_top: fit_top,
        sublayers: analysis.sublayers,
        angular: analysis.angular,
        bulk_spacing: None,
        min_depth: 0.0,
    };
    let field = hessian_field(u, dom, &fit_opts).map_err(other)?;
    let (fit, fit_error) = match blowup_fit(&field, band) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };

    let norms = if analysis.p_values.is_empty() {
        Vec::new()
    } else {
        let top = analysis.d_top.unwrap_or(half_delta).min(half_delta);
        let deepest = match subject {
            Subject::Model => analysis.grid_level,
            Subject::Discrete(_) => analysis.grid_level.min(FieldOptions::level_for_depth(top, subject.d_min(analysis))),
        }
        .max(1);
        let levels: Vec<usize> = (deepest.saturating_sub(SERIES_LEVELS - 1).max(1)..=deepest).collect();
        let base = FieldOptions {
            level: deepest,
            d_top: top,
            sublayers: analysis.sublayers,
            angular: analysis.angular,
            bulk_spacing: analysis.bulk_fraction.map(|f| f * dom.delta()),
            min_depth: match subject {
                Subject::Model => 0.0,
                Subject::Discrete(_) => subject.d_min(analysis),
            },
        };
        let series = field_series(u, dom, &base, &levels).map_err(other)?;
        analysis
            .p_values
            .iter()
            .map(|&p| w2p_estimate(&series, p).map(NormSeries::from).map_err(other))
            .collect::<Result<Vec<_>, _>>()?
    };

    let holder = (analysis.holder_pairs > 0).then(|| {
        let pairs = holder_pairs(dom, analysis.holder_pairs, seed);
        HolderReport {
            pairs: pairs.len(),
            half: holder_half_seminorm(u, &pairs),
            three_quarter: holder_seminorm(u, &pairs, 0.75),
        }
    });

    let window = subject.slope_window();
    let report = Report {
        band,
        slope: fit.as_ref().map(|f| f.slope),
        ci: fit.as_ref().map(|f| f.ci),
        slope_window: window,
        fit: fit.clone(),
        fit_error: fit_error.clone(),
        norms,
        holder,
    };
    run.write_json("report.json", &report)?;

    let in_band: Vec<(f64, f64)> =
        field.iter().filter(|s| s.d >= band.0 && s.d <= band.1).map(|s: &FieldSample| (s.d, s.hessian_proxy)).collect();
    let envelope = fit.as_ref().map(|f| f.envelope.clone()).unwrap_or_default();
    let plot = svg::loglog_scatter(
        "Hessian surrogate near the holes",
        &in_band,
        &envelope,
        fit.as_ref().map(|f| (f.slope, f.intercept)),
        "d",
        "eta",
    );
    run.write("blowup.svg", plot.as_bytes())?;
    let lines: Vec<(String, Vec<(f64, f64)>)> = report
        .norms
        .iter()
        .map(|n| {
            let last = n.value.abs().max(f64::MIN_POSITIVE);
            (format!("p = {}", n.p), n.levels.iter().zip(&n.series).map(|(&l, &v)| (l as f64, v / last)).collect())
        })
        .collect();
    run.write("refinement.svg", svg::line_series("W2p refinement (relative to finest level)", &lines, "level", "value").as_bytes())?;

    match (&fit, &fit_error) {
        (Some(f), _) => run.check(Check::new(
            "blow-up slope",
            f.slope >= window.0 && f.slope <= window.1,
            format!("{:.4} (95% CI [{:.4}, {:.4}]) in [{}, {}]", f.slope, f.ci.0, f.ci.1, window.0, window.1),
        )),
        (None, e) => run.check(Check::new("blow-up slope", false, e.clone().unwrap_or_default())),
    }
    Ok(report)
}

// --------------------------------------------------------------- oracle

/// Report and section audit of the exact annulus potential.
pub fn cmd_oracle(cfg: &OracleConfig, out: &Path) -> Result<RunArtifact, CliError> {
    let dom = HoledDomain::annulus(cfg.r, cfg.delta).map_err(|e| CliError::Schema(format!("r: {e}")))?;
    let u = ModelPotential::new(dom.holes()[0].shape.size()).map_err(|e| CliError::Schema(format!("r: {e}")))?;
    let mut run = RunArtifact::create(out, "oracle", &cfg.canonical_bytes(), &[])?;
    report_into(&u, &dom, &cfg.analysis, Subject::Model, cfg.rng_seed, &mut run)?;
    analyze_into(&u, &dom, &cfg.analysis, Subject::Model, &mut run)?;
    run.finish()?;
    Ok(run)
}

// ------------------------------------------------------------------ plt

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PltLevel {
    pub grid: usize,
    pub residuals: Option<PltResiduals>,
    /// Largest deviation from the closed-form conjugate, where known.
    pub max_error: Option<f64>,
}

/// Contents of `plt.json`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PltReport {
    pub fixture: Fixture,
    pub coarse: PltLevel,
    pub fine: PltLevel,
    /// Coarse over fine residuals, component by component.
    pub contraction: Option<(f64, f64, f64)>,
    /// `(K, sup |w₁₂|/w₁₁)` for the shear fixture.
    pub mixed_ratios: Vec<(f64, f64)>,
}

const QUADRATIC_A: f64 = 2.0;
const FLAT_GAMMA: f64 = 0.2;
const FLAT_BETA: f64 = 0.3;
const SHEARS: [f64; 4] = [1.0, 2.0, 4.0, 8.0];

fn fixture_grid(fixture: Fixture, n: usize) -> Result<GridFunction, CliError> {
    match fixture {
        Fixture::Quadratic => fixtures::quadratic_grid(QUADRATIC_A, 1.0, n),
        Fixture::FlatBoundary => fixtures::flat_boundary_grid(FLAT_GAMMA, FLAT_BETA, 0.5, n),
        Fixture::Perturbed => GridFunction::square(fixtures::perturbed_primal, 0.5, n),
        Fixture::Sheared => fixtures::sheared_grid(1.0, 1.0, n),
    }
    .map_err(other)
}

fn plt_level(fixture: Fixture, n: usize) -> Result<PltLevel, CliError> {
    if fixture == Fixture::Sheared {
        return Ok(PltLevel { grid: n, residuals: None, max_error: None });
    }
    let ws = plt(&fixture_grid(fixture, n)?).map_err(other)?;
    let residuals = plt_residuals(&ws).map_err(other)?;
    let max_error = (fixture == Fixture::Quadratic).then(|| {
        let g = &ws.grid;
        (0..g.n2)
            .flat_map(|j| (0..g.n1).map(move |i| (i, j)))
            .map(|(i, j)| (g.at(i, j) - fixtures::quadratic_conjugate(QUADRATIC_A, g.x1_at(i), g.x2_at(j))).abs())
            .fold(0.0, f64::max)
    });
    Ok(PltLevel { grid: n, residuals: Some(residuals), max_error })
}

/// Partial Legendre transform of a fixture on a grid and on the grid with
/// half the spacing, with the residuals of the transformed equation.
pub fn cmd_plt(cfg: &PltConfig, out: &Path) -> Result<RunArtifact, CliError> {
    cfg.validate()?;
    let mut run = RunArtifact::create(out, "plt", &cfg.canonical_bytes(), &[])?;
    let coarse = plt_level(cfg.fixture, cfg.grid)?;
    let fine = plt_level(cfg.fixture, 2 * cfg.grid - 1)?;
    let contraction = match (&coarse.residuals, &fine.residuals) {
        (Some(c), Some(f)) => Some((
            c.upper_laplacian / f.upper_laplacian,
            c.lower_linearity / f.lower_linearity,
            c.flux_jump / f.flux_jump,
        )),
        _ => None,
    };
    let mixed_ratios = if cfg.fixture == Fixture::Sheared {
        let region = Region { x1: (-0.5, 0.5), x2: (-0.5, 0.5) };
        SHEARS
            .iter()
            .map(|&k| {
                let w = fixtures::sheared_grid(k, 1.0, cfg.grid).map_err(other)?;
                Ok((k, mixed_ratio(&w, &region).map_err(other)?))
            })
            .collect::<Result<Vec<_>, CliError>>()?
    } else {
        Vec::new()
    };
    let report = PltReport { fixture: cfg.fixture, coarse, fine, contraction, mixed_ratios };
    run.write_json("plt.json", &report)?;
    let check = match cfg.fixture {
        Fixture::Quadratic => {
            let err = report.coarse.max_error.unwrap_or(f64::NAN).max(report.fine.max_error.unwrap_or(f64::NAN));
            Check::new("closed-form conjugate", err < 1e-10, format!("max error {err:.3e}"))
        }
        Fixture::FlatBoundary => {
            let (a, b, c) = contraction.unwrap_or((f64::NAN, f64::NAN, f64::NAN));
            Check::new(
                "residual contraction",
                a.min(b).min(c) >= PLT_CONTRACTION,
                format!("{a:.2}, {b:.2}, {c:.2} under grid halving"),
            )
        }
        Fixture::Perturbed => {
            let r = report.fine.residuals.map_or(f64::NAN, |r| r.upper_laplacian);
            Check::new("residual persists", r > 0.05, format!("upper Laplacian residual {r:.3e}"))
        }
        Fixture::Sheared => {
            let r = &report.mixed_ratios;
            let growth = r.last().map(|l| l.1).unwrap_or(0.0) / r.first().map(|f| f.1).unwrap_or(f64::NAN);
            let span = SHEARS[SHEARS.len() - 1] / SHEARS[0];
            Check::new("mixed ratio grows with shear", growth >= 0.9 * span, format!("growth {growth:.3} over K ratio {span}"))
        }
    };
    run.check(check);
    run.finish()?;
    Ok(run)
}

// --------------------------------------------------------------- verify

/// Re-hashes a run directory; fails with [`CliError::Verification`] when any
/// hash or recorded check fails.
pub fn cmd_verify(dir: &Path) -> Result<Verification, CliError> {
    let v = verify_run(dir)?;
    if v.passed() {
        Ok(v)
    } else {
        Err(CliError::Verification(v.summary().lines().filter(|l| l.starts_with("FAIL")).collect::<Vec<_>>().join("; ")))
    }
}
