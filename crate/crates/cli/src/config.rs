//! Experiment configuration: JSON schema, defaults and validation.

use crate::CliError;
use brenier_core::geometry::{ConvexPolygon, DomainSpec, HoledDomain, OuterSpec, Vec2};
use brenier_core::sections::{ClassifierThresholds, HEIGHT_CAP};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    /// `Ω₂`; rescaled to unit area about the origin.
    pub target: OuterSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default, skip_serializing)]
    pub runtime: RuntimeConfig,
}

/// Settings that do not change any result; they are left out of the hash.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RuntimeConfig {
    /// Worker threads (default: logical cores).
    pub threads: Option<usize>,
    /// Parent of the run directories (default `runs`).
    pub out_dir: Option<PathBuf>,
}

impl RuntimeConfig {
    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("runs"))
    }
}

/// The annulus oracle: exact potential with hole radius `r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    pub r: f64,
    pub delta: f64,
    /// Seed of the Hölder pair sampler.
    pub rng_seed: u64,
    pub analysis: AnalysisConfig,
    #[serde(skip_serializing)]
    pub runtime: RuntimeConfig,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { r: 0.3, delta: 0.05, rng_seed: 0, analysis: AnalysisConfig::default(), runtime: RuntimeConfig::default() }
    }
}

impl OracleConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = parse(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::from_json(&read(path)?)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(schema("r", "must be positive"));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(schema("delta", "must be positive"));
        }
        self.analysis.validate()
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        canonical(self)
    }
}

/// Grid functions with known partial Legendre transforms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fixture {
    /// `x₁² + x₂²` scaled; conjugate known in closed form.
    Quadratic,
    /// Solution of the flat-boundary problem built from its conjugate.
    FlatBoundary,
    /// A convex function with the wrong Monge-Ampère measure.
    Perturbed,
    /// `|∇²w|` fixed, mixed derivative growing with a shear factor.
    Sheared,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PltConfig {
    pub fixture: Fixture,
    /// Nodes per side of the coarse grid (odd); the fine grid halves the spacing.
    pub grid: usize,
    #[serde(skip_serializing)]
    pub runtime: RuntimeConfig,
}

impl Default for PltConfig {
    fn default() -> Self {
        Self { fixture: Fixture::FlatBoundary, grid: 41, runtime: RuntimeConfig::default() }
    }
}

impl PltConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = parse(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::from_json(&read(path)?)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.grid < 5 || self.grid % 2 == 0 {
            return Err(schema("grid", "must be odd and at least 5"));
        }
        Ok(())
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        canonical(self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub n_seeds: usize,
    /// Largest admissible `| |cell ∩ Ω₁| − 1/N |`.
    pub tol: f64,
    pub max_iter: usize,
    pub rng_seed: u64,
    pub lloyd_steps: usize,
    /// Vertices used for a disk target.
    pub target_resolution: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { n_seeds: 1000, tol: 1e-7, max_iter: 300, rng_seed: 0, lloyd_steps: 5, target_resolution: 256 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Heights of the boundary-centered sections listed by `analyze`.
    pub heights: Vec<f64>,
    /// Finest dyadic level of the norm refinement series.
    pub grid_level: usize,
    pub p_values: Vec<f64>,
    /// Fitting band for the blow-up exponent; chosen from the
    /// discretization depth when absent.
    pub d_band: Option<[f64; 2]>,
    /// Outer edge of the graded band around holes (default `δ/2`, widened
    /// to contain `d_band`).
    pub d_top: Option<f64>,
    /// Sample points around each hole, per layer.
    pub angular: usize,
    pub sublayers: usize,
    /// Side of the bulk squares, as a fraction of `δ`; `null` skips the bulk.
    pub bulk_fraction: Option<f64>,
    pub holder_pairs: usize,
    pub thresholds: ClassifierThresholds,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            heights: vec![1e-5, 1e-4, 1e-3, 5e-3],
            grid_level: 30,
            p_values: vec![1.5, 1.9, 2.0],
            d_band: None,
            d_top: None,
            angular: 32,
            sublayers: 4,
            bulk_fraction: Some(0.25),
            holder_pairs: 10_000,
            thresholds: ClassifierThresholds::default(),
        }
    }
}

fn schema(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Schema(format!("{path}: {msg}"))
}

fn parse<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        schema(if path.is_empty() { "." } else { &path }, e.into_inner())
    })
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| schema(&path.display().to_string(), e))
}

fn canonical<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("configuration serializes");
    out.push(b'\n');
    out
}

impl ExperimentConfig {
    /// Parses and validates; errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = parse(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::from_json(&read(path)?)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let s = &self.solver;
        if s.n_seeds == 0 {
            return Err(schema("solver.n_seeds", "must be positive"));
        }
        if !(s.tol > 0.0 && s.tol.is_finite()) {
            return Err(schema("solver.tol", "must be positive"));
        }
        if s.max_iter == 0 {
            return Err(schema("solver.max_iter", "must be positive"));
        }
        if self.runtime.threads == Some(0) {
            return Err(schema("runtime.threads", "must be positive"));
        }
        if s.target_resolution < 8 {
            return Err(schema("solver.target_resolution", "must be at least 8"));
        }
        self.analysis.validate()?;
        self.domain()?;
        self.target_polygon().map(|_| ())
    }

    pub fn domain(&self) -> Result<HoledDomain, CliError> {
        HoledDomain::new(&self.domain).map_err(|e| schema("domain", e))
    }

    /// `Ω₂` at unit area.
    pub fn target_polygon(&self) -> Result<ConvexPolygon, CliError> {
        let raw = match &self.target {
            OuterSpec::Polygon { vertices } => {
                ConvexPolygon::new(vertices.iter().map(|v| Vec2::new(v[0], v[1])).collect())
                    .map_err(|e| schema("target.vertices", e))?
            }
            OuterSpec::Disk { center, radius } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(schema("target.radius", "must be positive"));
                }
                ConvexPolygon::regular(Vec2::new(center[0], center[1]), *radius, self.solver.target_resolution)
            }
        };
        Ok(raw.scaled_about(Vec2::zeros(), 1.0 / raw.area().sqrt()))
    }

    /// Canonical bytes: the hashed and archived form of the configuration.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        canonical(self)
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        for (i, h) in self.heights.iter().enumerate() {
            if !(*h > 0.0 && *h < HEIGHT_CAP) {
                return Err(schema(&format!("analysis.heights[{i}]"), format!("must lie in (0, {HEIGHT_CAP})")));
            }
        }
        for (i, p) in self.p_values.iter().enumerate() {
            if !(*p >= 0.0 && p.is_finite()) {
                return Err(schema(&format!("analysis.p_values[{i}]"), "must be non-negative"));
            }
        }
        if let Some([lo, hi]) = self.d_band {
            if !(lo > 0.0 && hi > lo) {
                return Err(schema("analysis.d_band", "must satisfy 0 < lo < hi"));
            }
        }
        if self.d_top.is_some_and(|d| !(d > 0.0)) {
            return Err(schema("analysis.d_top", "must be positive"));
        }
        if self.angular < 3 {
            return Err(schema("analysis.angular", "must be at least 3"));
        }
        if self.sublayers == 0 {
            return Err(schema("analysis.sublayers", "must be positive"));
        }
        if self.bulk_fraction.is_some_and(|f| !(f > 0.0)) {
            return Err(schema("analysis.bulk_fraction", "must be positive"));
        }
        if self.grid_level < 2 {
            return Err(schema("analysis.grid_level", "must be at least 2"));
        }
        self.thresholds.validate().map_err(|e| schema("analysis.thresholds", e))
    }
}
