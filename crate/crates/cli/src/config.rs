//! Experiment configuration: a TOML file or a named preset.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use shapeopt::descent::LineSearchConfig;
use shapeopt::mesh::QualityThresholds;
use shapeopt::newton::NewtonConfig;
use shapeopt::shape::ElasticityParams;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    /// Unit disk with the planar benchmark data.
    Paper2d,
    /// Cube `[−side/2, side/2]³` with the spatial benchmark data.
    Paper3d,
    /// Mesh read from `mesh_file`; the benchmark data matching its dimension.
    MeshFile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodKind {
    RestrictedGradient,
    ClassicalGradient,
    SswGradient,
    RestrictedNewton,
    SpuriousSweep,
}

impl MethodKind {
    pub fn name(&self) -> &'static str {
        match self {
            MethodKind::RestrictedGradient => "restricted-gradient",
            MethodKind::ClassicalGradient => "classical-gradient",
            MethodKind::SswGradient => "ssw-gradient",
            MethodKind::RestrictedNewton => "restricted-newton",
            MethodKind::SpuriousSweep => "spurious-sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemSection {
    pub kind: ProblemKind,
    /// Disk refinement level.
    pub level: u32,
    /// Cube cells per edge.
    pub cells_per_edge: usize,
    /// Cube edge length.
    pub side: f64,
    pub mesh_file: Option<PathBuf>,
}

impl Default for ProblemSection {
    fn default() -> Self {
        ProblemSection {
            kind: ProblemKind::Paper2d,
            level: 1,
            cells_per_edge: 8,
            side: 2.0,
            mesh_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LineSearchSection {
    pub alpha0: f64,
    pub beta: f64,
    pub sigma: f64,
    pub eps_tol: f64,
    pub max_iter: usize,
    pub max_backtracks: usize,
}

impl Default for LineSearchSection {
    fn default() -> Self {
        let d = LineSearchConfig::default();
        LineSearchSection {
            alpha0: d.alpha0,
            beta: d.beta,
            sigma: d.sigma,
            eps_tol: d.eps_tol,
            max_iter: d.max_iter,
            max_backtracks: d.max_backtracks,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonSection {
    pub alpha0: f64,
    pub beta: f64,
    pub sigma: f64,
    pub eps_tol: f64,
    pub max_iter: usize,
    pub max_backtracks: usize,
}

impl Default for NewtonSection {
    fn default() -> Self {
        let d = NewtonConfig::default();
        NewtonSection {
            alpha0: d.alpha0,
            beta: d.beta,
            sigma: d.sigma,
            eps_tol: d.eps_tol,
            max_iter: d.max_iter,
            max_backtracks: d.max_backtracks,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ElasticitySection {
    pub young: f64,
    pub poisson: f64,
    pub delta: f64,
}

impl Default for ElasticitySection {
    fn default() -> Self {
        ElasticitySection {
            young: 1.0,
            poisson: 0.4,
            delta: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QualitySection {
    pub det_lo: f64,
    pub det_hi: f64,
    pub frob_max: f64,
}

impl Default for QualitySection {
    fn default() -> Self {
        let q = QualityThresholds::default();
        QualitySection {
            det_lo: q.det_lo,
            det_hi: q.det_hi,
            frob_max: q.frob_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Polar angle (degrees) used to pick the perturbed boundary vertex.
    pub vertex_angle: f64,
    pub direction: [f64; 2],
    /// Step at which the first cell collapses.
    pub collapse_alpha: f64,
    /// Number of equal steps on `[0, collapse_alpha]`.
    pub samples: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            vertex_angle: 18.0,
            direction: [-0.9510, -0.3090],
            collapse_alpha: 0.1,
            samples: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Write `mesh_XXXX.vtk` every this many iterations; 0 disables snapshots.
    pub snapshot_every: usize,
    /// Fill the `seconds` column of `history.csv`.
    pub record_time: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
            snapshot_every: 0,
            record_time: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub method: MethodKind,
    /// Seed for the randomized derivative check.
    pub seed: u64,
    pub problem: ProblemSection,
    pub line_search: LineSearchSection,
    pub newton: NewtonSection,
    pub elasticity: ElasticitySection,
    pub quality: QualitySection,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            method: MethodKind::RestrictedGradient,
            seed: 0,
            problem: ProblemSection::default(),
            line_search: LineSearchSection::default(),
            newton: NewtonSection::default(),
            elasticity: ElasticitySection::default(),
            quality: QualitySection::default(),
            sweep: SweepSection::default(),
            output: OutputSection::default(),
        }
    }
}

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 6] = [
    "paper2d-restricted-gradient",
    "paper2d-classical-gradient",
    "paper2d-ssw-gradient",
    "paper2d-newton",
    "paper3d-newton",
    "paper2d-spurious-sweep",
];

pub fn preset(name: &str) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::default();
    match name {
        "paper2d-restricted-gradient" => {}
        "paper2d-classical-gradient" => {
            cfg.method = MethodKind::ClassicalGradient;
            cfg.line_search.max_iter = 1500;
        }
        "paper2d-ssw-gradient" => cfg.method = MethodKind::SswGradient,
        "paper2d-newton" => cfg.method = MethodKind::RestrictedNewton,
        "paper3d-newton" => {
            cfg.method = MethodKind::RestrictedNewton;
            cfg.problem.kind = ProblemKind::Paper3d;
        }
        "paper2d-spurious-sweep" => cfg.method = MethodKind::SpuriousSweep,
        other => return Err(CliError::Config(format!("unknown preset `{other}`; known: {}", PRESETS.join(", ")))),
    }
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn elasticity_params(&self) -> Result<ElasticityParams, CliError> {
        let e = &self.elasticity;
        ElasticityParams::new(e.young, e.poisson, e.delta).map_err(|err| CliError::Config(err.to_string()))
    }

    pub fn quality(&self) -> QualityThresholds {
        QualityThresholds {
            det_lo: self.quality.det_lo,
            det_hi: self.quality.det_hi,
            frob_max: self.quality.frob_max,
        }
    }

    pub fn line_search(&self) -> LineSearchConfig {
        let l = &self.line_search;
        LineSearchConfig {
            alpha0: l.alpha0,
            beta: l.beta,
            sigma: l.sigma,
            eps_tol: l.eps_tol,
            max_iter: l.max_iter,
            max_backtracks: l.max_backtracks,
            quality: self.quality(),
            record_time: self.output.record_time,
        }
    }

    pub fn newton(&self) -> NewtonConfig {
        let n = &self.newton;
        NewtonConfig {
            alpha0: n.alpha0,
            beta: n.beta,
            sigma: n.sigma,
            eps_tol: n.eps_tol,
            max_iter: n.max_iter,
            max_backtracks: n.max_backtracks,
            quality: self.quality(),
            record_time: self.output.record_time,
        }
    }

    /// Checks every numeric parameter against its documented range.
    pub fn validate(&self) -> Result<(), CliError> {
        let cfg_err = |m: String| Err(CliError::Config(m));
        self.elasticity_params()?;
        match self.method {
            MethodKind::RestrictedNewton => {
                self.newton().validate().map_err(|e| CliError::Config(e.to_string()))?;
            }
            MethodKind::SpuriousSweep => {
                let s = &self.sweep;
                if !(s.collapse_alpha > 0.0) || s.samples == 0 {
                    return cfg_err("sweep needs collapse_alpha > 0 and samples ≥ 1".into());
                }
                if s.direction[0] == 0.0 && s.direction[1] == 0.0 {
                    return cfg_err("sweep direction must be nonzero".into());
                }
            }
            _ => {
                self.line_search().validate().map_err(|e| CliError::Config(e.to_string()))?;
            }
        }
        let q = &self.quality;
        if !(q.det_lo > 0.0 && q.det_lo < 1.0 && q.det_hi > 1.0 && q.frob_max > 0.0) {
            return cfg_err("quality thresholds need 0 < det_lo < 1 < det_hi and frob_max > 0".into());
        }
        match self.problem.kind {
            ProblemKind::Paper3d if self.problem.cells_per_edge == 0 || !(self.problem.side > 0.0) => {
                cfg_err("cube needs cells_per_edge ≥ 1 and side > 0".into())
            }
            ProblemKind::MeshFile if self.problem.mesh_file.is_none() => cfg_err("mesh-file problem needs mesh_file".into()),
            _ if self.method == MethodKind::SpuriousSweep && self.problem.kind == ProblemKind::Paper3d => {
                cfg_err("the spurious sweep is defined for 2D meshes".into())
            }
            _ => Ok(()),
        }
    }
}
