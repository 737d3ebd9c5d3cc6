//! Experiment driver for the `shapeopt` library: builds the problem from a
//! configuration, runs one method and writes its artifacts.

pub mod config;
mod output;
mod run;

use thiserror::Error;

use shapeopt::descent::DescentError;
use shapeopt::fem::FemError;
use shapeopt::mesh::io::FormatError;
use shapeopt::mesh::MeshError;
use shapeopt::newton::NewtonError;
use shapeopt::shape::ShapeError;

pub use config::{preset, ExperimentConfig, MethodKind, ProblemKind, PRESETS};
pub use output::{compare_histories, plot_script};
pub use run::{build_problem, check_derivative, compare, run, Problem, RunSummary};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("run did not converge: {0}")]
    NotConverged(String),
    #[error("degenerate mesh: {0}")]
    Degenerate(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("mesh file error: {0}")]
    Format(#[from] FormatError),
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::NotConverged(_) => 4,
            CliError::Degenerate(_) => 5,
            CliError::Io(_) | CliError::Format(_) => 1,
        }
    }
}

impl From<MeshError> for CliError {
    fn from(e: MeshError) -> Self {
        CliError::Degenerate(e.to_string())
    }
}

impl From<FemError> for CliError {
    fn from(e: FemError) -> Self {
        CliError::Solver(e.to_string())
    }
}

impl From<ShapeError> for CliError {
    fn from(e: ShapeError) -> Self {
        CliError::Solver(e.to_string())
    }
}

impl From<DescentError> for CliError {
    fn from(e: DescentError) -> Self {
        match e {
            DescentError::InvalidConfig(m) => CliError::Config(m),
            DescentError::Mesh(m) => m.into(),
            DescentError::Io(io) => CliError::Io(io),
            other => CliError::Solver(other.to_string()),
        }
    }
}

impl From<NewtonError> for CliError {
    fn from(e: NewtonError) -> Self {
        match e {
            NewtonError::InvalidConfig(m) => CliError::Config(m),
            NewtonError::Mesh(m) => m.into(),
            other => CliError::Solver(other.to_string()),
        }
    }
}
