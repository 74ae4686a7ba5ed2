//! Configuration-driven experiment runner around [`annulus_core`]: single
//! solves, convergence series with CSV rate tables, and VTK field exports.
//!
//! The binary exposes four subcommands (`run`, `converge`, `field`,
//! `validate`), all driven by one JSON config file; this library holds their
//! implementations so integration tests can call them in-process.

pub mod config;
pub mod presets;
pub mod runner;
pub mod vtk;

use std::fmt;

/// Top-level failure split by exit code: configuration problems exit with 2,
/// numerical failures (meshing, factorization, error measurement) with 3.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<annulus_core::assembly::AssemblyError> for CliError {
    fn from(err: annulus_core::assembly::AssemblyError) -> Self {
        use annulus_core::assembly::AssemblyError as E;
        match err {
            E::Curve(_)
            | E::InvalidWaveAlpha { .. }
            | E::InvalidStaticAlpha { .. }
            | E::InvalidGaussOrder { .. }
            | E::InvalidPanelSplits { .. }
            | E::EmptyBoundary(_)
            | E::RefractionRequiresHelmholtz
            | E::VolumeSupportTouchesBoundary { .. }
            | E::ConstraintsForWave => CliError::Config(err.to_string()),
            _ => CliError::Numerical(err.to_string()),
        }
    }
}

impl From<annulus_core::mesh::MeshError> for CliError {
    fn from(err: annulus_core::mesh::MeshError) -> Self {
        CliError::Numerical(err.to_string())
    }
}

impl From<annulus_core::solve::SolveError> for CliError {
    fn from(err: annulus_core::solve::SolveError) -> Self {
        CliError::Numerical(err.to_string())
    }
}

impl From<annulus_core::kernels::KernelError> for CliError {
    fn from(err: annulus_core::kernels::KernelError) -> Self {
        CliError::Config(err.to_string())
    }
}

impl From<annulus_core::curves::CurveError> for CliError {
    fn from(err: annulus_core::curves::CurveError) -> Self {
        CliError::Config(err.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Numerical(format!("i/o: {err}"))
    }
}
