use thiserror::Error;

use crate::expr::ExprError;

/// Failures raised by the numerical pipelines.
///
/// Variants carrying `t` report the grid time at which the condition was
/// first detected.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("DefectiveMatrix: eigenvalue {eigenvalue} has geometric multiplicity {geometric} < algebraic multiplicity {algebraic}")]
    DefectiveMatrix {
        eigenvalue: num_complex::Complex64,
        geometric: usize,
        algebraic: usize,
    },
    #[error("NonConvergence: {0}")]
    NonConvergence(String),
    #[error("LevelCrossing: inter-level gap {gap:.3e} below threshold at t = {t}")]
    LevelCrossing { t: f64, gap: f64 },
    #[error("DegeneracyChange: level structure changed at t = {t}")]
    DegeneracyChange { t: f64 },
    #[error("SingularK: dynamical factor not invertible at t = {t}")]
    SingularK { t: f64 },
    #[error("SingularTransform: gauge not invertible at t = {t}")]
    SingularTransform { t: f64 },
    #[error("ChartSingularity: a + E vanishes at t = {t}")]
    ChartSingularity { t: f64 },
    #[error("VanishingOffDiagonal: b or c vanishes at t = {t}")]
    VanishingOffDiagonal { t: f64 },
    #[error("NonpositiveFrequency: omega = {omega} at t = {t}")]
    NonpositiveFrequency { t: f64, omega: f64 },
    #[error("ZeroField: r = {r} at t = {t}")]
    ZeroField { t: f64, r: f64 },
    #[error("ConditionViolated: {0}")]
    ConditionViolated(String),
    #[error("GridMismatch: {0}")]
    GridMismatch(String),
    #[error("InvalidGrid: {0}")]
    InvalidGrid(String),
    #[error("DimensionMismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("NonFinite: {0}")]
    NonFinite(String),
    #[error("Expression: {0}")]
    Expr(#[from] ExprError),
}

impl Error {
    /// Short failure name, used by the command line front-end on stderr.
    pub fn name(&self) -> &'static str {
        match self {
            Error::DefectiveMatrix { .. } => "DefectiveMatrix",
            Error::NonConvergence(_) => "NonConvergence",
            Error::LevelCrossing { .. } => "LevelCrossing",
            Error::DegeneracyChange { .. } => "DegeneracyChange",
            Error::SingularK { .. } => "SingularK",
            Error::SingularTransform { .. } => "SingularTransform",
            Error::ChartSingularity { .. } => "ChartSingularity",
            Error::VanishingOffDiagonal { .. } => "VanishingOffDiagonal",
            Error::NonpositiveFrequency { .. } => "NonpositiveFrequency",
            Error::ZeroField { .. } => "ZeroField",
            Error::ConditionViolated(_) => "ConditionViolated",
            Error::GridMismatch(_) => "GridMismatch",
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NonFinite(_) => "NonFinite",
            Error::Expr(e) => e.name(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
