use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate frame: {0}")]
    DegenerateFrame(String),
    #[error("constraint violation: {what} (worst cell {cell:?}, residual {residual:.3e}, tolerance {tol:.3e})")]
    Constraint {
        what: String,
        cell: (usize, usize),
        residual: f64,
        tol: f64,
    },
    #[error("degenerate face {face}: |d1 ^ d2| = {norm:.3e}")]
    DegenerateFace { face: usize, norm: f64 },
    #[error("invalid mesh: {0}")]
    Mesh(String),
    #[error("mesh has no uv parameters")]
    MissingUv,
    #[error("localisation hypothesis violated on face {face}: {detail}")]
    Localisation { face: usize, detail: String },
    #[error("flow step rejected: residual {residual:.3e} above tolerance {tol:.3e} after {iterations} Newton iterations")]
    StepRejected {
        residual: f64,
        tol: f64,
        iterations: usize,
    },
    #[error("stage {stage} aborted: {detail}")]
    StageAbort { stage: usize, detail: String },
    #[error("under-resolved: {0}")]
    Resolution(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
