use thiserror::Error;

/// Errors raised by field algebra, the structure-equation solvers and the flows.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid resolution too low: {axis} has {got} nodes, need at least {min}")]
    ResolutionTooLow { axis: &'static str, got: usize, min: usize },

    #[error("field/manifold mismatch: {0}")]
    ManifoldMismatch(String),

    #[error("invalid manifold: {0}")]
    InvalidManifold(String),

    #[error("density is not invariant under the lens action (charge {charge} mod {p})")]
    NonInvariant { charge: i64, p: u32 },

    #[error("NaN encountered in {0}")]
    NaN(&'static str),

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NonUnitary(f64),

    #[error("degree overflow: {0} + {1} > 3")]
    DegreeOverflow(usize, usize),

    #[error("form degree {0} not supported here")]
    BadDegree(usize),

    #[error("forms live on different coframes")]
    CoframeMismatch,

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("conformal factor must be positive (min {0:.3e})")]
    NonPositive(f64),

    #[error("deformation too large: sup|E| = {0:.6} >= 1")]
    DeformationTooLarge(f64),

    #[error("admissibility residual {0:.3e} above tolerance {1:.1e}")]
    Inadmissible(f64, f64),

    #[error("reality residual {0:.3e} above tolerance {1:.1e}")]
    Reality(f64, f64),

    #[error("structure equation {line} residual {value:.3e} above tolerance {tol:.1e}")]
    StructureResidual { line: String, value: f64, tol: f64 },

    #[error("normalization condition violated: {0:.3e}")]
    Normalization(f64),

    #[error("series truncation does not converge: |g| bound {0:.3}")]
    SeriesDivergence(f64),

    #[error("time step underflow at t = {t} (dt = {dt:.3e})")]
    DtUnderflow { t: f64, dt: f64 },

    #[error("deformation margin violated: sup|E| = {0:.6}")]
    MarginViolated(f64),

    #[error("calibration dispersion {0:.3e} exceeds 1%")]
    CalibrationDispersion(f64),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
