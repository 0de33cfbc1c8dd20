use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("only dimensions 2 and 3 are supported, got {0}")]
    UnsupportedDimension(usize),

    #[error("matrix entries are not symmetric")]
    NotSymmetric,

    #[error("unknown region tag")]
    UnknownRegion,

    #[error("integrand is not convex: {0}")]
    NonConvexIntegrand(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("subadditivity violated: g_{k2} = {g2:.6e} exceeds g_{k1} = {g1:.6e} beyond tolerance")]
    SubadditivityViolation { k1: usize, k2: usize, g1: f64, g2: f64 },

    #[error("tile grid incompatible with lattice: {0}")]
    IncompatibleTiling(String),

    #[error("degenerate quadrature: all weights are zero")]
    DegenerateQuadrature,
}
