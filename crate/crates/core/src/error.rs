use thiserror::Error;

/// Errors raised by geometry evaluation, flow stepping and diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid immersion: {0}")]
    InvalidImmersion(String),

    /// `det g` fell to or below the immersion threshold at a grid point.
    #[error("degenerate metric at point {point}: det g = {det:e}")]
    DegenerateMetric { point: usize, det: f64 },

    #[error("step rejected at t = {time}: {reason}")]
    StepRejected { time: f64, reason: String },

    /// The evolving torus map stopped being an orientation-preserving graph.
    #[error("graph condition violated at point {point}: Jacobian determinant {det:e}")]
    GraphCondition { point: usize, det: f64 },

    #[error("time {t} is at or past extinction time {extinction}")]
    PastExtinction { t: f64, extinction: f64 },

    #[error("probe time {t0} must exceed snapshot time {t}")]
    ProbeTime { t: f64, t0: f64 },

    #[error("operation requires a Euclidean ambient space")]
    UnsupportedAmbient,

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("type-I fit failed: {0}")]
    FitFailure(String),

    #[error("Jacobian is not symplectic: det = {det}")]
    NonSymplecticJacobian { det: f64 },

    #[error("immersion is not Lagrangian: sup |*omega'| = {sup:e}")]
    NotLagrangian { sup: f64 },

    #[error("eta must be positive, found {eta:e} at point {point}")]
    NonPositiveEta { point: usize, eta: f64 },

    #[error("invalid track: {0}")]
    InvalidTrack(String),
}

pub type Result<T, E = FlowError> = std::result::Result<T, E>;
