use thiserror::Error;

/// Errors raised by the geometry, stepping and verification layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input outside the operation's domain: {0}")]
    InputDomain(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("no solution exists: {0}")]
    Infeasible(String),

    #[error("points are at (or within {tolerance:e} of) each other's cut-locus")]
    CutLocus { tolerance: f64 },

    #[error("geodesic of length {rho} reaches a conjugate point (curvature {curvature})")]
    ConjugatePoint { curvature: f64, rho: f64 },

    #[error("step length {length} is too large for the sphere; reduce h")]
    StepTooLarge { length: f64 },

    #[error("driver matrices violate J J' + K K' = I (residual {residual:e})")]
    CouplingConstraint { residual: f64 },

    #[error("rate k = {k} is infeasible at distance {rho}: cos(alpha) = {cos_alpha} lies outside [-1, 1]")]
    RateInfeasible { k: f64, rho: f64, cos_alpha: f64 },

    #[error("rate k = {k} is infeasible: it exceeds the curvature bound {bound}, so no coupling contracts that fast near the diagonal")]
    RateAboveCurvatureBound { k: f64, bound: f64 },

    #[error("points belong to different spaces: {0}")]
    SpaceMismatch(String),

    #[error("strategy `{strategy}` cannot run on {space}: {reason}")]
    StrategyMismatch {
        strategy: String,
        space: String,
        reason: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures that only show up while a simulation runs
    /// (infeasible rates, cut-locus hits, oversized steps).
    pub fn is_runtime(&self) -> bool {
        matches!(
            self,
            Error::RateInfeasible { .. }
                | Error::RateAboveCurvatureBound { .. }
                | Error::CutLocus { .. }
                | Error::StepTooLarge { .. }
                | Error::ConjugatePoint { .. }
                | Error::Infeasible(_)
                | Error::Degenerate(_)
                | Error::CouplingConstraint { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
