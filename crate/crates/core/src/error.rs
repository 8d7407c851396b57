use thiserror::Error;

/// Errors raised across the crate.
///
/// Mathematical refutations (a weight failing an axiom, a condition that does
/// not hold) are not errors; they are reported through
/// [`ConditionReport`](crate::weights::ConditionReport) with a `Refuted`
/// status. Errors are reserved for inputs that cannot be processed and for
/// computations that stop before producing an answer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("mismatched group families: {left} vs {right}")]
    FamilyMismatch { left: String, right: String },

    #[error("element {element} does not belong to {group}")]
    ForeignElement { element: String, group: String },

    #[error("radius exceeded: no word of length <= {cap} represents {element}")]
    RadiusExceeded { element: String, cap: u32 },

    #[error("ball enumeration exceeded the element cap ({cap} elements) at radius {radius}")]
    ElementCap { cap: usize, radius: u32 },

    #[error("support cap exceeded: {size} entries > cap {cap}")]
    SupportCap { size: usize, cap: usize },

    #[error("work cap exceeded: {pairs} term pairs > budget {budget}")]
    WorkCap { pairs: usize, budget: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("weight `{weight}` is not defined on {group}")]
    WeightGroupMismatch { weight: String, group: String },

    #[error("no auxiliary function applies to weight `{0}`")]
    NoAuxiliaryMode(String),

    #[error("no feasible theta on the grid: {0}")]
    NoFeasibleTheta(String),

    #[error("summability inconclusive: {0}")]
    SumInconclusive(String),

    #[error("not certified invertible: {reason}")]
    NotInvertible {
        reason: String,
        diagnostics: serde_json::Value,
    },

    #[error("Neumann series did not converge after {terms} terms (last term norm {last_term:.3e}, residual {residual:.3e})")]
    NotConverged {
        terms: usize,
        last_term: f64,
        residual: f64,
        diagnostics: serde_json::Value,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
