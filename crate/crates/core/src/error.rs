use thiserror::Error;

#[derive(Debug, Error)]
pub enum CascadeError {
    /// A parameter or grid failed validation; the message names the violated constraint.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("unsupported derivative order {order} (max {max})")]
    UnsupportedOrder { order: usize, max: usize },

    /// Root equation has no positive root in the requested regime.
    #[error("regime error: {0}")]
    Regime(String),

    #[error("cascade degeneracy: {0}")]
    Degeneracy(String),

    #[error("step underflow at t = {t:e} (dt = {dt:e})")]
    Stiffness { t: f64, dt: f64 },

    #[error("trajectory does not cover the required window: {0}")]
    Coverage(String),

    #[error("CFL violation: {0}")]
    Cfl(String),

    #[error("evaluation outside resolved range: {0}")]
    Extrapolation(String),

    #[error("resolution too coarse: {0}")]
    Resolution(String),

    #[error("numerical overflow at t = {t:e}: {msg}")]
    Overflow { t: f64, msg: String },

    #[error("construction error: {0}")]
    Construction(String),

    #[error("input outside definition range: {0}")]
    Domain(String),

    #[error("probe error: {0}")]
    Probe(String),

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, CascadeError>;
