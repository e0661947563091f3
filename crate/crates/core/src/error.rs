use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("configuration length {got} does not match chain length {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("x = {x} lies outside the search box [{x_min}, {x_max}]")]
    OutOfBox { x: f64, x_min: f64, x_max: f64 },

    #[error("requested {requested} states but the chain only has {available}")]
    TooManyStates { requested: u128, available: u128 },

    #[error("target energy {target} is not attainable: {reason}")]
    Unattainable { target: f64, reason: String },

    #[error("no solution in (0, 1]: {0}")]
    NoFreezeOut(String),

    #[error("fit needs at least {needed} usable points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("nonpositive value {value} at x = {x} cannot be log-transformed")]
    NonPositive { x: f64, value: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("unknown recipe `{id}`; valid ids: {}", .valid.join(", "))]
    UnknownRecipe { id: String, valid: Vec<String> },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
