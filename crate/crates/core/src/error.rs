use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: String,
        value: f64,
        reason: String,
    },

    #[error("missing parameter `{0}`")]
    MissingParameter(String),

    #[error("probability masses must be nonnegative and finite, got {0}")]
    NegativeMass(f64),

    #[error("probability masses sum to {0}, expected 1")]
    NotNormalized(f64),

    #[error("limit law has nonpositive mean {0}; the chain must drift to +infinity")]
    NonPositiveDrift(f64),

    #[error("state {0} lies outside the chain's state space")]
    StateOutsideDomain(f64),

    #[error("state {0} is not an integer but the chain is lattice valued")]
    NonIntegerState(f64),

    #[error("operation requires a lattice kernel")]
    NotLattice,

    #[error("law has infinite or undeclared mean")]
    InfiniteMean,

    #[error("invalid window [{lo}, {hi}]")]
    InvalidWindow { lo: i64, hi: i64 },

    #[error("initial mass at state {0} lies outside the window")]
    MassOutsideWindow(i64),

    #[error("bracket width {achieved} exceeds requested accuracy {requested}; enlarge the window or raise n_max")]
    InsufficientAccuracy { achieved: f64, requested: f64 },

    #[error("requested step {requested} but only {available} iterations are available")]
    NotEnoughIterations { requested: usize, available: usize },

    #[error("windows [{lo}, {hi}] exceed the computed region [{region_lo}, {region_hi}]")]
    WindowOutsideRegion {
        lo: i64,
        hi: i64,
        region_lo: i64,
        region_hi: i64,
    },

    #[error("Monte Carlo horizon check failed: {0}")]
    HorizonCheck(String),

    #[error("Monte Carlo p0 estimate unstable: {0}")]
    Unstable(String),

    #[error("corollary consistency violated: delta {delta} < epsilon/A = {ladder}")]
    LadderBoundViolated { delta: f64, ladder: f64 },

    #[error("chain spec: {0}")]
    Spec(String),
}

impl Error {
    pub(crate) fn param(name: &str, value: f64, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            value,
            reason: reason.into(),
        }
    }
}
