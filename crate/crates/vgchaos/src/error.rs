use thiserror::Error;

/// Errors produced by the analytic and Monte Carlo layers.
#[derive(Debug, Error)]
pub enum VgError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The Variance-Gamma density diverges at the location point when the
    /// shape parameter is at most one; quadrature must split there.
    #[error("density pole at the location point (shape r = {r} <= 1)")]
    PoleAtLocation { r: f64 },

    #[error("bessel_k out of range at nu = {nu}, x = {x}: {reason}")]
    BesselRange { nu: f64, x: f64, reason: &'static str },

    #[error("operation requires a centred law (mu = 0 or mu = -r*theta); mean is {mean}")]
    NotCentred { mean: f64 },

    #[error("quantile argument u = {u} outside (0, 1)")]
    QuantileDomain { u: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("order mismatch: {left} vs {right}")]
    OrderMismatch { left: usize, right: usize },

    #[error("capacity exceeded for {what}: requested {requested}, limit {limit}")]
    Capacity {
        what: &'static str,
        requested: usize,
        limit: usize,
    },

    #[error("inadmissible contraction index list {indices:?} for tensor order {q}")]
    InadmissibleIndices { q: usize, indices: Vec<usize> },

    #[error("contraction order r = {r} outside 0..={max}")]
    ContractionRange { r: usize, max: usize },

    /// Odd chaos orders have vanishing third moment while an asymmetric
    /// Variance-Gamma target has a non-zero one, so no bounded-variance
    /// sequence can converge.
    #[error("no odd-order chaos sequence converges to an asymmetric target (q = {q}, theta = {theta})")]
    OddChaosAsymmetricTarget { q: usize, theta: f64 },

    #[error("explicit Stein constants require a positive integer shape, got r = {r}")]
    SteinConstantsShape { r: f64 },

    #[error("quadrature failed to converge: {context}")]
    QuadratureFailure { context: String },

    #[error("Stein equation solve did not converge: max residual {max_residual:.3e} at x = {at:.6} (tolerance {tolerance:.1e})")]
    SteinSolveResidual {
        max_residual: f64,
        at: f64,
        tolerance: f64,
    },

    #[error("sample set is empty")]
    EmptySampleSet,

    #[error("k-statistics need at least {required} observations, got {got}")]
    SampleTooSmall { required: usize, got: usize },

    #[error("homogeneous-sum coefficients must be symmetric and vanish on diagonals: {reason}")]
    InvalidCoefficients { reason: String },

    #[error("unknown experiment kind `{0}`")]
    UnknownExperiment(String),

    #[error("experiment config invalid: {0}")]
    ConfigInvalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, VgError>;
