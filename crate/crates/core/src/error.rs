use std::path::PathBuf;

/// Errors produced anywhere in the homogenization pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("coefficient is not uniformly elliptic: smallest eigenvalue {min_eigenvalue:.3e} at y = ({y1:.4}, {y2:.4})")]
    NonElliptic { min_eigenvalue: f64, y1: f64, y2: f64 },

    #[error("coefficient is not symmetric at y = ({y1:.4}, {y2:.4}): a12 = {a12:.6e}, a21 = {a21:.6e}")]
    NonSymmetric { y1: f64, y2: f64, a12: f64, a21: f64 },

    #[error("invalid torus resolution N = {0}: N must be even and at least 8")]
    InvalidResolution(usize),

    #[error("{what}: iteration stagnated after {iterations} iterations with relative residual {residual:.3e} (tolerance {tolerance:.1e})")]
    Stagnation {
        what: String,
        iterations: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("invariant measure has a non-positive node value {min_value:.3e} at N = {n}; the resolution is too coarse for this coefficient")]
    NegativeMeasure { min_value: f64, n: usize },

    #[error("incompatible right-hand side for {what}: weighted mean against the invariant measure is {defect:.3e} (tolerance {tolerance:.1e})")]
    IncompatibleRhs {
        what: String,
        defect: f64,
        tolerance: f64,
    },

    #[error("invariant measure does not make the column fields divergence free: relative defect {defect:.3e}")]
    BadInvariantMeasure { defect: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("resolution rule violated: M = {m} is below the minimum {min_m} (16 cells per period at epsilon = 1/{k})")]
    ResolutionTooCoarse { m: usize, min_m: usize, k: u32 },

    #[error("the fem-div backend needs a divergence-form coefficient; run divergence_form_transform first or use a closed-form coefficient")]
    MissingDivergenceForm,

    #[error("unknown {kind} '{name}'; valid names: {valid}")]
    UnknownName {
        kind: &'static str,
        name: String,
        valid: String,
    },

    #[error("invalid epsilon '{0}': epsilon must be 1/k for a positive integer k")]
    InvalidEpsilon(String),

    #[error("missing derivative information: {0}")]
    MissingDerivatives(String),

    #[error("empty quadrature mask")]
    EmptyMask,

    #[error("rate fit needs at least 3 samples, got {0}")]
    TooFewSamples(usize),

    #[error("rate fit sample at epsilon = {epsilon} has non-positive value {value:.3e}")]
    NonPositiveSample { epsilon: f64, value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("at epsilon = 1/{k}: {source}")]
    AtEpsilon {
        k: u32,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by invalid user input rather than by a solver.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::UnknownName { .. }
            | Error::InvalidEpsilon(_)
            | Error::Config(_)
            | Error::Parse { .. }
            | Error::ResolutionTooCoarse { .. }
            | Error::InvalidResolution(_)
            | Error::MissingDivergenceForm
            | Error::NonElliptic { .. }
            | Error::NonSymmetric { .. } => true,
            Error::AtEpsilon { source, .. } => source.is_config_error(),
            _ => false,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
