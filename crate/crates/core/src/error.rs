use thiserror::Error;

/// Errors raised across the crate.
///
/// Variants fall into two families that the command-line front end maps to
/// distinct exit codes: input/validation problems and numerical failures
/// (nonconvergence, infeasibility, divergence). See [`Error::is_numerical`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in `{matrix}`: expected {expected}, got {got}")]
    Dimension {
        matrix: &'static str,
        expected: String,
        got: String,
    },

    #[error("ragged array in `{0}`: rows have differing lengths")]
    Ragged(&'static str),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("nonstationary source: spectral radius {0} >= 1")]
    Nonstationary(f64),

    #[error("`{0}` is not symmetric (max asymmetry {1:e})")]
    Asymmetric(&'static str, f64),

    #[error("{what} did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence {
        what: String,
        iterations: usize,
        residual: f64,
    },

    #[error("infeasible realization at (D={d}, P={p}, Q={q}): candidate roots {roots:?}")]
    Infeasible {
        d: f64,
        p: f64,
        q: f64,
        roots: Vec<f64>,
    },

    #[error("unsupported mode count: {0} active modes (only 1 or 2 can share one scalar channel)")]
    UnsupportedModeCount(usize),

    #[error(
        "distortion identity violated: analytic distortion {analytic} vs target {target} ({active} active modes)"
    )]
    DistortionMismatch {
        analytic: f64,
        target: f64,
        active: usize,
        design: Box<crate::realization::RealizationDesign>,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("simulation diverged at step {step}: |xhat| = {norm:e}")]
    Divergence { step: usize, norm: f64 },

    #[error("instance too large: {atoms} joint atoms exceeds cap {cap}")]
    InstanceTooLarge { atoms: u128, cap: u128 },

    #[error("at D = {d}: {source}")]
    AtDistortion {
        d: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for numerical failures (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        if let Error::AtDistortion { source, .. } = self {
            return source.is_numerical();
        }
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::Infeasible { .. }
                | Error::UnsupportedModeCount(_)
                | Error::DistortionMismatch { .. }
                | Error::NonFinite(_)
                | Error::Divergence { .. }
        )
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "dimension",
            Error::Ragged(_) => "ragged",
            Error::InvalidModel(_) => "invalid_model",
            Error::Domain(_) => "domain",
            Error::Nonstationary(_) => "nonstationary",
            Error::Asymmetric(..) => "asymmetric",
            Error::NonConvergence { .. } => "nonconvergence",
            Error::Infeasible { .. } => "infeasible",
            Error::UnsupportedModeCount(_) => "unsupported",
            Error::DistortionMismatch { .. } => "distortion_mismatch",
            Error::NonFinite(_) => "non_finite",
            Error::Divergence { .. } => "divergence",
            Error::InstanceTooLarge { .. } => "instance_too_large",
            Error::AtDistortion { source, .. } => source.kind(),
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn at_distortion(self, d: f64) -> Self {
        Error::AtDistortion {
            d,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
