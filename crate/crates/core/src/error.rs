use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("bright/dark directions are undefined when both m_x and omega_l vanish")]
    DegenerateBasis,

    #[error("Floquet truncation n_max={n_max} is smaller than the largest harmonic |m|={max_harmonic}")]
    TruncationTooSmall { n_max: usize, max_harmonic: usize },

    #[error("Fourier blocks break Hermiticity: H^(-{harmonic}) is not the adjoint of H^({harmonic})")]
    NonHermitianBlocks { harmonic: i32 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("truncation scan did not converge: last two probabilities differ by {delta:e} (tol {tol:e})")]
    NoConvergence { delta: f64, tol: f64 },

    #[error("a parallel bias field (omega_l != 0) is required for {0}")]
    ParallelFieldRequired(&'static str),

    #[error("propagation norm drift {drift:e} exceeds the accepted bound; reduce the step")]
    StepTooLarge { drift: f64 },

    #[error("spectrum has no data")]
    EmptySpectrum,

    #[error("fewer than two resonances near {center_mhz} MHz at sweep value {sweep_mhz} MHz")]
    BranchNotFound { sweep_mhz: f64, center_mhz: f64 },

    #[error("grid point (sweep={sweep_mhz} MHz, mw={mw_mhz} MHz): {source}")]
    AtGridPoint {
        sweep_mhz: f64,
        mw_mhz: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
