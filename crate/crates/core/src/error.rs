use thiserror::Error;

/// Coarse classification of failures, used for CLI exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    GapClosure,
    Symmetry,
    Refinement,
    Unsupported,
    Model,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid discretization: {0}")]
    InvalidDiscretization(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("gap closure at site {site}: spectral gap {gap:.3e} below degeneracy tolerance")]
    GapClosure { site: usize, gap: f64 },

    #[error("rank mismatch at site {site}: expected {expected}, found {found}")]
    Rank {
        site: usize,
        expected: usize,
        found: usize,
    },

    #[error("symmetry inconsistency at site {site}: sewing matrix unitarity residual {residual:.3e}")]
    SymmetryInconsistency { site: usize, residual: f64 },

    #[error("symmetry violation: {what} residual {residual:.3e} exceeds tolerance {tolerance:.1e}")]
    SymmetryViolation {
        what: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("singular overlap on link {link} (smallest singular value {smin:.3e}); refine the lattice or check for band crossings")]
    SingularOverlap { link: usize, smin: f64 },

    #[error("branch cut hit on {what}; refine the lattice")]
    BranchCut { what: String },

    #[error("indeterminate holonomy on loop {loop_index}: {value}; refine the lattice")]
    IndeterminateHolonomy { loop_index: usize, value: String },

    #[error("truncation too small: {0}")]
    Truncation(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("quaternionic (odd time-reversal) classification is not supported")]
    Quaternionic,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::Json(_) | Error::InvalidDiscretization(_) => ErrorKind::Config,
            Error::GapClosure { .. } | Error::Rank { .. } => ErrorKind::GapClosure,
            Error::SymmetryInconsistency { .. } | Error::SymmetryViolation { .. } => {
                ErrorKind::Symmetry
            }
            Error::SingularOverlap { .. }
            | Error::BranchCut { .. }
            | Error::IndeterminateHolonomy { .. } => ErrorKind::Refinement,
            Error::Unsupported(_) | Error::Quaternionic => ErrorKind::Unsupported,
            Error::Domain(_) | Error::Model(_) | Error::Truncation(_) => ErrorKind::Model,
            Error::Io(_) => ErrorKind::Io,
        }
    }

    /// One-line remediation hint printed by the CLI.
    pub fn hint(&self) -> &'static str {
        match self.kind() {
            ErrorKind::Config => "check the lattice sizes, involution kind and task list in the config",
            ErrorKind::GapClosure => "select a band group that stays isolated over the whole base",
            ErrorKind::Symmetry => "check that J, the parity and the involution match the model",
            ErrorKind::Refinement => "increase the lattice resolution (--resolution-scale)",
            ErrorKind::Unsupported => "use one of the supported bases with even (Real) parity",
            ErrorKind::Model => "check the model parameters",
            ErrorKind::Io => "check that the output directory is writable",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
