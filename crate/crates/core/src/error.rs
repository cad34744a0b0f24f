use thiserror::Error;

/// Failures raised anywhere in the stability calculus or the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: {0}")]
    Convergence(String),

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("stability function has {count} sign changes on the scan grid; expected exactly one")]
    MultipleRoots { count: usize },

    #[error("grid too small: length {length} but amplitude decay needs at least {min_length}")]
    GridTooSmall { length: f64, min_length: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("Hessian is not degenerate: |det| = {det:e} exceeds {threshold:e}")]
    NotDegenerate { det: f64, threshold: f64 },

    #[error("zero eigenvector vanishes identically")]
    ZeroVector,

    #[error("inconsistent branch: {0}")]
    InconsistentBranch(String),

    #[error("non-finite field at t = {t}")]
    Blowup { t: f64 },

    #[error("boundary contamination at t = {t}: mass {mass:e} near the domain edge")]
    BoundaryContamination { t: f64, mass: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// True for errors that stem from the inputs lying outside the admissible
    /// parameter set (as opposed to numerical failures).
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::NoRoot(_)
                | Error::NotDegenerate { .. }
                | Error::GridTooSmall { .. }
                | Error::InvalidGrid(_)
                | Error::Config(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
