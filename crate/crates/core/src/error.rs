use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("basis order {max_frequency} needs {needed} boundary nodes, mesh has {available}")]
    Aliasing {
        max_frequency: usize,
        needed: usize,
        available: usize,
    },

    #[error("mesh level {0} exceeds the supported maximum {1}")]
    MeshLevel(u32, u32),

    #[error("stiffness factorization failed at pivot {pivot}: {reason}")]
    SingularSystem { pivot: usize, reason: String },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    Definiteness { min_eigenvalue: f64 },

    #[error("spectral function undefined: {0}")]
    Domain(String),

    #[error("contour unusable: {0}")]
    Contour(String),

    #[error("quadrature did not converge: {0}")]
    Convergence(String),

    #[error("derivative order {0} is not supported (1..=3)")]
    OrderCap(usize),

    #[error("finite-difference fit degenerate: all errors at roundoff floor (max error {max_error:e})")]
    DegenerateFit { max_error: f64 },

    #[error("tau grid not resolvable: {0}")]
    Plateau(String),

    #[error("conductivities are not ordered: {0}")]
    InputOrder(String),

    #[error("perturbation operator is not a contraction (estimated norm {0})")]
    Contraction(f64),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
