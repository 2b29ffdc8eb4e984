//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not Hermitian (relative residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps")]
    EigNonConvergence { sweeps: usize },

    #[error("matrix is singular or not positive definite (min eigenvalue {min_eig:.3e})")]
    NotPositiveDefinite { min_eig: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("state is not faithful (min eigenvalue {min_eig:.3e})")]
    NotFaithful { min_eig: f64 },

    #[error("invalid generator set: {0}")]
    InvalidGenerators(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("channel marginal mismatch: expected state preservation, residual {residual:.3e}")]
    MarginalMismatch { residual: f64 },

    #[error("*-algebra closure not reached within word length {max_word_len}")]
    WordLengthCap { max_word_len: usize },

    #[error("algebra is not declared as a two-factor tensor product")]
    NotTensorProduct,

    #[error("zero state has no support")]
    ZeroState,

    #[error(
        "solver did not converge within {iterations} iterations \
         (primal {primal_residual:.3e}, dual {dual_residual:.3e})"
    )]
    NonConvergence {
        iterations: usize,
        primal_residual: f64,
        dual_residual: f64,
    },

    #[error("affine constraint system is inconsistent (residual {residual:.3e}); assembly bug")]
    InconsistentConstraints { residual: f64 },

    #[error("optimal objective {objective:.3e} is negative beyond tolerance; assembly bug")]
    NegativeObjective { objective: f64 },

    #[error("generators do not generate the algebra (span {found} of {expected})")]
    NotGenerating { found: usize, expected: usize },

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
