use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// `ad_A^k(B)` did not vanish within the allowed depth.
    #[error("adjoint series did not terminate within depth {depth}")]
    NonTerminatingSeries { depth: usize },

    #[error("matrix exponential overflow (norm {norm:e})")]
    Overflow { norm: f64 },

    #[error("factor `{label}` is singular or failed to evaluate at t = {t}")]
    SingularFactor { label: String, t: f64 },

    #[error("eigensolver failed to converge: {0}")]
    EigensolverFailure(String),

    #[error("physical norm vanishes ({0:e})")]
    ZeroNorm(f64),

    #[error("adaptive step rejected at t = {t}: step {step:e} below minimum")]
    StepRejection { t: f64, step: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(transparent)]
    Expr(#[from] crate::expr::ExprError),
}

impl Error {
    /// Numerical failures as opposed to malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonTerminatingSeries { .. }
                | Error::Overflow { .. }
                | Error::SingularFactor { .. }
                | Error::EigensolverFailure(_)
                | Error::ZeroNorm(_)
                | Error::StepRejection { .. }
        )
    }
}
