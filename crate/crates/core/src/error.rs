use thiserror::Error;

pub type Result<T> = std::result::Result<T, MecError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MecError {
    #[error("distribution has no states")]
    Empty,

    #[error("negative mass {value} at position {index}")]
    NegativeMass { index: usize, value: f64 },

    #[error("masses sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },

    #[error("index {index} out of range 0..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("instance needs at least one marginal")]
    EmptyInstance,

    #[error("prefix {index} of mass {prefix} is not covered by any prefix of the target")]
    NoCoveringPrefix { index: usize, prefix: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("lower-bound certificate violated at step {step}: state {state} < bound {bound}")]
    CertificateViolation { step: usize, state: f64, bound: f64 },

    #[error("entropy bound violated: {0}")]
    BoundViolation(String),

    #[error("invariant violated: {0}")]
    InvariantViolated(String),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("index {j_prime} does not maximize the recursion at state {i_prime}")]
    InvalidWitness { i_prime: usize, j_prime: usize },

    #[error("candidate support {support} exceeds the partition search cap {cap}")]
    SupportTooLarge { support: usize, cap: usize },

    #[error("enumeration cap exceeded after {nodes} nodes")]
    CapExceeded { nodes: u64 },
}

impl MecError {
    /// Whether the error reports a failed mathematical check rather than
    /// bad input or an exhausted resource cap.
    pub fn is_math_failure(&self) -> bool {
        matches!(
            self,
            MecError::CertificateViolation { .. }
                | MecError::BoundViolation(_)
                | MecError::InvariantViolated(_)
        )
    }
}
