use thiserror::Error;

pub type Result<T> = std::result::Result<T, QlsError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QlsError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not doubled-up: {0}")]
    Structure(String),
    #[error("matrix is not symplectic: {0}")]
    NotSymplectic(String),
    #[error("not physically realizable: {0}")]
    NotPhysical(String),
    #[error("system is not Hurwitz: {0}")]
    NotHurwitz(String),
    #[error("covariance is not a physical state: {0}")]
    Physicality(String),
    #[error("input state is not pure: {0}")]
    Impure(String),
    #[error("system is not globally minimal: {0}")]
    NotGloballyMinimal(String),
    #[error("evaluation point is a pole: {0}")]
    Pole(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error("identification failed: {0}")]
    Identification(String),
    #[error("realization failed: {0}")]
    Realization(String),
    #[error("no feasible solution: {0}")]
    Infeasible(String),
    #[error("accuracy target not reached: {0}")]
    Accuracy(String),
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
    #[error("numerical routine did not converge: {0}")]
    Convergence(String),
    #[error("malformed input: {0}")]
    Parse(String),
}

impl QlsError {
    /// True when the error is about the supplied input rather than a
    /// numerical failure while processing valid input.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            QlsError::Dimension(_)
                | QlsError::Parse(_)
                | QlsError::Unsupported(_)
                | QlsError::Structure(_)
                | QlsError::NotSymplectic(_)
                | QlsError::NotPhysical(_)
                | QlsError::NotHurwitz(_)
                | QlsError::Physicality(_)
                | QlsError::Impure(_)
                | QlsError::NotGloballyMinimal(_)
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            QlsError::Dimension(_) => "dimension",
            QlsError::Structure(_) => "structure",
            QlsError::NotSymplectic(_) => "not_symplectic",
            QlsError::NotPhysical(_) => "not_physical",
            QlsError::NotHurwitz(_) => "not_hurwitz",
            QlsError::Physicality(_) => "physicality",
            QlsError::Impure(_) => "impure",
            QlsError::NotGloballyMinimal(_) => "not_globally_minimal",
            QlsError::Pole(_) => "pole",
            QlsError::Singular(_) => "singular",
            QlsError::Unsupported(_) => "unsupported",
            QlsError::Identification(_) => "identification",
            QlsError::Realization(_) => "realization",
            QlsError::Infeasible(_) => "infeasible",
            QlsError::Accuracy(_) => "accuracy",
            QlsError::Inconsistent(_) => "inconsistent",
            QlsError::Convergence(_) => "convergence",
            QlsError::Parse(_) => "parse",
        }
    }
}
