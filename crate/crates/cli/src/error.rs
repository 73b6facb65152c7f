use thiserror::Error;

use linesol::eos::EosError;
use linesol::exact::ExactError;
use linesol::fvsolver::FvError;
use linesol::profiles::ProfileError;
use linesol::residual::ResidualError;

/// Failures grouped by process exit status.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CliError {
    /// Exit 2.
    #[error("invalid scenario: {0}")]
    Invalid(String),
    /// Exit 3.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// Exit 4.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// Exit 4.
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Numerical(_) | CliError::CheckFailed(_) => 4,
        }
    }

    pub fn io(context: &str, e: std::io::Error) -> Self {
        CliError::Numerical(format!("{context}: {e}"))
    }
}

impl From<ExactError> for CliError {
    fn from(e: ExactError) -> Self {
        let msg = e.to_string();
        match e {
            ExactError::InvalidSpec(_)
            | ExactError::UnsupportedDimension(_)
            | ExactError::SingularDamping { .. }
            | ExactError::PotentialUndefined => CliError::Invalid(msg),
            ExactError::Profile(ProfileError::Extrapolation { .. }) => CliError::Precondition(msg),
            ExactError::Profile(_) => CliError::Invalid(msg),
            ExactError::Eos(EosError::NegativeDensity(_) | EosError::NonPositiveDensity(_)) => {
                CliError::Precondition(msg)
            }
            ExactError::Eos(_) => CliError::Invalid(msg),
            ExactError::SignViolation { .. }
            | ExactError::NegativeDensity { .. }
            | ExactError::Vacuum { .. }
            | ExactError::SingularCoefficient { .. }
            | ExactError::OutOfDomain { .. } => CliError::Precondition(msg),
            ExactError::OutOfTimeWindow { .. } | ExactError::Numerics(_) => CliError::Numerical(msg),
        }
    }
}

impl From<ResidualError> for CliError {
    fn from(e: ResidualError) -> Self {
        let msg = e.to_string();
        match e {
            ResidualError::Exact(inner) => inner.into(),
            ResidualError::AtPoint { source, .. } => match CliError::from(*source) {
                CliError::Invalid(_) => CliError::Invalid(msg),
                CliError::Precondition(_) => CliError::Precondition(msg),
                _ => CliError::Numerical(msg),
            },
            ResidualError::BadStep(_) | ResidualError::BadAxis { .. } | ResidualError::NotApplicable => {
                CliError::Invalid(msg)
            }
            _ => CliError::Numerical(msg),
        }
    }
}

impl From<FvError> for CliError {
    fn from(e: FvError) -> Self {
        match e {
            FvError::InvalidGrid { .. } | FvError::InvalidConfig(_) => CliError::Invalid(e.to_string()),
            FvError::Exact(inner) => inner.into(),
            other => CliError::Numerical(other.to_string()),
        }
    }
}
