use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{what}: {source}")]
    Io {
        what: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Model(#[from] pcr_core::Error),

    /// Solved, but a motor angle is outside its limits.
    #[error("{0}")]
    LimitViolation(String),

    #[error("{0}")]
    NoSamples(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(what: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            what: what.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        use pcr_core::Error as E;
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Model(
                E::NoConvergence(_)
                | E::IntegrationFailure { .. }
                | E::LegIntegration { .. }
                | E::JacobianColumn { .. }
                | E::SingularNormalEquations,
            ) => 2,
            CliError::Model(_) => 1,
            CliError::NoSamples(_) => 3,
            CliError::LimitViolation(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        use pcr_core::Error as E;
        match self {
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Model(E::NoConvergence(_)) => "no_convergence",
            CliError::Model(E::InvalidParameter { .. }) => "invalid_parameter",
            CliError::Model(_) if self.exit_code() == 2 => "solver_failure",
            CliError::Model(_) => "invalid_input",
            CliError::NoSamples(_) => "no_samples_converged",
            CliError::LimitViolation(_) => "limit_violation",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        })
    }
}
