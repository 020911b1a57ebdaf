use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Anything wrong with the input: unreadable or invalid configuration,
    /// bad expressions, a method that does not fit the scenario.
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numeric(#[from] adprod::Error),
    /// A computed propagator failed the determinant check.
    #[error("InvariantViolated: {0}")]
    Invariant(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numeric(adprod::Error::Expr(_) | adprod::Error::InvalidGrid(_)) => 1,
            CliError::Numeric(_) | CliError::Invariant(_) => 2,
        }
    }

    /// Text for standard error; numerical failures lead with their name.
    pub fn report(&self) -> String {
        match self {
            CliError::Numeric(e) => {
                let text = e.to_string();
                if text.starts_with(e.name()) {
                    text
                } else {
                    format!("{}: {text}", e.name())
                }
            }
            CliError::Config(m) => format!("ConfigError: {m}"),
            CliError::Io(m) => format!("IoError: {m}"),
            CliError::Invariant(_) => self.to_string(),
        }
    }
}
