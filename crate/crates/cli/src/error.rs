use std::fmt;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or missing inputs the user must supply; exit 2.
    Usage(String),
    /// Failure while running; exit 1.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Runtime(_) => ExitCode::from(1),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<factorlens::Error> for CliError {
    fn from(e: factorlens::Error) -> Self {
        match e {
            factorlens::Error::InvalidArgument(_) => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<factorlens_refnet::RefnetError> for CliError {
    fn from(e: factorlens_refnet::RefnetError) -> Self {
        use factorlens_refnet::RefnetError as R;
        match e {
            R::InvalidRegime(_) | R::EmptyTrainingSet { .. } => CliError::Usage(e.to_string()),
            R::Core(inner) => inner.into(),
            other => CliError::Runtime(other.to_string()),
        }
    }
}
