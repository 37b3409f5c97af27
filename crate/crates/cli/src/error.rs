use fluxonium_relax::io::{ErrorDocument, SCHEMA_ERROR};
use fluxonium_relax::{Error, ErrorKind};

/// Failure of one invocation, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Arguments that parse but do not make sense together. Exit code 1.
    Usage(String),
    /// Exit code 2 for bad data, 3 for numerical failures.
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Data => 2,
                ErrorKind::Numerical => 3,
            },
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Core(e) => match e.kind() {
                ErrorKind::Data => "data",
                ErrorKind::Numerical => "numerical",
            },
        }
    }

    /// One-line error document for standard error.
    pub fn to_json(&self) -> String {
        let message = match self {
            CliError::Usage(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        };
        let doc = ErrorDocument {
            schema: SCHEMA_ERROR.into(),
            kind: self.kind().into(),
            exit_code: self.exit_code().into(),
            message,
        };
        serde_json::to_string(&doc).expect("error document serializes")
    }
}
