//! Error classes of the command-line layer and their process exit codes.
//!
//! 0 ok; 2 usage (bad flags, bad config values, arguments outside an
//! operation's domain); 3 numeric (quadrature failure, unreadable or
//! malformed data files, I/O); 4 dynamical instability (a time step moved a
//! tracer further than a quarter box — dt too large for the realized drift).
//! Every failure prints a single machine-parsable line
//! `superdiff: error[<class>]: <message>` as the last line on stderr.

use superdiff_core::CoreError;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(String),
    Io(String),
    Instability(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn usage(msg: String) -> Self {
        CliError::Usage(msg)
    }

    pub fn io(msg: String) -> Self {
        CliError::Io(msg)
    }

    /// Machine-parsable class tag.
    pub fn class(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Numeric(_) => "numeric",
            CliError::Io(_) => "io",
            CliError::Instability(_) => "instability",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 3,
            CliError::Instability(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m)
            | CliError::Numeric(m)
            | CliError::Io(m)
            | CliError::Instability(m) => m,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Config(_) | CoreError::Domain(_) => CliError::Usage(e.to_string()),
            CoreError::Numeric(_) => CliError::Numeric(e.to_string()),
            CoreError::Instability { .. } => CliError::Instability(e.to_string()),
        }
    }
}
