use std::fmt;
use std::path::Path;

/// Process exit codes. Stable; documented in the README.
pub mod exit {
    pub const OK: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const PARSE: i32 = 3;
    pub const UNKNOWN_REACTION: i32 = 4;
    pub const CAP: i32 = 5;
    pub const IO: i32 = 6;
    pub const MISSING_ENTRY: i32 = 7;
    pub const NUMERIC: i32 = 8;
}

#[derive(Debug)]
pub enum CliError {
    /// A library error, optionally tied to the input file it came from.
    Core {
        file: Option<String>,
        error: detsim::Error,
    },
    Usage(String),
    Cap {
        what: &'static str,
        value: u64,
        cap: u64,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use detsim::Error as E;
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Cap { .. } => exit::CAP,
            CliError::Core { error, .. } => match error {
                E::Parse { .. } => exit::PARSE,
                E::UnknownReaction(_) => exit::UNKNOWN_REACTION,
                E::CapExceeded { .. } => exit::CAP,
                E::Io { .. } => exit::IO,
                E::MissingEntry(_) => exit::MISSING_ENTRY,
                E::Divergence { .. } | E::SingularResolvent => exit::NUMERIC,
                _ => exit::OTHER,
            },
        }
    }

    pub fn in_file(self, path: &Path) -> Self {
        match self {
            CliError::Core { file: None, error } => CliError::Core {
                file: Some(path.display().to_string()),
                error,
            },
            other => other,
        }
    }
}

impl From<detsim::Error> for CliError {
    fn from(error: detsim::Error) -> Self {
        CliError::Core { file: None, error }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core {
                file: Some(file),
                error: detsim::Error::Parse { line, message },
            } => write!(f, "{file}:{line}: {message}"),
            CliError::Core { file: Some(file), error } => write!(f, "{file}: {error}"),
            CliError::Core { file: None, error } => write!(f, "{error}"),
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Cap { what, value, cap } => write!(f, "{what} = {value} exceeds the cap of {cap}"),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn cap(what: &'static str, value: u64, cap: u64) -> CliResult<()> {
    if value > cap {
        Err(CliError::Cap { what, value, cap })
    } else {
        Ok(())
    }
}
