use std::fmt;

/// Process exit statuses.
///
/// | code | meaning |
/// |------|---------|
/// | 0 | success |
/// | 1 | I/O failure |
/// | 2 | usage error (bad flags or values) |
/// | 3 | parse error in an input file |
/// | 4 | validation error (non-unitary target, hash mismatch, invalid setting) |
/// | 5 | convergence failure (unity not found, leg failed) |
/// | 6 | universality check ran but did not pass |
/// | 7 | replay produced different output bytes |
pub mod exit {
    pub const OK: u8 = 0;
    pub const IO: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const PARSE: u8 = 3;
    pub const VALIDATION: u8 = 4;
    pub const CONVERGENCE: u8 = 5;
    pub const NOT_UNIVERSAL: u8 = 6;
    pub const REPLAY_MISMATCH: u8 = 7;
}

#[derive(Debug)]
pub enum CliError {
    Io(String),
    Usage(String),
    Parse(String),
    Validation(String),
    Convergence(String),
    NotUniversal(String),
    ReplayMismatch(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => exit::IO,
            CliError::Usage(_) => exit::USAGE,
            CliError::Parse(_) => exit::PARSE,
            CliError::Validation(_) => exit::VALIDATION,
            CliError::Convergence(_) => exit::CONVERGENCE,
            CliError::NotUniversal(_) => exit::NOT_UNIVERSAL,
            CliError::ReplayMismatch(_) => exit::REPLAY_MISMATCH,
        }
    }

    /// Wraps a library error raised while reading an input file.
    pub fn parse_in(path: &std::path::Path, e: impl fmt::Display) -> Self {
        let text = e.to_string();
        let text = text.strip_prefix("parse error: ").unwrap_or(&text);
        CliError::Parse(format!("{}: {text}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, message) = match self {
            CliError::Io(m) => ("i/o error", m),
            CliError::Usage(m) => ("usage error", m),
            CliError::Parse(m) => ("parse error", m),
            CliError::Validation(m) => ("validation error", m),
            CliError::Convergence(m) => ("convergence failure", m),
            CliError::NotUniversal(m) => ("not compiling universal", m),
            CliError::ReplayMismatch(m) => ("replay mismatch", m),
        };
        write!(f, "{kind}: {message}")
    }
}

impl From<unicirc::Error> for CliError {
    fn from(e: unicirc::Error) -> Self {
        use unicirc::Error as E;
        let message = e.to_string();
        match e {
            E::Parse(_) => CliError::Parse(message),
            E::NoConvergence | E::UnityNotFound { .. } | E::LegFailed { .. } | E::DegenerateFit(_) => {
                CliError::Convergence(message)
            }
            _ => CliError::Validation(message),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
