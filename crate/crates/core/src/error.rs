use thiserror::Error;

/// Everything that can go wrong inside the laboratory.
///
/// The variants are grouped so that a driver can map them onto distinct exit
/// statuses: input problems, resource refusals and internal failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("integer overflow while {0}")]
    Overflow(&'static str),

    #[error("{what} needs {required} units of work but the budget is {limit}")]
    Budget {
        what: &'static str,
        required: u128,
        limit: u128,
    },

    #[error("prime {p} is a bad prime for this model (bad-prime bound {bound})")]
    BadPrime { p: u64, bound: u64 },

    #[error("table has no entry for prime {p} (covered up to {covered})")]
    MissingEntry { p: u64, covered: u64 },

    #[error("optimization did not converge inside the bracket; boundary t = {t}, value {value}")]
    NonConvergence { t: f64, value: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Coarse classification used by command-line front ends.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidInput(_) | Error::Parse { .. } | Error::Json(_) | Error::BadPrime { .. } => {
                ErrorKind::Config
            }
            Error::Budget { .. } => ErrorKind::Budget,
            _ => ErrorKind::Internal,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Budget,
    Internal,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Refuses work above `limit`.
pub(crate) fn check_budget(what: &'static str, required: u128, limit: u128) -> Result<()> {
    if required > limit {
        Err(Error::Budget {
            what,
            required,
            limit,
        })
    } else {
        Ok(())
    }
}
