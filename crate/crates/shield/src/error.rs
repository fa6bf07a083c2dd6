use std::fmt;

use crate::config::ConfigError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("simulation: {0}")]
    Core(#[from] shield_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Runtime(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn runtime(msg: impl Into<String>) -> Self {
        Error::Runtime(msg.into())
    }

    /// Process exit status: 2 for configuration problems, 3 for the rest.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            _ => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Core(_) => "simulation",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Runtime(_) => "runtime",
        }
    }

    /// One `key=value` line for stderr.
    pub fn machine_line(&self) -> MachineLine<'_> {
        MachineLine(self)
    }
}

pub struct MachineLine<'a>(&'a Error);

impl fmt::Display for MachineLine<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = self.0;
        write!(f, "shield-error kind={} exit={}", e.kind(), e.exit_code())?;
        match e {
            Error::Config(c) => write!(f, " key={:?} message={:?}", c.key, c.message),
            other => write!(f, " message={:?}", other.to_string()),
        }
    }
}
