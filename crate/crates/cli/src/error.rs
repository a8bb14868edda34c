use std::fmt;

use thiserror::Error;

/// Machine-readable failure classes, each with its own exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Usage,
    Parse,
    Model,
    Numerical,
    Io,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Usage => "usage",
            Category::Parse => "parse",
            Category::Model => "model",
            Category::Numerical => "numerical",
            Category::Io => "io",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Category::Usage => 2,
            Category::Parse => 3,
            Category::Model => 4,
            Category::Numerical => 5,
            Category::Io => 6,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
#[error("{message}")]
pub struct CliError {
    pub category: Category,
    pub message: String,
}

impl CliError {
    pub fn new(category: Category, message: impl Into<String>) -> Self {
        Self {
            category,
            message: message.into(),
        }
    }

    pub fn parse(message: impl Into<String>) -> Self {
        Self::new(Category::Parse, message)
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(Category::Usage, message)
    }
}

impl From<synprior::Error> for CliError {
    fn from(e: synprior::Error) -> Self {
        use synprior::Error as E;
        let category = match &e {
            E::Config(_) => Category::Usage,
            E::Cholesky | E::UndefinedEss(_) | E::UnstableEd50 { .. } => Category::Numerical,
            _ => Category::Model,
        };
        Self::new(category, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(Category::Io, e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::new(Category::Io, e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
