use std::fmt;
use std::path::PathBuf;

use serde::Serialize;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported bridge{}: mean span mass {mass} ton/m is outside the fragility table", .bridge.as_ref().map(|b| format!(" {b}")).unwrap_or_default())]
    UnsupportedBridge { bridge: Option<String>, mass: f64 },

    #[error("group `{0}` has zero total population")]
    UndefinedGroup(String),

    #[error("invalid fixture spec: {0}")]
    InvalidSpec(String),

    #[error("result sets do not match: {0}")]
    Mismatch(String),

    #[error("{0}")]
    Validation(ValidationReport),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// One problem found while validating a dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Issue {
    pub file: String,
    /// 1-based data row (header excluded) or feature index, when known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub row: Option<usize>,
    pub message: String,
}

/// Exhaustive list of validation problems. Empty means valid.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, file: &str, row: Option<usize>, message: impl Into<String>) {
        self.issues.push(Issue {
            file: file.to_string(),
            row,
            message: message.into(),
        });
    }

    pub fn extend(&mut self, other: ValidationReport) {
        self.issues.extend(other.issues);
    }

    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn len(&self) -> usize {
        self.issues.len()
    }

    /// `Ok(())` when no issues were recorded.
    pub fn into_result(self) -> Result<()> {
        if self.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} validation issue(s)", self.issues.len())?;
        for issue in &self.issues {
            match issue.row {
                Some(row) => write!(f, "\n  {} row {}: {}", issue.file, row, issue.message)?,
                None => write!(f, "\n  {}: {}", issue.file, issue.message)?,
            }
        }
        Ok(())
    }
}

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite, got {value}")))
    }
}
