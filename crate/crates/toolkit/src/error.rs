use std::fmt;
use std::path::{Path, PathBuf};

/// One failed check, addressed by a JSON-style field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl FieldError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug)]
pub enum ToolkitError {
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    Validation {
        path: PathBuf,
        errors: Vec<FieldError>,
    },
    Computation {
        context: String,
        source: pairsource_core::Error,
    },
    Output {
        path: PathBuf,
        message: String,
    },
    AcceptanceFailed {
        failed: Vec<String>,
    },
}

impl ToolkitError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn parse(path: &Path, e: &serde_json::Error) -> Self {
        Self::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }

    pub fn computation(
        context: impl Into<String>,
        source: impl Into<pairsource_core::Error>,
    ) -> Self {
        Self::Computation {
            context: context.into(),
            source: source.into(),
        }
    }

    pub fn output(path: &Path, message: impl fmt::Display) -> Self {
        Self::Output {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }

    /// Process exit status: 1 for input problems, 2 for failed
    /// computations or outputs, 3 for failed acceptance criteria.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Io { .. } | Self::Parse { .. } | Self::Validation { .. } => 1,
            Self::Computation { .. } | Self::Output { .. } => 2,
            Self::AcceptanceFailed { .. } => 3,
        }
    }
}

impl fmt::Display for ToolkitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Io { path, source } => write!(f, "{}: {source}", path.display()),
            Self::Parse {
                path,
                line,
                column,
                message,
            } => write!(f, "{}:{line}:{column}: {message}", path.display()),
            Self::Validation { path, errors } => {
                write!(
                    f,
                    "{}: {} validation error(s)",
                    path.display(),
                    errors.len()
                )?;
                for e in errors {
                    write!(f, "\n  {e}")?;
                }
                Ok(())
            }
            Self::Computation { context, source } => write!(f, "{context}: {source}"),
            Self::Output { path, message } => write!(f, "writing {}: {message}", path.display()),
            Self::AcceptanceFailed { failed } => {
                write!(f, "acceptance criteria failed: {}", failed.join(", "))
            }
        }
    }
}

impl std::error::Error for ToolkitError {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_kind() {
        let p = Path::new("x.json");
        let io = ToolkitError::io(p, std::io::Error::from(std::io::ErrorKind::NotFound));
        let invalid = ToolkitError::Validation {
            path: p.into(),
            errors: vec![FieldError::new(
                "crystal.length_mm",
                "must be positive, got 0",
            )],
        };
        let output = ToolkitError::output(p, "disk full");
        let failed = ToolkitError::AcceptanceFailed {
            failed: vec!["3a".into()],
        };
        assert_eq!(io.exit_code(), 1);
        assert_eq!(invalid.exit_code(), 1);
        assert_eq!(output.exit_code(), 2);
        assert_eq!(failed.exit_code(), 3);
    }

    #[test]
    fn validation_lists_every_field() {
        let e = ToolkitError::Validation {
            path: "c.json".into(),
            errors: vec![
                FieldError::new("a.b", "bad"),
                FieldError::new("layout[2].name", "worse"),
            ],
        };
        assert_eq!(
            e.to_string(),
            "c.json: 2 validation error(s)\n  a.b: bad\n  layout[2].name: worse"
        );
    }
}
