use std::fmt;

/// Stable machine-readable failure categories; every diagnostic carries one
/// plus the field path it refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCode {
    /// Malformed document text (JSON or CSV).
    Syntax,
    /// Structurally valid text violating the schema (bad version, missing
    /// fields with defaults, inconsistent declarations).
    Schema,
    /// Unrecognized model type tag.
    UnknownVariant,
    /// A referenced variable name is not declared.
    UnknownName,
    /// The block map fails to cover every parent exactly once.
    NonSurjective,
    /// A table's dimensions disagree with the declared spaces.
    Shape,
    /// A numeric value outside its allowed range.
    Range,
    /// Unparsable or ill-typed gate expression.
    Gate,
    /// The assembled spec failed semantic validation.
    Validation,
    /// Filesystem or stream failure.
    Io,
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ErrorCode::Syntax => "syntax",
            ErrorCode::Schema => "schema",
            ErrorCode::UnknownVariant => "unknown-variant",
            ErrorCode::UnknownName => "unknown-name",
            ErrorCode::NonSurjective => "non-surjective",
            ErrorCode::Shape => "shape",
            ErrorCode::Range => "range",
            ErrorCode::Gate => "gate",
            ErrorCode::Validation => "validation",
            ErrorCode::Io => "io",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: ErrorCode,
    /// Dotted field path into the document, e.g. `model.mechanisms[1].rows[2]`.
    pub path: String,
    pub message: String,
}

impl CliError {
    pub fn new(code: ErrorCode, path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError { code, path: path.into(), message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}] at {}: {}", self.code, self.path, self.message)
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new(ErrorCode::Io, "-", e.to_string())
    }
}
