use alloc::string::String;
use core::fmt;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A state index or configuration index is out of range.
    Index { what: &'static str, value: usize, bound: usize },
    /// A table's dimensions do not match the declared spaces.
    Shape { expected: (usize, usize), got: (usize, usize) },
    /// A gate was applied to the wrong number of inputs, or an input slot
    /// is out of range.
    GateArity(String),
    /// A boolean operator was applied to a non-binary operand, or a
    /// MAX/MIN operand space does not match the gate's output space.
    GateType(String),
    /// A specification violates a structural invariant.
    Spec(String),
    /// An ambient graph declares an edge into a mechanism or inhibitor node.
    AmbientViolation(String),
    /// Overlapping node sets passed to a d-separation query.
    Argument(String),
    /// A normalized Hassall weight exceeds 1, so the Bernoulli mechanism
    /// construction is invalid.
    WeightRange(f64),
    /// The full configuration space exceeds the oracle's size guard.
    SizeGuard { configs_log2: u32, limit_log2: u32 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Index { what, value, bound } => {
                write!(f, "{what} {value} out of range (bound {bound})")
            }
            Error::Shape { expected, got } => write!(
                f,
                "shape mismatch: expected {}x{}, got {}x{}",
                expected.0, expected.1, got.0, got.1
            ),
            Error::GateArity(msg) => write!(f, "gate arity error: {msg}"),
            Error::GateType(msg) => write!(f, "gate type error: {msg}"),
            Error::Spec(msg) => write!(f, "invalid spec: {msg}"),
            Error::AmbientViolation(msg) => write!(f, "ambient violation: {msg}"),
            Error::Argument(msg) => write!(f, "invalid argument: {msg}"),
            Error::WeightRange(w) => {
                write!(f, "normalized weight {w} exceeds 1; Bernoulli construction invalid")
            }
            Error::SizeGuard { configs_log2, limit_log2 } => write!(
                f,
                "configuration space ~2^{configs_log2} exceeds the oracle size guard 2^{limit_log2}"
            ),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
