use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A field failed validation. `index` is the subchannel (or element)
    /// position when the field belongs to a sequence.
    #[error("{}{field} = {value}: {reason}", index.map(|i| format!("subchannel {i}: ")).unwrap_or_default())]
    InvalidField {
        index: Option<usize>,
        field: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("{0} must not be empty")]
    Empty(&'static str),

    #[error("length mismatch for {what}: expected {expected}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{which} power sum {sum} exceeds budget {budget}")]
    BudgetExceeded {
        which: &'static str,
        sum: f64,
        budget: f64,
    },

    #[error("invalid solver option {field}: {reason}")]
    InvalidOption {
        field: &'static str,
        reason: &'static str,
    },

    #[error("grid oracle needs {points} lattice points, limit is {limit}")]
    OracleTooLarge { points: u128, limit: u128 },

    /// The point sits on, or within the difference stencil of, a
    /// non-differentiable locus (including the box boundary).
    #[error("kink proximity: {0}")]
    KinkProximity(String),

    #[error("malformed document: {0}")]
    Parse(String),

    #[error("nodes {0} and {1} coincide")]
    CoincidentNodes(&'static str, &'static str),
}

impl Error {
    pub(crate) fn field(
        index: Option<usize>,
        field: &'static str,
        value: f64,
        reason: &'static str,
    ) -> Self {
        Error::InvalidField {
            index,
            field,
            value,
            reason,
        }
    }
}
