use thiserror::Error;

/// Failure modes shared across the crate. Variants are deliberately flat so
/// callers can match on the exact condition that stopped an algorithm.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("index set is not a cut")]
    NotACut,
    #[error("required off-diagonal entry is zero")]
    ZeroOffDiagonal,
    #[error("blocks do not partition the index set")]
    PartitionMismatch,
    #[error("seed assignment does not satisfy the clause set")]
    SeedNotSatisfying,
    #[error("field has too few elements for this operation")]
    FieldTooSmall,
    #[error("shift made the matrix singular")]
    SingularShift,
    #[error("quadratic has no root in the field")]
    NoRoot,
    #[error("no removable index found")]
    NoRemovableIndex,
    #[error("no candidate passed the order-4 check")]
    NoCandidateAccepted,
    #[error("coupling entry across the cut is zero")]
    ZeroCouplingEntry,
    #[error("instance exceeds the brute-force size bound")]
    TooLarge,
    #[error("pairwise irreducibility is not transitive for this shift")]
    TransitivityViolation,
    #[error("retry budget exhausted")]
    RetriesExhausted,
    #[error("every sampled shift was singular")]
    SingularAlways,
    #[error("assembled block matrix is singular")]
    SingularAssembly,
    #[error("monomial isolation failed")]
    IsolationFailed,
    #[error("coefficient matrices do not have principal minor shape")]
    NotPmapShaped,
    #[error("all quadratic coefficients are zero")]
    DegenerateEquation,
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("{source} (at subset {subset:?})")]
    AtSubset {
        subset: Vec<usize>,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn at_subset(self, subset: Vec<usize>) -> Error {
        Error::AtSubset { subset, source: Box::new(self) }
    }

    /// Strips subset context, returning the underlying condition.
    pub fn root_cause(&self) -> &Error {
        match self {
            Error::AtSubset { source, .. } => source.root_cause(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
