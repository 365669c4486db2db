use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("operation table is not total: {0}")]
    NonTotalTable(String),
    #[error("algebra is not idempotent: {0}")]
    NotIdempotent(String),
    #[error("subalgebra generation needs a nonempty seed")]
    EmptySeed,
    #[error("element {0} is outside the universe of size {1}")]
    ElementOutOfRange(usize, usize),
    #[error("partition is not a congruence of `{0}`")]
    NotACongruence(String),
    #[error("relation is not a subdirect product of its domains")]
    NotSubdirect,
    #[error("polynomial closure exceeded its budget ({0})")]
    ClosureBudgetExceeded(String),
    #[error("map is not an idempotent unary polynomial")]
    NotIdempotentPolynomial,
    #[error("algebra `{algebra}` is not SBM: {check}")]
    NotSbm { algebra: String, check: String },
    #[error("normalization failed: {0}")]
    NormalizationFailed(String),
    #[error("theta is not a congruence of `{0}`")]
    ThetaNotCongruence(String),
    #[error("invalid semilattice specification: {0}")]
    InvalidSemilatticeSpec(String),
    #[error("coordinate index {0} out of range for arity {1}")]
    BadIndex(usize, usize),
    #[error("link relation is not transitive")]
    NotTransitive,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("relation is not closed under the basic operations: {0}")]
    NotClosed(String),
    #[error("domain of variable `{0}` is not Mal'tsev")]
    NotMaltsevDomain(String),
    #[error("element {elem} is not in the domain of variable `{var}`")]
    ElementOutOfDomain { var: String, elem: usize },
    #[error("input rejected: {0}")]
    Rejected(String),
    #[error("variables `{0}` and `{1}` are not aligned")]
    NotAligned(String, String),
    #[error("internal invariant violated: {0}")]
    InternalInvariantViolated(String),
    #[error("search space too large: {0}")]
    TooLarge(String),
    #[error("no solution inside the max blocks for coherent set {0:?}")]
    NoMaxSolution(Vec<String>),
    #[error("ensemble descent failed: {0}")]
    DescentFailed(String),
    #[error("unknown algebra `{0}`")]
    UnknownAlgebra(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
