use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NonPrime(u64),
    #[error("degree set {0:?} is not closed under lcm")]
    DegreeSetNotDivisorClosed(Vec<u32>),
    #[error("size limit exceeded: {what} needs {needed}, limit {limit}")]
    SizeLimitExceeded { what: String, needed: u128, limit: u128 },
    #[error("F_{{{p}^{sub}}} is not a subfield of F_{{{p}^{sup}}} in this tower")]
    NotASubfield { p: u32, sub: u32, sup: u32 },
    #[error("cyclotomic operands of orders {0} and {1} must be lifted first")]
    MixedOrderWithoutLift(u32, u32),
    #[error("division by zero in Q(zeta_{0})")]
    DivisionByZero(u32),
    #[error("wrong parameters: {0}")]
    WrongParameters(String),
    #[error("parameter mismatch: {0}")]
    ParameterMismatch(String),
    #[error("element is not a unit")]
    NotAUnit,
    #[error("element is not in the subgroup {0}")]
    NotInSubgroup(String),
    #[error("point is not in X_h")]
    NotInXh,
    #[error("not a subgroup: {0}")]
    NotASubgroup(String),
    #[error("inner product {0} is not a nonnegative integer")]
    InnerProductNotInteger(String),
    #[error("representation is not invariant under the generator")]
    NotInvariant,
    #[error("no extension has trace {target}; candidates {candidates:?}")]
    NoExtensionWithRequestedTrace { target: String, candidates: Vec<String> },
    #[error("no character extension exists: {0}")]
    NoExtensionExists(String),
    #[error("unsupported level h={0}")]
    UnsupportedLevel(u32),
    #[error("characters differ at class {class}: {left} vs {right}")]
    CharacterMismatch { class: String, left: String, right: String },
    #[error("dimension {0} is not a nonnegative integer")]
    NonIntegerDimension(String),
    #[error("identity fails at s={s}: {lhs} vs {rhs}")]
    IdentityFails { s: u32, lhs: String, rhs: String },
    #[error("precision loss: {0}")]
    PrecisionLoss(String),
    #[error("all coefficients vanish")]
    AllZero,
    #[error("count at degree {0} was not checked for saturation")]
    UnsaturatedCount(u32),
}
