use thiserror::Error;

/// Errors raised by the scheme, its algebra, and the simulator.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} out of range (supported: 2 <= q < 2^62)")]
    ModulusOutOfRange(u64),
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u64, u64),
    #[error("no inverse of zero")]
    ZeroInverse,
    #[error("field too small: need {needed} distinct elements, field has {available}")]
    FieldTooSmall { needed: u128, available: u64 },
    #[error("value {value} not reduced modulo {modulus}")]
    Unreduced { value: u64, modulus: u64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("duplicate interpolation node {0}")]
    DuplicateNode(u64),
    #[error("empty subset")]
    EmptySubset,
    #[error("index {index} out of range for {len} elements")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("decoder inconsistency: a fully reduced symbol left a nonzero residual")]
    DecoderInconsistency,
    #[error("decoder incomplete: {recovered} of {total} blocks recovered")]
    DecoderIncomplete { recovered: usize, total: usize },
    #[error("cluster {cluster} violates size constraint: {detail}")]
    ClusterConstraint { cluster: usize, detail: String },
    #[error("degree {degree} for cluster {cluster} exceeds the maximum {max}")]
    DegreeBound {
        cluster: usize,
        degree: usize,
        max: usize,
    },
    #[error("cluster starved: {available} responses, {needed} required")]
    ClusterStarved { available: usize, needed: usize },
    #[error("cluster starved after exclusion: {available} responses, {needed} required")]
    ClusterStarvedAfterExclusion { available: usize, needed: usize },
    #[error("singular linear system")]
    SingularSystem,
    #[error("repetition count {eta} out of range 1..={max}")]
    EtaOutOfRange { eta: usize, max: usize },
    #[error("bound vacuous: q = {q} must exceed deg + 1 = {}", deg + 1)]
    BoundVacuous { q: u64, deg: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
