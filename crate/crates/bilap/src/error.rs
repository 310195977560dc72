//! Error types shared across the toolkit.

use thiserror::Error;

/// Validation failures while constructing or loading a graph.
#[derive(Debug, Error)]
pub enum GraphError {
    #[error("unknown vertex id `{0}`")]
    UnknownVertex(String),
    #[error("duplicate vertex id `{0}`")]
    DuplicateVertex(String),
    #[error("self-loop on vertex `{0}`")]
    SelfLoop(String),
    #[error("asymmetric weight on edge ({u}, {v}): b(u,v) = {forward}, b(v,u) = {backward}")]
    AsymmetricWeight {
        u: String,
        v: String,
        forward: f64,
        backward: f64,
    },
    #[error(
        "asymmetric phase on edge ({u}, {v}): theta(u,v) = {forward}, theta(v,u) = {backward}"
    )]
    AsymmetricPhase {
        u: String,
        v: String,
        forward: f64,
        backward: f64,
    },
    #[error("phase out of range on edge ({u}, {v}): theta = {theta} has |theta| > pi")]
    PhaseOutOfRange { u: String, v: String, theta: f64 },
    #[error("non-positive edge weight b = {b} on edge ({u}, {v})")]
    NonPositiveWeight { u: String, v: String, b: f64 },
    #[error("duplicate edge ({u}, {v})")]
    DuplicateEdge { u: String, v: String },
    #[error("non-positive vertex measure mu({id}) = {mu}")]
    NonPositiveMeasure { id: String, mu: f64 },
    #[error("vertex measure below declared floor: mu({id}) = {mu} < mu_floor = {floor}")]
    MeasureBelowFloor { id: String, mu: f64, floor: f64 },
    #[error("non-positive mu_floor {0}")]
    NonPositiveMuFloor(f64),
    #[error("disconnected: vertex `{0}` is unreachable from the root")]
    Disconnected(String),
    #[error("empty vertex set")]
    Empty,
    #[error("non-finite number in field `{0}`")]
    NonFinite(&'static str),
}

/// Failures while generating a ball of a graph family.
#[derive(Debug, Error)]
pub enum FamilyError {
    #[error(
        "insufficient horizon: ball of radius {requested} needs {needed} vertices, budget is {budget}"
    )]
    InsufficientHorizon {
        requested: u32,
        needed: u64,
        budget: u64,
    },
    #[error("negative tree exponent kappa = {0}")]
    NegativeKappa(f64),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Failures while applying an operator to amplitudes.
#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("margin violation: vertex `{0}` does not carry its full neighbor set in this graph")]
    MarginViolation(String),
    #[error("unknown vertex id `{0}`")]
    UnknownVertex(String),
    #[error("potential undefined at vertex `{0}`")]
    PotentialUndefined(String),
    #[error("horizon shortfall: need radius {needed}, graph holds radius {available}")]
    HorizonShortfall { needed: u32, available: u32 },
}

/// Rejections of a growth certificate for q.
#[derive(Debug, Error)]
pub enum CertificateError {
    #[error("alpha = {0} outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("q({s}) = {value} is not positive")]
    NotPositive { s: u32, value: f64 },
    #[error("q not non-decreasing on the integer grid: q({s}) = {prev} > q({next_s}) = {next}")]
    NotMonotone {
        s: u32,
        next_s: u32,
        prev: f64,
        next: f64,
    },
    #[error("certificate violated: q({s}) = {q} > c_q * s^alpha = {bound}")]
    BoundViolated { s: u32, q: f64, bound: f64 },
    #[error("non-positive certificate constant c_q = {0}")]
    NonPositiveCq(f64),
}

/// Failures in the deficiency probes.
#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("shooting requires a half-line family: vertex `{0}` breaks the path structure")]
    NotHalfLine(String),
    #[error("spectral parameter nu must be nonzero")]
    ZeroNu,
    #[error("horizon {0} too small, need at least {1}")]
    HorizonTooSmall(u32, u32),
    #[error("dense SVD cap exceeded: {columns} columns > cap {cap}; use a smaller horizon")]
    SvdDimensionCap { columns: usize, cap: usize },
    #[error("horizons must be strictly increasing")]
    HorizonsNotIncreasing,
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}
